"""Exception hierarchy shared across the package."""


class MqmEvalError(Exception):
    """Base class for all package errors."""


class MissingRatings(MqmEvalError):
    pass


class MissingSegments(MqmEvalError):
    pass


class SchemaError(MqmEvalError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateRecord(MqmEvalError):
    pass


class OffsetError(MqmEvalError):
    pass


class LengthMismatch(MqmEvalError):
    pass


class MissingReference(MqmEvalError):
    pass


class LanguageMismatch(MqmEvalError):
    pass


class PoolTooSmall(MqmEvalError):
    pass


class RejectionExhausted(MqmEvalError):
    pass


class TooFewSystems(MqmEvalError):
    pass


class DegenerateVariance(MqmEvalError):
    pass


class TooFewPairs(MqmEvalError):
    pass


class TooFewDistinct(MqmEvalError):
    pass


class ConfigError(MqmEvalError):
    pass


class BackendError(MqmEvalError):
    """Base class for completion-backend failures."""


class TransportError(BackendError):
    pass


class RateLimited(BackendError):
    pass


class AuthError(BackendError):
    pass


class MalformedResponse(BackendError):
    pass
