"""MQM domain model: severities, the error-category hierarchy, and scoring.

Scores are a weighted sum of penalties over annotated error spans. A
segment with no errors scores 0 (perfect); the worst score under the
default weights is 25 (a single Non-translation error).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from mqmeval.errors import MissingRatings, MissingSegments

__all__ = [
    "Severity",
    "ErrorCategory",
    "ErrorAnnotation",
    "Segment",
    "SegmentAssessment",
    "WeightScheme",
    "MQM_HIERARCHY",
    "lookup_category",
    "score_annotations",
    "aggregate_raters",
    "system_score",
]


class Severity(Enum):
    MAJOR = "major"
    MINOR = "minor"
    NEUTRAL = "neutral"


# Top-level category -> allowed subcategories. Categories with no
# subcategories map to an empty tuple.
MQM_HIERARCHY: dict[str, tuple[str, ...]] = {
    "Accuracy": ("Addition", "Omission", "Mistranslation", "Untranslated text"),
    "Fluency": (
        "Punctuation",
        "Spelling",
        "Grammar",
        "Register",
        "Inconsistency",
        "Character encoding",
    ),
    "Terminology": ("Inappropriate for context", "Inconsistent use"),
    "Style": ("Awkward",),
    "Locale convention": (
        "Address format",
        "Currency format",
        "Date format",
        "Name format",
        "Telephone format",
        "Time format",
    ),
    "Other": (),
    "Source error": (),
    "Non-translation": (),
}


def _norm(s: str) -> str:
    return re.sub(r"[^a-z0-9]+", "", s.lower())


def _build_category_index() -> dict[str, tuple[str, str | None]]:
    index: dict[str, tuple[str, str | None]] = {}
    for top, subs in MQM_HIERARCHY.items():
        index[_norm(top)] = (top, None)
        for sub in subs:
            index[_norm(top) + _norm(sub)] = (top, sub)
            # "Date" is accepted for "Date format" etc.
            if sub.endswith(" format"):
                index[_norm(top) + _norm(sub[: -len(" format")])] = (top, sub)
    return index


_CATEGORY_INDEX = _build_category_index()


@dataclass(frozen=True)
class ErrorCategory:
    """A (top, sub) pair from the MQM hierarchy, or an unrecognized raw string.

    Unrecognized categories keep the original text for audit and score as
    the severity's default weight.
    """

    top: str | None
    sub: str | None = None
    unrecognized: bool = False
    raw: str | None = None

    def __post_init__(self):
        if not self.unrecognized:
            subs = MQM_HIERARCHY.get(self.top or "")
            if subs is None or (self.sub is not None and self.sub not in subs):
                raise ValueError(f"not in the MQM hierarchy: {self.top!r}/{self.sub!r}")

    def canonical(self) -> str:
        """Lowercase rendering, subcategory joined with '-'."""
        if self.unrecognized:
            return (self.raw or "").lower()
        if self.sub:
            return f"{self.top.lower()}-{self.sub.lower()}"
        return self.top.lower()


def lookup_category(raw: str) -> ErrorCategory:
    """Map a free-form category string onto the hierarchy.

    Case, surrounding whitespace, and the separator between top and sub
    ('/', '-', space) are all ignored. Unknown strings come back flagged
    unrecognized with the raw text preserved.
    """
    hit = _CATEGORY_INDEX.get(_norm(raw))
    if hit is None:
        return ErrorCategory(top=None, sub=None, unrecognized=True, raw=raw)
    return ErrorCategory(top=hit[0], sub=hit[1])


@dataclass(frozen=True)
class ErrorAnnotation:
    """One error span with severity and category.

    Offsets are end-exclusive character positions into the candidate (or
    the source, when in_source is set, for Source error / Omission).
    They are absent when the span could not be located.
    """

    span_text: str
    severity: Severity
    category: ErrorCategory | None = None
    char_start: int | None = None
    char_end: int | None = None
    in_source: bool = False

    def __post_init__(self):
        if (self.char_start is None) != (self.char_end is None):
            raise ValueError("char_start and char_end must both be set or both absent")
        if self.char_start is not None and not 0 <= self.char_start < self.char_end:
            raise ValueError(f"bad offsets [{self.char_start}, {self.char_end})")
        if self.severity is Severity.NEUTRAL and self.category is not None:
            raise ValueError("Neutral severity carries no category")

    def has_offsets(self) -> bool:
        return self.char_start is not None

    def validate_against(self, text: str) -> None:
        """Check offsets point at span_text within text."""
        if not self.has_offsets():
            return
        if self.char_end > len(text):
            raise ValueError(f"offsets [{self.char_start}, {self.char_end}) exceed text length {len(text)}")
        if text[self.char_start : self.char_end] != self.span_text:
            raise ValueError("text slice does not match span_text")


@dataclass(frozen=True)
class Segment:
    """One evaluation item: source, candidate, optional reference, identifiers."""

    source: str
    candidate: str
    lp: str
    system_id: str
    doc_id: str = ""
    seg_id: str = ""
    reference: str | None = None

    def __post_init__(self):
        if not self.source or not self.candidate:
            raise ValueError("source and candidate must be non-empty")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.lp, self.system_id, self.seg_id)


@dataclass(frozen=True)
class SegmentAssessment:
    """All annotations (or a raw score) for one segment from one rater/model."""

    segment_key: tuple[str, str, str]
    rater_id: str
    annotations: tuple[ErrorAnnotation, ...] = ()
    raw_score: float | None = None
    derived_score: float | None = None

    def score(self) -> float | None:
        return self.derived_score if self.derived_score is not None else self.raw_score


@dataclass(frozen=True)
class WeightScheme:
    """Penalty weights per (severity, category class), plus sign convention.

    With penalty_positive, 0 is a perfect segment and larger is worse;
    penalty_negative negates every score so higher is better.
    """

    major_non_translation: float = 25.0
    major_default: float = 5.0
    minor_fluency_punctuation: float = 0.1
    minor_default: float = 1.0
    neutral: float = 0.0
    sign_convention: str = "penalty_positive"

    def __post_init__(self):
        if self.sign_convention not in ("penalty_positive", "penalty_negative"):
            raise ValueError(f"unknown sign convention: {self.sign_convention}")
        for w in (
            self.major_non_translation,
            self.major_default,
            self.minor_fluency_punctuation,
            self.minor_default,
            self.neutral,
        ):
            if w < 0:
                raise ValueError("weights must be >= 0 before sign application")

    def weight(self, annotation: ErrorAnnotation) -> float:
        """Unsigned penalty weight for one annotation."""
        sev, cat = annotation.severity, annotation.category
        if sev is Severity.NEUTRAL:
            return self.neutral
        recognized = cat is not None and not cat.unrecognized
        if sev is Severity.MAJOR:
            if recognized and cat.top == "Non-translation":
                return self.major_non_translation
            return self.major_default
        if recognized and cat.top == "Fluency" and cat.sub == "Punctuation":
            return self.minor_fluency_punctuation
        return self.minor_default

    @property
    def sign(self) -> float:
        return 1.0 if self.sign_convention == "penalty_positive" else -1.0


DEFAULT_SCHEME = WeightScheme()


def score_annotations(
    annotations: list[ErrorAnnotation] | tuple[ErrorAnnotation, ...],
    scheme: WeightScheme = DEFAULT_SCHEME,
) -> float:
    """Weighted penalty sum over the annotations, signed per the scheme."""
    return scheme.sign * sum(scheme.weight(a) for a in annotations)


def aggregate_raters(assessments: list[SegmentAssessment]) -> float:
    """Mean per-rater score for one segment."""
    if not assessments:
        raise MissingRatings("no assessments to aggregate")
    scores = []
    for a in assessments:
        s = a.score()
        if s is None:
            raise MissingRatings(f"assessment by {a.rater_id!r} has no score")
        scores.append(s)
    return sum(scores) / len(scores)


def system_score(segment_scores: list[float]) -> float:
    """Mean over per-segment scores."""
    if not segment_scores:
        raise MissingSegments("no segment scores")
    return sum(segment_scores) / len(segment_scores)
