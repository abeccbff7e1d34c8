"""Prompt rendering for the score-prediction and error-annotation modes.

Instruction texts live as versioned assets under templates/ so prompts
are auditable and bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from mqmeval.errors import LanguageMismatch, MissingReference
from mqmeval.mqm_core import ErrorAnnotation, Segment, Severity

MODE_SCORE = "score_sqm"
MODE_AUTOMQM = "automqm"

SCORE_LABEL = "Score (0-100):"
ERRORS_LABEL = "Errors:"
NO_ERRORS_MARKER = "No errors"

# Language names for the language codes exercised in the experiments;
# unknown codes render verbatim.
LANGUAGE_NAMES = {
    "en": "English",
    "de": "German",
    "zh": "Chinese",
    "ru": "Russian",
    "kk": "Kazakh",
    "gu": "Gujarati",
}


def language_name(code: str) -> str:
    return LANGUAGE_NAMES.get(code.lower(), code)


def _load_template(name: str) -> str:
    return resources.files("mqmeval.templates").joinpath(name).read_text(encoding="utf-8").rstrip("\n")


@dataclass(frozen=True)
class ICLExample:
    """A scored (and, for the error mode, annotated) segment used in-context.

    spans/severities/categories are parallel lists of equal length.
    """

    segment: Segment
    score: float | None = None
    spans: tuple[str, ...] = ()
    severities: tuple[str, ...] = ()
    categories: tuple[str, ...] = ()
    annotations: tuple[ErrorAnnotation, ...] = ()

    def __post_init__(self):
        if not (len(self.spans) == len(self.severities) == len(self.categories)):
            raise ValueError("span/severity/category lists must be parallel")


@dataclass(frozen=True)
class PromptTemplate:
    mode: str
    with_reference: bool = True

    def __post_init__(self):
        if self.mode not in (MODE_SCORE, MODE_AUTOMQM):
            raise ValueError(f"unknown mode {self.mode!r}")

    def instruction(self) -> str:
        suffix = "ref" if self.with_reference else "noref"
        return _load_template(f"{self.mode}_{suffix}.txt")

    @property
    def output_label(self) -> str:
        return SCORE_LABEL if self.mode == MODE_SCORE else ERRORS_LABEL


def render_error_list(annotations) -> str:
    """Canonical "span - severity/category" items joined by "; "."""
    items = []
    for ann in annotations:
        if ann.severity is Severity.NEUTRAL:
            raise ValueError("Neutral annotations are not rendered")
        # Annotations converted from word tags carry no category; Other is
        # the hierarchy's catch-all.
        cat = ann.category.canonical() if ann.category is not None else "other"
        items.append(f"{ann.span_text} - {ann.severity.value}/{cat}")
    if not items:
        return NO_ERRORS_MARKER
    return "; ".join(items)


def _format_score(score: float) -> str:
    return str(int(score)) if float(score).is_integer() else str(score)


def _render_block(template: PromptTemplate, segment: Segment, output: str | None) -> str:
    src_lang = language_name(segment.lp.split("-")[0])
    tgt_lang = language_name(segment.lp.split("-")[-1])
    lines = [f'{src_lang} source: "{segment.source}"']
    if template.with_reference:
        lines.append(f'{tgt_lang} human reference: "{segment.reference}"')
    lines.append(f'{tgt_lang} translation: "{segment.candidate}"')
    if output is None:
        lines.append(f"{template.output_label} ")
    else:
        lines.append(f"{template.output_label} {output}")
    return "\n".join(lines)


def _example_output(template: PromptTemplate, example: ICLExample) -> str:
    if template.mode == MODE_SCORE:
        if example.score is None:
            raise ValueError("score-mode examples require a gold score")
        return _format_score(example.score)
    if example.annotations:
        return render_error_list(example.annotations)
    items = [
        f"{span} - {sev.lower()}/{cat.lower()}"
        for span, sev, cat in zip(example.spans, example.severities, example.categories)
    ]
    return "; ".join(items) if items else NO_ERRORS_MARKER


def render_prompt(template: PromptTemplate, examples: list[ICLExample], target: Segment) -> str:
    """Instruction once at top, then each example with its output filled,
    then the target with output slot left open."""
    if template.with_reference and target.reference is None:
        raise MissingReference(f"segment {target.key} has no reference")
    for ex in examples:
        if ex.segment.lp != target.lp:
            raise LanguageMismatch(f"example lp {ex.segment.lp!r} != target lp {target.lp!r}")
        if template.with_reference and ex.segment.reference is None:
            raise MissingReference(f"example segment {ex.segment.key} has no reference")

    instruction = template.instruction().format(
        src_lang=language_name(target.lp.split("-")[0]),
        tgt_lang=language_name(target.lp.split("-")[-1]),
    )
    parts = [instruction]
    for ex in examples:
        parts.append(_render_block(template, ex.segment, _example_output(template, ex)))
    parts.append(_render_block(template, target, None))
    return "\n\n".join(parts)
