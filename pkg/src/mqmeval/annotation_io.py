"""Ingestion and parsing: gold files (MQM TSV, DA, word tags) and LLM completions.

All completion parsers are total: malformed input yields a structured
invalid/diagnostic outcome, never an exception.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field

from mqmeval.errors import DuplicateRecord, OffsetError, SchemaError
from mqmeval.mqm_core import (
    DEFAULT_SCHEME,
    ErrorAnnotation,
    ErrorCategory,
    Segment,
    SegmentAssessment,
    Severity,
    WeightScheme,
    lookup_category,
    score_annotations,
)

log = logging.getLogger(__name__)

OK = "OK"
BAD = "BAD"

#: Completions that mean "this translation has no errors" (compared after
#: trimming, lowercasing, and dropping a trailing period).
NO_ERROR_MARKERS = frozenset({"no errors", "none", ""})

CLASS_LABELS = ("very bad", "bad", "ok", "good", "very good")

_NUMBER_RE = re.compile(r"[-+]?(?:\d+(?:\.\d+)?|\.\d+)")

#: Category classes whose spans live in the source text.
_SOURCE_SIDE = {("Accuracy", "Omission"), ("Source error", None)}


@dataclass(frozen=True)
class WordTagSequence:
    """Parallel word tokens and OK/BAD tags.

    tokens may be None for sequences loaded from tag-only files; when
    present, lengths must agree.
    """

    tags: tuple[str, ...]
    tokens: tuple[str, ...] | None = None

    def __post_init__(self):
        if any(t not in (OK, BAD) for t in self.tags):
            raise ValueError("tags must be OK or BAD")
        if self.tokens is not None and len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags lengths differ")


@dataclass(frozen=True)
class ParsedCompletion:
    """Outcome of parsing one LLM completion.

    kind is one of numeric_score, class_label, error_list, no_errors,
    invalid; exactly one payload field is populated for the first three.
    dropped_items counts error-list items that failed the grammar.
    """

    kind: str
    raw: str
    score: float | None = None
    label: int | None = None
    annotations: tuple[ErrorAnnotation, ...] = ()
    dropped_items: int = 0


def word_offsets(text: str) -> list[tuple[int, int]]:
    """Character ranges of whitespace-separated words, end-exclusive."""
    return [(m.start(), m.end()) for m in re.finditer(r"\S+", text)]


# ---------------------------------------------------------------------------
# Completion parsers


def parse_score_completion(text: str) -> ParsedCompletion:
    """Extract the first number in [0, 100]; anything else is invalid."""
    m = _NUMBER_RE.search(text)
    if m is None:
        return ParsedCompletion(kind="invalid", raw=text)
    value = float(m.group())
    if not 0 <= value <= 100:
        return ParsedCompletion(kind="invalid", raw=text)
    return ParsedCompletion(kind="numeric_score", raw=text, score=value)


def parse_class_completion(text: str) -> ParsedCompletion:
    """Map a completion to a 1-5 class label by substring search.

    The longest matching label wins (so "very bad" beats "bad"); among
    equally long matches the earliest occurrence wins. No match maps to 0.
    """
    lowered = text.lower()
    best: tuple[int, int, int] | None = None  # (-len, position, label)
    for i, label in enumerate(CLASS_LABELS, start=1):
        pos = lowered.find(label)
        if pos >= 0:
            cand = (-len(label), pos, i)
            if best is None or cand < best:
                best = cand
    return ParsedCompletion(kind="class_label", raw=text, label=best[2] if best else 0)


def _locate(span: str, text: str) -> tuple[int, int] | None:
    idx = text.find(span)
    if idx < 0:
        idx = text.lower().find(span.lower())
    if idx < 0:
        return None
    return idx, idx + len(span)


def _localize(span: str, category: ErrorCategory | None, segment: Segment) -> tuple[int | None, int | None, bool]:
    """First occurrence in the candidate, falling back to the source for
    source-side categories; (None, None, False) when unlocatable."""
    hit = _locate(span, segment.candidate)
    if hit is not None:
        return hit[0], hit[1], False
    if category is not None and not category.unrecognized:
        if (category.top, category.sub) in _SOURCE_SIDE:
            hit = _locate(span, segment.source)
            if hit is not None:
                return hit[0], hit[1], True
    return None, None, False


def parse_automqm_completion(text: str, segment: Segment) -> ParsedCompletion:
    """Parse an error-list completion of the form
    "<span> - <severity>/<category>; <span> - ..." against a segment.

    Items that fail the grammar are dropped and tallied in dropped_items.
    """
    stripped = text.strip()
    if stripped.lower().rstrip(".") in NO_ERROR_MARKERS:
        return ParsedCompletion(kind="no_errors", raw=text)

    annotations: list[ErrorAnnotation] = []
    dropped = 0
    for item in stripped.split(";"):
        item = item.strip()
        if not item:
            continue
        span_part, sep, tail = item.rpartition(" - ")
        if not sep:
            dropped += 1
            continue
        span = span_part.strip().strip('"')
        sev_token, slash, cat_raw = tail.strip().partition("/")
        if not span or not slash or not cat_raw.strip():
            dropped += 1
            continue
        sev_token = sev_token.strip().lower()
        if sev_token == "major":
            severity = Severity.MAJOR
        elif sev_token == "minor":
            severity = Severity.MINOR
        else:
            dropped += 1
            continue
        category = lookup_category(cat_raw.strip())
        start, end, in_source = _localize(span, category, segment)
        annotations.append(
            ErrorAnnotation(
                span_text=span,
                severity=severity,
                category=category,
                char_start=start,
                char_end=end,
                in_source=in_source,
            )
        )
    if not annotations and dropped:
        return ParsedCompletion(kind="invalid", raw=text, dropped_items=dropped)
    return ParsedCompletion(
        kind="error_list", raw=text, annotations=tuple(annotations), dropped_items=dropped
    )


# ---------------------------------------------------------------------------
# Gold-data loaders

MQM_TSV_HEADER = ("system", "doc", "seg_id", "rater", "source", "target", "category", "severity")
_SPAN_RE = re.compile(r"<v>(.*?)</v>", re.DOTALL)

_SEVERITY_TOKENS = {
    "major": Severity.MAJOR,
    "minor": Severity.MINOR,
    "neutral": Severity.NEUTRAL,
    "no-error": Severity.NEUTRAL,
}


def _read_tsv(path, expected_header: tuple[str, ...]):
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise SchemaError("empty file", line=1)
    header = tuple(lines[0].split("\t"))
    if header != expected_header:
        raise SchemaError(f"expected header {expected_header}, got {header}", line=1)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(expected_header):
            raise SchemaError(f"expected {len(expected_header)} fields, got {len(fields)}", line=lineno)
        yield lineno, fields


def load_mqm_tsv(path, lp: str = "unknown", scheme: WeightScheme = DEFAULT_SCHEME) -> list[SegmentAssessment]:
    """Load gold MQM ratings; one row per error, spans marked <v>...</v>.

    Rows are grouped into one assessment per (segment, rater) with the MQM
    score derived under the given scheme. Guideline violations on gold
    data (more than five errors, Non-translation alongside other errors)
    are surfaced: the former as a warning, the latter as a SchemaError.
    """
    groups: dict[tuple, list[tuple[int, ErrorAnnotation]]] = {}
    for lineno, fields in _read_tsv(path, MQM_TSV_HEADER):
        system, doc, seg_id, rater, source, target, cat_raw, sev_raw = fields
        severity = _SEVERITY_TOKENS.get(sev_raw.strip().lower())
        if severity is None:
            raise SchemaError(f"unknown severity {sev_raw!r}", line=lineno)
        m = _SPAN_RE.search(target)
        if severity is Severity.NEUTRAL:
            annotation = None
        else:
            category = lookup_category(cat_raw)
            if m is None:
                annotation = ErrorAnnotation(span_text="", severity=severity, category=category)
            else:
                clean_start = m.start()
                annotation = ErrorAnnotation(
                    span_text=m.group(1),
                    severity=severity,
                    category=category,
                    char_start=clean_start,
                    char_end=clean_start + len(m.group(1)),
                )
        key = (system, doc, seg_id, rater)
        groups.setdefault(key, [])
        if annotation is not None:
            groups[key].append((lineno, annotation))

    assessments = []
    for (system, doc, seg_id, rater), items in groups.items():
        anns = tuple(a for _, a in items)
        non_translation = [a for a in anns if a.category is not None and a.category.top == "Non-translation"]
        if non_translation and len(anns) > 1:
            raise SchemaError(
                f"Non-translation must be the only annotation for {system}/{seg_id}/{rater}",
                line=items[0][0],
            )
        if sum(1 for a in anns if a.severity is not Severity.NEUTRAL) > 5:
            log.warning("segment %s/%s rater %s has more than five errors", system, seg_id, rater)
        assessments.append(
            SegmentAssessment(
                segment_key=(lp, system, seg_id),
                rater_id=rater,
                annotations=anns,
                derived_score=score_annotations(anns, scheme),
            )
        )
    return assessments


DA_TSV_HEADER = ("lp", "system", "seg_id", "rater", "score")


def load_da_scores(path, normalize: bool = False) -> list[SegmentAssessment]:
    """Load DA scores; optional per-rater z-normalization (population std)."""
    records: list[tuple[tuple[str, str, str], str, float]] = []
    seen = set()
    for lineno, fields in _read_tsv(path, DA_TSV_HEADER):
        lp, system, seg_id, rater, score_raw = fields
        try:
            score = float(score_raw)
        except ValueError:
            raise SchemaError(f"bad score {score_raw!r}", line=lineno) from None
        key = ((lp, system, seg_id), rater)
        if key in seen:
            raise DuplicateRecord(f"duplicate DA record for {key}")
        seen.add(key)
        records.append(((lp, system, seg_id), rater, score))

    if normalize:
        by_rater: dict[str, list[float]] = {}
        for _, rater, score in records:
            by_rater.setdefault(rater, []).append(score)
        stats = {}
        for rater, scores in by_rater.items():
            mean = sum(scores) / len(scores)
            var = sum((s - mean) ** 2 for s in scores) / len(scores)
            stats[rater] = (mean, math.sqrt(var))
        records = [
            (key, rater, (score - stats[rater][0]) / stats[rater][1] if stats[rater][1] > 0 else 0.0)
            for key, rater, score in records
        ]

    return [
        SegmentAssessment(segment_key=key, rater_id=rater, raw_score=score)
        for key, rater, score in records
    ]


WORD_TAG_HEADER = ("system", "seg_id", "tags")


def load_word_tags(path) -> list[tuple[tuple[str, str], WordTagSequence]]:
    """Load word-level OK/BAD tags keyed by (system, seg_id)."""
    out = []
    seen = set()
    for lineno, fields in _read_tsv(path, WORD_TAG_HEADER):
        system, seg_id, tags_raw = fields
        tags = tuple(tags_raw.split())
        if any(t not in (OK, BAD) for t in tags):
            raise SchemaError(f"tags must be OK/BAD, got {tags_raw!r}", line=lineno)
        if (system, seg_id) in seen:
            raise DuplicateRecord(f"duplicate word-tag record for {(system, seg_id)}")
        seen.add((system, seg_id))
        out.append(((system, seg_id), WordTagSequence(tags=tags)))
    return out


def load_segments(path) -> list[Segment]:
    """Load segments from JSONL (lp, system_id, doc_id, seg_id, source, candidate, reference?)."""
    segments = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaError(f"bad JSON: {e}", line=lineno) from None
            try:
                segments.append(
                    Segment(
                        source=obj["source"],
                        candidate=obj["candidate"],
                        reference=obj.get("reference"),
                        lp=obj["lp"],
                        system_id=obj["system_id"],
                        doc_id=obj.get("doc_id", ""),
                        seg_id=obj["seg_id"],
                    )
                )
            except (KeyError, ValueError) as e:
                raise SchemaError(str(e), line=lineno) from None
    if not segments:
        raise SchemaError("no segments found", line=1)
    return segments


# ---------------------------------------------------------------------------
# Span <-> word-tag conversion


def spans_to_word_tags(annotations, text: str) -> WordTagSequence:
    """Tag a word BAD iff its character range overlaps any non-Neutral span."""
    offsets = word_offsets(text)
    tokens = tuple(text[a:b] for a, b in offsets)
    bad = [False] * len(offsets)
    for ann in annotations:
        if ann.severity is Severity.NEUTRAL or not ann.has_offsets():
            continue
        if ann.char_end > len(text):
            raise OffsetError(f"span [{ann.char_start}, {ann.char_end}) exceeds text length {len(text)}")
        for i, (a, b) in enumerate(offsets):
            if a < ann.char_end and ann.char_start < b:
                bad[i] = True
    return WordTagSequence(tags=tuple(BAD if b else OK for b in bad), tokens=tokens)


def word_tags_to_spans(tags: WordTagSequence) -> list[ErrorAnnotation]:
    """One Major annotation (no category) per maximal run of BAD words.

    Offsets are relative to the canonical single-space join of the tokens.
    """
    if tags.tokens is None:
        raise OffsetError("token texts required to reconstruct spans")
    text = " ".join(tags.tokens)
    offsets = word_offsets(text)
    spans = []
    i = 0
    n = len(tags.tags)
    while i < n:
        if tags.tags[i] == BAD:
            j = i
            while j + 1 < n and tags.tags[j + 1] == BAD:
                j += 1
            start, end = offsets[i][0], offsets[j][1]
            spans.append(
                ErrorAnnotation(
                    span_text=text[start:end],
                    severity=Severity.MAJOR,
                    char_start=start,
                    char_end=end,
                )
            )
            i = j + 1
        else:
            i += 1
    return spans
