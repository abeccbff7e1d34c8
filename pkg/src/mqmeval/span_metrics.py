"""Span-level meta-evaluation: positional sets, span precision, major
recall, and Matthews correlation over word-level OK/BAD tags."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from mqmeval.annotation_io import BAD, WordTagSequence, word_offsets
from mqmeval.errors import LengthMismatch
from mqmeval.mqm_core import ErrorAnnotation, Severity


@dataclass
class SpanEvalResult:
    """Corpus-level span evaluation summary (micro-averaged)."""

    sp: float | None
    mr: float | None
    mcc: float
    n_segments: int = 0
    n_undefined_sp: int = 0
    n_undefined_mr: int = 0
    avg_pred_span_words: float | None = None
    avg_gold_span_words: float | None = None

    def to_dict(self) -> dict:
        return {
            "sp": self.sp,
            "mr": self.mr,
            "mcc": self.mcc,
            "n_segments": self.n_segments,
            "n_undefined_sp": self.n_undefined_sp,
            "n_undefined_mr": self.n_undefined_mr,
            "avg_pred_span_words": self.avg_pred_span_words,
            "avg_gold_span_words": self.avg_gold_span_words,
        }


def positional_set(spans, text: str, severities=(Severity.MAJOR, Severity.MINOR)) -> set[int]:
    """Word indices (0-based, whitespace tokenization) covered by any span.

    A word belongs to a span if their character ranges intersect in at
    least one character. Spans without offsets are skipped.
    """
    offsets = word_offsets(text)
    covered: set[int] = set()
    for span in spans:
        if not span.has_offsets() or span.severity not in severities or span.in_source:
            continue
        for i, (a, b) in enumerate(offsets):
            if a < span.char_end and span.char_start < b:
                covered.add(i)
    return covered


def span_precision(pred: set[int], gold: set[int]) -> float | None:
    """|pred ∩ gold| / |pred|; undefined (None) when pred is empty."""
    if not pred:
        return None
    return len(pred & gold) / len(pred)


def major_recall(pred: set[int], gold_major: set[int]) -> float | None:
    """|pred ∩ gold_major| / |gold_major|; undefined when no gold majors.

    pred covers all predicted errors regardless of severity.
    """
    if not gold_major:
        return None
    return len(pred & gold_major) / len(gold_major)


def confusion_counts(pred_tags: WordTagSequence, gold_tags: WordTagSequence) -> tuple[int, int, int, int]:
    """(TP, TN, FP, FN) with BAD as the positive class."""
    if len(pred_tags.tags) != len(gold_tags.tags):
        raise LengthMismatch(
            f"{len(pred_tags.tags)} predicted tags vs {len(gold_tags.tags)} gold tags"
        )
    tp = tn = fp = fn = 0
    for p, g in zip(pred_tags.tags, gold_tags.tags):
        if p == BAD and g == BAD:
            tp += 1
        elif p == BAD:
            fp += 1
        elif g == BAD:
            fn += 1
        else:
            tn += 1
    return tp, tn, fp, fn


def mcc_from_counts(tp: int, tn: int, fp: int, fn: int) -> float:
    denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / denom


def mcc(pred_tags: WordTagSequence, gold_tags: WordTagSequence) -> float:
    return mcc_from_counts(*confusion_counts(pred_tags, gold_tags))


def _span_word_counts(spans, text: str) -> list[int]:
    offsets = word_offsets(text)
    counts = []
    for span in spans:
        if not span.has_offsets() or span.severity is Severity.NEUTRAL or span.in_source:
            continue
        counts.append(sum(1 for a, b in offsets if a < span.char_end and span.char_start < b))
    return counts


def evaluate_spans(
    segments: list[tuple[list[ErrorAnnotation], list[ErrorAnnotation], str]],
    macro: bool = False,
) -> SpanEvalResult:
    """Corpus span evaluation over (predicted, gold, candidate text) triples.

    SP and MR are micro-averaged (positional sets pooled across segments)
    by default; macro averages the per-segment values, skipping undefined
    segments either way. MCC is computed on the pooled confusion matrix.
    """
    sp_num = sp_den = 0
    mr_num = mr_den = 0
    sp_values: list[float] = []
    mr_values: list[float] = []
    n_undefined_sp = n_undefined_mr = 0
    tp = tn = fp = fn = 0
    pred_counts: list[int] = []
    gold_counts: list[int] = []

    for pred, gold, text in segments:
        p = positional_set(pred, text)
        g = positional_set(gold, text)
        g_major = positional_set(gold, text, severities=(Severity.MAJOR,))

        if p:
            sp_num += len(p & g)
            sp_den += len(p)
            sp_values.append(len(p & g) / len(p))
        else:
            n_undefined_sp += 1
        if g_major:
            mr_num += len(p & g_major)
            mr_den += len(g_major)
            mr_values.append(len(p & g_major) / len(g_major))
        else:
            n_undefined_mr += 1

        n_words = len(word_offsets(text))
        all_words = set(range(n_words))
        tp += len(p & g)
        fp += len(p - g)
        fn += len(g - p)
        tn += len(all_words - p - g)

        pred_counts.extend(_span_word_counts(pred, text))
        gold_counts.extend(_span_word_counts(gold, text))

    if macro:
        sp = sum(sp_values) / len(sp_values) if sp_values else None
        mr = sum(mr_values) / len(mr_values) if mr_values else None
    else:
        sp = sp_num / sp_den if sp_den else None
        mr = mr_num / mr_den if mr_den else None

    return SpanEvalResult(
        sp=sp,
        mr=mr,
        mcc=mcc_from_counts(tp, tn, fp, fn),
        n_segments=len(segments),
        n_undefined_sp=n_undefined_sp,
        n_undefined_mr=n_undefined_mr,
        avg_pred_span_words=sum(pred_counts) / len(pred_counts) if pred_counts else None,
        avg_gold_span_words=sum(gold_counts) / len(gold_counts) if gold_counts else None,
    )
