"""Score-level meta-evaluation: system-level pairwise ranking accuracy,
segment-level Pearson, pairwise accuracy with tie calibration, and score
bucketing/histogram utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from mqmeval.errors import (
    DegenerateVariance,
    TooFewDistinct,
    TooFewPairs,
    TooFewSystems,
)

CLASS_LABELS = ("very bad", "bad", "ok", "good", "very good")


@dataclass(frozen=True)
class ReportEntry:
    lp: str
    system_id: str
    seg_id: str
    metric_score: float
    gold_score: float


@dataclass
class MetricReport:
    """Per-segment metric and gold scores, both oriented higher-is-better."""

    entries: list[ReportEntry]

    def lps(self) -> list[str]:
        return sorted({e.lp for e in self.entries})

    def for_lp(self, lp: str) -> list[ReportEntry]:
        return [e for e in self.entries if e.lp == lp]

    def system_means(self, lp: str) -> dict[str, tuple[float, float]]:
        """system_id -> (mean metric score, mean gold score)."""
        grouped: dict[str, list[ReportEntry]] = {}
        for e in self.for_lp(lp):
            grouped.setdefault(e.system_id, []).append(e)
        return {
            sys_id: (
                sum(e.metric_score for e in es) / len(es),
                sum(e.gold_score for e in es) / len(es),
            )
            for sys_id, es in grouped.items()
        }


def system_accuracy(report: MetricReport, lps: list[str] | None = None) -> float:
    """Fraction of system pairs ranked the same by metric and gold means,
    pooled across language pairs; exact gold ties are excluded."""
    if lps is None:
        lps = report.lps()
    concordant = total = 0
    for lp in lps:
        means = report.system_means(lp)
        if len(means) < 2:
            raise TooFewSystems(f"{lp}: need at least 2 systems, got {len(means)}")
        for a, b in combinations(sorted(means), 2):
            gold_diff = means[a][1] - means[b][1]
            if gold_diff == 0:
                continue
            metric_diff = means[a][0] - means[b][0]
            total += 1
            if math.copysign(1, metric_diff) == math.copysign(1, gold_diff) and metric_diff != 0:
                concordant += 1
    if total == 0:
        raise TooFewPairs("all system pairs are gold ties")
    return concordant / total


def pearson(report: MetricReport, lp: str) -> float:
    """Segment-level Pearson correlation between metric and gold scores."""
    entries = report.for_lp(lp)
    if len(entries) < 2:
        raise DegenerateVariance(f"{lp}: need at least 2 segments")
    xs = [e.metric_score for e in entries]
    ys = [e.gold_score for e in entries]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        raise DegenerateVariance(f"{lp}: zero variance")
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def _grouped_pairs(report: MetricReport, lp: str) -> list[tuple[float, float]]:
    """(metric diff, gold diff) over system pairs of the same source item."""
    by_item: dict[str, list[ReportEntry]] = {}
    for e in report.for_lp(lp):
        by_item.setdefault(e.seg_id, []).append(e)
    pairs = []
    for entries in by_item.values():
        for a, b in combinations(sorted(entries, key=lambda e: e.system_id), 2):
            pairs.append((a.metric_score - b.metric_score, a.gold_score - b.gold_score))
    return pairs


def _accuracy_at(pairs: list[tuple[float, float]], eps: float) -> float:
    correct = 0
    for dm, dg in pairs:
        if abs(dm) <= eps:
            correct += dg == 0
        else:
            correct += dg != 0 and (dm > 0) == (dg > 0)
    return correct / len(pairs)


def pairwise_accuracy_star(report: MetricReport, lp: str) -> tuple[float, float]:
    """Pairwise accuracy with tie calibration, group-by-item pairing.

    A metric pair is a predicted tie iff |metric diff| <= epsilon; a pair
    is correct iff it is tied on both sides or ordered the same on both.
    Epsilon is swept over 0, the midpoints between consecutive distinct
    |metric diff| values, and the largest |metric diff| (the all-tied
    regime); the maximizing (accuracy, epsilon) is returned, preferring
    the smallest epsilon on ties.
    """
    pairs = _grouped_pairs(report, lp)
    if not pairs:
        raise TooFewPairs(f"{lp}: no same-item system pairs")
    diffs = sorted({abs(dm) for dm, _ in pairs})
    candidates = [0.0]
    candidates += [(a + b) / 2 for a, b in zip(diffs, diffs[1:])]
    if diffs:
        candidates.append(diffs[-1])
    best_acc, best_eps = -1.0, 0.0
    for eps in candidates:
        acc = _accuracy_at(pairs, eps)
        if acc > best_acc:
            best_acc, best_eps = acc, eps
    return best_acc, best_eps


def bucket_scores(scores: list[float], n_buckets: int = 5) -> tuple[list[float], tuple[str, ...]]:
    """Quantile edges splitting scores into equal-count classes.

    Returns (interior edges, labels ordered worst to best); counts can be
    off by the number of tied boundary values.
    """
    if len(set(scores)) < n_buckets:
        raise TooFewDistinct(
            f"need at least {n_buckets} distinct scores, got {len(set(scores))}"
        )
    ordered = sorted(scores)
    n = len(ordered)
    edges = []
    for i in range(1, n_buckets):
        cut = round(i * n / n_buckets)
        edges.append((ordered[cut - 1] + ordered[cut]) / 2)
    labels = CLASS_LABELS if n_buckets == 5 else tuple(f"class_{i+1}" for i in range(n_buckets))
    return edges, labels


def score_histogram(scores: list[float], bin_spec="unit") -> list[tuple[float, float, int]]:
    """Histogram rows (bin_start, bin_end, count) for external plotting.

    bin_spec: "unit" for unit-width integer bins covering the data range,
    an int for that many equal-width bins, or an explicit edge sequence.
    Bins are half-open [start, end) except the last, which is closed.
    """
    if isinstance(bin_spec, str):
        if bin_spec != "unit":
            raise ValueError(f"unknown bin spec {bin_spec!r}")
        if not scores:
            return []
        lo, hi = math.floor(min(scores)), math.ceil(max(scores))
        edges = [float(x) for x in range(lo, hi + 2)]
    elif isinstance(bin_spec, int):
        if not scores:
            return []
        lo, hi = min(scores), max(scores)
        width = (hi - lo) / bin_spec if hi > lo else 1.0
        edges = [lo + width * i for i in range(bin_spec + 1)]
    else:
        edges = [float(e) for e in bin_spec]

    counts = [0] * (len(edges) - 1)
    last = len(counts) - 1
    for s in scores:
        for i in range(len(counts)):
            if edges[i] <= s < edges[i + 1] or (i == last and s == edges[-1]):
                counts[i] += 1
                break
    return [(edges[i], edges[i + 1], counts[i]) for i in range(len(counts))]
