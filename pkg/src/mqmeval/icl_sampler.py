"""In-context example selection: uniform and stratified sampling, plus the
rejection criteria applied when sampling sets for error annotation."""

from __future__ import annotations

import bisect
import json
import random
from dataclasses import dataclass, field

from mqmeval.errors import PoolTooSmall, RejectionExhausted, SchemaError
from mqmeval.mqm_core import ErrorAnnotation, Segment, Severity, lookup_category
from mqmeval.prompting import ICLExample

DEFAULT_N_BUCKETS = 5


@dataclass(frozen=True)
class RejectionConfig:
    min_errors: int = 3
    majmin_threshold: int = 2
    cat_diversity: int = 2
    min_clen: int = 20
    max_clen: int = 400

    def __post_init__(self):
        for name in ("min_errors", "majmin_threshold", "cat_diversity", "min_clen", "max_clen"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be a positive integer")


class ExamplePool:
    """Scored examples bucketable by score range for stratified sampling.

    bucket_edges are the interior boundaries; by default five equal-width
    buckets over the observed score span.
    """

    def __init__(self, entries: list[ICLExample], bucket_edges: list[float] | None = None):
        if not entries:
            raise PoolTooSmall("empty example pool")
        for e in entries:
            if e.score is None:
                raise ValueError("every pool entry needs a finite score")
        self.entries = tuple(entries)
        if bucket_edges is None:
            lo = min(e.score for e in entries)
            hi = max(e.score for e in entries)
            width = (hi - lo) / DEFAULT_N_BUCKETS
            bucket_edges = [lo + width * i for i in range(1, DEFAULT_N_BUCKETS)]
        self.bucket_edges = tuple(bucket_edges)

    def bucket_of(self, score: float) -> int:
        return bisect.bisect_right(self.bucket_edges, score)

    def buckets(self) -> list[list[ICLExample]]:
        """Non-empty buckets only, in score order."""
        grouped: dict[int, list[ICLExample]] = {}
        for e in self.entries:
            grouped.setdefault(self.bucket_of(e.score), []).append(e)
        return [grouped[i] for i in sorted(grouped)]


def load_pool(path) -> ExamplePool:
    """Load a pool from JSONL: segment fields plus `score` and optional
    `errors` array of {span, severity, category}."""
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                segment = Segment(
                    source=obj["source"],
                    candidate=obj["candidate"],
                    reference=obj.get("reference"),
                    lp=obj["lp"],
                    system_id=obj.get("system_id", ""),
                    doc_id=obj.get("doc_id", ""),
                    seg_id=obj.get("seg_id", ""),
                )
                errors = obj.get("errors", [])
                annotations = tuple(
                    ErrorAnnotation(
                        span_text=e["span"],
                        severity=Severity(e["severity"].lower()),
                        category=lookup_category(e["category"]),
                    )
                    for e in errors
                )
                entries.append(
                    ICLExample(
                        segment=segment,
                        score=float(obj["score"]),
                        spans=tuple(e["span"] for e in errors),
                        severities=tuple(e["severity"] for e in errors),
                        categories=tuple(e["category"] for e in errors),
                        annotations=annotations,
                    )
                )
            except (KeyError, ValueError) as e:
                raise SchemaError(str(e), line=lineno) from None
    return ExamplePool(entries)


def sample_uniform(pool: ExamplePool, k: int, seed: int) -> list[ICLExample]:
    """k distinct entries, uniform without replacement, deterministic per seed."""
    if k > len(pool.entries):
        raise PoolTooSmall(f"k={k} exceeds pool size {len(pool.entries)}")
    rng = random.Random(seed)
    return [pool.entries[i] for i in rng.sample(range(len(pool.entries)), k)]


def sample_stratified(pool: ExamplePool, k: int, seed: int) -> list[ICLExample]:
    """Round-robin draws across non-empty score buckets, one per bucket per
    round with bucket order reshuffled each round, until k are collected."""
    if k > len(pool.entries):
        raise PoolTooSmall(f"k={k} exceeds pool size {len(pool.entries)}")
    rng = random.Random(seed)
    remaining = []
    for bucket in pool.buckets():
        bucket = list(bucket)
        rng.shuffle(bucket)
        remaining.append(bucket)

    chosen: list[ICLExample] = []
    while len(chosen) < k:
        active = [b for b in remaining if b]
        rng.shuffle(active)
        for bucket in active:
            if len(chosen) == k:
                break
            chosen.append(bucket.pop())
    return chosen


def check_icl_set(examples: list[ICLExample], config: RejectionConfig = RejectionConfig()) -> bool:
    """Accept an example set only if it has enough errors, a major/minor
    balance, category diversity, and text lengths within bounds."""
    # Parallel span/severity/category lists.
    for ex in examples:
        if not (len(ex.spans) == len(ex.severities) == len(ex.categories)):
            return False

    if sum(len(ex.severities) for ex in examples) < config.min_errors:
        return False

    major_count = sum(sum(1 for s in ex.severities if s == "major") for ex in examples)
    minor_count = sum(sum(1 for s in ex.severities if s == "minor") for ex in examples)
    if abs(major_count - minor_count) > config.majmin_threshold:
        return False

    represented = set()
    for ex in examples:
        represented.update(c.split("/")[0] for c in ex.categories)
    if len(represented) < config.cat_diversity:
        return False

    def texts(ex: ICLExample) -> list[str]:
        s = [ex.segment.source, ex.segment.candidate]
        if ex.segment.reference is not None:
            s.append(ex.segment.reference)
        return s

    top_clen = max(max(len(t) for t in texts(ex)) for ex in examples)
    bot_clen = min(min(len(t) for t in texts(ex)) for ex in examples)
    if top_clen > config.max_clen or bot_clen < config.min_clen:
        return False

    return True


def sample_automqm_set(
    pool: ExamplePool,
    k: int,
    config: RejectionConfig = RejectionConfig(),
    seed: int = 0,
    max_attempts: int = 1000,
) -> list[ICLExample]:
    """Draw stratified sets until one passes check_icl_set."""
    rng = random.Random(seed)
    for _ in range(max_attempts):
        attempt_seed = rng.randrange(2**32)
        examples = sample_stratified(pool, k, attempt_seed)
        if check_icl_set(examples, config):
            return examples
    raise RejectionExhausted(f"no acceptable set after {max_attempts} attempts")
