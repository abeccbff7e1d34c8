"""Shared fixtures: a synthetic annotated corpus exercised end to end."""

import json

import pytest

from mqmeval.mqm_core import (
    ErrorAnnotation,
    Segment,
    Severity,
    lookup_category,
    score_annotations,
)

CATEGORIES = ("accuracy/mistranslation", "fluency/punctuation", "style/awkward")


def build_corpus(n_systems=5, n_segs=10, lp="en-de"):
    """Deterministic corpus of gold-annotated segments.

    Every span is two unique words, so first-occurrence localization is
    exact; error counts vary per segment so scores have variance.
    """
    records = []
    for si in range(n_systems):
        for gi in range(n_segs):
            words = [f"s{si}g{gi}w{k}" for k in range(8)]
            candidate = " ".join(words)
            n_errors = (si + gi) % 4
            errors = []
            for e in range(n_errors):
                span = f"{words[2 * e]} {words[2 * e + 1]}"
                severity = "major" if e % 2 == 0 else "minor"
                errors.append(
                    {"span": span, "severity": severity, "category": CATEGORIES[e % len(CATEGORIES)]}
                )
            annotations = tuple(
                ErrorAnnotation(
                    span_text=err["span"],
                    severity=Severity(err["severity"]),
                    category=lookup_category(err["category"]),
                    char_start=candidate.index(err["span"]),
                    char_end=candidate.index(err["span"]) + len(err["span"]),
                )
                for err in errors
            )
            records.append(
                {
                    "lp": lp,
                    "system_id": f"sys{si}",
                    "doc_id": "doc0",
                    "seg_id": f"seg{gi}",
                    "source": f"source text {gi} alpha beta gamma delta",
                    "candidate": candidate,
                    "reference": f"reference text {gi} alpha beta gamma delta",
                    "score": score_annotations(annotations),
                    "errors": errors,
                    "_annotations": annotations,
                }
            )
    return records


def write_jsonl(path, records, fields):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps({k: r[k] for k in fields}, ensure_ascii=False) + "\n")


SEGMENT_FIELDS = ("lp", "system_id", "doc_id", "seg_id", "source", "candidate", "reference")
POOL_FIELDS = SEGMENT_FIELDS + ("score", "errors")


def write_gold_mqm_tsv(path, records, rater="gold"):
    """One row per error with the span marked <v>...</v>; a Neutral row for
    error-free segments."""
    rows = ["system\tdoc\tseg_id\trater\tsource\ttarget\tcategory\tseverity"]
    for r in records:
        if not r["errors"]:
            rows.append(
                f"{r['system_id']}\t{r['doc_id']}\t{r['seg_id']}\t{rater}\t"
                f"{r['source']}\t{r['candidate']}\t\tNeutral"
            )
            continue
        for err in r["errors"]:
            start = r["candidate"].index(err["span"])
            marked = (
                r["candidate"][:start]
                + "<v>"
                + err["span"]
                + "</v>"
                + r["candidate"][start + len(err["span"]) :]
            )
            rows.append(
                f"{r['system_id']}\t{r['doc_id']}\t{r['seg_id']}\t{rater}\t"
                f"{r['source']}\t{marked}\t{err['category']}\t{err['severity'].capitalize()}"
            )
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(rows) + "\n")


@pytest.fixture
def corpus():
    return build_corpus()


@pytest.fixture
def corpus_files(tmp_path, corpus):
    """segments.jsonl, gold.jsonl (pool schema), and an oracle backend config."""
    segments = tmp_path / "segments.jsonl"
    gold = tmp_path / "gold.jsonl"
    write_jsonl(segments, corpus, SEGMENT_FIELDS)
    write_jsonl(gold, corpus, POOL_FIELDS)
    backend = tmp_path / "backend.json"
    backend.write_text(json.dumps({"kind": "oracle", "gold_path": str(gold)}), encoding="utf-8")
    return {"segments": segments, "gold": gold, "backend": backend, "dir": tmp_path}
