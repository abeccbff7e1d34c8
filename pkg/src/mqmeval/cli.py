"""Command-line entry point wiring ingestion, prompting, backends, parsing,
scoring, and both meta-evaluation suites into reproducible runs.

Exit codes: 0 success, 2 config error, 3 data error, 4 backend/sampling
exhaustion.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import sys
from pathlib import Path

import click

from mqmeval import annotation_io, icl_sampler, llm_backend, meta_eval, span_metrics
from mqmeval.errors import (
    BackendError,
    ConfigError,
    MqmEvalError,
    RejectionExhausted,
    SchemaError,
)
from mqmeval.mqm_core import (
    ErrorAnnotation,
    SegmentAssessment,
    Severity,
    aggregate_raters,
    lookup_category,
    score_annotations,
)
from mqmeval.prompting import MODE_AUTOMQM, MODE_SCORE, PromptTemplate, render_prompt

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_EXHAUSTED = 4


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()


def _round(x):
    return None if x is None else round(x, 4)


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, ValueError) as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except (BackendError, RejectionExhausted) as e:
            click.echo(f"exhausted: {e}", err=True)
            sys.exit(EXIT_EXHAUSTED)
        except MqmEvalError as e:
            click.echo(f"data error: {e}", err=True)
            sys.exit(EXIT_DATA)

    return wrapper


@click.group()
def main():
    """Interpretable MT quality assessment via LLM completions."""


def _load_backend_config(path: str, out_dir: Path | None = None) -> llm_backend.BackendConfig:
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    if out_dir is not None and not raw.get("log_path"):
        raw["log_path"] = str(out_dir / "replay.jsonl")
    try:
        return llm_backend.BackendConfig(**raw)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def _annotation_to_dict(a: ErrorAnnotation) -> dict:
    return {
        "span": a.span_text,
        "severity": a.severity.value,
        "category": a.category.canonical() if a.category else None,
        "char_start": a.char_start,
        "char_end": a.char_end,
        "in_source": a.in_source,
    }


def _annotation_from_dict(d: dict) -> ErrorAnnotation:
    return ErrorAnnotation(
        span_text=d["span"],
        severity=Severity(d["severity"]),
        category=lookup_category(d["category"]) if d.get("category") else None,
        char_start=d.get("char_start"),
        char_end=d.get("char_end"),
        in_source=d.get("in_source", False),
    )


@main.command()
@click.option("--mode", type=click.Choice([MODE_SCORE, MODE_AUTOMQM]), required=True)
@click.option("--ref/--no-ref", "with_reference", default=True)
@click.option("--k", type=int, default=0, help="Number of in-context examples.")
@click.option(
    "--sampling",
    type=click.Choice(["uniform", "stratified", "stratified_rejection"]),
    default="stratified",
)
@click.option("--seed", type=int, default=0)
@click.option("--backend", "backend_path", required=True, help="Backend config JSON.")
@click.option("--pool", "pool_path", default=None, help="Example pool JSONL.")
@click.option("--segments", "segments_path", required=True, help="Segments JSONL.")
@click.option("--out", "out_dir", required=True, help="Run output directory.")
@click.option("--parallelism", type=int, default=1)
@handle_errors
def evaluate(mode, with_reference, k, sampling, seed, backend_path, pool_path, segments_path, out_dir, parallelism):
    """Prompt a backend over a segments file and write parsed assessments."""
    if mode == MODE_AUTOMQM and k < 1:
        raise ConfigError("automqm runs require at least one in-context example (k >= 1)")
    if k > 0 and not pool_path:
        raise ConfigError("k > 0 requires an example pool (--pool)")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_config = {
        "mode": mode,
        "with_reference": with_reference,
        "k": k,
        "sampling": sampling,
        "seed": seed,
        "backend": backend_path,
        "pool": pool_path,
        "segments": segments_path,
    }
    digest = config_hash(run_config)

    segments = annotation_io.load_segments(segments_path)
    examples = []
    if k > 0:
        pool = icl_sampler.load_pool(pool_path)
        if sampling == "uniform":
            examples = icl_sampler.sample_uniform(pool, k, seed)
        elif sampling == "stratified":
            examples = icl_sampler.sample_stratified(pool, k, seed)
        else:
            examples = icl_sampler.sample_automqm_set(pool, k, seed=seed)

    template = PromptTemplate(mode=mode, with_reference=with_reference)
    backend = llm_backend.make_backend(_load_backend_config(backend_path, out))
    requests = [
        llm_backend.CompletionRequest(
            prompt=render_prompt(template, examples, seg),
            max_tokens=256 if mode == MODE_AUTOMQM else 16,
        )
        for seg in segments
    ]
    outcomes = llm_backend.batch_complete(requests, backend, parallelism=parallelism)

    diagnostics = {"n_segments": len(segments), "n_failed": 0, "n_invalid": 0, "dropped_items": 0}
    with open(out / "assessments.jsonl", "w", encoding="utf-8") as f:
        for seg, outcome in zip(segments, outcomes):
            record = {
                "lp": seg.lp,
                "system_id": seg.system_id,
                "seg_id": seg.seg_id,
                "rater_id": backend.model,
                "config_hash": digest,
            }
            if not outcome.ok:
                diagnostics["n_failed"] += 1
                record["error"] = outcome.error
            else:
                record["completion"] = outcome.text
                if mode == MODE_SCORE:
                    parsed = annotation_io.parse_score_completion(outcome.text)
                    record["kind"] = parsed.kind
                    record["raw_score"] = parsed.score
                else:
                    parsed = annotation_io.parse_automqm_completion(outcome.text, seg)
                    record["kind"] = parsed.kind
                    record["annotations"] = [_annotation_to_dict(a) for a in parsed.annotations]
                    record["derived_score"] = _round(score_annotations(parsed.annotations))
                    diagnostics["dropped_items"] += parsed.dropped_items
                if parsed.kind == "invalid":
                    diagnostics["n_invalid"] += 1
            f.write(json.dumps(record, ensure_ascii=False) + "\n")

    with open(out / "config.json", "w", encoding="utf-8") as f:
        json.dump({**run_config, "config_hash": digest}, f, indent=2)
    with open(out / "diagnostics.json", "w", encoding="utf-8") as f:
        json.dump({**diagnostics, "config_hash": digest}, f, indent=2)
    click.echo(str(out))


def _load_assessment_records(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise SchemaError(f"bad JSON: {e}", line=lineno) from None
    return records


def _gold_scores(gold_path: str, lp: str) -> dict[tuple, float]:
    """(lp, system, seg_id) -> gold score, higher is better (MQM negated)."""
    if gold_path.endswith(".tsv"):
        assessments = annotation_io.load_mqm_tsv(gold_path, lp=lp)
        by_key: dict[tuple, list[SegmentAssessment]] = {}
        for a in assessments:
            by_key.setdefault(a.segment_key, []).append(a)
        return {key: -aggregate_raters(raters) for key, raters in by_key.items()}
    scores = {}
    with open(gold_path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                obj = json.loads(line)
                scores[(obj["lp"], obj["system_id"], obj["seg_id"])] = float(obj["score"])
    return scores


def _metric_score(record: dict) -> float | None:
    # Derived MQM penalties are stored penalty-positive; orient them
    # higher-is-better here, at meta-evaluation time.
    if record.get("derived_score") is not None:
        return -record["derived_score"]
    return record.get("raw_score")


@main.command("meta-eval")
@click.option("--assessments", "assessments_path", required=True)
@click.option("--gold", "gold_path", required=True, help="Gold MQM TSV or JSONL of scores.")
@click.option("--lp", "lp_filter", default=None, help="Restrict to one language pair.")
@click.option("--out", "out_path", required=True)
@handle_errors
def cmd_meta_eval(assessments_path, gold_path, lp_filter, out_path):
    """Score-level meta-evaluation: Pearson, acc*, system accuracy."""
    records = _load_assessment_records(assessments_path)
    lps = sorted({r["lp"] for r in records})
    if lp_filter:
        lps = [lp for lp in lps if lp == lp_filter]

    entries = []
    excluded = 0
    gold_by_lp = {lp: _gold_scores(gold_path, lp) for lp in lps}
    for r in records:
        if r["lp"] not in gold_by_lp:
            continue
        metric = _metric_score(r)
        gold = gold_by_lp[r["lp"]].get((r["lp"], r["system_id"], r["seg_id"]))
        if metric is None or gold is None:
            excluded += 1
            continue
        entries.append(meta_eval.ReportEntry(r["lp"], r["system_id"], r["seg_id"], metric, gold))

    report = meta_eval.MetricReport(entries)
    per_lp = {}
    for lp in report.lps():
        acc_star, eps = meta_eval.pairwise_accuracy_star(report, lp)
        per_lp[lp] = {
            "pearson": _round(meta_eval.pearson(report, lp)),
            "acc_star": _round(acc_star),
            "epsilon": eps,
            "n_pairs": len(meta_eval._grouped_pairs(report, lp)),
        }
    result = {
        "per_lp": per_lp,
        "system_accuracy": _round(meta_eval.system_accuracy(report)),
        "exclusions": excluded,
        "config_hash": records[0].get("config_hash") if records else None,
    }
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(result, f, indent=2)
    click.echo(out_path)


@main.command("span-eval")
@click.option("--assessments", "assessments_path", required=True)
@click.option("--gold", "gold_path", required=True, help="Gold MQM TSV.")
@click.option("--segments", "segments_path", required=True)
@click.option("--macro", is_flag=True, default=False, help="Macro-average SP/MR per segment.")
@click.option("--out", "out_path", required=True)
@handle_errors
def cmd_span_eval(assessments_path, gold_path, segments_path, macro, out_path):
    """Span-level meta-evaluation: SP, MR, corpus MCC."""
    records = _load_assessment_records(assessments_path)
    segments = {s.key: s for s in annotation_io.load_segments(segments_path)}
    gold_by_key: dict[tuple, list[ErrorAnnotation]] = {}
    for lp in sorted({r["lp"] for r in records}):
        for a in annotation_io.load_mqm_tsv(gold_path, lp=lp):
            gold_by_key.setdefault(a.segment_key, []).extend(a.annotations)

    triples = []
    for r in records:
        key = (r["lp"], r["system_id"], r["seg_id"])
        seg = segments.get(key)
        if seg is None:
            continue
        pred = [_annotation_from_dict(d) for d in r.get("annotations", [])]
        triples.append((pred, gold_by_key.get(key, []), seg.candidate))

    result = span_metrics.evaluate_spans(triples, macro=macro).to_dict()
    for field in ("sp", "mr", "mcc", "avg_pred_span_words", "avg_gold_span_words"):
        result[field] = _round(result[field])
    result["config_hash"] = records[0].get("config_hash") if records else None
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(result, f, indent=2)
    click.echo(out_path)


@main.command("sample-icl")
@click.option("--pool", "pool_path", required=True)
@click.option("--k", type=int, required=True)
@click.option(
    "--sampling",
    type=click.Choice(["uniform", "stratified", "stratified_rejection"]),
    default="stratified_rejection",
)
@click.option("--seed", type=int, default=0)
@click.option("--sets", "n_sets", type=int, default=1)
@click.option("--out", "out_path", required=True)
@handle_errors
def cmd_sample_icl(pool_path, k, sampling, seed, n_sets, out_path):
    """Sample in-context example sets from a pool."""
    pool = icl_sampler.load_pool(pool_path)
    sets = []
    for i in range(n_sets):
        if sampling == "uniform":
            chosen = icl_sampler.sample_uniform(pool, k, seed + i)
        elif sampling == "stratified":
            chosen = icl_sampler.sample_stratified(pool, k, seed + i)
        else:
            chosen = icl_sampler.sample_automqm_set(pool, k, seed=seed + i)
        sets.append(
            [
                {
                    "lp": ex.segment.lp,
                    "system_id": ex.segment.system_id,
                    "seg_id": ex.segment.seg_id,
                    "source": ex.segment.source,
                    "candidate": ex.segment.candidate,
                    "reference": ex.segment.reference,
                    "score": ex.score,
                    "errors": [
                        {"span": s, "severity": sev, "category": cat}
                        for s, sev, cat in zip(ex.spans, ex.severities, ex.categories)
                    ],
                }
                for ex in chosen
            ]
        )
    payload = {
        "config_hash": config_hash({"pool": pool_path, "k": k, "sampling": sampling, "seed": seed}),
        "seed": seed,
        "sets": sets,
    }
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
    click.echo(out_path)


@main.command("report")
@click.option("--scores", "scores_path", required=True, help="Assessments JSONL or one number per line.")
@click.option("--bins", "bin_spec", default="unit", help='"unit", an integer bin count, or nothing fancier.')
@click.option("--out", "out_path", required=True, help="Histogram CSV output.")
@handle_errors
def cmd_report(scores_path, bin_spec, out_path):
    """Emit a score histogram as CSV (bin_start,bin_end,count)."""
    scores = []
    with open(scores_path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                record = json.loads(line)
                s = record.get("raw_score")
                if s is None:
                    s = record.get("derived_score")
                if s is not None:
                    scores.append(float(s))
            else:
                scores.append(float(line))
    spec = int(bin_spec) if bin_spec.isdigit() else bin_spec
    rows = meta_eval.score_histogram(scores, spec)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_start", "bin_end", "count"])
        writer.writerows(rows)
    click.echo(out_path)


if __name__ == "__main__":
    main()
