"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import json
import math
import random
import time
import warnings

import pandas as pd
from click.testing import CliRunner

from mqmeval.annotation_io import (
    BAD,
    OK,
    WordTagSequence,
    parse_automqm_completion,
    word_offsets,
)
from mqmeval.cli import main as cli_main
from mqmeval.icl_sampler import ExamplePool, check_icl_set, sample_automqm_set, sample_stratified, sample_uniform
from mqmeval.meta_eval import (
    MetricReport,
    ReportEntry,
    _grouped_pairs,
    pairwise_accuracy_star,
    pearson,
    score_histogram,
    system_accuracy,
)
from mqmeval.mqm_core import (
    ErrorAnnotation,
    ErrorCategory,
    Segment,
    Severity,
    score_annotations,
)
from mqmeval.prompting import ICLExample, render_error_list
from mqmeval.span_metrics import major_recall, mcc, positional_set, span_precision
from tests.conftest import write_gold_mqm_tsv

runner = CliRunner()


def report(number, name, ok):
    print(f"\nACCEPTANCE {number} [{name}]: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {number} ({name}) failed"


def test_criterion_1_weight_table_exact():
    """Every (severity, category-class) cell reproduces the weight table."""
    start = time.perf_counter()

    def one(severity, top, sub=None):
        cat = ErrorCategory(top=top, sub=sub) if top else None
        return score_annotations([ErrorAnnotation(span_text="x", severity=severity, category=cat)])

    ok = one(Severity.MAJOR, "Non-translation") == 25
    ok &= all(
        one(Severity.MAJOR, top) == 5
        for top in ("Accuracy", "Fluency", "Terminology", "Style", "Locale convention", "Other", "Source error")
    )
    ok &= one(Severity.MAJOR, "Accuracy", "Mistranslation") == 5
    ok &= one(Severity.MINOR, "Fluency", "Punctuation") == 0.1
    ok &= all(
        one(Severity.MINOR, top) == 1
        for top in ("Accuracy", "Terminology", "Style", "Locale convention", "Other", "Source error", "Non-translation")
    )
    ok &= one(Severity.MINOR, "Fluency", "Spelling") == 1
    ok &= one(Severity.NEUTRAL, None) == 0
    ok &= time.perf_counter() - start < 1.0
    report(1, "MQM weight table exact", ok)


def test_criterion_2_oracle_end_to_end(corpus, corpus_files, tmp_path):
    """Oracle-backed run over 50 segments reproduces gold exactly."""
    start = time.perf_counter()
    out = tmp_path / "run"
    result = runner.invoke(
        cli_main,
        [
            "evaluate", "--mode", "automqm", "--k", "1", "--sampling", "stratified",
            "--seed", "3", "--backend", str(corpus_files["backend"]),
            "--pool", str(corpus_files["gold"]), "--segments", str(corpus_files["segments"]),
            "--out", str(out),
        ],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output

    gold = {(r["lp"], r["system_id"], r["seg_id"]): r["score"] for r in corpus}
    records = [json.loads(l) for l in (out / "assessments.jsonl").read_text().splitlines()]
    ok = len(records) == 50
    ok &= all(r["derived_score"] == gold[(r["lp"], r["system_id"], r["seg_id"])] for r in records)

    gold_scores = tmp_path / "gold_scores.jsonl"
    with open(gold_scores, "w") as f:
        for r in corpus:
            f.write(json.dumps({"lp": r["lp"], "system_id": r["system_id"],
                                "seg_id": r["seg_id"], "score": -r["score"]}) + "\n")
    meta_out = tmp_path / "meta.json"
    result = runner.invoke(
        cli_main,
        ["meta-eval", "--assessments", str(out / "assessments.jsonl"),
         "--gold", str(gold_scores), "--out", str(meta_out)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    meta = json.loads(meta_out.read_text())
    ok &= meta["per_lp"]["en-de"]["pearson"] == 1.0
    ok &= meta["per_lp"]["en-de"]["acc_star"] == 1.0
    ok &= meta["system_accuracy"] == 1.0

    gold_tsv = tmp_path / "gold.tsv"
    write_gold_mqm_tsv(gold_tsv, corpus)
    span_out = tmp_path / "span.json"
    result = runner.invoke(
        cli_main,
        ["span-eval", "--assessments", str(out / "assessments.jsonl"), "--gold", str(gold_tsv),
         "--segments", str(corpus_files["segments"]), "--out", str(span_out)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0, result.output
    span = json.loads(span_out.read_text())
    ok &= span["sp"] == 1.0 and span["mr"] == 1.0 and span["mcc"] == 1.0
    ok &= time.perf_counter() - start < 10.0
    report(2, "oracle end-to-end identity", ok)


def _brute_positional(spans, text):
    """Word i is covered iff any of its characters lies inside a span."""
    covered = set()
    for i, (a, b) in enumerate(word_offsets(text)):
        for span in spans:
            if span.char_start is None:
                continue
            if any(span.char_start <= c < span.char_end for c in range(a, b)):
                covered.add(i)
    return covered


def test_criterion_3_span_metric_oracle_equivalence():
    from sklearn.metrics import matthews_corrcoef

    rng = random.Random(303)
    ok = True
    for _ in range(1000):
        n_words = rng.randint(1, 20)
        text = " ".join("w" * rng.randint(1, 5) + str(i) for i in range(n_words))
        offsets = word_offsets(text)

        def random_spans():
            spans = []
            for _ in range(rng.randint(0, 4)):
                a = rng.randrange(len(text))
                b = rng.randint(a + 1, len(text))
                spans.append(
                    ErrorAnnotation(
                        span_text=text[a:b],
                        severity=rng.choice([Severity.MAJOR, Severity.MINOR]),
                        char_start=a,
                        char_end=b,
                    )
                )
            return spans

        pred_spans, gold_spans = random_spans(), random_spans()
        p = positional_set(pred_spans, text)
        g = positional_set(gold_spans, text)
        g_major = positional_set(gold_spans, text, severities=(Severity.MAJOR,))

        bp, bg = _brute_positional(pred_spans, text), _brute_positional(gold_spans, text)
        ok &= p == bp and g == bg

        sp = span_precision(p, g)
        oracle_sp = None if not bp else len(bp & bg) / len(bp)
        mr = major_recall(p, g_major)
        bg_major = _brute_positional(
            [s for s in gold_spans if s.severity is Severity.MAJOR], text
        )
        oracle_mr = None if not bg_major else len(bp & bg_major) / len(bg_major)
        for got, want in ((sp, oracle_sp), (mr, oracle_mr)):
            if want is None:
                ok &= got is None
            else:
                ok &= got is not None and abs(got - want) <= 1e-12

        pred_tags = WordTagSequence(tags=tuple(BAD if i in p else OK for i in range(n_words)))
        gold_tags = WordTagSequence(tags=tuple(BAD if i in g else OK for i in range(n_words)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # sklearn warns on single-label inputs
            sk = matthews_corrcoef(
                [t == BAD for t in gold_tags.tags], [t == BAD for t in pred_tags.tags]
            )
        ok &= abs(mcc(pred_tags, gold_tags) - sk) <= 1e-12
    report(3, "span-metric oracle equivalence", ok)


def _check_icl_oracle(df, min_errors=3, majmin_threshold=2, cat_diversity=2, min_clen=20, max_clen=400):
    """Direct transliteration of the published rejection-criteria code."""
    if not df.apply(
        lambda r: len(r["span"]) == len(r["severity"]) and len(r["span"]) == len(r["category"]),
        axis=1,
    ).all():
        return False
    if df["severity"].apply(lambda svs: len(svs)).sum() < min_errors:
        return False
    major_count = df["severity"].apply(lambda svs: sum([s == "major" for s in svs])).sum()
    minor_count = df["severity"].apply(lambda svs: sum([s == "minor" for s in svs])).sum()
    if abs(major_count - minor_count) > majmin_threshold:
        return False
    categories = df["category"].apply(lambda cs: [c.split("/")[0] for c in cs])
    represented_error_types = set().union(*categories.tolist())
    if len(represented_error_types) < cat_diversity:
        return False
    top_clen = df.apply(
        lambda row: max(len(row[s]) for s in ("source", "reference", "candidate")), axis=1
    ).max()
    bot_clen = df.apply(
        lambda row: min(len(row[s]) for s in ("source", "reference", "candidate")), axis=1
    ).min()
    if top_clen > max_clen or bot_clen < min_clen:
        return False
    return True


def test_criterion_4_rejection_criteria_fidelity():
    rng = random.Random(404)
    cats = ("accuracy/mistranslation", "accuracy/omission", "fluency/punctuation", "fluency", "style/awkward")
    boundary_lens = (19, 20, 400, 401)
    ok = True
    for trial in range(1000):
        examples, rows = [], []
        for _ in range(rng.randint(1, 4)):
            n_err = rng.randint(0, 4)
            severities = tuple(rng.choice(("major", "minor")) for _ in range(n_err))
            categories = tuple(rng.choice(cats) for _ in range(n_err))
            spans = tuple(f"sp{i}" for i in range(n_err))
            lens = [
                rng.choice(boundary_lens) if rng.random() < 0.5 else rng.randint(15, 410)
                for _ in range(3)
            ]
            source, reference, candidate = ("x" * l for l in lens)
            ex = ICLExample(
                segment=Segment(
                    source=source, candidate=candidate, reference=reference,
                    lp="en-de", system_id="s", seg_id="0",
                ),
                score=1.0, spans=spans, severities=severities, categories=categories,
            )
            if rng.random() < 0.1 and n_err > 0:
                object.__setattr__(ex, "spans", spans[:-1])  # parallel-length violation
            examples.append(ex)
            rows.append(
                {"span": list(ex.spans), "severity": list(severities), "category": list(categories),
                 "source": source, "reference": reference, "candidate": candidate}
            )
        got = check_icl_set(examples)
        want = _check_icl_oracle(pd.DataFrame(rows))
        ok &= got == want
    report(4, "rejection-criteria fidelity", ok)


def _exhaustive_acc_star(pairs):
    diffs = sorted({abs(dm) for dm, _ in pairs})
    candidates = [0.0] + diffs + [(a + b) / 2 for a, b in zip(diffs, diffs[1:])]
    if diffs:
        candidates.append(diffs[-1] + 1.0)
    best = -1.0
    for eps in candidates:
        correct = 0
        for dm, dg in pairs:
            if abs(dm) <= eps:
                correct += dg == 0
            else:
                correct += dg != 0 and (dm > 0) == (dg > 0)
        best = max(best, correct / len(pairs))
    return best


def test_criterion_5_acc_star_properties():
    ok = True
    rng = random.Random(505)
    for _ in range(50):
        n_items = rng.randint(2, 16)  # 3 systems -> 3 pairs per item, <= 100 pairs total
        entries = []
        for sys_id in "abc":
            for i in range(n_items):
                entries.append(
                    ReportEntry(
                        "en-de", sys_id, str(i),
                        rng.choice([0.0, 0.5, 1.0, 2.0, 7.5]),
                        rng.choice([0.0, 1.0, 2.0]),
                    )
                )
        rep = MetricReport(entries)
        acc, _ = pairwise_accuracy_star(rep, "en-de")
        ok &= acc == _exhaustive_acc_star(_grouped_pairs(rep, "en-de"))

    # Constant metric, gold without ties -> 0 for every epsilon.
    const = MetricReport(
        [ReportEntry("en-de", s, str(i), 1.0, float(i + (s == "b"))) for s in "ab" for i in range(0, 6, 2)]
    )
    acc, _ = pairwise_accuracy_star(const, "en-de")
    ok &= acc == 0.0

    # Metric identical to gold (with gold ties) -> 1.0.
    ident = MetricReport(
        [ReportEntry("en-de", s, str(i), g, g) for s, scores in {"a": [1.0, 2.0, 2.0], "b": [1.0, 3.0, 2.0]}.items() for i, g in enumerate(scores)]
    )
    acc, eps = pairwise_accuracy_star(ident, "en-de")
    ok &= acc == 1.0
    report(5, "acc* oracle equality and degenerate cases", ok)


def test_criterion_6_parser_totality_and_roundtrip():
    rng = random.Random(606)
    seg = Segment(
        source="alpha beta gamma delta", candidate="one two three four five six",
        reference="eins zwei drei", lp="en-de", system_id="s", seg_id="1",
    )
    alphabet = " -;/abcdefXYZ0123456789.\"'\n\tmajorminor"
    ok = True
    for _ in range(10000):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        try:
            parsed = parse_automqm_completion(s, seg)
            ok &= parsed.kind in ("error_list", "no_errors", "invalid")
        except Exception:
            ok = False
            break

    cat_pool = [
        ErrorCategory("Accuracy", "Mistranslation"), ErrorCategory("Accuracy", "Omission"),
        ErrorCategory("Fluency", "Punctuation"), ErrorCategory("Style", "Awkward"),
        ErrorCategory("Terminology"), ErrorCategory("Non-translation"), ErrorCategory("Other"),
    ]
    words = seg.candidate.split()
    recovered = 0
    for _ in range(1000):
        anns = []
        for _ in range(rng.randint(0, 4)):
            i = rng.randrange(len(words))
            j = rng.randint(i, len(words) - 1)
            anns.append(
                ErrorAnnotation(
                    span_text=" ".join(words[i : j + 1]),
                    severity=rng.choice([Severity.MAJOR, Severity.MINOR]),
                    category=rng.choice(cat_pool),
                )
            )
        rendered = render_error_list(anns)
        parsed = parse_automqm_completion(rendered, seg)
        if not anns:
            recovered += parsed.kind == "no_errors"
            continue
        got = [(a.span_text, a.severity, a.category.top, a.category.sub) for a in parsed.annotations]
        want = [(a.span_text, a.severity, a.category.top, a.category.sub) for a in anns]
        recovered += got == want and parsed.dropped_items == 0
    ok &= recovered == 1000
    report(6, "parser totality and render/parse round-trip", ok)


def test_criterion_7_sampling_reproducibility():
    rng = random.Random(707)
    entries = []
    for i in range(100):
        severities = ("major", "minor") if i % 2 else ("minor", "major")
        entries.append(
            ICLExample(
                segment=Segment(
                    source="s" * 50, candidate="c" * 50, reference="r" * 50,
                    lp="en-de", system_id="s", seg_id=str(i),
                ),
                score=float(i % 25),
                spans=("a", "b"), severities=severities,
                categories=("accuracy/mistranslation", "fluency/grammar"),
            )
        )
    pool = ExamplePool(entries)

    ok = True
    for sampler in (sample_uniform, sample_stratified):
        sets = {tuple(e.segment.seg_id for e in sampler(pool, 5, 42)) for _ in range(10)}
        ok &= len(sets) == 1
    sets = {
        tuple(e.segment.seg_id for e in sample_automqm_set(pool, 4, seed=42)) for _ in range(10)
    }
    ok &= len(sets) == 1

    for k in (3, 5, 8, 10):
        chosen = sample_stratified(pool, k, seed=k)
        counts = {}
        for e in chosen:
            b = pool.bucket_of(e.score)
            counts[b] = counts.get(b, 0) + 1
        ok &= max(counts.values()) - min(counts.values()) <= 1
    report(7, "sampling reproducibility and stratification", ok)


def test_criterion_8_statistic_invariances():
    rng = random.Random(808)
    ok = True
    for _ in range(100):
        n = rng.randint(5, 30)
        xs = [rng.gauss(0, 1) for _ in range(n)]
        ys = [rng.gauss(0, 1) for _ in range(n)]
        rep = MetricReport([ReportEntry("en-de", "s", str(i), x, y) for i, (x, y) in enumerate(zip(xs, ys))])
        a, b = rng.uniform(0.1, 10), rng.uniform(-5, 5)
        rep2 = MetricReport(
            [ReportEntry("en-de", "s", str(i), a * x + b, y) for i, (x, y) in enumerate(zip(xs, ys))]
        )
        ok &= abs(pearson(rep, "en-de") - pearson(rep2, "en-de")) <= 1e-9

        n_sys = rng.randint(2, 6)
        entries, warped = [], []
        for si in range(n_sys):
            m, g = rng.gauss(0, 1), rng.gauss(0, 1)
            entries.append(ReportEntry("en-de", f"sys{si}", "0", m, g))
            warped.append(ReportEntry("en-de", f"sys{si}", "0", math.exp(2 * m) + 3, g))
        ok &= abs(
            system_accuracy(MetricReport(entries)) - system_accuracy(MetricReport(warped))
        ) <= 1e-9
    report(8, "statistic invariances", ok)


def test_criterion_9_distribution_reporting():
    rng = random.Random(909)
    ok = True
    for _ in range(20):
        scores = [rng.uniform(0, 100) for _ in range(rng.randint(1, 300))]
        rows = score_histogram(scores, bin_spec="unit")
        ok &= sum(r[2] for r in rows) == len(scores)

    # Spiky score-prediction fixture: mass concentrated at 0, 50, 90, 95.
    spiky = [0] * 40 + [50] * 25 + [90] * 20 + [95] * 60 + [73, 81, 12]
    rows = score_histogram(spiky, bin_spec="unit")
    ok &= sum(r[2] for r in rows) == len(spiky)
    counts = {r[0]: r[2] for r in rows}
    peaks = {s for s, c in counts.items() if c >= 20}
    ok &= peaks == {0.0, 50.0, 90.0, 95.0}
    report(9, "distribution reporting", ok)
