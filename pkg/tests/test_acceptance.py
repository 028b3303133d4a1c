"""Acceptance suite: one test per criterion, each printing a pass line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Tolerances are pinned here and nowhere else.
"""

from __future__ import annotations

import math
import random
import string

import pytest

from clausebench.corpus import load_document, split_dataset
from clausebench.econ import GpuPricing, batched_gpu_cost, serial_gpu_cost
from clausebench.labelforge import AcceptedLabel, export_corpus
from clausebench.matchers import RulesConfig, fuzzy_anchor
from clausebench.modelgate import ReplayAdapter, build_prompt, parse_records, run_matrix
from clausebench.corpus import SplitAssignment
from clausebench.schema import (
    CharInterval,
    FieldExtraction,
    GoldAnnotation,
    SupportingSpan,
    default_catalog,
)
from clausebench.scoring import (
    ConfusionCounts,
    PRF,
    build_scoreboard,
    category_means,
    f1_score,
    leader_analysis,
    macro_aggregate,
    tally_field,
)
from clausebench.validation import validate_extraction

from anchor_oracle import brute_force_anchor
from contractgen import build_corpus, wire_response
from reference_data import (
    BATCH_WALL_CLOCK_S,
    FIELD_F1_GRID,
    GPU_HOURLY_RATE,
    LEADER_HISTOGRAM,
    LEADER_MARGIN,
    MICRO_ROWS,
    N_EVAL_DOCS,
    PUBLISHED_BATCHED_COST,
    PUBLISHED_SERIAL_COST,
    SERIAL_AVG_LATENCY_S,
    SUBJECT,
    SUBJECT_EXTRACTED_TEXT_MEAN,
    SUBJECT_MACRO_F1,
    SUBJECT_SHORT_TEXT_MEAN,
    TYPE_MIX_500,
)


def test_criterion_1_macro_reproduction():
    per_field = {fid: PRF(v, v, v) for fid, v in FIELD_F1_GRID[SUBJECT].items()}
    macro = macro_aggregate(per_field)
    assert macro.f1 == pytest.approx(SUBJECT_MACRO_F1, abs=0.0015)
    print(f"criterion 1 (macro reproduction: {macro.f1:.4f} vs {SUBJECT_MACRO_F1}): PASS")


def test_criterion_2_micro_consistency():
    for model, (precision, recall, published_f1) in MICRO_ROWS.items():
        recomputed = f1_score(precision, recall)
        assert recomputed == pytest.approx(published_f1, abs=0.002), model
    print(f"criterion 2 (micro F1 identity on {len(MICRO_ROWS)} aggregate rows): PASS")


def test_criterion_3_category_means():
    means = category_means(FIELD_F1_GRID[SUBJECT], default_catalog())
    assert means["extracted_text"] == pytest.approx(SUBJECT_EXTRACTED_TEXT_MEAN, abs=0.001)
    assert means["short_text"] == pytest.approx(SUBJECT_SHORT_TEXT_MEAN, abs=0.001)
    print(
        "criterion 3 (category means "
        f"extracted_text={means['extracted_text']:.4f}, short_text={means['short_text']:.4f}): PASS"
    )


def test_criterion_4_leader_distribution():
    _, histogram = leader_analysis(FIELD_F1_GRID, SUBJECT, LEADER_MARGIN)
    assert histogram == LEADER_HISTOGRAM
    print(f"criterion 4 (leader histogram {histogram}): PASS")


def test_criterion_5_cost_arithmetic():
    pricing = GpuPricing(GPU_HOURLY_RATE, "whole serving configuration")
    batched = batched_gpu_cost(BATCH_WALL_CLOCK_S, pricing, N_EVAL_DOCS)
    serial = serial_gpu_cost([SERIAL_AVG_LATENCY_S] * N_EVAL_DOCS, pricing)
    assert batched == pytest.approx(PUBLISHED_BATCHED_COST, abs=0.0005)
    assert serial == pytest.approx(PUBLISHED_SERIAL_COST, abs=0.001)
    print(f"criterion 5 (costs batched={batched:.4f}, serial={serial:.4f}): PASS")


def test_criterion_6_fuzzy_anchor_matches_brute_force_oracle():
    rng = random.Random(20260810)
    alphabet = string.ascii_lowercase + "     .,;'"

    def random_doc(n: int) -> str:
        return "".join(rng.choice(alphabet) for _ in range(n))

    trials = 0
    for _ in range(200):
        n = int(math.exp(rng.uniform(math.log(30), math.log(2000))))
        doc = random_doc(n)
        m = rng.randint(4, min(25, n))
        if rng.random() < 0.7:
            start = rng.randrange(0, n - m + 1)
            mutated = list(doc[start : start + m])
            for _ in range(rng.randint(0, 3)):
                op = rng.choice("ids")
                pos = rng.randrange(len(mutated)) if mutated else 0
                if op == "i":
                    mutated.insert(pos, rng.choice(alphabet))
                elif op == "d" and len(mutated) > 1:
                    del mutated[pos]
                else:
                    mutated[pos] = rng.choice(alphabet)
            query = "".join(mutated)
        else:
            query = random_doc(m)
        floor = rng.choice((0.6, 0.75, 0.9))
        produced = fuzzy_anchor(query, doc, floor)
        expected = brute_force_anchor(query, doc, floor)
        assert produced == expected, (query, floor, n)
        trials += 1
    assert trials == 200
    print("criterion 6 (fuzzy anchor == exhaustive window scan, 200 documents): PASS")


def test_criterion_7_tally_matches_case_counting():
    catalog = default_catalog()
    rules = RulesConfig()
    rng = random.Random(7_500)
    closed_spec = catalog["renewal_type"]
    short_spec = catalog["governing_law"]
    text_spec = catalog["termination"]

    def build_case(spec, doc_id, gold_present, pred_present, matches):
        if spec.category.value == "extracted_text":
            gold_span = SupportingSpan("g", CharInterval(100, 200))
            pred_span = SupportingSpan("p", CharInterval(100, 200) if matches else CharInterval(400, 500))
            gold = GoldAnnotation(doc_id, spec.field_id, None, (gold_span,)) if gold_present else None
            pred = (
                FieldExtraction(spec.field_id, True, None, (pred_span,))
                if pred_present
                else FieldExtraction(spec.field_id, False)
            )
        elif spec.option_list:
            gold = GoldAnnotation(doc_id, spec.field_id, spec.option_list[0]) if gold_present else None
            answer = spec.option_list[0] if matches else spec.option_list[1]
            pred = (
                FieldExtraction(spec.field_id, True, answer)
                if pred_present
                else FieldExtraction(spec.field_id, False)
            )
        else:
            gold = GoldAnnotation(doc_id, spec.field_id, "Delaware") if gold_present else None
            answer = "Delaware" if matches else "New York"
            pred = (
                FieldExtraction(spec.field_id, True, answer)
                if pred_present
                else FieldExtraction(spec.field_id, False)
            )
        return pred, gold

    for trial in range(500):
        spec = (closed_spec, short_spec, text_spec)[trial % 3]
        preds, golds = {}, {}
        tp = fp = fn = 0
        for i in range(5):
            doc_id = f"d{i}"
            gold_present = rng.random() < 0.65
            pred_present = rng.random() < 0.65
            matches = rng.random() < 0.5
            pred, gold = build_case(spec, doc_id, gold_present, pred_present, matches)
            preds[doc_id] = pred
            if gold is not None:
                golds[doc_id] = gold
            # Independent oracle: direct case counting.
            if gold_present and pred_present and matches:
                tp += 1
            elif gold_present and pred_present:
                fp += 1
                fn += 1
            elif gold_present:
                fn += 1
            elif pred_present:
                fp += 1
        assert tally_field(preds, golds, spec, rules) == ConfusionCounts(tp, fp, fn), trial
    print("criterion 7 (tally == hand case counting, 500 trials): PASS")


def test_criterion_8_split_integrity():
    docs = []
    for contract_type, count in TYPE_MIX_500.items():
        for i in range(count):
            docs.append(
                load_document(
                    f"{contract_type} document {i}",
                    doc_id=f"{contract_type}-{i}",
                    contract_type=contract_type,
                )
            )
    assert len(docs) == 500
    fractions = {"train": 0.8, "validation": 0.1, "holdout": 0.1}
    all_ids = {d.doc_id for d in docs}
    for seed in range(100):
        assignments = split_dataset(docs, fractions, seed)
        assigned = [a.doc_id for a in assignments]
        assert len(assigned) == 500 and set(assigned) == all_ids  # partition
        split_of = {a.doc_id: a.split for a in assignments}
        for contract_type, count in TYPE_MIX_500.items():
            for split_name, fraction in fractions.items():
                got = sum(
                    1
                    for i in range(count)
                    if split_of[f"{contract_type}-{i}"] == split_name
                )
                assert abs(got - count * fraction) <= 1 + 1e-9, (seed, contract_type, split_name)
    print("criterion 8 (100 seeded splits, disjoint and within one doc per stratum): PASS")


def test_criterion_9_end_to_end_replay_self_consistency(tmp_path):
    catalog = default_catalog()
    rules = RulesConfig()
    docs, gold_by_doc = build_corpus(9_001, catalog, 8)
    adapter = ReplayAdapter("replay-echo", tmp_path / "fixtures")
    for doc in docs:
        bundle = build_prompt(doc, catalog)
        adapter.store(
            bundle,
            wire_response(gold_by_doc[doc.doc_id], catalog),
            prompt_tokens=10_000,
            completion_tokens=1_200,
            latency_s=3.0,
        )
    result = run_matrix(docs, [adapter], catalog, concurrency_limit=4)
    assert len(result.records) == len(docs)
    parsed, parse_issues = parse_records(result.records, catalog)
    assert parse_issues == {}

    doc_index = {d.doc_id: d for d in docs}
    total_violations = 0
    anchored = []
    for record in parsed:
        report = validate_extraction(record, catalog, doc_index[record.doc_id], rules=rules)
        total_violations += len(report.violations)
        anchored.append(report.anchored_record)
    assert total_violations == 0

    golds = [g for by_field in gold_by_doc.values() for g in by_field.values()]
    board = build_scoreboard(anchored, golds, catalog, rules)
    assert board.micro == PRF(1.0, 1.0, 1.0)
    print("criterion 9 (replay echo run: micro F1 = 1.0, zero violations): PASS")


def test_criterion_10_prevalence_table(tmp_path):
    catalog = default_catalog()
    n_docs = 200
    docs = []
    labels = []
    for i in range(n_docs):
        clause = f"Clause {i}: termination rights apply here."
        filler = " General provisions follow."
        text = clause + filler
        doc = load_document(text, doc_id=f"d{i:03d}", contract_type="NDA")
        docs.append(doc)
        if i < 197:  # plant the field in 197 of 200 documents
            labels.append(
                AcceptedLabel(
                    doc_id=doc.doc_id,
                    field_id="termination",
                    display_answer=None,
                    spans=(SupportingSpan(clause, CharInterval(0, len(clause)), 1.0),),
                    generator_model_id="gen",
                    verdicts=(),
                )
            )
        if i < 100:  # a second field at exactly half prevalence
            labels.append(
                AcceptedLabel(
                    doc_id=doc.doc_id,
                    field_id="governing_law",
                    display_answer="Delaware",
                    spans=(),
                    generator_model_id="gen",
                    verdicts=(),
                )
            )
    splits = [SplitAssignment(doc.doc_id, "train") for doc in docs]
    result = export_corpus(labels, splits, tmp_path / "out", {d.doc_id: d for d in docs})
    train = result.manifest["splits"]["train"]
    assert train["documents"] == 200
    assert train["field_counts"]["termination"] == 197
    assert train["field_prevalence_pct"]["termination"] == 98.5
    assert train["field_prevalence_pct"]["governing_law"] == 50.0
    print("criterion 10 (export manifest prevalence 197/200 -> 98.5%): PASS")
