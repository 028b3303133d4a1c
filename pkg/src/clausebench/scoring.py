"""Confusion tallies, precision/recall/F1, macro/micro aggregation, and leader analysis.

One (document, field) pair is one labelled instance. A gold-present instance
with a wrong prediction costs both a false positive and a false negative; a
prediction where gold is absent is a hallucination and costs a false positive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .matchers import RulesConfig, match_field
from .schema import (
    ExtractionRecord,
    FieldCatalog,
    FieldExtraction,
    FieldSpec,
    GoldAnnotation,
    catalog_hash,
)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def empty(self) -> bool:
        return self.tp == 0 and self.fp == 0 and self.fn == 0


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def field_prf(counts: ConfusionCounts) -> PRF:
    """P, R, and harmonic F1 with the zero-denominator convention of 0."""
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    return PRF(precision, recall, f1_score(precision, recall))


def tally_field(
    preds: Mapping[str, FieldExtraction | None],
    golds: Mapping[str, GoldAnnotation | None],
    spec: FieldSpec,
    rules: RulesConfig,
) -> ConfusionCounts:
    """Confusion counts for one field across documents (keyed by doc_id).

    Per document: gold present and prediction matches -> tp; gold present and
    prediction absent or unmatched -> fn (an unmatched-but-present prediction
    additionally costs fp); gold absent but predicted -> fp; both absent -> no
    count.
    """
    for ext in preds.values():
        if ext is not None and ext.field_id != spec.field_id:
            raise ValueError(f"prediction for {ext.field_id!r} mixed into {spec.field_id!r} tally")
    for gold in golds.values():
        if gold is not None and gold.field_id != spec.field_id:
            raise ValueError(f"gold for {gold.field_id!r} mixed into {spec.field_id!r} tally")

    tp = fp = fn = 0
    for doc_id in set(preds) | set(golds):
        pred = preds.get(doc_id)
        gold = golds.get(doc_id)
        predicted = pred is not None and pred.present
        if gold is None:
            if predicted:
                fp += 1
            continue
        if not predicted:
            fn += 1
            continue
        if match_field(pred, gold, spec, rules).matched:
            tp += 1
        else:
            fp += 1
            fn += 1
    return ConfusionCounts(tp, fp, fn)


def macro_aggregate(per_field: Mapping[str, PRF]) -> PRF:
    """Unweighted arithmetic mean of per-field P, R, and F1, independently.

    Macro F1 is the mean of the field F1s, not the harmonic mean of macro P
    and macro R.
    """
    if not per_field:
        raise ValueError("macro aggregation needs at least one field")
    n = len(per_field)
    return PRF(
        sum(v.precision for v in per_field.values()) / n,
        sum(v.recall for v in per_field.values()) / n,
        sum(v.f1 for v in per_field.values()) / n,
    )


def micro_aggregate(per_field_counts: Mapping[str, ConfusionCounts]) -> PRF:
    """Pool instances across fields: sum all counts, then compute P/R/F1."""
    if not per_field_counts:
        raise ValueError("micro aggregation needs at least one field")
    total = ConfusionCounts()
    for counts in per_field_counts.values():
        total = total + counts
    return field_prf(total)


def category_means(per_field_f1: Mapping[str, float], catalog: FieldCatalog) -> dict[str, float]:
    """Unweighted mean F1 per field category, over the fields actually scored."""
    buckets: dict[str, list[float]] = {}
    for field_id, value in per_field_f1.items():
        try:
            spec = catalog[field_id]
        except KeyError:
            raise ValueError(f"field {field_id!r} not in catalog") from None
        buckets.setdefault(spec.category.value, []).append(value)
    return {cat: sum(vals) / len(vals) for cat, vals in buckets.items()}


LEADER_BUCKETS = ("outright_leader", "tied_leader", "within_margin", "trails_beyond_margin")


@dataclass(frozen=True)
class LeaderBucket:
    """bucket plus the subject's signed lead over the best competing model."""

    bucket: str
    margin: float


def leader_analysis(
    grid: Mapping[str, Mapping[str, float]],
    subject_model: str,
    margin: float = 0.05,
) -> tuple[dict[str, LeaderBucket], dict[str, int]]:
    """Bucket every field by how the subject compares to the best other model.

    grid maps model -> field -> F1 and must be complete over fields x models.
    """
    if subject_model not in grid:
        raise ValueError(f"subject model {subject_model!r} not in grid")
    fields = set(grid[subject_model])
    for model, row in grid.items():
        if set(row) != fields:
            raise ValueError(f"grid incomplete: {model!r} covers a different field set")
    others = [m for m in grid if m != subject_model]
    if not others:
        raise ValueError("leader analysis needs at least one competing model")

    assignments: dict[str, LeaderBucket] = {}
    histogram = {name: 0 for name in LEADER_BUCKETS}
    for field_id in sorted(fields):
        subject = grid[subject_model][field_id]
        best_other = max(grid[m][field_id] for m in others)
        lead = subject - best_other
        if lead > 0:
            bucket = "outright_leader"
        elif lead == 0:
            bucket = "tied_leader"
        elif -lead <= margin:
            bucket = "within_margin"
        else:
            bucket = "trails_beyond_margin"
        assignments[field_id] = LeaderBucket(bucket, lead)
        histogram[bucket] += 1
    return assignments, histogram


@dataclass(frozen=True)
class FieldScore:
    counts: ConfusionCounts
    prf: PRF
    degenerate: bool


@dataclass
class ScoreBoard:
    model_id: str
    per_field: dict[str, FieldScore]
    macro: PRF
    micro: PRF
    per_category: dict[str, float]
    config_echo: dict[str, Any]
    n_documents: int = 0
    n_gold_instances: int = 0

    @property
    def field_f1(self) -> dict[str, float]:
        return {fid: fs.prf.f1 for fid, fs in self.per_field.items()}


def build_scoreboard(
    records: Sequence[ExtractionRecord],
    golds: Sequence[GoldAnnotation],
    catalog: FieldCatalog,
    rules: RulesConfig | None = None,
    *,
    model_id: str | None = None,
) -> ScoreBoard:
    """Score one model's records against the gold set.

    Fields with no gold instance and no prediction anywhere are flagged
    degenerate and excluded from the macro and category means, so undefined
    scores never masquerade as zeros.
    """
    rules = rules or RulesConfig()
    if model_id is None:
        models = {r.model_id for r in records}
        if len(models) > 1:
            raise ValueError(f"records span multiple models: {sorted(models)}")
        model_id = next(iter(models)) if models else ""

    by_doc: dict[str, ExtractionRecord] = {}
    for record in records:
        if record.doc_id in by_doc:
            raise ValueError(f"multiple records for document {record.doc_id!r}")
        by_doc[record.doc_id] = record
    gold_index: dict[tuple[str, str], GoldAnnotation] = {}
    for gold in golds:
        key = (gold.doc_id, gold.field_id)
        if key in gold_index:
            raise ValueError(f"duplicate gold annotation for {key}")
        gold_index[key] = gold

    doc_ids = sorted(set(by_doc) | {g.doc_id for g in golds})
    per_field: dict[str, FieldScore] = {}
    for spec in catalog.fields:
        preds = {
            doc_id: by_doc[doc_id].extractions.get(spec.field_id)
            for doc_id in doc_ids
            if doc_id in by_doc
        }
        field_golds = {
            doc_id: gold_index[(doc_id, spec.field_id)]
            for doc_id in doc_ids
            if (doc_id, spec.field_id) in gold_index
        }
        counts = tally_field(preds, field_golds, spec, rules)
        per_field[spec.field_id] = FieldScore(counts, field_prf(counts), counts.empty)

    scored = {fid: fs for fid, fs in per_field.items() if not fs.degenerate}
    macro = macro_aggregate({fid: fs.prf for fid, fs in scored.items()}) if scored else PRF(0.0, 0.0, 0.0)
    micro = micro_aggregate({fid: fs.counts for fid, fs in per_field.items()})
    categories = category_means({fid: fs.prf.f1 for fid, fs in scored.items()}, catalog)
    echo = dict(rules.to_dict())
    echo["wrong_value_counts"] = "fp_and_fn"
    echo["catalog_hash"] = catalog_hash(catalog)
    return ScoreBoard(
        model_id=model_id,
        per_field=per_field,
        macro=macro,
        micro=micro,
        per_category=categories,
        config_echo=echo,
        n_documents=len(doc_ids),
        n_gold_instances=len(golds),
    )


def _prf_to_dict(prf: PRF) -> dict[str, float]:
    return {"precision": prf.precision, "recall": prf.recall, "f1": prf.f1}


def _prf_from_dict(data: Mapping[str, float]) -> PRF:
    return PRF(float(data["precision"]), float(data["recall"]), float(data["f1"]))


def scoreboard_to_dict(board: ScoreBoard) -> dict[str, Any]:
    return {
        "format_version": 1,
        "model_id": board.model_id,
        "n_documents": board.n_documents,
        "n_gold_instances": board.n_gold_instances,
        "per_field": {
            fid: {
                "tp": fs.counts.tp,
                "fp": fs.counts.fp,
                "fn": fs.counts.fn,
                "degenerate": fs.degenerate,
                **_prf_to_dict(fs.prf),
            }
            for fid, fs in board.per_field.items()
        },
        "macro": _prf_to_dict(board.macro),
        "micro": _prf_to_dict(board.micro),
        "per_category": dict(board.per_category),
        "config_echo": dict(board.config_echo),
    }


def scoreboard_from_dict(data: Mapping[str, Any]) -> ScoreBoard:
    per_field = {
        fid: FieldScore(
            ConfusionCounts(int(entry["tp"]), int(entry["fp"]), int(entry["fn"])),
            _prf_from_dict(entry),
            bool(entry.get("degenerate", False)),
        )
        for fid, entry in data["per_field"].items()
    }
    return ScoreBoard(
        model_id=data["model_id"],
        per_field=per_field,
        macro=_prf_from_dict(data["macro"]),
        micro=_prf_from_dict(data["micro"]),
        per_category={k: float(v) for k, v in data.get("per_category", {}).items()},
        config_echo=dict(data.get("config_echo", {})),
        n_documents=int(data.get("n_documents", 0)),
        n_gold_instances=int(data.get("n_gold_instances", 0)),
    )


def write_scoreboard(board: ScoreBoard, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scoreboard_to_dict(board), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_scoreboard(path: str | Path) -> ScoreBoard:
    with open(path, encoding="utf-8") as handle:
        return scoreboard_from_dict(json.load(handle))
