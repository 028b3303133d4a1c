"""Leaderboards, per-field grids, leader-margin summaries, and cost tables.

Tables display three decimals like the published results; the JSON form keeps
full precision so rendered reports round-trip to the underlying values. Two
reports built from equal manifests and inputs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .econ import CostReport, cost_report_to_dict
from .schema import CATEGORY_ORDER, FieldCatalog, default_catalog
from .scoring import PRF, ScoreBoard, leader_analysis


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    timestamp: str
    corpus_hash: str
    catalog_hash: str
    rules_echo: Mapping[str, Any] = field(default_factory=dict)
    models: tuple[str, ...] = ()
    seed: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "corpus_hash": self.corpus_hash,
            "catalog_hash": self.catalog_hash,
            "rules_echo": dict(self.rules_echo),
            "models": list(self.models),
            "seed": self.seed,
        }


def manifest_from_dict(data: Mapping[str, Any]) -> RunManifest:
    return RunManifest(
        run_id=data.get("run_id", ""),
        timestamp=data.get("timestamp", ""),
        corpus_hash=data.get("corpus_hash", ""),
        catalog_hash=data.get("catalog_hash", ""),
        rules_echo=dict(data.get("rules_echo", {})),
        models=tuple(data.get("models", ())),
        seed=data.get("seed"),
    )


@dataclass
class ReportBundle:
    """Everything a report renders: per-model aggregates, the field grid, costs."""

    aggregates: dict[str, dict[str, PRF]]  # model -> {"micro": PRF, "macro": PRF}
    field_f1: dict[str, dict[str, float]]  # model -> field -> F1
    catalog: FieldCatalog
    manifest: RunManifest | None = None
    cost_reports: list[CostReport] = field(default_factory=list)

    @classmethod
    def from_scoreboards(
        cls,
        boards: Sequence[ScoreBoard],
        catalog: FieldCatalog,
        *,
        manifest: RunManifest | None = None,
        cost_reports: Sequence[CostReport] = (),
    ) -> "ReportBundle":
        if not boards:
            raise ValueError("need at least one scoreboard")
        hashes = {b.config_echo.get("catalog_hash") for b in boards}
        if len(hashes) > 1:
            raise ValueError("scoreboards were produced against different catalogs")
        aggregates = {b.model_id: {"micro": b.micro, "macro": b.macro} for b in boards}
        field_f1 = {b.model_id: b.field_f1 for b in boards}
        return cls(
            aggregates=aggregates,
            field_f1=field_f1,
            catalog=catalog,
            manifest=manifest,
            cost_reports=list(cost_reports),
        )

    @classmethod
    def from_grid(
        cls,
        field_f1: Mapping[str, Mapping[str, float]],
        *,
        aggregates: Mapping[str, Mapping[str, Mapping[str, float]]] | None = None,
        catalog: FieldCatalog | None = None,
        manifest: RunManifest | None = None,
    ) -> "ReportBundle":
        catalog = catalog or default_catalog()
        prf_aggregates: dict[str, dict[str, PRF]] = {}
        for model, entry in (aggregates or {}).items():
            prf_aggregates[model] = {
                kind: PRF(float(v["precision"]), float(v["recall"]), float(v["f1"]))
                for kind, v in entry.items()
            }
        return cls(
            aggregates=prf_aggregates,
            field_f1={m: dict(row) for m, row in field_f1.items()},
            catalog=catalog,
            manifest=manifest,
        )


def _leaderboard_rows(bundle: ReportBundle, which: str) -> list[tuple[str, PRF]]:
    rows = [(model, entry[which]) for model, entry in bundle.aggregates.items() if which in entry]
    if not rows:
        raise ValueError(f"no {which} aggregates to render")
    rows.sort(key=lambda item: (-item[1].f1, item[0]))
    return rows


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells: Sequence[str]) -> str:
        return "  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def _csv(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def render_leaderboard(bundle: ReportBundle, which: str = "micro", fmt: str = "table") -> str:
    """One row per model sorted by F1 descending, ties broken by model id."""
    rows = _leaderboard_rows(bundle, which)
    if fmt == "json":
        return json.dumps(
            [
                {"model_id": m, "precision": p.precision, "recall": p.recall, "f1": p.f1}
                for m, p in rows
            ],
            indent=2,
        )
    header = ["model", "precision", "recall", "f1"]
    cells = [[m, f"{p.precision:.3f}", f"{p.recall:.3f}", f"{p.f1:.3f}"] for m, p in rows]
    return _csv(header, cells) if fmt == "csv" else _table(header, cells)


def _grid_models(bundle: ReportBundle) -> list[str]:
    return sorted(bundle.field_f1)


def render_field_grid(bundle: ReportBundle, fmt: str = "table") -> str:
    """26 rows by |models| columns of F1, grouped by category in catalog order."""
    models = _grid_models(bundle)
    if not models:
        raise ValueError("no per-field results to render")
    for spec in bundle.catalog.fields:
        for model in models:
            if spec.field_id not in bundle.field_f1[model]:
                raise ValueError(f"grid missing cell ({spec.field_id}, {model})")
    if fmt == "json":
        return json.dumps(
            {m: {fid: bundle.field_f1[m][fid] for fid in bundle.catalog.field_ids} for m in models},
            indent=2,
        )
    header = ["field", "category"] + models
    rows = []
    for category in CATEGORY_ORDER:
        for spec in bundle.catalog.fields:
            if spec.category is not category:
                continue
            rows.append(
                [spec.display_name, category.value]
                + [f"{bundle.field_f1[m][spec.field_id]:.3f}" for m in models]
            )
    if fmt == "csv":
        return _csv(header, rows)
    # Insert category subheadings for the aligned-table form.
    lines = []
    for category in CATEGORY_ORDER:
        block = [r for r in rows if r[1] == category.value]
        if not block:
            continue
        lines.append(f"[{category.value}]")
        lines.append(_table(["field"] + models, [[r[0]] + r[2:] for r in block]))
        lines.append("")
    return "\n".join(lines).rstrip()


def render_leader_summary(
    bundle: ReportBundle,
    subject_model: str,
    margin: float = 0.05,
    fmt: str = "table",
) -> str:
    assignments, histogram = leader_analysis(bundle.field_f1, subject_model, margin)
    if fmt == "json":
        return json.dumps(
            {
                "subject": subject_model,
                "margin": margin,
                "histogram": histogram,
                "fields": {f: {"bucket": b.bucket, "margin": b.margin} for f, b in assignments.items()},
            },
            indent=2,
        )
    counts = " / ".join(str(histogram[name]) for name in ("outright_leader", "tied_leader", "within_margin", "trails_beyond_margin"))
    lines = [
        f"leader analysis for {subject_model} (margin {margin:g})",
        f"outright / tied / within / trails: {counts}",
    ]
    for name in ("outright_leader", "tied_leader", "within_margin", "trails_beyond_margin"):
        members = sorted(f for f, b in assignments.items() if b.bucket == name)
        lines.append(f"  {name} ({histogram[name]}): {', '.join(members) if members else '-'}")
    return "\n".join(lines)


def render_cost_table(cost_reports: Sequence[CostReport], fmt: str = "table") -> str:
    if not cost_reports:
        raise ValueError("no cost reports to render")
    rows = sorted(cost_reports, key=lambda r: (r.per_doc_cost, r.model_id))
    if fmt == "json":
        return json.dumps([cost_report_to_dict(r) for r in rows], indent=2)
    header = ["model", "mode", "cost/doc", "avg latency (s)", "batch wall clock (s)"]
    cells = [
        [
            r.model_id,
            r.mode,
            f"{r.per_doc_cost:.4f}",
            f"{r.avg_latency_s:.2f}" if r.avg_latency_s is not None else "-",
            f"{r.batch_wall_clock_s:.2f}" if r.batch_wall_clock_s is not None else "-",
        ]
        for r in rows
    ]
    return _csv(header, cells) if fmt == "csv" else _table(header, cells)


def report_to_dict(
    bundle: ReportBundle,
    *,
    subject_model: str | None = None,
    margin: float = 0.05,
) -> dict[str, Any]:
    """Machine-readable report with full precision; round-trips the inputs."""
    out: dict[str, Any] = {
        "format_version": 1,
        "aggregates": {
            model: {
                kind: {"precision": prf.precision, "recall": prf.recall, "f1": prf.f1}
                for kind, prf in entry.items()
            }
            for model, entry in bundle.aggregates.items()
        },
        "field_f1": {m: dict(row) for m, row in bundle.field_f1.items()},
        "cost_reports": [cost_report_to_dict(r) for r in bundle.cost_reports],
    }
    if bundle.manifest is not None:
        out["manifest"] = bundle.manifest.to_dict()
    if subject_model is not None and bundle.field_f1:
        assignments, histogram = leader_analysis(bundle.field_f1, subject_model, margin)
        out["leader_analysis"] = {
            "subject": subject_model,
            "margin": margin,
            "histogram": histogram,
            "fields": {f: {"bucket": b.bucket, "margin": b.margin} for f, b in assignments.items()},
        }
    return out


def render_report(
    bundle: ReportBundle,
    *,
    subject_model: str | None = None,
    margin: float = 0.05,
    fmt: str = "table",
) -> str:
    """The full human-readable report, or the machine form with fmt='json'."""
    if fmt == "json":
        return json.dumps(
            report_to_dict(bundle, subject_model=subject_model, margin=margin),
            indent=2,
            sort_keys=True,
        )
    sections = []
    if bundle.manifest is not None:
        sections.append(
            "run manifest: "
            + json.dumps(bundle.manifest.to_dict(), sort_keys=True)
        )
    if bundle.aggregates:
        for which in ("micro", "macro"):
            if any(which in entry for entry in bundle.aggregates.values()):
                sections.append(f"== {which}-averaged leaderboard ==")
                sections.append(render_leaderboard(bundle, which, fmt))
    if bundle.field_f1:
        sections.append("== per-field F1 ==")
        sections.append(render_field_grid(bundle, fmt))
        if subject_model is not None:
            sections.append("== leader margins ==")
            sections.append(render_leader_summary(bundle, subject_model, margin, fmt))
    if bundle.cost_reports:
        sections.append("== cost and latency ==")
        sections.append(render_cost_table(bundle.cost_reports, fmt))
    return "\n\n".join(sections)


def read_grid(path: str | Path) -> dict[str, dict[str, float]]:
    """A grid file maps model -> field -> F1."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    return {model: {fid: float(v) for fid, v in row.items()} for model, row in data.items()}


def read_aggregates(path: str | Path) -> dict[str, dict[str, dict[str, float]]]:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)
