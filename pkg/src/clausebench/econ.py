"""Per-document cost and latency accounting.

Three costing modes: batched self-hosted GPU (batch wall clock times the
hourly rate, split across documents), serial self-hosted GPU (summed
per-document runtimes), and token-priced API usage. All functions are pure
and every report echoes the inputs needed to recompute it by hand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class GpuPricing:
    hourly_rate: float
    rate_basis: str = ""

    def __post_init__(self) -> None:
        if self.hourly_rate <= 0:
            raise ValueError("hourly_rate must be positive")


@dataclass(frozen=True)
class ApiPricing:
    input_rate: float  # currency per million prompt tokens
    output_rate: float  # currency per million completion tokens

    def __post_init__(self) -> None:
        if self.input_rate < 0 or self.output_rate < 0:
            raise ValueError("API rates must be non-negative")


@dataclass(frozen=True)
class CostReport:
    model_id: str
    mode: str  # batched_gpu | serial_gpu | api
    per_doc_cost: float
    avg_latency_s: float | None = None
    batch_wall_clock_s: float | None = None
    inputs_echo: Mapping[str, Any] = field(default_factory=dict)


def batched_gpu_cost(batch_wall_clock_s: float, pricing: GpuPricing, n_docs: int) -> float:
    if batch_wall_clock_s <= 0:
        raise ValueError("batch wall clock must be positive")
    if n_docs <= 0:
        raise ValueError("n_docs must be positive")
    return batch_wall_clock_s / SECONDS_PER_HOUR * pricing.hourly_rate / n_docs


def serial_gpu_cost(per_doc_latencies: Sequence[float], pricing: GpuPricing) -> float:
    if not per_doc_latencies:
        raise ValueError("need at least one latency")
    if any(lat <= 0 for lat in per_doc_latencies):
        raise ValueError("latencies must be positive")
    total_hours = sum(per_doc_latencies) / SECONDS_PER_HOUR
    return total_hours * pricing.hourly_rate / len(per_doc_latencies)


def api_cost(prompt_tokens: int, completion_tokens: int, pricing: ApiPricing) -> float:
    if prompt_tokens < 0 or completion_tokens < 0:
        raise ValueError("token counts must be non-negative")
    return prompt_tokens / 1e6 * pricing.input_rate + completion_tokens / 1e6 * pricing.output_rate


def latency_summary(
    latencies: Sequence[float],
    batch_wall_clock_s: float | None = None,
) -> tuple[float, float | None]:
    """Mean per-call latency plus the separately measured batch wall clock."""
    if not latencies:
        raise ValueError("need at least one latency")
    return sum(latencies) / len(latencies), batch_wall_clock_s


def gpu_cost_reports(
    model_id: str,
    latencies: Sequence[float],
    pricing: GpuPricing,
    *,
    batch_wall_clock_s: float | None = None,
) -> list[CostReport]:
    """Serial report always; batched report too when a wall clock was measured."""
    avg, wall = latency_summary(latencies, batch_wall_clock_s)
    reports = []
    if wall is not None:
        reports.append(
            CostReport(
                model_id=model_id,
                mode="batched_gpu",
                per_doc_cost=batched_gpu_cost(wall, pricing, len(latencies)),
                avg_latency_s=avg,
                batch_wall_clock_s=wall,
                inputs_echo={
                    "hourly_rate": pricing.hourly_rate,
                    "rate_basis": pricing.rate_basis,
                    "batch_wall_clock_s": wall,
                    "n_docs": len(latencies),
                },
            )
        )
    reports.append(
        CostReport(
            model_id=model_id,
            mode="serial_gpu",
            per_doc_cost=serial_gpu_cost(latencies, pricing),
            avg_latency_s=avg,
            batch_wall_clock_s=wall,
            inputs_echo={
                "hourly_rate": pricing.hourly_rate,
                "rate_basis": pricing.rate_basis,
                "sum_latencies_s": sum(latencies),
                "n_docs": len(latencies),
            },
        )
    )
    return reports


def api_cost_report(
    model_id: str,
    usages: Sequence[tuple[int, int]],
    pricing: ApiPricing,
    *,
    latencies: Sequence[float] | None = None,
) -> CostReport:
    """Mean per-document API cost over a usage ledger of (prompt, completion) tokens."""
    if not usages:
        raise ValueError("need at least one usage record")
    total = sum(api_cost(p, c, pricing) for p, c in usages)
    avg_latency = sum(latencies) / len(latencies) if latencies else None
    return CostReport(
        model_id=model_id,
        mode="api",
        per_doc_cost=total / len(usages),
        avg_latency_s=avg_latency,
        inputs_echo={
            "input_rate": pricing.input_rate,
            "output_rate": pricing.output_rate,
            "prompt_tokens": sum(p for p, _ in usages),
            "completion_tokens": sum(c for _, c in usages),
            "n_docs": len(usages),
        },
    )


def cost_report_to_dict(report: CostReport) -> dict[str, Any]:
    return {
        "model_id": report.model_id,
        "mode": report.mode,
        "per_doc_cost": report.per_doc_cost,
        "avg_latency_s": report.avg_latency_s,
        "batch_wall_clock_s": report.batch_wall_clock_s,
        "inputs_echo": dict(report.inputs_echo),
    }


def cost_report_from_dict(data: Mapping[str, Any]) -> CostReport:
    return CostReport(
        model_id=data["model_id"],
        mode=data["mode"],
        per_doc_cost=float(data["per_doc_cost"]),
        avg_latency_s=data.get("avg_latency_s"),
        batch_wall_clock_s=data.get("batch_wall_clock_s"),
        inputs_echo=dict(data.get("inputs_echo", {})),
    )


def load_price_sheet(path: str | Path) -> dict[str, GpuPricing | ApiPricing]:
    """Price sheet: per model either a GPU hourly rate or API token rates."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    sheet: dict[str, GpuPricing | ApiPricing] = {}
    for model_id, entry in data.get("models", {}).items():
        mode = entry.get("mode")
        if mode == "gpu":
            sheet[model_id] = GpuPricing(float(entry["hourly_rate"]), entry.get("rate_basis", ""))
        elif mode == "api":
            sheet[model_id] = ApiPricing(float(entry["input_rate"]), float(entry["output_rate"]))
        else:
            raise ValueError(f"{path}: model {model_id!r} has unknown pricing mode {mode!r}")
    return sheet
