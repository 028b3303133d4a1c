"""Per-document inference economics under three costing modes.

Self-hosted GPU costs come in two flavors. The batched figure divides the
batch wall clock across documents (throughput-oriented production). The
serial figure sums per-document runtimes, approximating one-at-a-time
processing. API costs price observed token usage per the provider sheet.
"""

from clausebench.econ import (
    ApiPricing,
    GpuPricing,
    api_cost_report,
    gpu_cost_reports,
)
from clausebench.reporting import render_cost_table

pricing = GpuPricing(hourly_rate=4.01, rate_basis="whole serving configuration")

# A 24-document batch finished in 387 seconds of wall clock; batching pushed
# per-document latency to ~314 s, while serial one-at-a-time runs averaged
# ~132 s per document.
batched = gpu_cost_reports(
    "self-hosted-extractor",
    [313.69] * 24,
    pricing,
    batch_wall_clock_s=387.0,
)[0]
serial = gpu_cost_reports("self-hosted-extractor", [131.55] * 24, pricing)[0]

api = api_cost_report(
    "hosted-api-model",
    [(41_000, 2_600)] * 24,  # (prompt, completion) tokens per document
    ApiPricing(input_rate=1.25, output_rate=10.0),
    latencies=[99.7] * 24,
)

print(render_cost_table([batched, serial, api]))
print()
print(
    f"recompute the batched figure by hand: "
    f"{batched.inputs_echo['batch_wall_clock_s']} s / 3600 "
    f"* {batched.inputs_echo['hourly_rate']} / {batched.inputs_echo['n_docs']} docs "
    f"= {387.0 / 3600 * 4.01 / 24:.4f}"
)
