"""clausebench: an evaluation harness for span-grounded contract field extraction.

A library (plus a small CLI) covering the full protocol: the 26-field catalog
with dual answer+span outputs, per-category matching rules, fuzzy span
anchoring, macro/micro scoring with leader-margin analysis, inference cost
accounting, and a synthetic-label pipeline with judge filtering.
"""

from .corpus import (
    Document,
    PoolFilterPolicy,
    SplitAssignment,
    TokenizerConfig,
    count_tokens,
    filter_pool,
    load_corpus,
    load_document,
    save_corpus,
    split_dataset,
)
from .econ import (
    ApiPricing,
    CostReport,
    GpuPricing,
    api_cost,
    batched_gpu_cost,
    latency_summary,
    serial_gpu_cost,
)
from .matchers import (
    AnchorResult,
    MatchOutcome,
    MatchRule,
    RulesConfig,
    fuzzy_anchor,
    match_field,
    span_overlap,
    substring_containment,
)
from .modelgate import (
    FnAdapter,
    HttpChatAdapter,
    PromptBundle,
    PromptTemplate,
    ReplayAdapter,
    RunRecord,
    StaticAdapter,
    UsageRecord,
    build_prompt,
    invoke,
    run_matrix,
)
from .schema import (
    CharInterval,
    ExtractionRecord,
    FieldCatalog,
    FieldCategory,
    FieldExtraction,
    FieldSpec,
    GoldAnnotation,
    SupportingSpan,
    default_catalog,
    load_field_catalog,
    parse_model_output,
)
from .scoring import (
    ConfusionCounts,
    PRF,
    ScoreBoard,
    build_scoreboard,
    category_means,
    field_prf,
    leader_analysis,
    macro_aggregate,
    micro_aggregate,
    tally_field,
)
from .validation import ValidationReport, validate_extraction

__version__ = "0.1.0"
