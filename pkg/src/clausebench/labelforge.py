"""Synthetic training-label pipeline: generate, anchor, judge, export.

Candidates come from a generator model adapter reusing the extraction prompt
and parser. Quoted spans are fuzzy-anchored back to the source text before
judging, so judges score real context; candidates with any unanchorable span
never reach the panel. Accepted labels export in the gold-annotation format,
which lets the scoring pipeline double as a corpus QA tool.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol, Sequence

from .corpus import Document, SplitAssignment
from .matchers import fuzzy_anchor
from .modelgate import (
    ModelAdapter,
    PromptTemplate,
    adapter_from_config,
    build_prompt,
    invoke,
)
from .schema import (
    FieldCatalog,
    FieldSpec,
    GoldAnnotation,
    SupportingSpan,
    gold_to_dict,
    parse_model_output,
)
from ._jsonl import write_jsonl

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateLabel:
    doc_id: str
    field_id: str
    display_answer: str | None
    quoted_spans: tuple[str, ...]
    generator_model_id: str

    def __post_init__(self) -> None:
        if self.display_answer is None and not self.quoted_spans:
            raise ValueError(f"{self.field_id}: candidate without answer or spans")


@dataclass(frozen=True)
class AnchoredCandidate:
    """A candidate whose quoted spans all anchored to the source document.

    Span quoted_text is snapped to the document text at the anchored interval;
    the generator's original quote and the anchor similarity are kept for audit.
    """

    candidate: CandidateLabel
    spans: tuple[SupportingSpan, ...]
    original_quotes: tuple[str, ...]

    @property
    def doc_id(self) -> str:
        return self.candidate.doc_id

    @property
    def field_id(self) -> str:
        return self.candidate.field_id


@dataclass(frozen=True)
class JudgeVerdict:
    judge_id: str
    answer_quality: float
    span_validity: float
    accept: bool


@dataclass(frozen=True)
class AcceptedLabel:
    doc_id: str
    field_id: str
    display_answer: str | None
    spans: tuple[SupportingSpan, ...]
    generator_model_id: str
    verdicts: tuple[JudgeVerdict, ...]


@dataclass(frozen=True)
class RejectedLabel:
    candidate: CandidateLabel
    reason: str
    verdicts: tuple[JudgeVerdict, ...] = ()


def generate_candidates(
    doc: Document,
    catalog: FieldCatalog,
    generator: ModelAdapter,
    *,
    template: PromptTemplate | None = None,
) -> list[CandidateLabel]:
    """At most one candidate per field; a generator failure yields none."""
    bundle = build_prompt(doc, catalog, template)
    record = invoke(generator, bundle)
    if record.error is not None:
        logger.warning("generator failed for %s: %s", doc.doc_id, record.error)
        return []
    parsed, _ = parse_model_output(
        record.raw_response, catalog, doc_id=doc.doc_id, model_id=generator.model_id
    )
    candidates = []
    for field_id, ext in parsed.extractions.items():
        if not ext.present:
            continue
        candidates.append(
            CandidateLabel(
                doc_id=doc.doc_id,
                field_id=field_id,
                display_answer=ext.display_answer,
                quoted_spans=tuple(s.quoted_text for s in ext.spans),
                generator_model_id=generator.model_id,
            )
        )
    return candidates


def anchor_labels(
    candidates: Sequence[CandidateLabel],
    doc: Document,
    min_similarity: float = 0.9,
) -> tuple[list[AnchoredCandidate], list[RejectedLabel]]:
    """Anchor every quoted span; a candidate with any unanchorable span is dropped."""
    anchored: list[AnchoredCandidate] = []
    dropped: list[RejectedLabel] = []
    for candidate in candidates:
        if candidate.doc_id != doc.doc_id:
            raise ValueError(f"candidate for {candidate.doc_id!r} anchored against {doc.doc_id!r}")
        spans: list[SupportingSpan] = []
        failed = None
        for quote in candidate.quoted_spans:
            result = fuzzy_anchor(quote, doc.text, min_similarity)
            if result is None:
                failed = quote
                break
            spans.append(
                SupportingSpan(
                    quoted_text=doc.text[result.interval.start : result.interval.end],
                    interval=result.interval,
                    anchor_similarity=result.similarity,
                )
            )
        if failed is not None:
            dropped.append(RejectedLabel(candidate, f"unanchorable span: {failed[:60]!r}"))
            continue
        anchored.append(
            AnchoredCandidate(
                candidate=candidate,
                spans=tuple(spans),
                original_quotes=candidate.quoted_spans,
            )
        )
    return anchored, dropped


class JudgeError(RuntimeError):
    pass


class JudgeAdapter(Protocol):
    judge_id: str

    def score(self, candidate: AnchoredCandidate, spec: FieldSpec, context: str) -> tuple[float, float]:
        """Return (answer_quality, span_validity), each in [0, 1]."""
        ...


class StaticJudge:
    def __init__(self, judge_id: str, answer_quality: float, span_validity: float) -> None:
        self.judge_id = judge_id
        self.answer_quality = answer_quality
        self.span_validity = span_validity

    def score(self, candidate: AnchoredCandidate, spec: FieldSpec, context: str) -> tuple[float, float]:
        return self.answer_quality, self.span_validity


class FnJudge:
    def __init__(
        self,
        judge_id: str,
        fn: Callable[[AnchoredCandidate, FieldSpec, str], tuple[float, float]],
    ) -> None:
        self.judge_id = judge_id
        self.fn = fn

    def score(self, candidate: AnchoredCandidate, spec: FieldSpec, context: str) -> tuple[float, float]:
        return self.fn(candidate, spec, context)


DEFAULT_JUDGE_TEMPLATE = """\
Score the proposed label for the contract field below.

Field: {{field_name}}
Proposed answer: {{answer}}
Cited span(s), as anchored in the contract:
{{spans}}

Surrounding contract context:
{{context}}

Reply with a JSON object {"answer_quality": <0..1>, "span_validity": <0..1>}
scoring whether the answer is correct for the field and whether the cited
spans genuinely support it."""


class ModelJudge:
    """Judge backed by a model adapter that returns two scores as JSON."""

    def __init__(self, adapter: ModelAdapter, template: str = DEFAULT_JUDGE_TEMPLATE) -> None:
        self.adapter = adapter
        self.judge_id = adapter.model_id
        self.template = template

    def score(self, candidate: AnchoredCandidate, spec: FieldSpec, context: str) -> tuple[float, float]:
        spans_text = "\n".join(f"- {s.quoted_text}" for s in candidate.spans) or "(none)"
        prompt = (
            self.template.replace("{{field_name}}", spec.display_name)
            .replace("{{answer}}", candidate.candidate.display_answer or "(none)")
            .replace("{{spans}}", spans_text)
            .replace("{{context}}", context)
        )
        from .modelgate import PromptBundle  # local import to avoid cycle noise

        bundle = PromptBundle(doc_id=candidate.doc_id, system_prompt="", user_prompt=prompt)
        record = invoke(self.adapter, bundle)
        if record.error is not None:
            raise JudgeError(record.error)
        try:
            data = json.loads(record.raw_response)
            return float(data["answer_quality"]), float(data["span_validity"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise JudgeError(f"{self.judge_id}: unscorable response") from exc


@dataclass(frozen=True)
class JudgeThresholds:
    answer_quality: float = 0.7
    span_validity: float = 0.7


QUORUM_RULES = ("all", "majority")


def _context_window(doc: Document, spans: Sequence[SupportingSpan], chars: int) -> str:
    if not spans:
        return ""
    lo = min(s.interval.start for s in spans if s.interval is not None)
    hi = max(s.interval.end for s in spans if s.interval is not None)
    return doc.text[max(0, lo - chars) : min(len(doc.text), hi + chars)]


def judge_filter(
    candidates: Sequence[AnchoredCandidate],
    panel: Sequence[JudgeAdapter],
    *,
    catalog: FieldCatalog,
    doc: Document,
    thresholds: JudgeThresholds = JudgeThresholds(),
    quorum: str = "all",
    context_chars: int = 240,
) -> tuple[list[AcceptedLabel], list[RejectedLabel]]:
    """Score every candidate with every judge and apply the quorum rule.

    A judge failure leaves the candidate unscored and it is rejected
    conservatively. Raising a threshold can only shrink the accepted set.
    """
    if not panel:
        raise ValueError("judge panel must be non-empty")
    if quorum not in QUORUM_RULES:
        raise ValueError(f"unknown quorum rule {quorum!r}")
    accepted: list[AcceptedLabel] = []
    rejected: list[RejectedLabel] = []
    for candidate in candidates:
        spec = catalog[candidate.field_id]
        context = _context_window(doc, candidate.spans, context_chars)
        verdicts: list[JudgeVerdict] = []
        unscored = False
        for judge in panel:
            try:
                answer_quality, span_validity = judge.score(candidate, spec, context)
            except JudgeError as exc:
                logger.warning("judge %s failed on %s/%s: %s",
                               judge.judge_id, candidate.doc_id, candidate.field_id, exc)
                unscored = True
                break
            verdicts.append(
                JudgeVerdict(
                    judge_id=judge.judge_id,
                    answer_quality=answer_quality,
                    span_validity=span_validity,
                    accept=(
                        answer_quality >= thresholds.answer_quality
                        and span_validity >= thresholds.span_validity
                    ),
                )
            )
        if unscored:
            rejected.append(RejectedLabel(candidate.candidate, "judge failure", tuple(verdicts)))
            continue
        votes = sum(1 for v in verdicts if v.accept)
        passed = votes == len(panel) if quorum == "all" else votes * 2 > len(panel)
        if passed:
            accepted.append(
                AcceptedLabel(
                    doc_id=candidate.doc_id,
                    field_id=candidate.field_id,
                    display_answer=candidate.candidate.display_answer,
                    spans=candidate.spans,
                    generator_model_id=candidate.candidate.generator_model_id,
                    verdicts=tuple(verdicts),
                )
            )
        else:
            rejected.append(
                RejectedLabel(candidate.candidate, f"quorum not met ({votes}/{len(panel)})", tuple(verdicts))
            )
    return accepted, rejected


@dataclass
class PipelineResult:
    doc_id: str
    candidates: list[CandidateLabel]
    accepted: list[AcceptedLabel]
    rejected: list[RejectedLabel]


def run_pipeline(
    doc: Document,
    catalog: FieldCatalog,
    generator: ModelAdapter,
    panel: Sequence[JudgeAdapter],
    *,
    thresholds: JudgeThresholds = JudgeThresholds(),
    quorum: str = "all",
    min_similarity: float = 0.9,
    template: PromptTemplate | None = None,
    context_chars: int = 240,
) -> PipelineResult:
    candidates = generate_candidates(doc, catalog, generator, template=template)
    anchored, dropped = anchor_labels(candidates, doc, min_similarity)
    accepted, rejected = judge_filter(
        anchored,
        panel,
        catalog=catalog,
        doc=doc,
        thresholds=thresholds,
        quorum=quorum,
        context_chars=context_chars,
    )
    return PipelineResult(
        doc_id=doc.doc_id,
        candidates=candidates,
        accepted=accepted,
        rejected=dropped + rejected,
    )


def label_to_gold(label: AcceptedLabel) -> GoldAnnotation:
    return GoldAnnotation(
        doc_id=label.doc_id,
        field_id=label.field_id,
        display_answer=label.display_answer,
        spans=label.spans,
        adjudicated=False,
    )


@dataclass
class ExportResult:
    split_paths: dict[str, Path]
    manifest_path: Path
    manifest: dict[str, Any]


def export_corpus(
    labels: Sequence[AcceptedLabel],
    splits: Sequence[SplitAssignment],
    out_dir: str | Path,
    docs: Mapping[str, Document],
) -> ExportResult:
    """Write per-split label files in the gold format plus a prevalence manifest.

    Every span is re-checked against its source document at export time, and a
    label whose document has no split assignment is an error. Prevalence is
    the percentage of the split's assigned documents carrying each field.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    split_of: dict[str, str] = {}
    for assignment in splits:
        if assignment.doc_id in split_of:
            raise ValueError(f"document {assignment.doc_id!r} assigned to more than one split")
        split_of[assignment.doc_id] = assignment.split

    by_split: dict[str, list[AcceptedLabel]] = {}
    for label in labels:
        split = split_of.get(label.doc_id)
        if split is None:
            raise ValueError(f"label for {label.doc_id!r} has no split assignment")
        doc = docs.get(label.doc_id)
        if doc is None:
            raise ValueError(f"document {label.doc_id!r} not supplied for export check")
        for span in label.spans:
            if span.interval is None:
                raise ValueError(f"{label.doc_id}/{label.field_id}: exported span lacks offsets")
            if doc.text[span.interval.start : span.interval.end] != span.quoted_text:
                raise ValueError(
                    f"{label.doc_id}/{label.field_id}: span does not round-trip at export"
                )
        by_split.setdefault(split, []).append(label)

    docs_per_split: dict[str, set[str]] = {}
    for assignment in splits:
        docs_per_split.setdefault(assignment.split, set()).add(assignment.doc_id)

    split_paths: dict[str, Path] = {}
    manifest_splits: dict[str, Any] = {}
    for split in sorted(docs_per_split):
        split_labels = by_split.get(split, [])
        path = out_dir / f"{split}.jsonl"
        write_jsonl((gold_to_dict(label_to_gold(l)) for l in split_labels), path)
        split_paths[split] = path
        field_counts: dict[str, int] = {}
        field_docs: dict[str, set[str]] = {}
        for label in split_labels:
            field_counts[label.field_id] = field_counts.get(label.field_id, 0) + 1
            field_docs.setdefault(label.field_id, set()).add(label.doc_id)
        n_docs = len(docs_per_split[split])
        manifest_splits[split] = {
            "documents": n_docs,
            "labels": len(split_labels),
            "field_counts": dict(sorted(field_counts.items())),
            "field_prevalence_pct": {
                fid: round(100.0 * len(doc_ids) / n_docs, 1)
                for fid, doc_ids in sorted(field_docs.items())
            },
        }

    manifest = {"format_version": 1, "splits": manifest_splits}
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return ExportResult(split_paths=split_paths, manifest_path=manifest_path, manifest=manifest)


@dataclass
class ForgeConfig:
    generator: ModelAdapter
    panel: list[JudgeAdapter]
    thresholds: JudgeThresholds = field(default_factory=JudgeThresholds)
    quorum: str = "all"
    min_similarity: float = 0.9
    context_chars: int = 240


def load_forge_config(path: str | Path) -> ForgeConfig:
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    base = Path(path).parent

    def _resolve(entry: dict[str, Any]) -> dict[str, Any]:
        entry = dict(entry)
        for key in ("fixture_dir", "response_file"):
            if key in entry and not Path(entry[key]).is_absolute():
                entry[key] = str(base / entry[key])
        return entry

    generator = adapter_from_config(_resolve(data["generator"]))
    panel: list[JudgeAdapter] = []
    for entry in data.get("judges", []):
        entry = _resolve(entry)
        if entry.get("adapter") == "static_judge":
            panel.append(
                StaticJudge(
                    entry.get("judge_id", "static"),
                    float(entry.get("answer_quality", 1.0)),
                    float(entry.get("span_validity", 1.0)),
                )
            )
        else:
            panel.append(ModelJudge(adapter_from_config(entry), entry.get("template", DEFAULT_JUDGE_TEMPLATE)))
    if not panel:
        raise ValueError(f"{path}: forge config lists no judges")
    thresholds = JudgeThresholds(
        answer_quality=float(data.get("thresholds", {}).get("answer_quality", 0.7)),
        span_validity=float(data.get("thresholds", {}).get("span_validity", 0.7)),
    )
    return ForgeConfig(
        generator=generator,
        panel=panel,
        thresholds=thresholds,
        quorum=data.get("quorum", "all"),
        min_similarity=float(data.get("min_similarity", 0.9)),
        context_chars=int(data.get("context_chars", 240)),
    )
