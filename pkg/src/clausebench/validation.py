"""Anchoring and structural validation of extraction records against source text."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .corpus import Document
from .matchers import RulesConfig, answers_equal, fuzzy_anchor
from .schema import (
    ExtractionRecord,
    FieldCatalog,
    FieldCategory,
    SupportingSpan,
)

EXACT = "exact"
FUZZY = "fuzzy"
UNANCHORED = "unanchored"
INTERVAL_MISMATCH = "interval_mismatch"


@dataclass(frozen=True)
class SpanCheck:
    field_id: str
    span_index: int
    status: str
    similarity: float | None = None
    start: int | None = None
    end: int | None = None


@dataclass
class ValidationReport:
    doc_id: str
    model_id: str
    span_checks: list[SpanCheck] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    anchored_record: ExtractionRecord | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "model_id": self.model_id,
            "violations": list(self.violations),
            "span_checks": [
                {
                    "field_id": c.field_id,
                    "span_index": c.span_index,
                    "status": c.status,
                    "similarity": c.similarity,
                    "start": c.start,
                    "end": c.end,
                }
                for c in self.span_checks
            ],
        }


def _anchor_span(
    span: SupportingSpan,
    text: str,
    min_similarity: float,
) -> tuple[SupportingSpan, str, float | None]:
    """Anchor one span, honouring a pre-existing interval when it round-trips."""
    if span.interval is not None:
        if text[span.interval.start : span.interval.end] == span.quoted_text:
            return replace(span, anchor_similarity=1.0), EXACT, 1.0
        # The claimed offsets do not reproduce the quote; re-anchor from text.
        result = fuzzy_anchor(span.quoted_text, text, min_similarity)
        if result is None:
            return replace(span, interval=None, anchor_similarity=None), INTERVAL_MISMATCH, None
        return (
            replace(span, interval=result.interval, anchor_similarity=result.similarity),
            INTERVAL_MISMATCH,
            result.similarity,
        )
    result = fuzzy_anchor(span.quoted_text, text, min_similarity)
    if result is None:
        return span, UNANCHORED, None
    status = EXACT if result.similarity == 1.0 else FUZZY
    return replace(span, interval=result.interval, anchor_similarity=result.similarity), status, result.similarity


def validate_extraction(
    record: ExtractionRecord,
    catalog: FieldCatalog,
    doc: Document,
    *,
    rules: RulesConfig | None = None,
) -> ValidationReport:
    """Anchor every span and check the record's structural obligations.

    Violations cover fabricated (unanchorable) spans, closed-set answers
    outside the option list, offsets that do not reproduce their quote, and
    presence-rule breaches (an extracted-text field asserted without a span,
    or a value field asserted without a display answer).
    """
    if record.doc_id != doc.doc_id:
        raise ValueError(f"record is for {record.doc_id!r}, document is {doc.doc_id!r}")
    rules = rules or RulesConfig()
    report = ValidationReport(doc_id=record.doc_id, model_id=record.model_id)
    anchored: dict[str, object] = {}

    for spec in catalog.fields:
        ext = record.extractions.get(spec.field_id)
        if ext is None:
            report.violations.append(f"{spec.field_id}: extraction missing from record")
            continue
        if not ext.present:
            anchored[spec.field_id] = ext
            continue

        if spec.category is FieldCategory.EXTRACTED_TEXT and not ext.spans:
            report.violations.append(f"{spec.field_id}: asserted without a supporting span")
        if spec.category is not FieldCategory.EXTRACTED_TEXT and not ext.display_answer:
            report.violations.append(f"{spec.field_id}: asserted without a display answer")
        if (
            spec.category is FieldCategory.CLOSED_SET
            and ext.display_answer
            and not any(answers_equal(ext.display_answer, opt) for opt in spec.option_list or ())
        ):
            report.violations.append(
                f"{spec.field_id}: out-of-options value {ext.display_answer!r}"
            )

        new_spans = []
        for index, span in enumerate(ext.spans):
            anchored_span, status, similarity = _anchor_span(span, doc.text, rules.min_similarity)
            new_spans.append(anchored_span)
            check = SpanCheck(
                field_id=spec.field_id,
                span_index=index,
                status=status,
                similarity=similarity,
                start=anchored_span.interval.start if anchored_span.interval else None,
                end=anchored_span.interval.end if anchored_span.interval else None,
            )
            report.span_checks.append(check)
            if status == UNANCHORED:
                report.violations.append(f"{spec.field_id}: unanchorable span {span.quoted_text[:60]!r}")
            elif status == INTERVAL_MISMATCH:
                report.violations.append(
                    f"{spec.field_id}: span offsets do not reproduce the quoted text"
                )
        anchored[spec.field_id] = replace(ext, spans=tuple(new_spans))

    report.anchored_record = ExtractionRecord(
        doc_id=record.doc_id,
        model_id=record.model_id,
        extractions=anchored,  # type: ignore[arg-type]
        raw_output=record.raw_output,
    )
    return report
