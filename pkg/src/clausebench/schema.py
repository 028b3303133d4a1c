"""The extraction field catalog, output records, gold annotations, and file formats.

Every field belongs to one of six categories, and the category decides which
matching rule the scorer applies. Model output is parsed leniently: anything
that cannot be interpreted becomes a ParseIssue and is scored as an absence.
Parsing never raises on arbitrary input.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

from ._jsonl import read_jsonl, write_jsonl

FORMAT_VERSION = 1


class CatalogError(ValueError):
    """A field catalog config violates the catalog invariants."""


class GoldFormatError(ValueError):
    """A gold annotation file violates the format contract."""


class FieldCategory(str, Enum):
    EXTRACTED_TEXT = "extracted_text"
    DURATION = "duration"
    DATE = "date"
    CURRENCY = "currency"
    CLOSED_SET = "closed_set"
    SHORT_TEXT = "short_text"


CATEGORY_ORDER: tuple[FieldCategory, ...] = (
    FieldCategory.EXTRACTED_TEXT,
    FieldCategory.DURATION,
    FieldCategory.DATE,
    FieldCategory.CURRENCY,
    FieldCategory.CLOSED_SET,
    FieldCategory.SHORT_TEXT,
)

#: Categories whose match is decided by the display answer (possibly with a
#: span fallback) rather than by span overlap alone.
VALUE_CATEGORIES = frozenset(
    {
        FieldCategory.DURATION,
        FieldCategory.DATE,
        FieldCategory.CURRENCY,
        FieldCategory.CLOSED_SET,
        FieldCategory.SHORT_TEXT,
    }
)


class MatchRuleKind(str, Enum):
    SPAN_OVERLAP = "span_overlap"
    CONTAINMENT_OR_OVERLAP = "containment_or_overlap"
    EXACT_OPTION = "exact_option"
    EXACT_STRING = "exact_string"


CATEGORY_RULES: dict[FieldCategory, MatchRuleKind] = {
    FieldCategory.EXTRACTED_TEXT: MatchRuleKind.SPAN_OVERLAP,
    FieldCategory.DURATION: MatchRuleKind.CONTAINMENT_OR_OVERLAP,
    FieldCategory.DATE: MatchRuleKind.CONTAINMENT_OR_OVERLAP,
    FieldCategory.CURRENCY: MatchRuleKind.CONTAINMENT_OR_OVERLAP,
    FieldCategory.CLOSED_SET: MatchRuleKind.EXACT_OPTION,
    FieldCategory.SHORT_TEXT: MatchRuleKind.EXACT_STRING,
}


@dataclass(frozen=True)
class CharInterval:
    """End-exclusive character offsets into a document's text."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"invalid interval [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class FieldSpec:
    field_id: str
    display_name: str
    category: FieldCategory
    matching_rule: MatchRuleKind
    option_list: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.category is FieldCategory.CLOSED_SET:
            if not self.option_list:
                raise CatalogError(f"{self.field_id}: closed_set field requires an option_list")
        elif self.option_list is not None:
            raise CatalogError(f"{self.field_id}: only closed_set fields take an option_list")


@dataclass(frozen=True)
class FieldCatalog:
    fields: tuple[FieldSpec, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for spec in self.fields:
            if spec.field_id in seen:
                raise CatalogError(f"duplicate field_id {spec.field_id!r}")
            seen.add(spec.field_id)

    def __iter__(self) -> Iterator[FieldSpec]:
        return iter(self.fields)

    def __len__(self) -> int:
        return len(self.fields)

    def __getitem__(self, field_id: str) -> FieldSpec:
        for spec in self.fields:
            if spec.field_id == field_id:
                return spec
        raise KeyError(field_id)

    @property
    def field_ids(self) -> tuple[str, ...]:
        return tuple(spec.field_id for spec in self.fields)

    def category_histogram(self) -> dict[FieldCategory, int]:
        hist = {cat: 0 for cat in CATEGORY_ORDER}
        for spec in self.fields:
            hist[spec.category] += 1
        return hist


_YES_NO = ("Yes", "No")

# (field_id, display name, category, options) in catalog order.
_DEFAULT_FIELDS: tuple[tuple[str, str, FieldCategory, tuple[str, ...] | None], ...] = (
    ("assignment", "Assignment", FieldCategory.EXTRACTED_TEXT, None),
    ("confidentiality", "Confidentiality", FieldCategory.EXTRACTED_TEXT, None),
    ("consequences_of_termination", "Consequences of Termination", FieldCategory.EXTRACTED_TEXT, None),
    ("dispute_resolution", "Dispute Resolution", FieldCategory.EXTRACTED_TEXT, None),
    ("force_majeure", "Force Majeure", FieldCategory.EXTRACTED_TEXT, None),
    ("indemnity", "Indemnity", FieldCategory.EXTRACTED_TEXT, None),
    ("limitations_of_liability", "Limitations of Liability", FieldCategory.EXTRACTED_TEXT, None),
    ("termination", "Termination", FieldCategory.EXTRACTED_TEXT, None),
    ("term", "Term", FieldCategory.DURATION, None),
    ("payment_term", "Payment Term", FieldCategory.DURATION, None),
    ("payment_period_frequency", "Payment Period Frequency", FieldCategory.DURATION, None),
    ("renewal_term", "Renewal Term", FieldCategory.DURATION, None),
    ("renewal_notice_period", "Renewal Notice Period", FieldCategory.DURATION, None),
    ("termination_notice_window", "Termination Notice Window", FieldCategory.DURATION, None),
    ("effective_date", "Effective Date", FieldCategory.DATE, None),
    ("executed_date", "Executed Date", FieldCategory.DATE, None),
    ("end_date", "End Date", FieldCategory.DATE, None),
    ("annual_contract_value", "Annual Contract Value", FieldCategory.CURRENCY, None),
    ("total_contract_value", "Total Contract Value", FieldCategory.CURRENCY, None),
    ("termination_for_cause", "Termination for Cause", FieldCategory.CLOSED_SET, _YES_NO),
    ("termination_for_convenience", "Termination for Convenience", FieldCategory.CLOSED_SET, _YES_NO),
    ("exclusions_from_liability", "Exclusions from Liability", FieldCategory.CLOSED_SET, _YES_NO),
    ("renewal_type", "Renewal Type", FieldCategory.CLOSED_SET, ("Automatic", "Optional", "None")),
    ("contract_name", "Contract Name", FieldCategory.SHORT_TEXT, None),
    ("parties", "Parties", FieldCategory.SHORT_TEXT, None),
    ("governing_law", "Governing Law", FieldCategory.SHORT_TEXT, None),
)


def default_catalog() -> FieldCatalog:
    """The built-in 26-field catalog (8/6/3/2/4/3 across the six categories)."""
    specs = tuple(
        FieldSpec(fid, name, cat, CATEGORY_RULES[cat], options)
        for fid, name, cat, options in _DEFAULT_FIELDS
    )
    return FieldCatalog(specs)


def catalog_to_dict(catalog: FieldCatalog) -> dict[str, Any]:
    fields = []
    for spec in catalog.fields:
        entry: dict[str, Any] = {
            "field_id": spec.field_id,
            "display_name": spec.display_name,
            "category": spec.category.value,
            "matching_rule": spec.matching_rule.value,
        }
        if spec.option_list is not None:
            entry["options"] = list(spec.option_list)
        fields.append(entry)
    return {"format_version": FORMAT_VERSION, "fields": fields}


def catalog_from_dict(data: Mapping[str, Any]) -> FieldCatalog:
    raw_fields = data.get("fields")
    if not isinstance(raw_fields, list) or not raw_fields:
        raise CatalogError("catalog config must contain a non-empty 'fields' list")
    specs = []
    for entry in raw_fields:
        try:
            category = FieldCategory(entry["category"])
        except (KeyError, ValueError) as exc:
            raise CatalogError(f"unknown or missing category in {entry!r}") from exc
        rule_name = entry.get("matching_rule")
        try:
            rule = MatchRuleKind(rule_name) if rule_name else CATEGORY_RULES[category]
        except ValueError as exc:
            raise CatalogError(f"unknown matching_rule {rule_name!r}") from exc
        options = entry.get("options")
        specs.append(
            FieldSpec(
                field_id=entry.get("field_id", ""),
                display_name=entry.get("display_name", entry.get("field_id", "")),
                category=category,
                matching_rule=rule,
                option_list=tuple(options) if options is not None else None,
            )
        )
        if not specs[-1].field_id:
            raise CatalogError(f"field entry without field_id: {entry!r}")
    return FieldCatalog(tuple(specs))


def load_field_catalog(path: str | Path | None = None) -> FieldCatalog:
    """Load a catalog config file, or return the built-in default."""
    if path is None:
        return default_catalog()
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"{path}: {exc}") from exc
    return catalog_from_dict(data)


def write_catalog(catalog: FieldCatalog, path: str | Path) -> None:
    Path(path).write_text(json.dumps(catalog_to_dict(catalog), indent=2) + "\n", encoding="utf-8")


def catalog_hash(catalog: FieldCatalog) -> str:
    payload = json.dumps(catalog_to_dict(catalog), sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class SupportingSpan:
    """A verbatim contract excerpt, optionally anchored to character offsets.

    anchor_similarity is 1.0 for exact anchors; fuzzy-anchored prediction spans
    record the edit similarity of the best window so the audit trail keeps the
    original quote alongside where it landed.
    """

    quoted_text: str
    interval: CharInterval | None = None
    anchor_similarity: float | None = None


@dataclass(frozen=True)
class FieldExtraction:
    field_id: str
    present: bool
    display_answer: str | None = None
    spans: tuple[SupportingSpan, ...] = ()

    def __post_init__(self) -> None:
        if not self.present and (self.display_answer is not None or self.spans):
            raise ValueError(f"{self.field_id}: absent extraction must carry no content")


@dataclass
class ExtractionRecord:
    doc_id: str
    model_id: str
    extractions: dict[str, FieldExtraction]
    raw_output: str = ""


@dataclass(frozen=True)
class GoldAnnotation:
    doc_id: str
    field_id: str
    display_answer: str | None
    spans: tuple[SupportingSpan, ...] = ()
    adjudicated: bool = False


@dataclass(frozen=True)
class ParseIssue:
    kind: str
    field_id: str | None
    detail: str


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _payload_candidates(raw: str) -> Iterator[str]:
    yield raw
    for block in _FENCE.finditer(raw):
        yield block.group(1)
    first, last = raw.find("{"), raw.rfind("}")
    if 0 <= first < last:
        yield raw[first : last + 1]


def _extract_payload(raw: str) -> Any:
    for candidate in _payload_candidates(raw):
        try:
            return json.loads(candidate)
        except (json.JSONDecodeError, ValueError):
            continue
    return None


_ABSENT = object()


def _parse_answer(value: Any, field_id: str, issues: list[ParseIssue]) -> str | None:
    if value is None:
        return None
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, int, float)):
        issues.append(ParseIssue("coerced_value", field_id, f"scalar answer {value!r} coerced to string"))
        return json.dumps(value)
    issues.append(ParseIssue("malformed_field", field_id, f"answer of type {type(value).__name__} ignored"))
    return None


def _parse_spans(value: Any, field_id: str, issues: list[ParseIssue]) -> tuple[SupportingSpan, ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        issues.append(ParseIssue("invalid_span", field_id, "spans is not a list"))
        return ()
    spans: list[SupportingSpan] = []
    for entry in value:
        if isinstance(entry, str):
            if entry:
                spans.append(SupportingSpan(entry))
            else:
                issues.append(ParseIssue("invalid_span", field_id, "empty span string"))
            continue
        if isinstance(entry, dict):
            text = entry.get("quoted_text", entry.get("text"))
            if not isinstance(text, str) or not text:
                issues.append(ParseIssue("invalid_span", field_id, f"span object without text: {entry!r}"))
                continue
            start, end = entry.get("start"), entry.get("end")
            interval = None
            if isinstance(start, int) and isinstance(end, int):
                try:
                    interval = CharInterval(start, end)
                except ValueError:
                    issues.append(ParseIssue("invalid_span", field_id, f"bad offsets [{start}, {end})"))
            spans.append(SupportingSpan(text, interval))
            continue
        issues.append(ParseIssue("invalid_span", field_id, f"span of type {type(entry).__name__} ignored"))
    return tuple(spans)


def _parse_field(value: Any, spec: FieldSpec, issues: list[ParseIssue]) -> FieldExtraction:
    if value is None:
        return FieldExtraction(spec.field_id, present=False)
    if isinstance(value, dict):
        answer = _parse_answer(value.get("answer"), spec.field_id, issues)
        spans = _parse_spans(value.get("spans"), spec.field_id, issues)
    elif isinstance(value, str):
        issues.append(ParseIssue("coerced_value", spec.field_id, "bare string treated as answer"))
        answer, spans = (value or None), ()
    elif isinstance(value, (bool, int, float)):
        issues.append(ParseIssue("coerced_value", spec.field_id, "bare scalar treated as answer"))
        answer, spans = json.dumps(value), ()
    else:
        issues.append(ParseIssue("malformed_field", spec.field_id, f"value of type {type(value).__name__}"))
        return FieldExtraction(spec.field_id, present=False)
    if answer == "":
        answer = None
    if answer is None and not spans:
        return FieldExtraction(spec.field_id, present=False)
    return FieldExtraction(spec.field_id, present=True, display_answer=answer, spans=spans)


def parse_model_output(
    raw: str,
    catalog: FieldCatalog,
    *,
    doc_id: str = "",
    model_id: str = "",
) -> tuple[ExtractionRecord, list[ParseIssue]]:
    """Parse raw model text into a structured record, best effort.

    Every catalog field is present in the result (unparseable or missing
    fields become absences); nothing is dropped silently and nothing raises.
    """
    issues: list[ParseIssue] = []
    payload = _extract_payload(raw) if raw else None
    parsed_ok = isinstance(payload, dict)
    if not parsed_ok:
        detail = "empty response" if not raw.strip() else "no JSON object found"
        issues.append(ParseIssue("unparseable_output", None, detail))
        payload = {}
    known = set(catalog.field_ids)
    for key in payload:
        if key not in known:
            issues.append(ParseIssue("unknown_field", key, f"unknown field {key}"))
    extractions: dict[str, FieldExtraction] = {}
    for spec in catalog.fields:
        if spec.field_id not in payload:
            extractions[spec.field_id] = FieldExtraction(spec.field_id, present=False)
            if parsed_ok:
                issues.append(ParseIssue("missing_field", spec.field_id, "missing field"))
            continue
        extractions[spec.field_id] = _parse_field(payload[spec.field_id], spec, issues)
    record = ExtractionRecord(doc_id=doc_id, model_id=model_id, extractions=extractions, raw_output=raw)
    return record, issues


def _span_to_dict(span: SupportingSpan) -> dict[str, Any]:
    out: dict[str, Any] = {"quoted_text": span.quoted_text}
    if span.interval is not None:
        out["start"] = span.interval.start
        out["end"] = span.interval.end
    if span.anchor_similarity is not None:
        out["anchor_similarity"] = span.anchor_similarity
    return out


def _span_from_dict(data: Mapping[str, Any]) -> SupportingSpan:
    interval = None
    if "start" in data and "end" in data:
        interval = CharInterval(int(data["start"]), int(data["end"]))
    return SupportingSpan(
        quoted_text=data["quoted_text"],
        interval=interval,
        anchor_similarity=data.get("anchor_similarity"),
    )


def record_to_dict(record: ExtractionRecord) -> dict[str, Any]:
    extractions: dict[str, Any] = {}
    for fid, ext in record.extractions.items():
        extractions[fid] = {
            "present": ext.present,
            "display_answer": ext.display_answer,
            "spans": [_span_to_dict(s) for s in ext.spans],
        }
    return {
        "format_version": FORMAT_VERSION,
        "doc_id": record.doc_id,
        "model_id": record.model_id,
        "raw_output": record.raw_output,
        "extractions": extractions,
    }


def record_from_dict(data: Mapping[str, Any]) -> ExtractionRecord:
    extractions: dict[str, FieldExtraction] = {}
    for fid, entry in data["extractions"].items():
        spans = tuple(_span_from_dict(s) for s in entry.get("spans", ()))
        present = bool(entry.get("present"))
        extractions[fid] = FieldExtraction(
            field_id=fid,
            present=present,
            display_answer=entry.get("display_answer") if present else None,
            spans=spans if present else (),
        )
    return ExtractionRecord(
        doc_id=data["doc_id"],
        model_id=data.get("model_id", ""),
        extractions=extractions,
        raw_output=data.get("raw_output", ""),
    )


def write_predictions(records: Iterable[ExtractionRecord], path: str | Path) -> None:
    write_jsonl((record_to_dict(r) for r in records), path)


def read_predictions(path: str | Path) -> list[ExtractionRecord]:
    return [record_from_dict(d) for d in read_jsonl(path)]


def gold_to_dict(gold: GoldAnnotation) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "doc_id": gold.doc_id,
        "field_id": gold.field_id,
        "display_answer": gold.display_answer,
        "spans": [_span_to_dict(s) for s in gold.spans],
        "adjudicated": gold.adjudicated,
    }


def gold_from_dict(data: Mapping[str, Any]) -> GoldAnnotation:
    return GoldAnnotation(
        doc_id=data["doc_id"],
        field_id=data["field_id"],
        display_answer=data.get("display_answer"),
        spans=tuple(_span_from_dict(s) for s in data.get("spans", ())),
        adjudicated=bool(data.get("adjudicated", False)),
    )


def check_gold(
    golds: Sequence[GoldAnnotation],
    *,
    texts: Mapping[str, str] | None = None,
    catalog: FieldCatalog | None = None,
) -> list[str]:
    """Structural problems in a gold set: duplicates, unknown fields, bad spans."""
    problems: list[str] = []
    seen: set[tuple[str, str]] = set()
    known = set(catalog.field_ids) if catalog is not None else None
    for gold in golds:
        key = (gold.doc_id, gold.field_id)
        if key in seen:
            problems.append(f"duplicate annotation for {key}")
        seen.add(key)
        if known is not None and gold.field_id not in known:
            problems.append(f"{gold.doc_id}/{gold.field_id}: field not in catalog")
        for span in gold.spans:
            if span.interval is None:
                problems.append(f"{gold.doc_id}/{gold.field_id}: gold span without offsets")
                continue
            if texts is not None:
                text = texts.get(gold.doc_id)
                if text is None:
                    problems.append(f"{gold.doc_id}: document not in corpus")
                elif text[span.interval.start : span.interval.end] != span.quoted_text:
                    problems.append(
                        f"{gold.doc_id}/{gold.field_id}: span does not round-trip at "
                        f"[{span.interval.start}, {span.interval.end})"
                    )
    return problems


def write_gold(golds: Iterable[GoldAnnotation], path: str | Path) -> None:
    write_jsonl((gold_to_dict(g) for g in golds), path)


def read_gold(
    path: str | Path,
    *,
    texts: Mapping[str, str] | None = None,
    catalog: FieldCatalog | None = None,
    strict: bool = True,
) -> list[GoldAnnotation]:
    golds = [gold_from_dict(d) for d in read_jsonl(path)]
    problems = check_gold(golds, texts=texts, catalog=catalog)
    if problems and strict:
        raise GoldFormatError(f"{path}: " + "; ".join(problems[:5]))
    return golds
