from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clausebench.schema import (
    CatalogError,
    CharInterval,
    FieldCategory,
    FieldExtraction,
    GoldAnnotation,
    GoldFormatError,
    MatchRuleKind,
    SupportingSpan,
    catalog_from_dict,
    catalog_to_dict,
    default_catalog,
    gold_from_dict,
    gold_to_dict,
    load_field_catalog,
    parse_model_output,
    read_gold,
    read_predictions,
    record_from_dict,
    record_to_dict,
    write_gold,
    write_predictions,
)


class TestCatalog:
    def test_default_has_26_fields(self, catalog):
        assert len(catalog) == 26

    def test_default_category_histogram(self, catalog):
        hist = catalog.category_histogram()
        assert hist[FieldCategory.EXTRACTED_TEXT] == 8
        assert hist[FieldCategory.DURATION] == 6
        assert hist[FieldCategory.DATE] == 3
        assert hist[FieldCategory.CURRENCY] == 2
        assert hist[FieldCategory.CLOSED_SET] == 4
        assert hist[FieldCategory.SHORT_TEXT] == 3

    def test_short_text_fields_use_exact_string_rule(self, catalog):
        assert catalog["governing_law"].matching_rule is MatchRuleKind.EXACT_STRING

    def test_closed_set_fields_have_options(self, catalog):
        assert catalog["renewal_type"].option_list == ("Automatic", "Optional", "None")
        assert catalog["termination_for_cause"].option_list == ("Yes", "No")

    def test_missing_options_rejected(self, catalog):
        data = catalog_to_dict(catalog)
        for entry in data["fields"]:
            if entry["field_id"] == "renewal_type":
                del entry["options"]
        with pytest.raises(CatalogError):
            catalog_from_dict(data)

    def test_options_on_open_field_rejected(self, catalog):
        data = catalog_to_dict(catalog)
        data["fields"][0]["options"] = ["A"]
        with pytest.raises(CatalogError):
            catalog_from_dict(data)

    def test_duplicate_field_id_rejected(self, catalog):
        data = catalog_to_dict(catalog)
        data["fields"].append(dict(data["fields"][0]))
        with pytest.raises(CatalogError):
            catalog_from_dict(data)

    def test_unknown_category_rejected(self, catalog):
        data = catalog_to_dict(catalog)
        data["fields"][0]["category"] = "mystery"
        with pytest.raises(CatalogError):
            catalog_from_dict(data)

    def test_config_file_round_trip(self, catalog, tmp_path):
        path = tmp_path / "catalog.json"
        path.write_text(json.dumps(catalog_to_dict(catalog)), encoding="utf-8")
        assert load_field_catalog(path) == catalog


def full_payload(catalog) -> dict:
    payload = {}
    for spec in catalog.fields:
        if spec.category is FieldCategory.CLOSED_SET:
            payload[spec.field_id] = {"answer": spec.option_list[0], "spans": ["some clause"]}
        else:
            payload[spec.field_id] = {"answer": "value", "spans": ["some clause"]}
    return payload


class TestParseModelOutput:
    def test_well_formed_output(self, catalog):
        record, issues = parse_model_output(json.dumps(full_payload(catalog)), catalog)
        assert len(record.extractions) == 26
        assert issues == []
        assert all(ext.present for ext in record.extractions.values())

    def test_missing_field_reported(self, catalog):
        payload = full_payload(catalog)
        del payload["end_date"]
        record, issues = parse_model_output(json.dumps(payload), catalog)
        assert record.extractions["end_date"].present is False
        assert [i for i in issues if i.kind == "missing_field"] == [issues[0]]
        assert issues[0].field_id == "end_date"

    def test_unknown_field_reported(self, catalog):
        payload = full_payload(catalog)
        payload["venue"] = {"answer": "court", "spans": []}
        record, issues = parse_model_output(json.dumps(payload), catalog)
        assert len(record.extractions) == 26
        assert any(i.kind == "unknown_field" and i.field_id == "venue" for i in issues)

    def test_null_value_is_clean_absence(self, catalog):
        payload = full_payload(catalog)
        payload["term"] = None
        record, issues = parse_model_output(json.dumps(payload), catalog)
        assert record.extractions["term"].present is False
        assert issues == []

    def test_fenced_json_accepted(self, catalog):
        raw = "Here you go:\n```json\n" + json.dumps(full_payload(catalog)) + "\n```"
        record, issues = parse_model_output(raw, catalog)
        assert issues == []
        assert record.extractions["term"].present

    def test_garbage_yields_all_absent(self, catalog):
        record, issues = parse_model_output("I cannot help with that.", catalog)
        assert all(not ext.present for ext in record.extractions.values())
        assert any(i.kind == "unparseable_output" for i in issues)
        assert record.raw_output == "I cannot help with that."

    def test_bare_string_salvaged_with_issue(self, catalog):
        payload = full_payload(catalog)
        payload["governing_law"] = "Delaware"
        record, issues = parse_model_output(json.dumps(payload), catalog)
        assert record.extractions["governing_law"].display_answer == "Delaware"
        assert any(i.kind == "coerced_value" for i in issues)

    def test_span_objects_with_offsets(self, catalog):
        payload = full_payload(catalog)
        payload["termination"] = {"answer": None, "spans": [{"quoted_text": "clause", "start": 5, "end": 11}]}
        record, _ = parse_model_output(json.dumps(payload), catalog)
        span = record.extractions["termination"].spans[0]
        assert span.interval == CharInterval(5, 11)

    @given(st.text(max_size=300))
    @settings(max_examples=200)
    def test_totality_on_arbitrary_strings(self, raw):
        catalog = default_catalog()
        record, _ = parse_model_output(raw, catalog)
        assert set(record.extractions) == set(catalog.field_ids)


class TestSerialization:
    def test_prediction_round_trip(self, catalog, tmp_path):
        record, _ = parse_model_output(json.dumps(full_payload(catalog)), catalog, doc_id="d1", model_id="m")
        path = tmp_path / "preds.jsonl"
        write_predictions([record], path)
        loaded = read_predictions(path)
        assert loaded == [record]
        # serialize(parse(serialize(x))) is the identity on schema-valid records
        assert record_from_dict(record_to_dict(loaded[0])) == record

    def test_gold_round_trip(self, tmp_path):
        gold = GoldAnnotation(
            doc_id="d1",
            field_id="termination",
            display_answer=None,
            spans=(SupportingSpan("some clause", CharInterval(0, 11)),),
            adjudicated=True,
        )
        path = tmp_path / "gold.jsonl"
        write_gold([gold], path)
        assert read_gold(path) == [gold]
        assert gold_from_dict(gold_to_dict(gold)) == gold

    def test_gold_duplicate_rejected(self, tmp_path):
        gold = GoldAnnotation("d1", "termination", None, (SupportingSpan("x", CharInterval(0, 1)),))
        path = tmp_path / "gold.jsonl"
        write_gold([gold, gold], path)
        with pytest.raises(GoldFormatError):
            read_gold(path)

    def test_gold_span_must_round_trip_against_text(self, tmp_path):
        gold = GoldAnnotation("d1", "termination", None, (SupportingSpan("zzz", CharInterval(0, 3)),))
        path = tmp_path / "gold.jsonl"
        write_gold([gold], path)
        with pytest.raises(GoldFormatError):
            read_gold(path, texts={"d1": "abcdef"})
        # matching text passes
        assert read_gold(path, texts={"d1": "zzzdef"}) == [gold]


class TestInvariants:
    def test_absent_extraction_carries_no_content(self):
        with pytest.raises(ValueError):
            FieldExtraction("term", present=False, display_answer="x")

    def test_interval_validation(self):
        with pytest.raises(ValueError):
            CharInterval(5, 5)
        with pytest.raises(ValueError):
            CharInterval(-1, 3)
