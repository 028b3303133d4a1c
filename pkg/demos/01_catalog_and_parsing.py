"""Walk through the field catalog, prompt assembly, and output parsing.

The catalog defines 26 extraction targets in six categories. A model is asked
for every field in one call and must return, per field, a display answer plus
verbatim supporting spans. Parsing is lenient: malformed pieces become issues
and absences, never exceptions.
"""

import json

from clausebench import build_prompt, default_catalog, load_document, parse_model_output
from clausebench.validation import validate_extraction

catalog = default_catalog()
print(f"catalog has {len(catalog)} fields:")
for spec in catalog.fields:
    options = f"  options={list(spec.option_list)}" if spec.option_list else ""
    print(f"  {spec.field_id:<28} {spec.category.value:<15} rule={spec.matching_rule.value}{options}")

contract = (
    "This Master Services Agreement is entered into by Acme Corp and Beta LLC. "
    "Section 1. Term. The term of this Agreement is 3 years from the Effective Date. "
    "Section 2. Governing Law. This Agreement is governed by the laws of Delaware."
)
doc = load_document(contract, doc_id="demo-001", contract_type="SaaS")
bundle = build_prompt(doc, catalog)
print("\nsystem prompt begins:\n" + bundle.system_prompt[:300] + "...\n")
print(f"user prompt carries the full contract: {doc.text in bundle.user_prompt}")

# A partial, slightly messy model response: one good field, one field with a
# fabricated span, one unknown field, everything else omitted.
response = json.dumps(
    {
        "term": {"answer": "3 years", "spans": ["The term of this Agreement is 3 years"]},
        "governing_law": {"answer": "Delaware", "spans": ["governed by the laws of Delaware"]},
        "annual_contract_value": {"answer": "$9,999", "spans": ["a span that is not in the text"]},
        "venue": {"answer": "Delaware courts", "spans": []},
    }
)
record, issues = parse_model_output(response, catalog, doc_id=doc.doc_id, model_id="demo-model")
print(f"\nparsed {sum(e.present for e in record.extractions.values())} present fields;"
      f" {len(issues)} parse issues, e.g.:")
for issue in issues[:3]:
    print(f"  [{issue.kind}] {issue.field_id}: {issue.detail}")

report = validate_extraction(record, catalog, doc)
print(f"\nvalidation violations ({len(report.violations)}):")
for violation in report.violations[:5]:
    print(f"  {violation}")
print("\nanchored spans:")
for check in report.span_checks:
    print(f"  {check.field_id}[{check.span_index}] -> {check.status}"
          + (f" at [{check.start}, {check.end}) sim={check.similarity:.3f}" if check.start is not None else ""))
