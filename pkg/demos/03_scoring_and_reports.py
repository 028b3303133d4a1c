"""Score two stub models on a tiny corpus and render every report surface.

One adapter echoes the gold labels (a perfect model); the other drops and
mangles fields. Scoring runs the real pipeline: run matrix -> parse ->
anchor -> tally -> aggregate -> render.
"""

import json
import random

from clausebench import (
    FnAdapter,
    RulesConfig,
    build_scoreboard,
    default_catalog,
    load_document,
    run_matrix,
)
from clausebench.modelgate import parse_records
from clausebench.reporting import (
    ReportBundle,
    render_field_grid,
    render_leader_summary,
    render_leaderboard,
)
from clausebench.schema import CharInterval, GoldAnnotation, SupportingSpan
from clausebench.validation import validate_extraction

rng = random.Random(3)
catalog = default_catalog()
rules = RulesConfig()

# Build three one-clause-per-field contracts and their gold annotations.
docs, gold_by_doc = [], {}
for d in range(3):
    parts, golds, cursor = [], {}, 0
    for i, spec in enumerate(catalog.fields):
        answer = spec.option_list[0] if spec.option_list else f"value {d}-{i}"
        clause = f"Clause {d}.{i} ({spec.display_name}): the contract states {answer} here."
        parts.append(clause)
        golds[spec.field_id] = GoldAnnotation(
            doc_id=f"doc-{d}",
            field_id=spec.field_id,
            display_answer=None if spec.category.value == "extracted_text" else answer,
            spans=(SupportingSpan(clause, CharInterval(cursor, cursor + len(clause))),),
        )
        cursor += len(clause) + 2
    doc = load_document("\n\n".join(parts), doc_id=f"doc-{d}")
    docs.append(doc)
    gold_by_doc[doc.doc_id] = golds


def wire(golds, degrade=False):
    payload = {}
    for spec in catalog.fields:
        gold = golds[spec.field_id]
        if degrade and rng.random() < 0.3:
            payload[spec.field_id] = {"answer": None, "spans": []}  # dropped field
        elif degrade and rng.random() < 0.2:
            payload[spec.field_id] = {"answer": "wrong", "spans": []}  # wrong value
        else:
            payload[spec.field_id] = {
                "answer": gold.display_answer,
                "spans": [s.quoted_text for s in gold.spans],
            }
    return json.dumps(payload)


adapters = [
    FnAdapter("echo-model", lambda b: wire(gold_by_doc[b.doc_id])),
    FnAdapter("lossy-model", lambda b: wire(gold_by_doc[b.doc_id], degrade=True)),
]
result = run_matrix(docs, adapters, catalog, concurrency_limit=4)
parsed, _ = parse_records(result.records, catalog)

doc_index = {d.doc_id: d for d in docs}
golds = [g for by_field in gold_by_doc.values() for g in by_field.values()]
boards = []
for model_id in ("echo-model", "lossy-model"):
    records = [
        validate_extraction(r, catalog, doc_index[r.doc_id], rules=rules).anchored_record
        for r in parsed
        if r.model_id == model_id
    ]
    boards.append(build_scoreboard(records, golds, catalog, rules, model_id=model_id))

bundle = ReportBundle.from_scoreboards(boards, catalog)
print(render_leaderboard(bundle, "micro"), "\n")
print(render_leaderboard(bundle, "macro"), "\n")
print(render_leader_summary(bundle, "echo-model", margin=0.05), "\n")
print(render_field_grid(bundle)[:800], "...")
