"""The synthetic-label pipeline: generate, anchor, judge, export.

A generator model proposes per-field labels with quoted spans; quotes are
fuzzy-anchored back to the source text (fabrications drop out here); a judge
panel scores answer quality and span validity against the anchored context;
survivors export in the gold-annotation format with a prevalence manifest.
"""

import json
import tempfile
from pathlib import Path

from clausebench import StaticAdapter, default_catalog, load_document
from clausebench.corpus import SplitAssignment
from clausebench.labelforge import (
    JudgeThresholds,
    StaticJudge,
    export_corpus,
    run_pipeline,
)

catalog = default_catalog()
doc = load_document(
    "Section 9. Termination. Either party may terminate this Agreement for "
    "material breach on 30 days' written notice. Section 10. Governing Law. "
    "This Agreement is governed by the laws of Delaware.",
    doc_id="train-0001",
    contract_type="NDA",
)

# The generator proposes three labels: a clean one, one with a noisy quote
# (anchorable), and one with a fabricated quote (dropped at anchoring).
generator = StaticAdapter(
    "frontier-generator",
    json.dumps(
        {
            "governing_law": {
                "answer": "Delaware",
                "spans": ["governed by the laws of Delaware"],
            },
            "termination_notice_window": {
                "answer": "30 days",
                "spans": ["terminate this Agrement for material breach on 30 days"],
            },
            "annual_contract_value": {
                "answer": "$500,000",
                "spans": ["fees of $500,000 per annum"],
            },
        }
    ),
)

panel = [StaticJudge("judge-a", 0.95, 0.9), StaticJudge("judge-b", 0.85, 0.8)]
result = run_pipeline(
    doc,
    catalog,
    generator,
    panel,
    thresholds=JudgeThresholds(0.7, 0.7),
    quorum="all",
    min_similarity=0.85,
)

print(f"candidates: {len(result.candidates)}")
print(f"accepted:   {[label.field_id for label in result.accepted]}")
for rejection in result.rejected:
    print(f"rejected:   {rejection.candidate.field_id} ({rejection.reason})")

for label in result.accepted:
    for span in label.spans:
        print(f"  {label.field_id}: anchored at [{span.interval.start}, {span.interval.end}) "
              f"sim={span.anchor_similarity:.3f}")

with tempfile.TemporaryDirectory() as tmp:
    export = export_corpus(
        result.accepted,
        [SplitAssignment(doc.doc_id, "train")],
        Path(tmp) / "labels",
        {doc.doc_id: doc},
    )
    print("\nexport manifest:")
    print(json.dumps(export.manifest, indent=2))
