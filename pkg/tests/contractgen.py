"""Synthetic contract fixtures with exactly known gold annotations.

Each built contract embeds one uniquely numbered clause per present field, so
every gold span interval is known at assembly time and span text is unique
within the document (exact anchoring lands on the gold interval).
"""

from __future__ import annotations

import json
import random

from clausebench.corpus import Document, load_document
from clausebench.schema import (
    CharInterval,
    FieldCatalog,
    FieldCategory,
    GoldAnnotation,
    SupportingSpan,
)

_FILLER_WORDS = (
    "hereunder", "obligations", "provision", "reasonable", "written", "notice",
    "services", "deliverables", "applicable", "law", "party", "parties",
    "agreement", "shall", "remain", "effect", "subject", "section",
)

_DATES = ("January 17, 2020", "March 3, 2021", "July 9, 2019", "October 30, 2022")
_DURATIONS = ("2 years", "3 years", "18 months", "5 years")
_NOTICE = ("30 days", "60 days", "90 days", "45 days")
_FREQ = ("monthly", "quarterly", "annually")
_MONEY = ("$250,000", "$1,200,000", "$75,500", "$980,000")
_STATES = ("Delaware", "New York", "California", "Washington")
_NAMES = ("Master Services Agreement", "Supply Agreement", "License Agreement")
_COMPANIES = ("Acme Corp", "Beta LLC", "Gamma Holdings", "Delta Systems Inc")


def _filler(rng: random.Random, n_words: int) -> str:
    return " ".join(rng.choice(_FILLER_WORDS) for _ in range(n_words))


def _clause_sentence(rng: random.Random, section: int, field_display: str, body: str) -> str:
    return f"Section {section}. {field_display}. {body} {_filler(rng, rng.randint(4, 10))}."


def _value_clause(field_id: str, answer: str) -> str:
    yes = answer == "Yes"
    if field_id == "term":
        return f"The term of this Agreement is {answer} from the Effective Date"
    if field_id == "payment_term":
        return f"Invoices are payable within {answer} of receipt"
    if field_id == "payment_period_frequency":
        return f"Fees are invoiced {answer} in advance"
    if field_id == "renewal_term":
        return f"This Agreement renews for successive {answer} periods"
    if field_id == "renewal_notice_period":
        return f"Either party may decline renewal on {answer}' written notice"
    if field_id == "termination_notice_window":
        return f"Either party may terminate on {answer}' prior notice"
    if field_id == "effective_date":
        return f"This Agreement is effective as of {answer}"
    if field_id == "executed_date":
        return f"Executed by the parties on {answer}"
    if field_id == "end_date":
        return f"This Agreement expires on {answer}"
    if field_id == "annual_contract_value":
        return f"Annual fees shall not exceed {answer}"
    if field_id == "total_contract_value":
        return f"Total fees shall not exceed {answer} over the term"
    if field_id == "termination_for_cause":
        return "Either party may terminate for material breach" if yes else "No termination right arises from breach alone"
    if field_id == "termination_for_convenience":
        return "Either party may terminate for convenience" if yes else "Neither party may terminate for convenience"
    if field_id == "exclusions_from_liability":
        return "Liability exclusions apply as set out here" if yes else "No liability exclusions apply"
    if field_id == "renewal_type":
        return {
            "Automatic": "This Agreement renews automatically unless notice is given",
            "Optional": "The customer may optionally renew this Agreement",
            "None": "This Agreement does not renew",
        }[answer]
    if field_id == "contract_name":
        return f"This Agreement is titled {answer}"
    if field_id == "parties":
        return f"The parties to this Agreement are {answer}"
    if field_id == "governing_law":
        return f"This Agreement is governed by the laws of {answer}"
    raise KeyError(field_id)


def build_contract(
    rng: random.Random,
    catalog: FieldCatalog,
    doc_id: str,
    *,
    drop_fields: frozenset[str] = frozenset(),
    contract_type: str = "NDA",
) -> tuple[Document, dict[str, GoldAnnotation]]:
    name = f"{rng.choice(_NAMES)} {rng.randint(100, 999)}"
    parties = f"{rng.choice(_COMPANIES)} and {rng.choice(_COMPANIES)}"
    values: dict[str, str | None] = {
        "term": rng.choice(_DURATIONS),
        "payment_term": rng.choice(_NOTICE),
        "payment_period_frequency": rng.choice(_FREQ),
        "renewal_term": rng.choice(_DURATIONS),
        "renewal_notice_period": rng.choice(_NOTICE),
        "termination_notice_window": rng.choice(_NOTICE),
        "effective_date": rng.choice(_DATES),
        "executed_date": rng.choice(_DATES),
        "end_date": rng.choice(_DATES),
        "annual_contract_value": rng.choice(_MONEY),
        "total_contract_value": rng.choice(_MONEY),
        "termination_for_cause": rng.choice(("Yes", "No")),
        "termination_for_convenience": rng.choice(("Yes", "No")),
        "exclusions_from_liability": rng.choice(("Yes", "No")),
        "renewal_type": rng.choice(("Automatic", "Optional", "None")),
        "contract_name": name,
        "parties": parties,
        "governing_law": rng.choice(_STATES),
    }

    parts: list[str] = []
    cursor = 0

    def emit(text: str) -> tuple[int, int]:
        nonlocal cursor
        parts.append(text)
        start = cursor
        cursor += len(text)
        return start, cursor

    golds: dict[str, GoldAnnotation] = {}
    emit(f'This {name} ("Agreement") is entered into by {parties}.')
    emit("\n\n")

    section = 0
    for spec in catalog.fields:
        section += 1
        if spec.field_id in drop_fields:
            emit(_filler(rng, rng.randint(8, 16)) + ".")
            emit("\n\n")
            continue
        if spec.category is FieldCategory.EXTRACTED_TEXT:
            answer = None
            body = f"The parties agree on {spec.display_name.lower()} terms"
        else:
            answer = values[spec.field_id]
            body = _value_clause(spec.field_id, answer)
        clause = _clause_sentence(rng, section, spec.display_name, body)
        start, end = emit(clause)
        emit("\n\n")
        golds[spec.field_id] = GoldAnnotation(
            doc_id=doc_id,
            field_id=spec.field_id,
            display_answer=answer,
            spans=(SupportingSpan(clause, CharInterval(start, end)),),
            adjudicated=True,
        )

    emit("IN WITNESS WHEREOF, the parties execute this Agreement.")
    text = "".join(parts)
    doc = load_document(text, doc_id=doc_id, contract_type=contract_type)
    for gold in golds.values():
        for span in gold.spans:
            assert text[span.interval.start : span.interval.end] == span.quoted_text
    return doc, golds


def wire_response(golds: dict[str, GoldAnnotation], catalog: FieldCatalog) -> str:
    """Model-output JSON that echoes a gold annotation set exactly."""
    payload: dict[str, object] = {}
    for spec in catalog.fields:
        gold = golds.get(spec.field_id)
        if gold is None:
            payload[spec.field_id] = {"answer": None, "spans": []}
        else:
            payload[spec.field_id] = {
                "answer": gold.display_answer,
                "spans": [s.quoted_text for s in gold.spans],
            }
    return json.dumps(payload, ensure_ascii=False)


def build_corpus(
    seed: int,
    catalog: FieldCatalog,
    n_docs: int,
    *,
    drop_rate: float = 0.15,
) -> tuple[list[Document], dict[str, dict[str, GoldAnnotation]]]:
    """n_docs contracts with some fields randomly absent per document."""
    rng = random.Random(seed)
    docs: list[Document] = []
    gold_by_doc: dict[str, dict[str, GoldAnnotation]] = {}
    for i in range(n_docs):
        droppable = [s.field_id for s in catalog.fields if rng.random() < drop_rate]
        doc, golds = build_contract(
            rng,
            catalog,
            f"doc-{i:03d}",
            drop_fields=frozenset(droppable),
            contract_type=rng.choice(("NDA", "SOW", "Finance")),
        )
        docs.append(doc)
        gold_by_doc[doc.doc_id] = golds
    return docs, gold_by_doc
