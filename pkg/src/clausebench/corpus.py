"""Documents, token counting, pool filtering, and leak-free stratified splits."""

from __future__ import annotations

import functools
import hashlib
import math
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ._jsonl import read_jsonl, write_jsonl


class CorpusError(ValueError):
    """Raised for malformed corpora, manifests, or split requests."""


DEFAULT_TOKEN_PATTERN = r"\w+|[^\w\s]"


@dataclass(frozen=True)
class TokenizerConfig:
    """Deterministic word+punctuation segmenter; the pattern is config."""

    pattern: str = DEFAULT_TOKEN_PATTERN


DEFAULT_TOKENIZER = TokenizerConfig()


@functools.lru_cache(maxsize=16)
def _compiled(pattern: str) -> re.Pattern[str]:
    return re.compile(pattern)


def count_tokens(text: str, tokenizer: TokenizerConfig = DEFAULT_TOKENIZER) -> int:
    """Token count under the configured segmenter; monotone under concatenation."""
    return sum(1 for _ in _compiled(tokenizer.pattern).finditer(text))


@dataclass(frozen=True)
class Document:
    """A contract's identity, type, and verbatim text.

    The text is stored byte-for-byte as loaded; all character offsets in the
    system index into it, so it must never be case-folded or re-wrapped.
    """

    doc_id: str
    contract_type: str
    text: str
    char_count: int
    token_count: int


def load_document(
    text: str,
    *,
    doc_id: str,
    contract_type: str = "unknown",
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
    token_count: int | None = None,
) -> Document:
    if not text:
        raise CorpusError(f"{doc_id}: document text is empty")
    if not doc_id:
        raise CorpusError("doc_id must be non-empty")
    tokens = count_tokens(text, tokenizer) if token_count is None else token_count
    return Document(
        doc_id=doc_id,
        contract_type=contract_type,
        text=text,
        char_count=len(text),
        token_count=tokens,
    )


@dataclass(frozen=True)
class PoolFilterPolicy:
    min_tokens: int
    max_tokens: int
    min_fields_found: int
    total_fields: int

    def __post_init__(self) -> None:
        if not 0 < self.min_tokens < self.max_tokens:
            raise ValueError("need 0 < min_tokens < max_tokens")
        if not 0 <= self.min_fields_found <= self.total_fields:
            raise ValueError("need 0 <= min_fields_found <= total_fields")


def filter_pool(
    docs: Sequence[Document],
    prelim: Mapping[str, int],
    policy: PoolFilterPolicy,
) -> list[Document]:
    """Keep documents inside the token band whose preliminary pass found enough fields.

    Both token bounds are inclusive. Input order is preserved.
    """
    kept = []
    for doc in docs:
        if doc.doc_id not in prelim:
            raise CorpusError(f"{doc.doc_id}: no preliminary field count")
        if not policy.min_tokens <= doc.token_count <= policy.max_tokens:
            continue
        if prelim[doc.doc_id] < policy.min_fields_found:
            continue
        kept.append(doc)
    return kept


SPLITS = ("train", "validation", "holdout")


@dataclass(frozen=True)
class SplitAssignment:
    doc_id: str
    split: str


def _allocate(total: int, fractions: Sequence[tuple[str, float]]) -> list[int]:
    # Largest-remainder rounding keeps every count within one document of
    # total * fraction.
    ideal = [total * frac for _, frac in fractions]
    counts = [math.floor(x) for x in ideal]
    remainder = total - sum(counts)
    order = sorted(range(len(fractions)), key=lambda i: (counts[i] - ideal[i], i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def split_dataset(
    docs: Sequence[Document],
    fractions: Mapping[str, float],
    seed: int,
) -> list[SplitAssignment]:
    """Seeded, stratified partition of the corpus by contract type.

    Within each contract_type stratum documents are shuffled with a seed
    derived from (seed, stratum) and sliced contiguously, so the assignment is
    deterministic and independent of input order.
    """
    if not docs:
        raise CorpusError("cannot split an empty corpus")
    ids = [d.doc_id for d in docs]
    if len(set(ids)) != len(ids):
        raise CorpusError("duplicate doc_id in corpus")
    if not fractions:
        raise CorpusError("no split fractions given")
    for name, weight in fractions.items():
        if name not in SPLITS:
            raise CorpusError(f"unknown split {name!r}; expected one of {SPLITS}")
        if weight < 0:
            raise CorpusError(f"negative fraction for split {name!r}")
    if abs(sum(fractions.values()) - 1.0) > 1e-9:
        raise CorpusError("split fractions must sum to 1")

    strata: dict[str, list[str]] = {}
    for doc in docs:
        strata.setdefault(doc.contract_type, []).append(doc.doc_id)

    items = list(fractions.items())
    assignments: list[SplitAssignment] = []
    for contract_type in sorted(strata):
        members = sorted(strata[contract_type])
        random.Random(f"{seed}|{contract_type}").shuffle(members)
        counts = _allocate(len(members), items)
        cursor = 0
        for (split_name, _), count in zip(items, counts):
            for doc_id in members[cursor : cursor + count]:
                assignments.append(SplitAssignment(doc_id, split_name))
            cursor += count
    return assignments


def write_splits(assignments: Iterable[SplitAssignment], path: str | Path) -> None:
    write_jsonl(({"doc_id": a.doc_id, "split": a.split} for a in assignments), path)


def read_splits(path: str | Path) -> list[SplitAssignment]:
    out = []
    for data in read_jsonl(path):
        split = data["split"]
        if split not in SPLITS:
            raise CorpusError(f"{path}: unknown split {split!r}")
        out.append(SplitAssignment(data["doc_id"], split))
    return out


def save_corpus(
    docs: Sequence[Document],
    directory: str | Path,
    *,
    manifest_name: str = "manifest.jsonl",
) -> Path:
    """Write one text file per document plus a manifest pointing at them."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for doc in docs:
        rel = f"{doc.doc_id}.txt"
        (directory / rel).write_text(doc.text, encoding="utf-8")
        entries.append(
            {
                "doc_id": doc.doc_id,
                "contract_type": doc.contract_type,
                "path": rel,
                "token_count": doc.token_count,
            }
        )
    manifest = directory / manifest_name
    write_jsonl(entries, manifest)
    return manifest


def load_corpus(
    manifest_path: str | Path,
    *,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
) -> list[Document]:
    """Load documents listed in a manifest; paths are relative to the manifest."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    docs: list[Document] = []
    seen: set[str] = set()
    for entry in read_jsonl(manifest_path):
        doc_id = entry.get("doc_id")
        if not doc_id:
            raise CorpusError(f"{manifest_path}: manifest entry without doc_id")
        if doc_id in seen:
            raise CorpusError(f"{manifest_path}: duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        text = (base / entry["path"]).read_text(encoding="utf-8")
        docs.append(
            load_document(
                text,
                doc_id=doc_id,
                contract_type=entry.get("contract_type", "unknown"),
                tokenizer=tokenizer,
                token_count=entry.get("token_count"),
            )
        )
    return docs


def corpus_hash(docs: Sequence[Document]) -> str:
    digest = hashlib.sha256()
    for doc in sorted(docs, key=lambda d: d.doc_id):
        digest.update(doc.doc_id.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(hashlib.sha256(doc.text.encode("utf-8")).digest())
    return digest.hexdigest()
