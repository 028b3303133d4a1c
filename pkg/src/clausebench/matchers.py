"""Field-level matching rules and fuzzy span anchoring.

Matching is deliberately literal. There is no case folding, date parsing, or
currency normalisation; the only text normalisation anywhere is collapsing
whitespace runs before answer comparisons, since whitespace is a serialization
artifact rather than content. Every matcher is a pure function.

The fuzzy anchor finds the document window with the highest normalized edit
similarity to a quoted string:

    similarity = 1 - levenshtein(query, window) / max(len(query), len(window))

The search is exact, not heuristic. Window lengths outside the band
[lmin, lmax] cannot reach the similarity floor because edit distance is at
least the length difference, so restricting the scan to that band loses
nothing. Within the band, a vectorized DP computes the distance from the
query to every (start, length) window at once, chunked over start positions.
For long documents a semi-global prefilter first discards end positions whose
best achievable distance already exceeds the floor's budget; that prunes only
windows that are provably below the floor and can never be returned.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .schema import (
    CATEGORY_RULES,
    CharInterval,
    FieldExtraction,
    FieldSpec,
    GoldAnnotation,
    MatchRuleKind,
)

_WHITESPACE = re.compile(r"\s+")


def collapse_whitespace(text: str) -> str:
    return _WHITESPACE.sub(" ", text).strip()


@dataclass(frozen=True)
class MatchRule:
    kind: MatchRuleKind
    overlap_threshold: float = 0.5
    case_sensitive: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ValueError("overlap_threshold must be in (0, 1]")


@dataclass(frozen=True)
class RulesConfig:
    """Run-level matcher configuration, echoed into every score report."""

    overlap_threshold: float = 0.5
    case_sensitive: bool = True
    min_similarity: float = 0.9
    per_category: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)

    def rule_for(self, spec: FieldSpec) -> MatchRule:
        kind = spec.matching_rule or CATEGORY_RULES[spec.category]
        overrides = self.per_category.get(spec.category.value, {})
        return MatchRule(
            kind=kind,
            overlap_threshold=float(overrides.get("overlap_threshold", self.overlap_threshold)),
            case_sensitive=bool(overrides.get("case_sensitive", self.case_sensitive)),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "overlap_threshold": self.overlap_threshold,
            "case_sensitive": self.case_sensitive,
            "min_similarity": self.min_similarity,
            "per_category": {k: dict(v) for k, v in self.per_category.items()},
            "overlap_normalisation": "intersection / min(pred_len, gold_len)",
            "containment_direction": "bidirectional",
        }


def rules_from_dict(data: Mapping[str, Any]) -> RulesConfig:
    return RulesConfig(
        overlap_threshold=float(data.get("overlap_threshold", 0.5)),
        case_sensitive=bool(data.get("case_sensitive", True)),
        min_similarity=float(data.get("min_similarity", 0.9)),
        per_category=dict(data.get("per_category", {})),
    )


def load_rules(path: str | Path | None = None) -> RulesConfig:
    if path is None:
        return RulesConfig()
    with open(path, encoding="utf-8") as handle:
        return rules_from_dict(json.load(handle))


class MatchDetail(str, Enum):
    BY_ANSWER = "by_answer"
    BY_SPAN = "by_span"
    BY_EQUALITY = "by_equality"
    NONE = "none"


@dataclass(frozen=True)
class MatchOutcome:
    matched: bool
    rule_applied: MatchRuleKind
    detail: MatchDetail
    overlap_score: float | None = None


@dataclass(frozen=True)
class AnchorResult:
    interval: CharInterval
    similarity: float


def interval_overlap_score(pred: CharInterval, gold: CharInterval) -> float:
    """Pairwise overlap: |intersection| / min(|pred|, |gold|) in characters."""
    intersection = min(pred.end, gold.end) - max(pred.start, gold.start)
    if intersection <= 0:
        return 0.0
    return intersection / min(pred.length, gold.length)


def span_overlap(
    pred_spans: Sequence[CharInterval],
    gold_spans: Sequence[CharInterval],
    threshold: float,
) -> tuple[bool, float]:
    """True iff any (pred, gold) pair overlaps at or above the threshold.

    Returns the best pairwise score alongside (0.0 if either side is empty).
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    best = 0.0
    for pred in pred_spans:
        for gold in gold_spans:
            score = interval_overlap_score(pred, gold)
            if score > best:
                best = score
    return best >= threshold, best


def substring_containment(pred_answer: str, gold_answer: str, case_sensitive: bool = True) -> bool:
    """Whitespace-collapsed substring test in either direction.

    Punctuation, digits, and (by default) case are left untouched.
    """
    if not pred_answer or not gold_answer:
        raise ValueError("containment requires two non-empty strings")
    a = collapse_whitespace(pred_answer)
    b = collapse_whitespace(gold_answer)
    if not case_sensitive:
        a, b = a.lower(), b.lower()
    return a in b or b in a


def answers_equal(pred_answer: str, gold_answer: str, case_sensitive: bool = True) -> bool:
    a = collapse_whitespace(pred_answer)
    b = collapse_whitespace(gold_answer)
    if not case_sensitive:
        a, b = a.lower(), b.lower()
    return a == b


def _intervals(spans: Sequence) -> list[CharInterval]:
    return [s.interval for s in spans if s.interval is not None]


def match_field(
    pred: FieldExtraction,
    gold: GoldAnnotation,
    spec: FieldSpec,
    rules: RulesConfig,
) -> MatchOutcome:
    """Apply the category's matching rule to one prediction/gold pair."""
    if not (pred.field_id == gold.field_id == spec.field_id):
        raise ValueError(
            f"field mismatch: pred={pred.field_id} gold={gold.field_id} spec={spec.field_id}"
        )
    rule = rules.rule_for(spec)
    if not pred.present:
        return MatchOutcome(False, rule.kind, MatchDetail.NONE)

    if rule.kind is MatchRuleKind.SPAN_OVERLAP:
        ok, best = span_overlap(_intervals(pred.spans), _intervals(gold.spans), rule.overlap_threshold)
        return MatchOutcome(ok, rule.kind, MatchDetail.BY_SPAN if ok else MatchDetail.NONE, best)

    if rule.kind is MatchRuleKind.CONTAINMENT_OR_OVERLAP:
        if (
            pred.display_answer
            and gold.display_answer
            and substring_containment(pred.display_answer, gold.display_answer, rule.case_sensitive)
        ):
            return MatchOutcome(True, rule.kind, MatchDetail.BY_ANSWER)
        ok, best = span_overlap(_intervals(pred.spans), _intervals(gold.spans), rule.overlap_threshold)
        return MatchOutcome(ok, rule.kind, MatchDetail.BY_SPAN if ok else MatchDetail.NONE, best)

    # exact_option and exact_string both come down to answer equality.
    if not pred.display_answer or not gold.display_answer:
        return MatchOutcome(False, rule.kind, MatchDetail.NONE)
    ok = answers_equal(pred.display_answer, gold.display_answer, rule.case_sensitive)
    return MatchOutcome(ok, rule.kind, MatchDetail.BY_EQUALITY if ok else MatchDetail.NONE)


def _codepoints(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)


def _length_band(m: int, n: int, min_similarity: float) -> tuple[int, int]:
    """Window lengths that could still reach the floor.

    Edit distance is bounded below by the length difference, so a window of
    length L has similarity at most 1 - |L - m| / max(L, m). The scans below
    evaluate that bound with the same float arithmetic the scorer uses, which
    keeps the band exact even when s * m rounds awkwardly.
    """
    lo = max(1, int(min_similarity * m) - 2)
    while lo < m and 1.0 - (m - lo) / m < min_similarity:
        lo += 1
    hi = int(m / min_similarity) + 2
    while hi > m and 1.0 - (hi - m) / hi < min_similarity:
        hi -= 1
    return lo, min(hi, n)


def _candidate_starts(
    q: np.ndarray, t: np.ndarray, lmin: int, lmax: int, min_similarity: float
) -> np.ndarray:
    """Start positions that can admit a window at or above the floor.

    A semi-global DP (free start gap) yields, for every end position j, the
    minimum edit distance over all windows ending at j. Ends whose minimum
    already exceeds the floor's distance budget are discarded, and surviving
    ends are dilated back to the starts that could pair with them. Only
    provably sub-floor windows are pruned.
    """
    m, n = int(q.size), int(t.size)
    pos = np.arange(n + 1, dtype=np.int64)
    row = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, m + 1):
        cand = np.empty(n + 1, dtype=np.int64)
        cand[0] = k
        np.minimum(row[1:] + 1, row[:-1] + (t != q[k - 1]), out=cand[1:])
        # Unrolls R[j] = min(cand[j], R[j-1] + 1) into a prefix minimum.
        row = np.minimum.accumulate(cand - pos) + pos
    budget = (1.0 - min_similarity) * max(m, lmax) + 1e-9
    keep_end = row <= budget
    if not keep_end.any():
        return np.empty(0, dtype=np.int64)
    kept = np.cumsum(keep_end)
    starts = np.arange(n, dtype=np.int64)
    lo = starts + lmin
    hi = np.minimum(starts + lmax, n)
    count = np.zeros(n, dtype=np.int64)
    ok = lo <= n
    count[ok] = kept[hi[ok]] - kept[lo[ok] - 1]
    return np.nonzero(count > 0)[0]


_CHUNK_CELLS = 2_000_000


def _band_scan(
    q: np.ndarray, t: np.ndarray, starts: np.ndarray, lmin: int, lmax: int
) -> tuple[float, int, int] | None:
    """Best (similarity, start, end) over the candidate windows.

    Ties go to the smallest start, then the smallest end; np.argmax's
    first-occurrence semantics on the start-major similarity matrix give
    exactly that order within a chunk, and strict improvement across chunks
    preserves it globally.
    """
    m, n = int(q.size), int(t.size)
    col = np.arange(lmax + 1, dtype=np.int32)
    offsets = np.arange(lmax, dtype=np.int64)
    lengths = np.arange(lmin, lmax + 1, dtype=np.int64)
    denom = np.maximum(lengths, m).astype(np.float64)
    chunk = max(128, _CHUNK_CELLS // (lmax + 1))
    best: tuple[float, int, int] | None = None
    for base in range(0, int(starts.size), chunk):
        S = starts[base : base + chunk]
        idx = S[:, None] + offsets[None, :]
        chars = t[np.minimum(idx, n - 1)]
        row = np.broadcast_to(col, (S.size, lmax + 1)).copy()
        for k in range(1, m + 1):
            cand = np.empty_like(row)
            cand[:, 0] = k
            np.minimum(
                row[:, 1:] + 1,
                row[:, :-1] + (chars != q[k - 1]),
                out=cand[:, 1:],
            )
            row = np.minimum.accumulate(cand - col, axis=1) + col
        dist = row[:, lmin:].astype(np.float64)
        sims = 1.0 - dist / denom[None, :]
        sims[S[:, None] + lengths[None, :] > n] = -1.0
        flat = int(np.argmax(sims))
        value = float(sims.flat[flat])
        if best is None or value > best[0]:
            si, li = divmod(flat, lengths.size)
            start = int(S[si])
            best = (value, start, start + int(lengths[li]))
    return best


def fuzzy_anchor(query: str, text: str, min_similarity: float = 0.9) -> AnchorResult | None:
    """Locate the best-matching window for a quoted string in source text.

    An exact substring short-circuits to its first occurrence at similarity
    1.0. Otherwise the window maximizing normalized edit similarity is
    returned, provided it reaches min_similarity; ties break to the smallest
    start offset, then the smallest end.
    """
    if not query:
        raise ValueError("query must be non-empty")
    if not 0.0 < min_similarity <= 1.0:
        raise ValueError("min_similarity must be in (0, 1]")
    pos = text.find(query)
    if pos >= 0:
        return AnchorResult(CharInterval(pos, pos + len(query)), 1.0)
    if not text:
        return None
    m, n = len(query), len(text)
    lmin, lmax = _length_band(m, n, min_similarity)
    if lmin > lmax:
        return None
    q, t = _codepoints(query), _codepoints(text)
    if n > max(4 * lmax, 4096):
        starts = _candidate_starts(q, t, lmin, lmax, min_similarity)
    else:
        starts = np.arange(n - lmin + 1, dtype=np.int64)
    if starts.size == 0:
        return None
    best = _band_scan(q, t, starts, lmin, lmax)
    if best is None or best[0] < min_similarity:
        return None
    return AnchorResult(CharInterval(best[1], best[2]), best[0])
