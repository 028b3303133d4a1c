"""Anchor quoted strings back into source text by edit similarity.

Synthetic labels and model outputs quote the contract, but quotes drift: OCR
noise, normalized whitespace, small paraphrases. fuzzy_anchor finds the
window of the source text with the highest normalized edit similarity
(1 - distance / max(len)) and reports exactly where the quote lives.
"""

from clausebench import fuzzy_anchor, load_document

doc = load_document(
    "12. Force Majeure. Neither party shall be liable for any failure or delay "
    "in performance under this Agreement to the extent such failure or delay is "
    "caused by a Force Majeure event, including acts of God, war, riot, or "
    "natural disaster, provided the affected party gives prompt written notice.",
    doc_id="fm-demo",
)

queries = [
    "Force Majeure event",          # verbatim: exact fast path
    "Force Majure event",           # misspelled: fuzzy window
    "failure or  delay in performnce",  # extra space + typo
    "indemnification obligations",  # not in the text at all
]

for query in queries:
    result = fuzzy_anchor(query, doc.text, min_similarity=0.8)
    if result is None:
        print(f"{query!r}\n  -> no window at or above the floor\n")
        continue
    window = doc.text[result.interval.start : result.interval.end]
    print(f"{query!r}\n  -> [{result.interval.start}, {result.interval.end}) "
          f"sim={result.similarity:.4f}  window={window!r}\n")

# The similarity floor is a dial: a sloppy quote that anchors at 0.8 may not
# anchor at 0.95.
sloppy = "Force Majure events"
for floor in (0.8, 0.95):
    result = fuzzy_anchor(sloppy, doc.text, min_similarity=floor)
    print(f"floor {floor}: {sloppy!r} ->", "anchored" if result else "rejected")
