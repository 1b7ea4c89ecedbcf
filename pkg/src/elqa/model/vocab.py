"""Word vocabulary built from training data.

Lookup is lowercased; unseen words map to the trainable <unk> row.
Pretrained vectors (GloVe-style text: word followed by the vector values,
one word per line) overwrite the rows of words present in the vocabulary.
"""

from __future__ import annotations

from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from elqa.core import Document, QAInstance
from elqa.errors import ModelError

UNK = "<unk>"


class Vocabulary:
    def __init__(self, words: Sequence[str]):
        self._words = [UNK, *words]
        self._index = {w: i for i, w in enumerate(self._words)}
        if len(self._index) != len(self._words):
            raise ModelError("duplicate words in vocabulary")

    def __len__(self) -> int:
        return len(self._words)

    @property
    def words(self) -> list[str]:
        return list(self._words)

    def id_of(self, token_text: str) -> int:
        return self._index.get(token_text.lower(), 0)

    def ids(self, token_texts: Iterable[str]) -> np.ndarray:
        return np.array([self.id_of(t) for t in token_texts], dtype=np.int64)

    @classmethod
    def build(
        cls,
        instances: Iterable[QAInstance],
        documents: Mapping[str, Document],
        min_count: int = 1,
    ) -> "Vocabulary":
        counts: dict[str, int] = {}
        seen_docs: set[str] = set()
        for inst in instances:
            for tok in inst.question_tokens:
                w = tok.text.lower()
                counts[w] = counts.get(w, 0) + 1
            if inst.context_doc_id not in seen_docs:
                seen_docs.add(inst.context_doc_id)
                doc = documents.get(inst.context_doc_id)
                if doc is None:
                    raise ModelError(f"no document {inst.context_doc_id!r}")
                for tok in doc.tokens:
                    w = tok.text.lower()
                    counts[w] = counts.get(w, 0) + 1
        words = sorted(w for w, c in counts.items() if c >= min_count and w != UNK)
        return cls(words)


def load_pretrained(stream: IO[str], vocab: Vocabulary, emb: np.ndarray) -> int:
    """Overwrite embedding rows from a text vector file; returns hits."""
    dim = emb.shape[1]
    index = {w: i for i, w in enumerate(vocab.words)}
    hits = 0
    for line_no, raw in enumerate(stream, start=1):
        parts = raw.rstrip("\n").split(" ")
        if len(parts) < dim + 1:
            raise ModelError(f"embedding file line {line_no}: expected {dim} values")
        word = parts[0].lower()
        row = index.get(word)
        if row is None or row == 0:
            continue
        emb[row] = np.asarray(parts[-dim:], dtype=np.float64)
        hits += 1
    return hits
