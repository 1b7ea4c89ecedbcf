"""Shared document/instance data model.

Everything downstream (converters, sampler, model, scorers) works on the
types defined here: tokenized documents with stable character offsets,
token spans in half-open convention, and QA instances whose gold answer is
a set of context token indices.  All types are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum

from elqa.errors import ElqaError

__all__ = [
    "Task",
    "Split",
    "Direction",
    "Token",
    "TokenSpan",
    "Document",
    "QAInstance",
    "Mention",
    "tokenize",
    "split_sentences",
    "build_document",
    "document_from_sentences",
    "hull",
    "is_contiguous",
    "classify_direction",
    "REF_OPEN",
    "REF_CLOSE",
]

# Standalone question tokens marking the mention under resolution.
REF_OPEN = "<ref>"
REF_CLOSE = "</ref>"


class Task(Enum):
    SLUICE = "sluice"
    VPE = "vpe"
    COREF_ONTONOTES = "coref_ontonotes"
    COREF_WIKICOREF = "coref_wikicoref"
    SQUAD = "squad"

    @property
    def is_coref(self) -> bool:
        return self in (Task.COREF_ONTONOTES, Task.COREF_WIKICOREF)


class Split(Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


class Direction(Enum):
    """Position of the gold antecedent relative to the question."""

    BACKWARD = "backward"
    FORWARD = "forward"
    SAME_SENTENCE = "same_sentence"


# Canonical sort keys: enum declaration order.
TASK_ORDER = {t: i for i, t in enumerate(Task)}
SPLIT_ORDER = {s: i for i, s in enumerate(Split)}


@dataclass(frozen=True)
class Token:
    """A token with character offsets into its owning raw text."""

    text: str
    char_start: int
    char_end: int

    def __post_init__(self):
        if self.char_start < 0 or self.char_start >= self.char_end:
            raise ElqaError(
                f"bad token offsets ({self.char_start}, {self.char_end}) for {self.text!r}"
            )
        if len(self.text) != self.char_end - self.char_start:
            raise ElqaError(
                f"token text {self.text!r} does not fit offsets "
                f"({self.char_start}, {self.char_end})"
            )


@dataclass(frozen=True, order=True)
class TokenSpan:
    """Half-open token-index span [start, end).

    The empty span is never represented as start == end; use None where a
    prediction may be empty.
    """

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.start >= self.end:
            raise ElqaError(f"bad span ({self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def indices(self) -> frozenset[int]:
        return frozenset(range(self.start, self.end))

    def contains(self, other: "TokenSpan") -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: "TokenSpan") -> bool:
        return self.start < other.end and other.start < self.end


def hull(indices) -> TokenSpan:
    """Smallest contiguous span covering a non-empty token-index set."""
    idx = sorted(indices)
    if not idx:
        raise ElqaError("hull of empty index set")
    return TokenSpan(idx[0], idx[-1] + 1)


def is_contiguous(indices) -> bool:
    idx = sorted(indices)
    return bool(idx) and idx[-1] - idx[0] + 1 == len(idx)


@dataclass(frozen=True)
class Document:
    """Tokenized text with sentence boundaries; the QA context.

    sentence_bounds are half-open (first_token, last_token_exclusive) pairs
    that partition [0, len(tokens)).
    """

    doc_id: str
    raw_text: str
    tokens: tuple[Token, ...]
    sentence_bounds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(
            self, "sentence_bounds", tuple((int(a), int(b)) for a, b in self.sentence_bounds)
        )
        prev_end = -1
        for tok in self.tokens:
            if tok.char_start < prev_end:
                raise ElqaError(f"{self.doc_id}: token offsets not increasing at {tok!r}")
            if self.raw_text[tok.char_start : tok.char_end] != tok.text:
                raise ElqaError(
                    f"{self.doc_id}: token {tok.text!r} does not match raw text at "
                    f"[{tok.char_start}, {tok.char_end})"
                )
            prev_end = tok.char_end
        cursor = 0
        for a, b in self.sentence_bounds:
            if a != cursor or b <= a:
                raise ElqaError(f"{self.doc_id}: sentence bounds do not partition tokens")
            cursor = b
        if cursor != len(self.tokens):
            raise ElqaError(f"{self.doc_id}: sentence bounds do not cover all tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n_sentences(self) -> int:
        return len(self.sentence_bounds)

    def sentence_span(self, k: int) -> TokenSpan:
        a, b = self.sentence_bounds[k]
        return TokenSpan(a, b)

    def sentence_of_token(self, index: int) -> int:
        for k, (a, b) in enumerate(self.sentence_bounds):
            if a <= index < b:
                return k
        raise ElqaError(f"{self.doc_id}: token index {index} out of range")

    def sentence_text(self, k: int) -> str:
        a, b = self.sentence_bounds[k]
        return self.raw_text[self.tokens[a].char_start : self.tokens[b - 1].char_end]

    def span_text(self, span: TokenSpan) -> str:
        return self.raw_text[self.tokens[span.start].char_start : self.tokens[span.end - 1].char_end]

    def token_texts(self, span: TokenSpan | None = None) -> list[str]:
        toks = self.tokens if span is None else self.tokens[span.start : span.end]
        return [t.text for t in toks]


@dataclass(frozen=True)
class QAInstance:
    """One <context, question, answer> triple.

    The question carries its own tokens with offsets into question_text,
    independent of the context document.  gold_answer is a set of context
    token indices so that discontiguous gold antecedents are representable;
    gold_contiguous, when present, is always the covering hull (for
    contiguous answers the hull equals the answer exactly).

    question_mention is the context-side span of the mention marked in the
    question (coreference conversions only); it is what lets predictions be
    reinterpreted as coreference clusters.
    """

    instance_id: str
    task: Task
    split: Split
    context_doc_id: str
    question_text: str
    question_tokens: tuple[Token, ...]
    gold_answer: frozenset[int]
    gold_contiguous: TokenSpan | None
    antecedent_direction: Direction
    question_mention: TokenSpan | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "question_tokens", tuple(self.question_tokens))
        object.__setattr__(self, "gold_answer", frozenset(self.gold_answer))
        if not self.gold_answer:
            raise ElqaError(f"{self.instance_id}: empty gold answer")
        if any(i < 0 for i in self.gold_answer):
            raise ElqaError(f"{self.instance_id}: negative gold token index")
        if self.gold_contiguous is not None and self.gold_contiguous != hull(self.gold_answer):
            raise ElqaError(
                f"{self.instance_id}: gold_contiguous {self.gold_contiguous} is not the "
                f"hull of the gold answer"
            )
        if not self.question_tokens:
            raise ElqaError(f"{self.instance_id}: empty question")
        for tok in self.question_tokens:
            if self.question_text[tok.char_start : tok.char_end] != tok.text:
                raise ElqaError(
                    f"{self.instance_id}: question token {tok.text!r} does not match "
                    f"question text"
                )

    def question_token_texts(self) -> list[str]:
        return [t.text for t in self.question_tokens]


@dataclass(frozen=True)
class Mention:
    """A coreference mention: a sentence-internal span in a document."""

    doc_id: str
    span: TokenSpan
    chain_id: str


# --- Tokenization ---------------------------------------------------------

_CHUNK = re.compile(r"\S+")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(raw_text: str) -> list[Token]:
    """Whitespace tokenization with punctuation detachment.

    Leading and trailing punctuation characters of each whitespace chunk
    become their own single-character tokens; internal punctuation (e.g.
    the apostrophe in "don't", hyphens) stays attached.  Token offsets tile
    the chunk exactly, so joining token texts with the original inter-token
    characters reconstructs raw_text.
    """
    tokens: list[Token] = []
    for m in _CHUNK.finditer(raw_text):
        chunk, base = m.group(), m.start()
        lo, hi = 0, len(chunk)
        left: list[int] = []
        right: list[int] = []
        while lo < hi and _is_punct(chunk[lo]):
            left.append(lo)
            lo += 1
        while hi > lo and _is_punct(chunk[hi - 1]):
            hi -= 1
            right.append(hi)
        for i in left:
            tokens.append(Token(chunk[i], base + i, base + i + 1))
        if lo < hi:
            tokens.append(Token(chunk[lo:hi], base + lo, base + hi))
        for i in reversed(right):
            tokens.append(Token(chunk[i], base + i, base + i + 1))
    return tokens


_TERMINATORS = {".", "!", "?"}
_CLOSERS = set("\"')]}’”»")


def split_sentences(tokens: list[Token]) -> list[tuple[int, int]]:
    """Heuristic sentence boundaries over detached-punctuation tokens.

    A sentence ends at ./!/? tokens; closing quotes and brackets directly
    after a terminator attach to the finished sentence.  Intentionally
    simple: sources with known sentence structure (CoNLL, line-based
    documents) bypass this and supply their own bounds.
    """
    bounds: list[tuple[int, int]] = []
    start = 0
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i].text in _TERMINATORS:
            j = i + 1
            while j < n and (tokens[j].text in _CLOSERS or tokens[j].text in _TERMINATORS):
                j += 1
            bounds.append((start, j))
            start = j
            i = j
        else:
            i += 1
    if start < n:
        bounds.append((start, n))
    return bounds


def build_document(doc_id: str, raw_text: str) -> Document:
    """Tokenize raw text and derive sentence bounds heuristically."""
    tokens = tokenize(raw_text)
    return Document(doc_id, raw_text, tuple(tokens), tuple(split_sentences(tokens)))


def document_from_sentences(doc_id: str, sentences: list[list[str]]) -> Document:
    """Build a document from pre-tokenized sentences.

    Words are joined with single spaces, sentences with newlines; empty
    sentences are rejected.
    """
    tokens: list[Token] = []
    bounds: list[tuple[int, int]] = []
    parts: list[str] = []
    offset = 0
    for sent in sentences:
        if not sent:
            raise ElqaError(f"{doc_id}: empty sentence")
        first = len(tokens)
        for w, word in enumerate(sent):
            if not word or any(ch.isspace() for ch in word):
                raise ElqaError(f"{doc_id}: bad word {word!r}")
            if w > 0:
                offset += 1  # joining space
            tokens.append(Token(word, offset, offset + len(word)))
            offset += len(word)
        bounds.append((first, len(tokens)))
        parts.append(" ".join(sent))
        offset += 1  # joining newline
    return Document(doc_id, "\n".join(parts), tuple(tokens), tuple(bounds))


def classify_direction(
    answer: TokenSpan,
    question_sentence: TokenSpan,
    anchor: TokenSpan | None = None,
) -> Direction:
    """Classify where the antecedent sits relative to the question.

    BACKWARD: the answer lies entirely before the question sentence.
    FORWARD: entirely after it, or (within the sentence) strictly after the
    anchor material -- the ellipsis trigger or marked mention when known,
    otherwise the sentence-initial token, so a trailing in-sentence
    antecedent counts as forward.  Everything else (answer overlapping the
    sentence start or the anchor) is SAME_SENTENCE.
    """
    if answer.end <= question_sentence.start:
        return Direction.BACKWARD
    if answer.start >= question_sentence.end:
        return Direction.FORWARD
    ref_end = anchor.end if anchor is not None else question_sentence.start + 1
    if answer.start >= ref_end:
        return Direction.FORWARD
    return Direction.SAME_SENTENCE
