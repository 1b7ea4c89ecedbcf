"""CoNLL-2012 column-format reader and coreference conversion.

Handles OntoNotes files and WikiCoref exports in the shared-task layout:
a `#begin document (name); part NNN` header, one token per line with at
least twelve whitespace-separated columns (word in column 4, coreference
in the last column), blank lines between sentences, `#end document`.

Conversion follows the first-mention convention: within each chain, every
mention except the chain-initial one becomes a question (its sentence with
<ref>/</ref> inserted as standalone tokens around the mention) whose
answer is the chain-initial mention's span.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import IO

from elqa.core import (
    REF_CLOSE,
    REF_OPEN,
    Document,
    Mention,
    QAInstance,
    Split,
    Task,
    Token,
    TokenSpan,
    classify_direction,
    document_from_sentences,
)
from elqa.errors import ElqaError, FormatError

_BEGIN = re.compile(r"#begin document \((?P<name>.*)\); part (?P<part>\d+)\s*$")
_COREF_ITEM = re.compile(r"^(\((?P<open>\d+)\)?|(?P<close>\d+)\))$")
_MIN_COLUMNS = 12


@dataclass(frozen=True)
class CorefDocument:
    """A document plus its coreference chains (mentions in document order)."""

    document: Document
    chains: dict[str, tuple[Mention, ...]]

    def __post_init__(self):
        doc = self.document
        for chain_id, mentions in self.chains.items():
            for m in mentions:
                if m.doc_id != doc.doc_id:
                    raise ElqaError(
                        f"chain {chain_id!r}: mention doc {m.doc_id!r} != {doc.doc_id!r}"
                    )
                if m.span.end > len(doc):
                    raise ElqaError(f"chain {chain_id!r}: mention out of range")
                if doc.sentence_of_token(m.span.start) != doc.sentence_of_token(
                    m.span.end - 1
                ):
                    raise ElqaError(
                        f"chain {chain_id!r}: mention {m.span} crosses sentence bounds"
                    )


def _parse_coref_column(field: str, line_no: int):
    """Yield ('open'|'close'|'both', chain id) events for one token."""
    if field == "-":
        return
    for item in field.split("|"):
        m = _COREF_ITEM.match(item)
        if m is None:
            raise FormatError(f"bad coreference field {field!r}", line=line_no)
        if m.group("open") is not None:
            if item.endswith(")"):
                yield "both", m.group("open")
            else:
                yield "open", m.group("open")
        else:
            yield "close", m.group("close")


def read_conll(stream: IO[str]) -> list[CorefDocument]:
    """Read every document in a CoNLL-2012 file."""
    docs: list[CorefDocument] = []
    name = part = None
    sentences: list[list[str]] = []
    current: list[str] = []
    # (chain_id -> stack of (sentence_index, token_index_in_sentence))
    open_mentions: dict[str, list[tuple[int, int]]] = {}
    mention_events: list[tuple[str, int, int, int]] = []  # chain, sent, start, end

    def flush_sentence(line_no: int):
        if open_mentions and any(open_mentions.values()):
            dangling = sorted(k for k, v in open_mentions.items() if v)
            raise FormatError(
                f"coreference spans {dangling} not closed at sentence end", line=line_no
            )
        if current:
            sentences.append(list(current))
            current.clear()

    def finish_document(line_no: int):
        flush_sentence(line_no)
        if not sentences:
            raise FormatError(f"document {name!r} has no tokens", line=line_no)
        doc_id = f"{name}.part{int(part):03d}"
        doc = document_from_sentences(doc_id, sentences)
        sent_offsets = [a for a, _ in doc.sentence_bounds]
        chains: dict[str, list[Mention]] = {}
        for chain_id, sent_idx, start, end in mention_events:
            span = TokenSpan(sent_offsets[sent_idx] + start, sent_offsets[sent_idx] + end)
            chains.setdefault(chain_id, []).append(Mention(doc_id, span, chain_id))
        ordered = {
            cid: tuple(sorted(ms, key=lambda m: (m.span.start, m.span.end)))
            for cid, ms in sorted(chains.items(), key=lambda kv: int(kv[0]))
        }
        docs.append(CorefDocument(doc, ordered))
        sentences.clear()
        mention_events.clear()
        open_mentions.clear()

    in_doc = False
    line_no = 0
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if line.startswith("#begin"):
            m = _BEGIN.match(line)
            if m is None:
                raise FormatError(f"bad begin line {line!r}", line=line_no)
            if in_doc:
                raise FormatError("nested #begin document", line=line_no)
            name, part = m.group("name"), m.group("part")
            in_doc = True
            continue
        if line.startswith("#end"):
            if not in_doc:
                raise FormatError("#end document without #begin", line=line_no)
            finish_document(line_no)
            in_doc = False
            continue
        if not in_doc:
            if line.strip():
                raise FormatError("token line outside any document", line=line_no)
            continue
        if not line.strip():
            flush_sentence(line_no)
            continue
        cols = line.split()
        if len(cols) < _MIN_COLUMNS:
            raise FormatError(
                f"expected at least {_MIN_COLUMNS} columns, got {len(cols)}", line=line_no
            )
        if cols[0] != name:
            raise FormatError(
                f"document column {cols[0]!r} does not match header {name!r}", line=line_no
            )
        try:
            word_index = int(cols[2])
        except ValueError as exc:
            raise FormatError(f"bad word index {cols[2]!r}", line=line_no) from exc
        if word_index != len(current):
            raise FormatError(
                f"word index {word_index} out of order (expected {len(current)})",
                line=line_no,
            )
        word = cols[3]
        position = len(current)
        sent_idx = len(sentences)
        for event, chain_id in _parse_coref_column(cols[-1], line_no):
            if event in ("open", "both"):
                open_mentions.setdefault(chain_id, []).append((sent_idx, position))
            if event in ("close", "both"):
                stack = open_mentions.get(chain_id) or []
                if not stack:
                    raise FormatError(
                        f"closing unopened coreference span {chain_id}", line=line_no
                    )
                s_idx, s_pos = stack.pop()
                if s_idx != sent_idx:
                    raise FormatError(
                        f"coreference span {chain_id} crosses sentence bounds", line=line_no
                    )
                mention_events.append((chain_id, sent_idx, s_pos, position + 1))
        current.append(word)
    if in_doc:
        raise FormatError(f"document {name!r} not closed by #end", line=line_no)
    return docs


def _question_with_ref_tags(
    doc: Document, sentence: TokenSpan, mention: TokenSpan
) -> tuple[str, tuple[Token, ...]]:
    """Rebuild the mention's sentence with standalone <ref>/</ref> tokens.

    The question gets fresh offsets (single-space joined), leaving the
    context document untouched.
    """
    words: list[str] = []
    for i in range(sentence.start, sentence.end):
        if i == mention.start:
            words.append(REF_OPEN)
        words.append(doc.tokens[i].text)
        if i == mention.end - 1:
            words.append(REF_CLOSE)
    tokens: list[Token] = []
    offset = 0
    for w, word in enumerate(words):
        if w > 0:
            offset += 1
        tokens.append(Token(word, offset, offset + len(word)))
        offset += len(word)
    return " ".join(words), tuple(tokens)


def convert_coref(coref_doc: CorefDocument, task: Task, split: Split) -> list[QAInstance]:
    """Emit one question per non-initial mention of every multi-mention chain.

    The chain-initial mention (document order) is the answer for all of its
    chain's questions and never becomes a question itself; singleton chains
    are skipped because no question is derivable from them.
    """
    if not task.is_coref:
        raise ElqaError(f"convert_coref got non-coreference task {task.value}")
    doc = coref_doc.document
    instances = []
    for chain_id, mentions in coref_doc.chains.items():
        if len(mentions) < 2:
            continue
        first = mentions[0]
        answer = first.span
        for m_idx, mention in enumerate(mentions[1:], start=1):
            k = doc.sentence_of_token(mention.span.start)
            sent = doc.sentence_span(k)
            question_text, question_tokens = _question_with_ref_tags(
                doc, sent, mention.span
            )
            instances.append(
                QAInstance(
                    instance_id=f"{task.value}-{doc.doc_id}-c{chain_id}-m{m_idx}",
                    task=task,
                    split=split,
                    context_doc_id=doc.doc_id,
                    question_text=question_text,
                    question_tokens=question_tokens,
                    gold_answer=answer.indices(),
                    gold_contiguous=answer,
                    antecedent_direction=classify_direction(
                        answer, sent, anchor=mention.span
                    ),
                    question_mention=mention.span,
                )
            )
    return instances
