"""Sluice-ellipsis corpus conversion.

Source records arrive as JSON lines (one record per line) with fields
id / doc / context / sluice_sentence / antecedent / split.  Annotators were
free to paraphrase antecedents, so each antecedent string is searched for
verbatim in the context (case-sensitive first, then a case-insensitive
fallback); records whose antecedent never occurs verbatim are dropped and
reported rather than guessed at.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

from elqa.core import (
    Document,
    QAInstance,
    Split,
    Task,
    Token,
    TokenSpan,
    build_document,
    classify_direction,
)
from elqa.errors import ElqaError, FormatError

_RECORD_FIELDS = {"id", "doc", "context", "sluice_sentence", "antecedent", "split"}


@dataclass(frozen=True)
class SluiceRecord:
    record_id: str
    doc_id: str
    context: str
    sluice_sentence_index: int
    antecedent: str
    split: Split

    def __post_init__(self):
        if not self.antecedent:
            raise ElqaError(f"sluice record {self.record_id!r}: empty antecedent")


@dataclass(frozen=True)
class DropNote:
    record_id: str
    reason: str
    warning: bool = False  # warnings accompany kept instances


@dataclass
class SluiceConversion:
    instances: list[QAInstance]
    documents: list[Document]
    drops: list[DropNote] = field(default_factory=list)

    @property
    def dropped_ids(self) -> list[str]:
        return [d.record_id for d in self.drops if not d.warning]


def read_sluice_records(stream: IO[str]) -> list[SluiceRecord]:
    records = []
    seen = set()
    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON: {exc.msg}", line=line_no) from exc
        if not isinstance(obj, dict) or set(obj) != _RECORD_FIELDS:
            raise FormatError(
                f"sluice record must have exactly fields {sorted(_RECORD_FIELDS)}",
                line=line_no,
            )
        try:
            record = SluiceRecord(
                record_id=str(obj["id"]),
                doc_id=str(obj["doc"]),
                context=obj["context"],
                sluice_sentence_index=int(obj["sluice_sentence"]),
                antecedent=obj["antecedent"],
                split=Split(obj["split"]),
            )
        except (ElqaError, ValueError, TypeError) as exc:
            raise FormatError(f"bad sluice record: {exc}", line=line_no) from exc
        if record.record_id in seen:
            raise FormatError(f"duplicate sluice record id {record.record_id!r}", line=line_no)
        seen.add(record.record_id)
        records.append(record)
    return records


def _occurrences(haystack: str, needle: str) -> list[int]:
    hits = []
    pos = haystack.find(needle)
    while pos != -1:
        hits.append(pos)
        pos = haystack.find(needle, pos + 1)
    return hits


def _covering_token_range(doc: Document, char_start: int, char_end: int) -> TokenSpan | None:
    """Smallest token range overlapping [char_start, char_end)."""
    first = last = None
    for i, tok in enumerate(doc.tokens):
        if tok.char_end > char_start and tok.char_start < char_end:
            if first is None:
                first = i
            last = i
    if first is None:
        return None
    return TokenSpan(first, last + 1)


def convert_sluice(
    records: Iterable[SluiceRecord],
    splits: Mapping[str, Split] | None = None,
) -> SluiceConversion:
    """Convert sluice records; never fatal, every drop is reported.

    splits optionally overrides the per-record split assignment by record
    id (records keep their own split otherwise).
    """
    documents: dict[str, Document] = {}
    result = SluiceConversion(instances=[], documents=[])
    for record in records:
        doc = documents.get(record.doc_id)
        if doc is None:
            doc = build_document(record.doc_id, record.context)
            documents[record.doc_id] = doc
        elif doc.raw_text != record.context:
            raise ElqaError(
                f"sluice record {record.record_id!r}: doc id {record.doc_id!r} reused "
                f"with different context"
            )
        if not doc.tokens:
            result.drops.append(DropNote(record.record_id, "empty context"))
            continue
        if not 0 <= record.sluice_sentence_index < doc.n_sentences:
            result.drops.append(
                DropNote(record.record_id, "sluice sentence index out of range")
            )
            continue

        hits = _occurrences(record.context, record.antecedent)
        if not hits:
            hits = _occurrences(record.context.lower(), record.antecedent.lower())
            if not hits:
                result.drops.append(
                    DropNote(record.record_id, "antecedent not found verbatim in context")
                )
                continue
        if len(hits) > 1:
            result.drops.append(
                DropNote(
                    record.record_id,
                    f"antecedent occurs {len(hits)} times; first occurrence used",
                    warning=True,
                )
            )
        char_start = hits[0]
        answer = _covering_token_range(doc, char_start, char_start + len(record.antecedent))
        if answer is None:
            result.drops.append(
                DropNote(record.record_id, "antecedent match covers no tokens")
            )
            continue

        sent = doc.sentence_span(record.sluice_sentence_index)
        base = doc.tokens[sent.start].char_start
        question_text = doc.sentence_text(record.sluice_sentence_index)
        question_tokens = tuple(
            Token(t.text, t.char_start - base, t.char_end - base)
            for t in doc.tokens[sent.start : sent.end]
        )
        split = record.split if splits is None else splits.get(record.record_id, record.split)
        result.instances.append(
            QAInstance(
                instance_id=f"sluice-{record.record_id}",
                task=Task.SLUICE,
                split=split,
                context_doc_id=doc.doc_id,
                question_text=question_text,
                question_tokens=question_tokens,
                gold_answer=answer.indices(),
                gold_contiguous=answer,
                antecedent_direction=classify_direction(answer, sent),
            )
        )
    result.documents = [documents[k] for k in sorted(documents)]
    return result


def render_drop_report(drops: list[DropNote]) -> str:
    if not drops:
        return "sluice conversion: no drops\n"
    lines = [f"sluice conversion: {sum(1 for d in drops if not d.warning)} dropped, "
             f"{sum(1 for d in drops if d.warning)} warnings"]
    for note in drops:
        kind = "warning" if note.warning else "dropped"
        lines.append(f"  [{kind}] {note.record_id}: {note.reason}")
    return "\n".join(lines) + "\n"
