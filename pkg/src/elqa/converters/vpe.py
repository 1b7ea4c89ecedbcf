"""Verb-phrase-ellipsis annotation conversion.

Annotations arrive as JSON lines over pre-tokenized WSJ-style documents:
id / section / doc / trigger / antecedent, where trigger is the token index
of the stranded auxiliary and antecedent is the gold token-index list
(possibly discontiguous).  Splits are a pure function of the WSJ section:
0-17 train, 18-19 dev, 20-24 test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping

from elqa.core import (
    Document,
    QAInstance,
    Split,
    Task,
    Token,
    TokenSpan,
    classify_direction,
    document_from_sentences,
    hull,
)
from elqa.errors import ConversionError, ElqaError, FormatError

_RECORD_FIELDS = {"id", "section", "doc", "trigger", "antecedent"}


@dataclass(frozen=True)
class VpeRecord:
    record_id: str
    wsj_section: int
    doc_id: str
    trigger_index: int
    antecedent: frozenset[int]

    def __post_init__(self):
        if not 0 <= self.wsj_section <= 24:
            raise ElqaError(
                f"vpe record {self.record_id!r}: section {self.wsj_section} outside 0-24"
            )
        if not self.antecedent:
            raise ElqaError(f"vpe record {self.record_id!r}: empty antecedent")


def section_split(section: int) -> Split:
    """Total split mapping over WSJ sections 0-24."""
    if not 0 <= section <= 24:
        raise ElqaError(f"WSJ section {section} outside 0-24")
    if section <= 17:
        return Split.TRAIN
    if section <= 19:
        return Split.DEV
    return Split.TEST


def read_vpe_records(stream: IO[str]) -> list[VpeRecord]:
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
                f"vpe record must have exactly fields {sorted(_RECORD_FIELDS)}",
                line=line_no,
            )
        try:
            record = VpeRecord(
                record_id=str(obj["id"]),
                wsj_section=int(obj["section"]),
                doc_id=str(obj["doc"]),
                trigger_index=int(obj["trigger"]),
                antecedent=frozenset(int(i) for i in obj["antecedent"]),
            )
        except (ElqaError, ValueError, TypeError) as exc:
            raise FormatError(f"bad vpe record: {exc}", line=line_no) from exc
        if record.record_id in seen:
            raise FormatError(f"duplicate vpe record id {record.record_id!r}", line=line_no)
        seen.add(record.record_id)
        records.append(record)
    return records


def load_tokenized_documents(directory) -> list[Document]:
    """Read a directory of pre-tokenized .txt documents.

    One sentence per line, tokens separated by single spaces (PTB-style
    tokenization preserved as-is); the document id is the file stem.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ConversionError(f"{directory} is not a directory")
    documents = []
    for path in sorted(directory.glob("*.txt")):
        with open(path, encoding="utf-8") as f:
            sentences = [line.split() for line in f if line.strip()]
        if not sentences:
            raise ConversionError(f"{path}: no sentences")
        documents.append(document_from_sentences(path.stem, sentences))
    if not documents:
        raise ConversionError(f"{directory}: no .txt documents found")
    return documents


def convert_vpe(
    records: Iterable[VpeRecord], documents: Mapping[str, Document]
) -> list[QAInstance]:
    """Convert VPE records against their source documents.

    Any reference outside the document (missing doc, trigger or gold index
    out of range) is a fatal per-record error.
    """
    instances = []
    for record in records:
        doc = documents.get(record.doc_id)
        if doc is None:
            raise ConversionError(
                f"vpe record {record.record_id!r}: no document {record.doc_id!r}"
            )
        if not 0 <= record.trigger_index < len(doc):
            raise ConversionError(
                f"vpe record {record.record_id!r}: trigger index {record.trigger_index} "
                f"outside document {doc.doc_id!r} ({len(doc)} tokens)"
            )
        bad = [i for i in record.antecedent if not 0 <= i < len(doc)]
        if bad:
            raise ConversionError(
                f"vpe record {record.record_id!r}: antecedent indices {sorted(bad)} "
                f"outside document {doc.doc_id!r}"
            )
        k = doc.sentence_of_token(record.trigger_index)
        sent = doc.sentence_span(k)
        base = doc.tokens[sent.start].char_start
        question_text = doc.sentence_text(k)
        question_tokens = tuple(
            Token(t.text, t.char_start - base, t.char_end - base)
            for t in doc.tokens[sent.start : sent.end]
        )
        gold_hull = hull(record.antecedent)
        instances.append(
            QAInstance(
                instance_id=f"vpe-{record.record_id}",
                task=Task.VPE,
                split=section_split(record.wsj_section),
                context_doc_id=doc.doc_id,
                question_text=question_text,
                question_tokens=question_tokens,
                gold_answer=record.antecedent,
                gold_contiguous=gold_hull,
                antecedent_direction=classify_direction(
                    gold_hull,
                    sent,
                    anchor=TokenSpan(record.trigger_index, record.trigger_index + 1),
                ),
            )
        )
    return instances
