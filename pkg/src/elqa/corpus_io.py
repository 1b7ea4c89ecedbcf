"""Unified on-disk instance format.

Two UTF-8 JSON-lines files: an instance file (one QA instance per line,
sorted by task, split, instance id) and a companion document file (one
document per line, sorted by doc id).  Writing is byte-deterministic for
identical inputs, and read(write(X)) == X for every valid corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from elqa.core import (
    SPLIT_ORDER,
    TASK_ORDER,
    Direction,
    Document,
    QAInstance,
    Split,
    Task,
    Token,
    TokenSpan,
)
from elqa.errors import ElqaError, FormatError

INSTANCES_SUFFIX = ".instances.jsonl"
DOCUMENTS_SUFFIX = ".documents.jsonl"


@dataclass(frozen=True)
class CorpusPaths:
    instances: Path
    documents: Path

    @classmethod
    def from_stem(cls, stem) -> "CorpusPaths":
        stem = Path(stem)
        return cls(
            stem.with_name(stem.name + INSTANCES_SUFFIX),
            stem.with_name(stem.name + DOCUMENTS_SUFFIX),
        )


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _span_json(span: TokenSpan | None):
    return None if span is None else [span.start, span.end]


def _span_from_json(value, *, what: str, line: int) -> TokenSpan | None:
    if value is None:
        return None
    if not (isinstance(value, list) and len(value) == 2):
        raise FormatError(f"bad {what} {value!r}", line=line)
    try:
        return TokenSpan(int(value[0]), int(value[1]))
    except ElqaError as exc:
        raise FormatError(f"bad {what}: {exc}", line=line) from exc


def instance_sort_key(instance: QAInstance):
    return (TASK_ORDER[instance.task], SPLIT_ORDER[instance.split], instance.instance_id)


def write_instances(
    instances: Iterable[QAInstance],
    documents: Iterable[Document],
    instance_stream: IO[str],
    document_stream: IO[str],
) -> None:
    """Write the unified format to a stream pair.

    Every instance's context_doc_id must resolve to a supplied document and
    gold indices must be in range; violations are fatal and name the
    instance.  Output ordering is canonical regardless of input order.
    """
    docs = {}
    for doc in documents:
        if doc.doc_id in docs and docs[doc.doc_id] != doc:
            raise ElqaError(f"conflicting documents for doc id {doc.doc_id!r}")
        docs[doc.doc_id] = doc
    instances = sorted(instances, key=instance_sort_key)
    seen_ids: set[str] = set()
    for inst in instances:
        if inst.instance_id in seen_ids:
            raise ElqaError(f"duplicate instance id {inst.instance_id!r}")
        seen_ids.add(inst.instance_id)
        doc = docs.get(inst.context_doc_id)
        if doc is None:
            raise ElqaError(
                f"instance {inst.instance_id!r}: unresolved context doc id "
                f"{inst.context_doc_id!r}"
            )
        if max(inst.gold_answer) >= len(doc):
            raise ElqaError(
                f"instance {inst.instance_id!r}: gold token index out of range for "
                f"document {doc.doc_id!r}"
            )
        record = {
            "id": inst.instance_id,
            "task": inst.task.value,
            "split": inst.split.value,
            "doc": inst.context_doc_id,
            "question": inst.question_text,
            "question_tokens": [[t.char_start, t.char_end] for t in inst.question_tokens],
            "gold": sorted(inst.gold_answer),
            "gold_contiguous": _span_json(inst.gold_contiguous),
            "direction": inst.antecedent_direction.value,
            "question_mention": _span_json(inst.question_mention),
        }
        instance_stream.write(_dump(record) + "\n")
    for doc_id in sorted(docs):
        doc = docs[doc_id]
        record = {
            "id": doc.doc_id,
            "text": doc.raw_text,
            "tokens": [[t.char_start, t.char_end] for t in doc.tokens],
            "sentences": [[a, b] for a, b in doc.sentence_bounds],
        }
        document_stream.write(_dump(record) + "\n")


_INSTANCE_FIELDS = {
    "id",
    "task",
    "split",
    "doc",
    "question",
    "question_tokens",
    "gold",
    "gold_contiguous",
    "direction",
    "question_mention",
}
_DOCUMENT_FIELDS = {"id", "text", "tokens", "sentences"}


def _parse_record(raw: str, line: int, expected_fields: set[str]) -> dict:
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc.msg}", line=line) from exc
    if not isinstance(record, dict):
        raise FormatError("record is not an object", line=line)
    if set(record) != expected_fields:
        raise FormatError(
            f"unexpected fields {sorted(set(record) ^ expected_fields)}", line=line
        )
    return record


def _tokens_from_offsets(text: str, offsets, *, line: int) -> tuple[Token, ...]:
    tokens = []
    for pair in offsets:
        if not (isinstance(pair, list) and len(pair) == 2):
            raise FormatError(f"bad token offsets {pair!r}", line=line)
        cs, ce = int(pair[0]), int(pair[1])
        if cs < 0 or ce > len(text) or cs >= ce:
            raise FormatError(f"token offsets ({cs}, {ce}) out of range", line=line)
        tokens.append(Token(text[cs:ce], cs, ce))
    return tuple(tokens)


def read_documents(document_stream: IO[str]) -> list[Document]:
    """Read a documents file on its own (also usable as a converter input)."""
    documents: list[Document] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(document_stream, start=1):
        if not raw.strip():
            continue
        record = _parse_record(raw, line_no, _DOCUMENT_FIELDS)
        text = record["text"]
        tokens = _tokens_from_offsets(text, record["tokens"], line=line_no)
        try:
            doc = Document(
                record["id"], text, tokens, tuple((a, b) for a, b in record["sentences"])
            )
        except (ElqaError, TypeError, ValueError) as exc:
            raise FormatError(f"bad document record: {exc}", line=line_no) from exc
        if doc.doc_id in seen:
            raise FormatError(f"duplicate doc id {doc.doc_id!r}", line=line_no)
        seen.add(doc.doc_id)
        documents.append(doc)
    return documents


def load_documents(path) -> list[Document]:
    with open(path, encoding="utf-8") as f:
        return read_documents(f)


def read_instances(
    instance_stream: IO[str], document_stream: IO[str]
) -> tuple[list[QAInstance], list[Document]]:
    """Read the unified format back; full inverse of write_instances."""
    documents = read_documents(document_stream)
    doc_index = {doc.doc_id: doc for doc in documents}

    instances: list[QAInstance] = []
    seen_ids: set[str] = set()
    for line_no, raw in enumerate(instance_stream, start=1):
        if not raw.strip():
            continue
        record = _parse_record(raw, line_no, _INSTANCE_FIELDS)
        try:
            task = Task(record["task"])
            split = Split(record["split"])
            direction = Direction(record["direction"])
        except ValueError as exc:
            raise FormatError(str(exc), line=line_no) from exc
        question = record["question"]
        tokens = _tokens_from_offsets(question, record["question_tokens"], line=line_no)
        try:
            inst = QAInstance(
                instance_id=record["id"],
                task=task,
                split=split,
                context_doc_id=record["doc"],
                question_text=question,
                question_tokens=tokens,
                gold_answer=frozenset(int(i) for i in record["gold"]),
                gold_contiguous=_span_from_json(
                    record["gold_contiguous"], what="gold_contiguous", line=line_no
                ),
                antecedent_direction=direction,
                question_mention=_span_from_json(
                    record["question_mention"], what="question_mention", line=line_no
                ),
            )
        except (ElqaError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"bad instance record: {exc}", line=line_no) from exc
        if inst.instance_id in seen_ids:
            raise FormatError(f"duplicate instance id {inst.instance_id!r}", line=line_no)
        seen_ids.add(inst.instance_id)
        doc = doc_index.get(inst.context_doc_id)
        if doc is None:
            raise FormatError(
                f"instance {inst.instance_id!r}: unknown doc id {inst.context_doc_id!r}",
                line=line_no,
            )
        if max(inst.gold_answer) >= len(doc):
            raise FormatError(
                f"instance {inst.instance_id!r}: gold token index out of range",
                line=line_no,
            )
        instances.append(inst)
    return instances, documents


def save_corpus(instances, documents, stem) -> CorpusPaths:
    paths = CorpusPaths.from_stem(stem)
    paths.instances.parent.mkdir(parents=True, exist_ok=True)
    with open(paths.instances, "w", encoding="utf-8") as inst_f, open(
        paths.documents, "w", encoding="utf-8"
    ) as doc_f:
        write_instances(instances, documents, inst_f, doc_f)
    return paths


def load_corpus(stem) -> tuple[list[QAInstance], list[Document]]:
    paths = CorpusPaths.from_stem(stem)
    for p in (paths.instances, paths.documents):
        if not p.exists():
            raise ElqaError(f"missing corpus file {p}")
    with open(paths.instances, encoding="utf-8") as inst_f, open(
        paths.documents, encoding="utf-8"
    ) as doc_f:
        return read_instances(inst_f, doc_f)
