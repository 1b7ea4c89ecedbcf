"""SQuAD v1.1 conversion (auxiliary reading-comprehension data).

Each paragraph context becomes a document; each question with its first
answer becomes an instance, with the answer's character range expanded to
the smallest covering token range.  Schema violations are fatal; per-item
problems (no answers, offsets beyond the context) drop the item with a
reported reason.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO

from elqa.core import (
    Direction,
    Document,
    QAInstance,
    Split,
    Task,
    TokenSpan,
    build_document,
    tokenize,
)
from elqa.errors import FormatError

_TOP_FIELDS = {"data", "version"}
_ARTICLE_FIELDS = {"title", "paragraphs"}
_PARAGRAPH_FIELDS = {"context", "qas"}
_QA_FIELDS = {"id", "question", "answers"}
_ANSWER_FIELDS = {"text", "answer_start"}


@dataclass(frozen=True)
class SquadDrop:
    qa_id: str
    reason: str


@dataclass
class SquadConversion:
    instances: list[QAInstance]
    documents: list[Document]
    drops: list[SquadDrop] = field(default_factory=list)


def _check_fields(obj, allowed: set[str], required: set[str], what: str):
    if not isinstance(obj, dict):
        raise FormatError(f"{what} is not an object")
    unknown = set(obj) - allowed
    if unknown:
        raise FormatError(f"{what} has unknown fields {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise FormatError(f"{what} is missing fields {sorted(missing)}")


def _covering_token_range(doc: Document, char_start: int, char_end: int) -> TokenSpan | None:
    first = last = None
    for i, tok in enumerate(doc.tokens):
        if tok.char_end > char_start and tok.char_start < char_end:
            if first is None:
                first = i
            last = i
    if first is None:
        return None
    return TokenSpan(first, last + 1)


def convert_squad(stream: IO[str], split: Split) -> SquadConversion:
    """Convert a SQuAD v1.1 JSON file; the split is supplied by the caller.

    SQuAD questions are free-standing rather than context sentences, so
    antecedent_direction is fixed to SAME_SENTENCE by convention.
    """
    try:
        data = json.load(stream)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc.msg}") from exc
    _check_fields(data, _TOP_FIELDS, {"data"}, "top-level object")
    result = SquadConversion(instances=[], documents=[])
    seen_qa_ids: set[str] = set()
    for a_idx, article in enumerate(data["data"]):
        _check_fields(article, _ARTICLE_FIELDS, _ARTICLE_FIELDS, f"article {a_idx}")
        for p_idx, paragraph in enumerate(article["paragraphs"]):
            _check_fields(
                paragraph, _PARAGRAPH_FIELDS, _PARAGRAPH_FIELDS,
                f"article {a_idx} paragraph {p_idx}",
            )
            doc = build_document(
                f"squad-{split.value}-a{a_idx:04d}-p{p_idx:03d}", paragraph["context"]
            )
            doc_used = False
            for qa in paragraph["qas"]:
                _check_fields(qa, _QA_FIELDS, _QA_FIELDS, "qa entry")
                qa_id = str(qa["id"])
                if qa_id in seen_qa_ids:
                    raise FormatError(f"duplicate qa id {qa_id!r}")
                seen_qa_ids.add(qa_id)
                answers = qa["answers"]
                if not answers:
                    result.drops.append(SquadDrop(qa_id, "no answers"))
                    continue
                _check_fields(answers[0], _ANSWER_FIELDS, _ANSWER_FIELDS, "answer entry")
                text, start = answers[0]["text"], int(answers[0]["answer_start"])
                if start < 0 or start + len(text) > len(doc.raw_text):
                    result.drops.append(SquadDrop(qa_id, "answer offsets beyond context"))
                    continue
                answer = _covering_token_range(doc, start, start + len(text))
                if answer is None:
                    result.drops.append(SquadDrop(qa_id, "answer covers no tokens"))
                    continue
                question_tokens = tokenize(qa["question"])
                if not question_tokens:
                    result.drops.append(SquadDrop(qa_id, "empty question"))
                    continue
                result.instances.append(
                    QAInstance(
                        instance_id=f"squad-{qa_id}",
                        task=Task.SQUAD,
                        split=split,
                        context_doc_id=doc.doc_id,
                        question_text=qa["question"],
                        question_tokens=tuple(question_tokens),
                        gold_answer=answer.indices(),
                        gold_contiguous=answer,
                        antecedent_direction=Direction.SAME_SENTENCE,
                    )
                )
                doc_used = True
            if doc_used:
                result.documents.append(doc)
    return result
