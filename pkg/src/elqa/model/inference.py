"""Prediction over full documents with sliding windows, plus the
previous-sentence sanity baseline.

Long contexts are cut into fixed-size token windows with a fixed stride
(the question rides along in full with every window); each window is
decoded independently and the best-scoring candidate across windows wins.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from elqa.core import REF_CLOSE, REF_OPEN, Document, QAInstance, TokenSpan
from elqa.errors import ModelError
from elqa.model.decode import decode
from elqa.model.network import SpanReader
from elqa.predictions import EMPTY_PREDICTION, SpanPrediction


def window_starts(length: int, size: int, stride: int) -> list[int]:
    """Window start offsets covering [0, length); the final window is
    clamped so no token is missed."""
    if length <= size:
        return [0]
    starts = list(range(0, length - size + 1, stride))
    if starts[-1] != length - size:
        starts.append(length - size)
    return starts


def predict_instance(
    model: SpanReader,
    instance: QAInstance,
    doc: Document,
    max_answer_length: int,
    window_size: int,
    window_stride: int,
) -> SpanPrediction:
    q_texts = instance.question_token_texts()
    all_texts = [t.text for t in doc.tokens]
    best: SpanPrediction | None = None
    for w in window_starts(len(doc), window_size, window_stride):
        ctx_texts = all_texts[w : w + window_size]
        state = model.encode(ctx_texts, q_texts)
        cand = decode(state.scores, max_answer_length)
        if cand.span is not None:
            cand = SpanPrediction(
                TokenSpan(cand.span.start + w, cand.span.end + w), cand.score
            )
        if best is None or cand.score > best.score:
            best = cand
    return best


def predict_spans(
    model: SpanReader,
    instances: Sequence[QAInstance],
    documents: Mapping[str, Document],
    max_answer_length: int = 100,
    window_size: int = 400,
    window_stride: int = 200,
) -> tuple[dict[str, SpanPrediction], dict[str, str]]:
    """One prediction per instance; returns (predictions, diagnostics).

    Duplicate instance ids are an error; per-instance failures (missing or
    empty document) yield an empty prediction plus a diagnostic message.
    """
    seen = set()
    for inst in instances:
        if inst.instance_id in seen:
            raise ModelError(f"duplicate instance id {inst.instance_id!r}")
        seen.add(inst.instance_id)
    predictions: dict[str, SpanPrediction] = {}
    diagnostics: dict[str, str] = {}
    for inst in instances:
        doc = documents.get(inst.context_doc_id)
        if doc is None:
            predictions[inst.instance_id] = EMPTY_PREDICTION
            diagnostics[inst.instance_id] = f"missing document {inst.context_doc_id!r}"
            continue
        if not doc.tokens:
            predictions[inst.instance_id] = EMPTY_PREDICTION
            diagnostics[inst.instance_id] = "empty context document"
            continue
        predictions[inst.instance_id] = predict_instance(
            model, inst, doc, max_answer_length, window_size, window_stride
        )
    return predictions, diagnostics


def _strip_ref_tags(texts: list[str]) -> list[str]:
    return [t for t in texts if t not in (REF_OPEN, REF_CLOSE)]


def baseline_previous_sentence(instance: QAInstance, doc: Document) -> SpanPrediction:
    """Predict the full sentence preceding the question's sentence.

    The question sentence is located by exact token-sequence match against
    the context (mention markers stripped first); no match, or a question
    in the document-initial sentence, yields an empty prediction.
    """
    wanted = _strip_ref_tags(instance.question_token_texts())
    for k in range(doc.n_sentences):
        span = doc.sentence_span(k)
        if doc.token_texts(span) == wanted:
            if k == 0:
                return EMPTY_PREDICTION
            prev = doc.sentence_span(k - 1)
            return SpanPrediction(prev, 0.0)
    return EMPTY_PREDICTION
