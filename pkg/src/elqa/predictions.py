"""Predicted spans and the line-delimited prediction-file contract.

The file format is the interface between the span resolver and the
evaluator; externally produced prediction files (any system) are accepted
as long as they follow it: one JSON object per line with fields
id / span ([start, end) token pair, or null for an empty prediction) /
score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Mapping

from elqa.core import TokenSpan
from elqa.errors import ElqaError, FormatError


@dataclass(frozen=True)
class SpanPrediction:
    """A contiguous predicted span; span is None for an empty prediction."""

    span: TokenSpan | None
    score: float = 0.0

    @property
    def is_empty(self) -> bool:
        return self.span is None

    def indices(self) -> frozenset[int]:
        return frozenset() if self.span is None else self.span.indices()


EMPTY_PREDICTION = SpanPrediction(span=None, score=0.0)


def write_predictions(predictions: Mapping[str, SpanPrediction], stream: IO[str]) -> None:
    for instance_id in sorted(predictions):
        pred = predictions[instance_id]
        record = {
            "id": instance_id,
            "span": None if pred.span is None else [pred.span.start, pred.span.end],
            "score": float(pred.score),
        }
        stream.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def read_predictions(stream: IO[str]) -> dict[str, SpanPrediction]:
    predictions: dict[str, SpanPrediction] = {}
    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"not valid JSON: {exc.msg}", line=line_no) from exc
        if not isinstance(obj, dict) or set(obj) != {"id", "span", "score"}:
            raise FormatError("prediction record must have fields id/span/score", line=line_no)
        instance_id = str(obj["id"])
        if instance_id in predictions:
            raise FormatError(f"duplicate prediction for {instance_id!r}", line=line_no)
        span = obj["span"]
        if span is not None:
            if not (isinstance(span, list) and len(span) == 2):
                raise FormatError(f"bad span {span!r}", line=line_no)
            try:
                span = TokenSpan(int(span[0]), int(span[1]))
            except ElqaError as exc:
                raise FormatError(str(exc), line=line_no) from exc
        predictions[instance_id] = SpanPrediction(span, float(obj["score"]))
    return predictions
