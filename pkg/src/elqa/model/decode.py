"""Span decoding from start/end score vectors.

Score vectors have one entry per context position plus a trailing null
sentinel; decoding picks the best admissible (start, end) pair unless the
sentinel pair beats it, in which case the prediction is empty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from elqa.core import TokenSpan
from elqa.errors import ModelError
from elqa.predictions import SpanPrediction


@dataclass(frozen=True)
class SpanScores:
    """start/end scores over context positions 0..L-1 plus sentinel at L."""

    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        start = np.asarray(self.start, dtype=np.float64)
        end = np.asarray(self.end, dtype=np.float64)
        if start.ndim != 1 or start.shape != end.shape or start.shape[0] < 1:
            raise ModelError("start/end score vectors must be 1-d and of equal length")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)

    @property
    def context_length(self) -> int:
        return self.start.shape[0] - 1

    @property
    def null_score(self) -> float:
        return float(self.start[-1] + self.end[-1])


def decode(scores: SpanScores, max_answer_length: int) -> SpanPrediction:
    """Argmax of start[s] + end[e] over spans of at most max_answer_length
    tokens; ties prefer the earlier start, then the shorter span.  The
    prediction is empty when the null-sentinel pair strictly exceeds every
    admissible span score.
    """
    if max_answer_length < 1:
        raise ModelError("max_answer_length must be at least 1")
    length = scores.context_length
    if length == 0:
        return SpanPrediction(None, scores.null_score)
    best_score = -np.inf
    best = (0, 0)
    start, end = scores.start, scores.end
    for s in range(length):
        hi = min(s + max_answer_length, length)
        window = end[s:hi]
        e_rel = int(np.argmax(window))  # first maximum: shortest span at this start
        score = float(start[s] + window[e_rel])
        if score > best_score:
            best_score = score
            best = (s, s + e_rel + 1)
    if scores.null_score > best_score:
        return SpanPrediction(None, scores.null_score)
    return SpanPrediction(TokenSpan(*best), best_score)
