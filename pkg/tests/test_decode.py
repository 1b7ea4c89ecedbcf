import random

import numpy as np
import pytest

from elqa.core import TokenSpan
from elqa.errors import ModelError
from elqa.model.decode import SpanScores, decode

from oracles import brute_decode


def test_decode_worked_example():
    # start=[5,0,0,sentinel], end=[0,0,9,sentinel], sentinel low
    scores = SpanScores(np.array([5.0, 0, 0, -100.0]), np.array([0.0, 0, 9, -100.0]))
    pred = decode(scores, max_answer_length=10)
    assert pred.span == TokenSpan(0, 3)
    assert pred.score == 14.0


def test_decode_null_dominance():
    scores = SpanScores(np.array([1.0, 1.0, 50.0]), np.array([1.0, 1.0, 50.0]))
    pred = decode(scores, max_answer_length=10)
    assert pred.span is None
    assert pred.score == 100.0


def test_decode_tie_prefers_earlier_start_then_shorter():
    # all zeros: every span ties; the (0, 1) span must win
    scores = SpanScores(np.zeros(5), np.zeros(5))
    pred = decode(scores, max_answer_length=4)
    assert pred.span == TokenSpan(0, 1)


def test_decode_respects_max_answer_length():
    start = np.array([10.0, 0, 0, -50])
    end = np.array([0.0, 0, 10, -50])
    assert decode(SpanScores(start, end), 10).span == TokenSpan(0, 3)
    limited = decode(SpanScores(start, end), 2)
    assert limited.span is not None
    assert len(limited.span) <= 2


def test_decode_rejects_bad_max_length():
    with pytest.raises(ModelError):
        decode(SpanScores(np.zeros(3), np.zeros(3)), 0)


def test_decode_matches_brute_force_random():
    rng = random.Random(17)
    nprng = np.random.default_rng(17)
    for _ in range(500):
        length = rng.randint(1, 30)
        start = nprng.normal(size=length + 1)
        end = nprng.normal(size=length + 1)
        max_len = rng.randint(1, 8)
        pred = decode(SpanScores(start, end), max_len)
        span, score = brute_decode(start, end, max_len)
        got = None if pred.span is None else (pred.span.start, pred.span.end)
        assert got == span
        assert pred.score == pytest.approx(score)


def test_decode_scaling_leaves_argmax_unchanged():
    nprng = np.random.default_rng(3)
    for _ in range(50):
        start = nprng.normal(size=12)
        end = nprng.normal(size=12)
        a = decode(SpanScores(start, end), 5)
        b = decode(SpanScores(2.0 * start, 2.0 * end), 5)
        assert (a.span is None) == (b.span is None)
        if a.span is not None:
            assert a.span == b.span
