import random
import string

import pytest

from elqa.core import (
    Direction,
    Document,
    QAInstance,
    Split,
    Task,
    Token,
    TokenSpan,
    classify_direction,
    document_from_sentences,
    hull,
    is_contiguous,
    split_sentences,
    tokenize,
)
from elqa.errors import ElqaError


def test_tokenize_offsets_hand_verified():
    tokens = tokenize("Mary ran.")
    assert [(t.text, t.char_start, t.char_end) for t in tokens] == [
        ("Mary", 0, 4),
        ("ran", 5, 8),
        (".", 8, 9),
    ]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_keeps_internal_apostrophe():
    tokens = tokenize("don't")
    assert [t.text for t in tokens] == ["don't"]


def test_tokenize_detaches_punctuation_both_sides():
    assert [t.text for t in tokenize('(hello,) "world!"')] == [
        "(", "hello", ",", ")", '"', "world", "!", '"',
    ]


def test_tokenize_offset_fidelity_random():
    rng = random.Random(42)
    alphabet = string.ascii_letters + "  ..,!?'\"()-’ \n\t"
    for _ in range(300):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
        tokens = tokenize(text)
        for tok in tokens:
            assert text[tok.char_start : tok.char_end] == tok.text
        # offsets strictly increase and never overlap
        for a, b in zip(tokens, tokens[1:]):
            assert a.char_end <= b.char_start
        # non-token characters are all whitespace
        covered = set()
        for tok in tokens:
            covered.update(range(tok.char_start, tok.char_end))
        for i, ch in enumerate(text):
            if i not in covered:
                assert ch.isspace()


def test_split_sentences_basic():
    tokens = tokenize("Mary ran. John slept! Did he? Yes.")
    bounds = split_sentences(tokens)
    texts = [" ".join(t.text for t in tokens[a:b]) for a, b in bounds]
    assert texts == ["Mary ran .", "John slept !", "Did he ?", "Yes ."]


def test_split_sentences_trailing_quote_and_no_terminator():
    tokens = tokenize('He said "stop." Then silence')
    bounds = split_sentences(tokens)
    assert len(bounds) == 2
    first = [t.text for t in tokens[bounds[0][0] : bounds[0][1]]]
    assert first == ["He", "said", '"', "stop", ".", '"']


def test_document_validates_sentence_partition():
    tokens = tokenize("a b c")
    with pytest.raises(ElqaError):
        Document("d", "a b c", tuple(tokens), ((0, 2),))
    with pytest.raises(ElqaError):
        Document("d", "a b c", tuple(tokens), ((0, 2), (1, 3)))
    Document("d", "a b c", tuple(tokens), ((0, 2), (2, 3)))


def test_document_offset_fidelity_enforced():
    with pytest.raises(ElqaError):
        Document("d", "abc", (Token("xyz", 0, 3),), ((0, 1),))


def test_document_from_sentences_round_trip():
    doc = document_from_sentences("d", [["Mary", "ran", "."], ["So", "did", "I", "."]])
    assert doc.raw_text == "Mary ran .\nSo did I ."
    assert doc.n_sentences == 2
    assert doc.sentence_text(1) == "So did I ."
    assert [t.text for t in doc.tokens] == ["Mary", "ran", ".", "So", "did", "I", "."]


def test_token_span_validation_and_helpers():
    with pytest.raises(ElqaError):
        TokenSpan(3, 3)  # empty spans are not representable
    with pytest.raises(ElqaError):
        TokenSpan(-1, 2)
    span = TokenSpan(2, 5)
    assert len(span) == 3
    assert span.indices() == frozenset({2, 3, 4})


def test_hull_and_contiguity():
    assert hull({5, 6, 9}) == TokenSpan(5, 10)
    assert is_contiguous({4, 5, 6})
    assert not is_contiguous({4, 6})
    with pytest.raises(ElqaError):
        hull(set())


def _instance(gold, contiguous):
    return QAInstance(
        instance_id="x",
        task=Task.VPE,
        split=Split.TRAIN,
        context_doc_id="d",
        question_text="so did I",
        question_tokens=tuple(tokenize("so did I")),
        gold_answer=frozenset(gold),
        gold_contiguous=contiguous,
        antecedent_direction=Direction.BACKWARD,
    )


def test_instance_rejects_empty_gold():
    with pytest.raises(ElqaError):
        _instance(set(), None)


def test_instance_gold_contiguous_must_be_hull():
    _instance({1, 2, 5}, TokenSpan(1, 6))
    _instance({1, 2}, TokenSpan(1, 3))
    with pytest.raises(ElqaError):
        _instance({1, 2}, TokenSpan(1, 4))  # extra token beyond the answer
    with pytest.raises(ElqaError):
        _instance({1, 2, 5}, TokenSpan(1, 3))  # not covering


def test_classify_direction_across_sentences():
    sent = TokenSpan(10, 16)
    assert classify_direction(TokenSpan(2, 6), sent) is Direction.BACKWARD
    assert classify_direction(TokenSpan(20, 22), sent) is Direction.FORWARD


def test_classify_direction_trailing_in_sentence_is_forward():
    # the question sentence itself contains the antecedent, after the sluice
    sent = TokenSpan(0, 12)
    assert classify_direction(TokenSpan(6, 11), sent) is Direction.FORWARD
    assert classify_direction(TokenSpan(0, 5), sent) is Direction.SAME_SENTENCE


def test_classify_direction_with_anchor():
    sent = TokenSpan(0, 10)
    trigger = TokenSpan(7, 8)
    assert classify_direction(TokenSpan(1, 4), sent, anchor=trigger) is Direction.SAME_SENTENCE
    assert classify_direction(TokenSpan(8, 10), sent, anchor=trigger) is Direction.FORWARD
