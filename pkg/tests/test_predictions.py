import io

import pytest

from elqa.core import TokenSpan
from elqa.errors import FormatError
from elqa.model.vocab import Vocabulary
from elqa.predictions import (
    EMPTY_PREDICTION,
    SpanPrediction,
    read_predictions,
    write_predictions,
)


def test_prediction_file_round_trip():
    predictions = {
        "b": SpanPrediction(TokenSpan(3, 7), 1.25),
        "a": EMPTY_PREDICTION,
        "c": SpanPrediction(TokenSpan(0, 1), -2.0),
    }
    buf = io.StringIO()
    write_predictions(predictions, buf)
    text = buf.getvalue()
    assert [line.split('"id": "')[1][0] for line in text.splitlines()] == ["a", "b", "c"]
    back = read_predictions(io.StringIO(text))
    assert back == predictions


def test_prediction_file_rejects_duplicates_and_garbage():
    line = '{"id": "x", "span": [0, 2], "score": 1.0}\n'
    with pytest.raises(FormatError, match="duplicate"):
        read_predictions(io.StringIO(line + line))
    with pytest.raises(FormatError, match="line 1"):
        read_predictions(io.StringIO("not json\n"))
    with pytest.raises(FormatError, match="fields"):
        read_predictions(io.StringIO('{"id": "x"}\n'))
    with pytest.raises(FormatError):
        read_predictions(io.StringIO('{"id": "x", "span": [2, 2], "score": 0}\n'))


def test_vocabulary_lookup_and_unk():
    vocab = Vocabulary(["cat", "dog"])
    assert len(vocab) == 3
    assert vocab.id_of("cat") == vocab.id_of("CAT") != 0
    assert vocab.id_of("zebra") == 0
    assert list(vocab.ids(["dog", "zebra"])) == [vocab.id_of("dog"), 0]


def test_vocabulary_build_counts_context_once(onto_corpus):
    instances, documents = onto_corpus
    vocab = Vocabulary.build(instances, {d.doc_id: d for d in documents})
    assert vocab.id_of("museum") != 0
    assert vocab.id_of("<ref>") != 0  # question marker is a learnable token
