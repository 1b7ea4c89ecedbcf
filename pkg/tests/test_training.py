import numpy as np
import pytest

from elqa.errors import ModelError
from elqa.model.config import EncoderConfig, TrainerConfig
from elqa.model.training import (
    Adam,
    clip_gradients,
    load_checkpoint,
    prepare_items,
    train,
    train_multi,
)

from synth import memorization_corpus

TINY_ENC = EncoderConfig(embedding_dim=16, hidden_dim=16, num_layers=1)
TINY_TRAIN = TrainerConfig(lr=1e-3, batch_size=16, epochs=3, seed=1,
                           max_answer_length=20, window_size=50, window_stride=25)


def test_adam_moves_toward_minimum():
    params = {"x": np.array([5.0])}
    opt = Adam(params, lr=0.1)
    for _ in range(300):
        opt.step(params, {"x": 2 * params["x"]})  # d/dx of x^2
    assert abs(params["x"][0]) < 1e-2


def test_clip_gradients_scales_global_norm():
    grads = {"a": np.array([3.0, 4.0]), "b": np.array([0.0])}
    norm = clip_gradients(grads, 1.0)
    assert norm == pytest.approx(5.0)
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    assert total == pytest.approx(1.0)


def test_prepare_items_skips_and_reports():
    from dataclasses import replace

    instances, documents = memorization_corpus(n=6, seed=3)
    no_target = replace(instances[0], gold_contiguous=None)
    items, skipped = prepare_items([no_target, *instances[1:]], documents, 50, 25)
    assert len(items) == 5
    assert len(skipped) == 1 and "no contiguous gold target" in skipped[0]


def test_prepare_items_windows_gold_into_range():
    instances, documents = memorization_corpus(n=4, seed=5)
    items, skipped = prepare_items(instances, documents, window_size=8, window_stride=4)
    for item in items:
        assert 0 <= item.gold_start <= item.gold_end < len(item.ctx_texts)
        assert len(item.ctx_texts) <= 8
    # every skip is explained
    assert len(items) + len(skipped) == len(instances)


def test_train_all_skipped_is_fatal():
    from dataclasses import replace

    instances, documents = memorization_corpus(n=3, seed=3)
    broken = [replace(i, gold_contiguous=None) for i in instances]
    with pytest.raises(ModelError, match="no trainable instances"):
        train(broken, [], documents, TINY_ENC, TINY_TRAIN)


def test_train_same_seed_bitwise_identical():
    instances, documents = memorization_corpus(n=8, seed=9)
    a = train(instances, instances, documents, TINY_ENC, TINY_TRAIN)
    b = train(instances, instances, documents, TINY_ENC, TINY_TRAIN)
    for name in a.checkpoint.params:
        assert np.array_equal(a.checkpoint.params[name], b.checkpoint.params[name])
    assert [r.train_loss for r in a.history] == [r.train_loss for r in b.history]


def test_train_different_seed_differs():
    from dataclasses import replace as dreplace

    instances, documents = memorization_corpus(n=8, seed=9)
    a = train(instances, instances, documents, TINY_ENC, TINY_TRAIN)
    b = train(instances, instances, documents, TINY_ENC,
              dreplace(TINY_TRAIN, seed=2))
    assert any(
        not np.array_equal(a.checkpoint.params[n], b.checkpoint.params[n])
        for n in a.checkpoint.params
    )


def test_best_so_far_loss_non_increasing():
    instances, documents = memorization_corpus(n=10, seed=4)
    cfg = TrainerConfig(lr=1e-3, batch_size=8, epochs=8, seed=7,
                        max_answer_length=20, window_size=50, window_stride=25)
    result = train(instances, instances, documents, TINY_ENC, cfg)
    best = [r.best_loss_so_far for r in result.history]
    assert all(b1 >= b2 for b1, b2 in zip(best, best[1:]))


def test_checkpoint_save_load_round_trip(tmp_path):
    instances, documents = memorization_corpus(n=6, seed=6)
    result = train(instances, instances, documents, TINY_ENC, TINY_TRAIN)
    path = tmp_path / "model.npz"
    result.checkpoint.save(path)
    loaded = load_checkpoint(path)
    assert loaded.encoder == TINY_ENC
    assert loaded.vocab_words == result.checkpoint.vocab_words
    for name, value in result.checkpoint.params.items():
        assert np.array_equal(loaded.params[name], value)
    model = loaded.model()
    state = model.encode(["anna", "painted"], ["so", "did", "anna"])
    assert np.all(np.isfinite(state.scores.start))


def test_load_checkpoint_rejects_other_files(tmp_path):
    path = tmp_path / "junk.npz"
    np.savez(path, a=np.zeros(3))
    with pytest.raises(ModelError, match="not a checkpoint"):
        load_checkpoint(path)


def test_train_multi_averages_dev_scores():
    instances, documents = memorization_corpus(n=8, seed=10)
    multi = train_multi(instances, instances, documents, TINY_ENC, TINY_TRAIN,
                        seeds=[1, 2, 3])
    assert len(multi.results) == 3
    per_seed = [r.best_dev_f1 for r in multi.results]
    assert multi.mean_dev_f1 == pytest.approx(sum(per_seed) / 3)
    with pytest.raises(ModelError):
        train_multi(instances, instances, documents, TINY_ENC, TINY_TRAIN, seeds=[])


def test_pretrained_embeddings_loaded(tmp_path):
    from elqa.model.network import SpanReader
    from elqa.model.vocab import Vocabulary, load_pretrained

    instances, documents = memorization_corpus(n=4, seed=2)
    dim = TINY_ENC.embedding_dim
    vec_path = tmp_path / "vectors.txt"
    with open(vec_path, "w", encoding="utf-8") as f:
        f.write("alpha " + " ".join(["0.5"] * dim) + "\n")
        f.write("unseenword " + " ".join(["0.25"] * dim) + "\n")
    vocab = Vocabulary.build(instances, documents)
    model = SpanReader(TINY_ENC, vocab)
    with open(vec_path, encoding="utf-8") as f:
        hits = load_pretrained(f, vocab, model.params["emb"])
    assert hits == 1  # "alpha" found, "unseenword" ignored
    row = vocab.id_of("alpha")
    assert row != 0
    assert np.allclose(model.params["emb"][row], 0.5)
    # and the training entry point wires the file through
    enc = EncoderConfig(embedding_dim=dim, hidden_dim=16, num_layers=1,
                        embeddings_path=str(vec_path))
    result = train(instances, [], documents, enc, TINY_TRAIN)
    assert result.checkpoint.encoder.embeddings_path == str(vec_path)
