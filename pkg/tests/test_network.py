import numpy as np
import pytest

from elqa.errors import ModelError
from elqa.model.config import EncoderConfig
from elqa.model.network import N_FEATURES, SpanReader, match_features
from elqa.model.vocab import Vocabulary

VOCAB = Vocabulary(sorted({"the", "cat", "sat", "on", "mat", "what", "did", "do",
                           "?", ".", "a", "ran", "dog"}))
CTX = ["the", "cat", "sat", "on", "the", "mat", "."]
Q = ["what", "did", "the", "cat", "do", "?"]


def _model(layers=1, hidden=8, emb=8, zero_bilinear=True, seed=0):
    cfg = EncoderConfig(embedding_dim=emb, hidden_dim=hidden, num_layers=layers)
    return SpanReader(cfg, VOCAB, rng=np.random.default_rng(seed),
                      zero_bilinear=zero_bilinear)


def test_match_features_definition():
    feats = match_features(["The", "cat", "ran", "."], ["what", "did", "the", "cat", "do"])
    assert feats.shape == (4, N_FEATURES)
    assert feats[0, 0] == 0.0 and feats[0, 1] == 1.0  # "The" matches lowercased only
    assert feats[1, 0] == 1.0 and feats[1, 1] == 1.0  # "cat" matches as-is
    assert feats[2, 0] == 0.0 and feats[2, 1] == 0.0
    assert feats[1, 2] == pytest.approx(1 / 4)  # term frequency


@pytest.mark.parametrize("layers,hidden", [(1, 8), (2, 8), (3, 4), (2, 16)])
def test_context_representation_width(layers, hidden):
    model = _model(layers=layers, hidden=hidden)
    state = model.encode(CTX, Q)
    assert state.ctx.rep.shape == (len(CTX), layers * 2 * hidden)
    assert state.qvec.shape == (layers * 2 * hidden,)
    assert state.scores.start.shape == (len(CTX) + 1,)
    assert state.scores.end.shape == (len(CTX) + 1,)


def test_encode_rejects_empty_inputs():
    model = _model()
    with pytest.raises(ModelError):
        model.encode([], Q)
    with pytest.raises(ModelError):
        model.encode(CTX, [])


def test_unknown_vocabulary_question_still_encodes():
    model = _model()
    state = model.encode(CTX, ["zzzgibberish", "qqqq"])
    assert np.all(np.isfinite(state.scores.start))
    assert np.all(np.isfinite(state.scores.end))


def test_zero_bilinear_gives_uniform_scores():
    model = _model(zero_bilinear=True)
    state = model.encode(CTX, Q)
    assert np.allclose(state.scores.start, 0.0)
    assert np.allclose(state.scores.end, 0.0)


def test_doubling_start_map_doubles_start_scores_keeps_argmax():
    model = _model(zero_bilinear=False)
    before = model.encode(CTX, Q).scores
    model.params["w_start"] = 2.0 * model.params["w_start"]
    after = model.encode(CTX, Q).scores
    assert np.allclose(after.start, 2.0 * before.start)
    assert np.argmax(after.start) == np.argmax(before.start)
    assert np.allclose(after.end, before.end)


def test_scores_independent_of_other_instances():
    # per-instance processing: encoding is trivially batch-composition invariant
    model = _model(zero_bilinear=False)
    lone = model.encode(CTX, Q).scores
    model.encode(["a", "dog", "ran", "."], ["what", "ran", "?"])
    again = model.encode(CTX, Q).scores
    assert np.array_equal(lone.start, again.start)
    assert np.array_equal(lone.end, again.end)


def test_loss_at_uniform_scores_is_2_log_l_plus_1():
    model = _model(zero_bilinear=True)
    state = model.encode(CTX, Q)
    loss = model.loss(state, 2, 5)
    assert loss == pytest.approx(2 * np.log(len(CTX) + 1))


def test_loss_and_grads_validates_gold_span():
    model = _model()
    with pytest.raises(ModelError):
        model.loss_and_grads(CTX, Q, 5, 2, train=False)
    with pytest.raises(ModelError):
        model.loss_and_grads(CTX, Q, 0, len(CTX), train=False)


def _relative_errors(model, examples, h=1e-5):
    grads = {k: np.zeros_like(v) for k, v in model.params.items()}
    for ctx, q, gs, ge in examples:
        _, g = model.loss_and_grads(ctx, q, gs, ge, train=False)
        for k in g:
            grads[k] += g[k]

    def total_loss():
        total = 0.0
        for ctx, q, gs, ge in examples:
            total += model.loss(model.encode(ctx, q), gs, ge)
        return total

    errors = {}
    for name, p in model.params.items():
        fd = np.zeros_like(p)
        flat, fd_flat = p.reshape(-1), fd.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = total_loss()
            flat[i] = orig - h
            lo = total_loss()
            flat[i] = orig
            fd_flat[i] = (hi - lo) / (2 * h)
        num = np.linalg.norm(grads[name] - fd)
        den = max(np.linalg.norm(grads[name]), np.linalg.norm(fd), 1e-12)
        errors[name] = num / den
    return errors


def test_gradients_match_finite_differences():
    # tiny config per the acceptance gate: emb 8, hidden 8, 1 layer, 2 instances
    model = _model(layers=1, hidden=8, emb=8, zero_bilinear=False, seed=42)
    examples = [
        (CTX, Q, 2, 5),
        (["a", "dog", "ran", "."], ["what", "did", "a", "dog", "do", "?"], 1, 2),
    ]
    errors = _relative_errors(model, examples)
    assert max(errors.values()) < 1e-3, errors


def test_dropout_training_path_runs_and_eval_is_deterministic():
    cfg = EncoderConfig(embedding_dim=8, hidden_dim=8, num_layers=1, dropout=0.5)
    model = SpanReader(cfg, VOCAB, rng=np.random.default_rng(1), zero_bilinear=False)
    rng = np.random.default_rng(2)
    loss1, _ = model.loss_and_grads(CTX, Q, 2, 5, train=True, dropout_rng=rng)
    loss2, _ = model.loss_and_grads(CTX, Q, 2, 5, train=True, dropout_rng=rng)
    assert loss1 != loss2  # different masks
    with pytest.raises(ModelError):
        model.loss_and_grads(CTX, Q, 2, 5, train=True, dropout_rng=None)
    eval_a = model.encode(CTX, Q).scores.start
    eval_b = model.encode(CTX, Q).scores.start
    assert np.array_equal(eval_a, eval_b)
