"""Desk-scale extractive span reader.

A multi-layer bidirectional LSTM reads the context (word embeddings plus
question-match and term-frequency features); a second one reads the
question, whose token states are pooled into a single vector by learned
attention.  Two independently trained bilinear classifiers score every
context position (plus a learned null sentinel) as answer start and end.

Everything is float64 numpy with hand-written backpropagation, so
gradients are exactly checkable against finite differences and runs are
bit-reproducible given a seed.  The serial LSTM recurrences run on the
kernel backend (compiled when built, numpy otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from elqa.errors import ModelError
from elqa.model import kernels
from elqa.model.config import EncoderConfig
from elqa.model.decode import SpanScores
from elqa.model.vocab import Vocabulary

N_FEATURES = 3  # exact match (original), exact match (lowercase), term frequency


def match_features(ctx_texts: Sequence[str], q_texts: Sequence[str]) -> np.ndarray:
    """Per context token: question-match indicators and term frequency."""
    q_orig = set(q_texts)
    q_lower = {t.lower() for t in q_texts}
    lowered = [t.lower() for t in ctx_texts]
    counts: dict[str, int] = {}
    for t in lowered:
        counts[t] = counts.get(t, 0) + 1
    n = len(ctx_texts)
    feats = np.empty((n, N_FEATURES))
    for i, t in enumerate(ctx_texts):
        feats[i, 0] = 1.0 if t in q_orig else 0.0
        feats[i, 1] = 1.0 if lowered[i] in q_lower else 0.0
        feats[i, 2] = counts[lowered[i]] / n
    return feats


@dataclass
class _LayerCache:
    x: np.ndarray  # layer input in kernel time order
    xg: np.ndarray
    h: np.ndarray
    c: np.ndarray
    gates: np.ndarray


@dataclass
class _EncoderCache:
    inputs: list[np.ndarray] = field(default_factory=list)  # per-layer inputs (fwd order)
    masks: list[np.ndarray | None] = field(default_factory=list)
    layers: list[dict[str, _LayerCache]] = field(default_factory=list)
    rep: np.ndarray | None = None


@dataclass
class ForwardState:
    ctx_ids: np.ndarray
    q_ids: np.ndarray
    ctx: _EncoderCache
    q: _EncoderCache
    alpha: np.ndarray
    qvec: np.ndarray
    ctx_ext: np.ndarray
    s_vec: np.ndarray
    e_vec: np.ndarray
    scores: SpanScores


def _log_softmax(x: np.ndarray) -> np.ndarray:
    m = x.max()
    z = x - m
    return z - np.log(np.exp(z).sum())


class SpanReader:
    """Span-prediction model over raw token texts."""

    def __init__(
        self,
        config: EncoderConfig,
        vocab: Vocabulary,
        rng: np.random.Generator | None = None,
        zero_bilinear: bool = True,
    ):
        self.config = config
        self.vocab = vocab
        rng = rng or np.random.default_rng(0)
        e, h, layers = config.embedding_dim, config.hidden_dim, config.num_layers
        self.rep_dim = layers * 2 * h
        k = 1.0 / np.sqrt(h)
        params: dict[str, np.ndarray] = {}
        params["emb"] = rng.normal(0.0, 0.1, size=(len(vocab), e))
        for enc, extra in (("ctx", N_FEATURES), ("q", 0)):
            for layer in range(1, layers + 1):
                in_dim = (e + extra) if layer == 1 else 2 * h
                for d in ("f", "b"):
                    prefix = f"{enc}_l{layer}_{d}"
                    params[f"{prefix}_wx"] = rng.uniform(-k, k, size=(4 * h, in_dim))
                    params[f"{prefix}_wh"] = rng.uniform(-k, k, size=(4 * h, h))
                    bias = np.zeros(4 * h)
                    bias[h : 2 * h] = 1.0  # forget-gate bias
                    params[f"{prefix}_b"] = bias
        kr = 1.0 / np.sqrt(self.rep_dim)
        params["attn_w"] = rng.uniform(-kr, kr, size=self.rep_dim)
        if zero_bilinear:
            params["w_start"] = np.zeros((self.rep_dim, self.rep_dim))
            params["w_end"] = np.zeros((self.rep_dim, self.rep_dim))
        else:
            params["w_start"] = rng.uniform(-kr, kr, size=(self.rep_dim, self.rep_dim))
            params["w_end"] = rng.uniform(-kr, kr, size=(self.rep_dim, self.rep_dim))
        params["null_vec"] = rng.normal(0.0, 0.1, size=self.rep_dim)
        self.params = params

    # --- forward -----------------------------------------------------------

    def _run_encoder(
        self,
        enc: str,
        inputs: np.ndarray,
        train: bool,
        dropout_rng: np.random.Generator | None,
    ) -> _EncoderCache:
        cache = _EncoderCache()
        h = self.config.hidden_dim
        zeros = np.zeros(h)
        x = inputs
        outs = []
        for layer in range(1, self.config.num_layers + 1):
            mask = None
            if train and self.config.dropout > 0.0:
                if dropout_rng is None:
                    raise ModelError("training forward pass needs a dropout rng")
                keep = 1.0 - self.config.dropout
                mask = (dropout_rng.random(x.shape) < keep) / keep
                x = x * mask
            cache.inputs.append(x)
            cache.masks.append(mask)
            per_dir: dict[str, _LayerCache] = {}
            h_parts = []
            for d in ("f", "b"):
                prefix = f"{enc}_l{layer}_{d}"
                x_d = x if d == "f" else x[::-1]
                x_d = np.ascontiguousarray(x_d)
                xg = x_d @ self.params[f"{prefix}_wx"].T + self.params[f"{prefix}_b"]
                xg = np.ascontiguousarray(xg)
                hs, cs, gates = kernels.lstm_forward(
                    xg, self.params[f"{prefix}_wh"], zeros, zeros
                )
                per_dir[d] = _LayerCache(x_d, xg, hs, cs, gates)
                h_parts.append(hs if d == "f" else hs[::-1])
            cache.layers.append(per_dir)
            layer_out = np.concatenate(h_parts, axis=1)
            outs.append(layer_out)
            x = layer_out
        cache.rep = np.concatenate(outs, axis=1)
        return cache

    def encode(
        self,
        ctx_texts: Sequence[str],
        q_texts: Sequence[str],
        train: bool = False,
        dropout_rng: np.random.Generator | None = None,
    ) -> ForwardState:
        """Encode a context window and question; returns the full forward
        state (context representations, pooled question vector, scores)."""
        if not len(ctx_texts):
            raise ModelError("empty context window")
        if not len(q_texts):
            raise ModelError("empty question")
        ctx_ids = self.vocab.ids(ctx_texts)
        q_ids = self.vocab.ids(q_texts)
        emb = self.params["emb"]
        ctx_inputs = np.concatenate(
            [emb[ctx_ids], match_features(ctx_texts, q_texts)], axis=1
        )
        q_inputs = emb[q_ids]
        ctx_cache = self._run_encoder("ctx", ctx_inputs, train, dropout_rng)
        q_cache = self._run_encoder("q", q_inputs, train, dropout_rng)

        attn = q_cache.rep @ self.params["attn_w"]
        attn = attn - attn.max()
        alpha = np.exp(attn)
        alpha /= alpha.sum()
        qvec = alpha @ q_cache.rep

        ctx_ext = np.vstack([ctx_cache.rep, self.params["null_vec"]])
        s_vec = self.params["w_start"] @ qvec
        e_vec = self.params["w_end"] @ qvec
        scores = SpanScores(ctx_ext @ s_vec, ctx_ext @ e_vec)
        return ForwardState(
            ctx_ids=ctx_ids,
            q_ids=q_ids,
            ctx=ctx_cache,
            q=q_cache,
            alpha=alpha,
            qvec=qvec,
            ctx_ext=ctx_ext,
            s_vec=s_vec,
            e_vec=e_vec,
            scores=scores,
        )

    def context_representation(self, state: ForwardState) -> np.ndarray:
        return state.ctx.rep

    def score_spans(self, state: ForwardState) -> SpanScores:
        return state.scores

    # --- loss and gradients --------------------------------------------------

    def loss(self, state: ForwardState, gold_start: int, gold_end: int) -> float:
        """Independent cross-entropies of the gold start and end positions
        (end is the inclusive index of the last gold token)."""
        ls = _log_softmax(state.scores.start)
        le = _log_softmax(state.scores.end)
        return float(-(ls[gold_start] + le[gold_end]))

    def loss_and_grads(
        self,
        ctx_texts: Sequence[str],
        q_texts: Sequence[str],
        gold_start: int,
        gold_end: int,
        train: bool = True,
        dropout_rng: np.random.Generator | None = None,
    ) -> tuple[float, dict[str, np.ndarray]]:
        state = self.encode(ctx_texts, q_texts, train=train, dropout_rng=dropout_rng)
        n_ctx = len(ctx_texts)
        if not (0 <= gold_start < n_ctx and gold_start <= gold_end < n_ctx):
            raise ModelError(f"gold span ({gold_start}, {gold_end}) outside context")
        loss = self.loss(state, gold_start, gold_end)
        grads = {name: np.zeros_like(p) for name, p in self.params.items()}

        p_s = np.exp(_log_softmax(state.scores.start))
        p_e = np.exp(_log_softmax(state.scores.end))
        d_start = p_s.copy()
        d_start[gold_start] -= 1.0
        d_end = p_e.copy()
        d_end[gold_end] -= 1.0

        d_ctx_ext = np.outer(d_start, state.s_vec) + np.outer(d_end, state.e_vec)
        d_s_vec = state.ctx_ext.T @ d_start
        d_e_vec = state.ctx_ext.T @ d_end
        grads["w_start"] += np.outer(d_s_vec, state.qvec)
        grads["w_end"] += np.outer(d_e_vec, state.qvec)
        d_qvec = self.params["w_start"].T @ d_s_vec + self.params["w_end"].T @ d_e_vec
        grads["null_vec"] += d_ctx_ext[-1]
        d_ctx_rep = d_ctx_ext[:-1]

        # attention pooling over question states
        d_alpha = state.q.rep @ d_qvec
        d_q_rep = np.outer(state.alpha, d_qvec)
        d_attn = state.alpha * (d_alpha - float(state.alpha @ d_alpha))
        grads["attn_w"] += state.q.rep.T @ d_attn
        d_q_rep += np.outer(d_attn, self.params["attn_w"])

        d_ctx_inputs = self._encoder_backward("ctx", state.ctx, d_ctx_rep, grads)
        d_q_inputs = self._encoder_backward("q", state.q, d_q_rep, grads)
        e = self.config.embedding_dim
        np.add.at(grads["emb"], state.ctx_ids, d_ctx_inputs[:, :e])
        np.add.at(grads["emb"], state.q_ids, d_q_inputs)
        return loss, grads

    def _encoder_backward(
        self,
        enc: str,
        cache: _EncoderCache,
        d_rep: np.ndarray,
        grads: dict[str, np.ndarray],
    ) -> np.ndarray:
        h = self.config.hidden_dim
        layers = self.config.num_layers
        zeros = np.zeros(h)
        d_from_above: np.ndarray | None = None
        for layer in range(layers, 0, -1):
            d_out = d_rep[:, (layer - 1) * 2 * h : layer * 2 * h].copy()
            if d_from_above is not None:
                d_out += d_from_above
            d_in = None
            for d, d_h_slice in (("f", d_out[:, :h]), ("b", d_out[:, h:])):
                prefix = f"{enc}_l{layer}_{d}"
                lc = cache.layers[layer - 1][d]
                dh_out = d_h_slice if d == "f" else d_h_slice[::-1]
                dh_out = np.ascontiguousarray(dh_out)
                d_xg, d_wh, _, _ = kernels.lstm_backward(
                    self.params[f"{prefix}_wh"], lc.gates, lc.h, lc.c, zeros, zeros, dh_out
                )
                grads[f"{prefix}_wh"] += d_wh
                grads[f"{prefix}_wx"] += d_xg.T @ lc.x
                grads[f"{prefix}_b"] += d_xg.sum(axis=0)
                d_x = d_xg @ self.params[f"{prefix}_wx"]
                if d == "b":
                    d_x = d_x[::-1]
                d_in = d_x if d_in is None else d_in + d_x
            mask = cache.masks[layer - 1]
            if mask is not None:
                d_in = d_in * mask
            d_from_above = d_in
        return d_from_above
