"""Training loop, optimizer, and checkpoint serialization.

Start and end classifiers are trained independently (summed
cross-entropies); the dev set is scored with token F1 after every epoch
and the best-dev parameters are kept.  Runs are deterministic given the
trainer seed; multi-seed runs simply repeat with different seeds and
average the scores.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from elqa.core import Document, QAInstance
from elqa.errors import ModelError
from elqa.metrics import token_f1
from elqa.model.config import (
    EncoderConfig,
    TrainerConfig,
    config_to_dict,
    encoder_config_from_dict,
)
from elqa.model.inference import predict_spans, window_starts
from elqa.model.network import SpanReader
from elqa.model.vocab import Vocabulary, load_pretrained


class Adam:
    """Adaptive-moment optimizer over a named parameter dict."""

    def __init__(self, params: Mapping[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if total > max_norm and total > 0.0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


@dataclass(frozen=True)
class TrainItem:
    instance_id: str
    ctx_texts: tuple[str, ...]
    q_texts: tuple[str, ...]
    gold_start: int
    gold_end: int  # inclusive


def prepare_items(
    instances: Sequence[QAInstance],
    documents: Mapping[str, Document],
    window_size: int,
    window_stride: int,
) -> tuple[list[TrainItem], list[str]]:
    """Build training items; instances without a usable contiguous target
    are skipped and reported (id + reason)."""
    items: list[TrainItem] = []
    skipped: list[str] = []
    for inst in instances:
        if inst.gold_contiguous is None:
            skipped.append(f"{inst.instance_id}: no contiguous gold target")
            continue
        doc = documents.get(inst.context_doc_id)
        if doc is None:
            skipped.append(f"{inst.instance_id}: missing document {inst.context_doc_id!r}")
            continue
        span = inst.gold_contiguous
        start = None
        for w in window_starts(len(doc), window_size, window_stride):
            if w <= span.start and span.end <= w + window_size:
                start = w
                break
        if start is None:
            skipped.append(f"{inst.instance_id}: gold span does not fit a window")
            continue
        ctx = tuple(t.text for t in doc.tokens[start : start + window_size])
        items.append(
            TrainItem(
                inst.instance_id,
                ctx,
                tuple(inst.question_token_texts()),
                span.start - start,
                span.end - 1 - start,
            )
        )
    return items, skipped


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    best_loss_so_far: float
    dev_f1: float | None
    is_best: bool


@dataclass
class ModelCheckpoint:
    encoder: EncoderConfig
    vocab_words: list[str]
    params: dict[str, np.ndarray]

    def model(self) -> SpanReader:
        if not self.vocab_words or self.vocab_words[0] != "<unk>":
            raise ModelError("checkpoint vocabulary must start with <unk>")
        vocab = Vocabulary(self.vocab_words[1:])  # words beyond <unk>
        reader = SpanReader(self.encoder, vocab)
        for name, value in self.params.items():
            if name not in reader.params or reader.params[name].shape != value.shape:
                raise ModelError(f"checkpoint parameter {name!r} does not fit the model")
            reader.params[name] = value.copy()
        return reader

    def save(self, path) -> None:
        meta = {
            "format": "elqa-checkpoint-v1",
            "encoder": config_to_dict(self.encoder),
            "vocab": self.vocab_words,
            "param_names": sorted(self.params),
        }
        arrays = {f"param::{k}": v for k, v in self.params.items()}
        np.savez_compressed(path, __meta__=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path) -> ModelCheckpoint:
    with np.load(path, allow_pickle=False) as data:
        if "__meta__" not in data:
            raise ModelError(f"{path}: not a checkpoint file")
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != "elqa-checkpoint-v1":
            raise ModelError(f"{path}: unknown checkpoint format")
        params = {
            name: data[f"param::{name}"].astype(np.float64) for name in meta["param_names"]
        }
    return ModelCheckpoint(
        encoder=encoder_config_from_dict(meta["encoder"]),
        vocab_words=list(meta["vocab"]),
        params=params,
    )


@dataclass
class TrainResult:
    checkpoint: ModelCheckpoint
    history: list[EpochRecord]
    skipped: list[str]
    best_epoch: int
    best_dev_f1: float | None


def _epoch_rng(seed: int, epoch: int, label: str) -> random.Random:
    key = f"{seed}|{label}|{epoch}".encode()
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def _dev_f1(
    model: SpanReader,
    dev: Sequence[QAInstance],
    documents: Mapping[str, Document],
    trainer: TrainerConfig,
) -> float:
    predictions, _ = predict_spans(
        model,
        dev,
        documents,
        max_answer_length=trainer.max_answer_length,
        window_size=trainer.window_size,
        window_stride=trainer.window_stride,
    )
    scores = [
        token_f1(predictions[i.instance_id].indices(), i.gold_answer).f1 for i in dev
    ]
    return float(sum(scores) / len(scores))


def train(
    mixture,
    dev: Sequence[QAInstance],
    documents: Mapping[str, Document],
    encoder: EncoderConfig,
    trainer: TrainerConfig,
    resampler=None,
) -> TrainResult:
    """Train a span reader on a (possibly joint) training mixture.

    resampler, when given, is called with the epoch number and must return
    the epoch's mixture (used with per-epoch auxiliary resampling); epoch 0
    always uses the mixture passed in.
    """
    instances = list(getattr(mixture, "instances", mixture))
    if not instances:
        raise ModelError("empty training mixture")
    items, skipped = prepare_items(
        instances, documents, trainer.window_size, trainer.window_stride
    )
    if not items:
        raise ModelError(
            f"no trainable instances ({len(skipped)} skipped, e.g. {skipped[0]})"
        )
    vocab = Vocabulary.build(instances, documents)
    init_rng = np.random.default_rng(trainer.seed)
    model = SpanReader(encoder, vocab, rng=init_rng)
    if encoder.embeddings_path:
        with open(encoder.embeddings_path, encoding="utf-8") as f:
            load_pretrained(f, vocab, model.params["emb"])
    optimizer = Adam(model.params, lr=trainer.lr)
    dropout_rng = np.random.default_rng(
        np.random.SeedSequence([trainer.seed & ((1 << 63) - 1), 0xD0]))

    history: list[EpochRecord] = []
    best_loss = np.inf
    best_dev: float | None = None
    best_epoch = -1
    best_params = {k: v.copy() for k, v in model.params.items()}
    for epoch in range(trainer.epochs):
        if resampler is not None and epoch > 0:
            epoch_instances = list(resampler(epoch).instances)
            items, extra_skipped = prepare_items(
                epoch_instances, documents, trainer.window_size, trainer.window_stride
            )
            skipped.extend(s for s in extra_skipped if s not in skipped)
            if not items:
                raise ModelError(f"epoch {epoch}: resampled mixture has no trainable instances")
        order = list(range(len(items)))
        _epoch_rng(trainer.seed, epoch, "order").shuffle(order)
        epoch_loss = 0.0
        for lo in range(0, len(order), trainer.batch_size):
            batch = [items[i] for i in order[lo : lo + trainer.batch_size]]
            grads_sum: dict[str, np.ndarray] | None = None
            for item in batch:
                loss, grads = model.loss_and_grads(
                    item.ctx_texts,
                    item.q_texts,
                    item.gold_start,
                    item.gold_end,
                    train=True,
                    dropout_rng=dropout_rng,
                )
                epoch_loss += loss
                if grads_sum is None:
                    grads_sum = grads
                else:
                    for name, g in grads.items():
                        grads_sum[name] += g
            for g in grads_sum.values():
                g /= len(batch)
            if trainer.grad_clip is not None:
                clip_gradients(grads_sum, trainer.grad_clip)
            optimizer.step(model.params, grads_sum)
        epoch_loss /= len(items)
        new_loss_best = epoch_loss < best_loss
        best_loss = min(best_loss, epoch_loss)

        dev_f1 = _dev_f1(model, dev, documents, trainer) if dev else None
        if dev:
            is_best = best_dev is None or dev_f1 > best_dev
        else:
            is_best = new_loss_best or best_epoch < 0
        if is_best:
            best_dev = dev_f1
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
        history.append(EpochRecord(epoch, epoch_loss, best_loss, dev_f1, is_best))
        if (
            trainer.early_stop_f1 is not None
            and dev_f1 is not None
            and dev_f1 >= trainer.early_stop_f1
        ):
            break
    checkpoint = ModelCheckpoint(encoder, vocab.words, best_params)
    return TrainResult(checkpoint, history, skipped, best_epoch, best_dev)


@dataclass
class MultiSeedResult:
    results: list[TrainResult]
    seeds: list[int]
    mean_dev_f1: float | None


def train_multi(
    mixture,
    dev,
    documents,
    encoder: EncoderConfig,
    trainer: TrainerConfig,
    seeds: Sequence[int],
    resampler_factory=None,
) -> MultiSeedResult:
    """Independent runs with different seeds; dev scores are averaged."""
    if not seeds:
        raise ModelError("need at least one seed")
    results = []
    for seed in seeds:
        cfg = TrainerConfig(**{**config_to_dict(trainer), "seed": int(seed)})
        resampler = resampler_factory(int(seed)) if resampler_factory else None
        results.append(train(mixture, dev, documents, encoder, cfg, resampler=resampler))
    scores = [r.best_dev_f1 for r in results if r.best_dev_f1 is not None]
    mean = float(sum(scores) / len(scores)) if scores else None
    return MultiSeedResult(results, [int(s) for s in seeds], mean)
