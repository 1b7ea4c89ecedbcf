"""Model and trainer configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from elqa.errors import ModelError


@dataclass(frozen=True)
class EncoderConfig:
    embedding_dim: int = 64
    hidden_dim: int = 64
    num_layers: int = 1
    dropout: float = 0.0
    embeddings_path: str | None = None  # optional pretrained word vectors (text format)

    def __post_init__(self):
        if self.embedding_dim <= 0 or self.hidden_dim <= 0 or self.num_layers <= 0:
            raise ModelError("encoder dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ModelError(f"dropout {self.dropout} outside [0, 1)")


@dataclass(frozen=True)
class TrainerConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 20
    seed: int = 13
    max_answer_length: int = 100  # 30 is the usual choice for SQuAD-style data
    window_size: int = 400
    window_stride: int = 200
    grad_clip: float | None = 10.0
    early_stop_f1: float | None = None  # stop once dev F1 reaches this

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ModelError("lr, batch_size and epochs must be positive")
        if self.max_answer_length < 1:
            raise ModelError("max_answer_length must be at least 1")
        if self.window_size < 1 or not 1 <= self.window_stride <= self.window_size:
            raise ModelError("need 1 <= window_stride <= window_size")


def config_to_dict(config) -> dict:
    return asdict(config)


def encoder_config_from_dict(obj: dict) -> EncoderConfig:
    return _from_dict(EncoderConfig, obj)


def trainer_config_from_dict(obj: dict) -> TrainerConfig:
    return _from_dict(TrainerConfig, obj)


def _from_dict(cls, obj: dict):
    known = set(cls.__dataclass_fields__)
    unknown = set(obj) - known
    if unknown:
        raise ModelError(f"unknown {cls.__name__} fields {sorted(unknown)}")
    return cls(**obj)
