"""Trainable extractive span resolver and its decoding/inference tools."""

from elqa.model.config import EncoderConfig, TrainerConfig
from elqa.model.decode import SpanScores, decode
from elqa.model.inference import baseline_previous_sentence, predict_spans
from elqa.model.network import SpanReader
from elqa.model.training import ModelCheckpoint, TrainResult, load_checkpoint, train

__all__ = [
    "EncoderConfig",
    "TrainerConfig",
    "SpanScores",
    "decode",
    "SpanReader",
    "train",
    "TrainResult",
    "ModelCheckpoint",
    "load_checkpoint",
    "predict_spans",
    "baseline_previous_sentence",
]
