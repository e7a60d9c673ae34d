"""Bidirectional LSTM melody scorer."""

from .model import (
    ForwardCache,
    LstmModel,
    ModelFileError,
    ModelVersionError,
    backward,
    featurize,
    forward,
    load_model,
    lstm_score,
    parameter_count,
    save_model,
)
from .train import EpochStats, TrainConfig, TrainResult, train

__all__ = [
    "EpochStats",
    "ForwardCache",
    "LstmModel",
    "ModelFileError",
    "ModelVersionError",
    "TrainConfig",
    "TrainResult",
    "backward",
    "featurize",
    "forward",
    "load_model",
    "lstm_score",
    "parameter_count",
    "save_model",
    "train",
]
