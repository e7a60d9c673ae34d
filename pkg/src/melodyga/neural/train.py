"""Per-sequence Adam training of the bi-LSTM scorer on squared error."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..records import split_dataset
from . import kernels
from .model import LstmModel, raw_features, unflatten

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 200
    learning_rate: float = 1e-4
    hidden_size: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 1.0
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass
class EpochStats:
    epoch: int
    train_rmse: float
    val_rmse: float


@dataclass
class TrainResult:
    model: LstmModel
    history: list[EpochStats]
    best_epoch: int
    initial_train_rmse: float
    initial_val_rmse: float
    final_model: LstmModel = field(repr=False, default=None)


def feature_statistics(sequences: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    allrows = np.concatenate(sequences, axis=0)
    means = allrows.mean(axis=0)
    stds = allrows.std(axis=0)
    flat = stds <= 1e-12
    if np.any(flat):
        warnings.warn(
            f"zero-variance features {np.flatnonzero(flat).tolist()}; using std 1",
            RuntimeWarning,
            stacklevel=3,
        )
        stds = np.where(flat, 1.0, stds)
    return means, stds


def _rmse(model: LstmModel, xs, ys) -> float:
    p = model.params
    err = 0.0
    for X, y in zip(xs, ys):
        s = kernels.bilstm_score(p["Wx"], p["Wh"], p["b"], p["w_out"], p["b_out"], X)
        err += (s - y) ** 2
    return float(np.sqrt(err / len(xs)))


def train(records: Sequence, cfg: TrainConfig = TrainConfig(), rng: np.random.Generator | None = None,
          init_model: LstmModel | None = None, progress=None) -> TrainResult:
    """Fit a scorer to ``records`` (objects with ``notes`` and ``score``).

    The split, feature statistics and weight initialization use only the
    training portion. Returns the weights with the lowest validation RMSE.
    With ``init_model`` training resumes from its weights and statistics.
    """
    if len(records) < 2:
        raise ValueError("need at least two records to train")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    split_seed = int(rng.integers(2**63))
    train_set, val_set = split_dataset(records, cfg.validation_fraction, split_seed)

    raw_train = [raw_features(r.notes) for r in train_set]
    raw_val = [raw_features(r.notes) for r in val_set]
    if init_model is None:
        means, stds = feature_statistics(raw_train)
        model = LstmModel.initialize(cfg.hidden_size, rng, means, stds)
    else:
        model = init_model.copy()
    xs_train = [np.ascontiguousarray((x - model.feature_means) / model.feature_stds) for x in raw_train]
    xs_val = [np.ascontiguousarray((x - model.feature_means) / model.feature_stds) for x in raw_val]
    ys_train = np.array([r.score for r in train_set], dtype=np.float64)
    ys_val = np.array([r.score for r in val_set], dtype=np.float64)

    theta = model.theta
    p = unflatten(theta, model.hidden_size)
    grad = np.zeros_like(theta)
    g = unflatten(grad, model.hidden_size)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)

    init_train = _rmse(model, xs_train, ys_train)
    init_val = _rmse(model, xs_val, ys_val)
    best_val = np.inf
    best_theta = theta.copy()
    best_epoch = 0
    history: list[EpochStats] = []
    step = 0
    for epoch in range(1, cfg.max_epochs + 1):
        sq_err = 0.0
        for k in rng.permutation(len(xs_train)):
            X = xs_train[k]
            score, cache = kernels.bilstm_forward(p["Wx"], p["Wh"], p["b"], p["w_out"], p["b_out"], X)
            err = score - ys_train[k]
            sq_err += err * err
            kernels.bilstm_backward(
                p["Wh"], p["w_out"], X, cache, err, g["Wx"], g["Wh"], g["b"], g["w_out"], g["b_out"]
            )
            kernels.clip_global_norm(grad, cfg.clip_norm)
            step += 1
            kernels.adam_update(theta, grad, m, v, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps, step)
        # training RMSE is the running error of this epoch's updates
        train_rmse = float(np.sqrt(sq_err / len(xs_train)))
        stats = EpochStats(epoch, train_rmse, _rmse(model, xs_val, ys_val))
        history.append(stats)
        if stats.val_rmse < best_val:
            best_val = stats.val_rmse
            best_theta = theta.copy()
            best_epoch = epoch
        log.info("epoch %d train_rmse %.4f val_rmse %.4f", epoch, stats.train_rmse, stats.val_rmse)
        if progress is not None:
            progress(stats)

    final = model.copy()
    best = LstmModel(model.hidden_size, best_theta, model.feature_means.copy(), model.feature_stds.copy())
    return TrainResult(best, history, best_epoch, init_train, init_val, final)
