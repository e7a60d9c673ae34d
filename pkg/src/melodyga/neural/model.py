"""Bidirectional LSTM melody scorer: parameters, inference and persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..chromosome import Chromosome
from . import kernels

N_FEATURES = 4
GATES = ("input", "forget", "modulation", "output")
DIRECTIONS = ("forward", "backward")
FORMAT_NAME = "melodyga-bilstm"
FORMAT_VERSION = 1


class ModelFileError(ValueError):
    """Malformed, inconsistent or unsupported model file."""


class ModelVersionError(ModelFileError):
    pass


def parameter_layout(hidden_size: int) -> dict[str, tuple[int, tuple[int, ...]]]:
    """Offset and shape of every block inside the flat parameter vector."""
    H, I = hidden_size, N_FEATURES
    shapes = {
        "Wx": (2, 4 * H, I),
        "Wh": (2, 4 * H, H),
        "b": (2, 4 * H),
        "w_out": (2 * H,),
        "b_out": (1,),
    }
    layout, offset = {}, 0
    for name, shape in shapes.items():
        layout[name] = (offset, shape)
        offset += int(np.prod(shape))
    return layout


def parameter_count(hidden_size: int) -> int:
    off, shape = parameter_layout(hidden_size)["b_out"]
    return off + 1


def unflatten(theta: np.ndarray, hidden_size: int) -> dict[str, np.ndarray]:
    """Views of ``theta`` (no copies) keyed by block name."""
    return {
        name: theta[off : off + int(np.prod(shape))].reshape(shape)
        for name, (off, shape) in parameter_layout(hidden_size).items()
    }


@dataclass
class LstmModel:
    hidden_size: int
    theta: np.ndarray
    feature_means: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    feature_stds: np.ndarray = field(default_factory=lambda: np.ones(N_FEATURES))

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ValueError("hidden_size must be positive")
        self.theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        if self.theta.shape != (parameter_count(self.hidden_size),):
            raise ValueError(
                f"parameter vector has shape {self.theta.shape}, expected "
                f"({parameter_count(self.hidden_size)},) for hidden_size {self.hidden_size}"
            )
        self.feature_means = np.asarray(self.feature_means, dtype=np.float64).reshape(N_FEATURES)
        self.feature_stds = np.asarray(self.feature_stds, dtype=np.float64).reshape(N_FEATURES)
        if np.any(self.feature_stds <= 0):
            raise ValueError("feature standard deviations must be positive")

    @classmethod
    def zeros(cls, hidden_size: int = 50) -> "LstmModel":
        return cls(hidden_size, np.zeros(parameter_count(hidden_size)))

    @classmethod
    def initialize(cls, hidden_size: int, rng: np.random.Generator, means=None, stds=None) -> "LstmModel":
        """Uniform input weights, orthogonal recurrent weights, forget bias 1, zero readout."""
        model = cls.zeros(hidden_size)
        H = hidden_size
        p = model.params
        limit = np.sqrt(6.0 / (N_FEATURES + H))
        for d in range(2):
            p["Wx"][d] = rng.uniform(-limit, limit, size=(4 * H, N_FEATURES))
            for k in range(4):
                q, r = np.linalg.qr(rng.standard_normal((H, H)))
                q *= np.sign(np.diag(r))
                p["Wh"][d, k * H : (k + 1) * H] = q
            p["b"][d, H : 2 * H] = 1.0
        if means is not None:
            model.feature_means = np.asarray(means, dtype=np.float64)
        if stds is not None:
            model.feature_stds = np.asarray(stds, dtype=np.float64)
        return model

    @property
    def params(self) -> dict[str, np.ndarray]:
        return unflatten(self.theta, self.hidden_size)

    def gate_block(self, direction: int, gate: str):
        """(input-to-hidden, hidden-to-hidden, bias) views of one gate."""
        k = GATES.index(gate)
        H = self.hidden_size
        p = self.params
        rows = slice(k * H, (k + 1) * H)
        return p["Wx"][direction, rows], p["Wh"][direction, rows], p["b"][direction, rows]

    def copy(self) -> "LstmModel":
        return LstmModel(
            self.hidden_size, self.theta.copy(), self.feature_means.copy(), self.feature_stds.copy()
        )

    def __eq__(self, other):
        if not isinstance(other, LstmModel):
            return NotImplemented
        return (
            self.hidden_size == other.hidden_size
            and self.theta.tobytes() == other.theta.tobytes()
            and self.feature_means.tobytes() == other.feature_means.tobytes()
            and self.feature_stds.tobytes() == other.feature_stds.tobytes()
        )


def raw_features(c: Chromosome) -> np.ndarray:
    """(N, 4) array of accidental, step, octave, duration-as-float."""
    return np.ascontiguousarray(c.as_matrix().T)


def featurize(c: Chromosome, model: LstmModel) -> np.ndarray:
    return np.ascontiguousarray((raw_features(c) - model.feature_means) / model.feature_stds)


@dataclass
class ForwardCache:
    X: np.ndarray
    arrays: tuple
    hidden_size: int


def forward(model: LstmModel, X: np.ndarray) -> tuple[float, ForwardCache]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] != N_FEATURES:
        raise ValueError(f"expected a non-empty (T, {N_FEATURES}) sequence, got shape {X.shape}")
    p = model.params
    score, arrays = kernels.bilstm_forward(p["Wx"], p["Wh"], p["b"], p["w_out"], p["b_out"], X)
    return float(score), ForwardCache(X, arrays, model.hidden_size)


def score_features(model: LstmModel, X: np.ndarray) -> float:
    """Forward pass without caching activations."""
    if X.shape[0] < 1:
        raise ValueError("cannot score an empty sequence")
    p = model.params
    return float(kernels.bilstm_score(p["Wx"], p["Wh"], p["b"], p["w_out"], p["b_out"], X))


def backward(model: LstmModel, cache: ForwardCache, d_score: float, out: np.ndarray | None = None) -> np.ndarray:
    """Flat gradient of ``d_score * score`` with respect to ``model.theta``."""
    if cache.hidden_size != model.hidden_size:
        raise ValueError("forward cache does not match this model")
    grad = np.zeros_like(model.theta) if out is None else out
    g = unflatten(grad, model.hidden_size)
    p = model.params
    kernels.bilstm_backward(
        p["Wh"], p["w_out"], cache.X, cache.arrays, float(d_score),
        g["Wx"], g["Wh"], g["b"], g["w_out"], g["b_out"],
    )
    return grad


def lstm_score(model: LstmModel, c: Chromosome) -> float:
    """Raw, unclamped melody score."""
    if len(c) < 1:
        raise ValueError("cannot score an empty chromosome")
    return score_features(model, featurize(c, model))


# ---------------------------------------------------------------------------
# persistence


def model_to_json(model: LstmModel) -> dict:
    H = model.hidden_size
    blocks = []
    for d, dname in enumerate(DIRECTIONS):
        for gate in GATES:
            wx, wh, bias = model.gate_block(d, gate)
            for part, arr in (("W_input", wx), ("W_hidden", wh), ("bias", bias)):
                blocks.append(
                    {"name": f"{dname}.{gate}.{part}", "shape": list(arr.shape), "data": arr.ravel().tolist()}
                )
    p = model.params
    blocks.append({"name": "readout.weight", "shape": [2 * H], "data": p["w_out"].tolist()})
    blocks.append({"name": "readout.bias", "shape": [1], "data": p["b_out"].tolist()})
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "hidden_size": H,
        "n_features": N_FEATURES,
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "blocks": blocks,
    }


def model_from_json(doc: dict) -> LstmModel:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFileError("not a bi-LSTM model document")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model file version {doc.get('version')!r}")
    try:
        H = int(doc["hidden_size"])
        if int(doc.get("n_features", N_FEATURES)) != N_FEATURES:
            raise ModelFileError("model expects a different number of input features")
        model = LstmModel.zeros(H)
        model.feature_means = np.array(doc["feature_means"], dtype=np.float64).reshape(N_FEATURES)
        model.feature_stds = np.array(doc["feature_stds"], dtype=np.float64).reshape(N_FEATURES)
        targets = {}
        for d, dname in enumerate(DIRECTIONS):
            for gate in GATES:
                wx, wh, bias = model.gate_block(d, gate)
                targets[f"{dname}.{gate}.W_input"] = wx
                targets[f"{dname}.{gate}.W_hidden"] = wh
                targets[f"{dname}.{gate}.bias"] = bias
        p = model.params
        targets["readout.weight"] = p["w_out"]
        targets["readout.bias"] = p["b_out"]
        seen = set()
        for block in doc["blocks"]:
            name = block["name"]
            if name not in targets or name in seen:
                raise ModelFileError(f"unexpected or duplicate block {name!r}")
            dest = targets[name]
            shape = tuple(int(s) for s in block["shape"])
            data = np.array(block["data"], dtype=np.float64)
            if shape != dest.shape or data.size != dest.size:
                raise ModelFileError(f"block {name!r} has shape {shape}, expected {dest.shape}")
            dest[...] = data.reshape(shape)
            seen.add(name)
        missing = set(targets) - seen
        if missing:
            raise ModelFileError(f"missing blocks: {sorted(missing)}")
        if np.any(model.feature_stds <= 0):
            raise ModelFileError("feature standard deviations must be positive")
    except ModelFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model document: {exc}") from None
    return model


def save_model(model: LstmModel, path) -> None:
    text = json.dumps(model_to_json(model), indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path) -> LstmModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: not valid JSON ({exc})") from None
    return model_from_json(doc)
