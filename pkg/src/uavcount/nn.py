"""Fully connected sigmoid network trained by per-sample gradient descent on MSE.

Layer recursion: ``z = sigmoid(z_prev @ W - theta)`` where ``theta`` is the
per-neuron threshold. The loss for one sample is ``mean_k (g_hat_k - g_k)^2``
over the K outputs, so gradients carry the ``2/K`` factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_TAG = "uavcount-nn/1"


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class NnArchitecture:
    hidden_sizes: tuple[int, ...] = (10,)
    output_size: int = 3
    input_size: int = 5
    learning_rate: float = 0.01
    epochs: int = 400
    tol: float = 1e-8
    # z-score inputs with training-set statistics before the first layer
    standardize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not self.hidden_sizes:
            raise ValueError("need at least one hidden layer")
        if min(self.layer_sizes) < 1:
            raise ValueError("layer sizes must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_size, *self.hidden_sizes, self.output_size)

    @property
    def n_weights(self) -> int:
        s = self.layer_sizes
        return sum(a * b for a, b in zip(s[:-1], s[1:]))

    @property
    def n_thresholds(self) -> int:
        return sum(self.layer_sizes[1:])


@dataclass
class NnParameters:
    weights: list[np.ndarray]      # weights[l] has shape (fan_in, fan_out)
    thresholds: list[np.ndarray]   # thresholds[l] has shape (fan_out,)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.thresholds) for a in pair])

    @classmethod
    def from_flat(cls, arch: NnArchitecture, flat) -> "NnParameters":
        flat = np.asarray(flat, dtype=float)
        sizes = arch.layer_sizes
        weights, thresholds, i = [], [], 0
        for a, b in zip(sizes[:-1], sizes[1:]):
            weights.append(flat[i:i + a * b].reshape(a, b))
            i += a * b
            thresholds.append(flat[i:i + b].copy())
            i += b
        if i != flat.size:
            raise ValueError(f"expected {i} parameters, got {flat.size}")
        return cls(weights, thresholds)

    def copy(self) -> "NnParameters":
        return NnParameters([w.copy() for w in self.weights], [t.copy() for t in self.thresholds])


@dataclass
class NnModel:
    arch: NnArchitecture
    params: NnParameters
    shift: np.ndarray = field(default_factory=lambda: np.zeros(5))
    scale: np.ndarray = field(default_factory=lambda: np.ones(5))
    loss_trace: list[float] = field(default_factory=list)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.shift) / self.scale

    def predict_proba(self, X) -> np.ndarray:
        return nn_forward(self.params, self.transform(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(np.atleast_2d(X)), axis=-1) + 1


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x)))


def init_parameters(arch: NnArchitecture, rng: np.random.Generator) -> NnParameters:
    sizes = arch.layer_sizes
    weights = [rng.uniform(-0.5, 0.5, (a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    thresholds = [rng.uniform(-0.5, 0.5, b) for b in sizes[1:]]
    return NnParameters(weights, thresholds)


def _activations(params: NnParameters, x) -> list[np.ndarray]:
    zs = [np.asarray(x, dtype=float)]
    for W, th in zip(params.weights, params.thresholds):
        zs.append(sigmoid(zs[-1] @ W - th))
    return zs


def nn_forward(params: NnParameters, x) -> np.ndarray:
    """Network outputs in (0, 1) for one input vector or a batch (rows)."""
    return _activations(params, x)[-1]


def nn_loss(params: NnParameters, x, target) -> float:
    out = nn_forward(params, x)
    return float(np.mean((out - target) ** 2))


def nn_gradients(params: NnParameters, x, target) -> NnParameters:
    """Exact gradient of the single-sample loss with respect to every parameter."""
    zs = _activations(params, x)
    out = zs[-1]
    K = out.shape[-1]
    # dE/d(pre-activation) at the output layer
    delta = (2.0 / K) * (out - target) * out * (1.0 - out)
    gw, gt = [], []
    for layer in range(len(params.weights) - 1, -1, -1):
        gw.append(np.outer(zs[layer], delta))
        gt.append(-delta)
        if layer:
            z = zs[layer]
            delta = (params.weights[layer] @ delta) * z * (1.0 - z)
    return NnParameters(gw[::-1], gt[::-1])


def one_hot(y, K: int) -> np.ndarray:
    y = np.asarray(y, dtype=int)
    return np.eye(K)[y - 1]


def nn_train(X, y, arch: NnArchitecture, seed=None) -> NnModel:
    """Train on features ``X`` (n x 5) with labels ``y`` in 1..K.

    Samples are visited one at a time in an order reshuffled every epoch.
    Training stops after ``arch.epochs`` epochs, or earlier once no parameter
    moved by more than ``arch.tol`` over a whole epoch.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    K = arch.output_size
    if X.ndim != 2 or X.shape[1] != arch.input_size or len(X) != len(y):
        raise TrainingError("feature matrix and labels do not match the architecture")
    missing = set(range(1, K + 1)) - set(y.tolist())
    if missing:
        raise TrainingError(f"classes {sorted(missing)} missing from training data")
    if np.any((y < 1) | (y > K)):
        raise TrainingError(f"labels must lie in 1..{K}")

    rng = np.random.default_rng(seed)
    model = NnModel(arch, init_parameters(arch, rng), np.zeros(arch.input_size), np.ones(arch.input_size))
    if arch.standardize:
        model.shift = X.mean(axis=0)
        sd = X.std(axis=0)
        model.scale = np.where(sd > 0, sd, 1.0)
    Xs = model.transform(X)
    G = one_hot(y, K)
    p = model.params
    eta = arch.learning_rate
    for _ in range(arch.epochs):
        before = p.flat()
        for i in rng.permutation(len(Xs)):
            grad = nn_gradients(p, Xs[i], G[i])
            for W, dW in zip(p.weights, grad.weights):
                W -= eta * dW
            for th, dth in zip(p.thresholds, grad.thresholds):
                th -= eta * dth
        model.loss_trace.append(float(np.mean((nn_forward(p, Xs) - G) ** 2)))
        if np.max(np.abs(p.flat() - before)) < arch.tol:
            break
    return model


def nn_classify(model_or_params, x) -> int:
    """Class in 1..K with the largest output; ties go to the smaller index."""
    if isinstance(model_or_params, NnModel):
        out = model_or_params.predict_proba(x)
    else:
        out = nn_forward(model_or_params, x)
    return int(np.argmax(out)) + 1


def save_model(model: NnModel, path: str | Path) -> None:
    a = model.arch
    doc = {
        "format": FORMAT_TAG,
        "architecture": {
            "input_size": a.input_size,
            "hidden_sizes": list(a.hidden_sizes),
            "output_size": a.output_size,
            "learning_rate": a.learning_rate,
            "epochs": a.epochs,
            "tol": a.tol,
            "standardize": a.standardize,
        },
        "shift": model.shift.tolist(),
        "scale": model.scale.tolist(),
        "parameters": model.params.flat().tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path: str | Path) -> NnModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    arch = NnArchitecture(**doc["architecture"])
    params = NnParameters.from_flat(arch, doc["parameters"])
    return NnModel(arch, params, np.asarray(doc["shift"]), np.asarray(doc["scale"]))
