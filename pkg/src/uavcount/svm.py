"""Soft-margin kernel SVM solved in the dual by SMO, combined one-vs-one for K classes."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_TAG = "uavcount-svm/1"
TAU = 1e-12


class SvmTrainingError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """SMO hit its iteration cap; ``best`` holds the model at the last iterate."""

    def __init__(self, message: str, best: "SvmModel"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    rbf_gamma: float | None = None  # None: 1 / (n_features * variance of training inputs)

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.rbf_gamma is not None and not self.rbf_gamma > 0:
            raise ValueError("rbf_gamma must be > 0")

    def matrix(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.kind == "linear":
            return A @ B.T
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.exp(-self.rbf_gamma * np.maximum(sq, 0.0))


@dataclass
class SvmModel:
    support_vectors: np.ndarray     # in standardized coordinates
    dual_coef: np.ndarray           # alpha_i * g_i for each support vector
    bias: float
    kernel: KernelSpec
    C: float
    shift: np.ndarray
    scale: np.ndarray
    # full training-time state, kept for diagnostics (not serialized)
    alpha: np.ndarray | None = None
    labels: np.ndarray | None = None
    train_inputs: np.ndarray | None = None
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0

    def decision(self, X) -> np.ndarray:
        Z = (np.atleast_2d(np.asarray(X, dtype=float)) - self.shift) / self.scale
        if len(self.dual_coef) == 0:
            return np.full(len(Z), self.bias)
        return self.kernel.matrix(Z, self.support_vectors) @ self.dual_coef + self.bias


def svm_decision(model: SvmModel, x) -> float | np.ndarray:
    """``sum_i alpha_i g_i k(x_i, x) + b``; scalar for one input, array for a batch."""
    x = np.asarray(x, dtype=float)
    out = model.decision(x)
    return float(out[0]) if x.ndim == 1 else out


def dual_objective(alpha, g, K) -> float:
    v = alpha * g
    return float(alpha.sum() - 0.5 * v @ K @ v)


def svm_train_binary(
    X,
    g,
    C: float = 1.0,
    kernel: KernelSpec = KernelSpec(),
    tol: float = 1e-3,
    max_passes: int = 10_000,
    standardize: bool = True,
    record_objective: bool = False,
) -> SvmModel:
    """Train on inputs ``X`` with labels ``g`` in {-1, +1}.

    Each iteration picks the maximal-violating pair and solves the two-variable
    subproblem in closed form; iteration stops when the pair's violation is
    within ``tol``. The iteration cap is ``max_passes * n``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    g = np.asarray(g, dtype=float)
    if len(X) != len(g):
        raise SvmTrainingError("inputs and labels differ in length")
    if not set(np.unique(g)) <= {-1.0, 1.0}:
        raise SvmTrainingError("labels must be -1 or +1")
    if not (np.any(g > 0) and np.any(g < 0)):
        raise SvmTrainingError("both labels must be present")
    if not C > 0:
        raise SvmTrainingError("C must be > 0")

    if standardize:
        shift = X.mean(axis=0)
        sd = X.std(axis=0)
        scale = np.where(sd > 0, sd, 1.0)
    else:
        shift, scale = np.zeros(X.shape[1]), np.ones(X.shape[1])
    Z = (X - shift) / scale
    if kernel.kind == "rbf" and kernel.rbf_gamma is None:
        var = Z.var()
        kernel = KernelSpec("rbf", 1.0 / (Z.shape[1] * var) if var > 0 else 1.0)

    n = len(g)
    Kmat = kernel.matrix(Z, Z)
    Q = np.outer(g, g) * Kmat
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - sum(a)
    trace = [0.0] if record_objective else []
    cap = max_passes * n
    it = 0
    converged = False
    while it < cap:
        viol = -g * grad
        up = ((g > 0) & (alpha < C)) | ((g < 0) & (alpha > 0))
        low = ((g < 0) & (alpha < C)) | ((g > 0) & (alpha > 0))
        i = int(np.argmax(np.where(up, viol, -np.inf)))
        j = int(np.argmin(np.where(low, viol, np.inf)))
        if not up[i] or not low[j] or viol[i] - viol[j] <= tol:
            converged = True
            break
        it += 1
        ai, aj = alpha[i], alpha[j]
        if g[i] != g[j]:
            quad = max(Q[i, i] + Q[j, j] + 2.0 * Q[i, j], TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = ai - aj
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            quad = max(Q[i, i] + Q[j, j] - 2.0 * Q[i, j], TAU)
            delta = (grad[i] - grad[j]) / quad
            total = ai + aj
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            else:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, total
                if alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, total
        grad += Q[:, i] * (alpha[i] - ai) + Q[:, j] * (alpha[j] - aj)
        if record_objective:
            trace.append(_objective_from_grad(alpha, grad))

    model = _finish(Z, g, alpha, grad, C, kernel, shift, scale, Kmat)
    model.objective_trace = trace
    model.iterations = it
    if not converged:
        raise ConvergenceError(f"SMO did not converge within {cap} iterations", model)
    return model


def _objective_from_grad(alpha, grad) -> float:
    # grad = Q a - 1  =>  sum(a) - 0.5 a'Qa = -0.5 a'(grad - 1)
    return float(-0.5 * alpha @ (grad - 1.0))


def _finish(Z, g, alpha, grad, C, kernel, shift, scale, Kmat) -> SvmModel:
    yg = g * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = float(np.mean(yg[free]))
    else:
        # no free vector: midpoint of the feasible bias interval
        ub, lb = np.inf, -np.inf
        for t in range(len(g)):
            at_upper, at_lower = alpha[t] >= C, alpha[t] <= 0
            if (at_upper and g[t] < 0) or (at_lower and g[t] > 0):
                ub = min(ub, yg[t])
            elif (at_upper and g[t] > 0) or (at_lower and g[t] < 0):
                lb = max(lb, yg[t])
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else float(np.mean(yg))
    sv = alpha > 0
    return SvmModel(
        support_vectors=Z[sv],
        dual_coef=(alpha * g)[sv],
        bias=-rho,
        kernel=kernel,
        C=C,
        shift=shift,
        scale=scale,
        alpha=alpha.copy(),
        labels=g.copy(),
        train_inputs=Z,
    )


def kkt_violation(model: SvmModel) -> float:
    """Largest violation of the soft-margin KKT conditions on the training set."""
    a, g, C = model.alpha, model.labels, model.C
    f = model.kernel.matrix(model.train_inputs, model.support_vectors) @ model.dual_coef + model.bias
    m = g * f
    eps = 1e-12 * C
    worst = 0.0
    for ai, mi in zip(a, m):
        if ai <= eps:
            worst = max(worst, 1.0 - mi)
        elif ai >= C - eps:
            worst = max(worst, mi - 1.0)
        else:
            worst = max(worst, abs(mi - 1.0))
    return worst


@dataclass
class MultiClassSvm:
    K: int
    models: dict[tuple[int, int], SvmModel]

    def votes(self, x) -> tuple[np.ndarray, np.ndarray]:
        votes = np.zeros(self.K + 1, dtype=int)
        margin = np.zeros(self.K + 1)
        for (a, b), m in self.models.items():
            f = svm_decision(m, x)
            winner = a if f >= 0 else b
            votes[winner] += 1
            margin[winner] += abs(f)
        return votes[1:], margin[1:]

    def predict(self, X) -> np.ndarray:
        return np.array([svm_classify_multiclass(self, x) for x in np.atleast_2d(X)])


def svm_classify_multiclass(mc: MultiClassSvm, x) -> int:
    """Majority vote; ties go to the largest summed |decision|, then the smaller class."""
    votes, margin = mc.votes(np.asarray(x, dtype=float))
    best = np.flatnonzero(votes == votes.max())
    if len(best) > 1:
        m = margin[best]
        best = best[m == m.max()]
    return int(best[0]) + 1


def svm_train_multiclass(X, y, K: int | None = None, **kwargs) -> MultiClassSvm:
    """One binary model per class pair ``(a, b)``, ``a < b``; class ``a`` is the +1 side."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    K = int(y.max()) if K is None else K
    models = {}
    for a, b in itertools.combinations(range(1, K + 1), 2):
        mask = (y == a) | (y == b)
        if not (np.any(y == a) and np.any(y == b)):
            raise SvmTrainingError(f"class pair ({a}, {b}) lacks data")
        models[(a, b)] = svm_train_binary(X[mask], np.where(y[mask] == a, 1.0, -1.0), **kwargs)
    return MultiClassSvm(K, models)


def _model_doc(m: SvmModel) -> dict:
    return {
        "kernel": {"kind": m.kernel.kind, "rbf_gamma": m.kernel.rbf_gamma},
        "C": m.C,
        "shift": m.shift.tolist(),
        "scale": m.scale.tolist(),
        "support_vectors": m.support_vectors.tolist(),
        "dual_coef": m.dual_coef.tolist(),
        "bias": m.bias,
    }


def _model_from_doc(d: dict) -> SvmModel:
    n_feat = len(d["shift"])
    return SvmModel(
        support_vectors=np.asarray(d["support_vectors"], dtype=float).reshape(-1, n_feat),
        dual_coef=np.asarray(d["dual_coef"], dtype=float),
        bias=float(d["bias"]),
        kernel=KernelSpec(**d["kernel"]),
        C=float(d["C"]),
        shift=np.asarray(d["shift"], dtype=float),
        scale=np.asarray(d["scale"], dtype=float),
    )


def save_model(mc: MultiClassSvm, path: str | Path) -> None:
    doc = {
        "format": FORMAT_TAG,
        "K": mc.K,
        "pairs": [{"classes": list(k), **_model_doc(m)} for k, m in mc.models.items()],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path: str | Path) -> MultiClassSvm:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    models = {tuple(p["classes"]): _model_from_doc(p) for p in doc["pairs"]}
    return MultiClassSvm(int(doc["K"]), models)
