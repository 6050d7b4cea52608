"""Gaussian Bayes classifier: class priors plus one multivariate normal per class."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import hermitian_eigenvalues, log_det_from_spectrum

FORMAT_TAG = "uavcount-nbc/1"
RIDGE = 1e-6


class NbcTrainingError(ValueError):
    pass


@dataclass
class NbcModel:
    classes: np.ndarray        # labels, ascending
    priors: np.ndarray
    means: np.ndarray          # (K, d)
    covariances: np.ndarray    # (K, d, d)
    diagonal: bool = False

    def __post_init__(self):
        self._prepare()

    def _prepare(self):
        d = self.means.shape[1]
        self._inv = np.empty_like(self.covariances)
        self._log_det = np.empty(len(self.classes))
        for k, cov in enumerate(self.covariances):
            self._log_det[k] = log_det_from_spectrum(hermitian_eigenvalues(cov))
            self._inv[k] = np.linalg.inv(cov)
        self._const = -0.5 * d * math.log(2.0 * math.pi)

    def log_joint(self, X) -> np.ndarray:
        """``ln P(c_k) + ln N(x; mu_k, Sigma_k)`` for every row of X and class k."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        diff = X[:, None, :] - self.means[None, :, :]
        maha = np.einsum("nki,kij,nkj->nk", diff, self._inv, diff)
        return np.log(self.priors) + self._const - 0.5 * self._log_det - 0.5 * maha

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.log_joint(X), axis=1)]


def nbc_train(X, y, diagonal: bool = False) -> NbcModel:
    """Empirical priors, class means and class covariances (divisor n_k) plus a small ridge.

    ``diagonal=True`` keeps only per-feature variances (independent features).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = np.unique(y)
    d = X.shape[1]
    priors, means, covs = [], [], []
    for c in classes:
        Xc = X[y == c]
        if len(Xc) < 2:
            raise NbcTrainingError(f"class {c} has fewer than 2 samples")
        mu = Xc.mean(axis=0)
        cov = (Xc - mu).T @ (Xc - mu) / len(Xc)
        if diagonal:
            cov = np.diag(np.diag(cov))
        r = RIDGE * np.trace(cov) / d
        if r <= 0:
            # all samples identical: fall back to an absolute ridge
            r = RIDGE
        priors.append(len(Xc) / len(X))
        means.append(mu)
        covs.append(cov + r * np.eye(d))
    return NbcModel(classes, np.array(priors), np.array(means), np.array(covs), diagonal)


def nbc_classify(model: NbcModel, x) -> int:
    """Maximum log-posterior class; ties go to the smaller label."""
    return int(model.predict(np.atleast_2d(x))[0])


def save_model(model: NbcModel, path: str | Path) -> None:
    doc = {
        "format": FORMAT_TAG,
        "diagonal": model.diagonal,
        "classes": model.classes.tolist(),
        "priors": model.priors.tolist(),
        "means": model.means.tolist(),
        "covariances": model.covariances.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path: str | Path) -> NbcModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    return NbcModel(
        np.asarray(doc["classes"]),
        np.asarray(doc["priors"], dtype=float),
        np.asarray(doc["means"], dtype=float),
        np.asarray(doc["covariances"], dtype=float),
        bool(doc["diagonal"]),
    )
