"""Tracy-Widom (beta = 2) CDF/quantile from a knot table, and Wishart edge constants.

Between knots the CDF is linear in log-odds, which keeps it monotone and
exactly invertible. Outside the table the left tail is linear in ``log F``
and the right tail linear in ``log(1 - F)``, each extrapolated from the two
outermost knots. Both extensions are recorded in :attr:`Tw2Table.notes`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EPS = 1e-12

# (t, F2(t)) knots of the standard TW2 table.
DEFAULT_KNOTS: tuple[tuple[float, float], ...] = (
    (-3.70, 0.01),
    (-2.90, 0.1),
    (-1.80, 0.5),
    (-0.60, 0.9),
    (-0.23, 0.95),
    (0.49, 0.99),
    (1.32, 0.999),
    (2.06, 0.9999),
    (2.68, 0.99999),
)


def _logit(p):
    return np.log(p) - np.log1p(-p)


def _expit(x):
    return 1.0 / (1.0 + np.exp(-x))


class Tw2Table:
    """Monotone interpolated TW2 distribution built from ``(t, F2(t))`` knots."""

    notes = (
        "interior: linear in logit(F2); "
        "left tail: linear extrapolation of log F2; "
        "right tail: linear extrapolation of log(1 - F2); "
        f"CDF clamped to [{EPS:g}, 1 - {EPS:g}]"
    )

    def __init__(self, knots=DEFAULT_KNOTS):
        knots = np.asarray(knots, dtype=float)
        if knots.ndim != 2 or knots.shape[1] != 2 or len(knots) < 2:
            raise ValueError("knots must be an (n >= 2) x 2 table of (t, F2)")
        t, f = knots[:, 0], knots[:, 1]
        if np.any(np.diff(t) <= 0) or np.any(np.diff(f) <= 0):
            raise ValueError("knots must be strictly increasing in t and F2")
        if f[0] <= 0 or f[-1] >= 1:
            raise ValueError("F2 knot values must lie in (0, 1)")
        self.t = t
        self.f = f
        self._logit = _logit(f)
        # tail slopes (per unit t)
        self._left_slope = (math.log(f[1]) - math.log(f[0])) / (t[1] - t[0])
        self._right_slope = (math.log1p(-f[-1]) - math.log1p(-f[-2])) / (t[-1] - t[-2])

    @classmethod
    def from_file(cls, path: str | Path) -> "Tw2Table":
        """Load a two-column whitespace/comma separated text table (``t F2`` per row)."""
        rows = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"bad table row: {line!r}")
            rows.append((float(parts[0]), float(parts[1])))
        return cls(rows)

    def cdf(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.empty_like(t_arr)
        lo, hi = t_arr < self.t[0], t_arr > self.t[-1]
        mid = ~(lo | hi)
        out[mid] = _expit(np.interp(t_arr[mid], self.t, self._logit))
        out[lo] = np.exp(math.log(self.f[0]) + self._left_slope * (t_arr[lo] - self.t[0]))
        out[hi] = -np.expm1(math.log1p(-self.f[-1]) + self._right_slope * (t_arr[hi] - self.t[-1]))
        # knots are reproduced exactly, not through the logit round trip
        idx = np.searchsorted(self.t, t_arr)
        exact = (idx < len(self.t)) & (self.t[np.minimum(idx, len(self.t) - 1)] == t_arr)
        out[exact] = self.f[idx[exact]]
        out = np.clip(out, EPS, 1.0 - EPS)
        return float(out) if out.ndim == 0 else out

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any((p_arr <= 0) | (p_arr >= 1)):
            raise ValueError("quantile needs 0 < p < 1")
        out = np.empty_like(p_arr)
        lo, hi = p_arr < self.f[0], p_arr > self.f[-1]
        mid = ~(lo | hi)
        out[mid] = np.interp(_logit(p_arr[mid]), self._logit, self.t)
        out[lo] = self.t[0] + (np.log(p_arr[lo]) - math.log(self.f[0])) / self._left_slope
        out[hi] = self.t[-1] + (np.log1p(-p_arr[hi]) - math.log1p(-self.f[-1])) / self._right_slope
        idx = np.searchsorted(self.f, p_arr)
        exact = (idx < len(self.f)) & (self.f[np.minimum(idx, len(self.f) - 1)] == p_arr)
        out[exact] = self.t[idx[exact]]
        return float(out) if out.ndim == 0 else out


DEFAULT_TABLE = Tw2Table()


def tw2_cdf(t, table: Tw2Table = DEFAULT_TABLE):
    return table.cdf(t)


def tw2_quantile(p, table: Tw2Table = DEFAULT_TABLE):
    return table.quantile(p)


@dataclass(frozen=True)
class WishartParams:
    """Centering ``mu`` and scale ``nu`` of the largest eigenvalue of an M x M complex Wishart(N)."""

    mu: float
    nu: float


def wishart_params(M: int, N: int) -> WishartParams:
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    sm, sn = math.sqrt(M), math.sqrt(N)
    mu = (sm + sn) ** 2
    nu = math.sqrt(mu) * (1.0 / sm + 1.0 / sn) ** (1.0 / 3.0)
    return WishartParams(mu, nu)
