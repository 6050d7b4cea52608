"""ULA baseband snapshot synthesis under H0 (noise only) and H1 (K emitters + noise)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import gram, hermitian_eigenvalues

MIN_ANGLE_GAP_DEG = 0.5
NOISE_VARIANCE = 1.0


@dataclass(frozen=True)
class ArrayConfig:
    M: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.M < 2:
            raise ValueError(f"array needs at least 2 elements, got M={self.M}")
        if not self.spacing_over_wavelength > 0:
            raise ValueError("element spacing must be positive")


@dataclass(frozen=True)
class Scenario:
    """One observation: ``K`` equal-power emitters (``K = 0`` is H0), ``N`` snapshots."""

    K: int
    angles: tuple[float, ...]
    snr_db: float
    N: int
    seed: int | np.random.SeedSequence | None = None

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if self.K < 0:
            raise ValueError("K must be >= 0")
        if len(self.angles) != self.K:
            raise ValueError(f"expected {self.K} angles, got {len(self.angles)}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        for a in self.angles:
            if not -90.0 < a < 90.0:
                raise ValueError(f"angle {a} outside (-90, 90) degrees")
        s = sorted(self.angles)
        if any(b - a < MIN_ANGLE_GAP_DEG for a, b in zip(s, s[1:])):
            raise ValueError(f"angles must be at least {MIN_ANGLE_GAP_DEG} deg apart")

    @property
    def signal_power(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


@dataclass
class Snapshot:
    Y: np.ndarray
    truth: int
    signal_rho: np.ndarray = field(default_factory=lambda: np.zeros(0))


def array_manifold(theta_deg, cfg: ArrayConfig) -> np.ndarray:
    """Steering vector ``exp(-j 2 pi m (d/lambda) sin(theta))``, m = 0..M-1.

    Accepts a scalar angle (returns shape (M,)) or an array of angles
    (returns shape (..., M, n_angles)).
    """
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(np.abs(theta) >= 90.0):
        raise ValueError("angles must lie in (-90, 90) degrees")
    m = np.arange(cfg.M)
    phase = -2j * np.pi * cfg.spacing_over_wavelength * np.sin(np.deg2rad(theta))
    if theta.ndim == 0:
        return np.exp(phase * m)
    return np.exp(m[:, None] * phase[..., None, :])


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with E|x|^2 = variance."""
    shape = tuple(np.atleast_1d(shape))
    z = rng.standard_normal(shape[:-1] + (2 * shape[-1],)).view(np.complex128)
    return z * np.sqrt(variance / 2.0)


def synthesize(scenario: Scenario, cfg: ArrayConfig) -> Snapshot:
    """Draw ``Y = A S + V`` (or ``Y = V`` when K = 0) for one scenario."""
    rng = np.random.default_rng(scenario.seed)
    V = complex_gaussian(rng, (cfg.M, scenario.N), NOISE_VARIANCE)
    if scenario.K == 0:
        return Snapshot(Y=V, truth=0, signal_rho=np.zeros(0))
    power = scenario.signal_power
    A = array_manifold(np.asarray(scenario.angles), cfg)
    S = complex_gaussian(rng, (scenario.K, scenario.N), power)
    return Snapshot(Y=A @ S + V, truth=scenario.K, signal_rho=signal_eigenvalues(A, power))


def signal_eigenvalues(A: np.ndarray, power: float) -> np.ndarray:
    """Descending eigenvalues of ``A diag(power) A^H`` (length M, K nonzero at most).

    The nonzero part equals the spectrum of the K x K matrix ``power * A^H A``,
    which is cheaper and exactly Hermitian.
    """
    M, K = A.shape
    small = hermitian_eigenvalues(power * (A.conj().T @ A), check=False)
    rho = np.zeros(M)
    rho[:K] = small
    return rho


def sample_covariance(y) -> np.ndarray:
    """``(1/N) Y Y^H``."""
    y = np.asarray(y)
    return gram(y) / y.shape[-1]


def draw_angles(
    rng: np.random.Generator,
    K: int,
    low: float = -60.0,
    high: float = 60.0,
    min_sep: float = 2.0,
    max_tries: int = 1000,
) -> tuple[float, ...]:
    """Uniform angles in (low, high) with pairwise separation >= ``min_sep`` degrees."""
    if K == 0:
        return ()
    if (K - 1) * min_sep >= high - low:
        raise ValueError("cannot place that many angles with the requested separation")
    for _ in range(max_tries):
        a = np.sort(rng.uniform(low, high, K))
        if K == 1 or np.min(np.diff(a)) >= min_sep:
            return tuple(float(x) for x in a)
    raise RuntimeError("angle rejection sampling did not converge")


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial.

    The stream depends only on ``(seed, *key)``, so any partition of trials
    across workers or chunks reproduces the same numbers.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def draw_spectra(
    M: int,
    N: int,
    K: int,
    snr_db: float,
    seed: int,
    trials: range | int,
    stream: int | tuple[int, ...] = 0,
    spacing_over_wavelength: float = 0.5,
    chunk: int = 256,
) -> np.ndarray:
    """Sample-covariance spectra for a block of independent trials.

    Trial ``t`` uses the substream ``(seed, *stream, t)`` and draws fresh angles,
    so results are identical whether trials are computed in one call or split
    across several. Returns shape ``(len(trials), M)``, each row descending.
    """
    if isinstance(trials, int):
        trials = range(trials)
    key = (stream,) if isinstance(stream, int) else tuple(stream)
    cfg = ArrayConfig(M, spacing_over_wavelength)
    power = 10.0 ** (snr_db / 10.0)
    out = np.empty((len(trials), M))
    for start in range(0, len(trials), chunk):
        block = trials[start:start + chunk]
        Y = np.empty((len(block), M, N), dtype=np.complex128)
        for i, t in enumerate(block):
            rng = trial_rng(seed, *key, t)
            Y[i] = complex_gaussian(rng, (M, N), NOISE_VARIANCE)
            if K:
                A = array_manifold(np.asarray(draw_angles(rng, K)), cfg)
                Y[i] += A @ complex_gaussian(rng, (K, N), power)
        out[start:start + len(block)] = hermitian_eigenvalues(sample_covariance(Y), check=False)
    return out
