"""Monte Carlo experiments: detection sweeps, ROC, classifier and criterion accuracy.

All randomness flows from ``spec.seed`` through per-trial substreams keyed by
(stream id, grid index, ..., trial index), so results do not depend on how
trials are chunked or distributed across workers.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .. import __version__
from ..criteria import estimate_counts
from ..detectors import (
    DetectorId,
    STATISTICS,
    analytic_decisions,
    empirical_threshold,
)
from ..features import LOG_BASE, extract_features
from ..nbc import nbc_train
from ..nn import NnArchitecture, nn_train
from ..signal_model import draw_spectra
from ..svm import svm_train_multiclass
from ..tracy_widom import DEFAULT_TABLE
from .results import ResultTable, wilson_halfwidth

log = logging.getLogger(__name__)

KINDS = (
    "pd_vs_snr", "pd_vs_N", "roc", "acc_vs_snr", "acc_vs_M",
    "criteria_vs_M", "criteria_vs_snr", "pipeline",
)
GRID_FIELD = {
    "pd_vs_snr": "snr_db", "pd_vs_N": "N", "roc": "p_fa", "acc_vs_snr": "snr_db",
    "acc_vs_M": "M", "criteria_vs_M": "M", "criteria_vs_snr": "snr_db", "pipeline": "snr_db",
}
ALL_DETECTORS = tuple(d.value for d in DetectorId)
ALL_CLASSIFIERS = ("nn3", "nn4", "svm", "nbc")

# substream ids
S_CAL, S_H1, S_H0, S_TRAIN, S_TEST, S_MODEL = 1, 2, 3, 4, 5, 6


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    kind: str
    grid: tuple = ()
    M: int = 64
    N: int = 200
    K: int = 3
    snr_db: float = -20.0
    p_fa: float = 1e-4
    K_max: int = 3
    train_samples_per_class: int = 10
    test_samples_per_class: int = 200
    trials: int = 2000
    calibration_trials: int = 100_000
    repetitions: int = 1
    detectors: tuple = ALL_DETECTORS
    classifiers: tuple = ALL_CLASSIFIERS
    gm_mode: str = "self"
    gm_calibration_trials: int = 2000
    criteria_evaluation: str = "log"
    pipeline_detector: str = "SR_MME"
    pipeline_classifier: str = "nn4"
    nn_learning_rate: float = 0.01
    nn_epochs: int = 400
    svm_C: float = 1.0
    seed: int = 0
    workers: int = 1
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        self.grid = tuple(self.grid)
        if not self.grid:
            raise ConfigError("grid must be non-empty")
        if self.trials < 1 or self.repetitions < 1:
            raise ConfigError("trials and repetitions must be >= 1")
        self.detectors = tuple(DetectorId(d).value for d in self.detectors)
        bad = set(self.classifiers) - set(ALL_CLASSIFIERS)
        if bad:
            raise ConfigError(f"unknown classifiers {sorted(bad)}")
        self.classifiers = tuple(self.classifiers)
        if self.gm_mode not in ("self", "fixed"):
            raise ConfigError("gm_mode must be 'self' or 'fixed'")
        if self.criteria_evaluation not in ("log", "direct"):
            raise ConfigError("criteria_evaluation must be 'log' or 'direct'")
        if self.kind == "roc" and not all(0 < p < 1 for p in self.grid):
            raise ConfigError("roc grid values are false-alarm targets in (0, 1)")
        if GRID_FIELD[self.kind] in ("M", "N") and not all(float(v).is_integer() and v >= 2 for v in self.grid):
            raise ConfigError(f"{GRID_FIELD[self.kind]} grid values must be integers >= 2")
        if self.K_max < 2 and self.kind in ("acc_vs_snr", "acc_vs_M", "criteria_vs_snr", "pipeline"):
            raise ConfigError("K_max must be >= 2")
        if self.name is None:
            self.name = self.kind

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["grid"] = list(self.grid)
        d["detectors"] = list(self.detectors)
        d["classifiers"] = list(self.classifiers)
        return d

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("workers")  # does not affect results
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _metadata(spec: ExperimentSpec, **extra) -> dict:
    return {
        "experiment": spec.kind,
        "seed": spec.seed,
        "spec": spec.to_dict(),
        "spec_hash": spec.hash(),
        "versions": {"uavcount": __version__, "numpy": np.__version__},
        "notes": {
            "log_base": LOG_BASE,
            "tw2_interpolation": DEFAULT_TABLE.notes,
            "noise_variance": 1.0,
            "snr": "per-emitter signal power over unit noise power",
        },
        **extra,
    }


# -- sampling -----------------------------------------------------------------

def _chunked_spectra(args):
    M, N, K, snr, seed, trials, stream = args
    return draw_spectra(M, N, K, snr, seed, trials, stream=stream)


def spectra(M, N, K, snr_db, seed, n_trials, stream, workers: int = 1) -> np.ndarray:
    """Spectra for trials ``0..n_trials-1`` of one substream, optionally multi-process."""
    if workers <= 1 or n_trials < 512:
        return draw_spectra(M, N, K, snr_db, seed, n_trials, stream=stream)
    bounds = np.linspace(0, n_trials, workers * 4 + 1).astype(int)
    jobs = [(M, N, K, snr_db, seed, range(a, b), stream) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(workers) as pool:
        return np.concatenate(list(pool.map(_chunked_spectra, jobs)))


@lru_cache(maxsize=8)
def noise_bank(M: int, N: int, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """Cached pure-noise calibration spectra (read-only)."""
    bank = spectra(M, N, 0, 0.0, seed, trials, (S_CAL, M, N), workers)
    bank.setflags(write=False)
    return bank


# -- detection ----------------------------------------------------------------

def _needs_calibration(det: str) -> bool:
    return DetectorId(det) in (DetectorId.MME, DetectorId.M_MME)


def detector_decisions(spec: ExperimentSpec, det: str, spec_M: int, spec_N: int, p_fa: float,
                       pool: np.ndarray) -> np.ndarray:
    """H1 decisions for a pool of spectra: analytic thresholds for SR-MME/GM, calibrated otherwise."""
    det_id = DetectorId(det)
    if _needs_calibration(det):
        bank = noise_bank(spec_M, spec_N, spec.calibration_trials, spec.seed, spec.workers)
        thr = empirical_threshold(STATISTICS[det_id](bank), p_fa)
        return STATISTICS[det_id](pool) > thr
    log_det_h0 = None
    if det_id is DetectorId.GM and spec.gm_mode == "fixed":
        bank = noise_bank(spec_M, spec_N, spec.gm_calibration_trials, spec.seed, spec.workers)
        log_det_h0 = float(np.mean(np.sum(np.log(bank), axis=-1)))
    return analytic_decisions(det_id, pool, spec_N, p_fa, log_det_h0)


def run_detection_sweep(spec: ExperimentSpec) -> ResultTable:
    if spec.kind not in ("pd_vs_snr", "pd_vs_N"):
        raise ConfigError(f"detection sweep cannot run kind {spec.kind!r}")
    gcol = GRID_FIELD[spec.kind]
    cols = [gcol, "trials"]
    for d in spec.detectors:
        cols += [d, f"{d}_ci95", f"{d}_detections", f"{d}_misses"]
    table = ResultTable(spec.name, cols, metadata=_metadata(
        spec, thresholds={"SR_MME": "analytic", "GM": f"analytic ({spec.gm_mode}-calibrated determinant)",
                          "MME": "empirical", "M_MME": "empirical"}))
    for gi, g in sorted(enumerate(spec.grid), key=lambda t: t[1]):
        snr = g if gcol == "snr_db" else spec.snr_db
        N = int(g) if gcol == "N" else spec.N
        pool = spectra(spec.M, N, spec.K, snr, spec.seed, spec.trials, (S_H1, gi), spec.workers)
        row = {gcol: g, "trials": spec.trials}
        for d in spec.detectors:
            hits = int(np.count_nonzero(detector_decisions(spec, d, spec.M, N, spec.p_fa, pool)))
            row.update({d: hits / spec.trials, f"{d}_ci95": wilson_halfwidth(hits, spec.trials),
                        f"{d}_detections": hits, f"{d}_misses": spec.trials - hits})
        table.add(row)
        log.info("%s=%s %s", gcol, g, {d: row[d] for d in spec.detectors})
    return table


def run_roc(spec: ExperimentSpec) -> ResultTable:
    if spec.kind != "roc":
        raise ConfigError(f"ROC cannot run kind {spec.kind!r}")
    cols = ["p_fa", "trials"]
    for d in spec.detectors:
        cols += [f"{d}_pfa", f"{d}_pfa_ci95", f"{d}_pd", f"{d}_pd_ci95",
                 f"{d}_false_alarms", f"{d}_correct_rejections", f"{d}_detections", f"{d}_misses"]
    table = ResultTable(spec.name, cols, metadata=_metadata(spec, snr_db=spec.snr_db))
    h1 = spectra(spec.M, spec.N, spec.K, spec.snr_db, spec.seed, spec.trials, (S_H1, 0), spec.workers)
    h0 = spectra(spec.M, spec.N, 0, 0.0, spec.seed, spec.trials, (S_H0, 0), spec.workers)
    n = spec.trials
    for p in sorted(spec.grid):
        row = {"p_fa": p, "trials": n}
        for d in spec.detectors:
            fa = int(np.count_nonzero(detector_decisions(spec, d, spec.M, spec.N, p, h0)))
            hit = int(np.count_nonzero(detector_decisions(spec, d, spec.M, spec.N, p, h1)))
            row.update({
                f"{d}_pfa": fa / n, f"{d}_pfa_ci95": wilson_halfwidth(fa, n),
                f"{d}_pd": hit / n, f"{d}_pd_ci95": wilson_halfwidth(hit, n),
                f"{d}_false_alarms": fa, f"{d}_correct_rejections": n - fa,
                f"{d}_detections": hit, f"{d}_misses": n - hit,
            })
        table.add(row)
    return table


# -- datasets and classifiers -------------------------------------------------

def build_dataset(K_max: int, per_class: int, snr_db: float, M: int, N: int, seed: int,
                  stream: tuple = (S_TRAIN,), workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Balanced feature dataset: ``per_class`` independent snapshots for each k in 1..K_max."""
    if per_class < 1 or K_max < 2:
        raise ConfigError("need per_class >= 1 and K_max >= 2")
    X, y = [], []
    for k in range(1, K_max + 1):
        s = spectra(M, N, k, snr_db, seed, per_class, (*stream, k), workers)
        X.append(extract_features(s))
        y.append(np.full(per_class, k))
    return np.concatenate(X), np.concatenate(y)


def _model_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(S_MODEL, *key)).generate_state(1)[0])


def train_classifier(name: str, X, y, K: int, spec: ExperimentSpec, seed: int):
    """Fit one named classifier; returns a ``predict(X) -> labels`` callable."""
    if name in ("nn3", "nn4"):
        hidden = (10,) if name == "nn3" else (7, 5)
        arch = NnArchitecture(hidden, K, learning_rate=spec.nn_learning_rate, epochs=spec.nn_epochs)
        return nn_train(X, y, arch, seed).predict
    if name == "svm":
        return svm_train_multiclass(X, y, K, C=spec.svm_C).predict
    if name == "nbc":
        return nbc_train(X, y).predict
    raise ConfigError(f"unknown classifier {name!r}")


def _accuracy_rows(spec, gi, M, snr, extra_eval=None):
    """Train every classifier ``repetitions`` times at one grid point; pooled accuracy."""
    correct = {c: 0 for c in spec.classifiers}
    seconds = {c: 0.0 for c in spec.classifiers}
    failed = {c: False for c in spec.classifiers}
    total = 0
    extra_correct: dict[str, int] = {}
    for rep in range(spec.repetitions):
        X, y = build_dataset(spec.K_max, spec.train_samples_per_class, snr, M, spec.N, spec.seed,
                             (S_TRAIN, gi, rep), spec.workers)
        test_spectra, yt = [], []
        for k in range(1, spec.K_max + 1):
            test_spectra.append(spectra(M, spec.N, k, snr, spec.seed, spec.test_samples_per_class,
                                        (S_TEST, gi, rep, k), spec.workers))
            yt.append(np.full(spec.test_samples_per_class, k))
        test_spectra, yt = np.concatenate(test_spectra), np.concatenate(yt)
        Xt = extract_features(test_spectra)
        total += len(yt)
        for ci, c in enumerate(spec.classifiers):
            if failed[c]:
                continue
            t0 = time.perf_counter()
            try:
                predict = train_classifier(c, X, y, spec.K_max, spec, _model_seed(spec.seed, gi, rep, ci))
            except Exception as exc:  # recorded as a failed cell; the sweep continues
                log.warning("%s failed at grid index %d rep %d: %s", c, gi, rep, exc)
                failed[c] = True
                continue
            seconds[c] += time.perf_counter() - t0
            correct[c] += int(np.count_nonzero(predict(Xt) == yt))
        if extra_eval is not None:
            for k, v in extra_eval(test_spectra, yt).items():
                extra_correct[k] = extra_correct.get(k, 0) + v
    return correct, seconds, failed, total, extra_correct


def run_classification_sweep(spec: ExperimentSpec) -> ResultTable:
    if spec.kind not in ("acc_vs_snr", "acc_vs_M"):
        raise ConfigError(f"classification sweep cannot run kind {spec.kind!r}")
    gcol = GRID_FIELD[spec.kind]
    cols = [gcol, "trials"]
    for c in spec.classifiers:
        cols += [c, f"{c}_ci95", f"{c}_train_s"]
    table = ResultTable(spec.name, cols, metadata=_metadata(spec, failures=[]))
    for gi, g in sorted(enumerate(spec.grid), key=lambda t: t[1]):
        M = int(g) if gcol == "M" else spec.M
        snr = g if gcol == "snr_db" else spec.snr_db
        correct, seconds, failed, total, _ = _accuracy_rows(spec, gi, M, snr)
        row = {gcol: g, "trials": total}
        for c in spec.classifiers:
            if failed[c]:
                table.metadata["failures"].append({gcol: g, "classifier": c})
                row.update({c: math.nan, f"{c}_ci95": math.nan, f"{c}_train_s": math.nan})
            else:
                row.update({c: correct[c] / total, f"{c}_ci95": wilson_halfwidth(correct[c], total),
                            f"{c}_train_s": seconds[c] / spec.repetitions})
        table.add(row)
        log.info("%s=%s %s", gcol, g, {c: row[c] for c in spec.classifiers})
    return table


# -- information criteria -----------------------------------------------------

def run_criteria_sweep(spec: ExperimentSpec) -> ResultTable:
    if spec.kind not in ("criteria_vs_M", "criteria_vs_snr"):
        raise ConfigError(f"criteria sweep cannot run kind {spec.kind!r}")
    direct = spec.criteria_evaluation == "direct"
    gcol = GRID_FIELD[spec.kind]
    methods = ["AIC", "MDL"] + (list(spec.classifiers) if spec.kind == "criteria_vs_snr" else [])
    cols = [gcol, "trials"]
    for m in methods:
        cols += [m, f"{m}_ci95"]
        if m not in ("AIC", "MDL"):
            cols.append(f"{m}_train_s")
    table = ResultTable(spec.name, cols, metadata=_metadata(
        spec, criteria_evaluation=spec.criteria_evaluation, failures=[]))
    for gi, g in sorted(enumerate(spec.grid), key=lambda t: t[1]):
        row = {gcol: g}
        if spec.kind == "criteria_vs_M":
            M = int(g)
            s = spectra(M, spec.N, spec.K, spec.snr_db, spec.seed, spec.trials, (S_H1, gi), spec.workers)
            a, d = estimate_counts(s, spec.N, direct)
            n = spec.trials
            hits = {"AIC": int(np.count_nonzero(a == spec.K)), "MDL": int(np.count_nonzero(d == spec.K))}
        else:
            def crit_eval(test_spectra, yt):
                a, d = estimate_counts(test_spectra, spec.N, direct)
                return {"AIC": int(np.count_nonzero(a == yt)), "MDL": int(np.count_nonzero(d == yt))}

            correct, seconds, failed, n, hits = _accuracy_rows(spec, gi, spec.M, g, crit_eval)
            for c in spec.classifiers:
                if failed[c]:
                    table.metadata["failures"].append({gcol: g, "classifier": c})
                    row.update({c: math.nan, f"{c}_ci95": math.nan, f"{c}_train_s": math.nan})
                else:
                    row.update({c: correct[c] / n, f"{c}_ci95": wilson_halfwidth(correct[c], n),
                                f"{c}_train_s": seconds[c] / spec.repetitions})
        row["trials"] = n
        for m in ("AIC", "MDL"):
            row.update({m: hits[m] / n, f"{m}_ci95": wilson_halfwidth(hits[m], n)})
        table.add(row)
        log.info("%s=%s AIC=%.3f MDL=%.3f", gcol, g, row["AIC"], row["MDL"])
    return table


# -- detector gate followed by classifier -------------------------------------

def run_pipeline(spec: ExperimentSpec) -> ResultTable:
    """End-to-end count accuracy on noise-only and 1..K_max emitter inputs.

    ``pipeline`` gates every input with the detector (H0 -> count 0) before
    classifying; ``classifier_only`` feeds everything to the classifier, which
    can never answer 0.
    """
    if spec.kind != "pipeline":
        raise ConfigError(f"pipeline cannot run kind {spec.kind!r}")
    cols = ["snr_db", "trials", "pipeline", "pipeline_ci95", "classifier_only", "classifier_only_ci95",
            "false_alarms", "correct_rejections", "noise_trials"]
    table = ResultTable(spec.name, cols, metadata=_metadata(
        spec, detector=spec.pipeline_detector, classifier=spec.pipeline_classifier))
    n_per = spec.test_samples_per_class
    for gi, snr in sorted(enumerate(spec.grid), key=lambda t: t[1]):
        X, y = build_dataset(spec.K_max, spec.train_samples_per_class, snr, spec.M, spec.N, spec.seed,
                             (S_TRAIN, gi), spec.workers)
        predict = train_classifier(spec.pipeline_classifier, X, y, spec.K_max, spec, _model_seed(spec.seed, gi))
        test, truth = [], []
        for k in range(0, spec.K_max + 1):
            test.append(spectra(spec.M, spec.N, k, snr, spec.seed, n_per, (S_TEST, gi, k), spec.workers))
            truth.append(np.full(n_per, k))
        test, truth = np.concatenate(test), np.concatenate(truth)
        gate = detector_decisions(spec, spec.pipeline_detector, spec.M, spec.N, spec.p_fa, test)
        labels = predict(extract_features(test))
        est = np.where(gate, labels, 0)
        n = len(truth)
        ok_pipe = int(np.count_nonzero(est == truth))
        ok_cls = int(np.count_nonzero(labels == truth))
        fa = int(np.count_nonzero(gate[truth == 0]))
        table.add({
            "snr_db": snr, "trials": n,
            "pipeline": ok_pipe / n, "pipeline_ci95": wilson_halfwidth(ok_pipe, n),
            "classifier_only": ok_cls / n, "classifier_only_ci95": wilson_halfwidth(ok_cls, n),
            "false_alarms": fa, "correct_rejections": n_per - fa, "noise_trials": n_per,
        })
    return table


RUNNERS = {
    "pd_vs_snr": run_detection_sweep,
    "pd_vs_N": run_detection_sweep,
    "roc": run_roc,
    "acc_vs_snr": run_classification_sweep,
    "acc_vs_M": run_classification_sweep,
    "criteria_vs_M": run_criteria_sweep,
    "criteria_vs_snr": run_criteria_sweep,
    "pipeline": run_pipeline,
}


def run(spec: ExperimentSpec) -> ResultTable:
    return RUNNERS[spec.kind](spec)
