"""Batch experiments: sampling-rate tables and (rate, rank) phase diagrams.

Every trial draws its randomness from ``trial_seed(seed, t)`` so results do
not depend on how many worker threads execute the batch. Output rows are
ordered rate-major, rank-minor, trial-minor.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import (
    center_gram_from_points,
    distance_matrix_from_points,
    mds_embed,
    procrustes_align,
    relative_gram_error,
)
from .io import read_points
from .sampling import RNG_NAME, corrupt, derive_noise_model, make_rng, sample_observations, trial_seed
from .solver import DivergenceError, SolverConfig, solve_exact, solve_noisy


class ConfigError(ValueError):
    """Invalid experiment or command-line configuration."""


# -- datasets ------------------------------------------------------------------

def sphere_points(n: int, seed=None) -> np.ndarray:
    """``n`` points uniform on the unit sphere in R^3."""
    X = make_rng(seed).standard_normal((n, 3))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def gaussian_points(n: int, r: int, seed=None) -> np.ndarray:
    """``n`` i.i.d. standard normal points in R^r."""
    return make_rng(seed).standard_normal((n, r))


@dataclass(frozen=True)
class Dataset:
    kind: str
    n: int | None = None
    r: int | None = None
    path: str | None = None

    @classmethod
    def parse(cls, text: str) -> "Dataset":
        """Parse ``sphere:n``, ``gaussian:n[:r]`` or ``file:path``."""
        kind, _, rest = text.partition(":")
        try:
            if kind == "sphere":
                n = int(rest)
                if n < 3:
                    raise ConfigError("sphere needs n >= 3")
                return cls("sphere", n=n, r=3)
            if kind == "gaussian":
                parts = rest.split(":")
                n = int(parts[0])
                r = int(parts[1]) if len(parts) > 1 and parts[1] else None
                if n < 3 or (r is not None and r < 1):
                    raise ConfigError(f"bad gaussian generator {text!r}")
                return cls("gaussian", n=n, r=r)
            if kind == "file" and rest:
                return cls("file", path=rest)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot parse dataset {text!r}") from None
        raise ConfigError(
            f"unknown dataset {text!r}; use sphere:n, gaussian:n:r or file:path")

    @property
    def name(self) -> str:
        if self.kind == "file":
            return f"file:{self.path}"
        if self.kind == "gaussian":
            return f"gaussian:{self.n}" + (f":{self.r}" if self.r is not None else "")
        return f"sphere:{self.n}"

    def points(self, seed=None, rank: int | None = None) -> np.ndarray:
        if self.kind == "sphere":
            return sphere_points(self.n, seed)
        if self.kind == "gaussian":
            r = rank if rank is not None else self.r
            if r is None:
                raise ConfigError("gaussian dataset needs a rank")
            return gaussian_points(self.n, r, seed)
        return read_points(self.path)


# -- single trials ---------------------------------------------------------------

@dataclass
class TrialResult:
    dataset: str
    rate: float
    rank: int
    trial: int
    seed: int
    relative_error: float
    rmsd: float
    iterations: int
    converged: bool
    success: bool
    wall_time: float = field(default=0.0, compare=False)
    noise: dict | None = None
    error: str = ""


def _trial_streams(seed: int, trial: int):
    """Independent child seeds for (points, sampling, noise, initial factor)."""
    ss = np.random.SeedSequence(trial_seed(seed, trial))
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in ss.spawn(4)]


def run_trial(points, rate: float, *, trial: int, seed: int, cfg: SolverConfig,
              noisy: bool = False, success_tol: float = 1e-5, dataset: str = "",
              rank: int | None = None) -> TrialResult:
    """Sample, (optionally) corrupt, solve and score one reconstruction."""
    _, s_sample, s_noise, s_init = _trial_streams(seed, trial)
    X = np.asarray(points, dtype=float)
    d = X.shape[1]
    rank = d if rank is None else rank
    M = center_gram_from_points(X)
    D = distance_matrix_from_points(X)
    obs = sample_observations(D, rate, seed=s_sample)
    noise = None
    if noisy:
        model = derive_noise_model(obs)
        obs = corrupt(obs, model, seed=s_noise)
        noise = dict(model.to_dict(), seed=s_noise,
                     n_negative_before_clamp=obs.meta["n_negative_before_clamp"])
    run_cfg = replace(cfg, seed=s_init)
    t0 = time.perf_counter()
    try:
        _, report = (solve_noisy if noisy else solve_exact)(obs, run_cfg)
    except DivergenceError as exc:
        return TrialResult(dataset, rate, rank, trial, trial_seed(seed, trial), math.nan,
                           math.nan, len(exc.report.energy_trace) if exc.report else 0,
                           False, False, time.perf_counter() - t0, noise, str(exc))
    gram = report.final_gram
    err = relative_gram_error(gram, M)
    coords = mds_embed(gram, min(d, X.shape[0]))
    _, rmsd = procrustes_align(coords, X - X.mean(axis=0))
    return TrialResult(dataset, rate, rank, trial, trial_seed(seed, trial), err, rmsd,
                       report.iterations, report.converged, bool(err < success_tol),
                       time.perf_counter() - t0, noise)


# -- batch specs ---------------------------------------------------------------------

@dataclass
class ExperimentSpec:
    dataset: str
    rates: list[float]
    ranks: list[int] = field(default_factory=list)
    trials: int = 10
    noisy: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    success_tol: float = 1e-5
    threads: int = 1

    def __post_init__(self):
        if not self.rates:
            raise ConfigError("at least one sampling rate is required")
        for rate in self.rates:
            if not 0.0 < rate <= 1.0:
                raise ConfigError(f"sampling rate must lie in (0, 1], got {rate}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not self.success_tol > 0:
            raise ConfigError("success tolerance must be positive")
        Dataset.parse(self.dataset)

    def to_dict(self, *, runtime: bool = True) -> dict:
        """Plain-dict form; ``runtime=False`` drops execution-only settings (threads)."""
        out = asdict(self)
        if not runtime:
            del out["threads"]
        out["solver"] = self.solver.to_dict()
        out["rng"] = RNG_NAME
        out["trial_seeds"] = [trial_seed(self.seed, t) for t in range(self.trials)]
        return out


def _map(fn, tasks, threads: int):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def run_table(spec: ExperimentSpec) -> list[TrialResult]:
    """All trials of a rate sweep on one fixed point cloud."""
    ds = Dataset.parse(spec.dataset)
    points = ds.points(seed=spec.seed)
    tasks = [(rate, t) for rate in spec.rates for t in range(spec.trials)]

    def go(task):
        rate, t = task
        return run_trial(points, rate, trial=t, seed=spec.seed, cfg=spec.solver,
                         noisy=spec.noisy, success_tol=spec.success_tol, dataset=ds.name)

    return _map(go, tasks, spec.threads)


def run_phase_diagram(spec: ExperimentSpec) -> list[TrialResult]:
    """All trials of a (rate, rank) grid; each trial draws a fresh Gaussian cloud."""
    ds = Dataset.parse(spec.dataset)
    if ds.kind != "gaussian":
        raise ConfigError("the phase diagram needs a gaussian:n generator")
    if not spec.ranks:
        raise ConfigError("at least one rank is required")
    for r in spec.ranks:
        if r < 1 or r >= ds.n:
            raise ConfigError(f"rank {r} must satisfy 1 <= rank < n={ds.n}")
    tasks = [(rate, r, t) for rate in spec.rates for r in spec.ranks for t in range(spec.trials)]

    def go(task):
        rate, r, t = task
        s_points = _trial_streams(spec.seed, t)[0]
        # distinct clouds per rank, same cloud across rates
        points = ds.points(seed=[s_points, r], rank=r)
        return run_trial(points, rate, trial=t, seed=spec.seed, cfg=spec.solver,
                         noisy=spec.noisy, success_tol=spec.success_tol,
                         dataset=ds.name, rank=r)

    return _map(go, tasks, spec.threads)


# -- summaries --------------------------------------------------------------------

def summarize_table(results: list[TrialResult]) -> list[dict]:
    rows = []
    keys = list(dict.fromkeys((r.dataset, r.rate) for r in results))
    for dataset, rate in keys:
        errs = np.array([r.relative_error for r in results
                         if r.dataset == dataset and r.rate == rate])
        ok = errs[np.isfinite(errs)]
        rows.append({
            "dataset": dataset,
            "rate": rate,
            "trials": int(errs.size),
            "failed": int(errs.size - ok.size),
            "mean": float(ok.mean()) if ok.size else math.nan,
            "median": float(np.median(ok)) if ok.size else math.nan,
            "std": float(ok.std()) if ok.size else math.nan,
            "min": float(ok.min()) if ok.size else math.nan,
            "max": float(ok.max()) if ok.size else math.nan,
        })
    return rows


def summarize_phase(results: list[TrialResult]) -> list[dict]:
    rows = []
    keys = list(dict.fromkeys((r.rate, r.rank) for r in results))
    for rate, rank in keys:
        cell = [r for r in results if r.rate == rate and r.rank == rank]
        errs = np.array([r.relative_error for r in cell])
        finite = errs[np.isfinite(errs)]
        succ = sum(r.success for r in cell)
        rows.append({
            "rate": rate,
            "rank": rank,
            "trials": len(cell),
            "successes": int(succ),
            "probability": succ / len(cell),
            "median_error": float(np.median(finite)) if finite.size else math.nan,
        })
    return rows


def count_inversions(probabilities) -> int:
    """Number of adjacent decreases in a sequence ordered by increasing rate."""
    p = list(probabilities)
    return sum(1 for a, b in zip(p, p[1:]) if b < a)


TRIAL_FIELDS = ["dataset", "rate", "rank", "trial", "seed", "relative_error", "rmsd",
                "iterations", "converged", "success", "error"]


def _cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path, rows: list[dict], fields: list[str] | None = None) -> None:
    """UTF-8 CSV with a header row; floats written with ``repr`` for exact round trips."""
    fields = fields or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_cell(row[f]) for f in fields])


def write_trials(path, results: list[TrialResult]) -> None:
    # wall time is left out so repeated runs produce identical files
    write_rows(path, [asdict(r) for r in results], TRIAL_FIELDS)


def write_gnuplot(path, rows: list[dict]) -> None:
    """Phase diagram as ``rate rank probability`` blocks separated by blank lines."""
    rates = list(dict.fromkeys(r["rate"] for r in rows))
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write("# rate rank probability\n")
        for rate in rates:
            for r in (row for row in rows if row["rate"] == rate):
                fh.write(f"{r['rate']!r} {r['rank']} {r['probability']!r}\n")
            fh.write("\n")
