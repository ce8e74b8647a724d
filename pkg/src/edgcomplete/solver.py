"""Trace-minimizing Gram completion over a factor ``P`` (``X = P P^T``).

Two schemes share the Barzilai-Borwein inner descent:

* :func:`solve_exact` -- augmented Lagrangian for
  ``min Tr(P P^T)  s.t.  A(P P^T) = b``;
* :func:`solve_noisy` -- penalized least squares
  ``min Tr(P P^T) + lam/2 ||A(P P^T) - b||^2``.

``A`` maps a matrix to its sampled squared distances (see
:mod:`edgcomplete.basis`). Centering is applied only when the Gram matrix is
recovered from ``P``.
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .basis import ObservationSet
from .geometry import mds_embed, relative_gram_error
from .sampling import RNG_NAME, make_rng

BB_RULES = ("bb1", "bb2", "alternate")
STOP_RULES = ("reconciled", "text", "box")

STEP_MIN = 1e-10
STEP_MAX = 1e6
STEP_FALLBACK = 1e-4
DIVERGENCE_FACTOR = 1e6
NONMONOTONE_WINDOW = 10
MAX_BACKTRACKS = 60


class DivergenceError(RuntimeError):
    """The energy became non-finite or blew up; ``report`` holds the partial trace."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the factored solvers.

    Parameters
    ----------
    q : int
        Width of the factor ``P`` (a rough upper guess of the rank).
    penalty : float
        Augmented-Lagrangian penalty ``r``.
    lam : float or "auto"
        Least-squares weight of the noisy scheme; ``"auto"`` means
        ``100 * m / L``.
    tol : float
        Tolerance of the outer stopping rule.
    max_outer : int
        Maximum number of outer iterations.
    bb_inner : int
        Maximum number of BB steps per outer iteration.
    seed : int
        Seed of the initial factor ``P0 ~ U[0, init_scale)^{n x q}``.
    init_scale : float
    bb_rule : {"bb2", "bb1", "alternate"}
        Step-length formula: ``s.y / y.y`` (bb2), ``s.s / s.y`` (bb1) or
        alternating between the two.
    stop_rule : {"reconciled", "text", "box"}
        ``reconciled`` stops when the relative change of the total energy is
        below ``tol`` and (exact scheme only) ``||A(PP^T) - b|| <=
        feas_tol * ||b||``. ``text`` uses the relative change plus the
        absolute feasibility energy ``E < tol``; ``box`` uses ``E < tol`` and
        ``E_total < tol``.
    feas_tol : float, optional
        Relative residual threshold of the reconciled rule; ``tol / 100`` if
        unset.
    warm_step : bool
        Carry the last BB step length into the next outer iteration.
    """

    q: int = 10
    penalty: float = 1.0
    lam: float | str = "auto"
    tol: float = 1e-5
    max_outer: int = 100
    bb_inner: int = 50
    seed: int = 0
    init_scale: float = 1.0
    bb_rule: str = "bb2"
    stop_rule: str = "reconciled"
    feas_tol: float | None = None
    warm_step: bool = True

    def __post_init__(self):
        if isinstance(self.q, bool) or int(self.q) != self.q or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q!r}")
        for name in ("penalty", "tol", "init_scale"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.tol >= 1:
            raise ValueError(f"tol must be < 1, got {self.tol}")
        if self.lam != "auto" and not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be positive or 'auto', got {self.lam!r}")
        if self.max_outer < 1 or self.bb_inner < 1:
            raise ValueError("max_outer and bb_inner must be >= 1")
        if self.bb_rule not in BB_RULES:
            raise ValueError(f"bb_rule must be one of {BB_RULES}")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"stop_rule must be one of {STOP_RULES}")
        if self.feas_tol is not None and not self.feas_tol > 0:
            raise ValueError("feas_tol must be positive")

    @property
    def resolved_feas_tol(self) -> float:
        return self.tol / 100.0 if self.feas_tol is None else float(self.feas_tol)

    def resolve_lam(self, obs: ObservationSet) -> float:
        return 100.0 * obs.rate if self.lam == "auto" else float(self.lam)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    energy_trace: list[tuple[float, float]]
    wall_time: float
    final_gram: np.ndarray | None = field(default=None, repr=False)
    stop_reason: str = ""
    relative_error: float | None = None
    scheme: str = "exact"
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "scheme": self.scheme,
            "iterations": self.iterations,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "wall_time": self.wall_time,
            "energies": [{"total": t, "feasibility": f} for t, f in self.energy_trace],
            "config": self.config,
        }
        if self.relative_error is not None:
            out["relative_error"] = self.relative_error
        out.update(self.extra)
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


# -- objectives --------------------------------------------------------------

def _residual(P: np.ndarray, obs: ObservationSet) -> tuple[np.ndarray, np.ndarray]:
    diff = obs.incidence @ P
    return np.einsum("ij,ij->i", diff, diff) - obs.values, diff


def augmented_lagrangian(P, obs: ObservationSet, multiplier, penalty: float = 1.0):
    """Value and gradient of ``Tr(PP^T) + r/2 ||A(PP^T) - b + Lambda||^2``.

    Gradient: ``2P + 2r A*(A(PP^T) - b + Lambda) P``.
    """
    P = np.asarray(P, dtype=float)
    res, diff = _residual(P, obs)
    res = res + multiplier
    f = float(np.sum(P * P) + 0.5 * penalty * (res @ res))
    g = 2.0 * P + (2.0 * penalty) * (obs.incidence_t @ (res[:, None] * diff))
    return f, g


def penalized_objective(P, obs: ObservationSet, lam: float):
    """Value and gradient of ``Tr(PP^T) + lam/2 ||A(PP^T) - b||^2``."""
    return augmented_lagrangian(P, obs, 0.0, lam)


# -- Barzilai-Borwein descent -----------------------------------------------

class BBResult(NamedTuple):
    x: np.ndarray
    step: float
    n_iter: int
    grad_norm: float


def bb_descent(fun: Callable, x0, max_iter: int, *, gtol: float = 1e-5,
               step: float | None = None, rule: str = "bb2") -> BBResult:
    """Steepest descent with Barzilai-Borwein step lengths.

    ``fun(x)`` returns ``(value, gradient)``. With ``s = x_k - x_{k-1}`` and
    ``y = g_k - g_{k-1}`` the step is ``s.y / y.y`` (bb2) or ``s.s / s.y``
    (bb1); a non-positive curvature ``s.y`` falls back to ``1e-4``. Steps are
    clamped to ``[1e-10, 1e6]``. The first step is ``step`` if given, else
    ``1 / ||g_0||``. A trial point whose objective exceeds the maximum over
    the last ``NONMONOTONE_WINDOW`` accepted values has its step halved.
    Iteration stops early once
    ``||g|| < gtol * max(1, ||x||)``.
    """
    if rule not in BB_RULES:
        raise ValueError(f"rule must be one of {BB_RULES}")
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    gnorm = float(np.linalg.norm(g))
    if not (np.isfinite(gnorm) and np.isfinite(f)):
        raise FloatingPointError("non-finite objective or gradient at the starting point")
    if gnorm == 0.0:
        return BBResult(x, step if step is not None else STEP_FALLBACK, 0, 0.0)
    alpha = step if step is not None else 1.0 / gnorm
    recent = deque([f], maxlen=NONMONOTONE_WINDOW)
    k = 0
    for k in range(1, max_iter + 1):
        # nonmonotone safeguard: halve the step until the objective does not
        # exceed the largest of the last few accepted values
        f_ref = max(recent)
        for _ in range(MAX_BACKTRACKS):
            x_new = x - alpha * g
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new <= f_ref:
                break
            alpha *= 0.5
        else:
            raise FloatingPointError("BB step could not be safeguarded")
        s = x_new - x
        y = g_new - g
        sy = float(np.vdot(s, y))
        if sy > 0:
            use = rule if rule != "alternate" else ("bb1" if k % 2 else "bb2")
            alpha = float(np.vdot(s, s)) / sy if use == "bb1" else sy / float(np.vdot(y, y))
        else:
            alpha = STEP_FALLBACK
        if not np.isfinite(alpha):
            raise FloatingPointError("non-finite BB step")
        alpha = min(max(alpha, STEP_MIN), STEP_MAX)
        x, g = x_new, g_new
        recent.append(f_new)
        gnorm = float(np.linalg.norm(g))
        if not np.isfinite(gnorm):
            raise FloatingPointError("non-finite gradient during BB descent")
        if gnorm < gtol * max(1.0, float(np.linalg.norm(x))):
            break
    return BBResult(x, alpha, k, gnorm)


# -- outer loops ----------------------------------------------------------------

def initial_factor(n: int, cfg: SolverConfig) -> np.ndarray:
    return make_rng(cfg.seed).uniform(0.0, cfg.init_scale, size=(n, cfg.q))


def recover_gram(P) -> np.ndarray:
    """Centered Gram matrix ``J P P^T J``."""
    P = np.asarray(P, dtype=float)
    Pc = P - P.mean(axis=0, keepdims=True)
    G = Pc @ Pc.T
    return 0.5 * (G + G.T)


def _check_obs(obs: ObservationSet) -> None:
    if not isinstance(obs, ObservationSet):
        raise TypeError("obs must be an ObservationSet")
    if obs.m < 1:
        raise ValueError("need at least one observation")


def _relative_change(new: float, old: float | None) -> float:
    if old is None:
        return math.inf
    if new == 0.0:
        return 0.0 if old == 0.0 else math.inf
    return abs(new - old) / abs(new)


def _config_record(cfg: SolverConfig, **extra) -> dict:
    rec = cfg.to_dict()
    rec["rng"] = RNG_NAME
    rec.update(extra)
    return rec


def _run(obs, cfg, P0, scheme):
    t0 = time.perf_counter()
    b = np.asarray(obs.values)
    b_norm = float(np.linalg.norm(b))
    if scheme == "exact":
        weight = cfg.penalty
        lam_used = None
    else:
        weight = cfg.resolve_lam(obs)
        lam_used = weight
    multiplier = np.zeros(obs.m)
    P = initial_factor(obs.n, cfg) if P0 is None else np.array(P0, dtype=float)
    if P.shape[0] != obs.n:
        raise ValueError(f"P0 must have {obs.n} rows, got {P.shape[0]}")
    trace: list[tuple[float, float]] = []
    step = None
    prev_total = None
    first_total = None
    converged = False
    reason = "max_outer"
    k = 0

    def make_report(done: bool, why: str) -> SolveReport:
        extra = {}
        if lam_used is not None:
            extra["lambda"] = lam_used
        return SolveReport(
            iterations=len(trace), converged=done, energy_trace=list(trace),
            wall_time=time.perf_counter() - t0,
            final_gram=recover_gram(P) if np.all(np.isfinite(P)) else None,
            stop_reason=why, scheme=scheme,
            config=_config_record(cfg, **extra), extra={},
        )

    for k in range(1, cfg.max_outer + 1):
        shift = multiplier if scheme == "exact" else 0.0

        def fun(x, shift=shift):
            return augmented_lagrangian(x, obs, shift, weight)

        try:
            res_bb = bb_descent(fun, P, cfg.bb_inner, gtol=cfg.tol,
                                step=step if (cfg.warm_step and step is not None) else None,
                                rule=cfg.bb_rule)
        except FloatingPointError as exc:
            raise DivergenceError(f"outer iteration {k}: {exc}", make_report(False, "diverged")) from exc
        P = res_bb.x
        step = res_bb.step
        res, _ = _residual(P, obs)
        if scheme == "exact":
            multiplier = multiplier + res
            feas = 0.5 * weight * float(res @ res)
            shifted = res + multiplier
            total = float(np.sum(P * P)) + 0.5 * weight * float(shifted @ shifted)
        else:
            feas = 0.5 * weight * float(res @ res)
            total = float(np.sum(P * P)) + feas
        trace.append((total, feas))
        if not (np.isfinite(total) and np.isfinite(feas)):
            raise DivergenceError(f"non-finite energy at outer iteration {k}",
                                  make_report(False, "diverged"))
        if first_total is None:
            first_total = total
        elif abs(total) > DIVERGENCE_FACTOR * max(abs(first_total), np.finfo(float).tiny):
            raise DivergenceError(
                f"total energy grew from {first_total:.3e} to {total:.3e}",
                make_report(False, "diverged"))
        rel = _relative_change(total, prev_total)
        prev_total = total
        if _should_stop(cfg, scheme, rel, feas, total, res, b_norm):
            converged = True
            reason = cfg.stop_rule
            break
    return P, make_report(converged, reason)


def _should_stop(cfg, scheme, rel, feas, total, res, b_norm) -> bool:
    tol = cfg.tol
    if scheme == "noisy":
        if cfg.stop_rule == "box":
            return total < tol
        return rel < tol
    if cfg.stop_rule == "box":
        return feas < tol and total < tol
    if cfg.stop_rule == "text":
        return rel < tol and feas < tol
    return rel < tol and float(np.linalg.norm(res)) <= cfg.resolved_feas_tol * b_norm


def solve_exact(obs: ObservationSet, cfg: SolverConfig | None = None, *, P0=None):
    """Augmented-Lagrangian completion from exact distances.

    Each outer iteration runs BB descent on
    ``Tr(PP^T) + r/2 ||A(PP^T) - b + Lambda||^2``, then updates
    ``Lambda += A(PP^T) - b`` and records ``(E_total, E)`` with
    ``E = r/2 ||A(PP^T) - b||^2``.

    Returns
    -------
    P : ndarray of shape (n, q)
    report : SolveReport

    Raises
    ------
    DivergenceError
        If an energy becomes non-finite or grows by more than ``1e6`` times.
    """
    cfg = cfg or SolverConfig()
    _check_obs(obs)
    return _run(obs, cfg, P0, "exact")


def solve_noisy(obs: ObservationSet, cfg: SolverConfig | None = None, *, P0=None):
    """Penalized least-squares completion from noisy distances.

    BB descent on ``Tr(PP^T) + lam/2 ||A(PP^T) - b||^2``, in chunks of
    ``bb_inner`` steps, until the total energy changes by less than ``tol``
    (relative) between chunks.
    """
    cfg = cfg or SolverConfig()
    _check_obs(obs)
    return _run(obs, cfg, P0, "noisy")


def reconstruct(obs: ObservationSet, cfg: SolverConfig | None = None, d: int = 3, *,
                noisy: bool = False, truth=None):
    """Complete the Gram matrix and embed it in ``d`` dimensions with classical MDS.

    ``truth`` is an optional ground-truth Gram matrix; when given, the report
    carries the relative Gram error.

    Returns
    -------
    coords : ndarray of shape (n, d)
    gram : ndarray of shape (n, n)
    report : SolveReport
    """
    solve = solve_noisy if noisy else solve_exact
    _, report = solve(obs, cfg)
    gram = report.final_gram
    coords, info = mds_embed(gram, d, return_info=True)
    report.extra["mds_clamped_mass"] = info["clamped_mass"]
    if truth is not None:
        report.relative_error = relative_gram_error(gram, truth)
    return coords, gram, report


__all__ = [
    "BBResult", "DivergenceError", "SolveReport", "SolverConfig",
    "augmented_lagrangian", "bb_descent", "initial_factor", "penalized_objective",
    "reconstruct", "recover_gram", "solve_exact", "solve_noisy",
]
