"""Tangent-space projection, coherence estimation and the sample-count bound."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_dense_limit, check_positive_int, check_square
from .basis import all_pairs, inner_w_all, n_pairs, v_matrix
from .geometry import sorted_eigh

COHERENCE_EXACT_LIMIT = 40
COHERENCE_SIMPLIFIED_LIMIT = 64


@dataclass(frozen=True)
class TangentSpace:
    """Tangent space at a rank-``r`` PSD matrix, given by its top eigenvectors ``U``."""

    U: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def r(self) -> int:
        return self.U.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.U @ self.U.T


def estimate_rank(M, *, rtol: float = 1e-10) -> int:
    """Rank at the largest relative gap ``(l_k - l_{k+1}) / l_k`` of the spectrum."""
    M = check_square(M, name="M", atol=1e-8)
    vals, _ = sorted_eigh(M)
    if vals[0] <= 0:
        raise ValueError("matrix has no positive eigenvalue")
    keep = vals > rtol * vals[0]
    k_max = int(np.count_nonzero(keep))
    if k_max == len(vals):
        k_max -= 1
    gaps = (vals[:k_max] - vals[1:k_max + 1]) / vals[:k_max]
    return int(np.argmax(gaps)) + 1


def tangent_space(M, r: int, *, rtol: float = 1e-10) -> TangentSpace:
    """Tangent space of ``M`` using its top ``r`` eigenvectors."""
    M = check_square(M, name="M", atol=1e-8)
    n = M.shape[0]
    r = check_positive_int(r, "r")
    if r > n - 1:
        raise ValueError(f"rank r={r} must be <= n-1={n - 1}")
    vals, vecs = sorted_eigh(M)
    if vals[0] <= 0 or vals[r - 1] <= rtol * vals[0]:
        raise ValueError(f"rank r={r} exceeds the numerical rank of M")
    return TangentSpace(vecs[:, :r].copy())


def _as_tangent(T, r=None) -> TangentSpace:
    if isinstance(T, TangentSpace):
        return T
    U = np.asarray(T, dtype=float)
    if U.ndim != 2:
        raise ValueError("expected a TangentSpace or an (n, r) basis")
    return TangentSpace(U)


def project_tangent(X, T) -> np.ndarray:
    """``P_T X = P_U X + X P_U - P_U X P_U``.

    ``X`` may be a single (n, n) matrix or a stack of shape (..., n, n).
    """
    T = _as_tangent(T)
    X = np.asarray(X, dtype=float)
    if X.shape[-2:] != (T.n, T.n):
        raise ValueError(f"X must be ({T.n}, {T.n}), got {X.shape[-2:]}")
    U = T.U
    PU = T.projector
    UX = PU @ X
    XU = X @ PU
    return UX + XU - UX @ PU


def project_tangent_complement(X, T) -> np.ndarray:
    """``P_{T-perp} X = P_{U-perp} X P_{U-perp}``."""
    T = _as_tangent(T)
    X = np.asarray(X, dtype=float)
    Q = np.eye(T.n) - T.projector
    return Q @ X @ Q


@dataclass(frozen=True)
class CoherenceReport:
    nu_w: float
    nu_v: float
    nu_joint: float
    nu: float
    n: int
    r: int
    mode: str = "exact"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _w_stack(n: int, pairs: np.ndarray) -> np.ndarray:
    L = pairs.shape[0]
    W = np.zeros((L, n, n))
    k = np.arange(L)
    i, j = pairs[:, 0], pairs[:, 1]
    W[k, i, i] = 1.0
    W[k, j, j] = 1.0
    W[k, i, j] = -1.0
    W[k, j, i] = -1.0
    return W


def _v_stack(n: int, pairs: np.ndarray) -> np.ndarray:
    return np.stack([v_matrix(p, n, max_n=None) for p in pairs])


def _prepare(M, r, max_n, what):
    M = check_square(M, name="M", atol=1e-8)
    n = M.shape[0]
    if n < 3:
        raise ValueError("coherence needs n >= 3")
    check_dense_limit(n, max_n, what)
    T = tangent_space(M, r)
    return n, T, all_pairs(n)


def _w_coefficients(stack: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    # <A_k, w_b> for every matrix A_k in the stack and every pair b
    i, j = pairs[:, 0], pairs[:, 1]
    return stack[:, i, i] + stack[:, j, j] - stack[:, i, j] - stack[:, j, i]


def coherence_exact(M, r: int, *, max_n: int | None = COHERENCE_EXACT_LIMIT) -> CoherenceReport:
    """Smallest coherence ``nu`` for which the three defining bounds hold.

    ``nu_w``, ``nu_v`` and ``nu_joint`` make each of

    * ``max_a sum_b <P_T w_a, w_b>^2 <= 2 nu r / n``
    * ``max_a sum_b <P_T v_a, w_b>^2 <= 4 nu r / n``
    * ``max_a <w_a, U U^T>^2 <= nu r / (4 n^2)``

    tight; ``nu`` is their maximum. Costs ``O(L^2)`` with ``L = n(n-1)/2``.
    """
    n, T, pairs = _prepare(M, r, max_n, "coherence_exact")
    r = T.r
    W = _w_stack(n, pairs)
    sw = (_w_coefficients(project_tangent(W, T), pairs) ** 2).sum(axis=1).max()
    del W
    V = _v_stack(n, pairs)
    sv = (_w_coefficients(project_tangent(V, T), pairs) ** 2).sum(axis=1).max()
    sj = (inner_w_all(T.projector, pairs) ** 2).max()
    nu_w = float(n / (2.0 * r) * sw)
    nu_v = float(n / (4.0 * r) * sv)
    nu_joint = float(4.0 * n * n / r * sj)
    return CoherenceReport(nu_w, nu_v, nu_joint, max(nu_w, nu_v, nu_joint), n, r, "exact")


def coherence_simplified(M, r: int, *,
                         max_n: int | None = COHERENCE_SIMPLIFIED_LIMIT) -> CoherenceReport:
    """Smallest ``nu`` for the simplified bounds.

    ``max ||P_T w_a||_F^2 <= 2 nu r/n``, ``max ||P_T v_a||_F^2 <= 8 nu r/n`` and
    ``max <v_a, U U^T>^2 <= nu r/n^2``.
    """
    n, T, pairs = _prepare(M, r, max_n, "coherence_simplified")
    r = T.r
    W = _w_stack(n, pairs)
    sw = (project_tangent(W, T) ** 2).sum(axis=(1, 2)).max()
    del W
    V = _v_stack(n, pairs)
    sv = (project_tangent(V, T) ** 2).sum(axis=(1, 2)).max()
    sj = (np.einsum("kij,ij->k", V, T.projector) ** 2).max()
    nu_w = float(n / (2.0 * r) * sw)
    nu_v = float(n / (8.0 * r) * sv)
    nu_joint = float(n * n / r * sj)
    return CoherenceReport(nu_w, nu_v, nu_joint, max(nu_w, nu_v, nu_joint), n, r, "simplified")


def sample_complexity(n: int, r: int, nu: float, beta: float = 2.0) -> int:
    """Number of sampled distances sufficient for exact recovery w.h.p.

    Evaluates

        log2(4 n sqrt(8 L r)) * n r * 96 (nu + 1/(n r))
            * (beta ln n + ln(4 log2(4 L sqrt(r))))

    with ``L = n(n-1)/2`` and returns its ceiling. The failure probability is
    at most ``n**-beta``.
    """
    n = check_positive_int(n, "n", minimum=2)
    r = check_positive_int(r, "r")
    if not (np.isfinite(nu) and nu > 0):
        raise ValueError(f"nu must be positive, got {nu}")
    if not (np.isfinite(beta) and beta > 1):
        raise ValueError(f"beta must be > 1, got {beta}")
    L = n_pairs(n)
    rounds = math.log2(4.0 * n * math.sqrt(8.0 * L * r))
    per_round = 96.0 * (nu + 1.0 / (n * r)) * (
        beta * math.log(n) + math.log(4.0 * math.log2(4.0 * L * math.sqrt(r)))
    )
    return int(math.ceil(rounds * n * r * per_round))
