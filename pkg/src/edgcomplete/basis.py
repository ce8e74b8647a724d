"""The EDG operator basis and the linear maps built from it.

For a pair ``(i, j)`` with ``i < j`` the basis matrix ``w_ij`` has ``+1`` at
``(i, i)`` and ``(j, j)`` and ``-1`` at ``(i, j)`` and ``(j, i)``, so that
``<X, w_ij> = X_ii + X_jj - 2 X_ij`` is the squared distance encoded by a
Gram matrix ``X``. The ``L = n(n-1)/2`` matrices ``w_ij`` span the space of
symmetric matrices with zero row sums; ``v_ij`` denotes the dual basis.

Indices are 0-based in the Python API. Observation files use 1-based
indices (see :mod:`edgcomplete.io`).

Everything that materializes ``v``, ``H`` or the dense sampling/frame
operators is meant for verification on small ``n`` and is capped by
``DENSE_LIMIT`` unless ``max_n`` is passed explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ._validation import check_dense_limit, check_positive_int

DENSE_LIMIT = 64


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def _check_pair(pair, n: int) -> tuple[int, int]:
    i, j = int(pair[0]), int(pair[1])
    if not (0 <= i < j < n):
        raise ValueError(f"invalid pair {pair!r} for n={n}; need 0 <= i < j < n")
    return i, j


def pair_index(pair, n: int) -> int:
    """Row-major position of ``pair`` in the strict upper triangle."""
    i, j = _check_pair(pair, n)
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def pair_from_index(k: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`pair_index`."""
    L = n_pairs(n)
    if not 0 <= k < L:
        raise ValueError(f"linear index {k} out of range [0, {L})")
    # row i holds n - 1 - i pairs; walk rows (n is small wherever this is used)
    i = 0
    while k >= n - 1 - i:
        k -= n - 1 - i
        i += 1
    return i, i + 1 + k


def all_pairs(n: int) -> np.ndarray:
    """All ``L`` pairs as an (L, 2) int array, in :func:`pair_index` order."""
    iu, ju = np.triu_indices(n, 1)
    return np.column_stack([iu, ju])


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """A multiset of sampled pairs with their observed squared distances.

    Pairs are kept in sampling order and duplicates are retained: every
    operator below weights a repeated pair by its multiplicity.

    Parameters
    ----------
    n : int
        Number of points.
    pairs : array-like of shape (m, 2)
        0-based index pairs with ``i < j``. Pairs given as ``(j, i)`` are
        reordered.
    values : array-like of shape (m,)
        Observed squared distances.
    with_replacement : bool, default=True
        Whether the pairs were drawn with replacement.
    """

    n: int
    pairs: np.ndarray
    values: np.ndarray
    with_replacement: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = check_positive_int(self.n, "n", minimum=2)
        pairs = np.asarray(self.pairs)
        if pairs.size == 0:
            pairs = pairs.reshape(0, 2)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"pairs must have shape (m, 2), got {pairs.shape}")
        if not np.issubdtype(pairs.dtype, np.integer):
            if not np.all(np.equal(np.mod(pairs, 1), 0)):
                raise ValueError("pairs must be integers")
        pairs = np.sort(pairs.astype(np.int64), axis=1)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
            raise ValueError(f"pair index out of range for n={n}")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise ValueError("diagonal pairs (i, i) are not observations")
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.shape[0] != pairs.shape[0]:
            raise ValueError(
                f"got {pairs.shape[0]} pairs but {values.shape[0]} values"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("observed values must be finite")
        pairs.setflags(write=False)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "with_replacement", bool(self.with_replacement))

    @property
    def m(self) -> int:
        return self.pairs.shape[0]

    @property
    def n_pairs(self) -> int:
        return n_pairs(self.n)

    @property
    def rate(self) -> float:
        """Sampling rate ``m / L``."""
        return self.m / self.n_pairs

    def __len__(self) -> int:
        return self.m

    def with_values(self, values) -> "ObservationSet":
        """Copy with the same pairs and new observed values."""
        return ObservationSet(self.n, self.pairs, values, self.with_replacement,
                              dict(self.meta))

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Sparse (m, n) edge incidence ``B`` with ``+1`` at ``i`` and ``-1`` at ``j``.

        ``A(P P^T) = rowsum((B P)**2)`` and ``A*(y) = B^T diag(y) B``.
        """
        m = self.m
        rows = np.repeat(np.arange(m), 2)
        cols = self.pairs.reshape(-1)
        data = np.tile([1.0, -1.0], m)
        return sp.csr_matrix((data, (rows, cols)), shape=(m, self.n))

    @cached_property
    def incidence_t(self) -> sp.csr_matrix:
        return self.incidence.T.tocsr()


def _check_obs_matrix(X, obs: ObservationSet) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (obs.n, obs.n):
        raise ValueError(f"expected a ({obs.n}, {obs.n}) matrix, got {X.shape}")
    return X


# -- basis elements ---------------------------------------------------------

def inner_w(X, pair) -> float:
    """``<X, w_ij> = X_ii + X_jj - 2 X_ij`` for symmetric ``X``."""
    i, j = int(pair[0]), int(pair[1])
    return float(X[i, i] + X[j, j] - 2.0 * X[i, j])


def inner_w_all(X, pairs) -> np.ndarray:
    """Vectorized :func:`inner_w` over an (m, 2) array of pairs."""
    X = np.asarray(X, dtype=float)
    pairs = np.asarray(pairs)
    i, j = pairs[:, 0], pairs[:, 1]
    return X[i, i] + X[j, j] - X[i, j] - X[j, i]


def w_matrix(pair, n: int) -> np.ndarray:
    """Dense basis matrix ``w_ij``."""
    i, j = _check_pair(pair, n)
    W = np.zeros((n, n))
    W[i, i] = W[j, j] = 1.0
    W[i, j] = W[j, i] = -1.0
    return W


def _overlap(a, b) -> int:
    return len({int(a[0]), int(a[1])} & {int(b[0]), int(b[1])})


def h_entry(a, b) -> float:
    """Entry of the correlation matrix ``H_ab = <w_a, w_b>``."""
    k = _overlap(a, b)
    return 4.0 if k == 2 else (1.0 if k == 1 else 0.0)


def h_inv_entry(a, b, n: int) -> float:
    """Closed-form entry of ``H^{-1}``, i.e. ``<v_a, v_b>``."""
    k = _overlap(a, b)
    n2 = float(n * n)
    if k == 2:
        return ((n - 1) ** 2 + 1) / (2.0 * n2)
    if k == 0:
        return 1.0 / n2
    return (4.0 - 2.0 * n) / (4.0 * n2)


def _overlap_matrix(n: int) -> np.ndarray:
    P = all_pairs(n)
    i, j = P[:, 0], P[:, 1]
    return ((i[:, None] == i[None, :]).astype(int) + (i[:, None] == j[None, :])
            + (j[:, None] == i[None, :]) + (j[:, None] == j[None, :]))


def h_matrix(n: int, *, max_n: int | None = DENSE_LIMIT) -> np.ndarray:
    """Dense (L, L) correlation matrix ``H`` from its 4/1/0 pattern."""
    check_dense_limit(n, max_n, "h_matrix")
    k = _overlap_matrix(n)
    return np.select([k == 2, k == 1], [4.0, 1.0], 0.0)


def h_inv_matrix(n: int, *, max_n: int | None = DENSE_LIMIT) -> np.ndarray:
    """Dense (L, L) closed-form ``H^{-1}``."""
    check_dense_limit(n, max_n, "h_inv_matrix")
    k = _overlap_matrix(n)
    n2 = float(n * n)
    return np.select(
        [k == 2, k == 1],
        [((n - 1) ** 2 + 1) / (2.0 * n2), (4.0 - 2.0 * n) / (4.0 * n2)],
        1.0 / n2,
    )


def v_matrix(pair, n: int, *, max_n: int | None = DENSE_LIMIT) -> np.ndarray:
    """Dense dual basis matrix ``v_ij`` from its explicit closed form.

    The matrix has ``(n-1)/n^2`` on ``(i,i)`` and ``(j,j)``,
    ``-((n-1)^2+1)/(2n^2)`` on ``(i,j)``, ``(2n-4)/(4n^2)`` between ``{i,j}``
    and every other index, and ``-1/n^2`` on the block of the remaining
    indices (diagonal included). Requires ``n >= 3``.
    """
    if n < 3:
        raise ValueError("the dual basis is only defined here for n >= 3")
    check_dense_limit(n, max_n, "v_matrix")
    i, j = _check_pair(pair, n)
    n2 = float(n * n)
    V = np.full((n, n), -1.0 / n2)
    cross = (2.0 * n - 4.0) / (4.0 * n2)
    V[[i, j], :] = cross
    V[:, [i, j]] = cross
    V[i, i] = V[j, j] = (n - 1) / n2
    V[i, j] = V[j, i] = -((n - 1) ** 2 + 1) / (2.0 * n2)
    return V


# -- measurement operators -------------------------------------------------

def apply_A(X, obs: ObservationSet) -> np.ndarray:
    """``A(X)_k = <X, w_{pairs[k]}>``."""
    X = _check_obs_matrix(X, obs)
    return inner_w_all(X, obs.pairs)


def apply_A_star(y, obs: ObservationSet) -> np.ndarray:
    """Adjoint ``A*(y) = sum_k y_k w_{pairs[k]}`` as a dense symmetric matrix."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != obs.m:
        raise ValueError(f"y has length {y.shape[0]}, expected {obs.m}")
    n = obs.n
    i, j = obs.pairs[:, 0], obs.pairs[:, 1]
    out = np.zeros((n, n))
    np.add.at(out, (i, j), -y)
    np.add.at(out, (j, i), -y)
    # diagonal as minus the off-diagonal row sums keeps out @ 1 == 0
    np.fill_diagonal(out, 0.0)
    out[np.diag_indices(n)] = -out.sum(axis=1)
    return out


def apply_A_star_times_P(y, obs: ObservationSet, P) -> np.ndarray:
    """Matrix-free ``A*(y) P``; row ``i`` gathers ``y_e (P_i - P_j)`` over incident edges."""
    y = np.asarray(y, dtype=float).reshape(-1)
    P = np.asarray(P, dtype=float)
    if y.shape[0] != obs.m:
        raise ValueError(f"y has length {y.shape[0]}, expected {obs.m}")
    if P.ndim != 2 or P.shape[0] != obs.n:
        raise ValueError(f"P must have shape ({obs.n}, q), got {P.shape}")
    diff = obs.incidence @ P
    return obs.incidence_t @ (y[:, None] * diff)


def apply_sampling_operator(X, obs: ObservationSet, *,
                            max_n: int | None = DENSE_LIMIT) -> np.ndarray:
    """Dense ``R(X) = (L/m) sum_{a in Omega} <X, w_a> v_a``."""
    if obs.n < 3:
        raise ValueError("the sampling operator needs n >= 3")
    check_dense_limit(obs.n, max_n, "apply_sampling_operator")
    X = _check_obs_matrix(X, obs)
    coeff = apply_A(X, obs)
    out = np.zeros_like(X)
    for c, pair in zip(coeff, obs.pairs):
        if c != 0.0:
            out += c * v_matrix(pair, obs.n, max_n=None)
    return (obs.n_pairs / obs.m) * out


def apply_sampling_adjoint(X, obs: ObservationSet, *,
                           max_n: int | None = DENSE_LIMIT) -> np.ndarray:
    """Dense ``R*(X) = (L/m) sum_{a in Omega} <X, v_a> w_a``."""
    if obs.n < 3:
        raise ValueError("the sampling operator needs n >= 3")
    check_dense_limit(obs.n, max_n, "apply_sampling_adjoint")
    X = _check_obs_matrix(X, obs)
    coeff = np.array([np.sum(X * v_matrix(p, obs.n, max_n=None)) for p in obs.pairs])
    return (obs.n_pairs / obs.m) * apply_A_star(coeff, obs)


def apply_frame_operator(X, obs: ObservationSet) -> np.ndarray:
    """Restricted frame operator ``F(X) = (L/m) sum_{a in Omega} <X, w_a> w_a``."""
    X = _check_obs_matrix(X, obs)
    return (obs.n_pairs / obs.m) * apply_A_star(apply_A(X, obs), obs)
