"""Scikit-learn style estimators wrapping the completion solvers and classical MDS."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.metrics import r2_score
from sklearn.utils.validation import check_array, check_is_fitted

from .basis import ObservationSet
from .geometry import gram_from_distances, mds_embed
from .solver import SolverConfig, reconstruct


def check_observations(X, n_points=None) -> ObservationSet:
    """Coerce ``X`` to an :class:`ObservationSet`.

    ``X`` may already be one, or an array of shape (m, 3) with rows
    ``(i, j, d2)`` using 0-based indices. ``n_points`` defaults to the
    largest index plus one.
    """
    if isinstance(X, ObservationSet):
        if n_points is not None and n_points != X.n:
            raise ValueError(f"n_points={n_points} but observations have n={X.n}")
        return X
    X = check_array(X, dtype=float, ensure_min_samples=1)
    if X.shape[1] != 3:
        raise ValueError(f"expected rows (i, j, d2), got {X.shape[1]} columns")
    idx = X[:, :2]
    if not np.all(idx == np.round(idx)):
        raise ValueError("pair indices must be integers")
    n = int(idx.max()) + 1 if n_points is None else int(n_points)
    return ObservationSet(n, idx.astype(np.int64), X[:, 2])


def _check_pairs(pairs, n: int) -> np.ndarray:
    pairs = check_array(pairs, dtype=None, ensure_min_samples=1)
    if pairs.shape[1] < 2:
        raise ValueError("pairs need at least two columns (i, j)")
    ij = np.asarray(pairs[:, :2], dtype=float)
    if not np.all(ij == np.round(ij)) or ij.min() < 0 or ij.max() >= n:
        raise ValueError(f"pair indices must be integers in [0, {n})")
    return ij.astype(np.int64)


class EDGCompletion(BaseEstimator):
    """Reconstruct point coordinates from a sample of squared distances.

    The Gram matrix is completed by trace minimization over a factor
    ``P`` of width ``q`` and embedded with classical MDS.

    Parameters
    ----------
    n_components : int, default=3
        Embedding dimension.
    q : int, default=10
        Factor width; only needs to upper-bound the rank roughly.
    noisy : bool, default=False
        Use the penalized least-squares scheme instead of the augmented
        Lagrangian.
    penalty : float, default=1.0
    lam : float or "auto", default="auto"
        Least-squares weight for ``noisy=True``; ``"auto"`` is ``100 m / L``.
    tol : float, default=1e-5
    max_iter : int, default=100
        Maximum outer iterations.
    bb_iter : int, default=50
        BB steps per outer iteration.
    bb_rule : {"bb2", "bb1", "alternate"}, default="bb2"
    stop_rule : {"reconciled", "text", "box"}, default="reconciled"
    n_points : int, optional
        Number of points; inferred from the largest index when omitted.
    random_state : int, default=0
        Seed of the initial factor.

    Attributes
    ----------
    factor_ : ndarray of shape (n, q)
    gram_ : ndarray of shape (n, n)
        Completed, centered Gram matrix.
    embedding_ : ndarray of shape (n, n_components)
    report_ : SolveReport
    n_iter_ : int
    converged_ : bool

    Examples
    --------
    >>> import numpy as np
    >>> from edgcomplete import EDGCompletion, distance_matrix_from_points
    >>> pts = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
    >>> D = distance_matrix_from_points(pts)
    >>> rows = [(0, 1, D[0, 1]), (0, 2, D[0, 2]), (1, 2, D[1, 2])]
    >>> emb = EDGCompletion(n_components=2).fit_transform(np.array(rows))
    >>> emb.shape
    (3, 2)
    """

    def __init__(self, n_components=3, *, q=10, noisy=False, penalty=1.0, lam="auto",
                 tol=1e-5, max_iter=100, bb_iter=50, bb_rule="bb2",
                 stop_rule="reconciled", n_points=None, random_state=0):
        self.n_components = n_components
        self.q = q
        self.noisy = noisy
        self.penalty = penalty
        self.lam = lam
        self.tol = tol
        self.max_iter = max_iter
        self.bb_iter = bb_iter
        self.bb_rule = bb_rule
        self.stop_rule = stop_rule
        self.n_points = n_points
        self.random_state = random_state

    def _config(self) -> SolverConfig:
        return SolverConfig(q=self.q, penalty=self.penalty, lam=self.lam, tol=self.tol,
                            max_outer=self.max_iter, bb_inner=self.bb_iter,
                            seed=self.random_state, bb_rule=self.bb_rule,
                            stop_rule=self.stop_rule)

    def fit(self, X, y=None, *, truth=None):
        """Complete the Gram matrix from observations ``X``.

        ``truth`` optionally supplies the ground-truth Gram matrix so that the
        report records the relative error.
        """
        obs = check_observations(X, self.n_points)
        if not 1 <= self.n_components <= obs.n:
            raise ValueError(f"n_components must lie in [1, {obs.n}]")
        coords, gram, report = reconstruct(obs, self._config(), self.n_components,
                                           noisy=self.noisy, truth=truth)
        self.embedding_ = coords
        self.gram_ = gram
        self.report_ = report
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        self.n_points_ = obs.n
        return self

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).embedding_

    def predict(self, pairs) -> np.ndarray:
        """Squared distances of the completed configuration at ``pairs`` (0-based)."""
        check_is_fitted(self, "gram_")
        ij = _check_pairs(pairs, self.n_points_)
        G = self.gram_
        i, j = ij[:, 0], ij[:, 1]
        return G[i, i] + G[j, j] - 2.0 * G[i, j]

    def score(self, X, y=None) -> float:
        """R^2 of predicted against held-out squared distances ``X = (i, j, d2)``."""
        X = check_array(X, dtype=float)
        return float(r2_score(X[:, 2], self.predict(X[:, :2])))


class ClassicalMDS(TransformerMixin, BaseEstimator):
    """Classical (Torgerson) MDS on squared distances or a Gram matrix.

    Parameters
    ----------
    n_components : int, default=3
    input : {"distances", "gram"}, default="distances"
        ``"distances"`` expects squared Euclidean distances.

    Attributes
    ----------
    embedding_ : ndarray of shape (n, n_components)
    eigenvalues_ : ndarray of shape (n_components,)
    clamped_mass_ : float
        Total magnitude of negative eigenvalues that were set to zero.
    """

    def __init__(self, n_components=3, *, input="distances"):
        self.n_components = n_components
        self.input = input

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.input == "distances":
            G = gram_from_distances(X)
        elif self.input == "gram":
            G = X
        else:
            raise ValueError(f"input must be 'distances' or 'gram', got {self.input!r}")
        coords, info = mds_embed(G, self.n_components, return_info=True)
        self.embedding_ = coords
        self.eigenvalues_ = info["eigenvalues"]
        self.clamped_mass_ = info["clamped_mass"]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_
