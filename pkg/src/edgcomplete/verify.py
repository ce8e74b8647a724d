"""Numerical checks of the basis/dual-basis identities on small ``n``.

Every check builds its objects independently of the solver hot path: ``H``
is assembled as ``W^T W`` from vectorized basis matrices, ``H^{-1}`` and
``v`` come from their closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import all_pairs, h_inv_matrix, inner_w_all, v_matrix
from .sampling import make_rng


@dataclass(frozen=True)
class Check:
    name: str
    n: int
    passed: bool
    value: float
    tol: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  n={self.n:<3d} {self.name:<28s} value={self.value:.3e} tol={self.tol:.1e}"


def w_vectors(n: int) -> np.ndarray:
    """Vectorized basis matrices as rows of an (L, n*n) integer array."""
    pairs = all_pairs(n)
    L = pairs.shape[0]
    W = np.zeros((L, n, n), dtype=np.int64)
    k = np.arange(L)
    i, j = pairs[:, 0], pairs[:, 1]
    W[k, i, i] = 1
    W[k, j, j] = 1
    W[k, i, j] = -1
    W[k, j, i] = -1
    return W.reshape(L, n * n)


def v_vectors(n: int) -> np.ndarray:
    return np.stack([v_matrix(p, n, max_n=None).ravel() for p in all_pairs(n)])


def random_centered_symmetric(n: int, count: int, rng) -> np.ndarray:
    """``count`` random matrices of the space {X = X^T, X 1 = 0}."""
    Y = rng.standard_normal((count, n, n))
    Y = Y + np.swapaxes(Y, 1, 2)
    Y = Y - Y.mean(axis=1, keepdims=True)
    return Y - Y.mean(axis=2, keepdims=True)


def check_n(n: int, *, n_random: int = 100, seed: int = 0) -> list[Check]:
    out = []
    L = n * (n - 1) // 2
    Wi = w_vectors(n)
    W = Wi.astype(float)
    V = v_vectors(n)
    H = W @ W.T
    Hinv = h_inv_matrix(n, max_n=None)
    eye = np.eye(L)

    dual = np.abs(V @ W.T - eye).max()
    out.append(Check("duality <v_a,w_b>=delta", n, dual <= 1e-12, dual, 1e-12))

    consist = np.abs(V - Hinv @ W).max()
    out.append(Check("v = sum H^-1 w", n, consist <= 1e-12, consist, 1e-12))

    inv = np.abs(H @ Hinv - eye).max()
    out.append(Check("H H^-1 = I", n, inv <= 1e-10, inv, 1e-10))

    vals = np.linalg.eigvalsh(H)
    top = abs(vals[-1] - 2 * n)
    ones_res = np.abs(H @ np.ones(L) - 2 * n).max()
    out.append(Check("lambda_max(H) = 2n", n, top <= 1e-9 and ones_res == 0.0,
                     max(top, ones_res), 1e-9))
    out.append(Check("lambda_min(H) >= 1", n, vals[0] >= 1 - 1e-12, vals[0], 1.0))

    inv_top = np.linalg.eigvalsh(Hinv)[-1]
    out.append(Check("lambda_max(H^-1) <= 1", n, inv_top <= 1 + 1e-12, inv_top, 1.0))

    expected = 2 - 15 / (2 * n) + 8 / n**2
    rows = np.abs(np.abs(Hinv).sum(axis=1) - expected).max()
    out.append(Check("row sums |H^-1|", n, rows <= 1e-12, rows, 1e-12))

    Ws = Wi.reshape(L, n, n)
    sq = np.einsum("kij,kjl->il", Ws, Ws)
    target = 2 * n * np.eye(n, dtype=np.int64) - 2 * np.ones((n, n), dtype=np.int64)
    exact = int(np.abs(sq - target).max())
    out.append(Check("sum w_a^2 = 2nI - 2 11^T", n, exact == 0, float(exact), 0.0))

    rng = make_rng(seed + n)
    X = random_centered_symmetric(n, n_random, rng).reshape(n_random, n * n)
    fro = (X * X).sum(axis=1)
    sw = ((X @ W.T) ** 2).sum(axis=1)
    sv = ((X @ V.T) ** 2).sum(axis=1)
    slack = 1e-12 * fro
    ok_w = np.all(sw >= fro - slack) and np.all(sw <= 2 * n * fro + slack)
    ok_v = np.all(sv >= fro / (2 * n) - slack) and np.all(sv <= fro + slack)
    worst = float(max((fro - sw).max(), (sw - 2 * n * fro).max(),
                      (fro / (2 * n) - sv).max(), (sv - fro).max()))
    out.append(Check("norm sandwich (w and v)", n, bool(ok_w and ok_v), worst, 0.0))

    # the fast pair-wise inner product agrees with the vectorized basis
    Xm = X[0].reshape(n, n)
    agree = np.abs(inner_w_all(Xm, all_pairs(n)) - W @ X[0]).max()
    out.append(Check("inner_w vs dense w", n, agree <= 1e-12, agree, 1e-12))
    return out


def run_identity_suite(ns=range(3, 13), *, n_random: int = 100, seed: int = 0) -> list[Check]:
    checks = []
    for n in ns:
        checks.extend(check_n(n, n_random=n_random, seed=seed))
    return checks
