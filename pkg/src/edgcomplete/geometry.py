"""Conversions between point clouds, squared distance matrices and Gram matrices.

Distances are squared everywhere in this module: ``D[i, j] = ||p_i - p_j||**2``.
Gram matrices are centered, i.e. ``G @ 1 = 0``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import orthogonal_procrustes

from ._validation import check_distance_matrix, check_points, check_positive_int, check_square


def centering_matrix(n: int) -> np.ndarray:
    """The geometric centering matrix ``J = I - (1/n) 11^T``."""
    return np.eye(n) - np.full((n, n), 1.0 / n)


def _double_center(A: np.ndarray) -> np.ndarray:
    # J A J without forming J
    A = A - A.mean(axis=0, keepdims=True)
    return A - A.mean(axis=1, keepdims=True)


def distance_matrix_from_points(points) -> np.ndarray:
    """Squared Euclidean distance matrix of a point cloud.

    Parameters
    ----------
    points : array-like of shape (n, d)

    Returns
    -------
    D : ndarray of shape (n, n)
        Symmetric, hollow, nonnegative.
    """
    X = check_points(points)
    diff = X[:, None, :] - X[None, :, :]
    D = np.einsum("ijk,ijk->ij", diff, diff)
    # exact symmetry and hollowness by construction
    D = np.triu(D, 1)
    return D + D.T


def center_gram_from_points(points) -> np.ndarray:
    """Gram matrix ``(JP)(JP)^T`` of the centered point cloud."""
    X = check_points(points)
    Xc = X - X.mean(axis=0, keepdims=True)
    G = Xc @ Xc.T
    return 0.5 * (G + G.T)


def gram_from_distances(D) -> np.ndarray:
    """Classical Gower/Schoenberg transform ``-1/2 J D J``.

    Non-EDM inputs are accepted; the output is then indefinite. Use
    :func:`is_edm` to test realizability.
    """
    D = check_distance_matrix(D)
    G = -0.5 * _double_center(D)
    return 0.5 * (G + G.T)


def is_edm(D, tol: float = 1e-9) -> bool:
    """True when ``-1/2 J D J`` has no eigenvalue below ``-tol``."""
    G = gram_from_distances(D)
    if G.shape[0] == 1:
        return True
    return bool(np.linalg.eigvalsh(G)[0] >= -tol)


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    # first entry that is not numerically zero is made positive, column by column
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        thresh = 1e-12 * max(1.0, np.abs(col).max(initial=0.0))
        nz = np.flatnonzero(np.abs(col) > thresh)
        if nz.size and col[nz[0]] < 0:
            out[:, k] = -col
    return out


def sorted_eigh(G) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition, eigenvalues descending, signs normalized."""
    G = np.asarray(G, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (G + G.T))
    order = np.argsort(-vals, kind="stable")
    return vals[order], _sign_fix(vecs[:, order])


def mds_embed(G, d: int, *, return_info: bool = False):
    """Classical MDS coordinates from a Gram matrix.

    Coordinates are ``U_d diag(sqrt(max(lambda_d, 0)))`` built from the top
    ``d`` eigenpairs. Negative eigenvalues are clamped to zero rather than
    rejected, since completed Gram matrices from noisy data are often slightly
    indefinite.

    Parameters
    ----------
    G : array-like of shape (n, n)
        Symmetric Gram matrix.
    d : int
        Embedding dimension, ``1 <= d <= n``.
    return_info : bool, default=False
        Also return a dict with the top-``d`` eigenvalues and the clamped
        (negative) spectral mass of ``G``.

    Returns
    -------
    coords : ndarray of shape (n, d)
    info : dict, optional
    """
    G = check_square(G, name="G", atol=1e-8)
    n = G.shape[0]
    d = check_positive_int(d, "d")
    if d > n:
        raise ValueError(f"embedding dimension d={d} exceeds n={n}")
    vals, vecs = sorted_eigh(G)
    top = vals[:d]
    coords = vecs[:, :d] * np.sqrt(np.clip(top, 0.0, None))
    if not return_info:
        return coords
    info = {
        "eigenvalues": top,
        "clamped_mass": float(-vals[vals < 0].sum()),
        "clamped_in_embedding": float(-top[top < 0].sum()),
    }
    return coords, info


def procrustes_align(A, B) -> tuple[np.ndarray, float]:
    """Rigidly align ``A`` onto ``B`` (rotation, reflection and translation).

    Returns the aligned copy of ``A`` expressed in the frame of ``B`` and the
    root-mean-square deviation per point.
    """
    A = check_points(A, name="A")
    B = check_points(B, name="B")
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    a_mean = A.mean(axis=0)
    b_mean = B.mean(axis=0)
    Ac = A - a_mean
    Bc = B - b_mean
    Q, _ = orthogonal_procrustes(Ac, Bc)
    aligned = Ac @ Q + b_mean
    rmsd = float(np.sqrt(np.sum((aligned - B) ** 2) / A.shape[0]))
    return aligned, rmsd


def relative_gram_error(X, M) -> float:
    """``||X - M||_F / ||M||_F``."""
    X = np.asarray(X, dtype=float)
    M = np.asarray(M, dtype=float)
    if X.shape != M.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {M.shape}")
    ref = np.linalg.norm(M)
    if ref == 0.0:
        raise ValueError("reference matrix has zero norm")
    return float(np.linalg.norm(X - M) / ref)
