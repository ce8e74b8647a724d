"""Uniform pair sampling and the Gaussian corruption model for noisy runs."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_distance_matrix, check_positive_int
from .basis import ObservationSet, all_pairs, n_pairs

RNG_NAME = "numpy.PCG64"

CLAMP_POLICIES = ("clamp", "redraw", "none")


def make_rng(seed) -> np.random.Generator:
    """A PCG64 generator; ``Generator`` instances are passed through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def trial_seed(seed: int, trial: int) -> int:
    """Seed for trial ``trial`` of a batch: ``seed XOR trial``.

    Independent of execution order, so parallel batches reproduce serial ones.
    """
    return int(seed) ^ int(trial)


def sample_pairs(n: int, m: int, *, with_replacement: bool = True,
                 seed=None) -> np.ndarray:
    """Draw ``m`` pairs uniformly from the ``L = n(n-1)/2`` off-diagonal pairs.

    Returns an (m, 2) array of 0-based pairs ``i < j`` in draw order.
    """
    n = check_positive_int(n, "n", minimum=2)
    m = check_positive_int(m, "m")
    L = n_pairs(n)
    rng = make_rng(seed)
    if with_replacement:
        idx = rng.integers(0, L, size=m)
    else:
        if m > L:
            raise ValueError(f"cannot draw m={m} distinct pairs from L={L}")
        idx = rng.choice(L, size=m, replace=False)
    return all_pairs(n)[idx]


def observe(D, pairs, *, with_replacement: bool = True) -> ObservationSet:
    """Read the squared distances of ``D`` at ``pairs``."""
    D = check_distance_matrix(D)
    pairs = np.asarray(pairs)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"pairs must have shape (m, 2), got {pairs.shape}")
    n = D.shape[0]
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise IndexError(f"pair index out of range for n={n}")
    return ObservationSet(n, pairs, D[pairs[:, 0], pairs[:, 1]],
                          with_replacement=with_replacement)


def sample_observations(D, rate: float, *, with_replacement: bool = True,
                        seed=None) -> ObservationSet:
    """Observe ``round(rate * L)`` uniformly drawn entries of ``D`` (at least one)."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"sampling rate must lie in (0, 1], got {rate}")
    n = np.asarray(D).shape[0]
    m = max(1, int(round(rate * n_pairs(n))))
    pairs = sample_pairs(n, m, with_replacement=with_replacement, seed=seed)
    return observe(D, pairs, with_replacement=with_replacement)


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian noise ``N(mu, sigma)`` on observed squared distances.

    ``clamp`` sets negative corrupted values to zero, ``redraw`` redraws the
    noise for those entries until nonnegative, ``none`` leaves them.
    """

    mu: float
    sigma: float
    clamp: str = "clamp"

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma)):
            raise ValueError("mu and sigma must be finite")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.clamp not in CLAMP_POLICIES:
            raise ValueError(f"clamp must be one of {CLAMP_POLICIES}, got {self.clamp!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def derive_noise_model(obs: ObservationSet, *, clamp: str = "clamp") -> NoiseModel:
    """``sigma`` = smallest positive observed value, ``mu = 3 sigma``."""
    vals = np.asarray(obs.values)
    pos = vals[vals > 0]
    if pos.size == 0:
        raise ValueError("no positive observation to derive a noise level from")
    sigma = float(pos.min())
    return NoiseModel(mu=3.0 * sigma, sigma=sigma, clamp=clamp)


_MAX_REDRAWS = 1000


def corrupt(obs: ObservationSet, model: NoiseModel, seed=None) -> ObservationSet:
    """Add i.i.d. ``N(mu, sigma)`` noise to every observed value."""
    rng = make_rng(seed)
    vals = np.asarray(obs.values, dtype=float)
    noisy = vals + rng.normal(model.mu, model.sigma, size=vals.shape)
    n_negative = int(np.count_nonzero(noisy < 0))
    if model.clamp == "clamp":
        noisy = np.maximum(noisy, 0.0)
    elif model.clamp == "redraw":
        for _ in range(_MAX_REDRAWS):
            bad = noisy < 0
            if not bad.any():
                break
            noisy[bad] = vals[bad] + rng.normal(model.mu, model.sigma, size=int(bad.sum()))
        else:
            raise RuntimeError("redraw policy failed to produce nonnegative values")
    out = obs.with_values(noisy)
    out.meta.update(noise=model.to_dict(), n_negative_before_clamp=n_negative)
    return out
