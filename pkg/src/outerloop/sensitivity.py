"""Monte Carlo Sobol indices with Saltelli's A/B/AB sampling scheme."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed, make_rng
from .errors import DegenerateVarianceError, UnsupportedDesignError
from .space import ParameterSpace, sample_uniform


@dataclass(frozen=True)
class SaltelliSample:
    A: np.ndarray
    B: np.ndarray
    AB: tuple  # AB[i] is A with column i taken from B

    @property
    def n_base(self):
        return self.A.shape[0]

    def stacked(self) -> np.ndarray:
        """All n_base * (d + 2) rows: A, B, AB_1, ..., AB_d."""
        return np.vstack([self.A, self.B, *self.AB])

    def split(self, f):
        """Inverse of :meth:`stacked` for a vector of outputs."""
        f = np.asarray(f, dtype=float).ravel()
        n = self.n_base
        return f[:n], f[n:2 * n], f[2 * n:].reshape(len(self.AB), n)


def saltelli_sample(space: ParameterSpace, n_base: int, seed=0) -> SaltelliSample:
    if not space.is_continuous:
        raise UnsupportedDesignError("Sobol analysis needs an all-continuous space")
    if n_base < 2:
        raise ValueError("n_base must be >= 2")
    A = sample_uniform(space, n_base, derive_seed(seed, 0))
    B = sample_uniform(space, n_base, derive_seed(seed, 1))
    AB = []
    for i in range(space.encoded_dim):
        M = A.copy()
        M[:, i] = B[:, i]
        AB.append(M)
    return SaltelliSample(A, B, tuple(AB))


@dataclass(frozen=True)
class SobolResult:
    """First-order and total indices with bootstrap standard errors."""

    first_order: np.ndarray
    total: np.ndarray
    total_variance: float
    sample_count: int
    first_order_err: np.ndarray
    total_err: np.ndarray

    def to_dict(self):
        return {
            "first_order": self.first_order.tolist(),
            "total": self.total.tolist(),
            "first_order_err": self.first_order_err.tolist(),
            "total_err": self.total_err.tolist(),
            "total_variance": self.total_variance,
            "sample_count": self.sample_count,
        }


def _estimate(fA, fB, fAB):
    V = np.var(np.concatenate([fA, fB]), ddof=1)
    Vi = np.mean(fB * (fAB - fA), axis=1)
    VTi = 0.5 * np.mean((fA - fAB) ** 2, axis=1)
    return Vi / V, VTi / V, V


def sobol_indices(fA, fB, fAB, bootstrap=50, seed=0) -> SobolResult:
    """Indices from model outputs on A, B and each AB_i (rows of ``fAB``).

    Estimators: V_i = mean(f_B (f_ABi - f_A)), VT_i = mean((f_A - f_ABi)^2) / 2,
    V = sample variance of f_A and f_B together. Negative estimates are kept.
    """
    fA = np.asarray(fA, dtype=float).ravel()
    fB = np.asarray(fB, dtype=float).ravel()
    fAB = np.atleast_2d(np.asarray(fAB, dtype=float))
    n = fA.size
    if fB.size != n or fAB.shape[1] != n:
        raise ValueError("f_A, f_B and every f_AB_i need the same length")
    both = np.concatenate([fA, fB])
    V = np.var(both, ddof=1)
    if not V > np.finfo(float).eps * max(np.mean(both**2), np.finfo(float).tiny):
        raise DegenerateVarianceError("output variance is zero; Sobol indices are undefined")
    first, total, V = _estimate(fA, fB, fAB)
    if bootstrap:
        rng = make_rng(seed, 7)
        draws = []
        for _ in range(bootstrap):
            idx = rng.integers(n, size=n)
            draws.append(_estimate(fA[idx], fB[idx], fAB[:, idx])[:2])
        draws = np.array(draws)  # bootstrap x 2 x d
        err = draws.std(axis=0, ddof=1)
    else:
        err = np.full((2, fAB.shape[0]), np.nan)
    return SobolResult(first, total, float(V), n * (fAB.shape[0] + 2), err[0], err[1])


def sobol_analysis(function, space: ParameterSpace, n_base: int, seed=0) -> SobolResult:
    """Indices of ``function`` (batch callable returning a vector) over the space."""
    sample = saltelli_sample(space, n_base, seed)
    f = np.asarray(function(sample.stacked()), dtype=float).ravel()
    return sobol_indices(*sample.split(f), seed=seed)


def emulator_sobol(model, space: ParameterSpace, n_base: int, seed=0) -> SobolResult:
    """Same estimator applied to the emulator's posterior mean."""
    return sobol_analysis(lambda X: model.predict(X).mean, space, n_base, seed)
