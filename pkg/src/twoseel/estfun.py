"""Estimating functions and two-sample data containers.

An estimating function ``g(z, theta)`` is vectorised over observations: ``z``
may be a single observation of shape ``(d,)`` or a stack ``(k, d)``, and the
result has shape ``(q,)`` or ``(k, q)`` respectively. The Jacobian with
respect to ``theta`` has shape ``(..., q, p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InputError, InsufficientData

__all__ = [
    "EstimatingFunction",
    "TwoSampleData",
    "gini_data",
    "gini_ef",
    "gini_pairs",
    "mean_ef",
    "regression_ef",
]


@dataclass(frozen=True)
class EstimatingFunction:
    name: str
    d: int
    p: int
    q: int
    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray, np.ndarray], np.ndarray]
    start: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    """Optional closed-form (or good) starting value for the MELE of a sample."""
    support: Callable[[np.ndarray], tuple[float, float]] | None = field(default=None, compare=False)
    """For scalar ``g`` monotone in ``theta``: the open interval of ``theta``
    whose estimating equation a positively weighted sample can satisfy."""

    def __post_init__(self):
        if self.p != self.q:
            raise DomainError(f"only just-determined functions are supported (p={self.p}, q={self.q})")

    def __call__(self, z, theta):
        return self.eval(np.asarray(z, dtype=float), np.asarray(theta, dtype=float))


def mean_ef(dim: int = 1) -> EstimatingFunction:
    """``g(z, theta) = z - theta``; the MELE is the sample mean."""
    if dim < 1:
        raise DomainError("dim must be positive")
    eye = np.eye(dim)

    def g(z, theta):
        return z - theta

    def jac(z, theta):
        return np.broadcast_to(-eye, z.shape[:-1] + (dim, dim))

    support = None
    if dim == 1:
        def support(Z):
            return float(Z.min()), float(Z.max())

    return EstimatingFunction("mean", dim, dim, dim, g, jac, start=lambda Z: Z.mean(axis=0), support=support)


def gini_pairs(raw, min_pairs: int = 1) -> np.ndarray:
    """Pair incomes ``i`` and ``k//2 + i`` into ``(T, Z)`` rows.

    ``T`` is the pair mean and ``Z`` the pair minimum. With an odd number of
    observations the last one is unused. Fewer than ``min_pairs`` pairs
    raises :class:`InsufficientData`.
    """
    raw = np.asarray(raw, dtype=float).ravel()
    if raw.size < 2:
        raise InsufficientData("need at least two incomes to form a pair")
    if not np.all(np.isfinite(raw)) or np.any(raw < 0):
        raise InputError("incomes must be finite and non-negative")
    h = raw.size // 2
    a, b = raw[:h], raw[h:2 * h]
    pairs = np.column_stack([(a + b) / 2.0, np.minimum(a, b)])
    if h < min_pairs:
        raise InsufficientData(f"{h} pair(s) formed, need at least {min_pairs}")
    return pairs


def gini_ef() -> EstimatingFunction:
    """``g((T, Z), theta) = T - Z - T * theta`` for the Gini index."""

    def g(z, theta):
        t = z[..., 0]
        return (t - z[..., 1] - t * theta[0])[..., None]

    def jac(z, theta):
        return -z[..., 0][..., None, None]

    def start(Z):
        return np.array([np.sum(Z[:, 0] - Z[:, 1]) / np.sum(Z[:, 0])])

    def support(Z):
        # each pair's own root is 1 - Z/T; pairs with T = 0 never constrain theta
        t = Z[:, 0]
        r = 1.0 - Z[t > 0, 1] / t[t > 0]
        if r.size == 0:
            return -np.inf, np.inf
        return float(r.min()), float(r.max())

    return EstimatingFunction("gini", 2, 1, 1, g, jac, start=start, support=support)


def regression_ef(dim_x: int = 2) -> EstimatingFunction:
    """Least-squares score ``g((x, y), beta) = x (y - x'beta)``.

    Observations are rows ``(x_1, ..., x_k, y)``; an intercept, if wanted,
    must be present as a column of ones.
    """
    if dim_x < 1:
        raise DomainError("dim_x must be positive")

    def g(z, beta):
        x = z[..., :-1]
        r = z[..., -1] - x @ beta
        return x * r[..., None]

    def jac(z, beta):
        x = z[..., :-1]
        return -(x[..., :, None] * x[..., None, :])

    def start(Z):
        return np.linalg.lstsq(Z[:, :-1], Z[:, -1], rcond=None)[0]

    return EstimatingFunction("regression", dim_x + 1, dim_x, dim_x, g, jac, start=start)


class TwoSampleData:
    """The X sample (``m`` rows) and Y sample (``n`` rows).

    ``N = m + n``, ``f_m = N / m``, ``f_n = N / n``. The parameter of interest
    is ``theta_y - theta_x``.
    """

    def __init__(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
            raise InputError(f"samples must be 2-D with equal column counts, got {X.shape} and {Y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InputError("samples contain non-finite values")
        self.X = X
        self.Y = Y
        self.m = X.shape[0]
        self.n = Y.shape[0]
        self.N = self.m + self.n
        self.f_m = self.N / self.m
        self.f_n = self.N / self.n

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def larger(self) -> str:
        return "x" if self.m >= self.n else "y"

    def check(self, ef: EstimatingFunction) -> None:
        if self.d != ef.d:
            raise InputError(f"observations have {self.d} columns, {ef.name} expects {ef.d}")
        if min(self.m, self.n) <= ef.q:
            raise InsufficientData(
                f"sample sizes (m={self.m}, n={self.n}) must both exceed q={ef.q}"
            )

    def __repr__(self):
        return f"TwoSampleData(m={self.m}, n={self.n}, d={self.d})"


def gini_data(raw_x, raw_y) -> TwoSampleData:
    """Two-sample Gini data; the EL works on pair counts ``m // 2`` and ``n // 2``."""
    # the pairs must outnumber q = 1
    return TwoSampleData(gini_pairs(raw_x, min_pairs=2), gini_pairs(raw_y, min_pairs=2))
