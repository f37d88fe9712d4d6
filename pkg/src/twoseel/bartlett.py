"""Plug-in estimate of the two-sample Bartlett correction factor.

With ``V1 = f_n cov g(Y)``, ``V2 = f_m cov g(X)``, ``V = V1 + V2`` and
``W = V1 V^{-1} V2``, residuals are standardised as ``z = V^{-1/2} g`` and
the signed moment arrays are

    s^{t1..tl} = f_n^{l-1} mean_j(z_j^t1 ... z_j^tl) + (-1)^l f_m^{l-1} mean_i(z_i^t1 ... z_i^tl).

The factor is

    eta = -1/(3d) s^{tuw} s^{tuw} + 1/(2d) s^{ttuu} + (f_m f_n / d) tr(V^{-1/2} W V^{-1/2}).

Population moments are replaced by sample moments at the MELEs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import inv_sqrt
from .oel import ProfileSolution, TwoSampleEL

__all__ = [
    "BartlettEstimate",
    "MomentArrays",
    "bartlett_factor",
    "bel_loglik",
    "estimate_eta",
    "moment_arrays",
]

ESTIMATORS = ("plugin",)


@dataclass(frozen=True)
class MomentArrays:
    V1: np.ndarray
    V2: np.ndarray
    V: np.ndarray
    W: np.ndarray
    Vinvsqrt: np.ndarray
    s3: np.ndarray
    s4_contracted: float
    f_m: float
    f_n: float


@dataclass(frozen=True)
class BartlettEstimate:
    eta: float
    term_cubic: float
    term_quartic: float
    term_trace: float
    arrays: MomentArrays | None = None


def moment_arrays(problem: TwoSampleEL, theta_x=None, theta_y=None) -> MomentArrays:
    """Sample moment arrays at ``(theta_x, theta_y)`` (the MELEs by default)."""
    ef, d = problem.ef, problem.data
    theta_x = problem.theta_x_tilde if theta_x is None else np.asarray(theta_x, dtype=float)
    theta_y = problem.theta_y_tilde if theta_y is None else np.asarray(theta_y, dtype=float)
    gy = ef.eval(d.Y, theta_y)
    gx = ef.eval(d.X, theta_x)
    cy = gy - gy.mean(axis=0)
    cx = gx - gx.mean(axis=0)
    V1 = d.f_n * (cy.T @ cy) / d.n
    V2 = d.f_m * (cx.T @ cx) / d.m
    V = V1 + V2
    M = inv_sqrt(V)
    W = V1 @ np.linalg.solve(V, V2)
    zy = gy @ M
    zx = gx @ M
    s3 = (d.f_n ** 2 * np.einsum("ja,jb,jc->abc", zy, zy, zy) / d.n
          - d.f_m ** 2 * np.einsum("ia,ib,ic->abc", zx, zx, zx) / d.m)
    ry = np.sum(zy * zy, axis=1)
    rx = np.sum(zx * zx, axis=1)
    s4 = d.f_n ** 3 * np.mean(ry * ry) + d.f_m ** 3 * np.mean(rx * rx)
    return MomentArrays(V1, V2, V, W, M, s3, float(s4), d.f_m, d.f_n)


def bartlett_factor(arrays: MomentArrays, d: int) -> BartlettEstimate:
    """Combine the moment arrays into the correction factor ``eta``."""
    cubic = -float(np.sum(arrays.s3 * arrays.s3)) / (3.0 * d)
    quartic = arrays.s4_contracted / (2.0 * d)
    M = arrays.Vinvsqrt
    trace = arrays.f_m * arrays.f_n * float(np.trace(M @ arrays.W @ M)) / d
    return BartlettEstimate(cubic + quartic + trace, cubic, quartic, trace, arrays)


def estimate_eta(problem: TwoSampleEL, estimator: str = "plugin") -> BartlettEstimate:
    """Bartlett factor for ``problem``, cached on the problem object."""
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown eta estimator {estimator!r}; available: {ESTIMATORS}")
    cache = problem.__dict__.setdefault("_bartlett", {})
    if estimator not in cache:
        cache[estimator] = bartlett_factor(moment_arrays(problem), problem.p)
    return cache[estimator]


def bel_scale(eta: float, N: int) -> float:
    """Multiplier ``1 - eta/N``; non-positive values fall back to 1 with a warning."""
    scale = 1.0 - eta / N
    if scale <= 0.0:
        warnings.warn(f"1 - eta/N = {scale:.3g} is not positive; Bartlett correction skipped",
                      RuntimeWarning, stacklevel=3)
        return 1.0
    return scale


def bel_loglik(problem: TwoSampleEL, pi, eta: float | None = None,
               warm_start: ProfileSolution | None = None) -> float:
    """Bartlett-corrected log-likelihood ratio ``l(pi) (1 - eta/N)``.

    Outside the OEL domain this is ``+inf``.
    """
    sol = problem.solve(pi, warm_start)
    if eta is None:
        eta = estimate_eta(problem).eta
    if not sol.interior:
        return sol.loglik
    return sol.loglik * bel_scale(eta, problem.N)
