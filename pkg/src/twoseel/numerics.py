"""Small dense kernels shared by the statistical modules.

Everything here works on tiny problems (dimension 1 to 4, systems of at most
eight unknowns), so the implementations favour robustness and low per-call
overhead over asymptotic speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NonFinite, NotPositiveDefinite, SingularJacobian

__all__ = [
    "NewtonOptions",
    "NewtonResult",
    "chisq_cdf",
    "chisq_quantile",
    "inv_sqrt",
    "newton_solve",
    "regularized_lower_gamma",
]

_EIG_FLOOR = 1e-10
_SYM_RTOL = 1e-12
_COND_MAX = 1e12


def _check_symmetric(V: np.ndarray) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {V.shape}")
    scale = max(np.max(np.abs(V)), np.finfo(float).tiny)
    if np.max(np.abs(V - V.T)) > _SYM_RTOL * scale:
        raise DomainError("matrix is not symmetric")
    return V


def inv_sqrt(V) -> np.ndarray:
    """Symmetric inverse square root ``M`` with ``M @ V @ M == I``.

    Raises :class:`NotPositiveDefinite` when the smallest eigenvalue is not
    above ``1e-10`` times the largest.
    """
    V = _check_symmetric(V)
    w, Q = np.linalg.eigh(0.5 * (V + V.T))
    if w[-1] <= 0 or w[0] <= _EIG_FLOOR * w[-1]:
        raise NotPositiveDefinite(
            f"eigenvalues in [{w[0]:.3g}, {w[-1]:.3g}] violate the definiteness floor"
        )
    M = (Q / np.sqrt(w)) @ Q.T
    return 0.5 * (M + M.T)


# -- chi-square quantiles ----------------------------------------------------

def _gamma_series(a: float, x: float) -> float:
    # P(a, x) by the power series; converges fast for x < a + 1.
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a: float, x: float) -> float:
    # Q(a, x) by the Lentz continued fraction; used for x >= a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma function ``P(a, x)``."""
    if a <= 0:
        raise DomainError("shape parameter must be positive")
    if x < 0:
        raise DomainError("argument must be non-negative")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(_gamma_series(a, x), 1.0)
    return max(1.0 - _gamma_contfrac(a, x), 0.0)


def chisq_cdf(x: float, df: int) -> float:
    if x <= 0:
        return 0.0
    return regularized_lower_gamma(0.5 * df, 0.5 * x)


def chisq_quantile(df: int, prob: float) -> float:
    """The ``prob`` quantile of the chi-square distribution with ``df`` degrees of freedom.

    Bisection on :func:`chisq_cdf`; the result satisfies
    ``|chisq_cdf(c, df) - prob| < 1e-10``.
    """
    if int(df) != df or df < 1:
        raise DomainError(f"df must be a positive integer, got {df!r}")
    if not 0.0 < prob < 1.0:
        raise DomainError(f"prob must lie in (0, 1), got {prob!r}")
    lo, hi = 0.0, max(1.0, float(df))
    while chisq_cdf(hi, df) < prob:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if chisq_cdf(mid, df) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- damped Newton -----------------------------------------------------------

@dataclass(frozen=True)
class NewtonOptions:
    max_iters: int = 50
    tol: float = 1e-10
    max_backtracks: int = 30
    min_step: float = 2.0 ** -30

    def __post_init__(self):
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise DomainError("max_iters and max_backtracks must be positive")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if not 0.0 < self.min_step < 1.0:
            raise DomainError("min_step must lie in (0, 1)")


@dataclass
class NewtonResult:
    x: np.ndarray
    converged: bool
    iters: int
    fnorm: float
    stalled: bool = False
    """True when the line search could not reduce the residual."""


def newton_solve(
    F: Callable[[np.ndarray], np.ndarray],
    J: Callable[[np.ndarray], np.ndarray],
    x0,
    opts: NewtonOptions | None = None,
    feasible: Callable[[np.ndarray], bool] | None = None,
) -> NewtonResult:
    """Solve ``F(x) = 0`` by Newton's method with step halving.

    Each step is halved until the trial point is ``feasible`` and the
    residual 2-norm decreases, for at most ``opts.max_backtracks`` halvings.
    Convergence is declared on the infinity norm of the residual.

    ``J`` is always evaluated at a point where ``F`` was just evaluated, so
    callers may cache intermediate quantities between the two.
    """
    opts = opts or NewtonOptions()
    x = np.array(x0, dtype=float)
    f = np.asarray(F(x), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NonFinite("residual is not finite at the starting point")
    fnorm2 = float(f @ f)
    for it in range(opts.max_iters + 1):
        fmax = float(np.abs(f).max())
        if fmax <= opts.tol:
            return NewtonResult(x, True, it, fmax)
        if it == opts.max_iters:
            break
        Jx = np.asarray(J(x), dtype=float)
        if not np.all(np.isfinite(Jx)):
            raise NonFinite("Jacobian is not finite")
        try:
            Jinv = np.linalg.inv(Jx)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from None
        cond = np.abs(Jx).sum(axis=0).max() * np.abs(Jinv).sum(axis=0).max()
        if not cond < _COND_MAX:
            raise SingularJacobian(f"condition estimate {cond:.3g} exceeds {_COND_MAX:.0e}")
        dx = -(Jinv @ f)
        step = 1.0
        for _ in range(opts.max_backtracks):
            trial = x + step * dx
            if feasible is None or feasible(trial):
                ft = np.asarray(F(trial), dtype=float)
                if np.all(np.isfinite(ft)):
                    fn2 = float(ft @ ft)
                    if fn2 < fnorm2:
                        x, f, fnorm2 = trial, ft, fn2
                        break
            step *= 0.5
            if step < opts.min_step:
                return NewtonResult(x, False, it, fmax, stalled=True)
        else:
            return NewtonResult(x, False, it, fmax, stalled=True)
    return NewtonResult(x, False, opts.max_iters, float(np.max(np.abs(f))))


def bisect(
    f: Callable[[float], float], lo: float, hi: float, ftol: float, xtol: float = 0.0, maxiter: int = 200
) -> tuple[float, float]:
    """Bisection on a bracket with ``f(lo) < 0 <= f(hi)``.

    Works for discontinuous ``f`` (for example one that jumps to ``+inf``):
    only the sign is used for bracketing. Stops when ``|f| < ftol`` at the
    midpoint or the bracket is narrower than ``xtol``. Returns ``(x, f(x))``
    for the best point found.
    """
    best = (hi, math.inf)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= min(lo, hi) or mid >= max(lo, hi):
            break
        fm = f(mid)
        if abs(fm) < abs(best[1]):
            best = (mid, fm)
        if abs(fm) < ftol:
            return mid, fm
        if fm < 0:
            lo = mid
        else:
            hi = mid
        if abs(hi - lo) <= xtol:
            break
    return best
