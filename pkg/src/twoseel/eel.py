"""Extended empirical likelihood via the composite similarity mapping.

The mapping ``h(pi) = pi_tilde + gamma(N, l(pi)) (pi - pi_tilde)`` moves each
point of the OEL domain outward along its ray from the MELE. The extended
statistic at ``pi`` is ``l`` evaluated at the preimage of ``pi``. Because
``h`` preserves rays, inversion reduces to a scalar root-find in the ray
parameter ``t``:

    phi(t) = t * gamma(N, l(pi_tilde + t (pi - pi_tilde))) = 1.
"""

from __future__ import annotations

import bisect as _bisect
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bartlett import estimate_eta
from .errors import DomainError, ExteriorInput, MaxItersReached
from .oel import DomainStatus, ProfileSolution, TwoSampleEL

__all__ = [
    "MappingConfig",
    "RayInversion",
    "eel_loglik",
    "forward_map",
    "gamma1",
    "gamma2",
    "inverse_map",
    "ray_monotonicity_diagnostic",
]

GRID_POINTS = 64
BOUNDARY_BISECTIONS = 12
EDGE_BISECTIONS = 40
PHI_TOL = 1e-10
# stand-in for l where a solve fails inside the scanned segment: the thin
# shell at the domain edge, where l is unbounded for practical purposes
L_EDGE = float(np.finfo(float).max)


def gamma1(N: int, l: float) -> float:
    """First-order expansion factor ``1 + l / (2N)``."""
    if l < 0:
        raise DomainError("log-likelihood ratio must be non-negative")
    return 1.0 + l / (2.0 * N)


def gamma2(N: int, l: float, eta: float, delta: float) -> float:
    """Second-order expansion factor ``1 + eta / (2N) * l**delta``, with ``0**delta = 0``."""
    if l < 0:
        raise DomainError("log-likelihood ratio must be non-negative")
    if l == 0.0:
        return 1.0
    return 1.0 + eta / (2.0 * N) * l ** delta


@dataclass(frozen=True)
class MappingConfig:
    order: int = 1
    eta: float | None = None
    delta: float | None = None
    """Exponent of ``l`` in the second-order factor; defaults to ``n**-0.5``
    with ``n`` the smaller sample size."""

    def __post_init__(self):
        if self.order not in (1, 2):
            raise DomainError(f"order must be 1 or 2, got {self.order!r}")
        if self.eta is not None and not math.isfinite(self.eta):
            raise DomainError("eta must be finite")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise DomainError("delta must lie in (0, 1)")

    def resolve(self, problem: TwoSampleEL) -> MappingConfig:
        """Fill in ``eta`` and ``delta`` from the data when they are not given."""
        if self.order == 1:
            return self
        eta = estimate_eta(problem).eta if self.eta is None else self.eta
        delta = problem.n_small ** -0.5 if self.delta is None else self.delta
        return MappingConfig(2, eta, delta)

    def gamma(self, N: int, l: float) -> float:
        if self.order == 1:
            return gamma1(N, l)
        return gamma2(N, l, self.eta, self.delta)


EEL1 = MappingConfig(1)


@dataclass
class RayInversion:
    t_star: float
    pi_prime: np.ndarray
    l_at_prime: float
    residual: float
    t_max: float = 1.0
    no_preimage: bool = False


def forward_map(problem: TwoSampleEL, pi, cfg: MappingConfig = EEL1,
                warm_start: ProfileSolution | None = None) -> np.ndarray:
    """``h(pi)``; ``pi`` must lie in the OEL domain."""
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    sol = problem.solve(pi, warm_start)
    if not sol.interior:
        raise ExteriorInput(f"pi = {pi} is outside the OEL domain ({sol.status.value})")
    cfg = cfg.resolve(problem)
    return problem.pi_tilde + cfg.gamma(problem.N, max(sol.loglik, 0.0)) * (pi - problem.pi_tilde)


class _Ray:
    """OEL solutions along ``pi_tilde + t * v``, warm-started from the nearest solved ``t``."""

    def __init__(self, problem: TwoSampleEL, v: np.ndarray):
        self.problem = problem
        self.v = v
        self.ts: list[float] = [0.0]
        self.sols: list[ProfileSolution] = [problem.center]

    def point(self, t: float) -> np.ndarray:
        return self.problem.pi_tilde + t * self.v

    def solve(self, t: float) -> ProfileSolution:
        k = _bisect.bisect_right(self.ts, t) - 1
        if self.ts[k] == t:
            return self.sols[k]
        near = k
        if k + 1 < len(self.ts) and self.ts[k + 1] - t < t - self.ts[k]:
            near = k + 1
        sol = self.problem.solve(self.point(t), warm_start=self.sols[near])
        if not sol.interior and near != k:
            # an anchor hugging the domain edge can strand Newton; come from below
            sol = self.problem.solve(self.point(t), warm_start=self.sols[k])
        if sol.interior:
            self.ts.insert(k + 1, t)
            self.sols.insert(k + 1, sol)
        return sol

    def boundary(self, t_hi: float = 1.0) -> tuple[float, float]:
        """Bracket ``(lo, hi)`` of the domain edge below ``t_hi``: halving scan then bisection.

        ``lo`` is interior; ``hi`` is not, unless ``lo == hi == t_hi``.
        """
        if self.solve(t_hi).interior:
            return t_hi, t_hi
        lo, hi = t_hi / 2.0, t_hi
        for _ in range(60):
            if self.solve(lo).interior:
                break
            lo, hi = lo / 2.0, lo
        else:
            return 0.0, hi
        for _ in range(BOUNDARY_BISECTIONS):
            mid = 0.5 * (lo + hi)
            if self.solve(mid).interior:
                lo = mid
            else:
                hi = mid
        return lo, hi

    def last_interior_below(self, t: float) -> float:
        return self.ts[_bisect.bisect_right(self.ts, t) - 1]

    def loglik(self, t: float) -> float:
        sol = self.solve(t)
        if not sol.interior:
            raise MaxItersReached(
                f"OEL solve failed at t={t:.6g} inside the scanned domain ({sol.status.value})")
        return max(sol.loglik, 0.0)


def inverse_map(problem: TwoSampleEL, pi, cfg: MappingConfig = EEL1) -> RayInversion:
    """Generalised inverse of the composite similarity mapping.

    Searches the segment from the MELE to ``pi``: finds the last feasible ray
    parameter ``t_max``, scans ``phi(t) - 1`` on a 64-point grid over
    ``[0, t_max]`` (from the top down) and refines the last sign change. Among several preimages
    the one with the largest ``t`` (closest to ``pi``) is returned. When
    ``phi`` stays below one the boundary point ``t_max`` is returned with
    ``no_preimage`` set.
    """
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    cfg = cfg.resolve(problem)
    v = pi - problem.pi_tilde
    scale = float(np.linalg.norm(v))
    if scale == 0.0:
        return RayInversion(0.0, problem.pi_tilde.copy(), 0.0, 0.0)
    ray = _Ray(problem, v)
    N = problem.N

    def phi_minus_one(t):
        if t == 0.0:
            return -1.0
        sol = ray.solve(t)
        l = max(sol.loglik, 0.0) if sol.interior else L_EDGE
        return t * cfg.gamma(N, l) - 1.0

    t_max, t_out = ray.boundary(1.0)
    if t_max == 0.0:
        raise MaxItersReached("no feasible point found along the ray")
    grid = t_max * np.arange(GRID_POINTS + 1) / GRID_POINTS
    # walk down from t_max: the first sign change met is the last one on the grid
    vals = [None] * (GRID_POINTS + 1)
    vals[GRID_POINTS] = phi_minus_one(grid[GRID_POINTS])
    crossing = None
    for k in range(GRID_POINTS, 0, -1):
        vals[k - 1] = phi_minus_one(grid[k - 1])
        if (vals[k - 1] < 0.0) != (vals[k] < 0.0):
            crossing = k
            break
    if crossing is None and t_out > t_max:
        # phi may still reach one in the thin shell the coarse boundary
        # search skipped, where l grows without bound
        lo, hi = t_max, t_out
        for _ in range(EDGE_BISECTIONS):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if not ray.solve(mid).interior:
                hi = mid
                continue
            fm = phi_minus_one(mid)
            if fm >= 0.0:
                grid, vals, crossing = [lo, mid], [phi_minus_one(lo), fm], 1
                lo = mid
                break
            lo = mid
        t_max = lo
    if crossing is None:
        l_edge = ray.loglik(t_max)
        return RayInversion(t_max, ray.point(t_max), l_edge,
                            abs(t_max * cfg.gamma(N, l_edge) - 1.0) * scale, t_max, True)
    a, b = grid[crossing - 1], grid[crossing]
    fa, fb = vals[crossing - 1], vals[crossing]
    if fb == 0.0:
        t_star = b
    else:
        t_star = brentq(phi_minus_one, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
        if abs(phi_minus_one(t_star)) >= PHI_TOL:
            # fall back to plain bisection on the refined bracket
            lo, hi = (a, b) if fa < 0 else (b, a)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = phi_minus_one(mid)
                if abs(fm) < PHI_TOL or mid in (lo, hi):
                    break
                lo, hi = (mid, hi) if fm < 0 else (lo, mid)
            t_star = mid
    if not ray.solve(t_star).interior:
        # landed in the edge shell; keep the last solved point below it
        t_star = ray.last_interior_below(t_star)
    l_star = ray.loglik(t_star)
    residual = abs(t_star * cfg.gamma(N, l_star) - 1.0) * scale
    return RayInversion(float(t_star), ray.point(t_star), l_star, residual, t_max)


def eel_loglik(problem: TwoSampleEL, pi, cfg: MappingConfig = EEL1) -> float:
    """Extended log-likelihood ratio; finite for every finite ``pi``."""
    return inverse_map(problem, pi, cfg).l_at_prime


@dataclass
class RayReport:
    direction: np.ndarray
    scan_radius: float
    t_max: float
    t: np.ndarray
    loglik: np.ndarray
    violations: list[int] = field(default_factory=list)
    newton_iters: list[int] = field(default_factory=list)


@dataclass
class MonotonicityReport:
    rays: list[RayReport]

    @property
    def violations(self) -> int:
        return sum(len(r.violations) for r in self.rays)


def _directions(p: int, count: int) -> np.ndarray:
    if p == 1:
        return np.array([[1.0 if k % 2 == 0 else -1.0] for k in range(count)])
    if p == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    u = np.random.default_rng(0).standard_normal((count, p))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def ray_monotonicity_diagnostic(problem: TwoSampleEL, directions: int = 8, points: int = 16,
                                max_doublings: int = 40) -> MonotonicityReport:
    """Empirical check that ``l`` increases outward along rays from the MELE.

    For each ray the scan radius is the first doubling of the standard-error
    scale that leaves the domain; ``l`` is evaluated at ``points`` equally
    spaced radii up to it, stopping at the first exterior point. A violation
    is a point whose ``l`` is below that of the previous point. ``t_max`` is
    the boundary radius as a fraction of the scan radius.
    """
    if directions < 1 or points < 1:
        raise DomainError("directions and points must be positive")
    se = problem.std_error
    reports = []
    for u in _directions(problem.p, directions):
        v = u * se
        ray = _Ray(problem, v)
        R = 1.0
        for _ in range(max_doublings):
            if not ray.solve(R).interior:
                break
            R *= 2.0
        ray_b = _Ray(problem, v * R)
        t_max = ray_b.boundary(1.0)[0]
        ts, ls, its, bad = [], [], [], []
        prev = 0.0
        for k in range(1, points + 1):
            t = k / points
            sol = ray_b.solve(t)
            if sol.status is not DomainStatus.INTERIOR:
                break
            ts.append(t)
            ls.append(sol.loglik)
            its.append(sol.iters)
            if sol.loglik < prev - 1e-9 * max(1.0, prev):
                bad.append(k)
            prev = sol.loglik
        reports.append(RayReport(u, R * float(np.linalg.norm(v)), t_max,
                                 np.array(ts), np.array(ls), bad, its))
    return MonotonicityReport(reports)
