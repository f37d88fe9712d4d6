"""Confidence intervals, 2-D region contours and the coverage predicate.

A region at level ``1 - alpha`` is ``{pi : stat(pi) <= c_alpha}`` with
``c_alpha`` the chi-square quantile on ``p`` degrees of freedom. Boundaries
are located by doubling outward from the MELE and then bisecting, since the
OEL statistic jumps to ``+inf`` at the edge of its domain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .bartlett import bel_scale, estimate_eta
from .eel import EEL1, MappingConfig, _Ray, eel_loglik
from .errors import BracketFailure, DomainError, MaxItersReached
from .numerics import bisect, chisq_quantile
from .oel import DomainStatus, ProfileSolution, TwoSampleEL

__all__ = [
    "ConfidenceInterval",
    "MethodId",
    "REPORT_ORDER",
    "RegionContour",
    "confidence_interval",
    "covers",
    "region_contour_2d",
    "statistic",
    "statistics_at",
]

STAT_TOL = 1e-6
MAX_DOUBLINGS = 64


class MethodId(enum.Enum):
    OEL = "OEL"
    BEL = "BEL"
    EEL1 = "EEL1"
    EEL2 = "EEL2"

    @classmethod
    def parse(cls, name: str) -> MethodId:
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise DomainError(f"unknown method {name!r}; choose from {[m.value for m in cls]}") from None


# column order of coverage reports
REPORT_ORDER = (MethodId.OEL, MethodId.EEL1, MethodId.BEL, MethodId.EEL2)

EEL2 = MappingConfig(2)


def _oel(problem: TwoSampleEL, pi, warm_start=None) -> tuple[float, ProfileSolution]:
    sol = problem.solve(pi, warm_start)
    if sol.status is DomainStatus.MAX_ITERS:
        raise MaxItersReached(f"OEL solve did not converge at pi = {sol.pi}")
    return sol.loglik, sol


def statistic(method: MethodId, problem: TwoSampleEL, pi) -> float:
    """Log-likelihood ratio of ``method`` at ``pi``.

    OEL and BEL are ``+inf`` outside the OEL domain; EEL1 and EEL2 are finite
    everywhere. Solver failures raise :class:`SolverError`.
    """
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    if not np.all(np.isfinite(pi)):
        raise DomainError("pi must be finite")
    if method is MethodId.OEL:
        return _oel(problem, pi)[0]
    if method is MethodId.BEL:
        l, _ = _oel(problem, pi)
        if not math.isfinite(l):
            return l
        return l * bel_scale(estimate_eta(problem).eta, problem.N)
    cfg = EEL1 if method is MethodId.EEL1 else EEL2
    return eel_loglik(problem, pi, cfg)


def statistics_at(problem: TwoSampleEL, pi, methods) -> dict[MethodId, float]:
    """All requested statistics at one point, sharing the OEL solve between OEL and BEL."""
    out = {}
    l = None
    for method in methods:
        if method in (MethodId.OEL, MethodId.BEL):
            if l is None:
                l = statistic(MethodId.OEL, problem, pi)
            if method is MethodId.OEL or not math.isfinite(l):
                out[method] = l
            else:
                out[method] = l * bel_scale(estimate_eta(problem).eta, problem.N)
        else:
            out[method] = statistic(method, problem, pi)
    return out


def _critical(p: int, level: float) -> float:
    if not 0.5 < level < 0.9999:
        raise DomainError(f"level must lie in (0.5, 0.9999), got {level!r}")
    return chisq_quantile(p, level)


def covers(method: MethodId, problem: TwoSampleEL, pi0, level: float) -> bool:
    """True when ``pi0`` lies in the ``level`` region of ``method``."""
    return statistic(method, problem, pi0) <= _critical(problem.p, level)


# -- boundary search ----------------------------------------------------------

@dataclass
class _Edge:
    radius: float
    value: float
    exterior_bound: bool


def _edge(method: MethodId, problem: TwoSampleEL, direction: np.ndarray, crit: float,
          max_doublings: int = MAX_DOUBLINGS) -> _Edge:
    """Radius ``r`` with ``stat(pi_tilde + r * direction) = crit``."""
    base = problem.pi_tilde
    if method in (MethodId.OEL, MethodId.BEL):
        # warm-started solves along the ray
        ray = _Ray(problem, direction)
        scale = 1.0
        if method is MethodId.BEL:
            scale = bel_scale(estimate_eta(problem).eta, problem.N)

        def f(r):
            sol = ray.solve(r)
            if sol.status is DomainStatus.MAX_ITERS:
                raise MaxItersReached(f"OEL solve did not converge at pi = {sol.pi}")
            l = sol.loglik
            return (l * scale if math.isfinite(l) else l) - crit
    else:
        def f(r):
            return statistic(method, problem, base + r * direction) - crit

    lo, hi = 0.0, 1.0
    for _ in range(max_doublings):
        if f(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketFailure(f"{method.value} stays below {crit:.4g} over {max_doublings} doublings")
    r, fr = bisect(f, lo, hi, STAT_TOL, xtol=hi * 1e-15)
    if abs(fr) < STAT_TOL:
        return _Edge(r, fr + crit, False)
    # the statistic jumps over crit at the domain edge; keep the inside point
    return _Edge(r, fr + crit, True)


@dataclass
class ConfidenceInterval:
    method: MethodId
    level: float
    lower: float
    upper: float
    critical: float
    flags: list[str] = field(default_factory=list)

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def confidence_interval(method: MethodId, problem: TwoSampleEL, level: float) -> ConfidenceInterval:
    """Interval ``{pi : stat(pi) <= c}`` for a scalar difference."""
    if problem.p != 1:
        raise DomainError("confidence intervals need a scalar parameter; use region_contour_2d")
    crit = _critical(1, level)
    se = float(problem.std_error[0])
    flags = []
    ends = []
    for side, sign in (("lower", -1.0), ("upper", 1.0)):
        e = _edge(method, problem, np.array([sign * se]), crit)
        if e.exterior_bound:
            flags.append(f"{side}_exterior_bound")
        ends.append(float(problem.pi_tilde[0]) + sign * se * e.radius)
    return ConfidenceInterval(method, level, ends[0], ends[1], crit, flags)


@dataclass
class RegionContour:
    method: MethodId
    level: float
    vertices: np.ndarray
    """``(k, 2)`` boundary points in angle order; the polyline closes on itself."""
    center: np.ndarray
    critical: float
    failed_rays: list[int] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def contains(self, point) -> bool:
        """Even-odd point-in-polygon test."""
        x, y = np.asarray(point, dtype=float)
        V = self.vertices
        inside = False
        for k in range(len(V)):
            (x1, y1), (x2, y2) = V[k - 1], V[k]
            if (y1 > y) != (y2 > y):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < xc:
                    inside = not inside
        return inside

    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * abs(float(x @ np.roll(y, -1) - y @ np.roll(x, -1)))


def region_contour_2d(method: MethodId, problem: TwoSampleEL, level: float, rays: int = 64) -> RegionContour:
    """Star-shaped boundary of the ``level`` region, one radius per angle.

    Angles are equally spaced in coordinates scaled by the standard errors.
    Rays whose bracket fails are dropped; fewer than 90% successes raise
    :class:`BracketFailure`.
    """
    if problem.p != 2:
        raise DomainError("region contours are for two-dimensional differences")
    if rays < 16:
        raise DomainError("at least 16 rays are required")
    crit = _critical(2, level)
    se = problem.std_error
    verts, failed, flags = [], [], []
    for k in range(rays):
        ang = 2.0 * math.pi * k / rays
        u = np.array([math.cos(ang), math.sin(ang)]) * se
        try:
            e = _edge(method, problem, u, crit)
        except BracketFailure:
            failed.append(k)
            continue
        if e.exterior_bound:
            flags.append(f"ray_{k}_exterior_bound")
        verts.append(problem.pi_tilde + e.radius * u)
    if len(verts) < 0.9 * rays:
        raise BracketFailure(f"{len(failed)} of {rays} rays failed")
    return RegionContour(method, level, np.array(verts), problem.pi_tilde.copy(), crit, failed, flags)
