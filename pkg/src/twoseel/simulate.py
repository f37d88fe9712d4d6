"""Seeded samplers and the Monte Carlo coverage harness.

Every replicate draws from its own PCG64 stream whose seed is the
replicate-th output of a SplitMix64 sequence started at the scenario seed,
so a report depends only on the scenario and never on how replicates are
scheduled across worker processes.
"""

from __future__ import annotations

import math
import os
import secrets
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, TwoSEELError, UnknownDistribution
from .estfun import TwoSampleData, gini_data, gini_ef, mean_ef, regression_ef
from .numerics import chisq_quantile
from .oel import TwoSampleEL
from .regions import REPORT_ORDER, MethodId, statistics_at

__all__ = [
    "CoverageCell",
    "CoverageReport",
    "DISTRIBUTIONS",
    "SCENARIOS",
    "ScenarioSpec",
    "draw_scenario",
    "replicate_seed",
    "run_coverage",
    "sampler",
    "splitmix64",
    "true_difference",
]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

SCENARIOS = ("Example1", "Example2", "Example3", "Example4", "MeanNormal")
DEFAULT_LEVELS = (0.90, 0.95, 0.99)
BETA_A = np.array([2.0, 1.0])
BETA_B = np.array([2.0, 2.0])
X1_RANGE = 30.0


def splitmix64(state: int) -> int:
    """One SplitMix64 output for the given 64-bit state (the state is advanced first)."""
    z = (state + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def replicate_seed(base: int, index: int) -> int:
    """The ``index``-th SplitMix64 output of the stream seeded with ``base``."""
    return splitmix64((base + index * _GOLDEN) & _MASK)


# -- samplers -----------------------------------------------------------------

def _std_normal(count: int, rng: np.random.Generator) -> np.ndarray:
    # Marsaglia's polar method, vectorised over batches of candidate pairs
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        u = 2.0 * rng.random((need // 2 + 8, 2)) - 1.0
        s = np.einsum("ij,ij->i", u, u)
        ok = (s > 0.0) & (s < 1.0)
        u, s = u[ok], s[ok]
        z = (u * np.sqrt(-2.0 * np.log(s) / s)[:, None]).ravel()
        take = min(need, z.size)
        out[filled:filled + take] = z[:take]
        filled += take
    return out


def _uniform_open(count, rng):
    # (0, 1]: keeps -log(U) and U**(-1/5) finite
    return 1.0 - rng.random(count)


DISTRIBUTIONS = {
    "StdNormal": _std_normal,
    "LogNormal": lambda k, rng: np.exp(_std_normal(k, rng)),
    "ChiSq1": lambda k, rng: _std_normal(k, rng) ** 2,
    "Pareto5": lambda k, rng: _uniform_open(k, rng) ** (-1.0 / 5.0),
    "Exp1": lambda k, rng: -np.log(_uniform_open(k, rng)),
    "Exp1Centered": lambda k, rng: -np.log(_uniform_open(k, rng)) - 1.0,
    "Uniform030": lambda k, rng: X1_RANGE * rng.random(k),
}


def sampler(dist: str, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` draws from a named distribution using ``rng`` uniforms."""
    if count < 1:
        raise DomainError("count must be positive")
    try:
        draw = DISTRIBUTIONS[dist]
    except KeyError:
        raise UnknownDistribution(f"unknown distribution {dist!r}; known: {sorted(DISTRIBUTIONS)}") from None
    return draw(int(count), rng)


def _regression_sample(count, beta, error, rng):
    x1 = sampler("Uniform030", count, rng)
    eps = sampler(error, count, rng)
    y = beta[0] + beta[1] * x1 + eps
    return np.column_stack([np.ones(count), x1, y])


def _check_scenario(name):
    if name not in SCENARIOS:
        raise UnknownDistribution(f"unknown scenario {name!r}; known: {list(SCENARIOS)}")


def true_difference(name: str) -> np.ndarray:
    _check_scenario(name)
    if name == "Example1":
        # Gini(chi2_1) - Gini(LogNormal(0, 1))
        return np.array([2.0 / math.pi - (2.0 * float(ndtr(1.0 / math.sqrt(2.0))) - 1.0)])
    if name == "Example2":
        # Gini(Exp(1)) - Gini(Pareto(5)) with Gini(Pareto(a)) = 1 / (2a - 1)
        return np.array([0.5 - 1.0 / 9.0])
    if name in ("Example3", "Example4"):
        return BETA_A - BETA_B
    return np.array([0.0])


def scenario_dimension(name: str) -> int:
    return true_difference(name).size


def draw_scenario(name: str, m: int, n: int, rng: np.random.Generator):
    """One replicate: ``(estimating function, TwoSampleData)``.

    X carries ``m`` observations and Y carries ``n``; the target is
    ``theta_y - theta_x``. Gini sizes are raw incomes, paired internally.
    """
    _check_scenario(name)
    if name == "Example1":
        x = sampler("LogNormal", m, rng)
        y = sampler("ChiSq1", n, rng)
        return gini_ef(), gini_data(x, y)
    if name == "Example2":
        x = sampler("Pareto5", m, rng)
        y = sampler("Exp1", n, rng)
        return gini_ef(), gini_data(x, y)
    if name in ("Example3", "Example4"):
        err_a = "StdNormal" if name == "Example3" else "Exp1Centered"
        X = _regression_sample(m, BETA_B, "StdNormal", rng)
        Y = _regression_sample(n, BETA_A, err_a, rng)
        return regression_ef(2), TwoSampleData(X, Y)
    return mean_ef(1), TwoSampleData(sampler("StdNormal", m, rng), sampler("StdNormal", n, rng))


# -- coverage harness ---------------------------------------------------------

@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    m: int
    n: int
    true_pi: tuple[float, ...] | None = None
    levels: tuple[float, ...] = DEFAULT_LEVELS
    methods: tuple[MethodId, ...] = REPORT_ORDER
    replicates: int = 2000
    seed: int | None = None

    def __post_init__(self):
        _check_scenario(self.name)
        if self.m < 1 or self.n < 1:
            raise DomainError("sample sizes must be positive")
        if self.replicates < 100:
            raise DomainError("at least 100 replicates are required")
        if self.true_pi is None:
            object.__setattr__(self, "true_pi", tuple(true_difference(self.name).tolist()))
        object.__setattr__(self, "true_pi", tuple(float(v) for v in self.true_pi))
        if len(self.true_pi) != scenario_dimension(self.name):
            raise DomainError(f"true_pi has dimension {len(self.true_pi)}, {self.name} needs "
                              f"{scenario_dimension(self.name)}")
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        for lv in self.levels:
            if not 0.5 < lv < 0.9999:
                raise DomainError(f"level {lv} outside (0.5, 0.9999)")
        object.__setattr__(self, "methods", tuple(
            m if isinstance(m, MethodId) else MethodId.parse(m) for m in self.methods))
        if self.seed is None:
            object.__setattr__(self, "seed", secrets.randbits(64))
        if not 0 <= self.seed <= _MASK:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass
class CoverageCell:
    hits: int = 0
    valid: int = 0
    failed: int = 0

    @property
    def coverage(self) -> float:
        return self.hits / self.valid if self.valid else math.nan

    @property
    def mc_stderr(self) -> float:
        c = self.coverage
        return math.sqrt(c * (1.0 - c) / self.valid) if self.valid else math.nan


@dataclass
class CoverageReport:
    spec: ScenarioSpec
    cells: dict[tuple[MethodId, float], CoverageCell]
    failures: list[tuple[int, str]] = field(default_factory=list)
    """``(replicate index, message)`` for replicates with at least one failed method."""

    def cell(self, method: MethodId | str, level: float) -> CoverageCell:
        if not isinstance(method, MethodId):
            method = MethodId.parse(method)
        return self.cells[(method, float(level))]


def _replicate(spec: ScenarioSpec, r: int):
    """Statistic per method at the true difference, or ``None`` for failed methods."""
    rng = np.random.Generator(np.random.PCG64(replicate_seed(spec.seed, r)))
    pi0 = np.array(spec.true_pi)
    try:
        ef, data = draw_scenario(spec.name, spec.m, spec.n, rng)
        problem = TwoSampleEL(ef, data)
    except TwoSEELError as exc:
        return {m: None for m in spec.methods}, f"{type(exc).__name__}: {exc}"
    out, msgs = {}, []
    for method in spec.methods:
        try:
            out[method] = statistics_at(problem, pi0, (method,))[method]
        except TwoSEELError as exc:
            out[method] = None
            msgs.append(f"{method.value} {type(exc).__name__}: {exc}")
    return out, "; ".join(msgs) or None


def _chunk(args):
    spec, indices = args
    return [(r, *_replicate(spec, r)) for r in indices]


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("TWOSEEL_THREADS", "").strip()
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def run_coverage(spec: ScenarioSpec, threads: int | None = None) -> CoverageReport:
    """Simulated coverage of each method and level at the scenario's true difference.

    ``threads`` defaults to ``TWOSEEL_THREADS`` or the CPU count. Replicates
    whose solve fails for a method are excluded from that method's
    numerator and denominator and counted in ``failed``.
    """
    workers = worker_count(threads)
    indices = list(range(spec.replicates))
    if workers == 1:
        results = _chunk((spec, indices))
    else:
        size = max(1, spec.replicates // (4 * workers))
        chunks = [(spec, indices[k:k + size]) for k in range(0, len(indices), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [row for part in pool.map(_chunk, chunks) for row in part]
    results.sort(key=lambda row: row[0])
    crit = {lv: chisq_quantile(len(spec.true_pi), lv) for lv in spec.levels}
    cells = {(m, lv): CoverageCell() for m in spec.methods for lv in spec.levels}
    failures = []
    for r, stats, msg in results:
        if msg:
            failures.append((r, msg))
        for m, value in stats.items():
            for lv in spec.levels:
                c = cells[(m, lv)]
                if value is None or math.isnan(value):
                    c.failed += 1
                else:
                    c.valid += 1
                    c.hits += int(value <= crit[lv])
    return CoverageReport(spec, cells, failures)
