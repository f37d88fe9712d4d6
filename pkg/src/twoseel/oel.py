"""Two-sample original empirical likelihood (OEL) for estimating equations.

The log-likelihood ratio at a difference ``pi`` is obtained from the
Lagrangian system in ``(lambda, theta_y)`` with ``theta_x = theta_y - pi``::

    sum_j g(y_j, theta_y) / (1 + f_n lambda' g(y_j, theta_y)) = 0
    sum_i g(x_i, theta_x) / (1 - f_m lambda' g(x_i, theta_x)) = 0

and ``l(pi) = 2 [sum_j log(1 + f_n lambda' g_j) + sum_i log(1 - f_m lambda' g_i)]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NoSolution, NonFinite, SingularJacobian, SolverError
from .estfun import EstimatingFunction, TwoSampleData
from .numerics import NewtonOptions, NewtonResult, newton_solve

__all__ = [
    "DomainStatus",
    "ProfileSolution",
    "TwoSampleEL",
    "domain_status",
    "mele",
    "mele_diff",
    "oel_loglik",
]

CONTINUATION_STEPS = 8
MAX_REFINEMENTS = 6
# smallest scaled weight k * w_i below which a stuck continuation is taken to
# have reached the domain edge (weights vanish there)
EDGE_WEIGHT = 0.05
WEIGHT_SUM_TOL = 1e-6


class DomainStatus(enum.Enum):
    INTERIOR = "interior"
    EXTERIOR = "exterior"
    MAX_ITERS = "max_iters"


@dataclass
class ProfileSolution:
    pi: np.ndarray
    lam: np.ndarray
    theta_y: np.ndarray
    theta_x: np.ndarray
    loglik: float
    weights_x: np.ndarray
    weights_y: np.ndarray
    status: DomainStatus
    iters: int

    @property
    def interior(self) -> bool:
        return self.status is DomainStatus.INTERIOR


def mele(ef: EstimatingFunction, sample, options: NewtonOptions | None = None) -> np.ndarray:
    """Maximum empirical likelihood estimate for one sample.

    In the just-determined case this is the root of the sample moment
    condition ``mean_i g(z_i, theta) = 0``.
    """
    Z = np.atleast_2d(np.asarray(sample, dtype=float))
    k = Z.shape[0]
    if k <= ef.q:
        raise NoSolution(f"sample of size {k} cannot identify q={ef.q} parameters")
    opts = options or NewtonOptions(max_iters=100, tol=1e-12)

    def F(theta):
        return ef.eval(Z, theta).mean(axis=0)

    def J(theta):
        return ef.jac(Z, theta).mean(axis=0)

    starts = []
    if ef.start is not None:
        starts.append(np.asarray(ef.start(Z), dtype=float))
    starts += [np.zeros(ef.p), np.ones(ef.p), -np.ones(ef.p)]
    for x0 in starts[:4]:
        try:
            res = newton_solve(F, J, x0, opts)
        except SolverError:
            continue
        if res.converged or (res.stalled and res.fnorm < 1e-9):
            return res.x
    raise NoSolution(f"estimating equation for {ef.name} has no root from the default starts")


def mele_diff(ef: EstimatingFunction, data: TwoSampleData) -> np.ndarray:
    return mele(ef, data.Y) - mele(ef, data.X)


class _Residual:
    """Residual and Jacobian of the profile system at a fixed ``pi``.

    The residual is scaled by the sample sizes, so its blocks are exactly
    the weighted estimating equations at the implied weights.
    """

    def __init__(self, problem: TwoSampleEL, pi: np.ndarray):
        self.ef = problem.ef
        self.data = problem.data
        self.pi = pi
        self.q = problem.ef.q
        self.floor = 1.0 / problem.data.N
        self._key = None

    def _update(self, x):
        # keyed on identity: callers never mutate an evaluated point in place
        if x is self._key:
            return
        q, d = self.q, self.data
        lam, ty = x[:q], x[q:]
        gy = self.ef.eval(d.Y, ty)
        gx = self.ef.eval(d.X, ty - self.pi)
        self._key = x
        self.lam, self.ty = lam, ty
        self.gy, self.gx = gy, gx
        self.ua = d.f_n * (gy @ lam)
        self.ub = -d.f_m * (gx @ lam)

    def feasible(self, x) -> bool:
        self._update(x)
        return self.ua.min() > self.floor - 1.0 and self.ub.min() > self.floor - 1.0

    def __call__(self, x):
        self._update(x)
        d = self.data
        return np.concatenate([(1.0 / (1.0 + self.ua)) @ self.gy / d.n,
                               (1.0 / (1.0 + self.ub)) @ self.gx / d.m])

    def jacobian(self, x):
        self._update(x)
        d, q = self.data, self.q
        lam = self.lam
        ia = 1.0 / (1.0 + self.ua)
        ib = 1.0 / (1.0 + self.ub)
        gy, gx = self.gy, self.gx
        Gy = self.ef.jac(d.Y, self.ty)
        Gx = self.ef.jac(d.X, self.ty - self.pi)
        J = np.empty((2 * q, 2 * q))
        gya = gy * ia[:, None]
        gxb = gx * ib[:, None]
        J[:q, :q] = -d.f_n * (gya.T @ gya) / d.n
        J[q:, :q] = d.f_m * (gxb.T @ gxb) / d.m
        if q == 1:
            Gy = Gy.reshape(-1)
            Gx = Gx.reshape(-1)
            J[0, 1] = (ia @ Gy - d.f_n * lam[0] * (gya[:, 0] @ (Gy * ia))) / d.n
            J[1, 1] = (ib @ Gx + d.f_m * lam[0] * (gxb[:, 0] @ (Gx * ib))) / d.m
            return J
        lGy = np.einsum("q,nqp->np", lam, Gy)
        lGx = np.einsum("q,nqp->np", lam, Gx)
        J[:q, q:] = (np.einsum("n,nqp->qp", ia, Gy) - d.f_n * (gya.T @ (lGy * ia[:, None]))) / d.n
        J[q:, q:] = (np.einsum("n,nqp->qp", ib, Gx) + d.f_m * (gxb.T @ (lGx * ib[:, None]))) / d.m
        return J

    def weight_defect(self, x) -> float:
        """Largest deviation of the implied weight sums from one."""
        self._update(x)
        return max(abs(float(np.mean(1.0 / (1.0 + self.ua))) - 1.0),
                   abs(float(np.mean(1.0 / (1.0 + self.ub))) - 1.0))

    def loglik(self, x) -> float:
        self._update(x)
        return 2.0 * float(np.sum(np.log1p(self.ua)) + np.sum(np.log1p(self.ub)))


class TwoSampleEL:
    """Two-sample EL problem for ``pi = theta_y - theta_x``.

    Holds the estimating function and data, and caches the MELEs and the
    quantities derived from them (starting-value linearisation, Bartlett
    factor) so that repeated evaluations at many ``pi`` stay cheap.
    """

    def __init__(self, ef: EstimatingFunction, data: TwoSampleData, options: NewtonOptions | None = None):
        data.check(ef)
        self.ef = ef
        self.data = data
        self.options = options or NewtonOptions(max_iters=50, tol=1e-11)
        self._cont_options = NewtonOptions(max_iters=25, tol=self.options.tol)
        self.theta_x_tilde = mele(ef, data.X)
        self.theta_y_tilde = mele(ef, data.Y)
        self.pi_tilde = self.theta_y_tilde - self.theta_x_tilde
        gscale = max(
            float(np.sqrt(np.mean(ef.eval(data.Y, self.theta_y_tilde) ** 2))),
            float(np.sqrt(np.mean(ef.eval(data.X, self.theta_x_tilde) ** 2))),
            1.0,
        )
        self.tol = self.options.tol * gscale
        self._domain = self._support_interval()

    @property
    def p(self) -> int:
        return self.ef.p

    @property
    def N(self) -> int:
        return self.data.N

    @property
    def n_small(self) -> int:
        return min(self.data.m, self.data.n)

    # -- starting values ----------------------------------------------------

    @cached_property
    def _linearisation(self):
        # lambda ~ M^{-1} dpi and theta_y ~ theta_y_tilde + Ky lambda, from the
        # first-order expansion of the system around the MELEs.
        ef, d = self.ef, self.data
        gy = ef.eval(d.Y, self.theta_y_tilde)
        gx = ef.eval(d.X, self.theta_x_tilde)
        Ay = ef.jac(d.Y, self.theta_y_tilde).mean(axis=0)
        Ax = ef.jac(d.X, self.theta_x_tilde).mean(axis=0)
        Sy = gy.T @ gy / d.n
        Sx = gx.T @ gx / d.m
        try:
            Ky = d.f_n * np.linalg.solve(Ay, Sy)
            Kx = d.f_m * np.linalg.solve(Ax, Sx)
            Minv = np.linalg.inv(Ky + Kx)
        except np.linalg.LinAlgError:
            return None
        if not (np.all(np.isfinite(Minv)) and np.all(np.isfinite(Ky))):
            return None
        return Minv, Ky

    @cached_property
    def std_error(self) -> np.ndarray:
        """Sandwich standard errors of ``pi_tilde``, used as a length scale."""
        ef, d = self.ef, self.data
        out = np.zeros((self.p, self.p))
        for Z, th in ((d.Y, self.theta_y_tilde), (d.X, self.theta_x_tilde)):
            g = ef.eval(Z, th)
            A = ef.jac(Z, th).mean(axis=0)
            S = g.T @ g / Z.shape[0]
            try:
                Ainv = np.linalg.inv(A)
            except np.linalg.LinAlgError:
                return np.ones(self.p)
            out += Ainv @ S @ Ainv.T / Z.shape[0]
        se = np.sqrt(np.clip(np.diag(out), 0.0, None))
        return np.where(se > 0, se, 1.0)

    def _start(self, pi, res: _Residual) -> np.ndarray:
        q = self.ef.q
        dpi = pi - self.pi_tilde
        lin = self._linearisation
        if lin is None:
            w = self.data.m / self.data.N
            return np.concatenate([np.zeros(q), self.theta_y_tilde + w * dpi])
        Minv, Ky = lin
        lam = Minv @ dpi
        for _ in range(30):
            x = np.concatenate([lam, self.theta_y_tilde + Ky @ lam])
            if res.feasible(x):
                return x
            lam = 0.5 * lam
        return np.concatenate([np.zeros(q), self.theta_y_tilde + Ky @ lam])

    def _shifted(self, ws: ProfileSolution, pi) -> np.ndarray:
        dpi = pi - ws.pi
        lin = self._linearisation
        if lin is None:
            shift = (self.data.m / self.data.N) * dpi
        else:
            Minv, Ky = lin
            shift = Ky @ (Minv @ dpi)
        return np.concatenate([ws.lam, ws.theta_y + shift])

    # -- solving --------------------------------------------------------------

    def _support_interval(self):
        # Exact domain for scalar estimating functions that are monotone in theta.
        support = getattr(self.ef, "support", None)
        if support is None:
            return None
        lo_y, hi_y = support(self.data.Y)
        lo_x, hi_x = support(self.data.X)
        return lo_y - hi_x, hi_y - lo_x

    @cached_property
    def center(self) -> ProfileSolution:
        """The solution at the MELE: ``lambda = 0`` and uniform weights."""
        q = self.ef.q
        x = np.concatenate([np.zeros(q), self.theta_y_tilde])
        return self._finish(_Residual(self, self.pi_tilde), x, 0)

    def _finish(self, res: _Residual, x, iters) -> ProfileSolution:
        q = self.ef.q
        d = self.data
        res._update(x)
        return ProfileSolution(
            pi=res.pi.copy(),
            lam=x[:q].copy(),
            theta_y=x[q:].copy(),
            theta_x=x[q:] - res.pi,
            loglik=res.loglik(x),
            weights_x=1.0 / (d.m * (1.0 + res.ub)),
            weights_y=1.0 / (d.n * (1.0 + res.ua)),
            status=DomainStatus.INTERIOR,
            iters=iters,
        )

    def _failed(self, pi, status, iters) -> ProfileSolution:
        q, d = self.ef.q, self.data
        nan = np.full(q, np.nan)
        return ProfileSolution(
            pi=pi.copy(), lam=nan, theta_y=nan.copy(), theta_x=nan.copy(),
            loglik=np.inf if status is DomainStatus.EXTERIOR else np.nan,
            weights_x=np.full(d.m, np.nan), weights_y=np.full(d.n, np.nan),
            status=status, iters=iters,
        )

    def _newton(self, res: _Residual, x0, opts) -> NewtonResult | None:
        try:
            out = newton_solve(res, res.jacobian, x0, NewtonOptions(
                max_iters=opts.max_iters, tol=self.tol,
                max_backtracks=opts.max_backtracks, min_step=opts.min_step), res.feasible)
        except (SingularJacobian, NonFinite):
            return None
        if not out.converged and out.stalled and out.fnorm <= 100.0 * self.tol:
            out.converged = True  # rounding floor reached
        if out.converged and res.weight_defect(out.x) > WEIGHT_SUM_TOL:
            # a small residual with weights draining to zero is the escape of
            # lambda to infinity that happens outside the domain, not a root
            out.converged = False
            out.stalled = False
        return out

    def in_support(self, pi) -> bool:
        if self._domain is None:
            return True
        lo, hi = self._domain
        return bool(lo < pi[0] < hi)

    def solve(self, pi, warm_start: ProfileSolution | None = None) -> ProfileSolution:
        """OEL ``l(pi)`` with its multiplier, parameters and implied weights."""
        pi = np.atleast_1d(np.asarray(pi, dtype=float)).copy()
        if pi.shape != (self.p,) or not np.all(np.isfinite(pi)):
            raise ValueError(f"pi must be a finite vector of length {self.p}")
        if np.array_equal(pi, self.pi_tilde):
            return self.center
        if not self.in_support(pi):
            return self._failed(pi, DomainStatus.EXTERIOR, 0)
        res = _Residual(self, pi)
        if warm_start is not None and warm_start.interior:
            x0 = self._shifted(warm_start, pi)
            if not res.feasible(x0):
                x0 = np.concatenate([warm_start.lam, warm_start.theta_y])
                if not res.feasible(x0):
                    x0 = self._start(pi, res)
        else:
            x0 = self._start(pi, res)
        out = self._newton(res, x0, self.options)
        if out is not None and out.converged:
            return self._finish(res, out.x, out.iters)
        anchor = warm_start if warm_start is not None and warm_start.interior else self.center
        return self._continuation(anchor, pi, out.iters if out is not None else 0)

    def _continuation(self, anchor: ProfileSolution, pi, iters) -> ProfileSolution:
        # March from a converged anchor to pi in equal steps, halving a step
        # whenever Newton fails from the previous solution.
        span = pi - anchor.pi
        cur, t = anchor, 0.0
        h = 1.0 / CONTINUATION_STEPS
        h_min = h / 2 ** MAX_REFINEMENTS
        last = None
        while t < 1.0:
            t_next = min(1.0, t + h)
            target = anchor.pi + t_next * span if t_next < 1.0 else pi
            res = _Residual(self, target)
            x0 = self._shifted(cur, target)
            if not res.feasible(x0):
                x0 = np.concatenate([cur.lam, cur.theta_y])
            out = self._newton(res, x0, self._cont_options)
            last = out
            if out is not None:
                iters += out.iters
            if out is not None and out.converged:
                cur = self._finish(res, out.x, iters)
                t = t_next
                h = min(2.0 * h, 1.0 / CONTINUATION_STEPS)
                continue
            h *= 0.5
            if h < h_min:
                exhausted = last is not None and not last.stalled
                status = DomainStatus.EXTERIOR
                if exhausted and t > 0.0 and self._edge_distance(cur) > EDGE_WEIGHT:
                    status = DomainStatus.MAX_ITERS
                return self._failed(pi, status, iters)
        return cur

    def _edge_distance(self, sol: ProfileSolution) -> float:
        d = self.data
        return min(d.m * float(sol.weights_x.min()), d.n * float(sol.weights_y.min()))

    def domain_status(self, pi) -> DomainStatus:
        return self.solve(pi).status


def oel_loglik(problem: TwoSampleEL, pi, warm_start: ProfileSolution | None = None) -> ProfileSolution:
    return problem.solve(pi, warm_start)


def domain_status(problem: TwoSampleEL, pi) -> DomainStatus:
    return problem.solve(pi).status
