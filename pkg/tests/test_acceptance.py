"""The eight acceptance criteria at their stated tolerances.

Each test logs one PASS/FAIL line before asserting; the lines are repeated
in the ``acceptance criteria`` section of the pytest summary.
"""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import two_sample_mean_el
from twoseel.bartlett import estimate_eta
from twoseel.eel import EEL1, MappingConfig, eel_loglik, forward_map, inverse_map
from twoseel.estfun import TwoSampleData, gini_data, gini_ef, mean_ef, regression_ef
from twoseel.oel import DomainStatus, TwoSampleEL
from twoseel.regions import MethodId
from twoseel.simulate import ScenarioSpec, draw_scenario, run_coverage

SEED = 12345
EEL2 = MappingConfig(2)

pytestmark = pytest.mark.acceptance


def _pct(report, method, level=0.9):
    # tables report percentages to one decimal
    return round(100.0 * report.cell(method, level).coverage, 1)


def test_1_dual_matches_primal_oracle(acceptance):
    X = np.array([0.1, 0.5, 0.9, 1.3])
    Y = np.array([1.0, 1.4, 2.2, 2.6])
    P = TwoSampleEL(mean_ef(1), TwoSampleData(X, Y))
    lo, hi = P._support_interval()
    grid = np.linspace(lo, hi, 13)[1:-1]
    err = max(abs(P.solve([pi]).loglik - two_sample_mean_el(X, Y, pi)) for pi in grid)
    ok = acceptance(1, err < 1e-5, f"max |l_dual - l_primal| = {err:.2e} over 11 interior points")
    assert ok


def test_2_chisq_calibration(acceptance):
    rng = np.random.default_rng(SEED)
    ls = np.empty(2000)
    for r in range(ls.size):
        P = TwoSampleEL(mean_ef(1), TwoSampleData(rng.standard_normal(200), rng.standard_normal(200)))
        ls[r] = P.solve([0.0]).loglik
    mean, cov = ls.mean(), np.mean(ls <= 3.841)
    ok = 0.90 <= mean <= 1.10 and 0.93 <= cov <= 0.96
    acceptance(2, ok, f"mean l(pi0) = {mean:.3f}, P(l <= 3.841) = {cov:.4f}")
    assert ok


def test_3_table1_example1(acceptance):
    rep = run_coverage(ScenarioSpec("Example1", 20, 20, replicates=2000, seed=SEED))
    o, e1, b, e2 = (_pct(rep, m) for m in (MethodId.OEL, MethodId.EEL1, MethodId.BEL, MethodId.EEL2))
    ok = (abs(o - 80.0) <= 2.5 and abs(e1 - 81.9) <= 2.5 and abs(b - 81.4) <= 3.5
          and abs(e2 - 82.4) <= 3.5 and e1 > o and b > o)
    acceptance(3, ok, f"Example1 (20,20) 90%: OEL {o} EEL1 {e1} BEL {b} EEL2 {e2} "
                      f"(targets 80.0 81.9 81.4 82.4)")
    assert ok


def test_4_table3_example3(acceptance):
    rep = run_coverage(ScenarioSpec("Example3", 20, 20, replicates=2000, seed=SEED))
    o, e1 = _pct(rep, MethodId.OEL), _pct(rep, MethodId.EEL1)
    ok = abs(o - 80.9) <= 2.5 and abs(e1 - 85.8) <= 2.5 and e1 - o >= 2.0
    acceptance(4, ok, f"Example3 (20,20) 90%: OEL {o} EEL1 {e1} gap {e1 - o:.1f} (targets 80.9 85.8, gap >= 2)")
    assert ok


def _random_problem(rng, kind):
    if kind == "mean":
        return TwoSampleEL(mean_ef(1), TwoSampleData(rng.standard_normal(15), rng.exponential(size=18)))
    if kind == "gini":
        return TwoSampleEL(gini_ef(), gini_data(rng.lognormal(size=30), rng.chisquare(1, size=30)))
    _, data = draw_scenario("Example3", 20, 20, rng)
    return TwoSampleEL(regression_ef(2), data)


def _exterior_points(P, rng, count=20):
    """Points outside the OEL domain along random rays from the MELE."""
    pts = []
    while len(pts) < count:
        u = rng.standard_normal(P.p) * P.std_error
        r = 1.0
        while P.solve(P.pi_tilde + r * u).status is not DomainStatus.EXTERIOR:
            r *= 2.0
        pts.append(P.pi_tilde + r * (1.0 + rng.uniform(0, 3)) * u)
    return pts


def test_5_mapping_properties(acceptance):
    rng = np.random.default_rng(SEED)
    kinds = ("mean", "gini", "regression")
    fixed = worst_rt = worst_col = 0.0
    trips = no_pre = case = 0
    finite = True
    # a round trip needs a preimage; far-out EEL2 targets may have none in
    # double precision, so those are counted separately and replaced
    while trips < 200:
        P = _random_problem(rng, kinds[case % 3])
        cfg = EEL1 if case % 2 == 0 else EEL2
        if case < 3:
            fixed = max(fixed, float(np.abs(forward_map(P, P.pi_tilde, cfg) - P.pi_tilde).max()))
            fixed = max(fixed, eel_loglik(P, P.pi_tilde, cfg))
        u = rng.standard_normal(P.p)
        pi = P.pi_tilde + rng.uniform(-6, 6) * u / np.linalg.norm(u) * P.std_error
        inv = inverse_map(P, pi, cfg)
        v = pi - P.pi_tilde
        t = float(v @ (inv.pi_prime - P.pi_tilde) / (v @ v))
        worst_col = max(worst_col, float(np.linalg.norm(inv.pi_prime - P.pi_tilde - t * v)))
        if inv.no_preimage:
            no_pre += 1
        else:
            trips += 1
            worst_rt = max(worst_rt, float(np.linalg.norm(forward_map(P, inv.pi_prime, cfg) - pi)))
        if case % 10 == 0:
            for q in _exterior_points(P, rng):
                assert P.solve(q).loglik == math.inf
                finite &= math.isfinite(eel_loglik(P, q, EEL1))
        case += 1
    ok = fixed == 0.0 and worst_rt < 1e-8 and worst_col < 1e-10 and finite
    acceptance(5, ok, f"fixed point {fixed:.1e}, round trip {worst_rt:.1e} over {trips} cases, "
                      f"collinearity {worst_col:.1e}, EEL1 finite at 20 exterior points per tested dataset: {finite} "
                      f"({no_pre} far EEL2 targets without a preimage skipped)")
    assert ok


def _second_order_gap(n, reps, rng):
    gaps = np.empty(reps)
    for r in range(reps):
        P = TwoSampleEL(mean_ef(1), TwoSampleData(rng.standard_normal(n), rng.standard_normal(n)))
        l = P.solve([0.0]).loglik
        gaps[r] = abs(eel_loglik(P, [0.0], EEL2) - l * (1.0 - estimate_eta(P).eta / P.N))
    return float(np.median(gaps))


def test_6_second_order_relation(acceptance):
    rng = np.random.default_rng(SEED)
    small, large = _second_order_gap(100, 500, rng), _second_order_gap(400, 500, rng)
    ok = large < 0.5 * small
    acceptance(6, ok, f"median gap n=100 {small:.2e}, n=400 {large:.2e}, ratio {large / small:.3f} (< 0.5)")
    assert ok


def test_7_weight_invariants_fuzz(acceptance):
    rng = np.random.default_rng(SEED)
    kinds = ("mean", "gini", "regression")
    solved = panics = bad = 0
    worst_sum = worst_eq = 0.0
    while solved < 1000:
        P = _random_problem(rng, kinds[solved % 3])
        pi = P.pi_tilde + rng.uniform(-3, 3, P.p) * P.std_error
        try:
            s = P.solve(pi)
        except Exception:  # noqa: BLE001 - any exception counts as a panic
            panics += 1
            solved += 1
            continue
        if s.status is not DomainStatus.INTERIOR:
            continue
        solved += 1
        d = P.data
        wsum = max(abs(s.weights_x.sum() - 1), abs(s.weights_y.sum() - 1))
        eq = max(np.abs(s.weights_x @ P.ef.eval(d.X, s.theta_x)).max(),
                 np.abs(s.weights_y @ P.ef.eval(d.Y, s.theta_y)).max())
        worst_sum, worst_eq = max(worst_sum, wsum), max(worst_eq, eq)
        bad += not (np.all(s.weights_x > 0) and np.all(s.weights_y > 0) and wsum <= 1e-8 and eq <= 1e-7)
    ok = panics == 0 and bad == 0
    acceptance(7, ok, f"1000 interior solves: {bad} violations, {panics} panics, "
                      f"max |sum w - 1| {worst_sum:.1e}, max |sum w g| {worst_eq:.1e}")
    assert ok


def test_8_simulate_is_thread_independent(acceptance, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": "Example1", "sizes": [[20, 20], [20, 30]],
                               "replicates": 200, "seed": SEED}))
    outs = []
    for threads in ("1", "2"):
        out = tmp_path / f"t{threads}.csv"
        env = dict(os.environ, TWOSEEL_THREADS=threads)
        subprocess.run([sys.executable, "-m", "twoseel.cli", "simulate", "--config", str(cfg), "--out", str(out)],
                       env=env, check=True)
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    acceptance(8, ok, f"TWOSEEL_THREADS=1 vs 2: byte-identical CSV ({len(outs[0])} bytes)")
    assert ok
