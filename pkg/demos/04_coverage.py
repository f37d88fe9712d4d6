"""
A small coverage experiment
===========================

Coverage is the share of simulated data sets whose region contains the
true difference. This runs a few hundred replicates of the Gini scenario
at m = n = 20, enough to see OEL undercover. Set TWOSEEL_THREADS to use
more worker processes; the numbers do not depend on it.
"""

from twoseel import ScenarioSpec, run_coverage
from twoseel.regions import REPORT_ORDER

spec = ScenarioSpec("Example1", 20, 20, replicates=400, seed=2024)
report = run_coverage(spec)
print(f"true difference {spec.true_pi[0]:.4f}, {spec.replicates} replicates")
print("level  " + "  ".join(f"{m.value:>5}" for m in REPORT_ORDER))
for level in spec.levels:
    cells = [report.cell(m, level) for m in REPORT_ORDER]
    print(f"{level:5.2f}  " + "  ".join(f"{100 * c.coverage:5.1f}" for c in cells))
print("Monte Carlo standard error of one cell is about "
      f"{100 * report.cell(REPORT_ORDER[0], 0.90).mc_stderr:.1f} points")
