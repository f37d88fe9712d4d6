"""
The mismatch problem and its fix
================================

With four observations per sample the OEL statistic is finite only on a
short interval of differences. Past its ends it is +inf, so no level of
confidence can reach them. The extended statistic is finite everywhere and
agrees with OEL near the estimate.
"""

import numpy as np

from twoseel import MethodId, TwoSampleData, TwoSampleEL, mean_ef, statistic

X = [0.1, 0.5, 0.9, 1.3]
Y = [1.0, 1.4, 2.2, 2.6]
problem = TwoSampleEL(mean_ef(1), TwoSampleData(X, Y))
# a mean difference is attainable only between these extremes
lo, hi = min(Y) - max(X), max(Y) - min(X)
print(f"difference of means: {problem.pi_tilde[0]:.3f}; OEL finite on ({lo:.2f}, {hi:.2f})")

###############################################################################
# Walk along the line of differences.

print(f"{'pi':>6} {'OEL':>10} {'EEL1':>10} {'EEL2':>10}")
for pi in np.linspace(-1.0, 3.5, 10):
    row = [statistic(m, problem, pi) for m in (MethodId.OEL, MethodId.EEL1, MethodId.EEL2)]
    print(f"{pi:6.2f} " + " ".join(f"{v:10.3f}" for v in row))
