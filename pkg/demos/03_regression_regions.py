"""
Joint regions for a difference of regression coefficients
=========================================================

Two simple linear regressions share an intercept but differ in slope.
The difference of the coefficient vectors is two-dimensional, so the
confidence set is a region, traced here ray by ray.
"""

import numpy as np

from twoseel import MethodId, TwoSampleEL, covers, region_contour_2d, true_difference
from twoseel.simulate import draw_scenario

ef, data = draw_scenario("Example3", 20, 20, np.random.default_rng(3))
problem = TwoSampleEL(ef, data)
truth = true_difference("Example3")
print("estimate of beta_y - beta_x:", np.round(problem.pi_tilde, 4), " truth:", truth)

###############################################################################
# A contour is a polygon with one vertex per ray. Its area shows how much
# the extension enlarges the region at the same level.

for method in (MethodId.OEL, MethodId.EEL1, MethodId.BEL, MethodId.EEL2):
    rc = region_contour_2d(method, problem, 0.90, rays=32)
    print(f"{method.value:>5}: area {rc.area():.5f}, contains truth: {rc.contains(truth)}, "
          f"direct check: {covers(method, problem, truth, 0.90)}")
