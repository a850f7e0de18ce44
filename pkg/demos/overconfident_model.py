"""A model that predicts 1.0 for everyone whose true risk is 0.9.

At a high therapeutic threshold, deploying it is worse than treating nobody;
the conservative ECE threshold refuses to treat and recovers the loss.
"""

import math

from conservative_thresholds import BinnedPair, Grid, benefit, conservative_threshold, make_context_from_jstar

grid = Grid(100)
pair = BinnedPair.constant(grid, 100, 0.9)
alpha, jstar = 0.1, 99
ctx = make_context_from_jstar(jstar, grid)

j_hat = conservative_threshold(alpha, jstar, "ece", grid).j_hat
print(f"net benefit of treating everyone:   {benefit.net_benefit(pair, benefit.TREAT_ALL, ctx):+.3f}")
print(f"regret at the therapeutic threshold: {benefit.regret(pair, jstar, ctx).value:.3f}")
print(f"conservative threshold:             {j_hat}")
print(f"net benefit there:                  {benefit.net_benefit(pair, math.floor(j_hat), ctx):+.3f}")
