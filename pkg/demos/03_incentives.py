"""
Prices, interest and the shape of the payoff surface
====================================================

A creator pays for inspiration up front (fraction lambda) and the rest in
``d`` installments that grow at rate ``r``. Income arrives from later tokens
that cite theirs, discounted by ``sigma`` per round of depth.
"""

# %%
import numpy as np

from rnft.incentive import (
    IncentiveParams,
    WeightVector,
    hessian_probe,
    initial_price,
    outcome,
    outcome_closed_form,
    payment_depth,
    payoff,
)

params = IncentiveParams(o_hat=100.0, lam=0.4, alpha=0.3, beta=1.2, g=8, k_scale=5)
weights = WeightVector(0.5, (0.25, 0.25))
print("installments d =", payment_depth(params))

# %%
# The price is split across the creator and its referents exactly, in
# millionths. Thirds do not divide evenly; the leftover unit goes to the
# largest remainder.
p0, shares = initial_price(IncentiveParams(o_hat=100.0), WeightVector(1 / 3, (1 / 3, 1 / 3)))
print(shares, sum(shares))

# %%
# The installment loop and its geometric-series closed form agree.
for r in (0.0, 0.05, 0.5):
    print(r, outcome(100.0, 0.4, 4, r), outcome_closed_form(100.0, 0.4, 4, r))

# %%
# More referrers at any depth raise the payoff.
for counts in ([0, 0, 0, 0], [3, 0, 0, 0], [3, 6, 12, 24]):
    b = payoff(params, weights, counts)
    print(counts, round(b.income, 3), round(b.utility, 3))

# %%
# Utility is convex in sigma and concave in r, with no cross term, so the
# Hessian determinant is negative wherever both curvatures are nonzero. The
# finite-difference estimate is taken in exact rational arithmetic.
probe = hessian_probe(params, weights, [3, 6, 12, 24])
print(probe.classification, probe.A, probe.C, probe.det)
print("fd", probe.fd_A, probe.fd_B, probe.fd_C)

# %%
# Sweep r at fixed sigma: utility falls monotonically.
rs = np.linspace(0.0, 0.9, 7)
us = [
    payoff(IncentiveParams(o_hat=100.0, lam=0.4, alpha=a, beta=1.2, g=8, k_scale=5),
           WeightVector(0.0, (1.0,)), [3, 6, 12, 24]).utility
    for a in rs
]
print(np.round(us, 3))
print("strictly decreasing:", bool(np.all(np.diff(us) < 0)))
