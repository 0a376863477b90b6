"""
Small coordinates uniformly, large ones rotated
===============================================

For p < 2 the gradient bound is on ||Y||_q with q > 2, so a handful of
coordinates can be large. The split quantizer rounds the small ones on a
fixed grid, marks the large ones in a bitmap and sends those through a
rotated quantizer whose range adapts per group.
"""

# %%
import numpy as np

from lpquant import derive_split_spec
from lpquant.bounds import alpha0_estimate

rng = np.random.Generator(np.random.Philox(2))
# At p = 1 the threshold equals B and everything goes through the grid, so
# take p = 3/2 (q = 3) where spikes can exceed it.
s = derive_split_spec(64, p=1.5, B=1.0)
print(f"threshold c = {s.c:.3f}, capacity = {s.capacity}, CUQ levels = {s.cuq.k + 1}")
print(f"width: {s.d} bitmap + {s.cuq.width} CUQ + {s.ratq.width} RATQ = {s.width} bits")
print(f"nominal budget {s.nominal_width()} bits")

# %%
# An input with three spikes and a flat floor.
Y = np.full(64, 0.02)
Y[[3, 17, 40]] = [0.9, -0.6, 0.35]
Y /= np.linalg.norm(Y, ord=s.q)
out = s.sample(Y, rng, seed=123)
print("bitmap marks:", np.flatnonzero(out.support))
print("RATQ ladder indices:", out.ratq.ladder)

draws = np.array([s.quantize(Y, rng) for _ in range(5000)])
print("input at the spikes:", Y[[3, 17, 40]].round(3))
print("mean at the spikes: ", draws.mean(axis=0)[[3, 17, 40]].round(3))

# %%
est = alpha0_estimate(s, 1.5, 500, rng)
print(f"alpha0: Monte Carlo {est.value:.3f} +- {est.stderr:.3f}, analytic {s.alpha0:.3f}")
