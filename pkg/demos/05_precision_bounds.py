"""
How many bits are enough
========================

Closed-form bounds on the precision needed to keep the unquantized rate,
and the error floor when fewer bits are available. Absolute constants
are unknown, so these are shapes rather than numbers to compare directly.
"""

# %%
import math

from lpquant.bounds import benchmark_u, error_lower, precision_bounds

for p in (1, 2, 4, math.inf):
    row = [precision_bounds(d, p) for d in (64, 256, 1024)]
    print(f"p = {p}: " + "  ".join(f"d={b.d}: [{b.lower_bits:.1f}, {b.upper_bits:.1f}]" for b in row))

# %%
T, d = 10_000, 256
print("U(T, 2) =", round(benchmark_u(T, 2, d, 1.0, 1.0), 4))
for r in (1, 2, 4, 8, 32, 128, 256):
    print(f"r = {r:3d} bits -> error floor {error_lower(T, r, 2, d, 1.0, 1.0):.4f}")
