"""
Averaging k draws and coding the type
=====================================

SimQ+ averages k independent simplex draws. The order of the draws carries
no information, so only the count of each index is sent, as its rank among
all C(d+k, k) count vectors, plus one sign bit per distinct index drawn.
"""

# %%
import math

import numpy as np

from lpquant import MultisetType, derive_simqplus_spec, multiset_rank, multiset_unrank

# Ranking is a bijection between count vectors and 0..C(d+k,k)-1.
d, k = 3, 2
for r in range(math.comb(d + k, k)):
    t = multiset_unrank(r, d, k)
    print(r, t.counts, multiset_rank(t))

# %%
rng = np.random.Generator(np.random.Philox(1))
for p in (2, 4, math.inf):
    q = derive_simqplus_spec(256, p, 1.0)
    print(f"p = {p}: k = {q.k}, {q.type_width} rank bits + {q.k} sign bits = {q.width}")

# %%
# Larger k shrinks the variance roughly like 1/k.
Y = rng.standard_normal(256)
Y /= np.linalg.norm(Y)
for k in (1, 16, 256):
    q = derive_simqplus_spec(256, 2, 1.0, k=k)
    mse = np.mean([np.sum((q.quantize(Y, rng) - Y) ** 2) for _ in range(2000)])
    print(f"k = {k:3d}  width = {q.width:4d}  E||Q(Y) - Y||^2 ~ {mse:.2f}")

t = MultisetType.from_symbols([0, 2, 2, 5], d=6)
print("type", t.counts, "rank", multiset_rank(t))
