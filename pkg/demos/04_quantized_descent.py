"""
Descent with quantized gradients
================================

Paired runs on the Bernoulli hard instance: the same oracle noise with and
without quantization. The quantized runs see fewer bits per step and pay
a small constant in suboptimality.
"""

# %%
import math

import numpy as np

from lpquant import SimQ, derive_simqplus_spec, derive_split_spec, make_oracle, psgd_run, smd_run

T, seeds = 3000, range(5)


def paired(oracle, quantizer, runner):
    base = np.mean([runner(oracle, None, T, seed=s).suboptimality for s in seeds])
    quant = np.mean([runner(oracle, quantizer, T, seed=s).suboptimality for s in seeds])
    return base, quant


# %%
cases = [
    ("p=2, SimQ+", 64, 2, derive_simqplus_spec(64, 2, 1.0), psgd_run),
    ("p=inf, SimQ", 256, math.inf, SimQ(256, 1.0), psgd_run),
    ("p=1, split", 64, 1, derive_split_spec(64, 1, 1.0), smd_run),
]
for name, d, p, q, runner in cases:
    oracle = make_oracle("bernoulli", d, p, 1.0, 1.0, delta=0.1, alpha_seed=1)
    base, quant = paired(oracle, q, runner)
    print(f"{name:12s} {q.width:4d} bits/step  unquantized {base:.4f}  quantized {quant:.4f}")

# %%
# Starving the channel: one SimQ draw per step versus d draws.
oracle = make_oracle("bernoulli", 128, 2, 1.0, 1.0, delta=0.1, alpha_seed=1)
for k in (1, 128):
    q = derive_simqplus_spec(128, 2, 1.0, k=k)
    sub = np.mean([psgd_run(oracle, q, T, seed=s).suboptimality for s in seeds])
    print(f"k = {k:3d}: {q.width:4d} bits/step, suboptimality {sub:.4f}")
