"""
One signed basis vector per gradient
====================================

For inputs with ||Y||_1 <= B, the simplex quantizer sends a single index:
either "zero" or one of the 2d signed basis vectors. That costs
ceil(log2(2d + 1)) bits and the decoded vector is unbiased.
"""

# %%
import numpy as np

from lpquant import SimQ

rng = np.random.Generator(np.random.Philox(0))
d = 1024
q = SimQ(d, B=1.0)
print(f"d = {d}: {q.width} bits per message")

# %%
# A vector on the l_1 sphere, quantized many times. The running average
# converges to the input even though every draw has a single nonzero entry.
Y = rng.standard_normal(d)
Y /= np.abs(Y).sum()

draws = np.array([q.quantize(Y, rng) for _ in range(20000)])
print("nonzeros per draw:", np.unique(np.count_nonzero(draws, axis=1)))
err = np.linalg.norm(draws.mean(axis=0) - Y) / np.linalg.norm(Y)
print(f"relative error of the average: {err:.3f}")

# %%
# The wire format: one big-endian field holding the codeword.
msg = q.encode(Y, rng)
print("payload bits:", msg.payload, "->", msg.payload.to_bytes().hex())
print("decoded nonzero:", np.flatnonzero(q.decode(msg)), q.decode(msg)[np.flatnonzero(q.decode(msg))])
