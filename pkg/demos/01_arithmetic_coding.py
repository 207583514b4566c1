"""Drive the arithmetic coder by hand.

The coder knows nothing about traffic: it consumes a stream of symbols and,
for every symbol, a quantized probability table. Cost per symbol is the
negative log probability the table assigned to it, so a good table compresses
and a bad one expands.
"""

import math

import numpy as np

from trafficzip import Decoder, Encoder, quantize_pmf

rng = np.random.default_rng(0)

# a skewed source: symbol 0 is common, the tail is rare
probs = np.array([0.70, 0.15, 0.08, 0.04, 0.02, 0.005, 0.004, 0.001])
pmf = quantize_pmf(probs)
symbols = rng.choice(len(probs), size=5000, p=probs / probs.sum())

encoder = Encoder()
for s in symbols:
    encoder.encode(pmf, int(s))
payload = encoder.finish()

entropy = -sum(p * math.log2(p) for p in probs if p > 0)
print(f"symbols:         {len(symbols)}")
print(f"source entropy:  {entropy:.3f} bits/symbol")
print(f"coded size:      {len(payload)} bytes = {8 * len(payload) / len(symbols):.3f} bits/symbol")

decoder = Decoder(payload, symbol_limit=len(symbols))
decoded = [decoder.decode(pmf) for _ in symbols]
assert decoded == list(symbols), "round trip must be exact"
print("round trip:      exact")

# feeding the coder a mismatched table still round-trips, just bigger
wrong = quantize_pmf(probs[::-1].copy())
encoder = Encoder()
for s in symbols:
    encoder.encode(wrong, int(s))
bad_payload = encoder.finish()
print(f"mismatched pmf:  {len(bad_payload)} bytes ({len(bad_payload) / len(payload):.1f}x larger)")
