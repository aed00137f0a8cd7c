"""Calibrating the MINE and CLUB probes on channels with known information.

Run: python walkthroughs/02_mi_probes.py   (about a minute)
"""
import math
import time

import numpy as np

from iedr.cied import ProbeConfig, probe_club, probe_mine

rng = np.random.default_rng(0)
n = 10_000
cfg = ProbeConfig()

cases = {}
cases["independent gaussians"] = (rng.standard_normal((n, 2)), rng.standard_normal((n, 2)), 0.0)
sym = rng.integers(0, 4, n)
onehot = np.eye(4)[sym]
cases["4-symbol identity"] = (onehot, onehot, math.log(4))
x = rng.standard_normal((n, 1))
rho = 0.8
y = rho * x + math.sqrt(1 - rho ** 2) * rng.standard_normal((n, 1))
cases["gaussian rho=0.8"] = (x, y, -0.5 * math.log(1 - rho ** 2))

print(f"{'channel':24s} {'true':>7s} {'MINE':>7s} {'CLUB':>7s} {'sec':>5s}")
for name, (a, b, true) in cases.items():
    t0 = time.perf_counter()
    lo, hi = probe_mine(a, b, cfg), probe_club(a, b, cfg)
    print(f"{name:24s} {true:7.3f} {lo:7.3f} {hi:7.3f} {time.perf_counter() - t0:5.1f}")

# MINE is a lower bound and CLUB an upper bound in expectation, so the truth
# should sit between them up to estimation noise on the held-out half. CLUB
# is loose for strong dependence: even with the exact Gaussian head it gives
# rho^2 / (1 - rho^2) = 1.78 nats on the rho=0.8 channel, and on the noiseless
# identity channel it grows with how sharp the head may become.
