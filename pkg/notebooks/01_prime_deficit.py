"""
The prime-sum deficit C_n
=========================

C_n = n p_n - (p_1 + ... + p_n) measures how far the first n primes fall
short of n copies of the largest one.  It is also the area under the
prime-counting step function from 2 to p_n, which is how it is checked here.
"""
import tempfile
from pathlib import Path

import numpy as np

from primedeficit.prime_engine import Checkpoint, PrimeEngine

engine = PrimeEngine()

# a few small values by hand: p = 2, 3, 5, 7, 11
for n in range(1, 6):
    rec = engine.record(n)
    print(f"n={n}  p_n={rec.p:3d}  sum={rec.sum:3d}  C_n={rec.c_n}")

# the step-function area is summed as k * (p_{k+1} - p_k)
for n in (10, 1000, 10**5):
    print(n, engine.cn_exact(n), engine.pi_step_integral(n))

# streaming hands out numpy batches; every column is exact int64
batch = next(engine.iter_batches(1, 10**6))
print("first batch:", len(batch.n), "records, C equals step area:", np.array_equal(batch.c, batch.step))

# growth: C_n is roughly p_n^2 / (2 log p_n)
for n in (10**4, 10**5, 10**6):
    p = engine.nth_prime(n)
    print(f"n={n:>8d}  C_n / (p^2 / 2 log p) = {engine.cn_exact(n) / (p * p / (2 * np.log(p))):.4f}")

# long runs can stop and resume from a hashed checkpoint
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "run.json"
    engine.cn_stream(1, 200000, None, checkpoint_path=path, cadence=50000)
    ck = Checkpoint.load(path)
    print("checkpoint at n =", ck.n, "p =", ck.p)
    resumed = engine.cn_stream(ck.n + 1, 300000, None, checkpoint=ck)
    print("resumed to", resumed.last.n, "C =", resumed.last.c_n, "direct:", engine.cn_exact(300000))
