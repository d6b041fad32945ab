"""
Checking bounds against exact C_n
=================================

verify_range walks the exact C_n stream and compares each value with a
certificate as an integer, so nothing is lost to rounding on the exact side.
The tables record how fast the asymptotic truncations close in.
"""
import numpy as np

from primedeficit.bound_factory import builtin_certificates
from primedeficit.prime_engine import PrimeEngine
from primedeficit.verifier import (
    asymptotic_error_table,
    corollary_tables,
    reports_to_csv,
    verify_range,
    verify_sharded,
)

engine = PrimeEngine()
certs = builtin_certificates()

r = verify_range(certs["prop56_upper"], 1, 10**6, engine)
print(r.verdict, "min margin", round(r.min_margin, 3), "at n =", r.min_margin_n, f"({r.runtime_s:.1f}s)")

# below the stated threshold nothing is claimed, so nothing can fail
print(verify_range(certs["prop53_lower"], 100, 200, engine).verdict)

# shards seeded by checkpoints merge to the same report
s = verify_sharded(certs["prop56_upper"], 1, 10**5, engine, shards=4)
print(reports_to_csv([s]))

# (C_n - truncation) * log^m p / p^2 over a log-spaced sweep
pts = [int(10**e) for e in np.linspace(3, 6, 7)]
for m in (2, 3):
    errs = [row.normalized_error for row in asymptotic_error_table(m, pts, engine)]
    print(f"m={m}:", " ".join(f"{e:+.3f}" for e in errs))

# sum of the first n primes against li(p_n^2) and pi(p_n^2)
for row in corollary_tables([100, 1000, 10**5], engine, pi_capacity=10**9):
    pi = "-" if row.pi_gap_normalized is None else f"{row.pi_gap_normalized:+.4f}"
    print(row.n, row.prime_sum, f"{row.li_gap_normalized:+.4f}", pi)
