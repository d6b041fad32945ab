"""
From pi(x) bounds to bounds on C_n
==================================

A hypothesis fixes a pi(x) inequality beyond a cutoff plus an li
inequality.  make_certificate turns it into C_n >= d + sum c_k p^2/log^k p
(or <=).  The c_k are exact; d carries the li error interval.

The full lower-bound certificate sieves to 1.33e9 and takes about twenty
seconds, so this demo uses a smaller cutoff for it.
"""
from primedeficit.bound_factory import (
    PROP53_HYPOTHESIS,
    PROP56_HYPOTHESIS,
    BoundHypothesis,
    make_certificate,
    subtraction_ledger,
)
from primedeficit.prime_engine import PrimeEngine

engine = PrimeEngine()

up = make_certificate(PROP56_HYPOTHESIS, engine)
print("upper constant:", up.constant.value, "+/-", up.constant.abs_err)
print("upper coefficients:", [str(c) for c in up.coeffs])
print("valid from n =", up.n_min)

small = BoundHypothesis("lower", 9, PROP53_HYPOTHESIS.a, 10**6, 4171)
lo = make_certificate(small, engine)
print("lower constant with cutoff 1e6:", lo.constant.value)
print("lower coefficients:", [str(c) for c in lo.coeffs])

# the hand estimate of the lower constant, term by term, in units of 1e8
led = subtraction_ledger(PROP53_HYPOTHESIS)
print("log x0 >=", float(led.log_lower), "terms:", led.terms, "total:", f"{led.total_value:.8e}")

# a certificate evaluated at a prime; the interval is what a verifier compares
p = engine.nth_prime(10**6)
print("upper bound at p_1e6:", up.evaluate(p), " exact C:", engine.cn_exact(10**6))
