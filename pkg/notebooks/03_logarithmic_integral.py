"""
li(x) with an error bound
=========================

li is integrated as e^u / u in u = log t with adaptive Gauss-Kronrod.  Each
value comes back with a bound on its absolute error, and inequality checks
report pass, fail or indeterminate from that interval.
"""
from primedeficit.analytic_eval import (
    li,
    li_bound_check,
    li_expansion_value,
    quadrature_identity_residual,
)

for x in (2, 10, 121, 4171, 1e9, 1e18):
    v = li(x)
    print(f"li({x:g}) = {v.value:.15g}  +/- {v.abs_err:.1e}")

# the truncated series x * sum (k-1)!/log^k x approaches li from below
x = 1e12
for m in (3, 5, 7, 9):
    print(m, li(x).value - li_expansion_value(m, x))

# explicit li inequalities, each checked at the start of its range
for which, at in (("lemma51", 4171), ("lemma52", 1e16), ("lemma54", 1e18)):
    chk = li_bound_check(which, at)
    print(which, at, chk.verdict, f"margin={chk.margin.value:.6g}")

# integration-by-parts identities; residuals sit at the quadrature noise floor
print(quadrature_identity_residual("lemma24", a=2, x=10))
print(quadrature_identity_residual("lemma27", r=2, s=500, m=6))
print(quadrature_identity_residual("prop28", r=2, s=50, a=["1", "2", "5.65"]))
