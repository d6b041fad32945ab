"""
Exact coefficients of the C_n expansions
========================================

Everything here is a Fraction.  The expansion of C_n in powers of 1/log n
is assembled from a table of prime-asymptotic coefficients a_is and the
integer family b_{s,i,j,r}.
"""
from primedeficit.exact_coeffs import (
    BUILTIN_AIS_M2,
    AisTable,
    b_coeff,
    t_coeff,
    thm21_expansion,
    thm29_expansion,
    u_polynomial,
)

# b_{s,i,j,r} for s = 2, i = 1 as a small triangle
for j in range(5):
    print(j, [b_coeff(2, 1, j, r) for r in range(j + 1)])

# expansion of C_n / (n^2/2) to depth 2 with the built-in table
print(thm21_expansion(2, BUILTIN_AIS_M2))

# the 1/log^s groups collapse to monic polynomials in log log n
for s in (1, 2):
    print(f"U_{s}(x) =", u_polynomial(s, BUILTIN_AIS_M2))

# tables are inputs; change a_01 and the polynomial moves
alt = AisTable(1, {(0, 1): 0, (1, 1): 1})
print("U_1 with a_01 = 0:", u_polynomial(1, alt))

# in terms of p_n the coefficients are (k-1)! (1 - 2^-k)
print(thm29_expansion(8))

# the transform t_{i,j} used by the explicit bounds; decimals stay exact
a = ["1", "2", "5.65", "23.65", "118.25", "709.5", "4966.5", "0"]
print("t_{3,1} =", t_coeff(a, 3, 1), " t_{8,1} =", t_coeff(a, 8, 1))
