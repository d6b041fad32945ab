"""Real-valued evaluation with explicit error bounds.

Logarithmic integral, expansion evaluation, the closed forms chi, Theta and
Omega, the explicit li inequalities, and quadrature checks of the integral
identities used to turn pi(x) bounds into bounds for C_n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import DomainError, PrecisionError
from .exact_coeffs import AsymptoticExpansion, rational, t_coeff, thm29_coeff
from .quadrature import integrate

EPS = float(np.finfo(float).eps)

# li(2) = Ei(log 2); the float is within half an ulp of the true value
LI2 = 1.045163780117492784844588889194613136523

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"


@dataclass(frozen=True)
class EvaluatedBound:
    """A real number known to lie in ``[value - abs_err, value + abs_err]``."""

    value: float
    abs_err: float = 0.0

    def __post_init__(self):
        if not (self.abs_err >= 0 and math.isfinite(self.abs_err)):
            raise PrecisionError(f"invalid error bound {self.abs_err}")

    @property
    def lo(self) -> float:
        return self.value - self.abs_err

    @property
    def hi(self) -> float:
        return self.value + self.abs_err

    def __add__(self, other) -> "EvaluatedBound":
        other = _as_bound(other)
        v = self.value + other.value
        return EvaluatedBound(v, self.abs_err + other.abs_err + EPS * abs(v))

    __radd__ = __add__

    def __neg__(self) -> "EvaluatedBound":
        return EvaluatedBound(-self.value, self.abs_err)

    def __sub__(self, other) -> "EvaluatedBound":
        return self + (-_as_bound(other))

    def __rsub__(self, other) -> "EvaluatedBound":
        return _as_bound(other) - self

    def __mul__(self, scalar) -> "EvaluatedBound":
        c = float(scalar)
        # float(scalar) is within EPS/2 relative of an exact rational scalar
        v = c * self.value
        return EvaluatedBound(v, abs(c) * self.abs_err + 2 * EPS * abs(v))

    __rmul__ = __mul__

    def at_least(self, threshold: float) -> str:
        """Verdict for the claim ``true value >= threshold``."""
        if self.lo >= threshold:
            return PASS
        if self.hi < threshold:
            return FAIL
        return INDETERMINATE

    def at_most(self, threshold: float) -> str:
        if self.hi <= threshold:
            return PASS
        if self.lo > threshold:
            return FAIL
        return INDETERMINATE

    def to_dict(self) -> dict:
        return {"value": self.value, "absErr": self.abs_err}


def _as_bound(x) -> EvaluatedBound:
    if isinstance(x, EvaluatedBound):
        return x
    if isinstance(x, (int, Fraction)):
        v = float(x)
        return EvaluatedBound(v, abs(v) * EPS / 2 if Fraction(v) != x else 0.0)
    return EvaluatedBound(float(x), 0.0)


def _to_float(x) -> tuple[float, float]:
    """Float image of x and a bound on the conversion error."""
    if isinstance(x, (int, Fraction, np.integer)):
        xf = float(x)
        return xf, float(abs(Fraction(xf) - Fraction(int(x) if isinstance(x, np.integer) else x)))
    return float(x), 0.0


def li(x, rel_tol: float = 1e-13) -> EvaluatedBound:
    """Logarithmic integral li(x) = p.v. int_0^x dt / log t.

    Computed as ``li(2) + int_{log 2}^{log x} e^u / u du``.

    Raises
    ------
    DomainError
        For x <= 1.
    PrecisionError
        If ``rel_tol`` (relative to ``max(|li(x)|, 1)``) cannot be met.
    """
    if not (0 < rel_tol <= 1e-6):
        raise DomainError("rel_tol must lie in (0, 1e-6]")
    xf, dx = _to_float(x)
    if not xf > 1 or not math.isfinite(xf):
        raise DomainError(f"li(x) needs x > 1, got {x}")
    if xf == 2.0 and dx == 0:
        return EvaluatedBound(LI2, EPS)
    u = math.log(xf)
    integrand = lambda t: np.exp(t) / t
    # tolerance is set against the final magnitude, estimated from the leading terms
    scale = max(1.0, abs(xf / u) if xf > 2 else 1.0)
    body, err = integrate(integrand, math.log(2.0), u, rel_tol=0.0, abs_tol=0.25 * rel_tol * scale)
    value = LI2 + body
    # endpoint perturbations: float(x) vs x, and rounding in log()
    err += EPS + dx / u + xf * EPS + EPS * abs(value)
    if err > rel_tol * max(abs(value), 1.0):
        raise PrecisionError(f"li({x}) error {err:.3g} exceeds tolerance")
    return EvaluatedBound(value, err)


def _scale(kind: str, x: float) -> float:
    return {"n": x, "n^2/2": 0.5 * x * x, "p^2": x * x}[kind]


def eval_expansion(e: AsymptoticExpansion, at: float) -> float:
    """Numeric value of the main terms of ``e`` at n (or p_n) = ``at``."""
    x = float(at)
    if not e.terms:
        return 0.0
    needs_loglog = any(b > 0 for _, b in e.terms)
    if x <= (math.e if needs_loglog else 1.0):
        raise DomainError(f"expansion argument {at} too small for its log terms")
    lg = math.log(x)
    llg = math.log(lg) if needs_loglog else 0.0
    s = _scale(e.scale, x)
    return math.fsum(float(c) * s * llg**b / lg**a for (a, b), c in e.sorted_terms())


CHI_COEFFS = {k: thm29_coeff(k) for k in range(4, 8)}
THETA_COEFFS = {
    4: Fraction("43.6") / 8,
    5: Fraction("90.9") / 4,
    6: Fraction("927.5") / 8,
    7: Fraction("702.5625"),
    8: Fraction("4942.21875"),
}
OMEGA_COEFFS = {
    4: Fraction("46.4") / 8,
    5: Fraction("95.1") / 4,
    6: Fraction("962.5") / 8,
    7: Fraction("5809.5") / 8,
    8: Fraction(59424, 8),
}
LEADING_COEFFS = {1: Fraction(1, 2), 2: Fraction(3, 4), 3: Fraction(7, 4)}


def log_power_sum(coeffs: Mapping[int, Fraction], p, square: bool = True) -> EvaluatedBound:
    """sum_k c_k * p^2 / log^k p (or p / log^k p) with a rounding bound."""
    pf, dp = _to_float(p)
    if not pf > 1:
        raise DomainError(f"argument must exceed 1, got {p}")
    lg = math.log(pf)
    base = pf * pf if square else pf
    terms = [float(c) * base / lg**k for k, c in sorted(coeffs.items())]
    value = math.fsum(terms)
    # each term: a few roundings plus k times the relative error of log()
    err = math.fsum(abs(t) * (k + 8) * EPS for t, k in zip(terms, sorted(coeffs)))
    if dp:
        err += math.fsum(abs(t) for t in terms) * (2 if square else 1) * dp / pf * 2
    return EvaluatedBound(value, err)


def chi(p) -> float:
    return log_power_sum(CHI_COEFFS, p).value


def theta(p) -> float:
    return log_power_sum(THETA_COEFFS, p).value


def omega(p) -> float:
    return log_power_sum(OMEGA_COEFFS, p).value


# which -> (side of li, coefficients of x/log^k x, smallest x covered)
LI_BOUNDS = {
    "lemma51": ("lower", [1, 1, 2, 6, 24, 120, 720, 5040], 4171),
    "lemma52": ("upper", [1, 1, 2, 6, 24, 120, 900], 10**16),
    "lemma54": ("upper", [1, 1, 2, 6, 24, 120, 720, 6300], 10**18),
}


@dataclass(frozen=True)
class LiBoundCheck:
    which: str
    x: float
    margin: EvaluatedBound
    verdict: str


def li_bound_rhs(which: str, x) -> EvaluatedBound:
    side, coeffs, _ = LI_BOUNDS[which]
    return log_power_sum({k: Fraction(c) for k, c in enumerate(coeffs, 1)}, x, square=False)


def li_bound_check(which: str, x, rel_tol: float = 1e-13) -> LiBoundCheck:
    """Signed margin of an explicit li inequality at x (nonnegative = holds)."""
    if which not in LI_BOUNDS:
        raise DomainError(f"unknown li bound {which!r}; choose from {sorted(LI_BOUNDS)}")
    side, _, x_min = LI_BOUNDS[which]
    if x < x_min:
        raise DomainError(f"{which} is stated for x >= {x_min}, got {x}")
    rhs = li_bound_rhs(which, x)
    value = li(x, rel_tol)
    margin = value - rhs if side == "lower" else rhs - value
    return LiBoundCheck(which, float(x), margin, margin.at_least(0.0))


# -- integral identities ------------------------------------------------------


def log_moment(k: int, r: float, s: float, rel_tol: float = 1e-13) -> tuple[float, float]:
    """int_r^s x / log^k x dx by direct quadrature in x."""
    if not (s >= r > 1):
        raise DomainError(f"need s >= r > 1, got r={r}, s={s}")
    return integrate(lambda t: t / np.log(t) ** k, r, s, rel_tol=rel_tol)


def _boundary(k: int, r: float, s: float) -> float:
    return s * s / math.log(s) ** k - r * r / math.log(r) ** k


def quadrature_identity_residual(which: str, **params) -> float:
    """|LHS - RHS| of an integration rule, LHS by quadrature, RHS in closed form.

    ``lemma24``/``lemma25`` take ``a, x``; ``lemma26`` takes ``r, s, n``;
    ``lemma27`` takes ``r, s, m``; ``prop28`` takes ``r, s, a`` with ``a``
    listing a_2..a_m.
    """
    if which in ("lemma24", "lemma25"):
        a, x = float(params["a"]), float(params["x"])
        if not x >= a > 1:
            raise DomainError(f"need x >= a > 1, got a={a}, x={x}")
        if which == "lemma24":
            lhs, _ = log_moment(1, a, x)
            rhs = (li(x * x) - li(a * a)).value
        else:
            lhs, _ = log_moment(2, a, x)
            rhs = 2 * li(x * x).value - 2 * li(a * a).value - x * x / math.log(x) + a * a / math.log(a)
        return abs(lhs - rhs)

    r, s = float(params["r"]), float(params["s"])
    if not s >= r > 1:
        raise DomainError(f"need s >= r > 1, got r={r}, s={s}")
    if which == "lemma26":
        n = int(params["n"])
        if n < 1:
            raise DomainError("lemma26 needs n >= 1")
        lhs, _ = log_moment(n + 1, r, s)
        inner, _ = log_moment(n, r, s)
        rhs = r * r / (n * math.log(r) ** n) - s * s / (n * math.log(s) ** n) + 2.0 / n * inner
        return abs(lhs - rhs)
    if which == "lemma27":
        m = int(params["m"])
        if m < 2:
            raise DomainError("lemma27 needs m >= 2")
        lhs, _ = log_moment(m, r, s)
        inner, _ = log_moment(2, r, s)
        fm = math.factorial(m - 1)
        rhs = 2 ** (m - 2) / fm * inner - math.fsum(
            2 ** (m - 1 - k) * math.factorial(k - 1) / fm * _boundary(k, r, s) for k in range(2, m)
        )
        return abs(lhs - rhs)
    if which == "prop28":
        a = [rational(v) for v in params["a"]]
        m = len(a) + 1
        if m < 2:
            raise DomainError("prop28 needs at least a_2")
        lhs = math.fsum(float(ak) * log_moment(k, r, s)[0] for k, ak in enumerate(a, 2))
        inner, _ = log_moment(2, r, s)
        rhs = float(t_coeff(a, m - 1, 1)) * inner - math.fsum(
            float(t_coeff(a, m - 1, k)) * _boundary(k, r, s) for k in range(2, m)
        )
        return abs(lhs - rhs)
    raise DomainError(f"unknown identity {which!r}")


def li_expansion_value(m: int, x) -> float:
    """x * sum_{k=1}^m (k-1)!/log^k x, the truncated asymptotic series of li."""
    return log_power_sum({k: Fraction(math.factorial(k - 1)) for k in range(1, m + 1)}, x, square=False).value

