"""Explicit lower and upper bounds for C_n built from pi(x) and li(x) inequalities.

A :class:`BoundHypothesis` states

* pi(x) >= (or <=) x/log x + sum_{k=2}^m a_k x/log^k x for x >= cutoff, and
* an li inequality with the (j-1)! x/log^j x series, valid for x >= li_cutoff
  (for the upper side the last coefficient is ``lam`` instead of (m-2)!).

From it :func:`make_certificate` produces

    C_n >= d + sum_{k=1}^{m-1} c_k p_n^2 / log^k p_n     (lower side)

or the matching upper bound, for every n >= n_min.  The constant d carries an
error interval coming from the evaluation of li(cutoff^2); the coefficients
are exact rationals.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .analytic_eval import (
    EPS,
    LEADING_COEFFS,
    LI_BOUNDS,
    OMEGA_COEFFS,
    THETA_COEFFS,
    EvaluatedBound,
    li,
    log_power_sum,
)
from .errors import DomainError
from .exact_coeffs import format_rational, rational, t_coeff

HYPOTHESIS_VERSION = 1
CERTIFICATE_VERSION = 1
SIDES = ("lower", "upper")


def _exact_real(value) -> int | Fraction:
    q = rational(value)
    return q.numerator if q.denominator == 1 else q


@dataclass(frozen=True)
class BoundHypothesis:
    side: str
    m: int
    a: tuple
    cutoff: int | Fraction
    li_cutoff: int | Fraction
    lam: Fraction | None = None
    label: str = ""

    def __post_init__(self):
        if self.side not in SIDES:
            raise DomainError(f"side must be one of {SIDES}, got {self.side!r}")
        if self.m < 2:
            raise DomainError("m must be at least 2")
        a = tuple(rational(x) for x in self.a)
        if len(a) != self.m - 1:
            raise DomainError(f"expected {self.m - 1} coefficients a_2..a_{self.m}, got {len(a)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "cutoff", _exact_real(self.cutoff))
        object.__setattr__(self, "li_cutoff", _exact_real(self.li_cutoff))
        if self.cutoff <= 1:
            raise DomainError("cutoff must exceed 1")
        if (self.lam is None) != (self.side == "lower"):
            raise DomainError("lambda is required for the upper side and forbidden for the lower side")
        if self.lam is not None:
            object.__setattr__(self, "lam", rational(self.lam))

    def t(self, i: int, j: int) -> Fraction:
        return t_coeff(self.a, i, j)

    @property
    def li_factor(self) -> Fraction:
        """1 + 2 t_{m-1,1}, the multiplier of li(p_n^2)."""
        return 1 + 2 * self.t(self.m - 1, 1)

    def pi_rhs(self, x) -> EvaluatedBound:
        """x/log x + sum a_k x/log^k x."""
        coeffs = {1: Fraction(1)}
        coeffs.update({k: ak for k, ak in enumerate(self.a, 2)})
        return log_power_sum(coeffs, x, square=False)

    def to_dict(self) -> dict:
        d = {
            "version": HYPOTHESIS_VERSION,
            "side": self.side,
            "m": self.m,
            "a": [format_rational(x) for x in self.a],
            "cutoff": _json_real(self.cutoff),
            "liCutoff": _json_real(self.li_cutoff),
        }
        if self.lam is not None:
            d["lambda"] = format_rational(self.lam)
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "BoundHypothesis":
        version = data.get("version", HYPOTHESIS_VERSION)
        if version != HYPOTHESIS_VERSION:
            raise DomainError(f"unsupported hypothesis version {version!r}")
        try:
            return cls(
                side=data["side"],
                m=int(data["m"]),
                a=tuple(data["a"]),
                cutoff=data["cutoff"],
                li_cutoff=data["liCutoff"],
                lam=data.get("lambda"),
                label=data.get("label", ""),
            )
        except KeyError as exc:
            raise DomainError(f"hypothesis is missing field {exc}") from exc

    @classmethod
    def load(cls, path) -> "BoundHypothesis":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _json_real(x):
    if isinstance(x, int):
        return x
    return format_rational(x)


PROP53_HYPOTHESIS = BoundHypothesis(
    side="lower",
    m=9,
    a=("1", "2", "5.65", "23.65", "118.25", "709.5", "4966.5", "0"),
    cutoff=1332450001,
    li_cutoff=4171,
    label="prop53",
)

PROP56_HYPOTHESIS = BoundHypothesis(
    side="upper",
    m=9,
    a=("1", "2", "6.35", "24.35", "121.75", "730.5", "6801.4", "0"),
    cutoff=11,
    li_cutoff=10**18,
    lam="6300",
    label="prop56",
)


def certificate_coefficients(h: BoundHypothesis) -> tuple:
    """Exact c_1..c_{m-1} of the certified bound, in simplified form."""
    m = h.m
    out = [Fraction(math.factorial(k - 1), 2**k) * (1 + 2 * h.t(k - 1, 1)) for k in range(1, m)]
    if h.side == "upper":
        out[-1] = h.li_factor * h.lam / 2 ** (m - 1) - h.a[-1] / (m - 1)
    return tuple(out)


def unsimplified_coefficients(h: BoundHypothesis) -> tuple:
    """c_k written as (k-1)!/2^k + (k-1)!/2^(k-1) t_{m-1,1} - t_{m-1,k}, before simplification."""
    m = h.m
    t1 = h.t(m - 1, 1)
    out = [
        Fraction(math.factorial(k - 1), 2**k) + Fraction(math.factorial(k - 1), 2 ** (k - 1)) * t1 - h.t(m - 1, k)
        for k in range(1, m)
    ]
    if h.side == "upper":
        out[-1] = h.li_factor * h.lam / 2 ** (m - 1) - h.t(m - 1, m - 1)
    return tuple(out)


@dataclass(frozen=True)
class BoundCertificate:
    """C_n >= (or <=) constant + sum_k coeffs[k-1] p_n^2/log^k p_n for n >= n_min."""

    name: str
    side: str
    constant: EvaluatedBound
    coeffs: tuple
    n_min: int
    provenance: dict = field(default_factory=dict)

    @property
    def certified_constant(self) -> float:
        """End of the constant's interval that keeps the bound sound."""
        return self.constant.lo if self.side == "lower" else self.constant.hi

    def evaluate(self, p) -> EvaluatedBound:
        s = log_power_sum(dict(enumerate(self.coeffs, 1)), p)
        v = self.certified_constant + s.value
        return EvaluatedBound(v, s.abs_err + EPS * (abs(v) + abs(self.certified_constant)))

    def evaluate_many(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized :meth:`evaluate` over an array of primes: (values, errors)."""
        pf = np.asarray(p, dtype=float)
        lg = np.log(pf)
        sq = pf * pf
        values = np.zeros_like(pf)
        errs = np.zeros_like(pf)
        for k, c in enumerate(self.coeffs, 1):
            term = float(c) * sq / lg**k
            values += term
            errs += np.abs(term) * (k + 10) * EPS
        values += self.certified_constant
        errs += EPS * (np.abs(values) + abs(self.certified_constant))
        return values, errs

    def to_dict(self) -> dict:
        return {
            "version": CERTIFICATE_VERSION,
            "name": self.name,
            "side": self.side,
            "constant": self.constant.to_dict(),
            "coeffs": [format_rational(c) for c in self.coeffs],
            "nMin": self.n_min,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundCertificate":
        if data.get("version") != CERTIFICATE_VERSION:
            raise DomainError(f"unsupported certificate version {data.get('version')!r}")
        if data["side"] not in SIDES:
            raise DomainError(f"bad side {data['side']!r}")
        const = data["constant"]
        return cls(
            name=data.get("name", ""),
            side=data["side"],
            constant=EvaluatedBound(float(const["value"]), float(const["absErr"])),
            coeffs=tuple(rational(c) for c in data["coeffs"]),
            n_min=int(data["nMin"]),
            provenance=data.get("provenance", {}),
        )

    @classmethod
    def load(cls, path) -> "BoundCertificate":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


def evaluate_certificate(c: BoundCertificate, p) -> EvaluatedBound:
    return c.evaluate(p)


def li_threshold_index(li_cutoff, engine) -> int:
    """pi(sqrt(li_cutoff)) + 1, using an integer square root."""
    y = math.floor(li_cutoff)
    return engine.prime_count(math.isqrt(max(y, 0))) + 1


def make_certificate(h: BoundHypothesis, engine, rel_tol: float = 1e-13) -> BoundCertificate:
    """Certificate of the bound implied by ``h``.

    The integral of pi over [2, cutoff] comes from the exact step sum;
    li(cutoff^2) is the only approximate ingredient.
    """
    x = h.cutoff
    m = h.m
    integral = engine.pi_integral(x)
    li_x2 = li(x * x, rel_tol)
    boundary = log_power_sum({k: h.t(m - 1, k) for k in range(1, m)}, x)
    constant = (boundary - li_x2 * h.li_factor) + integral
    n_min = max(engine.prime_count(x) + 1, li_threshold_index(h.li_cutoff, engine))
    provenance = dict(h.to_dict())
    provenance["integral"] = format_rational(Fraction(integral))
    provenance["conditional"] = "sound only if the pi(x) and li(x) inequalities of the hypothesis hold"
    return BoundCertificate(
        name=h.label or f"{h.side}-m{m}",
        side=h.side,
        constant=constant,
        coeffs=certificate_coefficients(h),
        n_min=n_min,
        provenance=provenance,
    )


def builtin_certificates() -> dict:
    """The two closed-form bounds with their published validity thresholds."""
    lower = dict(LEADING_COEFFS)
    lower.update(THETA_COEFFS)
    upper = dict(LEADING_COEFFS)
    upper.update(OMEGA_COEFFS)
    zero = EvaluatedBound(0.0, 0.0)
    return {
        "prop53_lower": BoundCertificate(
            "prop53_lower", "lower", zero, tuple(lower[k] for k in range(1, 9)), 52703656,
            {"form": "p^2/(2 log p) + 3p^2/(4 log^2 p) + 7p^2/(4 log^3 p) + Theta(p)"},
        ),
        "prop56_upper": BoundCertificate(
            "prop56_upper", "upper", zero, tuple(upper[k] for k in range(1, 9)), 1,
            {"form": "p^2/(2 log p) + 3p^2/(4 log^2 p) + 7p^2/(4 log^3 p) + Omega(p)"},
        ),
    }


def dusart_reference(p) -> float:
    """Earlier lower bound -47.1 + p^2/(2 log p) + 3p^2/(4 log^2 p), for comparison only."""
    p = float(p)
    if not p > 1:
        raise DomainError("p must exceed 1")
    lg = math.log(p)
    return -47.1 + p * p / (2 * lg) + 3 * p * p / (4 * lg * lg)


# -- the hand computation of d_0 with an explicit li upper bound --------------


def li_substituted_coefficients(h: BoundHypothesis, li_bound: str = "lemma52") -> tuple:
    """Coefficients of cutoff^2/log^k cutoff in d - integral after replacing li(cutoff^2).

    li(cutoff^2) is bounded by ``li_bound``'s series in y = cutoff^2, so
    y/log^j y = cutoff^2 / (2^j log^j cutoff).
    """
    side, series, y_min = LI_BOUNDS[li_bound]
    if side != "upper" or h.side != "lower":
        raise DomainError("substitution needs an upper li bound and a lower hypothesis")
    if h.cutoff * h.cutoff < y_min:
        raise DomainError(f"{li_bound} needs cutoff^2 >= {y_min}")
    m = h.m
    T = h.li_factor
    return tuple(
        h.t(m - 1, k) - (T * Fraction(series[k - 1], 2**k) if k <= len(series) else 0)
        for k in range(1, max(m, len(series) + 1))
    )


def d0_li_bound_estimate(h: BoundHypothesis, engine, li_bound: str = "lemma52") -> EvaluatedBound:
    """Lower estimate of d_0 using an li upper bound in place of li itself."""
    coeffs = li_substituted_coefficients(h, li_bound)
    s = log_power_sum(dict(enumerate(coeffs, 1)), h.cutoff)
    return s + engine.pi_integral(h.cutoff)


@dataclass(frozen=True)
class SubtractionLedger:
    """Conservatively rounded subtraction terms of the hand estimate of d_0.

    ``terms`` and ``total`` are integers in units of ``resolution``.
    """

    log_lower: Fraction
    resolution: int
    terms: tuple
    total: int

    @property
    def total_value(self) -> int:
        return self.total * self.resolution


def subtraction_ledger(h: BoundHypothesis, log_digits: int = 5, resolution: int = 10**8,
                       li_bound: str = "lemma52") -> SubtractionLedger:
    """Magnitudes of the negative terms of d_0 - integral, rounded outward.

    log(cutoff) is replaced by its lower bound truncated to ``log_digits``
    decimals and every magnitude is rounded up to a multiple of
    ``resolution``, so the result over-states the subtraction.
    """
    coeffs = li_substituted_coefficients(h, li_bound)
    if any(c > 0 for c in coeffs):
        raise DomainError("ledger supports only nonpositive substituted coefficients")
    scale = 10**log_digits
    log_lower = Fraction(math.floor(math.log(h.cutoff) * scale), scale)
    # the truncated value must stay below log(cutoff)
    if not math.exp(float(log_lower)) < h.cutoff:
        raise DomainError("truncated logarithm is not a lower bound")
    x2 = Fraction(h.cutoff) ** 2
    terms = tuple(
        math.ceil(-c * x2 / log_lower**k / resolution) for k, c in enumerate(coeffs, 1) if c != 0
    )
    return SubtractionLedger(log_lower, resolution, terms, sum(terms))

