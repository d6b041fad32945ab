"""Exact rational coefficient algebra for the C_n expansions.

All coefficients are :class:`fractions.Fraction`, which keeps numerator and
denominator coprime with a positive denominator after every operation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .errors import DomainError

# scale factor multiplying every term of an expansion, as a function of the argument
SCALES = ("n", "n^2/2", "p^2")


def rational(value) -> Fraction:
    """Parse an exact rational from int, Fraction, ``"p/q"`` or a decimal string.

    Floats are read through their shortest decimal repr, so ``5.65`` becomes
    ``113/20`` rather than the nearest binary fraction.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"non-finite rational {value}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse rational {value!r}") from exc
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@lru_cache(maxsize=None)
def b_coeff(s: int, i: int, j: int, r: int) -> int:
    """Integer b_{s,i,j,r} from its defining recurrence in j."""
    if min(s, i, j, r) < 0 or j < r:
        raise DomainError(f"b_coeff needs nonnegative indices with j >= r, got {(s, i, j, r)}")
    if j == 0:
        return 1
    if r == j:
        return b_coeff(s, i, j - 1, j - 1) * (j - 1 - i)
    if r == 0:
        return b_coeff(s, i, j - 1, 0) * (s + j - 1)
    return b_coeff(s, i, j - 1, r) * (s + j - 1) + b_coeff(s, i, j - 1, r - 1) * (r - 1 - i)


def t_coeff(a: Sequence, i: int, j: int) -> Fraction:
    """Transform coefficient t_{i,j} = (j-1)! * sum_{l=j}^{i} 2^(l-j) a_{l+1} / l!.

    ``a`` lists a_2, ..., a_m (so ``a[0]`` is a_2).  The sum is empty, and the
    result 0, when ``i = j - 1``; this is the t_{0,1} used for k = 1.
    """
    m = len(a) + 1
    if j < 1 or i < j - 1 or i > m - 1:
        raise DomainError(f"t_coeff needs 1 <= j <= i + 1 and i <= {m - 1}, got (i, j) = {(i, j)}")
    coeffs = [rational(x) for x in a]
    total = sum(
        (Fraction(2 ** (l - j), math.factorial(l)) * coeffs[l - 1] for l in range(j, i + 1)),
        Fraction(0),
    )
    return math.factorial(j - 1) * total


def thm29_coeff(k: int) -> Fraction:
    """(k-1)! (1 - 2^-k), the coefficient of p_n^2 / log^k p_n in C_n."""
    if k < 1:
        raise DomainError("k must be positive")
    return math.factorial(k - 1) * (1 - Fraction(1, 2**k))


class Polynomial:
    """Polynomial with rational coefficients, stored in ascending degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = [rational(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + (c if isinstance(x, (int, Fraction)) else float(c))
        return acc

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        pad = lambda c: list(c) + [Fraction(0)] * (n - len(c))
        return Polynomial(x + y for x, y in zip(pad(self.coeffs), pad(other.coeffs)))

    def __mul__(self, scalar) -> "Polynomial":
        q = rational(scalar)
        return Polynomial(c * q for c in self.coeffs)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Polynomial({[format_rational(c) for c in self.coeffs]})"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for deg in range(self.degree, -1, -1):
            c = self.coeffs[deg]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if deg == 0:
                body = format_rational(mag)
            else:
                var = "x" if deg == 1 else f"x^{deg}"
                if mag == 1:
                    body = var
                elif mag.denominator == 1:
                    body = f"{mag.numerator}{var}"
                else:
                    body = f"({format_rational(mag)})*{var}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out


@dataclass
class AsymptoticExpansion:
    """sum of coef * scale(x) * (log log x)^b / (log x)^a over terms (a, b).

    ``terms`` maps ``(log_power, loglog_power)`` to an exact coefficient.  A
    ``log_power`` of -1 stands for a factor ``log x`` in the numerator.
    ``remainder`` only describes the discarded tail.
    """

    scale: str
    terms: dict = field(default_factory=dict)
    remainder: str = ""

    def __post_init__(self):
        if self.scale not in SCALES:
            raise DomainError(f"unknown scale {self.scale!r}")
        clean = {}
        for key, coef in self.terms.items():
            a, b = key
            if b < 0:
                raise DomainError("loglog power must be nonnegative")
            q = rational(coef)
            if q != 0:
                clean[(int(a), int(b))] = q
        self.terms = clean

    def add_term(self, log_power: int, loglog_power: int, coef) -> None:
        key = (log_power, loglog_power)
        q = self.terms.get(key, Fraction(0)) + rational(coef)
        if q == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = q

    def coefficient(self, log_power: int, loglog_power: int = 0) -> Fraction:
        return self.terms.get((log_power, loglog_power), Fraction(0))

    def group(self, log_power: int) -> Polynomial:
        """Coefficients of 1/log^k collected as a polynomial in log log."""
        deg = max((b for a, b in self.terms if a == log_power), default=-1)
        return Polynomial(self.coefficient(log_power, b) for b in range(deg + 1))

    def __add__(self, other: "AsymptoticExpansion") -> "AsymptoticExpansion":
        if self.scale != other.scale:
            raise DomainError("cannot add expansions with different scales")
        out = AsymptoticExpansion(self.scale, dict(self.terms), self.remainder)
        for (a, b), c in other.terms.items():
            out.add_term(a, b, c)
        return out

    def sorted_terms(self) -> list:
        return sorted(self.terms.items())

    def __str__(self) -> str:
        body = ""
        for (a, b), c in self.sorted_terms():
            factor = format_rational(abs(c))
            if b:
                factor += f"*loglog^{b}" if b > 1 else "*loglog"
            if a == -1:
                factor += "*log"
            elif a > 0:
                factor += f"/log^{a}" if a > 1 else "/log"
            if factor.startswith("1*"):
                factor = factor[2:]
            if not body:
                body = factor if c > 0 else f"-{factor}"
            else:
                body += f" {'+' if c > 0 else '-'} {factor}"
        body = body or "0"
        tail = f" + {self.remainder}" if self.remainder else ""
        return f"[{self.scale}] * ({body}){tail}"


@dataclass(frozen=True)
class AisTable:
    """Coefficients a_{is} (0 <= i <= s <= m) of the asymptotic formula for p_n."""

    m: int
    entries: Mapping

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("AisTable depth m must be at least 1")
        norm = {}
        for (i, s), v in dict(self.entries).items():
            if not (0 <= i <= s <= self.m):
                raise DomainError(f"a_{{{i},{s}}} outside 0 <= i <= s <= {self.m}")
            norm[(int(i), int(s))] = rational(v)
        missing = [(i, s) for s in range(1, self.m + 1) for i in range(s + 1) if (i, s) not in norm]
        if missing:
            raise DomainError(f"AisTable incomplete, missing (i, s) = {missing}")
        bad = [s for s in range(1, self.m + 1) if norm[(s, s)] != 1]
        if bad:
            raise DomainError(f"a_ss must equal 1, violated for s = {bad}")
        object.__setattr__(self, "entries", norm)

    def __getitem__(self, key) -> Fraction:
        return self.entries[key]

    @classmethod
    def from_dict(cls, data: dict) -> "AisTable":
        try:
            entries = {(int(e["i"]), int(e["s"])): rational(e["value"]) for e in data["a"]}
            return cls(int(data["m"]), entries)
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed AisTable: {exc}") from exc

    @classmethod
    def load(cls, path) -> "AisTable":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "a": [
                {"i": i, "s": s, "value": format_rational(v)}
                for (i, s), v in sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0]))
            ],
        }

    def truncated(self, m: int) -> "AisTable":
        if m > self.m:
            raise DomainError(f"table only reaches m = {self.m}")
        return AisTable(m, {k: v for k, v in self.entries.items() if k[1] <= m})


BUILTIN_AIS_M2 = AisTable(
    2,
    {(0, 1): -2, (1, 1): 1, (0, 2): 11, (1, 2): -6, (2, 2): 1},
)


def h_m_expansion(m: int) -> AsymptoticExpansion:
    """h_m(n) = sum_{j=1}^m (j-1)! / (2^j log^j n), scale-free part of C_n."""
    if m < 1:
        raise DomainError("h_m needs m >= 1")
    return AsymptoticExpansion(
        "n^2/2", {(j, 0): Fraction(math.factorial(j - 1), 2**j) for j in range(1, m + 1)}
    )


def pn_expansion(m: int, table: AisTable) -> AsymptoticExpansion:
    """Asymptotic formula for p_n / n to depth m, from user-supplied a_{is}."""
    if m > table.m:
        raise DomainError(f"AisTable reaches m = {table.m}, need {m}")
    e = AsymptoticExpansion(
        "n",
        {(-1, 0): 1, (0, 1): 1, (0, 0): -1},
        f"O(n (log log n)^{m + 1} / log^{m + 1} n)",
    )
    for s in range(1, m + 1):
        sign = Fraction((-1) ** (s + 1), s)
        for i in range(s + 1):
            e.add_term(s, i, sign * table[(i, s)])
    return e


def thm21_expansion(m: int, table: AisTable) -> AsymptoticExpansion:
    """C_n / (n^2/2) as an exact expansion in 1/log n and log log n, to depth m."""
    if m < 1:
        raise DomainError("m must be positive")
    if m > table.m:
        raise DomainError(f"AisTable reaches m = {table.m}, need {m}")
    e = h_m_expansion(m)
    e.remainder = f"O(n^2 (log log n)^{m + 1} / log^{m + 1} n)"
    e.add_term(-1, 0, 1)
    e.add_term(0, 1, 1)
    e.add_term(0, 0, Fraction(-1, 2))
    for s in range(1, m + 1):
        sign = Fraction((-1) ** (s + 1), s)
        for i in range(s + 1):
            a = sign * table[(i, s)]
            e.add_term(s, i, 2 * a)
            for j in range(m - s + 1):
                for r in range(min(i, j) + 1):
                    e.add_term(s + j, i - r, -a * Fraction(b_coeff(s, i, j, r), 2**j))
    # every generated term already has log power <= m; keep the rule explicit
    e.terms = {k: v for k, v in e.terms.items() if k[0] <= m}
    return e


def u_polynomial(s: int, table: AisTable) -> Polynomial:
    """Monic U_s with the 1/log^s group of C_n/(n^2/2) equal to (-1)^(s+1) U_s(loglog) / s."""
    if s < 1 or s > table.m:
        raise DomainError(f"need 1 <= s <= {table.m}, got {s}")
    group = thm21_expansion(s, table.truncated(s)).group(s)
    return group * Fraction(s * (-1) ** (s + 1))


def thm29_expansion(m: int) -> AsymptoticExpansion:
    """C_n as sum_{k<m} (k-1)!(1-2^-k) p_n^2/log^k p_n + O(p_n^2/log^m p_n)."""
    if m < 1:
        raise DomainError("m must be positive")
    return AsymptoticExpansion(
        "p^2", {(k, 0): thm29_coeff(k) for k in range(1, m)}, f"O(p_n^2 / log^{m} p_n)"
    )


def log_series_expansion(m: int) -> AsymptoticExpansion:
    """x * sum_{k=1}^m (k-1)!/log^k x; shared main terms of pi(x) and li(x)."""
    if m < 1:
        raise DomainError("m must be positive")
    return AsymptoticExpansion(
        "n", {(k, 0): math.factorial(k - 1) for k in range(1, m + 1)}, f"O(x / log^{m + 1} x)"
    )
