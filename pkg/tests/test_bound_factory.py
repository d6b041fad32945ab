import json
import math
from fractions import Fraction

import mpmath
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from primedeficit.analytic_eval import LEADING_COEFFS, OMEGA_COEFFS, THETA_COEFFS, EvaluatedBound, log_power_sum
from primedeficit.bound_factory import (
    PROP53_HYPOTHESIS,
    PROP56_HYPOTHESIS,
    BoundCertificate,
    BoundHypothesis,
    builtin_certificates,
    certificate_coefficients,
    d0_li_bound_estimate,
    dusart_reference,
    evaluate_certificate,
    li_substituted_coefficients,
    li_threshold_index,
    make_certificate,
    subtraction_ledger,
    unsimplified_coefficients,
)
from primedeficit.errors import CapacityError, DomainError
from primedeficit.exact_coeffs import t_coeff
from primedeficit.prime_engine import PrimeEngine

fractions = st.fractions(min_value=-1000, max_value=1000, max_denominator=100)


@st.composite
def hypotheses(draw):
    m = draw(st.integers(2, 9))
    a = draw(st.lists(fractions, min_size=m - 1, max_size=m - 1))
    side = draw(st.sampled_from(["lower", "upper"]))
    lam = draw(fractions) if side == "upper" else None
    return BoundHypothesis(side, m, tuple(a), 11, 100, lam)


def test_hypothesis_validation():
    with pytest.raises(DomainError):
        BoundHypothesis("lower", 1, (), 10, 10)
    with pytest.raises(DomainError):
        BoundHypothesis("lower", 3, (1,), 10, 10)
    with pytest.raises(DomainError):
        BoundHypothesis("upper", 2, (1,), 10, 10)
    with pytest.raises(DomainError):
        BoundHypothesis("lower", 2, (1,), 10, 10, lam=5)
    with pytest.raises(DomainError):
        BoundHypothesis("sideways", 2, (1,), 10, 10)
    with pytest.raises(DomainError):
        BoundHypothesis("lower", 2, (1,), 1, 10)


def test_decimal_inputs_are_exact():
    assert PROP53_HYPOTHESIS.a[2] == Fraction(113, 20)
    assert PROP56_HYPOTHESIS.a[6] == Fraction(68014, 10)
    assert PROP56_HYPOTHESIS.lam == 6300


def test_hypothesis_json_roundtrip(tmp_path):
    for h in (PROP53_HYPOTHESIS, PROP56_HYPOTHESIS):
        path = tmp_path / "h.json"
        path.write_text(json.dumps(h.to_dict()))
        assert BoundHypothesis.load(path) == h
    raw = {"side": "upper", "m": 3, "a": ["1", "2.5"], "cutoff": 11, "liCutoff": 1e18, "lambda": "6300"}
    h = BoundHypothesis.from_dict(raw)
    assert h.a == (1, Fraction(5, 2)) and h.li_cutoff == 10**18
    with pytest.raises(DomainError):
        BoundHypothesis.from_dict({"side": "lower", "m": 2})
    with pytest.raises(DomainError):
        BoundHypothesis.from_dict({**raw, "version": 7})


# -- coefficients -----------------------------------------------------------------


def test_prop53_coefficients_are_theta():
    c = certificate_coefficients(PROP53_HYPOTHESIS)
    assert len(c) == 8
    assert c[:3] == tuple(LEADING_COEFFS[k] for k in (1, 2, 3))
    assert c[3:] == tuple(THETA_COEFFS[k] for k in range(4, 9))


def test_prop56_coefficients_match_omega():
    c = certificate_coefficients(PROP56_HYPOTHESIS)
    assert c[:3] == tuple(LEADING_COEFFS[k] for k in (1, 2, 3))
    assert c[3:7] == tuple(OMEGA_COEFFS[k] for k in range(4, 8))
    # the published Omega rounds the last coefficient up by 0.4375/8
    assert OMEGA_COEFFS[8] - c[7] == Fraction("0.4375") / 8


@settings(max_examples=200, deadline=None)
@given(hypotheses())
def test_simplified_equals_unsimplified(h):
    assert certificate_coefficients(h) == unsimplified_coefficients(h)


def test_upper_last_coefficient_formula():
    h = PROP56_HYPOTHESIS
    last = (1 + 2 * t_coeff(h.a, 8, 1)) * h.lam / 2**8 - h.a[-1] / 8
    assert certificate_coefficients(h)[-1] == last


# -- certificates -----------------------------------------------------------------


def test_builtin_certificates():
    b = builtin_certificates()
    lo, up = b["prop53_lower"], b["prop56_upper"]
    assert lo.coeffs[:3] == (Fraction(1, 2), Fraction(3, 4), Fraction(7, 4))
    assert lo.n_min == 52703656 and up.n_min == 1
    assert lo.side == "lower" and up.side == "upper"


def test_builtin_sandwich_formal():
    b = builtin_certificates()
    assert all(x <= y for x, y in zip(b["prop53_lower"].coeffs, b["prop56_upper"].coeffs))
    for p in (1e6, 1e9, 1e12):
        assert b["prop53_lower"].evaluate(p).hi < b["prop56_upper"].evaluate(p).lo


def test_zero_certificate():
    c = BoundCertificate("z", "lower", EvaluatedBound(0.0), (0, 0, 0), 1)
    assert evaluate_certificate(c, 12345).value == 0.0


def test_evaluate_many_matches_scalar():
    import numpy as np

    c = builtin_certificates()["prop56_upper"]
    ps = np.array([3, 11, 1000003, 1332450011], dtype=np.int64)
    vals, errs = c.evaluate_many(ps)
    for p, v, e in zip(ps, vals, errs):
        s = c.evaluate(int(p))
        assert abs(v - s.value) <= e + s.abs_err


def test_certified_constant_policy():
    const = EvaluatedBound(100.0, 2.0)
    assert BoundCertificate("a", "lower", const, (), 1).certified_constant == 98.0
    assert BoundCertificate("a", "upper", const, (), 1).certified_constant == 102.0


def test_certificate_json_roundtrip(tmp_path, engine):
    cert = make_certificate(PROP56_HYPOTHESIS, engine)
    path = tmp_path / "c.json"
    cert.save(path)
    back = BoundCertificate.load(path)
    assert back == cert
    data = json.loads(path.read_text())
    assert data["coeffs"][7] == "950777/128"
    data["version"] = 2
    with pytest.raises(DomainError):
        BoundCertificate.from_dict(data)


def reduced_hypothesis():
    return BoundHypothesis("lower", 9, PROP53_HYPOTHESIS.a, 10**6, 4171, label="reduced")


def test_reduced_certificate_against_oracle(engine):
    h = reduced_hypothesis()
    cert = make_certificate(h, engine)
    x = 10**6
    primes = list(sympy.primerange(2, x + 1))
    integral = sum(x - p for p in primes)
    with mpmath.workdps(40):
        X = mpmath.mpf(x)
        T = mpmath.mpf(h.li_factor.numerator) / h.li_factor.denominator
        boundary = sum(
            mpmath.mpf(t.numerator) / t.denominator * X**2 / mpmath.log(X) ** k
            for k, t in ((k, t_coeff(h.a, 8, k)) for k in range(1, 9))
        )
        ref = integral - T * mpmath.li(X**2) + boundary
    assert cert.constant.lo <= ref <= cert.constant.hi
    assert cert.constant.abs_err < 1e-6 * abs(cert.constant.value)
    assert cert.coeffs == certificate_coefficients(PROP53_HYPOTHESIS)
    assert cert.n_min == len(primes) + 1
    assert cert.provenance["integral"] == str(integral)


def test_thresholds(engine):
    assert li_threshold_index(4171, engine) == engine.prime_count(64) + 1
    assert li_threshold_index(10**18, engine) == 50847535
    assert li_threshold_index(99.9, engine) == 5


def test_prop56_certificate(engine):
    cert = make_certificate(PROP56_HYPOTHESIS, engine)
    assert cert.provenance["integral"] == "27"
    assert cert.n_min == 50847535
    # the constant is well resolved (about 639, see the acceptance suite)
    assert cert.constant.abs_err < 1e-8


def test_prop56_margin_at_6e6(engine):
    # closed form minus the generated bound at the first prime past 6*10^6,
    # with the published d_1 = 450
    p = engine.nth_prime(412850)
    assert p > 6 * 10**6
    gap = log_power_sum({8: Fraction("0.4375") / 8}, p).value - 450
    assert gap >= 109


def test_capacity_guard():
    small = PrimeEngine(capacity=10**5)
    with pytest.raises(CapacityError):
        make_certificate(PROP53_HYPOTHESIS, small)


def test_dusart_reference():
    assert dusart_reference(math.e) == pytest.approx(-47.1 + math.e**2 / 2 + 3 * math.e**2 / 4)
    lo = builtin_certificates()["prop53_lower"]
    for p in (1e6, 1e8, 1e10, 1e12):
        assert dusart_reference(p) < lo.evaluate(p).lo
    assert dusart_reference(1e300 ** 0.5) / (1e300 / (2 * math.log(1e150))) == pytest.approx(1, rel=0.01)
    with pytest.raises(DomainError):
        dusart_reference(1)


# -- the hand estimate of d_0 ----------------------------------------------------


def test_subtraction_ledger_digits():
    led = subtraction_ledger(PROP53_HYPOTHESIS)
    assert led.log_lower == Fraction("21.01028")
    assert led.log_lower >= Fraction("21.01027")
    assert led.terms == (422512933, 30164729, 3349997, 496560, 98548, 23930, 10370)
    assert led.total_value == 45665706700000000
    assert f"{led.total_value:.8e}" == "4.56657067e+16"


def test_subtraction_ledger_domain():
    with pytest.raises(DomainError):
        subtraction_ledger(PROP56_HYPOTHESIS)


def test_li_substitution_sign_pattern():
    c = li_substituted_coefficients(PROP53_HYPOTHESIS)
    assert len(c) == 8
    assert c[7] == t_coeff(PROP53_HYPOTHESIS.a, 8, 8)
    assert sum(1 for x in c if x < 0) == 7


@pytest.mark.heavy
def test_prop53_certificate_heavy(engine):
    cert = make_certificate(PROP53_HYPOTHESIS, engine)
    assert cert.constant.lo > 3.9e10
    assert cert.n_min == 66773605
    est = d0_li_bound_estimate(PROP53_HYPOTHESIS, engine)
    assert 3.9e10 <= est.lo and est.hi <= cert.constant.lo
    assert int(cert.provenance["integral"]) == 45665745738169817


def test_upper_constant_against_oracle(engine):
    # independent 50-digit evaluation of the upper constant at x_1 = 11
    h = PROP56_HYPOTHESIS
    cert = make_certificate(h, engine)
    integral = sum(11 - p for p in sympy.primerange(2, 12))
    assert integral == 27
    with mpmath.workdps(50):
        X = mpmath.mpf(11)
        T = h.li_factor
        ref = integral - mpmath.mpf(T.numerator) / T.denominator * mpmath.li(X**2) + sum(
            mpmath.mpf(t.numerator) / t.denominator * X**2 / mpmath.log(X) ** k
            for k, t in ((k, t_coeff(h.a, 8, k)) for k in range(1, 9))
        )
    assert cert.constant.lo <= ref <= cert.constant.hi
    assert 639.1 < ref < 639.2
