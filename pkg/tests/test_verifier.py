import csv
import io
import json
import math

import numpy as np
import pytest

from primedeficit.analytic_eval import EvaluatedBound, chi
from primedeficit.bound_factory import PROP53_HYPOTHESIS, PROP56_HYPOTHESIS, BoundCertificate, builtin_certificates
from primedeficit.errors import DomainError
from primedeficit.prime_engine import PrimeEngine
from primedeficit.verifier import (
    CSV_COLUMNS,
    VerificationReport,
    asymptotic_error_table,
    corollary_tables,
    hypothesis_spot_check,
    merge_reports,
    reports_to_csv,
    verify_range,
    verify_sharded,
)

from oracles import brute_cn, trial_division_primes

CERTS = builtin_certificates()


def test_prop56_small_range(engine):
    r = verify_range(CERTS["prop56_upper"], 1, 10**5, engine)
    assert r.verdict == "verified"
    assert r.passed == 10**5 and not r.failures and not r.indeterminate
    assert r.min_margin_n == 11


def test_prop53_below_threshold_is_out_of_domain(engine):
    r = verify_range(CERTS["prop53_lower"], 100, 200, engine)
    assert r.verdict == "out-of-domain"
    assert r.out_of_domain == 101 and not r.failures and r.passed == 0
    assert r.min_margin is None


def test_violation_and_indeterminate_detection(engine):
    primes = trial_division_primes(1000)
    # C_n itself, shifted: upper bound C_n - 1 fails everywhere it applies
    cert = BoundCertificate("tight", "upper", EvaluatedBound(-1.0), (), 1)
    r = verify_range(cert, 1, 3, engine)
    # C_1 = 0 > -1: fail
    assert r.failures == [1, 2, 3] and r.verdict == "violated"
    # a bound equal to C_5 = 27: rounding error straddles it
    assert brute_cn(primes, 5) == 27
    cert = BoundCertificate("fuzzy", "lower", EvaluatedBound(27.0), (), 5)
    r = verify_range(cert, 5, 5, engine)
    assert r.indeterminate == [5] and r.verdict == "indeterminate"
    # a lower certificate uses the bottom of its constant's interval
    cert = BoundCertificate("wide", "lower", EvaluatedBound(27.0, 0.5), (), 5)
    assert verify_range(cert, 5, 5, engine).verdict == "verified"


def test_exactness_near_2_53():
    # C_n above 2^53 must be compared as integers; a bound of C_n + 1 must fail
    eng = PrimeEngine()
    n = 32 * 10**6
    c = eng.cn_exact(n)
    assert c > 2**53
    cert = BoundCertificate("edge", "lower", EvaluatedBound(float(c + 64)), (), 1)
    r = verify_range(cert, n, n, eng)
    assert r.verdict in ("violated", "indeterminate")
    cert = BoundCertificate("edge", "lower", EvaluatedBound(float(c - 64)), (), 1)
    assert verify_range(cert, n, n, eng).verdict == "verified"


def test_shard_invariance(engine):
    cert = CERTS["prop56_upper"]
    whole = verify_range(cert, 1, 50000, engine)
    for shards in (2, 3, 7):
        merged = verify_sharded(cert, 1, 50000, engine, shards)
        assert merged.to_dict(runtime=False) == whole.to_dict(runtime=False)
    parts = [verify_range(cert, a, b, engine) for a, b in [(1, 10), (11, 12345), (12346, 50000)]]
    assert merge_reports(parts).to_dict(runtime=False) == whole.to_dict(runtime=False)
    assert merge_reports(parts[::-1]).to_dict(runtime=False) == whole.to_dict(runtime=False)


def test_merge_rejects_gaps(engine):
    cert = CERTS["prop56_upper"]
    a = verify_range(cert, 1, 10, engine)
    b = verify_range(cert, 12, 20, engine)
    with pytest.raises(DomainError):
        merge_reports([a, b])
    with pytest.raises(DomainError):
        merge_reports([])


def test_merge_ties_prefer_smaller_n():
    a = VerificationReport("c", "upper", 1, 10, passed=10, min_margin=5.0, min_margin_n=7)
    b = VerificationReport("c", "upper", 11, 20, passed=10, min_margin=5.0, min_margin_n=13)
    assert merge_reports([b, a]).min_margin_n == 7


def test_report_roundtrips(engine):
    r = verify_range(CERTS["prop56_upper"], 1, 1000, engine)
    assert VerificationReport.from_dict(json.loads(r.to_json())) == r
    d = r.to_dict()
    assert d["minMargin"]["absErr"] > 0 and "runtime" in d
    assert "runtime" not in r.to_dict(runtime=False)
    text = reports_to_csv([r, verify_range(CERTS["prop53_lower"], 1, 5, engine)])
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][3] == "verified" and rows[2][3] == "out-of-domain"
    assert int(rows[1][4]) + int(rows[1][5]) + int(rows[1][6]) + int(rows[1][7]) == 1000
    with pytest.raises(DomainError):
        VerificationReport.from_dict({**d, "version": 0})


def test_counts_cover_range(engine):
    cert = CERTS["prop53_lower"]
    r = verify_range(cert, 52703600, 52703700, engine)
    assert r.passed + len(r.failures) + len(r.indeterminate) + r.out_of_domain == r.size
    assert r.out_of_domain == 56


# -- tables ----------------------------------------------------------------------


def test_asymptotic_table_m2(engine):
    pts = [int(round(10**e)) for e in np.linspace(4, 6, 9)]
    rows = asymptotic_error_table(2, pts, engine)
    assert [r.n for r in rows] == pts
    errs = [r.normalized_error for r in rows]
    assert max(abs(e) for e in errs) < 5
    for r in rows:
        lg = math.log(r.p)
        assert r.normalized_error == pytest.approx((r.c_n - r.p**2 / (2 * lg)) * lg**2 / r.p**2)


def test_asymptotic_table_m8_uses_chi(engine):
    (row,) = asymptotic_error_table(8, [10**6], engine)
    p = row.p
    lg = math.log(p)
    lead = p * p * (1 / (2 * lg) + 3 / (4 * lg**2) + 7 / (4 * lg**3))
    assert row.truncation == pytest.approx(lead + chi(p), rel=1e-14)


def test_asymptotic_table_m3_bounded(engine):
    pts = [int(round(10**e)) for e in np.linspace(3, 6, 13)]
    errs = [r.normalized_error for r in asymptotic_error_table(3, pts, engine)]
    assert all(math.isfinite(e) for e in errs)
    # bounded over the sweep; no constant is asserted beyond that
    assert max(abs(e) for e in errs) < 10
    print("m=3 normalized errors:", [f"{e:.3f}" for e in errs])


def test_asymptotic_table_domain(engine):
    with pytest.raises(DomainError):
        asymptotic_error_table(2, [1], engine)
    with pytest.raises(DomainError):
        asymptotic_error_table(1, [10], engine)


def test_corollary_rows(engine):
    rows = corollary_tables([100, 10**4, 10**7], engine, pi_capacity=10**9)
    r100, r4, r7 = rows
    assert r100.p == 541 and r100.prime_sum == 24133
    assert r100.pi_p2 == engine.prime_count(292681)
    assert r4.pi_p2 is None  # p^2 beyond the capacity given here
    assert r7.pi_p2 is None and r7.li_p2.value > 0
    assert abs(r7.li_gap_normalized) < 10


def test_corollary_pi_column_under_extended_capacity():
    eng = PrimeEngine(capacity=2 * 10**10)
    (row,) = corollary_tables([2000], eng)
    assert row.p == 17389 and row.pi_p2 == eng.prime_count(17389**2)
    assert row.pi_gap_normalized is not None


def test_corollary_domain(engine):
    with pytest.raises(DomainError):
        corollary_tables([1], engine)


# -- spot checks -----------------------------------------------------------------


def test_spot_check_upper(engine):
    out = hypothesis_spot_check(PROP56_HYPOTHESIS, [11, 100, 10**6, 10], engine)
    assert [s.verdict for s in out] == ["pass", "pass", "pass", "below-cutoff"]
    assert out[0].pi_x == 5
    assert all(s.margin.lo >= 0 for s in out[:3])


def test_spot_check_lower_below_cutoff(engine):
    out = hypothesis_spot_check(PROP53_HYPOTHESIS, [10**6], engine)
    assert out[0].verdict == "below-cutoff" and out[0].margin is None


@pytest.mark.heavy
def test_spot_check_lower_heavy(engine):
    (s,) = hypothesis_spot_check(PROP53_HYPOTHESIS, [1332450001], engine)
    assert s.verdict == "pass"


@pytest.mark.heavy
def test_prop53_range_heavy(engine):
    r = verify_range(CERTS["prop53_lower"], 52703656, 52703756, engine)
    assert r.verdict == "verified" and r.passed == 101


@pytest.mark.heavy
def test_corollary_pi_column_at_1e4_heavy():
    eng = PrimeEngine(capacity=2 * 10**10)
    (row,) = corollary_tables([10**4], eng)
    assert row.p == 104729 and row.pi_p2 is not None
    assert abs(row.pi_gap_normalized) < 10
