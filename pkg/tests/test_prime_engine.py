import json

import numpy as np
import pytest

from primedeficit.errors import AccumulatorOverflowError, CapacityError, CheckpointError, DomainError
from primedeficit.prime_engine import (
    Checkpoint,
    PrimeEngine,
    PrimeRecord,
    simple_sieve,
    sieve_segment,
)

from oracles import brute_cn, trial_division_primes

ORACLE_PRIMES = trial_division_primes(104729)  # the first 10^4 primes


@pytest.fixture(scope="module")
def small_engine():
    # tiny segments and cache force the streaming paths on small inputs
    return PrimeEngine(capacity=10**6, segment_size=1000, cache_limit=2000)


def test_simple_sieve_matches_oracle():
    assert simple_sieve(104729).tolist() == ORACLE_PRIMES
    assert simple_sieve(1).tolist() == []
    assert simple_sieve(2).tolist() == [2]


@pytest.mark.parametrize("lo,hi", [(0, 100), (2, 3), (3, 4), (90, 97), (97, 98), (1000, 1999), (104000, 104730)])
def test_sieve_segment(lo, hi):
    base = simple_sieve(400)
    expect = [p for p in ORACLE_PRIMES if lo <= p < hi]
    got = sieve_segment(lo, hi, base)
    assert got.tolist() == expect
    assert np.all(np.diff(got) > 0)


@pytest.mark.parametrize("n,p", [(1, 2), (5, 11), (25, 97), (10**4, 104729)])
def test_nth_prime_examples(engine, n, p):
    assert engine.nth_prime(n) == p


@pytest.mark.parametrize("x,count", [(1, 0), (0, 0), (2, 1), (100, 25), (100.7, 25), (6 * 10**6, 412849)])
def test_prime_count_examples(engine, x, count):
    assert engine.prime_count(x) == count


@pytest.mark.parametrize("n,c", [(1, 0), (2, 1), (3, 5), (5, 27)])
def test_cn_examples(engine, n, c):
    assert engine.cn_exact(n) == c


def test_pi_step_integral_examples(engine):
    assert engine.pi_step_integral(1) == 0
    assert engine.pi_step_integral(3) == 5


@pytest.mark.parametrize("which", ["engine", "small_engine"])
def test_oracle_equivalence(which, request):
    eng = request.getfixturevalue(which)
    for n in [1, 2, 3, 10, 99, 100, 303, 1000, 2500, 9999, 10**4]:
        assert eng.nth_prime(n) == ORACLE_PRIMES[n - 1]
        assert eng.cn_exact(n) == brute_cn(ORACLE_PRIMES, n)
        assert eng.pi_step_integral(n) == eng.cn_exact(n)
    for x in [2, 3, 4, 1000, 7919, 7920, 50000, 104729]:
        assert eng.prime_count(x) == sum(1 for p in ORACLE_PRIMES if p <= x)


def test_stream_matches_oracle_for_first_10k(small_engine):
    recs = []
    small_engine.cn_stream(1, 10**4, recs.append)
    running = 0
    for n, rec in enumerate(recs, 1):
        p = ORACLE_PRIMES[n - 1]
        running += p
        assert rec == PrimeRecord(n, p, running, n * p - running)


def test_stream_examples(engine):
    recs = []
    engine.cn_stream(1, 3, recs.append)
    assert recs == [PrimeRecord(1, 2, 2, 0), PrimeRecord(2, 3, 5, 1), PrimeRecord(3, 5, 10, 5)]
    recs = []
    engine.cn_stream(1, 1, recs.append)
    assert recs == [PrimeRecord(1, 2, 2, 0)]


def test_stream_invariants(engine):
    prev = None
    for batch in engine.iter_batches(1, 200000):
        assert np.array_equal(batch.c, batch.n * batch.p - batch.sums)
        assert np.array_equal(batch.step, batch.c)
        assert np.all(batch.c >= 0)
        if prev is not None:
            assert batch.n[0] == prev.n[-1] + 1
        # C_{n+1} - C_n = n (p_{n+1} - p_n)
        assert np.array_equal(np.diff(batch.c), batch.n[:-1] * np.diff(batch.p))
        assert np.all(np.diff(batch.sums[1:]) > 0)
        prev = batch


def test_resume_from_checkpoint_is_identical(engine, tmp_path):
    cold = engine.cn_stream(1, 10**4, None)
    path = tmp_path / "ck.json"
    engine.cn_stream(1, 10**3, None, checkpoint_path=path)
    ck = Checkpoint.load(path)
    assert ck.n == 10**3
    warm = engine.cn_stream(10**3 + 1, 10**4, None, checkpoint=ck)
    assert warm.last == cold.last
    assert warm.step_integral == cold.step_integral


def test_sharding_determinism(small_engine):
    whole = []
    small_engine.cn_stream(1, 5000, whole.append)
    pieces = []
    ck = None
    for a, b in [(1, 777), (778, 778), (779, 3001), (3002, 5000)]:
        small_engine.cn_stream(a, b, pieces.append, checkpoint=ck)
        rec = pieces[-1]
        ck = Checkpoint(rec.n, rec.p, rec.sum, rec.c_n, small_engine.pi_step_integral(rec.n), rec.p + 1)
    assert pieces == whole


def test_checkpoint_cadence(engine, tmp_path):
    path = tmp_path / "ck.json"
    summary = engine.cn_stream(1, 25000, None, checkpoint_path=path, cadence=10000)
    assert summary.checkpoints_written >= 2
    assert Checkpoint.load(path).n == 25000


def test_checkpoint_roundtrip_and_corruption(tmp_path):
    ck = Checkpoint(5, 11, 28, 27, 27, 12)
    assert Checkpoint.from_json(ck.to_json()) == ck
    data = json.loads(ck.to_json())
    data["sum"] = "29"
    with pytest.raises(CheckpointError):
        Checkpoint.from_json(json.dumps(data))
    with pytest.raises(CheckpointError):
        Checkpoint.from_json(ck.to_json()[:-10])
    data = json.loads(ck.to_json())
    data["version"] = 99
    with pytest.raises(CheckpointError):
        Checkpoint.from_json(json.dumps(data))
    # internally inconsistent but correctly hashed
    bad = Checkpoint(5, 11, 28, 26, 27, 12)
    with pytest.raises(CheckpointError):
        Checkpoint.from_json(bad.to_json())


def test_capacity_errors():
    eng = PrimeEngine(capacity=1000)
    assert eng.nth_prime(168) == 997
    with pytest.raises(CapacityError):
        eng.nth_prime(169)
    with pytest.raises(CapacityError):
        eng.prime_count(1001)
    with pytest.raises(CapacityError):
        eng.cn_exact(500)


def test_domain_errors(engine):
    for bad in (0, -3, 2.0, True):
        with pytest.raises(DomainError):
            engine.nth_prime(bad)
    with pytest.raises(DomainError):
        list(engine.iter_batches(5, 4))


def test_narrow_accumulator_overflows_loudly():
    eng = PrimeEngine(capacity=10**6, segment_size=4096, cache_limit=100, accumulator=np.int32)
    assert eng.cn_exact(1000) == PrimeEngine().cn_exact(1000)
    with pytest.raises(AccumulatorOverflowError):
        eng.cn_exact(20000)
    with pytest.raises(AccumulatorOverflowError):
        eng.cn_stream(1, 20000, None)


def test_default_width_covers_capacity():
    eng = PrimeEngine()
    # pi(X) * X < X^2 bounds every accumulated quantity
    assert eng.capacity**2 < np.iinfo(np.int64).max


def test_workers_do_not_change_results():
    a = PrimeEngine(capacity=10**7, segment_size=10**5, cache_limit=1000, workers=1)
    b = PrimeEngine(capacity=10**7, segment_size=10**5, cache_limit=1000, workers=3)
    assert a.cn_stream(1, 200000, None).last == b.cn_stream(1, 200000, None).last
    assert a.prime_count(9_999_999) == b.prime_count(9_999_999) == 664579


def test_pi_integral_at_non_prime(engine):
    # pi is 4 on [7, 11): integral over [2, 10] = C_4 + 4 * (10 - 7)
    assert engine.pi_integral(10) == engine.cn_exact(4) + 12
    assert engine.pi_integral(11) == engine.cn_exact(5)


@pytest.mark.heavy
def test_large_index_heavy(engine):
    assert engine.nth_prime(66773604) == 1332450001
    assert engine.prime_count(10**9) == 50847534
