"""Segmented prime sieve with exact streaming prime sums.

The engine produces p_n, pi(x), the running sums S_n = p_1 + ... + p_n, the
deficit C_n = n*p_n - S_n and the step integral of pi(x) from 2 to p_n.
Everything on those paths is integer arithmetic.

Width analysis
--------------
Segments are processed with numpy ``int64`` arithmetic and carried between
segments as Python integers.  For primes up to the capacity X every
intermediate quantity is bounded by ``pi(X) * X < X**2``; with the default
``X = 2e9`` that is ``4e18 < 2**63 - 1``.  Every segment is still checked
against the accumulator limit before it is combined, so a narrower dtype
(or a larger capacity) raises :class:`AccumulatorOverflowError` instead of
wrapping silently.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .errors import AccumulatorOverflowError, CapacityError, CheckpointError, DomainError

DEFAULT_CAPACITY = 2_000_000_000
# integers per segment; the odd-only mask is half this many bytes
DEFAULT_SEGMENT_SIZE = 1 << 24
DEFAULT_CACHE_LIMIT = 1 << 25
DEFAULT_CHECKPOINT_CADENCE = 1_000_000
CHECKPOINT_VERSION = 1
_CHUNK = 1 << 20


@dataclass(frozen=True)
class PrimeRecord:
    """One step of the exact stream: ``(n, p_n, S_n, C_n)``."""

    n: int
    p: int
    sum: int
    c_n: int


@dataclass(frozen=True)
class SieveSegment:
    lo: int
    hi: int
    primes: np.ndarray


@dataclass(frozen=True)
class Checkpoint:
    """Resumable state of the stream after index ``n``.

    ``position`` is the first integer not yet sieved (``p + 1``).  The file
    form is a JSON object whose ``hash`` field is the SHA-256 of the other
    fields serialized canonically.
    """

    n: int
    p: int
    sum: int
    c_n: int
    step_integral: int
    position: int
    version: int = CHECKPOINT_VERSION

    def payload(self) -> dict:
        # integers as strings so the file never depends on a JSON number width
        return {k: (str(v) if k != "version" else v) for k, v in asdict(self).items()}

    def digest(self) -> str:
        blob = json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self) -> str:
        data = self.payload()
        data["hash"] = self.digest()
        return json.dumps(data, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Checkpoint":
        try:
            data = json.loads(text)
            if data.get("version") != CHECKPOINT_VERSION:
                raise CheckpointError(f"unsupported checkpoint version {data.get('version')!r}")
            stored = data.pop("hash")
            fields = {k: int(data[k]) for k in ("n", "p", "sum", "c_n", "step_integral", "position")}
        except CheckpointError:
            raise
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise CheckpointError(f"malformed checkpoint: {exc}") from exc
        if set(data) != set(fields) | {"version"}:
            raise CheckpointError("unexpected fields in checkpoint")
        ckpt = cls(**fields)
        if ckpt.digest() != stored:
            raise CheckpointError("checkpoint hash mismatch")
        if ckpt.c_n != ckpt.n * ckpt.p - ckpt.sum or ckpt.position != ckpt.p + 1 or ckpt.n < 1:
            raise CheckpointError("checkpoint fields are inconsistent")
        return ckpt

    def save(self, path: str | os.PathLike) -> None:
        tmp = f"{os.fspath(path)}.tmp"
        with open(tmp, "w") as fh:
            fh.write(self.to_json())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Checkpoint":
        with open(path) as fh:
            return cls.from_json(fh.read())

    @property
    def record(self) -> PrimeRecord:
        return PrimeRecord(self.n, self.p, self.sum, self.c_n)


@dataclass
class RecordBatch:
    """A contiguous block of stream records as parallel int64 arrays."""

    n: np.ndarray
    p: np.ndarray
    sums: np.ndarray
    c: np.ndarray
    step: np.ndarray

    def __len__(self) -> int:
        return len(self.n)

    def records(self) -> Iterator[PrimeRecord]:
        for row in zip(self.n.tolist(), self.p.tolist(), self.sums.tolist(), self.c.tolist()):
            yield PrimeRecord(*row)

    def checkpoint_at(self, i: int) -> Checkpoint:
        p = int(self.p[i])
        return Checkpoint(int(self.n[i]), p, int(self.sums[i]), int(self.c[i]), int(self.step[i]), p + 1)

    def __getitem__(self, sl: slice) -> "RecordBatch":
        return RecordBatch(self.n[sl], self.p[sl], self.sums[sl], self.c[sl], self.step[sl])


@dataclass
class StreamSummary:
    n_from: int
    n_to: int
    count: int
    last: PrimeRecord
    step_integral: int
    checkpoints_written: int = 0


def simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array (odd-only Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    size = (limit - 1) // 2  # slot i <-> 2*i + 3
    mask = np.ones(size, dtype=bool)
    for i in range((math.isqrt(limit) - 1) // 2):
        if mask[i]:
            p = 2 * i + 3
            mask[(p * p - 3) // 2 :: p] = False
    return np.concatenate(([2], 2 * np.flatnonzero(mask).astype(np.int64) + 3))


def _segment_mask(lo: int, hi: int, base: np.ndarray) -> tuple[int, np.ndarray]:
    """Odd-only composite mask for [lo, hi); returns (first odd, mask)."""
    start = max(lo | 1, 3)
    count = max(0, (hi - start + 1) // 2)
    mask = np.ones(count, dtype=bool)
    if count == 0:
        return start, mask
    odd = base[1:]
    odd = odd[odd * odd < hi]
    if odd.size:
        first = np.maximum(odd * odd, -(-start // odd) * odd)
        first += odd * (first % 2 == 0)
        offsets = (first - start) // 2
        for p, off in zip(odd.tolist(), offsets.tolist()):
            if off < count:
                mask[off::p] = False
    return start, mask


def sieve_segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    """Primes in [lo, hi).  ``base`` must hold every prime <= sqrt(hi - 1)."""
    start, mask = _segment_mask(lo, hi, base)
    primes = start + 2 * np.flatnonzero(mask).astype(np.int64)
    if lo <= 2 < hi:
        primes = np.concatenate(([2], primes)).astype(np.int64)
    return primes


def _count_segment(lo: int, hi: int, base: np.ndarray) -> int:
    _, mask = _segment_mask(lo, hi, base)
    return int(np.count_nonzero(mask)) + (1 if lo <= 2 < hi else 0)


def _floor_arg(x) -> int:
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return math.floor(x)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"non-finite argument {x}")
    return math.floor(x)


class PrimeEngine:
    """Exact prime data up to a fixed capacity.

    Parameters
    ----------
    capacity : int
        Largest integer the sieve may examine.  Requests needing more raise
        :class:`CapacityError`.
    segment_size : int
        Integers per sieve segment.
    cache_limit : int
        Primes up to this bound are kept in memory for O(log n) queries.
    workers : int
        Threads used to sieve segments; results are always consumed in order.
    accumulator : numpy integer dtype
        Width used for in-segment arithmetic (see module docstring).
    """

    def __init__(
        self,
        capacity: int = DEFAULT_CAPACITY,
        segment_size: int = DEFAULT_SEGMENT_SIZE,
        cache_limit: int = DEFAULT_CACHE_LIMIT,
        workers: int = 1,
        accumulator=np.int64,
    ):
        if capacity < 2:
            raise DomainError("capacity must be at least 2")
        if segment_size < 64:
            raise DomainError("segment_size must be at least 64")
        if workers < 1:
            raise DomainError("workers must be positive")
        self.capacity = int(capacity)
        self.segment_size = int(segment_size)
        self.cache_limit = min(int(cache_limit), self.capacity)
        self.workers = int(workers)
        self.accumulator = np.dtype(accumulator)
        self._acc_max = int(np.iinfo(self.accumulator).max)
        self._cache = simple_sieve(min(1 << 16, self.cache_limit))
        self._cached_upto = min(1 << 16, self.cache_limit)
        self._base = None

    # -- sieving -----------------------------------------------------------

    def _base_primes(self) -> np.ndarray:
        if self._base is None:
            self._base = simple_sieve(math.isqrt(self.capacity) + 1)
        return self._base

    def _ensure_cache(self, x: int) -> None:
        if x <= self._cached_upto:
            return
        upto = min(self.cache_limit, max(x, 2 * self._cached_upto))
        self._cache = simple_sieve(upto)
        self._cached_upto = upto

    def _segment_bounds(self, lo: int, hi: int) -> Iterator[tuple[int, int]]:
        while lo < hi:
            nxt = min(hi, lo + self.segment_size)
            yield lo, nxt
            lo = nxt

    def iter_segments(self, lo: int, hi: int) -> Iterator[SieveSegment]:
        """Sieve [lo, hi) segment by segment, in ascending order."""
        if hi - 1 > self.capacity:
            raise CapacityError(f"sieve range ends at {hi - 1} > capacity {self.capacity}")
        base = self._base_primes()
        bounds = self._segment_bounds(max(lo, 0), hi)
        if self.workers == 1:
            for a, b in bounds:
                yield SieveSegment(a, b, sieve_segment(a, b, base))
            return
        with ThreadPoolExecutor(self.workers) as pool:
            pending: deque = deque()
            for a, b in bounds:
                pending.append((a, b, pool.submit(sieve_segment, a, b, base)))
                if len(pending) >= 2 * self.workers:
                    a0, b0, fut = pending.popleft()
                    yield SieveSegment(a0, b0, fut.result())
            while pending:
                a0, b0, fut = pending.popleft()
                yield SieveSegment(a0, b0, fut.result())

    def _prime_chunks(self, start: int) -> Iterator[np.ndarray]:
        """Ascending primes >= start, in chunks, up to the capacity."""
        if start <= self._cached_upto:
            cached = self._cache[np.searchsorted(self._cache, start):]
            for i in range(0, len(cached), _CHUNK):
                yield cached[i : i + _CHUNK]
            start = self._cached_upto + 1
        for seg in self.iter_segments(start, self.capacity + 1):
            if seg.primes.size:
                yield seg.primes

    # -- point queries -----------------------------------------------------

    def prime_count(self, x) -> int:
        """pi(x) = number of primes <= x (for real x, pi(floor(x)))."""
        x = _floor_arg(x)
        if x < 2:
            return 0
        if x > self.capacity:
            raise CapacityError(f"pi({x}) needs sieving beyond capacity {self.capacity}")
        if x <= self.cache_limit:
            self._ensure_cache(x)
            return int(np.searchsorted(self._cache, x, side="right"))
        self._ensure_cache(self.cache_limit)
        count = len(self._cache)
        base = self._base_primes()
        for a, b in self._segment_bounds(self._cached_upto + 1, x + 1):
            count += _count_segment(a, b, base)
        return count

    def nth_prime(self, n: int) -> int:
        """The n-th prime, p_1 = 2."""
        n = self._check_index(n)
        if n <= len(self._cache):
            return int(self._cache[n - 1])
        if n >= 6:
            bound = int(n * (math.log(n) + math.log(math.log(n)))) + 1
        else:
            bound = 13
        if bound <= self.cache_limit:
            self._ensure_cache(bound)
            return int(self._cache[n - 1])
        self._ensure_cache(self.cache_limit)
        seen = len(self._cache)
        for chunk in self._prime_chunks(self._cached_upto + 1):
            if seen + len(chunk) >= n:
                return int(chunk[n - seen - 1])
            seen += len(chunk)
        raise CapacityError(f"p_{n} exceeds capacity {self.capacity}")

    def _check_index(self, n) -> int:
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise DomainError(f"prime index must be a positive integer, got {n!r}")
        return int(n)

    def _cached_prefix(self, n: int) -> np.ndarray | None:
        if n > len(self._cache) and self._cached_upto < self.cache_limit:
            try:
                self.nth_prime(n)
            except CapacityError:
                return None
        if n <= len(self._cache):
            return self._cache[:n]
        return None

    def cn_exact(self, n: int) -> int:
        """C_n = n*p_n - (p_1 + ... + p_n), exactly."""
        n = self._check_index(n)
        prefix = self._cached_prefix(n)
        if prefix is not None:
            return n * int(prefix[-1]) - sum(int(s) for s in _chunk_sums(prefix))
        return self._stream_last(n).c_n

    def prime_sum(self, n: int) -> int:
        n = self._check_index(n)
        prefix = self._cached_prefix(n)
        if prefix is not None:
            return sum(int(s) for s in _chunk_sums(prefix))
        return self._stream_last(n).sum

    def pi_step_integral(self, n: int) -> int:
        """Integral of pi(x) over [2, p_n] as sum_{k<n} k*(p_{k+1} - p_k)."""
        n = self._check_index(n)
        prefix = self._cached_prefix(n)
        if prefix is not None:
            gaps = np.diff(prefix)
            total = 0
            for i in range(0, len(gaps), _CHUNK):
                k = np.arange(i + 1, i + 1 + len(gaps[i : i + _CHUNK]), dtype=np.int64)
                total += int(np.dot(k, gaps[i : i + _CHUNK]))
            return total
        return self._stream_summary(n).step_integral

    def record(self, n: int) -> PrimeRecord:
        n = self._check_index(n)
        p = self.nth_prime(n)
        s = self.prime_sum(n)
        return PrimeRecord(n, p, s, n * p - s)

    def pi_integral(self, x) -> int | Fraction:
        """Integral of pi(t) over [2, x] for rational x; exact."""
        x = Fraction(x) if not isinstance(x, float) else Fraction(str(x))
        if x < 2:
            raise DomainError("integral of pi starts at 2")
        count = self.prime_count(math.floor(x))
        p = self.nth_prime(count)
        total = self.pi_step_integral(count) + count * (x - p)
        return int(total) if total.denominator == 1 else total

    def _stream_summary(self, n: int) -> StreamSummary:
        return self.cn_stream(n, n, lambda rec: None)

    def _stream_last(self, n: int) -> PrimeRecord:
        return self._stream_summary(n).last

    # -- streaming ---------------------------------------------------------

    def _advance(self, state: list, primes: np.ndarray) -> RecordBatch:
        """Extend ``state = [n, p, sum, step]`` by ``primes``."""
        n0, p0, s0, i0 = state
        m = len(primes)
        pmax = int(primes[-1])
        lim = self._acc_max
        worst = max(pmax, (n0 + m) * pmax, s0 + m * pmax, i0 + (n0 + m) * (pmax - (p0 or 2)))
        if worst > lim:
            raise AccumulatorOverflowError(
                f"segment ending at n={n0 + m} needs {worst.bit_length()} bits; "
                f"accumulator {self.accumulator} holds {lim.bit_length()}"
            )
        acc = self.accumulator.type
        p = primes.astype(acc)
        k = np.arange(n0 + 1, n0 + m + 1, dtype=acc)
        sums = np.cumsum(p, dtype=acc) + acc(s0)
        c = k * p - sums
        gaps = np.diff(p, prepend=acc(p0) if p0 else p[:1])
        step = np.cumsum((k - 1) * gaps, dtype=acc) + acc(i0)
        state[:] = [n0 + m, pmax, int(sums[-1]), int(step[-1])]
        return RecordBatch(k, p, sums, c, step)

    def iter_batches(self, n_from: int, n_to: int, checkpoint: Checkpoint | None = None) -> Iterator[RecordBatch]:
        """Record batches covering exactly n_from..n_to, ascending."""
        n_from, n_to = self._check_index(n_from), self._check_index(n_to)
        if n_from > n_to:
            raise DomainError(f"empty range {n_from}..{n_to}")
        if checkpoint is not None:
            if checkpoint.n >= n_from:
                raise DomainError(f"checkpoint at n={checkpoint.n} is not before n_from={n_from}")
            state = [checkpoint.n, checkpoint.p, checkpoint.sum, checkpoint.step_integral]
            start = checkpoint.position
        else:
            state = [0, 0, 0, 0]
            start = 2
        for chunk in self._prime_chunks(start):
            chunk = chunk[: n_to - state[0]]
            n_before = state[0]
            batch = self._advance(state, chunk)
            if state[0] >= n_from:
                yield batch[max(0, n_from - n_before - 1) :]
            if state[0] == n_to:
                return
        raise CapacityError(f"p_{n_to} exceeds capacity {self.capacity}")

    def cn_stream(
        self,
        n_from: int,
        n_to: int,
        emit: Callable[[PrimeRecord], object] | None,
        checkpoint: Checkpoint | None = None,
        checkpoint_path: str | os.PathLike | None = None,
        cadence: int = DEFAULT_CHECKPOINT_CADENCE,
    ) -> StreamSummary:
        """Emit every PrimeRecord for n in [n_from, n_to] in order.

        When ``checkpoint_path`` is given a checkpoint is written whenever the
        stream passes a multiple of ``cadence``, and once more at ``n_to``.
        """
        if cadence < 1:
            raise DomainError("cadence must be positive")
        count = written = 0
        last = None
        for batch in self.iter_batches(n_from, n_to, checkpoint):
            if emit is not None:
                for rec in batch.records():
                    emit(rec)
            count += len(batch)
            if checkpoint_path is not None:
                lo, hi = int(batch.n[0]), int(batch.n[-1])
                mark = hi - hi % cadence
                if mark >= lo and mark != n_to:
                    batch.checkpoint_at(mark - lo).save(checkpoint_path)
                    written += 1
            last = batch
        end = last.checkpoint_at(len(last) - 1)
        if checkpoint_path is not None:
            end.save(checkpoint_path)
            written += 1
        return StreamSummary(n_from, n_to, count, end.record, end.step_integral, written)


def _chunk_sums(arr: np.ndarray) -> Iterator[np.int64]:
    for i in range(0, len(arr), _CHUNK):
        yield arr[i : i + _CHUNK].sum(dtype=np.int64)
