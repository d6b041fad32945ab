"""Range verification of certificates against exact C_n, plus empirical tables."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .analytic_eval import EPS, EvaluatedBound, eval_expansion, li
from .bound_factory import BoundCertificate, BoundHypothesis
from .errors import DomainError
from .exact_coeffs import thm29_expansion

REPORT_VERSION = 1
CSV_COLUMNS = (
    "certificate", "n_from", "n_to", "verdict", "passed", "failed",
    "indeterminate", "out_of_domain", "min_margin", "min_margin_n",
)


@dataclass
class VerificationReport:
    """Outcome of checking one certificate over n_from..n_to.

    ``passed + len(failures) + len(indeterminate) + out_of_domain`` equals
    the range size.  ``min_margin`` is the smallest slack C_n - bound (lower
    side) or bound - C_n (upper side) among in-domain n.
    """

    certificate: str
    side: str
    n_from: int
    n_to: int
    passed: int = 0
    failures: list = field(default_factory=list)
    indeterminate: list = field(default_factory=list)
    out_of_domain: int = 0
    min_margin: float | None = None
    min_margin_n: int | None = None
    runtime_s: float = 0.0

    @property
    def size(self) -> int:
        return self.n_to - self.n_from + 1

    @property
    def verdict(self) -> str:
        if self.failures:
            return "violated"
        if self.indeterminate:
            return "indeterminate"
        if self.passed == 0:
            return "out-of-domain"
        return "verified"

    def to_dict(self, runtime: bool = True) -> dict:
        d = {
            "version": REPORT_VERSION,
            "certificate": self.certificate,
            "side": self.side,
            "range": [self.n_from, self.n_to],
            "verdict": self.verdict,
            "counts": {
                "passed": self.passed,
                "failed": len(self.failures),
                "indeterminate": len(self.indeterminate),
                "outOfDomain": self.out_of_domain,
            },
            "failures": list(self.failures),
            "indeterminateN": list(self.indeterminate),
            "minMargin": None
            if self.min_margin is None
            else {"value": self.min_margin, "absErr": _margin_err(self.min_margin), "n": self.min_margin_n},
        }
        if runtime:
            d["runtime"] = {"seconds": self.runtime_s}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        if d.get("version") != REPORT_VERSION:
            raise DomainError(f"unsupported report version {d.get('version')!r}")
        mm = d.get("minMargin")
        return cls(
            certificate=d["certificate"],
            side=d["side"],
            n_from=d["range"][0],
            n_to=d["range"][1],
            passed=d["counts"]["passed"],
            failures=list(d["failures"]),
            indeterminate=list(d["indeterminateN"]),
            out_of_domain=d["counts"]["outOfDomain"],
            min_margin=None if mm is None else mm["value"],
            min_margin_n=None if mm is None else mm["n"],
            runtime_s=d.get("runtime", {}).get("seconds", 0.0),
        )

    def to_json(self, runtime: bool = True) -> str:
        return json.dumps(self.to_dict(runtime), sort_keys=True, indent=1) + "\n"

    def csv_row(self) -> list:
        return [
            self.certificate, self.n_from, self.n_to, self.verdict, self.passed,
            len(self.failures), len(self.indeterminate), self.out_of_domain,
            "" if self.min_margin is None else repr(self.min_margin),
            "" if self.min_margin_n is None else self.min_margin_n,
        ]


def _margin_err(margin: float) -> float:
    # the margin is reported from float arithmetic; verdicts never depend on it
    return 4 * EPS * abs(margin) + 1.0


def reports_to_csv(reports: Iterable[VerificationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def _classify(cert: BoundCertificate, c: np.ndarray, p: np.ndarray):
    """Per-record verdict codes (1 pass, 0 fail, 2 indeterminate) and float margins.

    C_n is compared as an exact integer against integer-rounded ends of the
    bound's interval, so no precision is lost on the exact side.
    """
    values, errs = cert.evaluate_many(p)
    lo = values - errs
    hi = values + errs
    if cert.side == "lower":
        # pass: C >= hi ;  fail: C < lo
        ok = c >= np.ceil(hi).astype(np.int64)
        bad = c < np.ceil(lo).astype(np.int64)
    else:
        # pass: C <= lo ;  fail: C > hi
        ok = c <= np.floor(lo).astype(np.int64)
        bad = c > np.floor(hi).astype(np.int64)
    code = np.where(ok, 1, np.where(bad, 0, 2))
    vi = np.round(values).astype(np.int64)
    diff = (c - vi).astype(float) - (values - vi)
    margin = diff if cert.side == "lower" else -diff
    return code, margin


def verify_range(
    cert: BoundCertificate,
    n_from: int,
    n_to: int,
    engine,
    checkpoint=None,
) -> VerificationReport:
    """Check ``cert`` against exact C_n for every n in [n_from, n_to].

    n below ``cert.n_min`` is counted as out-of-domain, never as a failure.
    """
    t0 = time.perf_counter()
    report = VerificationReport(cert.name, cert.side, n_from, n_to)
    for batch in engine.iter_batches(n_from, n_to, checkpoint):
        keep = batch.n >= cert.n_min
        report.out_of_domain += int(np.count_nonzero(~keep))
        if not keep.any():
            continue
        n = batch.n[keep]
        code, margin = _classify(cert, batch.c[keep].astype(np.int64), batch.p[keep])
        report.passed += int(np.count_nonzero(code == 1))
        report.failures.extend(n[code == 0].tolist())
        report.indeterminate.extend(n[code == 2].tolist())
        i = int(np.argmin(margin))
        if report.min_margin is None or margin[i] < report.min_margin:
            report.min_margin = float(margin[i])
            report.min_margin_n = int(n[i])
    report.runtime_s = time.perf_counter() - t0
    return report


def merge_reports(reports: Sequence[VerificationReport]) -> VerificationReport:
    """Combine reports over adjacent ranges of one certificate."""
    if not reports:
        raise DomainError("nothing to merge")
    rs = sorted(reports, key=lambda r: r.n_from)
    for a, b in zip(rs, rs[1:]):
        if b.n_from != a.n_to + 1 or a.certificate != b.certificate:
            raise DomainError("reports must cover adjacent ranges of the same certificate")
    out = VerificationReport(rs[0].certificate, rs[0].side, rs[0].n_from, rs[-1].n_to)
    for r in rs:
        out.passed += r.passed
        out.failures.extend(r.failures)
        out.indeterminate.extend(r.indeterminate)
        out.out_of_domain += r.out_of_domain
        out.runtime_s += r.runtime_s
        # strict < keeps the earlier (smaller n) location on ties
        if r.min_margin is not None and (out.min_margin is None or r.min_margin < out.min_margin):
            out.min_margin, out.min_margin_n = r.min_margin, r.min_margin_n
    return out


def verify_sharded(cert: BoundCertificate, n_from: int, n_to: int, engine, shards: int) -> VerificationReport:
    """verify_range over ``shards`` consecutive pieces, each seeded by a checkpoint."""
    from .prime_engine import Checkpoint

    edges = np.linspace(n_from, n_to + 1, shards + 1).astype(int)
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        if a >= b:
            continue
        ckpt = None
        if a > 1:
            rec = engine.record(int(a) - 1)
            ckpt = Checkpoint(rec.n, rec.p, rec.sum, rec.c_n, engine.pi_step_integral(rec.n), rec.p + 1)
        parts.append(verify_range(cert, int(a), int(b) - 1, engine, ckpt))
    return merge_reports(parts)


# -- empirical tables ----------------------------------------------------------


@dataclass(frozen=True)
class ErrorRow:
    n: int
    p: int
    c_n: int
    truncation: float
    normalized_error: float


def asymptotic_error_table(m: int, n_points: Iterable[int], engine) -> list:
    """(C_n - first m-1 terms) * log^m p_n / p_n^2 at each n."""
    if m < 2:
        raise DomainError("m must be at least 2")
    e = thm29_expansion(m)
    rows = []
    for n in n_points:
        p = engine.nth_prime(n)
        if p < 3:
            raise DomainError("table needs p_n >= 3 (n >= 2)")
        c = engine.cn_exact(n)
        trunc = eval_expansion(e, p)
        lg = math.log(p)
        rows.append(ErrorRow(n, p, c, trunc, (c - trunc) * lg**m / (p * p)))
    return rows


@dataclass(frozen=True)
class CorollaryRow:
    n: int
    p: int
    prime_sum: int
    li_p2: EvaluatedBound
    pi_p2: int | None
    li_gap_normalized: float
    pi_gap_normalized: float | None


def corollary_tables(n_points: Iterable[int], engine, pi_capacity: int = 2 * 10**10) -> list:
    """Compare sum_{k<=n} p_k with li(p_n^2) and, where sieveable, pi(p_n^2).

    Differences are normalized by p_n^2 / log^3 p_n.
    """
    rows = []
    for n in n_points:
        p = engine.nth_prime(n)
        if p < 3:
            raise DomainError("table needs p_n >= 3 (n >= 2)")
        s = engine.prime_sum(n)
        scale = p * p / math.log(p) ** 3
        lp = li(p * p)
        pi_val = None
        if p * p <= min(pi_capacity, engine.capacity):
            pi_val = engine.prime_count(p * p)
        rows.append(
            CorollaryRow(
                n, p, s, lp, pi_val,
                (s - lp.value) / scale,
                None if pi_val is None else (s - pi_val) / scale,
            )
        )
    return rows


@dataclass(frozen=True)
class SpotCheck:
    x: int
    pi_x: int | None
    rhs: EvaluatedBound | None
    margin: EvaluatedBound | None
    verdict: str


def hypothesis_spot_check(h: BoundHypothesis, sample: Iterable, engine) -> list:
    """Margins of the hypothesis' pi(x) inequality at sample points.

    Nonnegative margins are evidence, not proof.  Points below the cutoff are
    reported with verdict ``below-cutoff``.
    """
    out = []
    for x in sample:
        x = int(x)
        if x < h.cutoff:
            out.append(SpotCheck(x, None, None, None, "below-cutoff"))
            continue
        pi_x = engine.prime_count(x)
        rhs = h.pi_rhs(x)
        margin = (rhs * -1 + pi_x) if h.side == "lower" else (rhs - pi_x)
        out.append(SpotCheck(x, pi_x, rhs, margin, margin.at_least(0.0)))
    return out
