"""Command-line front end.

Exit status: 0 success/verified, 1 a checked inequality is violated,
2 usage or configuration error, 3 precision indeterminate, 4 resource or
capacity limit.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

from . import analytic_eval as ae
from . import bound_factory as bf
from . import exact_coeffs as ec
from . import verifier as vf
from .errors import (
    AccumulatorOverflowError,
    CapacityError,
    CheckpointError,
    DomainError,
    PrecisionError,
)
from .prime_engine import (
    DEFAULT_CACHE_LIMIT,
    DEFAULT_CAPACITY,
    DEFAULT_CHECKPOINT_CADENCE,
    DEFAULT_SEGMENT_SIZE,
    Checkpoint,
    PrimeEngine,
)

log = logging.getLogger("primedeficit")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INDETERMINATE, EXIT_RESOURCE = 0, 1, 2, 3, 4
OUTPUT_VERSION = 1
ENV_CAPACITY = "PRIMEDEFICIT_CAPACITY"
ENV_WORKERS = "PRIMEDEFICIT_WORKERS"


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    capacity: int = DEFAULT_CAPACITY
    segment_size: int = DEFAULT_SEGMENT_SIZE
    cache_limit: int = DEFAULT_CACHE_LIMIT
    workers: int = 1
    checkpoint_cadence: int = DEFAULT_CHECKPOINT_CADENCE
    rel_tol: float = 1e-13
    fmt: str = "text"
    timestamp: bool = True

    def validate(self) -> "CliConfig":
        if self.capacity < 2:
            raise UsageError("--capacity must be at least 2")
        if self.segment_size < 64:
            raise UsageError("--segment-size must be at least 64")
        if self.workers < 1:
            raise UsageError("--workers must be positive")
        if self.checkpoint_cadence < 1:
            raise UsageError("--checkpoint-cadence must be positive")
        if not 0 < self.rel_tol <= 1e-6:
            raise UsageError("--rel-tol must lie in (0, 1e-6]")
        if self.fmt not in ("json", "csv", "text"):
            raise UsageError(f"unknown format {self.fmt}")
        return self

    def engine(self) -> PrimeEngine:
        return PrimeEngine(self.capacity, self.segment_size, self.cache_limit, self.workers)


def _int(text: str) -> int:
    """Integer that also accepts 1e6 / 2e9 style exponents."""
    try:
        q = Fraction(text.replace("_", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if q.denominator != 1:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(q)


def _int_list(text: str) -> list:
    return [_int(t) for t in text.split(",") if t.strip()]


def _range(text: str) -> tuple:
    try:
        a, b = text.split("..")
        return _int(a), _int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must look like A..B, got {text!r}")


# -- output ------------------------------------------------------------------


def exact(v) -> dict:
    if isinstance(v, Fraction):
        v = ec.format_rational(v)
    return {"value": v, "exact": True}


def approx(b: ae.EvaluatedBound) -> dict:
    return {"value": b.value, "absErr": b.abs_err}


def real(x: float, err: float) -> dict:
    return {"value": x, "absErr": err}


def _tag_numbers(v):
    """Mark bare integers exact; numbers already tagged are left alone.

    Bare floats are rejected so that an untagged approximation cannot slip
    into the output.
    """
    if isinstance(v, dict):
        if "value" in v and ("exact" in v or "absErr" in v):
            return v
        return {k: _tag_numbers(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_tag_numbers(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return exact(v)
    raise TypeError(f"untagged {type(v).__name__} {v!r} in JSON output")


def _fmt_real(x: float) -> str:
    return format(x, ".17g")


class Output:
    def __init__(self, cfg: CliConfig, command: str, stream=None):
        self.cfg = cfg
        self.command = command
        self.stream = stream or sys.stdout
        self.t0 = time.perf_counter()

    def emit(self, result: dict, text: str, rows: list | None = None, columns: list | None = None) -> None:
        fmt = self.cfg.fmt
        if fmt == "text":
            self.stream.write(text.rstrip("\n") + "\n")
        elif fmt == "json":
            doc = {"version": OUTPUT_VERSION, "command": self.command, "result": _tag_numbers(result)}
            if self.cfg.timestamp:
                doc["meta"] = {
                    "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
                    "runtimeSeconds": real(time.perf_counter() - self.t0, 1e-6),
                }
            self.stream.write(json.dumps(doc, sort_keys=True, indent=1) + "\n")
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
            if rows is None:
                columns, rows = ["key", "value"], [[k, _flat(v)] for k, v in result.items()]
            w.writerow(columns)
            w.writerows(rows)
            self.stream.write(buf.getvalue())


def _flat(v) -> str:
    if isinstance(v, dict) and "value" in v:
        return str(v["value"])
    if isinstance(v, float):
        return _fmt_real(v)
    return json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else str(v)


# -- commands ----------------------------------------------------------------


def cmd_cn_exact(args, cfg, out) -> int:
    eng = cfg.engine()
    n = args.n
    rec = eng.record(n)
    step = eng.pi_step_integral(n)
    result = {"n": exact(n), "p": exact(rec.p), "sum": exact(rec.sum), "c_n": exact(rec.c_n), "piIntegral": exact(step)}
    out.emit(result, str(rec.c_n))
    return EXIT_OK


def cmd_cn_stream(args, cfg, out) -> int:
    eng = cfg.engine()
    resume = Checkpoint.load(args.resume) if args.resume else None
    rows = []
    summary = eng.cn_stream(
        args.n_from, args.n_to, lambda r: rows.append([r.n, r.p, r.sum, r.c_n]),
        checkpoint=resume, checkpoint_path=args.checkpoint, cadence=cfg.checkpoint_cadence,
    )
    result = {
        "records": [{"n": r[0], "p": r[1], "sum": r[2], "c_n": r[3]} for r in rows],
        "count": exact(summary.count),
    }
    text = "\n".join(" ".join(map(str, r)) for r in rows)
    out.emit(result, text, rows, ["n", "p", "sum", "c_n"])
    return EXIT_OK


def _ais(spec: str) -> ec.AisTable:
    if spec == "builtin-m2":
        return ec.BUILTIN_AIS_M2
    return ec.AisTable.load(spec)


def cmd_coeff(args, cfg, out) -> int:
    kind = args.kind
    if kind == "b":
        v = ec.b_coeff(args.s, args.i, args.j, args.r)
        out.emit({"b": exact(v)}, str(v))
    elif kind == "t":
        a = [ec.rational(x) for x in args.a.split(",")]
        v = ec.t_coeff(a, args.i, args.j)
        out.emit({"t": exact(v)}, ec.format_rational(v))
    elif kind == "thm29":
        v = ec.thm29_coeff(args.k)
        out.emit({"coefficient": exact(v)}, ec.format_rational(v))
    else:
        poly = ec.u_polynomial(args.s, _ais(args.ais))
        out.emit(
            {"polynomial": str(poly), "coeffs": [exact(c) for c in poly.coeffs]},
            str(poly),
        )
    return EXIT_OK


def cmd_expand(args, cfg, out) -> int:
    if args.kind == "thm21":
        e = ec.thm21_expansion(args.m, _ais(args.ais))
    else:
        e = ec.thm29_expansion(args.m)
    result = {
        "scale": e.scale,
        "terms": [
            {"logPower": a, "loglogPower": b, "coefficient": exact(c)} for (a, b), c in e.sorted_terms()
        ],
        "remainder": e.remainder,
    }
    text = str(e)
    if args.at is not None:
        v = ae.eval_expansion(e, args.at)
        result["at"] = exact(Fraction(repr(args.at)))
        # double-precision evaluation; error budget per term is a few ulps
        result["valueAt"] = real(v, 8 * len(e.terms) * ae.EPS * abs(v))
        text += f"\nvalue at {args.at}: {_fmt_real(v)}"
    out.emit(result, text)
    return EXIT_OK


def cmd_li(args, cfg, out) -> int:
    x = ec.rational(args.x)
    b = ae.li(x, cfg.rel_tol)
    out.emit({"x": args.x, "li": approx(b)}, f"{_fmt_real(b.value)} +/- {b.abs_err:.3g}")
    return EXIT_OK


def cmd_lemma_check(args, cfg, out) -> int:
    x = ec.rational(args.x)
    x = x.numerator if x.denominator == 1 else x
    chk = ae.li_bound_check(args.which, x, cfg.rel_tol)
    out.emit(
        {"which": args.which, "x": args.x, "margin": approx(chk.margin), "verdict": chk.verdict},
        f"{args.which} at x={args.x}: margin {_fmt_real(chk.margin.value)} +/- {chk.margin.abs_err:.3g} ({chk.verdict})",
    )
    return {ae.PASS: EXIT_OK, ae.FAIL: EXIT_VIOLATION}.get(chk.verdict, EXIT_INDETERMINATE)


def _hypothesis(spec: str) -> bf.BoundHypothesis:
    if spec == "prop53":
        return bf.PROP53_HYPOTHESIS
    if spec == "prop56":
        return bf.PROP56_HYPOTHESIS
    return bf.BoundHypothesis.load(spec)


def _certificate_doc(c: bf.BoundCertificate) -> dict:
    d = c.to_dict()
    d["constant"] = approx(c.constant)
    d["coeffs"] = [exact(q) for q in c.coeffs]
    d["nMin"] = exact(c.n_min)
    return d


def cmd_certify(args, cfg, out) -> int:
    h = _hypothesis(args.hypothesis)
    cert = bf.make_certificate(h, cfg.engine(), cfg.rel_tol)
    if args.out:
        cert.save(args.out)
    lines = [
        f"{cert.side} certificate {cert.name}: valid for n >= {cert.n_min}",
        f"constant = {_fmt_real(cert.constant.value)} +/- {cert.constant.abs_err:.3g}",
    ] + [f"c_{k} = {ec.format_rational(c)}" for k, c in enumerate(cert.coeffs, 1)]
    out.emit(_certificate_doc(cert), "\n".join(lines))
    return EXIT_OK


def _certificate(spec: str) -> bf.BoundCertificate:
    builtin = bf.builtin_certificates()
    aliases = {"prop53": "prop53_lower", "prop56": "prop56_upper"}
    key = aliases.get(spec, spec)
    if key in builtin:
        return builtin[key]
    return bf.BoundCertificate.load(spec)


def _verdict_exit(verdict: str) -> int:
    return {"violated": EXIT_VIOLATION, "indeterminate": EXIT_INDETERMINATE}.get(verdict, EXIT_OK)


def cmd_verify(args, cfg, out) -> int:
    cert = _certificate(args.cert)
    a, b = args.range
    eng = cfg.engine()
    if args.shards > 1:
        report = vf.verify_sharded(cert, a, b, eng, args.shards)
    else:
        report = vf.verify_range(cert, a, b, eng)
    doc = report.to_dict(runtime=False)
    if doc["minMargin"] is not None:
        doc["minMargin"]["n"] = exact(doc["minMargin"]["n"])
    text = (
        f"{report.certificate} on {a}..{b}: {report.verdict} "
        f"(passed {report.passed}, failed {len(report.failures)}, "
        f"indeterminate {len(report.indeterminate)}, out-of-domain {report.out_of_domain})"
    )
    if report.min_margin is not None:
        text += f"\nmin margin {_fmt_real(report.min_margin)} at n={report.min_margin_n}"
    out.emit(doc, text, [report.csv_row()], list(vf.CSV_COLUMNS))
    return _verdict_exit(report.verdict)


def cmd_tables(args, cfg, out) -> int:
    eng = cfg.engine()
    if args.kind == "thm29":
        rows = vf.asymptotic_error_table(args.m, args.n, eng)
        columns = ["n", "p", "c_n", "truncation", "normalized_error"]
        table = [[r.n, r.p, r.c_n, _fmt_real(r.truncation), _fmt_real(r.normalized_error)] for r in rows]
        result = {
            "m": args.m,
            "rows": [
                {
                    "n": exact(r.n), "p": exact(r.p), "c_n": exact(r.c_n),
                    "truncation": real(r.truncation, 16 * ae.EPS * abs(r.truncation)),
                    "normalizedError": real(r.normalized_error, 1e-9 * max(1.0, abs(r.normalized_error))),
                }
                for r in rows
            ],
        }
    else:
        rows = vf.corollary_tables(args.n, eng, args.pi_capacity)
        columns = ["n", "p", "prime_sum", "li_p2", "pi_p2", "li_gap_normalized", "pi_gap_normalized"]
        table = [
            [r.n, r.p, r.prime_sum, _fmt_real(r.li_p2.value), "" if r.pi_p2 is None else r.pi_p2,
             _fmt_real(r.li_gap_normalized), "" if r.pi_gap_normalized is None else _fmt_real(r.pi_gap_normalized)]
            for r in rows
        ]
        result = {
            "rows": [
                {
                    "n": exact(r.n), "p": exact(r.p), "primeSum": exact(r.prime_sum),
                    "liP2": approx(r.li_p2),
                    "piP2": None if r.pi_p2 is None else exact(r.pi_p2),
                    "liGapNormalized": real(r.li_gap_normalized, _gap_err(r, r.li_p2)),
                    "piGapNormalized": None
                    if r.pi_gap_normalized is None
                    else real(r.pi_gap_normalized, _gap_err(r, ae.EvaluatedBound(float(r.pi_p2)))),
                }
                for r in rows
            ]
        }
    text = "\t".join(columns) + "\n" + "\n".join("\t".join(map(str, row)) for row in table)
    out.emit(result, text, table, columns)
    return EXIT_OK


def _gap_err(row, ref: ae.EvaluatedBound) -> float:
    # (sum - ref) / (p^2 / log^3 p), each step adding a few roundings
    scale = row.p * row.p / math.log(row.p) ** 3
    return (ref.abs_err + 8 * ae.EPS * (row.prime_sum + abs(ref.value))) / scale


def cmd_spot_check(args, cfg, out) -> int:
    h = _hypothesis(args.hypothesis)
    checks = vf.hypothesis_spot_check(h, args.x, cfg.engine())
    rows = [
        [c.x, "" if c.pi_x is None else c.pi_x, "" if c.margin is None else _fmt_real(c.margin.value), c.verdict]
        for c in checks
    ]
    result = {
        "checks": [
            {
                "x": exact(c.x),
                "pi": None if c.pi_x is None else exact(c.pi_x),
                "margin": None if c.margin is None else approx(c.margin),
                "verdict": c.verdict,
            }
            for c in checks
        ]
    }
    text = "\n".join(f"x={r[0]} pi={r[1]} margin={r[2]} {r[3]}" for r in rows)
    out.emit(result, text, rows, ["x", "pi", "margin", "verdict"])
    verdicts = {c.verdict for c in checks}
    if ae.FAIL in verdicts:
        return EXIT_VIOLATION
    if ae.INDETERMINATE in verdicts:
        return EXIT_INDETERMINATE
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("engine and output")
    g.add_argument("--capacity", type=_int, default=None,
                   help=f"largest integer the sieve may reach (default {DEFAULT_CAPACITY:.0e}, env {ENV_CAPACITY})")
    g.add_argument("--segment-size", type=_int, default=DEFAULT_SEGMENT_SIZE)
    g.add_argument("--cache-limit", type=_int, default=DEFAULT_CACHE_LIMIT)
    g.add_argument("--workers", type=_int, default=None, help=f"sieve threads (env {ENV_WORKERS})")
    g.add_argument("--checkpoint-cadence", type=_int, default=DEFAULT_CHECKPOINT_CADENCE)
    g.add_argument("--rel-tol", type=float, default=1e-13, help="relative tolerance for li")
    g.add_argument("--format", dest="fmt", choices=("text", "json", "csv"), default="text")
    g.add_argument("--no-timestamp", dest="timestamp", action="store_false",
                   help="omit timestamp and runtime so output is byte-reproducible")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="primedeficit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    cn = sub.add_parser("cn", help="exact C_n").add_subparsers(dest="kind", required=True)
    p = cn.add_parser("exact", parents=[common])
    p.add_argument("--n", type=_int, required=True)
    p.set_defaults(func=cmd_cn_exact)
    p = cn.add_parser("stream", parents=[common])
    p.add_argument("--from", dest="n_from", type=_int, required=True)
    p.add_argument("--to", dest="n_to", type=_int, required=True)
    p.add_argument("--checkpoint", help="write checkpoints to this file")
    p.add_argument("--resume", help="resume from this checkpoint file")
    p.set_defaults(func=cmd_cn_stream)

    co = sub.add_parser("coeff", help="exact coefficients").add_subparsers(dest="kind", required=True)
    p = co.add_parser("b", parents=[common])
    for name in ("s", "i", "j", "r"):
        p.add_argument(f"--{name}", type=_int, required=True)
    p = co.add_parser("t", parents=[common])
    p.add_argument("--a", required=True, help="comma list a_2,...,a_m (decimals or p/q)")
    p.add_argument("--i", type=_int, required=True)
    p.add_argument("--j", type=_int, required=True)
    p = co.add_parser("thm29", parents=[common])
    p.add_argument("--k", type=_int, required=True)
    p = co.add_parser("u-poly", parents=[common])
    p.add_argument("--s", type=_int, required=True)
    p.add_argument("--ais", default="builtin-m2", help="builtin-m2 or an AisTable JSON file")
    for action in co.choices.values():
        action.set_defaults(func=cmd_coeff)

    ex = sub.add_parser("expand", help="asymptotic expansions").add_subparsers(dest="kind", required=True)
    p = ex.add_parser("thm21", parents=[common])
    p.add_argument("--m", type=_int, required=True)
    p.add_argument("--ais", default="builtin-m2")
    p.add_argument("--at", type=float)
    p = ex.add_parser("thm29", parents=[common])
    p.add_argument("--m", type=_int, required=True)
    p.add_argument("--at", type=float)
    for action in ex.choices.values():
        action.set_defaults(func=cmd_expand)

    p = sub.add_parser("li", parents=[common], help="logarithmic integral with error bound")
    p.add_argument("--x", required=True)
    p.set_defaults(func=cmd_li)

    p = sub.add_parser("lemma-check", parents=[common], help="explicit li inequalities")
    p.add_argument("--which", choices=sorted(ae.LI_BOUNDS), required=True)
    p.add_argument("--x", required=True)
    p.set_defaults(func=cmd_lemma_check)

    p = sub.add_parser("certify", parents=[common], help="build a bound certificate")
    p.add_argument("--hypothesis", required=True, help="prop53, prop56 or a hypothesis JSON file")
    p.add_argument("--out", help="write the certificate JSON here")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", parents=[common], help="check a certificate over an n-range")
    p.add_argument("--cert", required=True, help="prop53, prop56 or a certificate JSON file")
    p.add_argument("--range", type=_range, required=True, help="A..B")
    p.add_argument("--shards", type=_int, default=1)
    p.set_defaults(func=cmd_verify)

    tb = sub.add_parser("tables", help="empirical error tables").add_subparsers(dest="kind", required=True)
    p = tb.add_parser("thm29", parents=[common])
    p.add_argument("--m", type=_int, required=True)
    p.add_argument("--n", type=_int_list, required=True)
    p = tb.add_parser("corollary", parents=[common])
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--pi-capacity", type=_int, default=2 * 10**10)
    for action in tb.choices.values():
        action.set_defaults(func=cmd_tables)

    p = sub.add_parser("spot-check", parents=[common], help="sample a hypothesis' pi(x) inequality")
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--x", type=_int_list, required=True)
    p.set_defaults(func=cmd_spot_check)
    return parser


def _config(args) -> CliConfig:
    try:
        capacity = args.capacity if args.capacity is not None else _int(os.environ.get(ENV_CAPACITY, str(DEFAULT_CAPACITY)))
        workers = args.workers if args.workers is not None else _int(os.environ.get(ENV_WORKERS, "1"))
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"bad environment override: {exc}")
    return CliConfig(
        capacity=capacity,
        segment_size=args.segment_size,
        cache_limit=args.cache_limit,
        workers=workers,
        checkpoint_cadence=args.checkpoint_cadence,
        rel_tol=args.rel_tol,
        fmt=args.fmt,
        timestamp=args.timestamp,
    ).validate()


def main(argv=None, stdout=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        out = Output(cfg, f"{args.command} {getattr(args, 'kind', '')}".strip(), stdout)
        return args.func(args, cfg, out)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (CapacityError, AccumulatorOverflowError, MemoryError) as exc:
        log.error("resource limit: %s", exc)
        return EXIT_RESOURCE
    except PrecisionError as exc:
        log.error("precision: %s", exc)
        return EXIT_INDETERMINATE
    except (DomainError, CheckpointError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
