"""Command-line entry point.

Every command emits one ReportRecord (JSON by default).  Rationals are
written as {"num": "...", "den": "..."} so nothing is lost to floats.
Wall-clock timing is left out unless --timing is given, which keeps
reports byte-identical across runs.

Exit codes: 0 success, 2 invalid input, 3 budget exhausted (partial
report printed), 4 witness search failed.

Checkpoint files (``f --checkpoint PATH``) are JSON lines, one per interval
pair, appended as the scan proceeds:

    {"a_start": 3, "b_start": 9, "n": 10, "outcome": {"mapping": true}, "two_m": 2}
    {"a_start": 2, "b_start": 4, "n": 10, "outcome": {"violator": {"S": [2], "T": [4]}}, "two_m": 2}

Re-running with the same path replays the file and only computes missing
pairs, so an interrupted scan resumes to the same final report.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import time
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import __version__
from .central import exhaustive_central_scan
from .errors import BudgetExceeded, InvalidArgument, SearchFailed, ToolkitError
from .matching import (
    Checkpoint,
    MatchingOutcome,
    Relation,
    compute_f,
    validate_outcome,
    verify_adjacent_range,
)
from .numcore import (
    build_sieve,
    chi_table,
    kappa_table,
    max_noncoprime_run,
    shared_sieve,
)
from .runner import (
    InstanceKind,
    SpeedSet,
    WitnessCertificate,
    WitnessKind,
    classify_instance,
    construct_loose_witness,
    random_group_instance,
    verify_loose_witness,
)


# -- serialization -----------------------------------------------------------


def rat(q: Fraction) -> dict[str, str]:
    q = Fraction(q)
    return {"num": str(q.numerator), "den": str(q.denominator)}


def unrat(d: dict[str, str]) -> Fraction:
    return Fraction(int(d["num"]), int(d["den"]))


@dataclass
class ReportRecord:
    command: str
    inputs: dict[str, Any]
    outcome: dict[str, Any]
    version: str = __version__
    timing: float | None = None
    partial: bool = False

    def to_dict(self) -> dict[str, Any]:
        d = {
            "command": self.command,
            "inputs": self.inputs,
            "outcome": self.outcome,
            "version": self.version,
        }
        if self.timing is not None:
            d["timing"] = self.timing
        if self.partial:
            d["partial"] = True
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReportRecord":
        d = json.loads(text)
        return cls(
            d["command"],
            d["inputs"],
            d["outcome"],
            d["version"],
            d.get("timing"),
            d.get("partial", False),
        )


def certificate_to_json(c: WitnessCertificate) -> dict[str, Any]:
    d: dict[str, Any] = {
        "t": rat(c.t),
        "kind": c.kind.value,
        "speeds": list(c.speeds),
        "bounds": [
            {"speed": v, "frac": rat(f), "dist": rat(dist)}
            for v, (f, dist) in zip(c.speeds, c.verified_bounds)
        ],
    }
    for key in ("x", "s", "t_num", "modulus", "q", "group", "script_m"):
        val = getattr(c, key)
        if val is not None:
            d[key] = val
    return d


def certificate_from_json(d: dict[str, Any]) -> WitnessCertificate:
    speeds = tuple(d["speeds"])
    bounds = tuple((unrat(b["frac"]), unrat(b["dist"])) for b in d.get("bounds", []))
    extra = {k: d[k] for k in ("x", "s", "t_num", "modulus", "q", "group", "script_m") if k in d}
    return WitnessCertificate(unrat(d["t"]), WitnessKind(d["kind"]), speeds, verified_bounds=bounds, **extra)


# -- argument helpers ----------------------------------------------------------


def parse_range(text: str) -> tuple[int, int]:
    """"7" -> (7, 7); "2..24" -> (2, 24)."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use N or A..B")
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


@dataclass
class RunConfig:
    command: str
    output_format: str = "json"
    seed: int = 0
    checkpoint_path: str | None = None
    threads: int = 1
    budget_secs: float | None = None
    timing: bool = False
    extra: dict[str, Any] = field(default_factory=dict)


# -- commands ---------------------------------------------------------------


def cmd_classify(speeds: list[int], cfg: RunConfig) -> ReportRecord:
    V = SpeedSet.of(speeds)
    res = classify_instance(V)
    out: dict[str, Any] = {"class": res.kind.value}
    if res.kind is InstanceKind.LOOSE:
        out["witness"] = rat(res.witness)
    elif res.kind is InstanceKind.TIGHT:
        out["witness_points"] = [rat(p) for p in res.witness_points]
    return ReportRecord("classify", {"speeds": list(V.speeds)}, out)


def cmd_witness(speeds: list[int], cfg: RunConfig) -> ReportRecord:
    V = SpeedSet.of(speeds)
    cert = construct_loose_witness(V, script_m=cfg.extra.get("script_m"), k=cfg.extra.get("k"))
    inputs = {"speeds": list(V.speeds), "script_m": cfg.extra.get("script_m"), "k": cfg.extra.get("k")}
    return ReportRecord("witness", inputs, {"certificate": certificate_to_json(cert), "verified": cert.verify()})


def cmd_witness_batch(count: int, cfg: RunConfig) -> ReportRecord:
    rng = random.Random(cfg.seed)
    n_min, n_max = cfg.extra.get("n_range", (30, 120))
    rows = []
    for i in range(count):
        V, k = random_group_instance(rng, n_min, n_max)
        row: dict[str, Any] = {"index": i, "n": V.n, "v_n": V.speeds[-1], "k": k}
        try:
            cert = construct_loose_witness(V, k=k)
        except SearchFailed as exc:
            row["status"] = "search_failed"
            row["diagnostics"] = [
                {"script_m": d["script_m"], "groups": [vars(g) for g in d["groups"]]}
                for d in exc.diagnostics
            ]
        else:
            row["status"] = "verified" if cert.verify() else "INVALID"
            row["kind"] = cert.kind.value
            row["t"] = rat(cert.t)
        rows.append(row)
    summary = defaultdict(int)
    for r in rows:
        summary[r["status"]] += 1
    return ReportRecord(
        "witness-batch",
        {"count": count, "seed": cfg.seed, "n_range": [n_min, n_max]},
        {"summary": dict(sorted(summary.items())), "rows": rows},
    )


def cmd_verify_witness(path: str, cfg: RunConfig) -> ReportRecord:
    with open(path) as fh:
        d = json.load(fh)
    if "outcome" in d:
        d = d["outcome"]["certificate"]
    cert = certificate_from_json(d)
    ok = cert.verify() and verify_loose_witness(cert.speeds, cert.t)
    return ReportRecord("verify-witness", {"path": path}, {"verified": ok})


def _f_json(res) -> dict[str, Any]:
    return {
        "n": res.n,
        "f": res.f_value,
        "pairs_checked": res.pairs_checked,
        "failures": [
            {
                "two_m": f.two_m,
                "A": [f.a_start, f.a_start + f.two_m - 1],
                "B": [f.b_start, f.b_start + f.two_m - 1],
                "violator": {"S": list(f.violator[0]), "T": list(f.violator[1])},
            }
            for f in res.failures
        ],
    }


def cmd_f_of_n(n_range: tuple[int, int], cfg: RunConfig) -> ReportRecord:
    overlap = bool(cfg.extra.get("include_overlapping"))
    ck = Checkpoint(cfg.checkpoint_path)
    inputs = {"n_range": list(n_range), "include_overlapping": overlap}
    results = []
    max_pairs = cfg.extra.get("max_pairs")
    t0 = time.monotonic()
    try:
        for n in range(n_range[0], n_range[1] + 1):
            left = None
            if cfg.budget_secs is not None:
                left = max(0.0, cfg.budget_secs - (time.monotonic() - t0))
            res = compute_f(
                n,
                include_overlapping=overlap,
                checkpoint=ck,
                budget_secs=left,
                max_pairs=None if max_pairs is None else max_pairs - ck.fresh,
                threads=cfg.threads,
            )
            for f in res.failures:
                out = MatchingOutcome(violator=f.violator)
                if not validate_outcome(list(f.A), list(f.B), out, Relation.COPRIME):
                    raise AssertionError(f"violator for {f} does not re-validate")
            results.append(_f_json(res))
    except BudgetExceeded as exc:
        if exc.partial is not None:
            results.append(_f_json(exc.partial))
        rec = ReportRecord("f", inputs, {"results": results}, partial=True)
        exc.partial = rec
        raise
    finally:
        ck.close()
    return ReportRecord("f", inputs, {"results": results})


def cmd_central_check(n: int, m: int, cfg: RunConfig) -> ReportRecord:
    viol = exhaustive_central_scan(n, m, threads=cfg.threads)
    return ReportRecord(
        "central",
        {"n": n, "m": m},
        {
            "violations": len(viol),
            "list": [
                {"I": [v.i_start, v.i_start + 2 * m - 1], "J": [v.j_start, v.j_start + 2 * m - 1], "S": list(v.S), "T": list(v.T)}
                for v in viol
            ],
        },
    )


def cmd_adjacent_check(k_range: tuple[int, int], cfg: RunConfig) -> ReportRecord:
    rep = verify_adjacent_range(
        *k_range, allow_small=bool(cfg.extra.get("allow_small")), threads=cfg.threads
    )
    return ReportRecord(
        "adjacent",
        {"k_range": list(k_range), "allow_small": bool(cfg.extra.get("allow_small"))},
        {
            "cases": rep.cases,
            "failures": [
                {
                    "k": e.k,
                    "ell": e.ell,
                    "side": e.failed_side,
                    "violator": {"S": list(e.outcome.violator[0]), "T": list(e.outcome.violator[1])},
                }
                for e in rep.failures
            ],
        },
    )


def _row_json(row) -> dict[str, Any]:
    a, mod, g, val = row.display()
    return {"a": row.a, "modulus": row.modulus, "gamma": rat(row.gamma), "value": rat(row.value), "gamma_display": g, "value_display": val}


def cmd_tables(chi: tuple[int, int] | None, kappa: tuple[int, int] | None, cfg: RunConfig) -> ReportRecord:
    if chi is None and kappa is None:
        chi, kappa = (1, 6), (1, 7)
    sieve = shared_sieve(100)
    out: dict[str, Any] = {}
    if chi is not None:
        out["chi"] = [_row_json(chi_table(a, sieve)) for a in range(chi[0], chi[1] + 1)]
    if kappa is not None:
        out["kappa"] = [_row_json(kappa_table(a, sieve)) for a in range(kappa[0], kappa[1] + 1)]
    return ReportRecord("tables", {"chi": list(chi) if chi else None, "kappa": list(kappa) if kappa else None}, out)


def cmd_coprime_gap(x_range: tuple[int, int], cfg: RunConfig) -> ReportRecord:
    lo, hi = x_range
    if lo < 2:
        raise InvalidArgument("x must be >= 2")
    limit = cfg.extra.get("scan_limit")
    sieve = build_sieve(max(hi, 2))
    rows = []
    by_omega: dict[int, int] = {}
    for x in range(lo, hi + 1):
        omega = len(sieve.factorize(x))
        run = max_noncoprime_run(x, limit)
        rows.append({"x": x, "omega": omega, "max_run": run})
        by_omega[omega] = max(by_omega.get(omega, 0), run)
    summary = [{"omega": w, "max_run": r} for w, r in sorted(by_omega.items())]
    return ReportRecord("coprime-gap", {"x_range": [lo, hi], "scan_limit": limit}, {"rows": rows, "by_omega": summary})


# -- rendering ----------------------------------------------------------------


def _flat(v: Any) -> Any:
    if isinstance(v, dict) and set(v) == {"num", "den"}:
        return f"{v['num']}/{v['den']}"
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    return v


def _csv_rows(rec: ReportRecord) -> list[dict[str, Any]]:
    o = rec.outcome
    if rec.command == "classify":
        return [{"speeds": " ".join(map(str, rec.inputs["speeds"])), "class": o["class"], "witness": _flat(o.get("witness", "")), "witness_points": " ".join(_flat(p) for p in o.get("witness_points", []))}]
    if rec.command == "tables":
        return [{"table": name, **{k: _flat(v) for k, v in r.items()}} for name in ("chi", "kappa") for r in o.get(name, [])]
    if rec.command == "f":
        return [{"n": r["n"], "f": r["f"], "pairs_checked": r["pairs_checked"], "failures": len(r["failures"])} for r in o["results"]]
    if rec.command == "central":
        return [{k: _flat(v) for k, v in r.items()} for r in o["list"]]
    if "rows" in o:
        return [{k: _flat(v) for k, v in r.items()} for r in o["rows"]]
    return [{k: _flat(v) for k, v in o.items()}]


def render(rec: ReportRecord, fmt: str) -> str:
    if fmt == "json":
        return rec.to_json() + "\n"
    rows = _csv_rows(rec)
    if fmt == "csv":
        buf = io.StringIO()
        fields: list[str] = []
        for r in rows:
            fields.extend(k for k in r if k not in fields)
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    lines = [f"# {rec.command} {json.dumps(rec.inputs, sort_keys=True)}"]
    if rec.command == "tables":
        for name in ("chi", "kappa"):
            if name in rec.outcome:
                lines.append(f"{name}: a | modulus | gamma | value")
                for r in rec.outcome[name]:
                    lines.append(f"  {r['a']} | {r['modulus']:,} | {r['gamma_display']} | {r['value_display']}")
    else:
        for r in rows:
            lines.append("  " + "  ".join(f"{k}={v}" for k, v in r.items()))
    if rec.partial:
        lines.append("(partial)")
    return "\n".join(lines) + "\n"


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "human"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--budget-secs", type=float, default=None)
    common.add_argument("--timing", action="store_true", help="include wall time in the report")

    p = argparse.ArgumentParser(prog="lonely-runner", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="tight / loose / counterexample")
    s.add_argument("speeds", type=int, nargs="+")

    s = sub.add_parser("witness", parents=[common], help="certified loose time for n < v_n <= 2n-2k")
    s.add_argument("speeds", type=int, nargs="+")
    s.add_argument("--script-m", type=int, default=None, help="group half-size M")
    s.add_argument("--k", type=int, default=None, help="gap parameter (default floor((2n-v_n)/2))")
    s.add_argument("--out", default=None, help="also write the report to this file")

    s = sub.add_parser("witness-batch", parents=[common], help="witnesses for seeded random instances")
    s.add_argument("--count", type=int, default=20)
    s.add_argument("--n-range", type=parse_range, default=(30, 120))

    s = sub.add_parser("verify-witness", parents=[common], help="re-verify a saved certificate")
    s.add_argument("path")

    s = sub.add_parser("f", parents=[common], help="compute f(n) by exhaustive matching")
    s.add_argument("n_range", type=parse_range)
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--include-overlapping", action="store_true")
    s.add_argument("--max-pairs", type=int, default=None, help="stop after this many fresh pairs")

    s = sub.add_parser("central", parents=[common], help="exhaustive four-outcome scan")
    s.add_argument("n", type=int)
    s.add_argument("m", type=int)

    s = sub.add_parser("adjacent", parents=[common], help="adjacent-interval coprime mappings")
    s.add_argument("k_range", type=parse_range)
    s.add_argument("--allow-small", action="store_true", help="permit k < 4")

    s = sub.add_parser("tables", parents=[common], help="chi_a / kappa_a tables")
    s.add_argument("--chi", type=parse_range, default=None)
    s.add_argument("--kappa", type=parse_range, default=None)

    s = sub.add_parser("coprime-gap", parents=[common], help="longest runs sharing a factor with x")
    s.add_argument("x_range", type=parse_range)
    s.add_argument("--scan-limit", type=int, default=None)
    return p


def _dispatch(args: argparse.Namespace, cfg: RunConfig) -> ReportRecord:
    c = args.command
    if c == "classify":
        return cmd_classify(args.speeds, cfg)
    if c == "witness":
        cfg.extra.update(script_m=args.script_m, k=args.k)
        return cmd_witness(args.speeds, cfg)
    if c == "witness-batch":
        cfg.extra["n_range"] = args.n_range
        return cmd_witness_batch(args.count, cfg)
    if c == "verify-witness":
        return cmd_verify_witness(args.path, cfg)
    if c == "f":
        cfg.checkpoint_path = args.checkpoint
        cfg.extra.update(include_overlapping=args.include_overlapping, max_pairs=args.max_pairs)
        return cmd_f_of_n(args.n_range, cfg)
    if c == "central":
        return cmd_central_check(args.n, args.m, cfg)
    if c == "adjacent":
        cfg.extra["allow_small"] = args.allow_small
        return cmd_adjacent_check(args.k_range, cfg)
    if c == "tables":
        return cmd_tables(args.chi, args.kappa, cfg)
    if c == "coprime-gap":
        cfg.extra["scan_limit"] = args.scan_limit
        return cmd_coprime_gap(args.x_range, cfg)
    raise InvalidArgument(f"unknown command {c}")


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    cfg = RunConfig(
        command=args.command,
        output_format=args.format,
        seed=args.seed,
        threads=args.threads,
        budget_secs=args.budget_secs,
        timing=args.timing,
    )
    t0 = time.perf_counter()
    try:
        rec = _dispatch(args, cfg)
    except BudgetExceeded as exc:
        if isinstance(exc.partial, ReportRecord):
            stdout.write(render(exc.partial, cfg.output_format))
        print(f"error: {exc}", file=stderr)
        return exc.exit_code
    except SearchFailed as exc:
        print(f"error: {exc}", file=stderr)
        return exc.exit_code
    except ToolkitError as exc:
        print(f"error: {exc}", file=stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    if cfg.timing:
        rec.timing = round(time.perf_counter() - t0, 6)
    text = render(rec, cfg.output_format)
    stdout.write(text)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(rec.to_json() + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
