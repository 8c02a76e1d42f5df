"""Command-line entry point: check, iterate, bench, dump-smt.

Exit codes: 0 when the query is unsatisfiable or the program verified,
1 when an assertion-failure counterexample was found, 2 when the result
is inconclusive (bound reached, exhaustion reachable, or the solver gave
up), 3 on errors (usage, parsing, solver malfunction).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .checker import (
    BoundReached, CheckRun, FAIL_REACH, NIL_REACH, Sat, SolverTimeout,
    SolverUnknown, Unsat, Verdict, Verified, bound_iterate, build_queries,
    check_run, format_model_value, free_inputs, replay,
)
from .formula import EVar, FIsVal, ScriptBuilder
from .interp import FailO
from .parser import Program, parse_program
from .syntax import HobmcError
from .translate import lv, translate


EXIT_CLEAR = 0
EXIT_COUNTEREXAMPLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_ERROR = 3


def _load(path: str) -> Program:
    with open(path) as fh:
        return parse_program(fh.read(), path)


def _parse_fix(pairs: Sequence[str]) -> dict[str, int]:
    fix: dict[str, int] = {}
    for p in pairs:
        name, eq, val = p.partition("=")
        if not eq or not name:
            raise HobmcError(f"--fix wants VAR=INT, got {p!r}")
        try:
            fix[name] = int(val)
        except ValueError:
            raise HobmcError(f"--fix {name}: {val!r} is not an integer")
    return fix


def _witness_line(v: Sat) -> str:
    parts = [f"{k} = {format_model_value(val)}"
             for k, val in sorted(v.model.items()) if k != "ret"]
    return ", ".join(parts) if parts else "(no free inputs)"


def _opt_flag(s: str) -> bool:
    if s in ("on", "off"):
        return s == "on"
    raise argparse.ArgumentTypeError("expected 'on' or 'off'")


def cmd_check(args: argparse.Namespace) -> int:
    prog = _load(args.file)
    cfg = prog.config(args.bound)
    mode = FAIL_REACH if args.mode == "fail" else NIL_REACH
    run = check_run(cfg, mode, args.opt, prune=not args.no_prune,
                    fix=_parse_fix(args.fix), timeout=args.timeout,
                    solver=[args.solver] if args.solver else None,
                    keep_smt=args.emit_smt)
    v = run.verdict
    if isinstance(v, Unsat):
        print(f"unsat: no {args.mode} reachable at k={args.bound}")
        return EXIT_CLEAR
    if isinstance(v, SolverUnknown):
        print(f"inconclusive: {v.reason}")
        return EXIT_INCONCLUSIVE
    assert isinstance(v, Sat)
    if args.mode == "fail":
        print(f"counterexample: {_witness_line(v)}")
        out = replay(cfg, v.model)
        if isinstance(out, FailO):
            print("replay: the interpreter reproduces the failure")
        else:
            print(f"replay: WARNING interpreter got {out!r}", file=sys.stderr)
        return EXIT_COUNTEREXAMPLE
    print(f"bound exhaustion reachable: {_witness_line(v)}")
    return EXIT_INCONCLUSIVE


def cmd_iterate(args: argparse.Namespace) -> int:
    prog = _load(args.file)
    cfg = prog.config(0)
    verdict, log = bound_iterate(
        cfg, kmax=args.kmax, timeout=args.timeout, opt=args.opt,
        prune=not args.no_prune, fix=_parse_fix(args.fix),
        solver=[args.solver] if args.solver else None)
    for rec in log:
        fail_s = _status_word(rec.fail_verdict)
        nil_s = _status_word(rec.nil_verdict) if rec.nil_verdict else "-"
        print(f"k={rec.bound}: fail {fail_s}, nil {nil_s} "
              f"({rec.seconds:.2f}s)")
    if isinstance(verdict, Sat):
        print(f"counterexample at k={verdict.bound}: {_witness_line(verdict)}")
        return EXIT_COUNTEREXAMPLE
    if isinstance(verdict, Verified):
        print(f"verified at k={verdict.bound}")
        return EXIT_CLEAR
    if isinstance(verdict, BoundReached):
        print(f"no counterexample up to k={verdict.bound}; inconclusive")
        return EXIT_INCONCLUSIVE
    print(str(verdict))
    return EXIT_INCONCLUSIVE


def _status_word(v: Optional[Verdict]) -> str:
    if isinstance(v, Sat):
        return "sat"
    if isinstance(v, Unsat):
        return "unsat"
    if isinstance(v, SolverUnknown):
        return "unknown"
    return "-"


def cmd_dump_smt(args: argparse.Namespace) -> int:
    prog = _load(args.file)
    cfg = prog.config(args.bound)
    inputs = free_inputs(cfg)
    assumptions = [FIsVal(EVar(lv(n))) for n in inputs]
    tr = translate(cfg.term, cfg.repo, cfg.store, cfg.bound,
                   opt=args.opt, prune=not args.no_prune,
                   assumptions=assumptions)
    mode = FAIL_REACH if args.mode == "fail" else NIL_REACH
    queries = build_queries(tr, mode, {r.ident: r for r in cfg.store})
    sb = ScriptBuilder(tr.methods)
    for c in tr.clauses:
        sb.add_clause(c)
    for q in queries:
        sb.add_clause(q)
    script = "\n".join(sb.preamble() + sb.assert_lines()
                       + ["(check-sat)"]) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(script)
        print(f"wrote {len(script)} bytes to {args.output}")
    else:
        sys.stdout.write(script)
    return EXIT_CLEAR


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    """One benchmark measurement (a row of the CSV)."""

    program: str
    k: int
    opt: bool
    run: int
    verdict: str  # counterexample | verified | bound | timeout | unknown
    seconds: float
    vars: int
    clauses: int
    branches: int

    def row(self) -> list:
        return [self.program, self.k, "on" if self.opt else "off", self.run,
                self.verdict, f"{self.seconds:.4f}", self.vars,
                self.clauses, self.branches]


CSV_HEADER = ["program", "k", "opt", "run", "verdict", "seconds", "vars",
              "clauses", "branches"]


def _bench_one_k(prog: Program, k: int, opt: bool, timeout: float,
                 solver: Optional[Sequence[str]],
                 ) -> tuple[str, float, Optional[CheckRun]]:
    """One verdict-protocol step at bound k: fail query, then nil query
    if needed.  Returns (verdict word, seconds, fail-query run)."""
    cfg = prog.config(k)
    t0 = time.monotonic()
    try:
        frun = check_run(cfg, FAIL_REACH, opt, timeout=timeout,
                         solver=solver, get_model=False)
    except SolverTimeout:
        return "timeout", time.monotonic() - t0, None
    if isinstance(frun.verdict, Sat):
        return "counterexample", time.monotonic() - t0, frun
    if isinstance(frun.verdict, SolverUnknown):
        return "unknown", time.monotonic() - t0, frun
    try:
        nrun = check_run(cfg, NIL_REACH, opt, timeout=timeout,
                         solver=solver, get_model=False)
    except SolverTimeout:
        return "timeout", time.monotonic() - t0, frun
    seconds = time.monotonic() - t0
    if isinstance(nrun.verdict, Unsat):
        return "verified", seconds, frun
    if isinstance(nrun.verdict, SolverUnknown):
        return "unknown", seconds, frun
    return "bound", seconds, frun


def _bench_program(path: str, kmax: int, repeat: int, timeout: float,
                   solver: Optional[Sequence[str]]) -> list[RunRecord]:
    prog = _load(path)
    name = os.path.splitext(os.path.basename(path))[0]
    records: list[RunRecord] = []
    for opt in (False, True):
        for k in range(kmax + 1):
            stats = None
            stop = False
            over_budget = False
            for run in range(1, repeat + 1):
                verdict, seconds, frun = _bench_one_k(
                    prog, k, opt, timeout, solver)
                if frun is not None:
                    stats = frun.translation.stats
                records.append(RunRecord(
                    name, k, opt, run, verdict, seconds,
                    (stats.n_ret_vars + stats.n_version_vars) if stats else 0,
                    stats.n_clauses if stats else 0,
                    stats.n_branches if stats else 0))
                if verdict in ("counterexample", "verified", "timeout"):
                    stop = True
                if seconds > timeout:
                    over_budget = True
                if verdict == "timeout" or over_budget:
                    break  # don't re-measure a blown budget
            if stop or over_budget:
                break
    return records


def _percent_summary(records: list[RunRecord]) -> list[str]:
    """Per program: wall time and branch count, optimized vs base, at the
    (k, run) pairs both settings completed."""
    by_prog: dict[str, list[RunRecord]] = {}
    for r in records:
        by_prog.setdefault(r.program, []).append(r)
    lines = ["program          base(s)    opt(s)   time-change   "
             "base-branches opt-branches branch-change"]
    for name in sorted(by_prog):
        recs = by_prog[name]
        base = {(r.k, r.run): r for r in recs if not r.opt}
        optd = {(r.k, r.run): r for r in recs if r.opt}
        common = sorted(set(base) & set(optd))
        if not common:
            continue
        bt = sum(base[c].seconds for c in common)
        ot = sum(optd[c].seconds for c in common)
        kmaxc = max(k for k, _ in common)
        bb = max(base[(k, r)].branches for k, r in common if k == kmaxc)
        ob = max(optd[(k, r)].branches for k, r in common if k == kmaxc)
        tchg = f"{(ot - bt) / bt * 100:+.1f}%" if bt > 0 else "n/a"
        bchg = f"{(ob - bb) / bb * 100:+.1f}%" if bb > 0 else "n/a"
        lines.append(f"{name:<16} {bt:8.2f}  {ot:8.2f}   {tchg:>11}   "
                     f"{bb:13d} {ob:12d} {bchg:>13}")
    return lines


def cmd_bench(args: argparse.Namespace) -> int:
    paths = sorted(
        os.path.join(args.dir, f) for f in os.listdir(args.dir)
        if f.endswith(".bmc"))
    if not paths:
        print(f"no .bmc files in {args.dir}", file=sys.stderr)
        return EXIT_ERROR
    solver = [args.solver] if args.solver else None
    records: list[RunRecord] = []
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        futs = [pool.submit(_bench_program, p, args.kmax, args.repeat,
                            args.timeout, solver) for p in paths]
        for fut in futs:
            records.extend(fut.result())
    records.sort(key=lambda r: (r.program, not r.opt, r.k, r.run))
    out = sys.stdout
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in records:
                w.writerow(r.row())
        print(f"wrote {len(records)} rows to {args.csv}")
    else:
        w = csv.writer(out)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.row())
    print()
    for line in _percent_summary(records):
        print(line)
    return EXIT_CLEAR


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, bound: bool) -> None:
    if bound:
        p.add_argument("--bound", "-k", type=int, default=2,
                       help="nested-call budget (default 2)")
    p.add_argument("--opt", type=_opt_flag, default=True, metavar="on|off",
                   help="points-to candidate narrowing (default on)")
    p.add_argument("--no-prune", action="store_true",
                   help="keep all outcome-propagation clauses")
    p.add_argument("--solver", help="solver executable (default: "
                   "$HOBMC_SOLVER, else z3/cvc5 on PATH)")
    p.add_argument("--timeout", type=float, default=10.0,
                   help="per-query solver timeout in seconds (default 10)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hobmc",
        description="Bounded model checker for a higher-order language "
                    "with general references.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="one query at one bound")
    p.add_argument("file")
    _add_common(p, bound=True)
    p.add_argument("--mode", choices=["fail", "nil"], default="fail",
                   help="query: assertion failure or budget exhaustion")
    p.add_argument("--fix", action="append", default=[], metavar="VAR=INT",
                   help="pin an integer input (repeatable)")
    p.add_argument("--emit-smt", metavar="PATH",
                   help="also write the solver script to PATH")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("iterate", help="increase the bound until decided")
    p.add_argument("file")
    _add_common(p, bound=False)
    p.add_argument("--kmax", type=int, default=10,
                   help="largest bound to try (default 10)")
    p.add_argument("--fix", action="append", default=[], metavar="VAR=INT",
                   help="pin an integer input (repeatable)")
    p.set_defaults(fn=cmd_iterate)

    p = sub.add_parser("bench", help="run a directory of programs, "
                       "both optimization settings, and summarize")
    p.add_argument("dir")
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--repeat", type=int, default=3,
                   help="measurements per configuration (default 3)")
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--solver")
    p.add_argument("--csv", metavar="PATH", help="write rows to PATH")
    p.add_argument("--jobs", type=int, default=min(4, os.cpu_count() or 1),
                   help="programs to run in parallel")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("dump-smt", help="emit the solver script only")
    p.add_argument("file")
    _add_common(p, bound=True)
    p.add_argument("--mode", choices=["fail", "nil"], default="fail")
    p.add_argument("--output", "-o", metavar="PATH")
    p.set_defaults(fn=cmd_dump_smt)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except HobmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
