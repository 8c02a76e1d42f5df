"""Checking a configuration against a query, and iterating the bound.

The sequence for one check is:

1. preconditions: pin every fixed input to its value and restrict every
   free input to proper values of its sort (an unconstrained datatype
   variable could otherwise stand for Fail/Nil, which no real input is);
2. translate the term at the configuration's budget;
3. conjoin the query — budget exhaustion `(ret = nil)`, assertion failure
   `(ret = fail)`, or the negation of a return/store property;
4. render one SMT-LIB script and run the solver on it in a fresh
   subprocess with a wall-clock timeout;
5. decode the model (when sat) back into program values.

`bound_iterate` wraps this loop in the verdict protocol: at each budget,
an assertion failure is a counterexample and stops; otherwise, if budget
exhaustion is impossible, every real run has been covered and the program
is verified; otherwise the budget increases.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Optional, Sequence, Union

from .formula import (
    EFail, EInt, ENil, EVar, Expr, FCmp, FEq, FIsVal, FOr, Formula,
    MethodConst, ScriptBuilder, negate,
)
from .interp import NameGen, Outcome, evaluate_program
from .syntax import (
    Config, HobmcError, Name, TProd, TInt, TUnit, Type, Value,
    VInt, VPair, VUnit, free_vars, is_ground, type_str, validate_config,
)
from .translate import Translation, lv, translate


class CheckError(HobmcError):
    pass


class SolverNotFound(CheckError):
    pass


class SolverCrashed(CheckError):
    pass


class SolverTimeout(CheckError):
    pass


class ModelParseError(CheckError):
    pass


# ---------------------------------------------------------------------------
# Query modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FailReach:
    """Is an assertion failure reachable?"""


@dataclass(frozen=True)
class NilReach:
    """Is budget exhaustion reachable?"""


@dataclass(frozen=True)
class ReturnProp:
    """Can the program return a proper value violating `prop`?

    `prop` maps the root result expression to the property formula; the
    query conjoins its negation with properness of the result (an aborted
    run constrains neither the result's payload nor the final store, so
    without the properness conjunct the query could be satisfied by runs
    that never return).
    """

    prop: Callable[[Expr], Formula]
    label: str = "return property"


@dataclass(frozen=True)
class StoreProp:
    """Can the program finish with `ref`'s final value violating `prop`?"""

    ref: str
    prop: Callable[[Expr], Formula]
    label: str = "store property"


CheckMode = Union[FailReach, NilReach, ReturnProp, StoreProp,
                  Sequence[StoreProp]]

FAIL_REACH = FailReach()
NIL_REACH = NilReach()


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MMeth:
    """A method identity appearing in a model (by integer id)."""

    mid: int
    label: str = ""


class _MFail:
    def __repr__(self) -> str:
        return "fail"


class _MNil:
    def __repr__(self) -> str:
        return "nil"


MFAIL = _MFail()
MNIL = _MNil()


@dataclass(frozen=True)
class MPair:
    """A model pair that is not a program value (a component is a method
    identity or an abnormal marker)."""

    fst: "ModelValue"
    snd: "ModelValue"


# A decoded model binding: a proper program value, a method identity, an
# abnormal outcome marker, a mixed pair, or None for "unconstrained"
# (absent from the model).
ModelValue = Union[Value, MMeth, _MFail, _MNil, MPair, None]


class Verdict:
    """Base class; one of Sat, Unsat, SolverUnknown, Verified, BoundReached."""


@dataclass(frozen=True)
class Sat(Verdict):
    """The query is satisfiable; `model` binds Main's free ground
    parameters plus "ret" (the root result)."""

    model: Mapping[str, ModelValue]
    bound: int

    def __str__(self) -> str:
        inputs = ", ".join(f"{k} = {format_model_value(v)}"
                           for k, v in sorted(self.model.items())
                           if k != "ret")
        ret = format_model_value(self.model.get("ret"))
        body = f"{inputs}; ret = {ret}" if inputs else f"ret = {ret}"
        return f"sat at k={self.bound}: {body}"


@dataclass(frozen=True)
class Unsat(Verdict):
    bound: int

    def __str__(self) -> str:
        return f"unsat at k={self.bound}"


@dataclass(frozen=True)
class SolverUnknown(Verdict):
    reason: str
    bound: int

    def __str__(self) -> str:
        return f"unknown at k={self.bound}: {self.reason}"


@dataclass(frozen=True)
class Verified(Verdict):
    """Assertion failure and budget exhaustion are both impossible at
    `bound`, so every real run of the program is covered: no input
    violates any assertion."""

    bound: int

    def __str__(self) -> str:
        return f"verified at k={self.bound}"


@dataclass(frozen=True)
class BoundReached(Verdict):
    """No counterexample up to `bound`, but runs beyond the budget remain
    unexplored; inconclusive."""

    bound: int

    def __str__(self) -> str:
        return f"bound reached at k={self.bound}: inconclusive"


def format_model_value(v: ModelValue) -> str:
    if v is None:
        return "unconstrained"
    if isinstance(v, VInt):
        return str(v.value)
    if isinstance(v, VUnit):
        return "()"
    if isinstance(v, (VPair, MPair)):
        return f"({format_model_value(v.fst)}, {format_model_value(v.snd)})"
    if isinstance(v, MMeth):
        return v.label or f"m{v.mid}"
    return repr(v)  # fail / nil


# ---------------------------------------------------------------------------
# Solver subprocess
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverResult:
    status: str  # "sat" | "unsat" | "unknown"
    model_text: Optional[str]
    seconds: float


def find_solver() -> list[str]:
    """The solver command line: $HOBMC_SOLVER if set (split like a shell
    would), else `z3` or `cvc5` from PATH."""
    env = os.environ.get("HOBMC_SOLVER")
    if env:
        return shlex.split(env)
    for exe in ("z3", "cvc5"):
        path = shutil.which(exe)
        if path:
            return [path]
    raise SolverNotFound(
        "no SMT solver found: set HOBMC_SOLVER or put z3/cvc5 on PATH")


def run_solver(smtlib: str, timeout: float = 10.0,
               solver: Optional[Sequence[str]] = None,
               keep_path: Optional[str] = None) -> SolverResult:
    """Run one solver process on `smtlib` and classify its answer.

    The verdict is the first stdout line that is exactly sat/unsat/unknown.
    Diagnostic `(error ...)` lines *before* the verdict mean the solver
    rejected part of the input (some solvers then keep going and report a
    verdict for the crippled problem, with exit status 0) — that is a
    crash, not an answer.  Errors after the verdict are harmless chatter
    (e.g. complaints about `(get-model)` after unsat).
    """
    cmd = list(solver) if solver is not None else find_solver()
    if keep_path:
        path = keep_path
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w") as fh:
            fh.write(smtlib)
    else:
        fd, path = tempfile.mkstemp(suffix=".smt2", prefix="hobmc_")
        with os.fdopen(fd, "w") as fh:
            fh.write(smtlib)
    try:
        t0 = time.monotonic()
        try:
            proc = subprocess.run(cmd + [path], capture_output=True,
                                  text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            raise SolverTimeout(f"solver exceeded {timeout} s")
        except OSError as exc:
            raise SolverNotFound(f"cannot run solver {cmd[0]}: {exc}")
        seconds = time.monotonic() - t0
        lines = proc.stdout.splitlines()
        verdict_at = None
        for i, line in enumerate(lines):
            if line.strip() in ("sat", "unsat", "unknown"):
                verdict_at = i
                break
            if line.lstrip().startswith("(error"):
                raise SolverCrashed(
                    f"solver rejected the script: {line.strip()}")
        if verdict_at is None:
            raise SolverCrashed(
                "solver produced no verdict "
                f"(exit {proc.returncode}): {proc.stdout[:500]!r} "
                f"{proc.stderr[:500]!r}")
        status = lines[verdict_at].strip()
        rest = "\n".join(lines[verdict_at + 1:])
        model_text = rest if status == "sat" and rest.strip() else None
        return SolverResult(status, model_text, seconds)
    finally:
        if not keep_path:
            os.unlink(path)


# ---------------------------------------------------------------------------
# Model decoding
# ---------------------------------------------------------------------------


def _tokenize_sexp(text: str) -> list[str]:
    toks: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in "()":
            toks.append(c)
            i += 1
        elif c.isspace():
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise ModelParseError(f"unterminated |symbol|: {text[i:i+40]!r}")
            toks.append(text[i + 1:j])
            i = j + 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            toks.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();|":
                j += 1
            toks.append(text[i:j])
            i = j
    return toks


def _read_sexp(toks: list[str], pos: int) -> tuple[object, int]:
    if pos >= len(toks):
        raise ModelParseError("unexpected end of model text")
    t = toks[pos]
    if t == "(":
        items = []
        pos += 1
        while pos < len(toks) and toks[pos] != ")":
            item, pos = _read_sexp(toks, pos)
            items.append(item)
        if pos >= len(toks):
            raise ModelParseError("unbalanced parentheses in model text")
        return items, pos + 1
    if t == ")":
        raise ModelParseError("unexpected ')' in model text")
    return t, pos + 1


def _decode_int(sexp: object) -> int:
    if isinstance(sexp, str):
        try:
            return int(sexp)
        except ValueError:
            raise ModelParseError(f"not an integer literal: {sexp!r}")
    if (isinstance(sexp, list) and len(sexp) == 2 and sexp[0] == "-"):
        return -_decode_int(sexp[1])
    raise ModelParseError(f"not an integer literal: {sexp!r}")


def decode_model_value(sexp: object,
                       methods: Mapping[int, MethodConst] = {},
                       ) -> ModelValue:
    """One model body back into a program value (or fail/nil marker)."""
    if isinstance(sexp, str):
        if sexp == "Unit_unit":
            return VUnit()
        if sexp.startswith("Fail_"):
            return MFAIL
        if sexp.startswith("Nil_"):
            return MNIL
        raise ModelParseError(f"unrecognized model value: {sexp!r}")
    if isinstance(sexp, list) and sexp:
        head = sexp[0]
        if head == "Int_int" and len(sexp) == 2:
            return VInt(_decode_int(sexp[1]))
        if isinstance(head, str) and head.startswith("Pair_") and len(sexp) == 3:
            fst = decode_model_value(sexp[1], methods)
            snd = decode_model_value(sexp[2], methods)
            if isinstance(fst, (VInt, VUnit, VPair)) and \
               isinstance(snd, (VInt, VUnit, VPair)):
                return VPair(fst, snd)
            return MPair(fst, snd)
        if isinstance(head, str) and head.startswith("Meth_") and len(sexp) == 2:
            mid = _decode_int(sexp[1])
            mc = methods.get(mid)
            return MMeth(mid, mc.label if mc else "")
        if head == "as" and len(sexp) == 3:  # (as Nil_x V_x) qualified form
            return decode_model_value(sexp[1], methods)
    raise ModelParseError(f"unrecognized model value: {sexp!r}")


def parse_model(model_text: str,
                methods: Sequence[MethodConst] = (),
                ) -> dict[str, ModelValue]:
    """The solver's model block as {constant name: decoded value}.

    Accepts both the bare `((define-fun ...) ...)` form and the older
    `(model (define-fun ...) ...)` wrapper.
    """
    toks = _tokenize_sexp(model_text)
    if not toks:
        raise ModelParseError("empty model text")
    sexp, pos = _read_sexp(toks, 0)
    if pos != len(toks):
        raise ModelParseError("trailing tokens after model block")
    if not isinstance(sexp, list):
        raise ModelParseError(f"model block is not a list: {sexp!r}")
    entries = sexp[1:] if sexp and sexp[0] == "model" else sexp
    by_id = {mc.mid: mc for mc in methods}
    out: dict[str, ModelValue] = {}
    for entry in entries:
        if (not isinstance(entry, list) or len(entry) != 5
                or entry[0] != "define-fun"):
            raise ModelParseError(f"unrecognized model entry: {entry!r}")
        name, args, body = entry[1], entry[2], entry[4]
        if not isinstance(name, str) or args != []:
            raise ModelParseError(f"unrecognized model entry: {entry!r}")
        out[name] = decode_model_value(body, by_id)
    return out


# ---------------------------------------------------------------------------
# Query construction and the check itself
# ---------------------------------------------------------------------------


def default_value(t: Type) -> Value:
    """The replay stand-in for an input the model left unconstrained."""
    if isinstance(t, TInt):
        return VInt(0)
    if isinstance(t, TUnit):
        return VUnit()
    if isinstance(t, TProd):
        return VPair(default_value(t.left), default_value(t.right))
    raise CheckError(f"no default value at type {type_str(t)}")


def free_inputs(cfg: Config) -> list[Name]:
    """The configuration's free variables, sorted by identifier; all must
    be ground (a free method-typed variable admits no finite candidate
    set, so such programs are rejected here rather than encoded)."""
    out = sorted(free_vars(cfg.term), key=lambda n: n.ident)
    for n in out:
        if not is_ground(n.typ):
            raise CheckError(
                f"free variable {n.ident} has non-ground type "
                f"{type_str(n.typ)}; only ground inputs are checkable")
    return out


def _mode_list(mode: CheckMode) -> list[object]:
    if isinstance(mode, (FailReach, NilReach, ReturnProp, StoreProp)):
        return [mode]
    modes = list(mode)
    if not modes:
        raise CheckError("empty mode combination")
    if not all(isinstance(m, StoreProp) for m in modes):
        raise CheckError(
            "only store properties can be combined into one query")
    return modes


def build_queries(tr: Translation, mode: CheckMode,
                  store_by_ident: Mapping[str, Name]) -> list[Formula]:
    """The query formulas for `mode` against translation `tr`."""
    modes = _mode_list(mode)
    ret = EVar(tr.ret)
    if isinstance(modes[0], FailReach):
        return [FEq(ret, EFail(tr.ret.sort))]
    if isinstance(modes[0], NilReach):
        return [FEq(ret, ENil(tr.ret.sort))]
    if isinstance(modes[0], ReturnProp):
        if not is_ground(tr.ret.sort):
            raise CheckError("return property over non-ground result type "
                             + type_str(tr.ret.sort))
        return [FIsVal(ret), negate(modes[0].prop(ret))]
    # Store properties: a completed run in which at least one property is
    # violated.  (Violating their conjunction is the disjunction of the
    # individual violations.)
    violations = []
    for m in modes:
        r = store_by_ident.get(m.ref)
        if r is None:
            raise CheckError(f"no reference named {m.ref}")
        if not is_ground(r.typ):
            raise CheckError(
                f"store property over non-ground reference {m.ref} : "
                + type_str(r.typ))
        violations.append(negate(m.prop(EVar(tr.store_final[r]))))
    return [FIsVal(ret), FOr(tuple(violations))]


@dataclass
class CheckRun:
    """Everything one check produced (the verdict plus its artifacts)."""

    verdict: Verdict
    translation: Translation
    script: str
    solver_seconds: float


def check_run(cfg: Config, mode: CheckMode = FAIL_REACH, opt: bool = True,
              *, prune: bool = True, fix: Optional[Mapping[str, int]] = None,
              timeout: float = 10.0, solver: Optional[Sequence[str]] = None,
              get_model: bool = True, keep_smt: Optional[str] = None,
              extra_queries: Sequence[Formula] = (),
              ) -> CheckRun:
    """Check `cfg` against `mode`; the full-detail variant of `check`."""
    validate_config(cfg, tuple(free_vars(cfg.term)))
    inputs = free_inputs(cfg)
    by_ident = {n.ident: n for n in inputs}
    assumptions: list[Formula] = [FIsVal(EVar(lv(n))) for n in inputs]
    for ident, value in (fix or {}).items():
        n = by_ident.get(ident)
        if n is None:
            raise CheckError(f"cannot fix {ident}: not a free variable")
        if not isinstance(n.typ, TInt):
            raise CheckError(f"cannot fix {ident}: not an integer input")
        assumptions.append(FEq(EVar(lv(n)), EInt(value)))
    tr = translate(cfg.term, cfg.repo, cfg.store, cfg.bound,
                   opt=opt, prune=prune, assumptions=assumptions)
    store_by_ident = {r.ident: r for r in cfg.store}
    queries = build_queries(tr, mode, store_by_ident) + list(extra_queries)

    sb = ScriptBuilder(tr.methods)
    for c in tr.clauses:
        sb.add_clause(c)
    for q in queries:
        sb.add_clause(q)
    lines = sb.preamble() + sb.assert_lines() + ["(check-sat)"]
    if get_model:
        lines.append("(get-model)")
    script = "\n".join(lines) + "\n"

    res = run_solver(script, timeout=timeout, solver=solver,
                     keep_path=keep_smt)
    if res.status == "unknown":
        verdict: Verdict = SolverUnknown("solver returned unknown", cfg.bound)
    elif res.status == "unsat":
        verdict = Unsat(cfg.bound)
    else:
        model: dict[str, ModelValue] = {}
        if get_model:
            if res.model_text is None:
                raise ModelParseError("sat but no model block in output")
            full = parse_model(res.model_text, tr.methods)
            for n in inputs:
                model[n.ident] = full.get(n.ident)
            model["ret"] = full.get(tr.ret.ident)
        verdict = Sat(model, cfg.bound)
    return CheckRun(verdict, tr, script, res.seconds)


def check(cfg: Config, mode: CheckMode = FAIL_REACH, opt: bool = True,
          **kwargs) -> Verdict:
    """Translate `cfg`, conjoin the `mode` query, and ask the solver."""
    return check_run(cfg, mode, opt, **kwargs).verdict


def replay(cfg: Config, model: Mapping[str, ModelValue],
           seed: int = 0) -> Outcome:
    """Run the interpreter on the model's inputs at the same budget.

    Unconstrained inputs are defaulted (any value would do — the formula
    holds for all of them)."""
    env: dict[Name, Value] = {}
    for n in free_inputs(cfg):
        v = model.get(n.ident)
        if v is None:
            env[n] = default_value(n.typ)
        elif isinstance(v, (VInt, VUnit, VPair)):
            env[n] = v
        else:
            raise CheckError(
                f"model binds input {n.ident} to non-value {v!r}")
    out, _, _ = evaluate_program(cfg.term, cfg.repo, cfg.store, env,
                                 cfg.bound, NameGen(seed))
    return out


# ---------------------------------------------------------------------------
# Bound iteration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterRecord:
    """One budget's worth of bound iteration."""

    bound: int
    fail_verdict: Verdict
    nil_verdict: Optional[Verdict]  # None when fail already decided
    seconds: float


def bound_iterate(cfg: Config, kmax: int = 10, timeout: float = 10.0,
                  opt: bool = True, *, prune: bool = True,
                  fix: Optional[Mapping[str, int]] = None,
                  solver: Optional[Sequence[str]] = None,
                  stop_on_unknown: bool = False,
                  ) -> tuple[Verdict, list[IterRecord]]:
    """Increase the budget until a counterexample or a verification.

    Per budget k = 0..kmax: a satisfiable failure query is a
    counterexample (stop); otherwise an unsatisfiable exhaustion query
    means no run was cut short, so the program is verified (stop);
    otherwise deeper runs exist and k increases.  Unknown/timeout results
    are recorded and skip to the next k unless `stop_on_unknown`.
    """
    log: list[IterRecord] = []
    for k in range(kmax + 1):
        kcfg = replace(cfg, bound=k)
        t0 = time.monotonic()
        try:
            fail_v = check(kcfg, FAIL_REACH, opt, prune=prune, fix=fix,
                           timeout=timeout, solver=solver)
        except SolverTimeout:
            fail_v = SolverUnknown(f"timeout after {timeout} s", k)
        if isinstance(fail_v, Sat):
            log.append(IterRecord(k, fail_v, None, time.monotonic() - t0))
            return fail_v, log
        nil_v: Optional[Verdict] = None
        if isinstance(fail_v, Unsat):
            try:
                nil_v = check(kcfg, NIL_REACH, opt, prune=prune, fix=fix,
                              timeout=timeout, solver=solver)
            except SolverTimeout:
                nil_v = SolverUnknown(f"timeout after {timeout} s", k)
            if isinstance(nil_v, Unsat):
                v = Verified(k)
                log.append(IterRecord(k, fail_v, nil_v,
                                      time.monotonic() - t0))
                return v, log
        log.append(IterRecord(k, fail_v, nil_v, time.monotonic() - t0))
        unknown = isinstance(fail_v, SolverUnknown) or \
            isinstance(nil_v, SolverUnknown)
        if unknown and stop_on_unknown:
            return SolverUnknown(f"stopped at k={k}", k), log
    return BoundReached(kmax), log


# ---------------------------------------------------------------------------
# Witness minimization
# ---------------------------------------------------------------------------


def minimize_int_witness(cfg: Config, mode: CheckMode, var: str,
                         opt: bool = True, *, lo: int = 0,
                         prune: bool = True,
                         fix: Optional[Mapping[str, int]] = None,
                         timeout: float = 10.0,
                         solver: Optional[Sequence[str]] = None,
                         ) -> Optional[tuple[int, Mapping[str, ModelValue]]]:
    """The least value of integer input `var` (at least `lo`) satisfying
    `mode`, by binary search on an added `var <= c` constraint.

    Plain satisfiability returns an arbitrary witness; this pins the
    minimum.  Returns None when the query is unsatisfiable even with only
    the `var >= lo` restriction.  The search floor defaults to 0 because
    programs that recurse on `var` are typically bottomless below it
    (every negative value exhausts any budget, so an unrestricted minimum
    would not exist).
    """
    inputs = free_inputs(cfg)
    target = next((n for n in inputs if n.ident == var), None)
    if target is None or not isinstance(target.typ, TInt):
        raise CheckError(f"{var} is not a free integer input")
    tv = EVar(lv(target))

    def probe(lo_c: int, hi_c: Optional[int]) -> Optional[int]:
        extra: list[Formula] = [FCmp(">=", tv, EInt(lo_c))]
        if hi_c is not None:
            extra.append(FCmp("<=", tv, EInt(hi_c)))
        run = check_run(cfg, mode, opt, prune=prune, fix=fix,
                        timeout=timeout, solver=solver, extra_queries=extra)
        if isinstance(run.verdict, Sat):
            got = run.verdict.model.get(var)
            if not isinstance(got, VInt):
                raise ModelParseError(f"model binds {var} to {got!r}")
            return got.value
        if isinstance(run.verdict, SolverUnknown):
            raise SolverTimeout("solver unknown during minimization")
        return None

    best = probe(lo, None)
    if best is None:
        return None
    lo_b, hi_b = lo, best
    while lo_b < hi_b:
        mid = (lo_b + hi_b) // 2
        got = probe(lo_b, mid)
        if got is None:
            lo_b = mid + 1
        else:
            hi_b = min(got, mid)
    final = check_run(cfg, mode, opt, prune=prune, fix=fix, timeout=timeout,
                      solver=solver, extra_queries=[FEq(tv, EInt(hi_b))])
    if not isinstance(final.verdict, Sat):
        raise CheckError("minimization lost the witness it found")
    return hi_b, final.verdict.model
