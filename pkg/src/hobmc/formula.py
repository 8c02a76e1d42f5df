"""Propositional formulas over program values, and their SMT-LIB rendering.

Every program type θ becomes an SMT datatype V_<tok> with one constructor
per proper value shape plus two extra nullary constructors Fail_<tok> and
Nil_<tok>, so a single logical variable can carry "the subterm produced
this value / failed an assertion / exhausted the call budget":

    int        V_int     = Int_int(val_int Int) | Fail_int | Nil_int
    unit       V_unit    = Unit_unit | Fail_unit | Nil_unit
    θ1 × θ2    V_p<..>   = Pair_<tok>(fst_<tok>, snd_<tok>) | Fail | Nil
    θ1 → θ2    V_a<..>   = Meth_<tok>(mid_<tok> Int) | Fail | Nil

<tok> is a prefix-unambiguous mangling of θ (int, unit, p<l><r>, a<l><r>).
Arrow values are method identities: each method becomes a defined constant
m<id> of its arrow sort.

The quasi-guard `guard_F` propagates abnormal outcomes between the
variables of consecutive evaluation steps; `prune_F` specializes it using a
conservative prediction (Q) of which abnormal outcomes the producing
subterm can actually have.

Emission is byte-deterministic: declarations follow first-use order and
the datatype block is sorted structurally.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .syntax import INT, UNIT, TArrow, TInt, TProd, TUnit, Type, type_str


# ---------------------------------------------------------------------------
# Sort mangling
# ---------------------------------------------------------------------------


def sort_token(t: Type) -> str:
    if isinstance(t, TInt):
        return "int"
    if isinstance(t, TUnit):
        return "unit"
    if isinstance(t, TProd):
        return f"p{sort_token(t.left)}{sort_token(t.right)}"
    if isinstance(t, TArrow):
        return f"a{sort_token(t.arg)}{sort_token(t.res)}"
    raise TypeError(f"not a type: {t!r}")


def sort_name(t: Type) -> str:
    return f"V_{sort_token(t)}"


def _sort_depth(t: Type) -> int:
    if isinstance(t, (TInt, TUnit)):
        return 0
    if isinstance(t, TProd):
        return 1 + max(_sort_depth(t.left), _sort_depth(t.right))
    if isinstance(t, TArrow):
        return 1 + max(_sort_depth(t.arg), _sort_depth(t.res))
    raise TypeError(f"not a type: {t!r}")


def close_sorts(sorts: Iterable[Type]) -> list[Type]:
    """All sorts reachable from `sorts` (pair components, arrow ends),
    ordered components-first, deterministically."""
    seen: set[Type] = set()

    def add(t: Type) -> None:
        if t in seen:
            return
        seen.add(t)
        if isinstance(t, TProd):
            add(t.left)
            add(t.right)
        elif isinstance(t, TArrow):
            add(t.arg)
            add(t.res)

    for t in sorts:
        add(t)
    return sorted(seen, key=lambda t: (_sort_depth(t), sort_token(t)))


# ---------------------------------------------------------------------------
# Logical variables and expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogVar:
    ident: str
    sort: Type


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class EVar(Expr):
    var: LogVar


@dataclass(frozen=True)
class EInt(Expr):
    value: int


@dataclass(frozen=True)
class EUnit(Expr):
    pass


@dataclass(frozen=True)
class EFail(Expr):
    sort: Type


@dataclass(frozen=True)
class ENil(Expr):
    sort: Type


@dataclass(frozen=True)
class EMeth(Expr):
    mid: int
    sort: Type  # the arrow type


@dataclass(frozen=True)
class EPair(Expr):
    sort: Type  # the product type
    fst: Expr
    snd: Expr


@dataclass(frozen=True)
class EProj(Expr):
    index: int  # 1 or 2
    sort: Type  # the product type of arg
    arg: Expr


_ARITH_OPS = frozenset({"+", "-", "*", "div", "mod"})
_CMP_OPS = frozenset({"=", "<>", "<", "<=", ">", ">="})
_BOOL_OPS = frozenset({"&&", "||"})


@dataclass(frozen=True)
class EArith(Expr):
    """Integer operation lifted to V_int operands; comparisons and the
    boolean connectives yield Int_int 1/0 (any nonzero operand counts as
    true)."""

    op: str
    left: Expr
    right: Expr


def expr_sort(e: Expr) -> Type:
    if isinstance(e, EVar):
        return e.var.sort
    if isinstance(e, (EInt, EArith)):
        return INT
    if isinstance(e, EUnit):
        return UNIT
    if isinstance(e, (EFail, ENil, EMeth, EPair)):
        return e.sort
    if isinstance(e, EProj):
        assert isinstance(e.sort, TProd)
        return e.sort.left if e.index == 1 else e.sort.right
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class FTrue(Formula):
    pass


@dataclass(frozen=True)
class FEq(Formula):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class FNe(Formula):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class FAnd(Formula):
    parts: tuple[Formula, ...]

    def __init__(self, parts: Iterable[Formula]):
        object.__setattr__(self, "parts", tuple(parts))


@dataclass(frozen=True)
class FOr(Formula):
    parts: tuple[Formula, ...]

    def __init__(self, parts: Iterable[Formula]):
        object.__setattr__(self, "parts", tuple(parts))


@dataclass(frozen=True)
class FImplies(Formula):
    antecedent: Formula
    consequent: Formula


@dataclass(frozen=True)
class FCmp(Formula):
    """Boolean-level integer comparison of two V_int expressions."""

    op: str  # < <= > >=
    left: Expr
    right: Expr


@dataclass(frozen=True)
class FIsVal(Formula):
    """The expression is a proper value: not Fail, not Nil, recursively for
    pair components."""

    expr: Expr


@dataclass(frozen=True)
class FNot(Formula):
    sub: Formula


FFALSE = FOr(())
FTRUE = FTrue()


def negate(f: Formula) -> Formula:
    """Structural negation."""
    if isinstance(f, FTrue):
        return FFALSE
    if isinstance(f, FEq):
        return FNe(f.left, f.right)
    if isinstance(f, FNe):
        return FEq(f.left, f.right)
    if isinstance(f, FAnd):
        return FOr(negate(p) for p in f.parts)
    if isinstance(f, FOr):
        return FAnd(negate(p) for p in f.parts)
    if isinstance(f, FImplies):
        return FAnd((f.antecedent, negate(f.consequent)))
    if isinstance(f, FCmp):
        flip = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}
        return FCmp(flip[f.op], f.left, f.right)
    if isinstance(f, FNot):
        return f.sub
    if isinstance(f, FIsVal):
        return FNot(f)
    raise TypeError(f"not a formula: {f!r}")


def formula_exprs(f: Formula) -> Iterable[Expr]:
    if isinstance(f, (FEq, FNe, FCmp)):
        yield f.left
        yield f.right
    elif isinstance(f, (FAnd, FOr)):
        for p in f.parts:
            yield from formula_exprs(p)
    elif isinstance(f, FImplies):
        yield from formula_exprs(f.antecedent)
        yield from formula_exprs(f.consequent)
    elif isinstance(f, FIsVal):
        yield f.expr
    elif isinstance(f, FNot):
        yield from formula_exprs(f.sub)


def expr_vars(e: Expr) -> Iterable[LogVar]:
    if isinstance(e, EVar):
        yield e.var
    elif isinstance(e, EPair):
        yield from expr_vars(e.fst)
        yield from expr_vars(e.snd)
    elif isinstance(e, EProj):
        yield from expr_vars(e.arg)
    elif isinstance(e, EArith):
        yield from expr_vars(e.left)
        yield from expr_vars(e.right)


def formula_vars(f: Formula) -> list[LogVar]:
    """Free logical variables in first-occurrence order."""
    seen: dict[LogVar, None] = {}
    for e in formula_exprs(f):
        for v in expr_vars(e):
            seen.setdefault(v)
    return list(seen)


def expr_sorts(e: Expr) -> Iterable[Type]:
    yield expr_sort(e)
    if isinstance(e, EPair):
        yield from expr_sorts(e.fst)
        yield from expr_sorts(e.snd)
    elif isinstance(e, EProj):
        yield e.sort
        yield from expr_sorts(e.arg)
    elif isinstance(e, EArith):
        yield from expr_sorts(e.left)
        yield from expr_sorts(e.right)


# ---------------------------------------------------------------------------
# Outcome prediction lattice
# ---------------------------------------------------------------------------


class Q(enum.Enum):
    """Which abnormal outcomes a subterm may have: none, nil only, fail
    only, or both.  Used to prune quasi-guards."""

    Z = "z"
    NIL = "nil"
    FAIL = "fail"
    BOTH = "both"


def q_join(a: Q, b: Q) -> Q:
    if a == b:
        return a
    if a == Q.Z:
        return b
    if b == Q.Z:
        return a
    return Q.BOTH


def q_joins(qs: Iterable[Q]) -> Q:
    out = Q.Z
    for q in qs:
        out = q_join(out, q)
    return out


# ---------------------------------------------------------------------------
# Quasi-guards
# ---------------------------------------------------------------------------


def guard_F(a: LogVar, b: LogVar, payload: Formula) -> Formula:
    """fail/nil of the producer `a` force the consumer `b` to the same
    outcome; otherwise the payload holds."""
    fa = FEq(EVar(a), EFail(a.sort))
    na = FEq(EVar(a), ENil(a.sort))
    return FAnd((
        FImplies(fa, FEq(EVar(b), EFail(b.sort))),
        FImplies(na, FEq(EVar(b), ENil(b.sort))),
        FOr((fa, na, payload)),
    ))


def prune_F(q: Q, a: LogVar, b: LogVar, payload: Formula) -> Formula:
    """guard_F specialized by the producer's outcome prediction: branches
    for unreachable abnormal outcomes are dropped."""
    if q == Q.Z:
        return payload
    if q == Q.NIL:
        na = FEq(EVar(a), ENil(a.sort))
        return FAnd((
            FImplies(na, FEq(EVar(b), ENil(b.sort))),
            FOr((na, payload)),
        ))
    if q == Q.FAIL:
        fa = FEq(EVar(a), EFail(a.sort))
        return FAnd((
            FImplies(fa, FEq(EVar(b), EFail(b.sort))),
            FOr((fa, payload)),
        ))
    return guard_F(a, b, payload)


# ---------------------------------------------------------------------------
# SMT-LIB emission
# ---------------------------------------------------------------------------


def _int_sexp(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


# Simple symbols admit letters, digits and ~ ! @ $ % ^ & * _ - + = < > . ? /
# and must not start with a digit.  Anything else (a prime, say) must be
# written as a quoted symbol |...|.
_SIMPLE_SYMBOL = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*\Z")


def smt_symbol(name: str) -> str:
    """`name` as an SMT-LIB symbol, quoted when not a simple symbol."""
    if _SIMPLE_SYMBOL.match(name):
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"cannot render {name!r} as an SMT-LIB symbol")
    return f"|{name}|"


def emit_expr(e: Expr) -> str:
    if isinstance(e, EVar):
        return smt_symbol(e.var.ident)
    if isinstance(e, EInt):
        return f"(Int_int {_int_sexp(e.value)})"
    if isinstance(e, EUnit):
        return "Unit_unit"
    if isinstance(e, EFail):
        return f"Fail_{sort_token(e.sort)}"
    if isinstance(e, ENil):
        return f"Nil_{sort_token(e.sort)}"
    if isinstance(e, EMeth):
        return f"m{e.mid}"
    if isinstance(e, EPair):
        tok = sort_token(e.sort)
        return f"(Pair_{tok} {emit_expr(e.fst)} {emit_expr(e.snd)})"
    if isinstance(e, EProj):
        tok = sort_token(e.sort)
        sel = f"fst_{tok}" if e.index == 1 else f"snd_{tok}"
        return f"({sel} {emit_expr(e.arg)})"
    if isinstance(e, EArith):
        l = f"(val_int {emit_expr(e.left)})"
        r = f"(val_int {emit_expr(e.right)})"
        op = e.op
        if op in _ARITH_OPS:
            return f"(Int_int ({op} {l} {r}))"
        if op == "=":
            return f"(Int_int (ite (= {l} {r}) 1 0))"
        if op == "<>":
            return f"(Int_int (ite (distinct {l} {r}) 1 0))"
        if op in _CMP_OPS:
            return f"(Int_int (ite ({op} {l} {r}) 1 0))"
        if op == "&&":
            return f"(Int_int (ite (and (distinct {l} 0) (distinct {r} 0)) 1 0))"
        if op == "||":
            return f"(Int_int (ite (or (distinct {l} 0) (distinct {r} 0)) 1 0))"
        raise ValueError(f"unknown operator {op}")
    raise TypeError(f"not an expression: {e!r}")


def _proper_sexp(es: str, sort: Type) -> str:
    if isinstance(sort, TInt):
        return f"((_ is Int_int) {es})"
    if isinstance(sort, TUnit):
        return f"((_ is Unit_unit) {es})"
    if isinstance(sort, TArrow):
        return f"((_ is Meth_{sort_token(sort)}) {es})"
    if isinstance(sort, TProd):
        tok = sort_token(sort)
        parts = [
            f"((_ is Pair_{tok}) {es})",
            _proper_sexp(f"(fst_{tok} {es})", sort.left),
            _proper_sexp(f"(snd_{tok} {es})", sort.right),
        ]
        return "(and " + " ".join(parts) + ")"
    raise TypeError(f"not a type: {sort!r}")


def emit_formula(f: Formula) -> str:
    if isinstance(f, FTrue):
        return "true"
    if isinstance(f, FEq):
        return f"(= {emit_expr(f.left)} {emit_expr(f.right)})"
    if isinstance(f, FNe):
        return f"(distinct {emit_expr(f.left)} {emit_expr(f.right)})"
    if isinstance(f, FAnd):
        if not f.parts:
            return "true"
        if len(f.parts) == 1:
            return emit_formula(f.parts[0])
        return "(and " + " ".join(emit_formula(p) for p in f.parts) + ")"
    if isinstance(f, FOr):
        if not f.parts:
            return "false"
        if len(f.parts) == 1:
            return emit_formula(f.parts[0])
        return "(or " + " ".join(emit_formula(p) for p in f.parts) + ")"
    if isinstance(f, FImplies):
        return f"(=> {emit_formula(f.antecedent)} {emit_formula(f.consequent)})"
    if isinstance(f, FCmp):
        l = f"(val_int {emit_expr(f.left)})"
        r = f"(val_int {emit_expr(f.right)})"
        return f"({f.op} {l} {r})"
    if isinstance(f, FIsVal):
        return _proper_sexp(emit_expr(f.expr), expr_sort(f.expr))
    if isinstance(f, FNot):
        return f"(not {emit_formula(f.sub)})"
    raise TypeError(f"not a formula: {f!r}")


def datatype_block(sorts: Iterable[Type]) -> str:
    """A single declare-datatypes command covering `sorts` and everything
    they mention."""
    all_sorts = close_sorts(sorts)
    if not all_sorts:
        return ""
    heads = []
    bodies = []
    for t in all_sorts:
        tok = sort_token(t)
        heads.append(f"({sort_name(t)} 0)")
        ctors: list[str] = []
        if isinstance(t, TInt):
            ctors.append("(Int_int (val_int Int))")
        elif isinstance(t, TUnit):
            ctors.append("(Unit_unit)")
        elif isinstance(t, TProd):
            ctors.append(
                f"(Pair_{tok} (fst_{tok} {sort_name(t.left)}) "
                f"(snd_{tok} {sort_name(t.right)}))"
            )
        elif isinstance(t, TArrow):
            ctors.append(f"(Meth_{tok} (mid_{tok} Int))")
        ctors.append(f"(Fail_{tok})")
        ctors.append(f"(Nil_{tok})")
        bodies.append("(" + " ".join(ctors) + ")")
    return ("(declare-datatypes (" + " ".join(heads) + ")\n  ("
            + "\n   ".join(bodies) + "))")


@dataclass(frozen=True)
class MethodConst:
    """A method identity: a defined constant m<mid> of the method's arrow
    sort, labeled with the method's name for readability."""

    mid: int
    label: str
    typ: Type


def method_defs(methods: Sequence[MethodConst]) -> list[str]:
    out = []
    for mc in sorted(methods, key=lambda m: m.mid):
        tok = sort_token(mc.typ)
        out.append(
            f"(define-fun m{mc.mid} () {sort_name(mc.typ)} "
            f"(Meth_{tok} {mc.mid})) ; {mc.label}"
        )
    return out


class ScriptBuilder:
    """Accumulates formulas and renders a deterministic SMT-LIB script.

    Formulas added with `add_clause` become top-level asserts; formulas
    added with `register` only contribute their variables and sorts (used
    for queries the caller pushes/pops itself)."""

    def __init__(self, methods: Sequence[MethodConst] = ()):
        self.methods = list(methods)
        self.clauses: list[Formula] = []
        self._vars: dict[LogVar, None] = {}
        self._sorts: dict[Type, None] = {}
        for mc in self.methods:
            self._sorts.setdefault(mc.typ)

    def register(self, f: Formula) -> None:
        for v in formula_vars(f):
            self._vars.setdefault(v)
            self._sorts.setdefault(v.sort)
        for e in formula_exprs(f):
            for s in expr_sorts(e):
                self._sorts.setdefault(s)

    def add_clause(self, f: Formula) -> None:
        self.register(f)
        self.clauses.append(f)

    def preamble(self) -> list[str]:
        dupes: dict[str, LogVar] = {}
        for v in self._vars:
            other = dupes.setdefault(v.ident, v)
            if other != v:
                raise ValueError(
                    f"logical variable {v.ident} used at two sorts: "
                    f"{type_str(other.sort)} and {type_str(v.sort)}")
        lines = ["(set-logic ALL)"]
        block = datatype_block(self._sorts)
        if block:
            lines.append(block)
        lines += method_defs(self.methods)
        for v in self._vars:
            lines.append(f"(declare-const {smt_symbol(v.ident)} {sort_name(v.sort)})")
        return lines

    def assert_lines(self) -> list[str]:
        return [f"(assert {emit_formula(f)})" for f in self.clauses]


def emit_script(clauses: Sequence[Formula], methods: Sequence[MethodConst] = (),
                queries: Sequence[Formula] = (), get_model: bool = False) -> str:
    """One complete script: clauses and queries asserted together, one
    (check-sat), optionally (get-model)."""
    sb = ScriptBuilder(methods)
    for c in clauses:
        sb.add_clause(c)
    for q in queries:
        sb.add_clause(q)
    lines = sb.preamble() + sb.assert_lines() + ["(check-sat)"]
    if get_model:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"
