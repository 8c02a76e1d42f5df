"""Abstract syntax for the checked language: types, names, terms, values.

The term language is higher-order call-by-value with general references.
Programs are kept in a canonical form where the function position of every
application is a name (a variable or a method name); the parser's
elaboration step takes care of getting surface programs into this shape.

Three disjoint name kinds exist: variables (binders), method names (keys of
the method repository) and reference names (keys of the global store).
Terms are expected to satisfy the Barendregt convention -- every binder
ident is distinct from every other binder and free ident -- which
`barendregt` establishes and `validate_config` checks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional


class HobmcError(Exception):
    """Base class for user-facing errors."""


class TypeCheckError(HobmcError):
    pass


class InvalidConfig(HobmcError):
    pass


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


class Type:
    __slots__ = ()


@dataclass(frozen=True)
class TUnit(Type):
    def __repr__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class TInt(Type):
    def __repr__(self) -> str:
        return "int"


@dataclass(frozen=True)
class TProd(Type):
    left: Type
    right: Type

    def __repr__(self) -> str:
        return f"({self.left!r} * {self.right!r})"


@dataclass(frozen=True)
class TArrow(Type):
    arg: Type
    res: Type

    def __repr__(self) -> str:
        return f"({self.arg!r} -> {self.res!r})"


UNIT = TUnit()
INT = TInt()


def is_ground(t: Type) -> bool:
    """True when `t` contains no arrow (its values are solver-representable
    without naming a method)."""
    if isinstance(t, (TUnit, TInt)):
        return True
    if isinstance(t, TProd):
        return is_ground(t.left) and is_ground(t.right)
    return False


def type_str(t: Type) -> str:
    """Concrete syntax for a type, minimally parenthesized."""

    def go(t: Type, atom: bool) -> str:
        if isinstance(t, TUnit):
            return "unit"
        if isinstance(t, TInt):
            return "int"
        if isinstance(t, TProd):
            s = f"{go(t.left, True)} * {go(t.right, True)}"
            return f"({s})" if atom else s
        if isinstance(t, TArrow):
            s = f"{go(t.arg, True)} -> {go(t.res, False)}"
            return f"({s})" if atom else s
        raise TypeError(f"not a type: {t!r}")

    return go(t, False)


# ---------------------------------------------------------------------------
# Names
# ---------------------------------------------------------------------------

VAR = "var"
METH = "meth"
REF = "ref"

_RESERVED_IDENT = re.compile(r"(^(ret|m)[0-9]+$)|(_[0-9]+$)|(^_)")

KEYWORDS = frozenset(
    {
        "let", "letrec", "in", "if", "then", "else", "fun", "assert",
        "fail", "nil", "fst", "snd", "div", "mod", "unit", "int",
        "Refs", "Methods", "Main",
    }
)

# Words that SMT-LIB reserves or binds in the core/Int theories.  Quoting
# cannot make these usable as constant names (|true| and true are the same
# symbol), so they cannot be program identifiers either.
SMT_RESERVED = frozenset(
    {
        "as", "exists", "forall", "match", "par",
        "true", "false", "and", "or", "not", "xor", "ite", "distinct",
        "abs", "select", "store",
    }
)


def ident_ok(ident: str) -> bool:
    """True when `ident` is usable as a source-program name.

    The shapes `ret<digits>`, `m<digits>`, trailing `_<digits>` and leading
    underscores are reserved for machine-generated names (formula variables,
    store-version variables, method constants), so emitted formulas can use
    them without colliding with anything the user wrote.  Words with fixed
    meanings in the solver input format are rejected for the same reason.
    """
    if not ident or ident in KEYWORDS or ident in SMT_RESERVED:
        return False
    if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_']*", ident):
        return False
    return not _RESERVED_IDENT.search(ident)


@dataclass(frozen=True)
class Name:
    kind: str  # VAR | METH | REF
    ident: str
    typ: Type

    def __repr__(self) -> str:
        return f"{self.kind}:{self.ident}"


def var(ident: str, typ: Type) -> Name:
    return Name(VAR, ident, typ)


def meth(ident: str, typ: Type) -> Name:
    if not isinstance(typ, TArrow):
        raise TypeCheckError(f"method {ident} must have an arrow type, got {type_str(typ)}")
    return Name(METH, ident, typ)


def ref(ident: str, typ: Type) -> Name:
    return Name(REF, ident, typ)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: Name


@dataclass(frozen=True)
class Meth(Term):
    name: Name


@dataclass(frozen=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True)
class UnitLit(Term):
    pass


@dataclass(frozen=True)
class Fail(Term):
    """Assertion failure of the given type (the type fixes its sort)."""

    typ: Type


@dataclass(frozen=True)
class Nil(Term):
    """Bound exhaustion placeholder.  Internal: no surface syntax produces
    it; the translation introduces it when the call budget hits zero."""

    typ: Type


@dataclass(frozen=True)
class Pair(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Proj(Term):
    """`fst:(T) M` / `snd:(T) M`; index is 1 or 2, typ is the component type."""

    index: int
    typ: Type
    arg: Term


@dataclass(frozen=True)
class Lam(Term):
    param: Name
    body: Term
    typ: TArrow  # TArrow(param.typ, type of body); fixed at construction


@dataclass(frozen=True)
class AppVar(Term):
    head: Name  # kind VAR, arrow-typed
    arg: Term


@dataclass(frozen=True)
class AppMeth(Term):
    head: Name  # kind METH
    arg: Term


BINOPS = frozenset({"+", "-", "*", "div", "mod", "=", "<>", "<", "<=", ">", ">=", "&&", "||"})


@dataclass(frozen=True)
class BinOp(Term):
    op: str
    left: Term
    right: Term


@dataclass(frozen=True)
class If(Term):
    """`if cond then then_branch else else_branch`; the else branch runs
    when the condition is 0, the then branch otherwise."""

    cond: Term
    then_branch: Term
    else_branch: Term


@dataclass(frozen=True)
class Let(Term):
    name: Name
    bound: Term
    body: Term


@dataclass(frozen=True)
class Letrec(Term):
    name: Name  # kind VAR, same type as fun.typ
    fun: Lam
    body: Term


@dataclass(frozen=True)
class Deref(Term):
    name: Name  # kind REF


@dataclass(frozen=True)
class Assign(Term):
    name: Name  # kind REF
    value: Term


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


class Value:
    __slots__ = ()


@dataclass(frozen=True)
class VInt(Value):
    value: int


@dataclass(frozen=True)
class VUnit(Value):
    pass


@dataclass(frozen=True)
class VMeth(Value):
    name: Name


@dataclass(frozen=True)
class VPair(Value):
    fst: Value
    snd: Value


def value_type(v: Value) -> Type:
    if isinstance(v, VInt):
        return INT
    if isinstance(v, VUnit):
        return UNIT
    if isinstance(v, VMeth):
        return v.name.typ
    if isinstance(v, VPair):
        return TProd(value_type(v.fst), value_type(v.snd))
    raise TypeError(f"not a value: {v!r}")


def value_to_term(v: Value) -> Term:
    if isinstance(v, VInt):
        return IntLit(v.value)
    if isinstance(v, VUnit):
        return UnitLit()
    if isinstance(v, VMeth):
        return Meth(v.name)
    if isinstance(v, VPair):
        return Pair(value_to_term(v.fst), value_to_term(v.snd))
    raise TypeError(f"not a value: {v!r}")


def term_to_value(t: Term) -> Optional[Value]:
    """Inverse of value_to_term where possible, else None."""
    if isinstance(t, IntLit):
        return VInt(t.value)
    if isinstance(t, UnitLit):
        return VUnit()
    if isinstance(t, Meth):
        return VMeth(t.name)
    if isinstance(t, Pair):
        a = term_to_value(t.fst)
        b = term_to_value(t.snd)
        if a is not None and b is not None:
            return VPair(a, b)
    return None


# ---------------------------------------------------------------------------
# Typechecking
# ---------------------------------------------------------------------------


def synth_type(term: Term, env: Optional[Mapping[str, Name]] = None) -> Type:
    """Synthesize the type of `term`, checking every internal constraint.

    `env` maps in-scope variable idents to their binding Name; free
    variables must appear in it.  Method and reference names carry their
    own types and are checked for kind only (their presence in a
    repository/store is a configuration concern, see validate_config).
    """
    env = dict(env) if env else {}

    def go(t: Term, env: dict[str, Name]) -> Type:
        if isinstance(t, Var):
            bound = env.get(t.name.ident)
            if bound is None:
                raise TypeCheckError(f"unbound variable {t.name.ident}")
            if bound != t.name:
                raise TypeCheckError(
                    f"variable occurrence {t.name.ident}:{type_str(t.name.typ)} "
                    f"does not match its binder ({type_str(bound.typ)})"
                )
            return t.name.typ
        if isinstance(t, Meth):
            if t.name.kind != METH:
                raise TypeCheckError(f"{t.name.ident} used as a method name")
            if not isinstance(t.name.typ, TArrow):
                raise TypeCheckError(f"method {t.name.ident} has non-arrow type")
            return t.name.typ
        if isinstance(t, IntLit):
            return INT
        if isinstance(t, UnitLit):
            return UNIT
        if isinstance(t, (Fail, Nil)):
            return t.typ
        if isinstance(t, Pair):
            return TProd(go(t.fst, env), go(t.snd, env))
        if isinstance(t, Proj):
            pt = go(t.arg, env)
            if not isinstance(pt, TProd):
                raise TypeCheckError(f"projection from non-pair type {type_str(pt)}")
            comp = pt.left if t.index == 1 else pt.right
            if t.index not in (1, 2):
                raise TypeCheckError(f"projection index must be 1 or 2, got {t.index}")
            if comp != t.typ:
                raise TypeCheckError(
                    f"projection annotated {type_str(t.typ)} but component has "
                    f"type {type_str(comp)}"
                )
            return comp
        if isinstance(t, Lam):
            if t.param.kind != VAR:
                raise TypeCheckError("lambda parameter must be a variable")
            inner = dict(env)
            inner[t.param.ident] = t.param
            body_t = go(t.body, inner)
            want = TArrow(t.param.typ, body_t)
            if t.typ != want:
                raise TypeCheckError(
                    f"lambda annotated {type_str(t.typ)} but has type {type_str(want)}"
                )
            return want
        if isinstance(t, (AppVar, AppMeth)):
            if isinstance(t, AppVar):
                bound = env.get(t.head.ident)
                if bound is None:
                    raise TypeCheckError(f"unbound variable {t.head.ident} in application")
                if bound != t.head:
                    raise TypeCheckError(f"application head {t.head.ident} does not match binder")
            else:
                if t.head.kind != METH:
                    raise TypeCheckError(f"{t.head.ident} used as a method name")
            ht = t.head.typ
            if not isinstance(ht, TArrow):
                raise TypeCheckError(
                    f"application head {t.head.ident} has non-arrow type {type_str(ht)}"
                )
            at = go(t.arg, env)
            if at != ht.arg:
                raise TypeCheckError(
                    f"argument of {t.head.ident} has type {type_str(at)}, "
                    f"expected {type_str(ht.arg)}"
                )
            return ht.res
        if isinstance(t, BinOp):
            if t.op not in BINOPS:
                raise TypeCheckError(f"unknown operator {t.op}")
            for side in (t.left, t.right):
                st = go(side, env)
                if st != INT:
                    raise TypeCheckError(
                        f"operator {t.op} needs int operands, got {type_str(st)}"
                    )
            return INT
        if isinstance(t, If):
            ct = go(t.cond, env)
            if ct != INT:
                raise TypeCheckError(f"condition has type {type_str(ct)}, expected int")
            tt = go(t.then_branch, env)
            et = go(t.else_branch, env)
            if tt != et:
                raise TypeCheckError(
                    f"branches differ: {type_str(tt)} vs {type_str(et)}"
                )
            return tt
        if isinstance(t, Let):
            if t.name.kind != VAR:
                raise TypeCheckError("let binder must be a variable")
            bt = go(t.bound, env)
            if bt != t.name.typ:
                raise TypeCheckError(
                    f"let binds {t.name.ident}:{type_str(t.name.typ)} to a "
                    f"term of type {type_str(bt)}"
                )
            inner = dict(env)
            inner[t.name.ident] = t.name
            return go(t.body, inner)
        if isinstance(t, Letrec):
            if t.name.kind != VAR:
                raise TypeCheckError("letrec binder must be a variable")
            if not isinstance(t.fun, Lam):
                raise TypeCheckError("letrec must bind a lambda")
            if t.name.typ != t.fun.typ:
                raise TypeCheckError(
                    f"letrec binds {t.name.ident}:{type_str(t.name.typ)} to a "
                    f"lambda of type {type_str(t.fun.typ)}"
                )
            inner = dict(env)
            inner[t.name.ident] = t.name
            ft = go(t.fun, inner)
            if ft != t.name.typ:
                raise TypeCheckError("letrec lambda type mismatch")
            return go(t.body, inner)
        if isinstance(t, Deref):
            if t.name.kind != REF:
                raise TypeCheckError(f"{t.name.ident} used as a reference")
            return t.name.typ
        if isinstance(t, Assign):
            if t.name.kind != REF:
                raise TypeCheckError(f"{t.name.ident} used as a reference")
            vt = go(t.value, env)
            if vt != t.name.typ:
                raise TypeCheckError(
                    f"assigning {type_str(vt)} to {t.name.ident}:{type_str(t.name.typ)}"
                )
            return UNIT
        raise TypeCheckError(f"not a term: {t!r}")

    return go(term, env)


# ---------------------------------------------------------------------------
# Free names, substitution
# ---------------------------------------------------------------------------


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order traversal of all subterms (including t itself)."""
    stack = [t]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Pair):
            stack += [cur.snd, cur.fst]
        elif isinstance(cur, Proj):
            stack.append(cur.arg)
        elif isinstance(cur, Lam):
            stack.append(cur.body)
        elif isinstance(cur, (AppVar, AppMeth)):
            stack.append(cur.arg)
        elif isinstance(cur, BinOp):
            stack += [cur.right, cur.left]
        elif isinstance(cur, If):
            stack += [cur.else_branch, cur.then_branch, cur.cond]
        elif isinstance(cur, Let):
            stack += [cur.body, cur.bound]
        elif isinstance(cur, Letrec):
            stack += [cur.body, cur.fun]
        elif isinstance(cur, Assign):
            stack.append(cur.value)


def free_vars(t: Term) -> set[Name]:
    out: set[Name] = set()

    def go(t: Term, bound: frozenset[str]) -> None:
        if isinstance(t, Var):
            if t.name.ident not in bound:
                out.add(t.name)
        elif isinstance(t, Pair):
            go(t.fst, bound)
            go(t.snd, bound)
        elif isinstance(t, Proj):
            go(t.arg, bound)
        elif isinstance(t, Lam):
            go(t.body, bound | {t.param.ident})
        elif isinstance(t, (AppVar, AppMeth)):
            if isinstance(t, AppVar) and t.head.ident not in bound:
                out.add(t.head)
            go(t.arg, bound)
        elif isinstance(t, BinOp):
            go(t.left, bound)
            go(t.right, bound)
        elif isinstance(t, If):
            go(t.cond, bound)
            go(t.then_branch, bound)
            go(t.else_branch, bound)
        elif isinstance(t, Let):
            go(t.bound, bound)
            go(t.body, bound | {t.name.ident})
        elif isinstance(t, Letrec):
            inner = bound | {t.name.ident}
            go(t.fun, inner)
            go(t.body, inner)
        elif isinstance(t, Assign):
            go(t.value, bound)

    go(t, frozenset())
    return out


def free_meths(t: Term) -> set[Name]:
    out: set[Name] = set()
    for s in subterms(t):
        if isinstance(s, Meth):
            out.add(s.name)
        elif isinstance(s, AppMeth):
            out.add(s.head)
    return out


def free_refs(t: Term) -> set[Name]:
    out: set[Name] = set()
    for s in subterms(t):
        if isinstance(s, (Deref, Assign)):
            out.add(s.name)
    return out


def binder_idents(t: Term) -> list[str]:
    """All binder idents in t, in pre-order (with duplicates, if any)."""
    out: list[str] = []
    for s in subterms(t):
        if isinstance(s, Lam):
            out.append(s.param.ident)
        elif isinstance(s, (Let, Letrec)):
            out.append(s.name.ident)
    return out


def substitute(t: Term, target: Name, replacement: Term) -> Term:
    """Capture-free substitution of `replacement` for variable `target`.

    Under the Barendregt convention no binder in `t` can capture names in
    `replacement`; shadowing binders still stop the walk defensively.  When
    `target` occurs in application-head position, `replacement` must itself
    be a Var or Meth term (call-by-value guarantees arrow-typed values are
    method names, and the translation only substitutes names for names).
    """
    if target.kind != VAR:
        raise ValueError("only variables can be substituted")

    def go(t: Term) -> Term:
        if isinstance(t, Var):
            return replacement if t.name == target else t
        if isinstance(t, (Meth, IntLit, UnitLit, Fail, Nil, Deref)):
            return t
        if isinstance(t, Pair):
            return Pair(go(t.fst), go(t.snd))
        if isinstance(t, Proj):
            return Proj(t.index, t.typ, go(t.arg))
        if isinstance(t, Lam):
            if t.param.ident == target.ident:
                return t
            return Lam(t.param, go(t.body), t.typ)
        if isinstance(t, AppVar):
            arg = go(t.arg)
            if t.head == target:
                if isinstance(replacement, Var):
                    return AppVar(replacement.name, arg)
                if isinstance(replacement, Meth):
                    return AppMeth(replacement.name, arg)
                raise ValueError(
                    "application head can only be replaced by a variable or method name"
                )
            return AppVar(t.head, arg)
        if isinstance(t, AppMeth):
            return AppMeth(t.head, go(t.arg))
        if isinstance(t, BinOp):
            return BinOp(t.op, go(t.left), go(t.right))
        if isinstance(t, If):
            return If(go(t.cond), go(t.then_branch), go(t.else_branch))
        if isinstance(t, Let):
            bound = go(t.bound)
            if t.name.ident == target.ident:
                return Let(t.name, bound, t.body)
            return Let(t.name, bound, go(t.body))
        if isinstance(t, Letrec):
            if t.name.ident == target.ident:
                return t
            fun = go(t.fun)
            assert isinstance(fun, Lam)
            return Letrec(t.name, fun, go(t.body))
        if isinstance(t, Assign):
            return Assign(t.name, go(t.value))
        raise TypeError(f"not a term: {t!r}")

    return go(t)


def subst_value(t: Term, target: Name, v: Value) -> Term:
    return substitute(t, target, value_to_term(v))


# ---------------------------------------------------------------------------
# Barendregt freshening and alpha equivalence
# ---------------------------------------------------------------------------


def fresh_ident(base: str, used: set[str]) -> str:
    """A parseable ident derived from `base` not in `used` and not reserved."""
    stem = base
    if not stem or not stem[0].isalpha():
        stem = "x" + stem
    stem = stem.rstrip("0123456789'")
    # bases like "ret"/"m" would generate only reserved names once digits
    # are appended; pad them first.
    if re.fullmatch(r"ret|m", stem):
        stem += "x"
    if not stem or not ident_ok(stem + "1"):
        stem = "x"
    n = 1
    while True:
        cand = f"{stem}{n}"
        if cand not in used and ident_ok(cand):
            return cand
        n += 1


def barendregt(t: Term, taken: Optional[set[str]] = None) -> Term:
    """Rename binders so every binder ident is unique and distinct from all
    free/method/reference idents in `t` and from `taken`.  Renaming is
    deterministic (pre-order, numeric suffixes) and only touches binders
    that actually collide."""
    used: set[str] = set(taken or ())
    used |= {n.ident for n in free_vars(t)}
    used |= {n.ident for n in free_meths(t)}
    used |= {n.ident for n in free_refs(t)}

    def bind(name: Name) -> Name:
        if name.ident in used:
            fresh = fresh_ident(name.ident, used)
            used.add(fresh)
            return Name(VAR, fresh, name.typ)
        used.add(name.ident)
        return name

    def go(t: Term, ren: dict[Name, Name]) -> Term:
        if isinstance(t, Var):
            return Var(ren.get(t.name, t.name))
        if isinstance(t, (Meth, IntLit, UnitLit, Fail, Nil, Deref)):
            return t
        if isinstance(t, Pair):
            return Pair(go(t.fst, ren), go(t.snd, ren))
        if isinstance(t, Proj):
            return Proj(t.index, t.typ, go(t.arg, ren))
        if isinstance(t, Lam):
            p = bind(t.param)
            inner = dict(ren)
            inner[t.param] = p
            return Lam(p, go(t.body, inner), t.typ)
        if isinstance(t, AppVar):
            return AppVar(ren.get(t.head, t.head), go(t.arg, ren))
        if isinstance(t, AppMeth):
            return AppMeth(t.head, go(t.arg, ren))
        if isinstance(t, BinOp):
            return BinOp(t.op, go(t.left, ren), go(t.right, ren))
        if isinstance(t, If):
            return If(go(t.cond, ren), go(t.then_branch, ren), go(t.else_branch, ren))
        if isinstance(t, Let):
            bound = go(t.bound, ren)
            x = bind(t.name)
            inner = dict(ren)
            inner[t.name] = x
            return Let(x, bound, go(t.body, inner))
        if isinstance(t, Letrec):
            f = bind(t.name)
            inner = dict(ren)
            inner[t.name] = f
            fun = go(t.fun, inner)
            assert isinstance(fun, Lam)
            return Letrec(f, fun, go(t.body, inner))
        if isinstance(t, Assign):
            return Assign(t.name, go(t.value, ren))
        raise TypeError(f"not a term: {t!r}")

    return go(t, {})


def alpha_equal(a: Term, b: Term) -> bool:
    """Structural equality up to renaming of bound variables.  Method and
    reference names must match exactly."""

    def names_eq(x: Name, y: Name, env: dict[str, str]) -> bool:
        if x.kind != y.kind or x.typ != y.typ:
            return False
        if x.kind == VAR and x.ident in env:
            return env[x.ident] == y.ident
        return x.ident == y.ident

    def go(a: Term, b: Term, env: dict[str, str]) -> bool:
        if type(a) is not type(b):
            return False
        if isinstance(a, Var):
            return names_eq(a.name, b.name, env)
        if isinstance(a, Meth):
            return a.name == b.name
        if isinstance(a, IntLit):
            return a.value == b.value
        if isinstance(a, UnitLit):
            return True
        if isinstance(a, (Fail, Nil)):
            return a.typ == b.typ
        if isinstance(a, Pair):
            return go(a.fst, b.fst, env) and go(a.snd, b.snd, env)
        if isinstance(a, Proj):
            return a.index == b.index and a.typ == b.typ and go(a.arg, b.arg, env)
        if isinstance(a, Lam):
            if a.param.typ != b.param.typ or a.typ != b.typ:
                return False
            inner = dict(env)
            inner[a.param.ident] = b.param.ident
            return go(a.body, b.body, inner)
        if isinstance(a, AppVar):
            return names_eq(a.head, b.head, env) and go(a.arg, b.arg, env)
        if isinstance(a, AppMeth):
            return a.head == b.head and go(a.arg, b.arg, env)
        if isinstance(a, Deref):
            return a.name == b.name
        if isinstance(a, BinOp):
            return a.op == b.op and go(a.left, b.left, env) and go(a.right, b.right, env)
        if isinstance(a, If):
            return (
                go(a.cond, b.cond, env)
                and go(a.then_branch, b.then_branch, env)
                and go(a.else_branch, b.else_branch, env)
            )
        if isinstance(a, Let):
            if a.name.typ != b.name.typ or not go(a.bound, b.bound, env):
                return False
            inner = dict(env)
            inner[a.name.ident] = b.name.ident
            return go(a.body, b.body, inner)
        if isinstance(a, Letrec):
            if a.name.typ != b.name.typ:
                return False
            inner = dict(env)
            inner[a.name.ident] = b.name.ident
            return go(a.fun, b.fun, inner) and go(a.body, b.body, inner)
        if isinstance(a, Assign):
            return a.name == b.name and go(a.value, b.value, env)
        raise TypeError(f"not a term: {a!r}")

    return go(a, b, {})


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------

Repo = dict  # dict[Name, Lam], insertion-ordered
Store = dict  # dict[Name, Value]


@dataclass
class Config:
    """A runnable/checkable snapshot: a term plus the method repository,
    the global store, and the remaining nested-call budget."""

    term: Term
    repo: dict[Name, Lam]
    store: dict[Name, Value]
    bound: int


def value_names(v: Value) -> tuple[set[Name], set[Name]]:
    """(method names, reference names) occurring in a value.  Values never
    contain references, so the second set is always empty; it is returned
    for symmetry with terms."""
    ms: set[Name] = set()

    def go(v: Value) -> None:
        if isinstance(v, VMeth):
            ms.add(v.name)
        elif isinstance(v, VPair):
            go(v.fst)
            go(v.snd)

    go(v)
    return ms, set()


def validate_config(cfg: Config, inputs: tuple[Name, ...] = ()) -> None:
    """Raise InvalidConfig unless `cfg` is well-formed:

    * name kinds are disjoint by ident across the whole configuration;
    * binder idents are unique (Barendregt) and distinct from free idents;
    * the term's free variables all come from `inputs`;
    * every method name used anywhere is in the repository, every reference
      name is in the store, and types line up;
    * the bound is a non-negative integer.
    """
    errs: list[str] = []

    if not isinstance(cfg.bound, int) or cfg.bound < 0:
        errs.append(f"bound must be a non-negative int, got {cfg.bound!r}")

    terms: list[Term] = [cfg.term] + [lam for lam in cfg.repo.values()]

    by_kind: dict[str, set[str]] = {VAR: set(), METH: set(), REF: set()}
    for m in cfg.repo:
        by_kind[METH].add(m.ident)
    for r in cfg.store:
        by_kind[REF].add(r.ident)
    for t in terms:
        for s in subterms(t):
            if isinstance(s, Var):
                by_kind[VAR].add(s.name.ident)
            elif isinstance(s, Lam):
                by_kind[VAR].add(s.param.ident)
            elif isinstance(s, (Let, Letrec)):
                by_kind[VAR].add(s.name.ident)
            elif isinstance(s, AppVar):
                by_kind[VAR].add(s.head.ident)
            elif isinstance(s, (Meth, AppMeth)):
                ident = s.name.ident if isinstance(s, Meth) else s.head.ident
                by_kind[METH].add(ident)
            elif isinstance(s, (Deref, Assign)):
                by_kind[REF].add(s.name.ident)
    for a, b in ((VAR, METH), (VAR, REF), (METH, REF)):
        both = by_kind[a] & by_kind[b]
        if both:
            errs.append(f"idents used as both {a} and {b}: {sorted(both)}")

    seen_binders: set[str] = set()
    free_idents = {n.ident for t in terms for n in free_vars(t)}
    for t in terms:
        for ident in binder_idents(t):
            if ident in seen_binders:
                errs.append(f"binder ident {ident} occurs twice")
            seen_binders.add(ident)
    clash = seen_binders & free_idents
    if clash:
        errs.append(f"binder idents also occur free: {sorted(clash)}")

    fv = set()
    for t in terms:
        fv |= free_vars(t)
    extra = {n.ident for n in fv - set(inputs)}
    if extra:
        errs.append(f"unexpected free variables: {sorted(extra)}")

    known_meths = set(cfg.repo)
    known_refs = set(cfg.store)
    used_meths = set()
    used_refs = set()
    for t in terms:
        used_meths |= free_meths(t)
        used_refs |= free_refs(t)
    for v in cfg.store.values():
        ms, _ = value_names(v)
        used_meths |= ms
    dangling_m = used_meths - known_meths
    if dangling_m:
        errs.append(f"methods not in repository: {sorted(n.ident for n in dangling_m)}")
    dangling_r = used_refs - known_refs
    if dangling_r:
        errs.append(f"references not in store: {sorted(n.ident for n in dangling_r)}")

    for m, lam in cfg.repo.items():
        if m.kind != METH:
            errs.append(f"repository key {m.ident} is not a method name")
        if not isinstance(lam, Lam):
            errs.append(f"repository entry {m.ident} is not a lambda")
        elif m.typ != lam.typ:
            errs.append(
                f"method {m.ident}:{type_str(m.typ)} bound to lambda of type "
                f"{type_str(lam.typ)}"
            )
    for r, v in cfg.store.items():
        if r.kind != REF:
            errs.append(f"store key {r.ident} is not a reference name")
        else:
            vt = value_type(v)
            if vt != r.typ:
                errs.append(
                    f"reference {r.ident}:{type_str(r.typ)} holds a value of "
                    f"type {type_str(vt)}"
                )

    env = {n.ident: n for n in inputs}
    try:
        synth_type(cfg.term, env)
        for lam in cfg.repo.values():
            if isinstance(lam, Lam):
                synth_type(lam, {})
    except TypeCheckError as e:
        errs.append(str(e))

    if errs:
        raise InvalidConfig("; ".join(errs))


# ---------------------------------------------------------------------------
# Pretty printing (re-parseable concrete syntax)
# ---------------------------------------------------------------------------

_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_CMP = 3
_LEVEL_ADD = 4
_LEVEL_MUL = 5
_LEVEL_APP = 6
_LEVEL_ATOM = 7

_OP_LEVEL = {
    "||": _LEVEL_OR,
    "&&": _LEVEL_AND,
    "=": _LEVEL_CMP, "<>": _LEVEL_CMP, "<": _LEVEL_CMP,
    "<=": _LEVEL_CMP, ">": _LEVEL_CMP, ">=": _LEVEL_CMP,
    "+": _LEVEL_ADD, "-": _LEVEL_ADD,
    "*": _LEVEL_MUL, "div": _LEVEL_MUL, "mod": _LEVEL_MUL,
}


def pretty(t: Term) -> str:
    """Concrete syntax for `t`.  `parse_term(pretty(t))` is alpha-equal to
    `t` for any well-formed term free of internal-only constructs (Nil)."""

    def go(t: Term, level: int) -> str:
        if isinstance(t, Var):
            return t.name.ident
        if isinstance(t, Meth):
            return t.name.ident
        if isinstance(t, IntLit):
            s = str(t.value)
            return f"({s})" if t.value < 0 and level >= _LEVEL_APP else s
        if isinstance(t, UnitLit):
            return "()"
        if isinstance(t, Fail):
            return f"fail:({type_str(t.typ)})"
        if isinstance(t, Nil):
            return f"nil:({type_str(t.typ)})"
        if isinstance(t, Pair):
            return f"({go(t.fst, 0)}, {go(t.snd, 0)})"
        if isinstance(t, Deref):
            return f"!{t.name.ident}"
        if isinstance(t, Proj):
            kw = "fst" if t.index == 1 else "snd"
            s = f"{kw}:({type_str(t.typ)}) {go(t.arg, _LEVEL_ATOM)}"
            return f"({s})" if level > _LEVEL_APP else s
        if isinstance(t, (AppVar, AppMeth)):
            s = f"{t.head.ident} {go(t.arg, _LEVEL_ATOM)}"
            return f"({s})" if level > _LEVEL_APP else s
        if isinstance(t, BinOp):
            lv = _OP_LEVEL[t.op]
            left = go(t.left, lv)
            right = go(t.right, lv + 1)
            s = f"{left} {t.op} {right}"
            return f"({s})" if level > lv else s
        if isinstance(t, If):
            s = (
                f"if {go(t.cond, 1)} then {go(t.then_branch, 1)} "
                f"else {go(t.else_branch, 0)}"
            )
            return f"({s})" if level > 0 else s
        if isinstance(t, Lam):
            s = f"fun ({t.param.ident}:{type_str(t.param.typ)}) -> {go(t.body, 0)}"
            return f"({s})" if level > 0 else s
        if isinstance(t, Let):
            s = f"let {t.name.ident} = {go(t.bound, 1)} in {go(t.body, 0)}"
            return f"({s})" if level > 0 else s
        if isinstance(t, Letrec):
            lam = t.fun
            assert isinstance(t.name.typ, TArrow)
            s = (
                f"letrec {t.name.ident} ({lam.param.ident}:{type_str(lam.param.typ)})"
                f" : {type_str(t.name.typ.res)} = {go(lam.body, 1)} in {go(t.body, 0)}"
            )
            return f"({s})" if level > 0 else s
        if isinstance(t, Assign):
            s = f"{t.name.ident} := {go(t.value, 1)}"
            return f"({s})" if level > 0 else s
        raise TypeError(f"not a term: {t!r}")

    return go(t, 0)


def pretty_value(v: Value) -> str:
    if isinstance(v, VInt):
        return str(v.value)
    if isinstance(v, VUnit):
        return "()"
    if isinstance(v, VMeth):
        return v.name.ident
    if isinstance(v, VPair):
        return f"({pretty_value(v.fst)}, {pretty_value(v.snd)})"
    raise TypeError(f"not a value: {v!r}")
