"""Reference interpreter: bounded big-step evaluation.

Evaluation is call-by-value, left to right, with a budget counting nested
method calls.  Three outcomes exist: a value, an assertion failure, or
exhaustion of the call budget ("nil").  Failures and exhaustion abort the
whole run immediately, keeping the repository and store as they were at the
abort point.

Only applications consume budget: calling a method with budget 0 yields the
nil outcome; the callee body runs with budget k-1.  All other constructs
(including letrec) keep the current budget.

Lambdas evaluate by allocating a *fresh method name* bound to the lambda in
the repository; arrow-typed values are therefore always method names.  The
interpreter draws fresh names from a seeded NameGen so runs are
reproducible, and `nominally_equiv` decides whether two runs differ only in
which fresh names they picked.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .syntax import (
    Config, HobmcError, Lam, Name, Term, Type, Value,
    Var, Meth, IntLit, UnitLit, Fail, Nil, Pair, Proj, AppVar, AppMeth,
    BinOp, If, Let, Letrec, Deref, Assign,
    VInt, VUnit, VMeth, VPair, METH,
    alpha_equal, subst_value, substitute, value_type,
)


class InterpError(HobmcError):
    pass


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValueO:
    value: Value


@dataclass(frozen=True)
class FailO:
    pass


@dataclass(frozen=True)
class NilO:
    pass


Outcome = Union[ValueO, FailO, NilO]


def format_outcome(out: Outcome) -> str:
    from .syntax import pretty_value

    if isinstance(out, ValueO):
        return pretty_value(out.value)
    return "fail" if isinstance(out, FailO) else "nil"


# ---------------------------------------------------------------------------
# Fresh method names
# ---------------------------------------------------------------------------


class NameGen:
    """Deterministic fresh method names.  The `~` separator cannot appear in
    source identifiers, so generated names never collide with program
    names."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._n = 0

    def fresh_meth(self, typ: Type) -> Name:
        ident = f"mth~{self.seed}~{self._n}"
        self._n += 1
        return Name(METH, ident, typ)


# ---------------------------------------------------------------------------
# Euclidean division (remainder always non-negative, matching the solver's
# integer semantics)
# ---------------------------------------------------------------------------


def euclid_div(a: int, b: int) -> int:
    if b == 0:
        raise InterpError("division by zero")
    return a // b if b > 0 else -(a // -b)


def euclid_mod(a: int, b: int) -> int:
    if b == 0:
        raise InterpError("modulo by zero")
    return a - b * euclid_div(a, b)


def _arith(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "div":
        return euclid_div(a, b)
    if op == "mod":
        return euclid_mod(a, b)
    if op == "=":
        return int(a == b)
    if op == "<>":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "&&":
        return int(a != 0 and b != 0)
    if op == "||":
        return int(a != 0 or b != 0)
    raise InterpError(f"unknown operator {op}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(cfg: Config, gen: Optional[NameGen] = None
             ) -> tuple[Outcome, dict[Name, Lam], dict[Name, Value]]:
    """Run `cfg.term` with `cfg.bound` as the nested-call budget.  Returns
    the outcome together with the final repository and store (which, for
    fail/nil, reflect the state at the abort point)."""
    repo: dict[Name, Lam] = dict(cfg.repo)
    store: dict[Name, Value] = dict(cfg.store)
    gen = gen if gen is not None else NameGen()

    if cfg.bound < 0:
        raise InterpError("negative call budget")

    limit = sys.getrecursionlimit()
    if limit < 100_000:
        sys.setrecursionlimit(100_000)

    def ev(t: Term, k: int) -> Outcome:
        if isinstance(t, Var):
            raise InterpError(f"open term: free variable {t.name.ident}")
        if isinstance(t, Meth):
            if t.name not in repo:
                raise InterpError(f"unknown method {t.name.ident}")
            return ValueO(VMeth(t.name))
        if isinstance(t, IntLit):
            return ValueO(VInt(t.value))
        if isinstance(t, UnitLit):
            return ValueO(VUnit())
        if isinstance(t, Fail):
            return FailO()
        if isinstance(t, Nil):
            return NilO()
        if isinstance(t, Lam):
            m = gen.fresh_meth(t.typ)
            repo[m] = t
            return ValueO(VMeth(m))
        if isinstance(t, Pair):
            a = ev(t.fst, k)
            if not isinstance(a, ValueO):
                return a
            b = ev(t.snd, k)
            if not isinstance(b, ValueO):
                return b
            return ValueO(VPair(a.value, b.value))
        if isinstance(t, Proj):
            a = ev(t.arg, k)
            if not isinstance(a, ValueO):
                return a
            v = a.value
            if not isinstance(v, VPair):
                raise InterpError("projection from a non-pair value")
            return ValueO(v.fst if t.index == 1 else v.snd)
        if isinstance(t, AppVar):
            raise InterpError(f"open term: free variable {t.head.ident} in "
                              f"application head")
        if isinstance(t, AppMeth):
            a = ev(t.arg, k)
            if not isinstance(a, ValueO):
                return a
            if k == 0:
                return NilO()
            lam = repo.get(t.head)
            if lam is None:
                raise InterpError(f"unknown method {t.head.ident}")
            return ev(subst_value(lam.body, lam.param, a.value), k - 1)
        if isinstance(t, BinOp):
            l = ev(t.left, k)
            if not isinstance(l, ValueO):
                return l
            r = ev(t.right, k)
            if not isinstance(r, ValueO):
                return r
            lv, rv = l.value, r.value
            if not isinstance(lv, VInt) or not isinstance(rv, VInt):
                raise InterpError(f"operator {t.op} applied to non-integers")
            return ValueO(VInt(_arith(t.op, lv.value, rv.value)))
        if isinstance(t, If):
            c = ev(t.cond, k)
            if not isinstance(c, ValueO):
                return c
            cv = c.value
            if not isinstance(cv, VInt):
                raise InterpError("non-integer condition")
            return ev(t.then_branch if cv.value != 0 else t.else_branch, k)
        if isinstance(t, Let):
            bound = ev(t.bound, k)
            if not isinstance(bound, ValueO):
                return bound
            return ev(subst_value(t.body, t.name, bound.value), k)
        if isinstance(t, Letrec):
            m = gen.fresh_meth(t.fun.typ)
            fun = substitute(t.fun, t.name, Meth(m))
            assert isinstance(fun, Lam)
            repo[m] = fun
            return ev(substitute(t.body, t.name, Meth(m)), k)
        if isinstance(t, Deref):
            if t.name not in store:
                raise InterpError(f"unknown reference {t.name.ident}")
            return ValueO(store[t.name])
        if isinstance(t, Assign):
            v = ev(t.value, k)
            if not isinstance(v, ValueO):
                return v
            if t.name not in store:
                raise InterpError(f"unknown reference {t.name.ident}")
            store[t.name] = v.value
            return ValueO(VUnit())
        raise InterpError(f"cannot evaluate {t!r}")

    out = ev(cfg.term, cfg.bound)
    return out, repo, store


def evaluate_program(term: Term, repo: Mapping[Name, Lam],
                     store: Mapping[Name, Value], env: Mapping[Name, Value],
                     bound: int, gen: Optional[NameGen] = None
                     ) -> tuple[Outcome, dict[Name, Lam], dict[Name, Value]]:
    """Close `term` by substituting `env` values for its inputs, then run."""
    closed = term
    for name, v in env.items():
        if value_type(v) != name.typ:
            raise InterpError(
                f"input {name.ident} expects {name.typ!r}, got {value_type(v)!r}")
        closed = subst_value(closed, name, v)
    cfg = Config(closed, dict(repo), dict(store), bound)
    return evaluate(cfg, gen)


# ---------------------------------------------------------------------------
# Nominal equivalence of runs
# ---------------------------------------------------------------------------


def apply_permutation(mapping: Mapping[Name, Name], t: Term) -> Term:
    """Rename method names throughout a term."""

    def go(t: Term) -> Term:
        if isinstance(t, Meth):
            return Meth(mapping.get(t.name, t.name))
        if isinstance(t, (Var, IntLit, UnitLit, Fail, Nil, Deref)):
            return t
        if isinstance(t, Pair):
            return Pair(go(t.fst), go(t.snd))
        if isinstance(t, Proj):
            return Proj(t.index, t.typ, go(t.arg))
        if isinstance(t, Lam):
            return Lam(t.param, go(t.body), t.typ)
        if isinstance(t, AppVar):
            return AppVar(t.head, go(t.arg))
        if isinstance(t, AppMeth):
            return AppMeth(mapping.get(t.head, t.head), go(t.arg))
        if isinstance(t, BinOp):
            return BinOp(t.op, go(t.left), go(t.right))
        if isinstance(t, If):
            return If(go(t.cond), go(t.then_branch), go(t.else_branch))
        if isinstance(t, Let):
            return Let(t.name, go(t.bound), go(t.body))
        if isinstance(t, Letrec):
            fun = go(t.fun)
            assert isinstance(fun, Lam)
            return Letrec(t.name, fun, go(t.body))
        if isinstance(t, Assign):
            return Assign(t.name, go(t.value))
        raise TypeError(f"not a term: {t!r}")

    return go(t)


def apply_permutation_value(mapping: Mapping[Name, Name], v: Value) -> Value:
    if isinstance(v, VMeth):
        return VMeth(mapping.get(v.name, v.name))
    if isinstance(v, VPair):
        return VPair(apply_permutation_value(mapping, v.fst),
                     apply_permutation_value(mapping, v.snd))
    return v


def nominally_equiv(a: tuple[Outcome, Mapping[Name, Lam], Mapping[Name, Value]],
                    b: tuple[Outcome, Mapping[Name, Lam], Mapping[Name, Value]],
                    initial_repo: Mapping[Name, Lam]) -> bool:
    """True when two runs of the same configuration are equal up to a
    type-preserving bijection of the method names they created.

    Method creation order is deterministic, so the bijection is positional:
    the i-th created name of one run corresponds to the i-th of the other.
    Names already present in `initial_repo` must match exactly.
    """
    out_a, repo_a, store_a = a
    out_b, repo_b, store_b = b
    keys_a = list(repo_a)
    keys_b = list(repo_b)
    if len(keys_a) != len(keys_b):
        return False
    base = len(initial_repo)
    if keys_a[:base] != list(initial_repo) or keys_b[:base] != list(initial_repo):
        return False
    mapping: dict[Name, Name] = {}
    for ka, kb in zip(keys_a[base:], keys_b[base:]):
        if ka.typ != kb.typ:
            return False
        mapping[ka] = kb

    for ka, kb in zip(keys_a, keys_b):
        la = apply_permutation(mapping, repo_a[ka])
        if not alpha_equal(la, repo_b[kb]):
            return False

    if set(store_a) != set(store_b):
        return False
    for r in store_a:
        if apply_permutation_value(mapping, store_a[r]) != store_b[r]:
            return False

    if type(out_a) is not type(out_b):
        return False
    if isinstance(out_a, ValueO):
        assert isinstance(out_b, ValueO)
        return apply_permutation_value(mapping, out_a.value) == out_b.value
    return True
