"""Bounded symbolic translation: from a term to a propositional formula.

A run of the translation produces one logical variable per evaluation step
("ret<n>"), an SSA chain of store versions per reference ("<ref>_<i>"),
and an ordered list of clauses whose conjunction characterizes all runs of
the term up to the given nested-call budget: the root variable equals a
proper value exactly when the term can produce it, Fail_* exactly when
some assertion can fail, and Nil_* exactly when the budget can run out.

Control flow is handled SSA-style: the clauses of both branches of a
conditional (and of every candidate callee of a variable-headed call) are
asserted unconditionally -- they only define fresh variables -- and join
constraints select which branch's result and store versions flow onward,
guarded by the scrutinee (or the callee identity).  Abnormal outcomes
propagate through the quasi-guard `guard_F`; when pruning is on, each
guard is specialized by the producing subterm's outcome prediction (Q),
computed in lock-step with the translation itself.

Two candidate regimes exist for variable-headed calls:

* base mode enumerates every repository method whose type matches the head
  (the repository as of right after the argument's translation);
* optimized mode (translate_opt) threads a points-to abstraction through
  the translation and enumerates only the methods the head can actually
  name.

Both modes agree on verdicts; the optimized mode just builds fewer
branches.  Methods are identified by integer ids in formulas (m<id>),
assigned by repository insertion order and then creation order.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .formula import (
    EFail, EInt, EMeth, ENil, EPair, EProj, EUnit, EVar, EArith, Expr,
    FAnd, FEq, FImplies, FNe, FOr, FTrue, Formula, LogVar, MethodConst,
    Q, guard_F, prune_F, q_join, q_joins,
)
from .pointsto import (
    PTS_EMPTY, PtMap, Pts, PtsMeths, PtsPair, initial_pt, pt_get, pt_merge,
    pt_merge_all, pts_meths, pts_of_value, pts_proj, pts_union,
)
from .syntax import (
    HobmcError, INT, Lam, Name, Term, TProd, TArrow, Type, UNIT, Value,
    Var, Meth, IntLit, UnitLit, Fail, Nil, Pair, Proj, AppVar, AppMeth,
    BinOp, If, Let, Letrec, Deref, Assign,
    VInt, VUnit, VMeth, VPair, METH, VAR,
    subterms, substitute, value_type,
)


class TranslateError(HobmcError):
    pass


def lv(n: Name) -> LogVar:
    """The logical variable standing for a program name."""
    return LogVar(n.ident, n.typ)


def encode_value(v: Value, mid_of: Mapping[Name, int]) -> Expr:
    if isinstance(v, VInt):
        return EInt(v.value)
    if isinstance(v, VUnit):
        return EUnit()
    if isinstance(v, VMeth):
        if v.name not in mid_of:
            raise TranslateError(f"method {v.name.ident} has no id")
        return EMeth(mid_of[v.name], v.name.typ)
    if isinstance(v, VPair):
        return EPair(value_type(v), encode_value(v.fst, mid_of),
                     encode_value(v.snd, mid_of))
    raise TranslateError(f"not a value: {v!r}")


@dataclass
class TransStats:
    """Size accounting for one translation run."""

    branch_records: list[tuple[int, int]] = field(default_factory=list)
    # (remaining call budget, candidate count) per variable-headed call
    n_clauses: int = 0
    n_ret_vars: int = 0
    n_version_vars: int = 0
    n_methods_created: int = 0

    @property
    def n_branches(self) -> int:
        return sum(c for _, c in self.branch_records)


@dataclass
class Translation:
    """The result of translating one term at one budget."""

    ret: LogVar
    clauses: Optional[list[Formula]]  # None when only counting
    q: Q
    pts: Pts
    methods: list[MethodConst]
    mid_of: dict[Name, int]
    repo: dict[Name, Lam]
    store0: dict[Name, LogVar]
    store_final: dict[Name, LogVar]
    counters: dict[Name, int]
    pt: PtMap
    stats: TransStats
    bound: int
    opt: bool
    prune: bool


class _Engine:
    def __init__(self, repo: Mapping[Name, Lam], store: Mapping[Name, Value],
                 opt: bool, prune: bool, counting: bool):
        self.opt = opt
        self.prune = prune
        self.repo: dict[Name, Lam] = dict(repo)
        self.store_order: list[Name] = list(store)
        self.mid_of: dict[Name, int] = {}
        self.methods: list[MethodConst] = []
        for m in repo:
            self._register(m, m.ident)
        self.ret_n = 0
        self.fprime_n = 0
        self.C: dict[Name, int] = {r: 0 for r in store}
        self.clauses: Optional[list[Formula]] = None if counting else []
        self.stats = TransStats()

    # -- naming ---------------------------------------------------------

    def _register(self, m: Name, label: str) -> int:
        mid = len(self.methods)
        self.mid_of[m] = mid
        self.methods.append(MethodConst(mid, label, m.typ))
        return mid

    def create_meth(self, lam: Lam) -> Name:
        mid = len(self.methods)
        m = Name(METH, f"m{mid}", lam.typ)
        self.repo[m] = lam
        self._register(m, m.ident)
        self.stats.n_methods_created += 1
        return m

    def fresh_ret(self, typ: Type) -> LogVar:
        v = LogVar(f"ret{self.ret_n}", typ)
        self.ret_n += 1
        self.stats.n_ret_vars += 1
        return v

    def fresh_fprime(self, f: Name) -> Name:
        n = Name(VAR, f"{f.ident}~{self.fprime_n}", f.typ)
        self.fprime_n += 1
        return n

    def bump(self, r: Name) -> LogVar:
        self.C[r] += 1
        self.stats.n_version_vars += 1
        return LogVar(f"{r.ident}_{self.C[r]}", r.typ)

    # -- clause emission --------------------------------------------------

    def emit(self, f: Formula) -> None:
        self.stats.n_clauses += 1
        if self.clauses is not None:
            self.clauses.append(f)

    def F(self, q: Q, a: LogVar, b: LogVar, payload: Formula) -> Formula:
        if self.prune:
            return prune_F(q, a, b, payload)
        return guard_F(a, b, payload)

    # -- candidate sets ----------------------------------------------------

    def candidates(self, head: Name, pt: Optional[PtMap]) -> list[Name]:
        if self.opt:
            assert pt is not None
            ms = pts_meths(pt_get(pt, head))
            return sorted(ms, key=lambda m: self.mid_of[m])
        return [m for m in self.repo if m.typ == head.typ]

    # -- the translation ---------------------------------------------------

    def translate(self, t: Term, D: dict[Name, LogVar],
                  pt: Optional[PtMap], k: int
                  ) -> tuple[LogVar, Q, Pts, dict[Name, LogVar], Optional[PtMap]]:
        """Returns (ret, q, pts, D', pt').  The repository, the version
        counter and the clause list live on the engine and only grow."""
        opt = self.opt

        if isinstance(t, IntLit):
            ret = self.fresh_ret(INT)
            self.emit(FEq(EVar(ret), EInt(t.value)))
            return ret, Q.Z, PTS_EMPTY, D, pt
        if isinstance(t, UnitLit):
            ret = self.fresh_ret(UNIT)
            self.emit(FEq(EVar(ret), EUnit()))
            return ret, Q.Z, PTS_EMPTY, D, pt
        if isinstance(t, Fail):
            ret = self.fresh_ret(t.typ)
            self.emit(FEq(EVar(ret), EFail(t.typ)))
            return ret, Q.FAIL, PTS_EMPTY, D, pt
        if isinstance(t, Nil):
            ret = self.fresh_ret(t.typ)
            self.emit(FEq(EVar(ret), ENil(t.typ)))
            return ret, Q.NIL, PTS_EMPTY, D, pt
        if isinstance(t, Var):
            ret = self.fresh_ret(t.name.typ)
            self.emit(FEq(EVar(ret), EVar(lv(t.name))))
            pts = pt_get(pt, t.name) if opt else PTS_EMPTY
            return ret, Q.Z, pts, D, pt
        if isinstance(t, Meth):
            if t.name not in self.mid_of:
                raise TranslateError(f"unknown method {t.name.ident}")
            ret = self.fresh_ret(t.name.typ)
            self.emit(FEq(EVar(ret), EMeth(self.mid_of[t.name], t.name.typ)))
            pts = PtsMeths([t.name]) if opt else PTS_EMPTY
            return ret, Q.Z, pts, D, pt
        if isinstance(t, Deref):
            if t.name not in D:
                raise TranslateError(f"unknown reference {t.name.ident}")
            ret = self.fresh_ret(t.name.typ)
            self.emit(FEq(EVar(ret), EVar(D[t.name])))
            pts = pt_get(pt, t.name) if opt else PTS_EMPTY
            return ret, Q.Z, pts, D, pt
        if isinstance(t, Lam):
            m = self.create_meth(t)
            ret = self.fresh_ret(t.typ)
            self.emit(FEq(EVar(ret), EMeth(self.mid_of[m], t.typ)))
            pts = PtsMeths([m]) if opt else PTS_EMPTY
            return ret, Q.Z, pts, D, pt

        if isinstance(t, Pair):
            ret1, q1, a1, D1, pt1 = self.translate(t.fst, D, pt, k)
            ret2, q2, a2, D2, pt2 = self.translate(t.snd, D1, pt1, k)
            typ = TProd(ret1.sort, ret2.sort)
            ret = self.fresh_ret(typ)
            payload = FEq(EVar(ret), EPair(typ, EVar(ret1), EVar(ret2)))
            self.emit(self.F(q1, ret1, ret, self.F(q2, ret2, ret, payload)))
            pts = PtsPair(a1, a2) if opt else PTS_EMPTY
            return ret, q_join(q1, q2), pts, D2, pt2

        if isinstance(t, Proj):
            ret1, q1, a1, D1, pt1 = self.translate(t.arg, D, pt, k)
            ret = self.fresh_ret(t.typ)
            assert isinstance(ret1.sort, TProd)
            payload = FEq(EVar(ret), EProj(t.index, ret1.sort, EVar(ret1)))
            self.emit(self.F(q1, ret1, ret, payload))
            pts = pts_proj(a1, t.index) if opt else PTS_EMPTY
            return ret, q1, pts, D1, pt1

        if isinstance(t, BinOp):
            ret1, q1, _, D1, pt1 = self.translate(t.left, D, pt, k)
            ret2, q2, _, D2, pt2 = self.translate(t.right, D1, pt1, k)
            ret = self.fresh_ret(INT)
            payload = FEq(EVar(ret), EArith(t.op, EVar(ret1), EVar(ret2)))
            self.emit(self.F(q1, ret1, ret, self.F(q2, ret2, ret, payload)))
            return ret, q_join(q1, q2), PTS_EMPTY, D2, pt2

        if isinstance(t, Assign):
            ret1, q1, a1, D1, pt1 = self.translate(t.value, D, pt, k)
            new = self.bump(t.name)
            D2 = dict(D1)
            D2[t.name] = new
            ret = self.fresh_ret(UNIT)
            payload = FAnd((FEq(EVar(ret), EUnit()),
                            FEq(EVar(new), EVar(ret1))))
            self.emit(self.F(q1, ret1, ret, payload))
            pt2 = pt1
            if opt:
                pt2 = dict(pt1)  # type: ignore[arg-type]
                pt2[t.name] = a1
            return ret, q1, PTS_EMPTY, D2, pt2

        if isinstance(t, Let):
            ret1, q1, a1, D1, pt1 = self.translate(t.bound, D, pt, k)
            ret1_name = Name(VAR, ret1.ident, t.name.typ)
            body = substitute(t.body, t.name, Var(ret1_name))
            pt1b = pt1
            if opt:
                pt1b = dict(pt1)  # type: ignore[arg-type]
                pt1b[ret1_name] = a1
            ret2, q2, a2, D2, pt2 = self.translate(body, D1, pt1b, k)
            ret = self.fresh_ret(ret2.sort)
            payload = self.F(q2, ret2, ret, FEq(EVar(ret), EVar(ret2)))
            self.emit(self.F(q1, ret1, ret, payload))
            return ret, q_join(q1, q2), a2, D2, pt2

        if isinstance(t, Letrec):
            fprime = self.fresh_fprime(t.name)
            lam = substitute(t.fun, t.name, Var(fprime))
            assert isinstance(lam, Lam)
            m = self.create_meth(lam)
            self.emit(FEq(EVar(lv(fprime)), EMeth(self.mid_of[m], m.typ)))
            body = substitute(t.body, t.name, Var(fprime))
            ptb = pt
            if opt:
                ptb = dict(pt)  # type: ignore[arg-type]
                ptb[fprime] = PtsMeths([m])
            return self.translate(body, D, ptb, k)

        if isinstance(t, AppMeth):
            ret1, q1, a1, D1, pt1 = self.translate(t.arg, D, pt, k)
            lam = self.repo.get(t.head)
            if lam is None:
                raise TranslateError(f"unknown method {t.head.ident}")
            ret2, q2, a2, D2, pt2 = self._call_body(lam, ret1, a1, D1, pt1, k)
            assert isinstance(t.head.typ, TArrow)
            ret = self.fresh_ret(t.head.typ.res)
            payload = self.F(q2, ret2, ret, FEq(EVar(ret), EVar(ret2)))
            self.emit(self.F(q1, ret1, ret, payload))
            return ret, q_join(q1, q2), a2, D2, pt2

        if isinstance(t, AppVar):
            ret0, q0, a0, D0, pt0 = self.translate(t.arg, D, pt, k)
            cands = self.candidates(t.head, pt0)
            self.stats.branch_records.append((k, len(cands)))
            assert isinstance(t.head.typ, TArrow)
            res_t = t.head.typ.res
            if not cands:
                ret = self.fresh_ret(res_t)
                self.emit(FEq(EVar(ret), ENil(res_t)))
                return ret, q_join(q0, Q.NIL), PTS_EMPTY, D0, pt0
            branch: list[tuple[Name, LogVar, Q, dict[Name, LogVar]]] = []
            qs = [q0]
            pts_out = PTS_EMPTY
            branch_pts: list[PtMap] = []
            for mname in cands:
                lam = self.repo[mname]
                reti, qi, ai, Di, pti = self._call_body(
                    lam, ret0, a0, D0, pt0, k)
                branch.append((mname, reti, qi, Di))
                qs.append(qi)
                if self.opt:
                    pts_out = pts_union(pts_out, ai)
                    branch_pts.append(pti)  # type: ignore[arg-type]
            joined = self._bump_all()
            ret = self.fresh_ret(res_t)
            conj = []
            for mname, reti, qi, Di in branch:
                parts: list[Formula] = [
                    self.F(qi, reti, ret, FEq(EVar(ret), EVar(reti)))]
                for r in self.store_order:
                    parts.append(FEq(EVar(joined[r]), EVar(Di[r])))
                conj.append(FImplies(
                    FEq(EVar(lv(t.head)), EMeth(self.mid_of[mname], t.head.typ)),
                    FAnd(parts)))
            self.emit(self.F(q0, ret0, ret, FAnd(conj)))
            pt_out = pt0
            if self.opt:
                pt_out = pt_merge_all(branch_pts)
            return ret, q_joins(qs), pts_out, joined, pt_out

        if isinstance(t, If):
            retb, qb, _, Db, ptb = self.translate(t.cond, D, pt, k)
            rete, q0, a0, D0, pt0 = self.translate(t.else_branch, Db, ptb, k)
            rett, q1, a1, D1, pt1 = self.translate(t.then_branch, Db, ptb, k)
            joined = self._bump_all()
            ret = self.fresh_ret(rete.sort)

            def join_payload(q: Q, retj: LogVar, Dj: dict[Name, LogVar]
                             ) -> Formula:
                parts: list[Formula] = [FEq(EVar(ret), EVar(retj))]
                for r in self.store_order:
                    parts.append(FEq(EVar(joined[r]), EVar(Dj[r])))
                return self.F(q, retj, ret, FAnd(parts))

            psi0 = FImplies(FEq(EVar(retb), EInt(0)), join_payload(q0, rete, D0))
            psi1 = FImplies(FNe(EVar(retb), EInt(0)), join_payload(q1, rett, D1))
            self.emit(self.F(qb, retb, ret, FAnd((psi0, psi1))))
            pts = pts_union(a0, a1) if self.opt else PTS_EMPTY
            pt_out = pt_merge(pt0, pt1) if self.opt else pt0
            return ret, q_joins((qb, q0, q1)), pts, joined, pt_out

        raise TranslateError(f"cannot translate {t!r}")

    def _call_body(self, lam: Lam, arg_ret: LogVar, arg_pts: Pts,
                   D: dict[Name, LogVar], pt: Optional[PtMap], k: int
                   ) -> tuple[LogVar, Q, Pts, dict[Name, LogVar], Optional[PtMap]]:
        """One callee body at budget k-1 (or the exhaustion placeholder when
        the budget is spent), with the argument variable bound."""
        assert isinstance(lam.typ, TArrow)
        if k == 0:
            ret = self.fresh_ret(lam.typ.res)
            self.emit(FEq(EVar(ret), ENil(lam.typ.res)))
            return ret, Q.NIL, PTS_EMPTY, D, pt
        arg_name = Name(VAR, arg_ret.ident, lam.param.typ)
        body = substitute(lam.body, lam.param, Var(arg_name))
        ptb = pt
        if self.opt:
            ptb = dict(pt)  # type: ignore[arg-type]
            ptb[arg_name] = arg_pts
        return self.translate(body, D, ptb, k - 1)

    def _bump_all(self) -> dict[Name, LogVar]:
        return {r: self.bump(r) for r in self.store_order}


def translate(term: Term, repo: Mapping[Name, Lam],
              store: Mapping[Name, Value], bound: int, *,
              opt: bool = False, prune: bool = False,
              assumptions: Sequence[Formula] = (),
              counting: bool = False) -> Translation:
    """Translate `term` with call budget `bound`.

    The clause list starts with `assumptions` (verbatim), then one clause
    per reference pinning its version-0 variable to the initial store
    value, then the clauses of the term.  `counting=True` keeps only
    statistics (no clause list), for size measurements.
    """
    if bound < 0:
        raise TranslateError("bound must be non-negative")
    limit = sys.getrecursionlimit()
    if limit < 100_000:
        sys.setrecursionlimit(100_000)

    eng = _Engine(repo, store, opt, prune, counting)
    for a in assumptions:
        eng.emit(a)
    store0: dict[Name, LogVar] = {}
    for r, v in store.items():
        v0 = LogVar(f"{r.ident}_0", r.typ)
        store0[r] = v0
        eng.stats.n_version_vars += 1
        eng.emit(FEq(EVar(v0), encode_value(v, eng.mid_of)))
    pt0: Optional[PtMap] = initial_pt(store) if opt else None
    ret, q, pts, D, pt_final = eng.translate(term, dict(store0), pt0, bound)
    return Translation(
        ret=ret, clauses=eng.clauses, q=q, pts=pts,
        methods=eng.methods, mid_of=eng.mid_of, repo=eng.repo,
        store0=store0, store_final=D, counters=dict(eng.C),
        pt=pt_final if pt_final is not None else {},
        stats=eng.stats, bound=bound, opt=opt, prune=prune,
    )


def translate_opt(term: Term, repo: Mapping[Name, Lam],
                  store: Mapping[Name, Value], bound: int, *,
                  prune: bool = True, assumptions: Sequence[Formula] = (),
                  counting: bool = False) -> Translation:
    """The points-to-directed translation (fewer call branches)."""
    return translate(term, repo, store, bound, opt=True, prune=prune,
                     assumptions=assumptions, counting=counting)


# ---------------------------------------------------------------------------
# Standalone outcome prediction
# ---------------------------------------------------------------------------


def reachability_q(term: Term, repo: Mapping[Name, Lam]) -> Q:
    """A sound prediction of the abnormal outcomes `term` can have under
    *any* call budget: every application can exhaust the budget, and a
    call's callee can be any lambda of the right type (from the repository
    or created anywhere in the program), iterated to a fixpoint.

    The translation does not use this: it computes sharper predictions in
    lock-step, where a callee's prediction comes from its own translation
    at the reduced budget.  This is the budget-independent summary.
    """
    pool: list[Lam] = []

    def collect(t: Term) -> None:
        for s in subterms(t):
            if isinstance(s, Lam):
                pool.append(s)
            elif isinstance(s, Letrec):
                pass  # fun is a Lam subterm, already collected

    for lam in repo.values():
        pool.append(lam)
        collect(lam.body)
    collect(term)

    qb: dict[Lam, Q] = {lam: Q.Z for lam in pool}

    def cands_of_type(typ: Type) -> list[Lam]:
        return [lam for lam in pool if lam.typ == typ]

    def q_of(t: Term) -> Q:
        if isinstance(t, Fail):
            return Q.FAIL
        if isinstance(t, Nil):
            return Q.NIL
        if isinstance(t, (Var, Meth, IntLit, UnitLit, Deref, Lam)):
            return Q.Z
        if isinstance(t, Pair):
            return q_join(q_of(t.fst), q_of(t.snd))
        if isinstance(t, Proj):
            return q_of(t.arg)
        if isinstance(t, BinOp):
            return q_join(q_of(t.left), q_of(t.right))
        if isinstance(t, If):
            return q_joins((q_of(t.cond), q_of(t.then_branch),
                            q_of(t.else_branch)))
        if isinstance(t, Let):
            return q_join(q_of(t.bound), q_of(t.body))
        if isinstance(t, Letrec):
            return q_of(t.body)
        if isinstance(t, Assign):
            return q_of(t.value)
        if isinstance(t, AppMeth):
            body_q = Q.Z
            if t.head in repo:
                body_q = qb[repo[t.head]]
            else:
                body_q = q_joins(qb[lam] for lam in cands_of_type(t.head.typ))
            return q_joins((q_of(t.arg), Q.NIL, body_q))
        if isinstance(t, AppVar):
            body_q = q_joins(qb[lam] for lam in cands_of_type(t.head.typ))
            return q_joins((q_of(t.arg), Q.NIL, body_q))
        raise TranslateError(f"cannot analyze {t!r}")

    changed = True
    while changed:
        changed = False
        for lam in pool:
            new = q_of(lam.body)
            if q_join(qb[lam], new) != qb[lam]:
                qb[lam] = q_join(qb[lam], new)
                changed = True

    return q_of(term)
