"""Points-to abstraction: which method names can a value be?

The abstraction of a value follows its type: at arrow type it is a finite
set of method names, at product type a pair of component abstractions, and
at ground type nothing interesting.  `PTS_EMPTY` is a polymorphic bottom
usable at every type (literals and fresh integers point at no methods).

`pt_analyze` runs the abstraction through a whole term, mirroring the
bounded symbolic translation step for step (same call-budget discipline,
same branch structure) but computing only abstractions.  The translation
itself threads the same information while emitting formulas; the
standalone analysis exists so the domain can be exercised and tested
without building formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .syntax import (
    Lam, Name, Term, TProd, TArrow, Type, Value,
    Var, Meth, IntLit, UnitLit, Fail, Nil, Pair, Proj, AppVar, AppMeth,
    BinOp, If, Let, Letrec, Deref, Assign,
    VMeth, VPair, METH, HobmcError,
)


class PointsToError(HobmcError):
    pass


# ---------------------------------------------------------------------------
# The domain
# ---------------------------------------------------------------------------


class Pts:
    __slots__ = ()


@dataclass(frozen=True)
class PtsEmpty(Pts):
    """Polymorphic bottom: no methods at any component."""

    def __repr__(self) -> str:
        return "{}"


@dataclass(frozen=True)
class PtsMeths(Pts):
    meths: frozenset[Name]

    def __init__(self, meths):
        object.__setattr__(self, "meths", frozenset(meths))

    def __repr__(self) -> str:
        return "{" + ", ".join(sorted(m.ident for m in self.meths)) + "}"


@dataclass(frozen=True)
class PtsPair(Pts):
    fst: Pts
    snd: Pts

    def __repr__(self) -> str:
        return f"({self.fst!r}, {self.snd!r})"


PTS_EMPTY = PtsEmpty()


def pts_union(a: Pts, b: Pts) -> Pts:
    if isinstance(a, PtsEmpty):
        return b
    if isinstance(b, PtsEmpty):
        return a
    if isinstance(a, PtsMeths) and isinstance(b, PtsMeths):
        return PtsMeths(a.meths | b.meths)
    if isinstance(a, PtsPair) and isinstance(b, PtsPair):
        return PtsPair(pts_union(a.fst, b.fst), pts_union(a.snd, b.snd))
    raise PointsToError(f"union of incompatible abstractions {a!r} and {b!r}")


def pts_proj(a: Pts, index: int) -> Pts:
    if isinstance(a, PtsEmpty):
        return a
    if isinstance(a, PtsPair):
        return a.fst if index == 1 else a.snd
    raise PointsToError(f"projection from non-pair abstraction {a!r}")


def pts_meths(a: Pts) -> frozenset[Name]:
    """The method set of an arrow-type abstraction."""
    if isinstance(a, PtsEmpty):
        return frozenset()
    if isinstance(a, PtsMeths):
        return a.meths
    raise PointsToError(f"method set of non-arrow abstraction {a!r}")


def pts_is_empty(a: Pts) -> bool:
    if isinstance(a, PtsEmpty):
        return True
    if isinstance(a, PtsMeths):
        return not a.meths
    if isinstance(a, PtsPair):
        return pts_is_empty(a.fst) and pts_is_empty(a.snd)
    raise PointsToError(f"not an abstraction: {a!r}")


def pts_of_value(v: Value) -> Pts:
    if isinstance(v, VMeth):
        return PtsMeths([v.name])
    if isinstance(v, VPair):
        return PtsPair(pts_of_value(v.fst), pts_of_value(v.snd))
    return PTS_EMPTY


def pts_well_typed(a: Pts, typ: Type) -> bool:
    """Does abstraction `a` fit a value of type `typ`?"""
    if isinstance(a, PtsEmpty):
        return True
    if isinstance(a, PtsMeths):
        return isinstance(typ, TArrow) and all(m.typ == typ for m in a.meths)
    if isinstance(a, PtsPair):
        return (isinstance(typ, TProd)
                and pts_well_typed(a.fst, typ.left)
                and pts_well_typed(a.snd, typ.right))
    return False


# pt maps: variable/reference Name -> Pts.  Missing entries mean PTS_EMPTY.
PtMap = dict


def pt_get(pt: Mapping[Name, Pts], n: Name) -> Pts:
    return pt.get(n, PTS_EMPTY)


def pt_merge(a: Mapping[Name, Pts], b: Mapping[Name, Pts]) -> PtMap:
    out: PtMap = dict(a)
    for k, v in b.items():
        out[k] = pts_union(out.get(k, PTS_EMPTY), v)
    return out


def pt_merge_all(maps) -> PtMap:
    out: PtMap = {}
    for m in maps:
        out = pt_merge(out, m)
    return out


def initial_pt(store: Mapping[Name, Value]) -> PtMap:
    """References start out pointing at whatever their initial values name."""
    return {r: pts_of_value(v) for r, v in store.items()}


# ---------------------------------------------------------------------------
# Standalone analysis
# ---------------------------------------------------------------------------


class _PtFresh:
    def __init__(self, start: int = 0):
        self.n = start

    def meth(self, typ: Type) -> Name:
        n = Name(METH, f"pm~{self.n}", typ)
        self.n += 1
        return n


@dataclass
class PtResult:
    pts: Pts
    repo: dict[Name, Lam]
    pt: PtMap


def pt_analyze(term: Term, repo: Mapping[Name, Lam], pt: Mapping[Name, Pts],
               bound: int, _fresh: Optional[_PtFresh] = None) -> PtResult:
    """Abstract the result of running `term` with call budget `bound`.

    Returns the result abstraction, the repository extended with the
    methods the run could create, and the updated pt map.  Applications
    consume budget exactly like evaluation does; a budget of zero makes a
    call contribute nothing (its only outcome is exhaustion).
    """
    fresh = _fresh if _fresh is not None else _PtFresh()
    repo = dict(repo)

    def candidates(pts: Pts) -> list[Name]:
        ms = pts_meths(pts)
        order = {m: i for i, m in enumerate(repo)}
        return sorted(ms, key=lambda m: order.get(m, len(order)))

    def go(t: Term, pt: PtMap, k: int) -> tuple[Pts, PtMap]:
        if isinstance(t, Var):
            return pt_get(pt, t.name), pt
        if isinstance(t, Meth):
            return PtsMeths([t.name]), pt
        if isinstance(t, (IntLit, UnitLit, Fail, Nil)):
            return PTS_EMPTY, pt
        if isinstance(t, Deref):
            return pt_get(pt, t.name), pt
        if isinstance(t, Lam):
            m = fresh.meth(t.typ)
            repo[m] = t
            return PtsMeths([m]), pt
        if isinstance(t, Pair):
            a, pt1 = go(t.fst, pt, k)
            b, pt2 = go(t.snd, pt1, k)
            return PtsPair(a, b), pt2
        if isinstance(t, Proj):
            a, pt1 = go(t.arg, pt, k)
            return pts_proj(a, t.index), pt1
        if isinstance(t, Assign):
            a, pt1 = go(t.value, pt, k)
            pt2 = dict(pt1)
            pt2[t.name] = a
            return PTS_EMPTY, pt2
        if isinstance(t, BinOp):
            _, pt1 = go(t.left, pt, k)
            _, pt2 = go(t.right, pt1, k)
            return PTS_EMPTY, pt2
        if isinstance(t, If):
            _, ptc = go(t.cond, pt, k)
            a0, pt0 = go(t.else_branch, ptc, k)
            a1, pt1 = go(t.then_branch, ptc, k)
            return pts_union(a0, a1), pt_merge(pt0, pt1)
        if isinstance(t, Let):
            a, pt1 = go(t.bound, pt, k)
            pt2 = dict(pt1)
            pt2[t.name] = a
            return go(t.body, pt2, k)
        if isinstance(t, Letrec):
            m = fresh.meth(t.fun.typ)
            repo[m] = t.fun
            pt1 = dict(pt)
            pt1[t.name] = PtsMeths([m])
            return go(t.body, pt1, k)
        if isinstance(t, AppMeth):
            a0, pt0 = go(t.arg, pt, k)
            if k == 0:
                return PTS_EMPTY, pt0
            lam = repo.get(t.head)
            if lam is None:
                raise PointsToError(f"unknown method {t.head.ident}")
            ptb = dict(pt0)
            ptb[lam.param] = a0
            return go(lam.body, ptb, k - 1)
        if isinstance(t, AppVar):
            a0, pt0 = go(t.arg, pt, k)
            cands = candidates(pt_get(pt0, t.head))
            if k == 0 or not cands:
                return PTS_EMPTY, pt0
            out = PTS_EMPTY
            branch_pts = []
            for m in cands:
                lam = repo[m]
                ptb = dict(pt0)
                ptb[lam.param] = a0
                ai, pti = go(lam.body, ptb, k - 1)
                out = pts_union(out, ai)
                branch_pts.append(pti)
            return out, pt_merge_all(branch_pts)
        raise PointsToError(f"cannot analyze {t!r}")

    pts, pt_out = go(term, dict(pt), bound)
    return PtResult(pts, repo, pt_out)
