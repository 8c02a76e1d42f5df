"""Points-to domain laws and the standalone abstract analysis."""

import pytest
from hypothesis import given, strategies as st

from hobmc.pointsto import (
    PTS_EMPTY, PointsToError, PtsEmpty, PtsMeths, PtsPair,
    initial_pt, pt_analyze, pt_get, pt_merge, pt_merge_all,
    pts_is_empty, pts_meths, pts_of_value, pts_proj, pts_union,
    pts_well_typed,
)
from hobmc.syntax import (
    INT, METH, UNIT, Name, TArrow, TProd, VInt, VMeth, VPair,
)

II = TArrow(INT, INT)
_POOL = [Name(METH, f"m{i}", II) for i in range(4)]

arrow_pts = st.one_of(
    st.just(PTS_EMPTY),
    st.lists(st.sampled_from(_POOL), max_size=3).map(PtsMeths),
)
pair_pts = st.one_of(
    st.just(PTS_EMPTY),
    st.tuples(arrow_pts, arrow_pts).map(lambda ab: PtsPair(*ab)),
)
same_shape = st.one_of(
    st.tuples(arrow_pts, arrow_pts, arrow_pts),
    st.tuples(pair_pts, pair_pts, pair_pts),
)


# --- lattice laws -----------------------------------------------------------------

@given(same_shape)
def test_union_laws(abc):
    a, b, c = abc
    assert pts_union(a, b) == pts_union(b, a)
    assert pts_union(a, pts_union(b, c)) == pts_union(pts_union(a, b), c)
    assert pts_union(a, a) == a
    assert pts_union(a, PTS_EMPTY) == a
    assert pts_union(PTS_EMPTY, a) == a


def test_union_incompatible_raises():
    with pytest.raises(PointsToError, match="incompatible"):
        pts_union(PtsMeths(_POOL[:1]), PtsPair(PTS_EMPTY, PTS_EMPTY))


def test_meths_normalizes_to_frozenset():
    assert PtsMeths(_POOL[:2]) == PtsMeths(reversed(_POOL[:2]))
    assert isinstance(PtsMeths(iter(_POOL)).meths, frozenset)


# --- accessors ---------------------------------------------------------------------

def test_proj():
    p = PtsPair(PtsMeths(_POOL[:1]), PTS_EMPTY)
    assert pts_proj(p, 1) == PtsMeths(_POOL[:1])
    assert pts_proj(p, 2) == PTS_EMPTY
    assert pts_proj(PTS_EMPTY, 1) == PTS_EMPTY
    with pytest.raises(PointsToError, match="non-pair"):
        pts_proj(PtsMeths(_POOL[:1]), 1)


def test_meth_set():
    assert pts_meths(PTS_EMPTY) == frozenset()
    assert pts_meths(PtsMeths(_POOL[:2])) == frozenset(_POOL[:2])
    with pytest.raises(PointsToError, match="non-arrow"):
        pts_meths(PtsPair(PTS_EMPTY, PTS_EMPTY))


def test_is_empty():
    assert pts_is_empty(PTS_EMPTY)
    assert pts_is_empty(PtsMeths(()))
    assert pts_is_empty(PtsPair(PTS_EMPTY, PtsMeths(())))
    assert not pts_is_empty(PtsMeths(_POOL[:1]))
    assert not pts_is_empty(PtsPair(PTS_EMPTY, PtsMeths(_POOL[:1])))


def test_of_value():
    assert pts_of_value(VInt(3)) == PTS_EMPTY
    m = VMeth(_POOL[0])
    assert pts_of_value(m) == PtsMeths(_POOL[:1])
    assert pts_of_value(VPair(VInt(1), m)) == PtsPair(PTS_EMPTY,
                                                      PtsMeths(_POOL[:1]))


def test_well_typed():
    assert pts_well_typed(PTS_EMPTY, INT)
    assert pts_well_typed(PTS_EMPTY, II)
    assert pts_well_typed(PtsMeths(_POOL[:2]), II)
    assert not pts_well_typed(PtsMeths(_POOL[:2]), TArrow(INT, UNIT))
    assert not pts_well_typed(PtsMeths(_POOL[:2]), INT)
    assert pts_well_typed(PtsPair(PTS_EMPTY, PtsMeths(_POOL[:1])),
                          TProd(INT, II))
    assert not pts_well_typed(PtsPair(PTS_EMPTY, PTS_EMPTY), INT)


# --- pt maps ------------------------------------------------------------------------

def test_pt_map_operations():
    a, b = _POOL[0], _POOL[1]
    x = Name(METH, "x", II)
    assert pt_get({}, x) == PTS_EMPTY
    merged = pt_merge({x: PtsMeths([a])}, {x: PtsMeths([b])})
    assert merged[x] == PtsMeths([a, b])
    assert pt_merge_all([{x: PtsMeths([a])}, {}, {x: PtsMeths([b])}]) == merged


def test_initial_pt_reads_the_store(corpus):
    prog = corpus["intro-example"]
    pt = initial_pt(prog.store)
    (r,) = prog.store
    assert pts_meths(pt[r]) == frozenset(n for n in prog.repo
                                         if n.ident == "zero")


# --- the standalone analysis ----------------------------------------------------------

def test_runtime_choice_lands_both_lambdas_in_the_reference(corpus):
    # the reference is assigned whichever function a runtime choice picks,
    # so its abstraction must hold exactly the two candidate lambdas
    prog = corpus["intro-example"]
    res = pt_analyze(prog.term, prog.repo, initial_pt(prog.store), 3)
    (r,) = prog.store
    held = pts_meths(res.pt[r])
    assert len(held) == 2
    assert all(m.ident.startswith("pm~") for m in held)
    # created functions were added to the repository under their fresh names
    assert all(m in res.repo for m in held)
    assert len(res.repo) == len(prog.repo) + 4
    assert pts_is_empty(res.pts)  # Main's own result is unit-typed


def test_zero_budget_starves_the_reference(corpus):
    prog = corpus["intro-example"]
    res = pt_analyze(prog.term, prog.repo, initial_pt(prog.store), 0)
    (r,) = prog.store
    assert pts_is_empty(res.pt[r])
    # the two argument lambdas are still created before the calls give up
    assert len(res.repo) == len(prog.repo) + 2


@pytest.mark.parametrize("bound", range(5))
def test_call_budget_limits_created_functions(corpus, bound):
    # triangular's recursive f builds one adder lambda per level entered, so
    # the repository grows by exactly: two letrec headers + `bound` adders
    prog = corpus["triangular"]
    res = pt_analyze(prog.term, prog.repo, initial_pt(prog.store), bound)
    assert len(res.repo) - len(prog.repo) == 2 + bound
    created = [p for p in res.pt.values() if isinstance(p, PtsMeths)]
    assert all(m.ident.startswith("pm~")
               for p in created for m in p.meths)
