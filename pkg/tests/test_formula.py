"""Formula layer: sorts, symbols, guards, negation, SMT-LIB emission."""

import pytest
from hypothesis import given, strategies as st

from hobmc.checker import run_solver
from hobmc.formula import (
    INT, UNIT,
    EArith, EFail, EInt, EMeth, ENil, EPair, EProj, EUnit, EVar, LogVar,
    FAnd, FCmp, FEq, FFALSE, FImplies, FIsVal, FNe, FNot, FOr, FTRUE,
    MethodConst, Q, ScriptBuilder,
    close_sorts, datatype_block, emit_expr, emit_formula, emit_script,
    expr_sort, formula_vars, guard_F, method_defs, negate, prune_F, q_join,
    q_joins, smt_symbol, sort_name, sort_token,
)
from hobmc.syntax import TArrow, TProd

II = TArrow(INT, INT)
PII = TProd(INT, INT)


# --- sorts ------------------------------------------------------------------------

def test_sort_token_unambiguous():
    types = [INT, UNIT, PII, II, TProd(PII, INT), TProd(INT, PII),
             TArrow(PII, II), TProd(PII, PII)]
    tokens = [sort_token(t) for t in types]
    assert len(set(tokens)) == len(tokens)
    # prefix-free modulo the leading tag: distinct types never share a token
    assert sort_token(TProd(PII, INT)) != sort_token(TProd(INT, PII))
    assert sort_name(INT) == "V_int"


def test_close_sorts_pulls_components():
    sorts = close_sorts([TProd(PII, INT)])
    assert INT in sorts and PII in sorts and TProd(PII, INT) in sorts
    # components come before the sorts built from them
    assert sorts.index(INT) < sorts.index(PII) < sorts.index(TProd(PII, INT))


# --- symbols -----------------------------------------------------------------------

def test_smt_symbol_passthrough_and_quoting():
    assert smt_symbol("ret0") == "ret0"
    assert smt_symbol("r_1") == "r_1"
    assert smt_symbol("f'~0") == "|f'~0|"
    with pytest.raises(Exception):
        smt_symbol("a|b")
    with pytest.raises(Exception):
        smt_symbol("a\\b")


# --- outcome lattice ------------------------------------------------------------------

def test_q_join_lattice():
    assert q_join(Q.Z, Q.NIL) == Q.NIL
    assert q_join(Q.FAIL, Q.NIL) == Q.BOTH
    assert q_join(Q.BOTH, Q.Z) == Q.BOTH
    for q in Q:
        assert q_join(q, q) == q
        assert q_join(Q.Z, q) == q
    assert q_joins([]) == Q.Z
    assert q_joins([Q.NIL, Q.FAIL]) == Q.BOTH


# --- quasi-guards -----------------------------------------------------------------------

A = LogVar("ret0", INT)
B = LogVar("ret1", INT)
PAYLOAD = FEq(EVar(B), EInt(7))


def test_guard_has_three_conjuncts():
    g = guard_F(A, B, PAYLOAD)
    assert isinstance(g, FAnd) and len(g.parts) == 3
    fail_imp, nil_imp, disj = g.parts
    assert isinstance(fail_imp, FImplies) and isinstance(nil_imp, FImplies)
    assert isinstance(disj, FOr) and PAYLOAD in disj.parts


def test_prune_drops_impossible_outcomes():
    assert prune_F(Q.Z, A, B, PAYLOAD) is PAYLOAD
    assert prune_F(Q.BOTH, A, B, PAYLOAD) == guard_F(A, B, PAYLOAD)
    nil_only = prune_F(Q.NIL, A, B, PAYLOAD)
    assert isinstance(nil_only, FAnd) and len(nil_only.parts) == 2
    assert "Fail" not in emit_formula(nil_only)
    fail_only = prune_F(Q.FAIL, A, B, PAYLOAD)
    assert "Nil" not in emit_formula(fail_only)


# --- negation ---------------------------------------------------------------------------

_leaf = st.sampled_from([
    FEq(EVar(A), EInt(3)),
    FNe(EVar(A), EVar(B)),
    FCmp("<", EVar(A), EInt(0)),
    FCmp(">=", EVar(B), EInt(2)),
    FIsVal(EVar(A)),
    FNot(FIsVal(EVar(B))),
])


def _trees(children):
    return st.one_of(
        st.lists(children, min_size=0, max_size=3).map(FAnd),
        st.lists(children, min_size=0, max_size=3).map(FOr),
    )


formulas = st.recursive(_leaf, _trees, max_leaves=12)


@given(formulas)
def test_negate_involutive_on_translation_fragment(f):
    assert negate(negate(f)) == f


@given(formulas)
def test_negate_emits(f):
    # well-formed s-expressions out of both polarities
    s = emit_formula(negate(f))
    assert s.count("(") == s.count(")")


def test_negate_true_false():
    assert negate(FTRUE) == FFALSE
    assert negate(FImplies(PAYLOAD, PAYLOAD)) == FAnd((PAYLOAD, negate(PAYLOAD)))


# --- emission ------------------------------------------------------------------------------

def test_emit_negative_literals():
    assert "(- 3)" in emit_expr(EInt(-3))
    assert "(- 3)" not in emit_expr(EInt(3))


def test_datatype_block_declares_outcome_constructors():
    block = datatype_block([INT, PII])
    assert "declare-datatypes" in block
    for piece in ("Int_int", "Fail_int", "Nil_int", "Fail_pintint", "V_int",
                  "V_pintint"):
        assert piece in block, piece


def test_method_defs_show_label():
    defs = method_defs([MethodConst(0, "inc", II)])
    assert len(defs) == 1
    assert defs[0].startswith("(define-fun m0 () V_aintint (Meth_aintint 0))")
    assert "inc" in defs[0]


def test_script_builder_rejects_one_ident_at_two_sorts():
    sb = ScriptBuilder([])
    sb.register(FEq(EVar(LogVar("x", INT)), EInt(0)))
    sb.register(FEq(EVar(LogVar("x", UNIT)), EUnit()))
    with pytest.raises(ValueError, match="two sorts"):
        sb.preamble()


def test_emit_script_deterministic():
    clauses = [FEq(EVar(A), EInt(1)), FCmp("<", EVar(A), EVar(B))]
    methods = [MethodConst(0, "inc", II)]
    assert emit_script(clauses, methods) == emit_script(clauses, methods)


def test_formula_vars_first_occurrence_order():
    f = FAnd((FEq(EVar(B), EInt(0)), FCmp("<", EVar(A), EVar(B))))
    assert formula_vars(f) == [B, A]


# --- solver-backed semantics of the encoding ----------------------------------------------

def _solve(clauses, extra):
    script = emit_script(list(clauses) + list(extra), [],
                         get_model=False)
    return run_solver(script, timeout=30).status


def test_arithmetic_encoding_forces_results():
    x = LogVar("x", INT)
    y = LogVar("y", INT)
    base = [
        FEq(EVar(x), EInt(5)),
        FEq(EVar(y), EArith("+", EVar(x), EVar(x))),
    ]
    assert _solve(base, [FEq(EVar(y), EInt(10))]) == "sat"
    assert _solve(base, [FNe(EVar(y), EInt(10))]) == "unsat"


def test_comparison_encoding_yields_boolean_ints():
    x = LogVar("x", INT)
    c = LogVar("c", INT)
    base = [FEq(EVar(c), EArith("<", EVar(x), EInt(0)))]
    assert _solve(base, [FEq(EVar(x), EInt(-1)), FEq(EVar(c), EInt(1))]) == "sat"
    assert _solve(base, [FEq(EVar(x), EInt(-1)), FEq(EVar(c), EInt(0))]) == "unsat"
    assert _solve(base, [FEq(EVar(x), EInt(3)), FEq(EVar(c), EInt(0))]) == "sat"


def test_euclidean_division_encoding():
    x = LogVar("x", INT)
    base = [FEq(EVar(x), EArith("div", EInt(-7), EInt(2)))]
    assert _solve(base, [FEq(EVar(x), EInt(-4))]) == "sat"
    assert _solve(base, [FNe(EVar(x), EInt(-4))]) == "unsat"


def test_pair_projection_encoding():
    p = LogVar("p", PII)
    base = [FEq(EVar(p), EPair(PII, EInt(3), EInt(4)))]
    assert _solve(base, [FEq(EProj(1, PII, EVar(p)), EInt(3))]) == "sat"
    assert _solve(base, [FNe(EProj(2, PII, EVar(p)), EInt(4))]) == "unsat"


def test_outcome_constructors_mutually_exclusive():
    x = LogVar("x", INT)
    assert _solve([], [FEq(EVar(x), EFail(INT)),
                       FEq(EVar(x), ENil(INT))]) == "unsat"
    assert _solve([], [FIsVal(EVar(x)), FEq(EVar(x), EFail(INT))]) == "unsat"


def test_pair_properness_is_component_wise():
    p = LogVar("p", PII)
    # a pair whose component is the component-sort Fail is not a proper value
    bad = FEq(EVar(p), EPair(PII, EFail(INT), EInt(0)))
    assert _solve([], [FIsVal(EVar(p)), bad]) == "unsat"
    good = FEq(EVar(p), EPair(PII, EInt(1), EInt(0)))
    assert _solve([], [FIsVal(EVar(p)), good]) == "sat"
