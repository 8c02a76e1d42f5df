"""Solver orchestration: queries, verdicts, models, replay, iteration."""

import shutil

import pytest

from hobmc.checker import (
    BoundReached, CheckError, FAIL_REACH, MFAIL, MMeth, MNIL, MPair,
    ModelParseError, NIL_REACH, ReturnProp, Sat, SolverCrashed,
    SolverNotFound, SolverTimeout, SolverUnknown, StoreProp, Unsat, Verified,
    bound_iterate, check, check_run, decode_model_value, default_value,
    find_solver, format_model_value, free_inputs, minimize_int_witness,
    parse_model, replay, run_solver,
)
from hobmc.formula import EInt, FCmp, FEq, MethodConst
from hobmc.interp import FailO, NilO
from hobmc.parser import parse_program
from hobmc.syntax import (
    Config, INT, Name, TArrow, TProd, VAR, VInt, VPair, VUnit, Var,
)

II = TArrow(INT, INT)


# --- solver discovery ------------------------------------------------------------

def test_find_solver_env_override(monkeypatch):
    monkeypatch.setenv("HOBMC_SOLVER", "mysolver --flag 'two words'")
    assert find_solver() == ["mysolver", "--flag", "two words"]


def test_find_solver_missing(monkeypatch):
    monkeypatch.delenv("HOBMC_SOLVER", raising=False)
    monkeypatch.setattr(shutil, "which", lambda _: None)
    with pytest.raises(SolverNotFound, match="no SMT solver"):
        find_solver()


# --- the solver subprocess ---------------------------------------------------------

def test_run_solver_sat_and_unsat():
    sat = run_solver("(check-sat)\n")
    assert sat.status == "sat" and sat.model_text is None
    unsat = run_solver("(assert false)\n(check-sat)\n")
    assert unsat.status == "unsat"
    assert unsat.seconds > 0


def test_error_before_verdict_is_a_crash():
    with pytest.raises(SolverCrashed, match="rejected"):
        run_solver("(assert (= undeclared 1))\n(check-sat)\n")


def test_error_after_verdict_is_tolerated():
    # complaining about (get-model) after unsat is chatter, not a crash
    res = run_solver("(assert false)\n(check-sat)\n(get-model)\n")
    assert res.status == "unsat"


def test_no_verdict_is_a_crash():
    with pytest.raises(SolverCrashed, match="no verdict"):
        run_solver("(set-logic ALL)\n")


def test_solver_timeout():
    with pytest.raises(SolverTimeout):
        run_solver("(check-sat)\n", timeout=0.01)


def test_keep_path_writes_the_script(tmp_path):
    p = tmp_path / "out" / "probe.smt2"
    run_solver("(check-sat)\n", keep_path=str(p))
    assert p.read_text() == "(check-sat)\n"


# --- model decoding -------------------------------------------------------------------

def test_parse_model_bare_and_wrapped():
    bare = "((define-fun n () V_int (Int_int (- 3))))"
    assert parse_model(bare) == {"n": VInt(-3)}
    wrapped = "(model (define-fun x () V_int (Int_int 7)))"
    assert parse_model(wrapped) == {"x": VInt(7)}


def test_parse_model_compound_values():
    text = """(
      (define-fun p () V_pintint (Pair_pintint (Int_int 1) (Int_int 2)))
      (define-fun u () V_unit Unit_unit)
      (define-fun f () V_aintint (Meth_aintint 1))
      (define-fun bad () V_int Fail_int)
      (define-fun unfinished () V_int (as Nil_int V_int))
      (define-fun mixed () V_pintaintint
        (Pair_pintaintint (Int_int 0) (Meth_aintint 1)))
    )"""
    out = parse_model(text, [MethodConst(1, "inc", II)])
    assert out["p"] == VPair(VInt(1), VInt(2))
    assert out["u"] == VUnit()
    assert out["f"] == MMeth(1, "inc")
    assert out["bad"] is MFAIL
    assert out["unfinished"] is MNIL
    assert out["mixed"] == MPair(VInt(0), MMeth(1, "inc"))


@pytest.mark.parametrize("text", [
    "", "(define-fun n () V_int (Int_int 1)", "atom",
    "((define-fun n (x) V_int (Int_int 1)))",
    "((define-fun n () V_int (Int_int 1))) trailing",
])
def test_parse_model_rejects_malformed(text):
    with pytest.raises(ModelParseError):
        parse_model(text)


def test_decode_rejects_unknown_value():
    with pytest.raises(ModelParseError, match="unrecognized"):
        decode_model_value("Whatever_int")


def test_format_model_value():
    assert format_model_value(VInt(-4)) == "-4"
    assert format_model_value(None) == "unconstrained"
    assert format_model_value(MMeth(2, "inc")) == "inc"
    assert format_model_value(MMeth(2)) == "m2"
    assert format_model_value(MPair(VInt(1), MFAIL)) == "(1, fail)"


# --- checks against corpus programs ------------------------------------------------------

def test_fail_and_nil_both_impossible_without_calls(corpus):
    cfg = corpus["trivial-skip"].config(0)
    assert isinstance(check(cfg, FAIL_REACH), Unsat)
    assert isinstance(check(cfg, NIL_REACH), Unsat)


def test_failure_witness_comes_with_a_model(corpus):
    cfg = corpus["mc91-e"].config(1)
    v = check(cfg, FAIL_REACH)
    assert isinstance(v, Sat)
    assert v.model["ret"] is MFAIL
    n = v.model["n"]
    assert isinstance(n, VInt)
    assert replay(cfg, v.model) == FailO()
    assert "sat at k=1" in str(v)


def test_replay_defaults_unconstrained_inputs(corpus):
    cfg = corpus["mc91-e"].config(1)
    out = replay(cfg, {})  # n defaults to 0: runs out of budget
    assert out == NilO()
    with pytest.raises(CheckError, match="non-value"):
        replay(cfg, {"n": MFAIL})


def test_fix_pins_an_input(corpus):
    cfg = corpus["mc91-e"].config(1)
    assert isinstance(check(cfg, FAIL_REACH, fix={"n": 102}), Sat)
    assert isinstance(check(cfg, FAIL_REACH, fix={"n": 50}), Unsat)
    with pytest.raises(CheckError, match="not a free variable"):
        check(cfg, FAIL_REACH, fix={"zzz": 1})


def test_return_property():
    prog = parse_program("Methods:\nMain (n:int) =\n  n + 1\n")
    cfg = prog.config(0)
    gt5 = ReturnProp(lambda r: FCmp(">", r, EInt(5)))
    assert isinstance(check(cfg, gt5), Sat)  # n = 0 returns 1
    assert isinstance(check(cfg, gt5, fix={"n": 5}), Unsat)


def test_store_properties_combine(corpus):
    cfg = corpus["incr-assert-e"].config(3)
    fx = {"n": 1, "r0": 0}
    is1 = StoreProp("r", lambda e: FEq(e, EInt(1)))
    nonneg = StoreProp("r", lambda e: FCmp(">=", e, EInt(0)))
    assert isinstance(check(cfg, is1, fix=fx), Unsat)
    assert isinstance(check(cfg, [is1, nonneg], fix=fx), Unsat)
    is0 = StoreProp("r", lambda e: FEq(e, EInt(0)))
    assert isinstance(check(cfg, is0, fix=fx), Sat)
    with pytest.raises(CheckError, match="only store properties"):
        check(cfg, [is1, FAIL_REACH], fix=fx)
    with pytest.raises(CheckError, match="empty mode"):
        check(cfg, [], fix=fx)
    with pytest.raises(CheckError, match="no reference named"):
        check(cfg, StoreProp("q", lambda e: FEq(e, EInt(0))), fix=fx)


def test_check_run_keeps_the_script(corpus, tmp_path):
    p = tmp_path / "q.smt2"
    run = check_run(corpus["trivial-skip"].config(0), FAIL_REACH,
                    keep_smt=str(p))
    assert isinstance(run.verdict, Unsat)
    assert p.read_text() == run.script
    assert run.script.startswith("(set-logic ALL)")


def test_free_arrow_input_rejected():
    cfg = Config(Var(Name(VAR, "f", II)), {}, {}, 1)
    with pytest.raises(CheckError, match="non-ground"):
        free_inputs(cfg)


def test_default_value():
    assert default_value(INT) == VInt(0)
    assert default_value(TProd(INT, INT)) == VPair(VInt(0), VInt(0))
    with pytest.raises(CheckError, match="no default"):
        default_value(II)


# --- bound iteration -----------------------------------------------------------------------

def test_iteration_verifies_call_free_programs_immediately(corpus):
    v, log = bound_iterate(corpus["trivial-skip"].config(0), kmax=5)
    assert v == Verified(0)
    assert len(log) == 1
    assert isinstance(log[0].fail_verdict, Unsat)
    assert isinstance(log[0].nil_verdict, Unsat)
    assert "verified at k=0" in str(v)


def test_iteration_stops_at_first_counterexample(corpus):
    v, log = bound_iterate(corpus["mc91-e"].config(0), kmax=3)
    assert isinstance(v, Sat) and v.bound == 1
    assert len(log) == 2
    assert isinstance(log[0].fail_verdict, Unsat)
    assert log[1].nil_verdict is None  # failure already decided k=1


def test_iteration_exhausts_the_budget_inconclusively(corpus):
    v, log = bound_iterate(corpus["triangular"].config(0), kmax=1)
    assert v == BoundReached(1)
    assert len(log) == 2
    assert "inconclusive" in str(v)


# --- witness minimization --------------------------------------------------------------------

def test_minimize_finds_the_least_failing_input(corpus):
    cfg = corpus["incr-assert-e"].config(2)
    got = minimize_int_witness(cfg, FAIL_REACH, "n", fix={"r0": 1})
    assert got is not None
    n, model = got
    assert n == 0
    assert replay(cfg, dict(model) | {"n": VInt(0)}) == FailO()


def test_minimize_returns_none_when_unsat(corpus):
    cfg = corpus["incr-assert-e"].config(2)
    assert minimize_int_witness(cfg, FAIL_REACH, "n", fix={"r0": 0}) is None
    with pytest.raises(CheckError, match="not a free integer input"):
        minimize_int_witness(cfg, FAIL_REACH, "zzz")


def test_verdict_strings():
    assert str(Unsat(2)) == "unsat at k=2"
    assert str(SolverUnknown("timeout", 3)) == "unknown at k=3: timeout"
    s = Sat({"n": VInt(102), "ret": MFAIL}, 1)
    assert str(s) == "sat at k=1: n = 102; ret = fail"
