"""Surface syntax: lexing, precedence, desugaring, elaboration errors."""

import pytest
from hypothesis import given, settings, strategies as st

from hobmc.interp import FailO, ValueO, evaluate
from hobmc.parser import ParseError, Program, parse_program, parse_term
from hobmc.syntax import (
    INT, UNIT, TArrow, TProd, AppMeth, AppVar, Config, Fail, If, Lam, Let,
    UnitLit, VInt, free_vars, subterms, synth_type,
)

II = TArrow(INT, INT)


def run_int(src: str, **kw) -> int:
    term = parse_term(src, **kw)
    out, _, _ = evaluate(Config(term, {}, {}, 4))
    assert isinstance(out, ValueO), f"expected a value, got {out}"
    return out.value.value


def outcome(src: str, bound: int = 4):
    term = parse_term(src)
    out, _, _ = evaluate(Config(term, {}, {}, bound))
    return out


# --- precedence and operators ---------------------------------------------------

@pytest.mark.parametrize("src,expected", [
    ("1 + 2 * 3", 7),
    ("(1 + 2) * 3", 9),
    ("2 - 3 - 4", -5),              # left-assoc
    ("10 - 2 * 3", 4),
    ("1 < 2", 1),
    ("2 <> 2", 0),
    ("1 <= 0 || 1", 1),             # comparison binds tighter than ||
    ("1 && 0 || 1", 1),             # && tighter than ||
    ("0 - 3", -3),
    ("5 + -2", 3),                  # negative literal at atom position
    ("7 div 2", 3),
    ("-7 div 2", -4),               # Euclidean: remainder non-negative
    ("-7 mod 2", 1),
    ("if 0 then 1 else 2", 2),
    ("if 5 then 1 else 2", 1),      # any non-zero int is true
])
def test_int_expressions(src, expected):
    assert run_int(src) == expected


def test_double_equals_is_equality():
    assert run_int("3 == 3") == 1
    assert run_int("3 = 3") == 1
    assert parse_term("1 == 2") == parse_term("1 = 2")


# --- desugarings -----------------------------------------------------------------

def test_seq_desugars_to_unit_let():
    t = parse_term("(); 4")
    assert isinstance(t, Let)
    assert t.name.typ == UNIT
    assert synth_type(t) == INT


def test_assert_desugars_to_conditional_fail():
    t = parse_term("assert 0")
    assert isinstance(t, If)
    assert isinstance(t.else_branch, Fail)
    assert isinstance(t.then_branch, UnitLit)
    assert isinstance(outcome("assert 0"), FailO)
    assert isinstance(outcome("assert 1"), ValueO)


def test_compound_application_head_is_let_bound():
    # the application head must end up a plain name; a lambda in head
    # position is let-bound first
    t = parse_term("(fun (x:int) -> x + 1) 41")
    assert synth_type(t) == INT
    heads = [s for s in subterms(t) if isinstance(s, (AppVar, AppMeth))]
    assert heads, "application survived elaboration"
    out, _, _ = evaluate(Config(t, {}, {}, 4))
    assert out == ValueO(VInt(42))


def test_conditional_function_head():
    src = "(if 0 then (fun (x:int) -> x) else (fun (y:int) -> y * 2)) 21"
    assert run_int(src) == 42


def test_projection_annotation_is_component_type():
    from hobmc.parser import ElabError

    assert run_int("fst:(int) (4, 5)") == 4
    assert run_int("snd:(int) (4, 5)") == 5
    with pytest.raises(ElabError, match="component has type int"):
        parse_term("fst:(unit) (4, 5)")


def test_fail_needs_type_ascription():
    t = parse_term("fail:(int)")
    assert synth_type(t) == INT
    with pytest.raises(ParseError):
        parse_term("nil")  # internal outcome, no surface syntax


# --- comments and lexing -----------------------------------------------------------

def test_comments_nest():
    assert run_int("1 + (* one (* nested *) comment *) 2") == 3


def test_unterminated_comment_is_an_error():
    with pytest.raises(ParseError):
        parse_term("1 (* oops")


def test_error_position_is_reported():
    with pytest.raises(ParseError) as exc:
        parse_term("1 +\n  ?")
    assert "2" in str(exc.value)  # line number


# --- programs ------------------------------------------------------------------------

GOOD = """
(* a tiny but complete program *)
Refs:
  c : int = 0;;
  h : (int -> int) = inc;;
Methods:
  inc (x:int) : int = x + 1;;
Main (n:int) =
  c := inc n;
  assert (!c > n)
"""


def test_parse_program_shape():
    prog = parse_program(GOOD, "good.bmc")
    assert isinstance(prog, Program)
    assert [x.ident for x in prog.inputs] == ["n"]
    assert sorted(m.ident for m in prog.repo) == ["inc"]
    assert sorted(r.ident for r in prog.store) == ["c", "h"]
    assert free_vars(prog.term) == set(prog.inputs)


def test_program_sections_optional():
    prog = parse_program("Main (n:int) = n + 1", "min.bmc")
    assert not prog.repo and not prog.store


@pytest.mark.parametrize("src,fragment", [
    ("Methods:\n  f (x:int) : int = x;;\n  f (y:int) : int = y;;\nMain (n:int) = 0",
     "duplicate"),
    ("Main (ret7:int) = 0", "reserved"),
    ("Main (n:(int -> int)) = 0", "ground"),
    ("Refs:\n  r : int = ();;\nMain (n:int) = 0", " "),
    ("Main (n:int) = x + 1", "x"),
    ("Main (n:int) = (); ()", None),       # ok: seq of units
    ("Main (n:int) = 1; ()", "unit"),      # seq left side must be unit
    ("Main (n:int) = r := 1", "unknown reference"),
    ("Main (n:int) = assert ()", "int"),
])
def test_program_errors(src, fragment):
    from hobmc.syntax import HobmcError

    if fragment is None:
        parse_program(src, "ok.bmc")
        return
    with pytest.raises(HobmcError) as exc:
        parse_program(src, "bad.bmc")
    assert fragment.strip() == "" or fragment in str(exc.value)


def test_store_literal_method_name():
    prog = parse_program(GOOD, "good.bmc")
    h = next(r for r in prog.store if r.ident == "h")
    from hobmc.syntax import VMeth

    assert isinstance(prog.store[h], VMeth)
    assert prog.store[h].name.ident == "inc"


def test_store_literal_must_be_declared():
    src = "Refs:\n  h : (int -> int) = nosuch;;\nMain (n:int) = 0"
    with pytest.raises(Exception):
        parse_program(src, "bad.bmc")


def test_binders_renamed_apart():
    from hobmc.syntax import binder_idents

    prog = parse_program(
        "Main (n:int) = let x = 1 in (let y = 2 in x + y)", "b.bmc")
    idents = binder_idents(prog.term)
    assert len(idents) == len(set(idents))


# --- generated programs parse deterministically -------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=100_000))
def test_generated_sources_parse(seed):
    from hobmc.gen import gen_program, gen_source

    src = gen_source(seed)
    assert src == gen_source(seed)
    prog = gen_program(seed)
    assert [x.ident for x in prog.inputs] == ["n"]
