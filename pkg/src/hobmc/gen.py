"""Deterministic generation of small well-typed programs.

The differential test harness needs a steady supply of closed programs
that exercise every construct the translation handles: higher-order
applications with several same-typed candidates, functions parked in and
read back out of references, pairs and projections, recursion through
``letrec`` and through the method repository, assertion failures, and
plain arithmetic.  This module produces such programs from a seed.

Programs are emitted as surface text and elaborated by the regular
parser, so a generated program satisfies exactly the invariants a
hand-written one does (well-typed, closed, Barendregt-renamed, ground
inputs).  Generation is a pure function of the seed.

Two deliberate restrictions keep generated programs usable as
differential-oracle inputs:

* no ``div``/``mod``: the evaluator treats division by zero as a runtime
  error while the solver leaves it unconstrained, so the two sides would
  disagree on programs that divide by zero;
* ``Main`` always has the single input ``n : int`` and returns ``int``,
  which keeps result comparison uniform across the whole corpus.
"""

from __future__ import annotations

import random
from typing import Optional

from .parser import Program, parse_program

__all__ = ["gen_source", "gen_program"]


# Type keys used internally; the generator's whole type universe.
_INT = "int"
_PAIR = "pair"
_FUN = "fun"  # int -> int
_UNIT = "unit"

_TYPE_SYNTAX = {
    _INT: "int",
    _PAIR: "(int * int)",
    _FUN: "(int -> int)",
    _UNIT: "unit",
}

# (argument, result) signatures a generated method may have, with weights.
_SIG_CHOICES = [
    (5.0, (_INT, _INT)),
    (2.0, (_PAIR, _INT)),
    (2.0, (_INT, _UNIT)),
    (1.5, (_INT, _FUN)),
    (1.5, (_FUN, _INT)),
]

_CMP_OPS = ["=", "<>", "<", "<=", ">", ">="]
_ARITH_OPS = ["+", "+", "-", "-", "*"]


class _Env:
    """Variables in scope, grouped by type key."""

    __slots__ = ("ints", "pairs", "funs")

    def __init__(self, ints=(), pairs=(), funs=()):
        self.ints = list(ints)
        self.pairs = list(pairs)
        self.funs = list(funs)

    def plus(self, name: str, key: str) -> "_Env":
        env = _Env(self.ints, self.pairs, self.funs)
        if key == _INT:
            env.ints.append(name)
        elif key == _PAIR:
            env.pairs.append(name)
        elif key == _FUN:
            env.funs.append(name)
        return env


class _Gen:
    def __init__(self, seed: int, main_size: Optional[int]):
        self.rng = random.Random(f"hobmc-gen-{seed}")
        self.seed = seed
        self.next_id = 0
        self.main_size = main_size
        # (name, argument key, result key) per method, fixed before bodies
        # are generated so methods can call each other.
        self.meths: list[tuple[str, str, str]] = []
        self.int_refs: list[str] = []
        self.fun_ref: Optional[str] = None

    def fresh(self, prefix: str) -> str:
        self.next_id += 1
        return f"{prefix}{self.next_id}"

    def pick(self, weighted):
        pairs = [(w, tag) for w, tag in weighted if w > 0]
        total = sum(w for w, _ in pairs)
        x = self.rng.random() * total
        for w, tag in pairs:
            x -= w
            if x < 0:
                return tag
        return pairs[-1][1]

    def split(self, size: int) -> tuple[int, int]:
        left = self.rng.randint(1, max(1, size - 1))
        return left, max(1, size - left)

    def meths_of(self, arg: str, res: str) -> list[str]:
        return [name for name, a, r in self.meths if a == arg and r == res]

    # -- integers -----------------------------------------------------------

    def int_lit(self) -> str:
        if self.rng.random() < 0.15:
            v = self.rng.randint(-30, 60)
        else:
            v = self.rng.randint(-3, 5)
        return str(v) if v >= 0 else f"(0 - {-v})"

    def int_leaf(self, env: _Env) -> str:
        tag = self.pick([
            (3.0, "lit"),
            (3.0 if env.ints else 0.0, "var"),
            (1.5 if self.int_refs else 0.0, "deref"),
        ])
        if tag == "lit":
            return self.int_lit()
        if tag == "var":
            return self.rng.choice(env.ints)
        return f"!{self.rng.choice(self.int_refs)}"

    def t_int(self, env: _Env, size: int) -> str:
        if size <= 1:
            return self.int_leaf(env)
        ii_meths = self.meths_of(_INT, _INT)
        head_ok = bool(ii_meths or env.funs or self.fun_ref)
        tag = self.pick([
            (4.0, "arith"),
            (2.0, "cmp"),
            (1.0, "bool"),
            (3.0, "if"),
            (2.0, "let"),
            (3.0 if head_ok else 0.0, "app"),
            (1.0 if self.meths_of(_PAIR, _INT) else 0.0, "papp"),
            (0.7 if self.meths_of(_INT, _FUN) else 0.0, "happ"),
            (1.2 if self.meths_of(_FUN, _INT) else 0.0, "fapp"),
            (1.0, "proj"),
            (2.0, "seq"),
            (1.0 if size >= 4 else 0.0, "letrec"),
            (0.25, "fail"),
        ])
        a, b = self.split(size - 1)
        if tag == "arith":
            op = self.rng.choice(_ARITH_OPS)
            return f"({self.t_int(env, a)} {op} {self.t_int(env, b)})"
        if tag == "cmp":
            op = self.rng.choice(_CMP_OPS)
            # the parser accepts both spellings of equality
            if op == "=" and self.rng.random() < 0.3:
                op = "=="
            return f"({self.t_int(env, a)} {op} {self.t_int(env, b)})"
        if tag == "bool":
            op = self.rng.choice(["&&", "||"])
            return f"({self.t_int(env, a)} {op} {self.t_int(env, b)})"
        if tag == "if":
            c, rest = self.split(size - 1)
            t, e = self.split(rest)
            return (f"(if {self.t_int(env, c)} then {self.t_int(env, t)} "
                    f"else {self.t_int(env, e)})")
        if tag == "let":
            return self.gen_let(env, size, self.t_int)
        if tag == "app":
            return f"({self.fun_head(env, a)} {self.t_int(env, b)})"
        if tag == "papp":
            m = self.rng.choice(self.meths_of(_PAIR, _INT))
            return f"({m} {self.t_pair(env, size - 1)})"
        if tag == "happ":
            m = self.rng.choice(self.meths_of(_INT, _FUN))
            return f"(({m} {self.t_int(env, a)}) {self.t_int(env, b)})"
        if tag == "fapp":
            m = self.rng.choice(self.meths_of(_FUN, _INT))
            return f"({m} {self.t_fun(env, size - 1)})"
        if tag == "proj":
            proj = self.rng.choice(["fst", "snd"])
            return f"({proj}:(int) {self.t_pair(env, size - 1)})"
        if tag == "seq":
            return f"({self.t_unit(env, a)}; {self.t_int(env, b)})"
        if tag == "letrec":
            return self.gen_letrec(env, size, self.t_int)
        return "fail:(int)"

    # -- pairs --------------------------------------------------------------

    def t_pair(self, env: _Env, size: int) -> str:
        if size <= 1:
            if env.pairs and self.rng.random() < 0.5:
                return self.rng.choice(env.pairs)
            return f"({self.int_lit()}, {self.int_lit()})"
        tag = self.pick([(3.0, "mk"), (1.0, "if"), (1.0, "let")])
        if tag == "mk":
            a, b = self.split(size - 1)
            return f"({self.t_int(env, a)}, {self.t_int(env, b)})"
        if tag == "if":
            c, rest = self.split(size - 1)
            t, e = self.split(rest)
            return (f"(if {self.t_int(env, c)} then {self.t_pair(env, t)} "
                    f"else {self.t_pair(env, e)})")
        return self.gen_let(env, size, self.t_pair)

    # -- functions (int -> int) ----------------------------------------------

    def fun_leaf(self, env: _Env) -> str:
        ii_meths = self.meths_of(_INT, _INT)
        tag = self.pick([
            (2.0 if ii_meths else 0.0, "meth"),
            (2.5 if env.funs else 0.0, "var"),
            (1.5 if self.fun_ref else 0.0, "deref"),
            (1.0, "lam"),
            (0.12, "fail"),
        ])
        if tag == "meth":
            return self.rng.choice(ii_meths)
        if tag == "var":
            return self.rng.choice(env.funs)
        if tag == "deref":
            return f"!{self.fun_ref}"
        if tag == "fail":
            return "fail:((int -> int))"
        x = self.fresh("x")
        return f"(fun ({x}:int) -> ({x} + {self.int_lit()}))"

    def t_fun(self, env: _Env, size: int) -> str:
        if size <= 1:
            return self.fun_leaf(env)
        tag = self.pick([(3.0, "lam"), (1.5, "if"), (1.0, "let")])
        if tag == "lam":
            x = self.fresh("x")
            body = self.t_int(env.plus(x, _INT), size - 1)
            return f"(fun ({x}:int) -> {body})"
        if tag == "if":
            c, rest = self.split(size - 1)
            t, e = self.split(rest)
            return (f"(if {self.t_int(env, c)} then {self.t_fun(env, t)} "
                    f"else {self.t_fun(env, e)})")
        return self.gen_let(env, size, self.t_fun)

    # -- unit ----------------------------------------------------------------

    def t_unit(self, env: _Env, size: int) -> str:
        if size <= 1:
            if self.int_refs and self.rng.random() < 0.4:
                return f"({self.rng.choice(self.int_refs)} := {self.int_lit()})"
            return "()"
        iu_meths = self.meths_of(_INT, _UNIT)
        tag = self.pick([
            (3.0, "assert"),
            (2.0 if self.int_refs else 0.0, "assign"),
            (1.0 if self.fun_ref else 0.0, "fassign"),
            (1.5 if iu_meths else 0.0, "uapp"),
            (2.0, "seq"),
            (1.5, "if"),
            (1.0, "let"),
        ])
        if tag == "assert":
            return f"(assert {self.t_int(env, size - 1)})"
        if tag == "assign":
            r = self.rng.choice(self.int_refs)
            return f"({r} := {self.t_int(env, size - 1)})"
        if tag == "fassign":
            return f"({self.fun_ref} := {self.t_fun(env, size - 1)})"
        if tag == "uapp":
            m = self.rng.choice(iu_meths)
            return f"({m} {self.t_int(env, size - 1)})"
        if tag == "seq":
            a, b = self.split(size - 1)
            return f"({self.t_unit(env, a)}; {self.t_unit(env, b)})"
        if tag == "if":
            c, rest = self.split(size - 1)
            t, e = self.split(rest)
            return (f"(if {self.t_int(env, c)} then {self.t_unit(env, t)} "
                    f"else {self.t_unit(env, e)})")
        return self.gen_let(env, size, self.t_unit)

    # -- shared productions ---------------------------------------------------

    def gen_let(self, env: _Env, size: int, cont) -> str:
        key = self.pick([(4.0, _INT), (1.0, _PAIR), (1.5, _FUN)])
        v = self.fresh("v")
        a, b = self.split(size - 1)
        bound = {_INT: self.t_int, _PAIR: self.t_pair, _FUN: self.t_fun}[key]
        return (f"(let {v} = {bound(env, a)} in "
                f"{cont(env.plus(v, key), b)})")

    def gen_letrec(self, env: _Env, size: int, cont) -> str:
        g = self.fresh("g")
        x = self.fresh("x")
        a, b = self.split(size - 2)
        inner = env.plus(g, _FUN).plus(x, _INT)
        body = self.t_int(inner, a + 1)
        rest = cont(env.plus(g, _FUN), b)
        return f"(letrec {g} ({x}:int) : int = {body} in {rest})"

    def fun_head(self, env: _Env, size: int) -> str:
        """A function-typed expression usable as an application head."""
        ii_meths = self.meths_of(_INT, _INT)
        tag = self.pick([
            (3.0 if ii_meths else 0.0, "meth"),
            (3.0 if env.funs else 0.0, "var"),
            (1.5 if self.fun_ref else 0.0, "deref"),
            (1.0, "expr"),
        ])
        if tag == "meth":
            return self.rng.choice(ii_meths)
        if tag == "var":
            return self.rng.choice(env.funs)
        if tag == "deref":
            return f"!{self.fun_ref}"
        return self.t_fun(env, max(1, size))

    # -- whole programs --------------------------------------------------------

    def method_body(self, name: str, arg_key: str, res_key: str) -> str:
        p = self.fresh("x")
        env = _Env().plus(p, arg_key)
        size = self.rng.randint(5, 9)
        body = {_INT: self.t_int, _PAIR: self.t_pair,
                _FUN: self.t_fun, _UNIT: self.t_unit}[res_key](env, size)
        return (f"  {name} ({p}:{_TYPE_SYNTAX[arg_key]}) : "
                f"{_TYPE_SYNTAX[res_key]} =\n    {body};;")

    def program(self) -> str:
        n_meths = self.pick([(1.0, 0), (3.0, 1), (3.0, 2), (2.0, 3)])
        for _ in range(n_meths):
            arg, res = self.pick(_SIG_CHOICES)
            self.meths.append((self.fresh("f"), arg, res))

        n_int_refs = self.pick([(2.0, 0), (4.0, 1), (2.0, 2)])
        self.int_refs = ["ra", "rb"][:n_int_refs]
        ii_meths = self.meths_of(_INT, _INT)
        if ii_meths and self.rng.random() < 0.45:
            self.fun_ref = "rf"

        lines = []
        if self.int_refs or self.fun_ref:
            lines.append("Refs:")
            for r in self.int_refs:
                lines.append(f"  {r} : int = {self.rng.randint(-2, 4)};;")
            if self.fun_ref:
                init = self.rng.choice(ii_meths)
                lines.append(f"  {self.fun_ref} : (int -> int) = {init};;")
        if self.meths:
            lines.append("Methods:")
            for name, arg, res in self.meths:
                lines.append(self.method_body(name, arg, res))

        env = _Env(ints=["n"])
        size = self.main_size or self.rng.randint(10, 16)
        core = self.t_int(env, size)
        if self.int_refs and self.rng.random() < 0.45:
            core = f"({self.int_refs[0]} := n; {core})"
        lines.append(f"Main (n:int) =\n  {core}")
        return "\n".join(lines) + "\n"


def gen_source(seed: int, *, main_size: Optional[int] = None) -> str:
    """Surface text of the generated program for this seed."""
    header = f"(* generated: seed={seed} *)\n"
    return header + _Gen(seed, main_size).program()


def gen_program(seed: int, *, main_size: Optional[int] = None) -> Program:
    """The elaborated program for this seed."""
    text = gen_source(seed, main_size=main_size)
    prog = parse_program(text, f"<gen seed={seed}>")
    prog.name = f"gen-{seed}"
    return prog
