"""Concrete syntax (.bmc files): lexer, parser, elaboration to core terms.

A program file has up to three sections, in this order:

    Refs:
      r : int = 0;;
    Methods:
      inc (x:int) : int = x + 1;;
    Main (n:int) =
      assert (inc n > n)

`Refs:` declares the global store (initial values are literals: integers,
`()`, pairs of literals, or the name of a declared method).  `Methods:`
declares the initial method repository.  `Main` gives the term to check;
its parameters are the program's symbolic inputs and must have ground type.
Declarations inside Refs/Methods end with `;;`.

Elaboration turns the surface syntax into the canonical core of
hobmc.syntax: sequencing becomes a unit-typed let, `assert M` becomes
`if M then () else fail`, every application head becomes a name by
let-binding compound function expressions, and binders are renamed apart
(Barendregt) so later stages can substitute without capture checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .syntax import (
    INT, UNIT, TArrow, TProd, Type, TUnit, TInt,
    Name, Term, Value, Lam, Var, Meth as MethTerm, IntLit, UnitLit, Fail,
    Pair, Proj, AppVar, AppMeth, BinOp, If, Let, Letrec, Deref, Assign,
    VInt, VUnit, VMeth, VPair,
    Config, HobmcError, barendregt, binder_idents, fresh_ident, ident_ok,
    is_ground, meth, pretty, ref, type_str, validate_config, value_type, var,
    BINOPS, VAR, METH, REF,
)


class ParseError(HobmcError):
    def __init__(self, msg: str, line: int, col: int, path: str = "<string>"):
        super().__init__(f"{path}:{line}:{col}: {msg}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # 'int', 'ident', a keyword, or a symbol like ':='
    text: str
    line: int
    col: int


_SYMBOLS = [
    ";;", ":=", "->", "<>", "<=", ">=", "&&", "||", "==",
    "(", ")", ",", ";", ":", "!", "=", "<", ">", "+", "-", "*",
]

_KEYWORD_TOKENS = {
    "let", "letrec", "in", "if", "then", "else", "fun", "assert",
    "fail", "nil", "fst", "snd", "div", "mod", "unit", "int",
    "Refs", "Methods", "Main",
}


def lex(text: str, path: str = "<string>") -> list[Token]:
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("(*", i):
            start_line, start_col = line, col
            depth = 0
            while i < n:
                if text.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif text.startswith("*)", i):
                    depth -= 1
                    advance(2)
                    if depth == 0:
                        break
                else:
                    advance(1)
            if depth != 0:
                raise ParseError("unterminated comment", start_line, start_col, path)
            continue
        if c.isdigit():
            start_line, start_col = line, col
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], start_line, start_col))
            advance(j - i)
            continue
        if c.isalpha():
            start_line, start_col = line, col
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            word = text[i:j]
            kind = word if word in _KEYWORD_TOKENS else "ident"
            toks.append(Token(kind, word, start_line, start_col))
            advance(j - i)
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                # `==` is an accepted spelling of `=` in comparisons
                kind = "=" if sym == "==" else sym
                toks.append(Token(kind, sym, line, col))
                advance(len(sym))
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col, path)
    toks.append(Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Surface AST (scopes and types not yet resolved)
# ---------------------------------------------------------------------------


class SurfaceTerm:
    __slots__ = ("line", "col")

    def __init__(self, tok: Token):
        self.line = tok.line
        self.col = tok.col


class SInt(SurfaceTerm):
    def __init__(self, tok: Token, value: int):
        super().__init__(tok)
        self.value = value


class SUnit(SurfaceTerm):
    pass


class SVar(SurfaceTerm):
    def __init__(self, tok: Token, ident: str):
        super().__init__(tok)
        self.ident = ident


class SFail(SurfaceTerm):
    def __init__(self, tok: Token, typ: Type):
        super().__init__(tok)
        self.typ = typ


class SPair(SurfaceTerm):
    def __init__(self, tok: Token, fst: SurfaceTerm, snd: SurfaceTerm):
        super().__init__(tok)
        self.fst = fst
        self.snd = snd


class SProj(SurfaceTerm):
    def __init__(self, tok: Token, index: int, typ: Type, arg: SurfaceTerm):
        super().__init__(tok)
        self.index = index
        self.typ = typ
        self.arg = arg


class SLam(SurfaceTerm):
    def __init__(self, tok: Token, param: str, ptyp: Type, body: SurfaceTerm):
        super().__init__(tok)
        self.param = param
        self.ptyp = ptyp
        self.body = body


class SApp(SurfaceTerm):
    def __init__(self, tok: Token, fn: SurfaceTerm, arg: SurfaceTerm):
        super().__init__(tok)
        self.fn = fn
        self.arg = arg


class SBinOp(SurfaceTerm):
    def __init__(self, tok: Token, op: str, left: SurfaceTerm, right: SurfaceTerm):
        super().__init__(tok)
        self.op = op
        self.left = left
        self.right = right


class SIf(SurfaceTerm):
    def __init__(self, tok: Token, cond: SurfaceTerm, then_b: SurfaceTerm, else_b: SurfaceTerm):
        super().__init__(tok)
        self.cond = cond
        self.then_b = then_b
        self.else_b = else_b


class SLet(SurfaceTerm):
    def __init__(self, tok: Token, ident: str, bound: SurfaceTerm, body: SurfaceTerm):
        super().__init__(tok)
        self.ident = ident
        self.bound = bound
        self.body = body


class SLetrec(SurfaceTerm):
    def __init__(self, tok: Token, ident: str, param: str, ptyp: Type,
                 rtyp: Type, fbody: SurfaceTerm, body: SurfaceTerm):
        super().__init__(tok)
        self.ident = ident
        self.param = param
        self.ptyp = ptyp
        self.rtyp = rtyp
        self.fbody = fbody
        self.body = body


class SDeref(SurfaceTerm):
    def __init__(self, tok: Token, ident: str):
        super().__init__(tok)
        self.ident = ident


class SAssign(SurfaceTerm):
    def __init__(self, tok: Token, ident: str, value: SurfaceTerm):
        super().__init__(tok)
        self.ident = ident
        self.value = value


class SSeq(SurfaceTerm):
    def __init__(self, tok: Token, first: SurfaceTerm, second: SurfaceTerm):
        super().__init__(tok)
        self.first = first
        self.second = second


class SAssert(SurfaceTerm):
    def __init__(self, tok: Token, cond: SurfaceTerm):
        super().__init__(tok)
        self.cond = cond


# Store literals before method-name resolution
SLit = Union[int, tuple, str, None]  # int | () marker | (SLit, SLit) | ident


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_ATOM_START = {"int", "ident", "(", "!", "fail", "nil"}


class _Parser:
    def __init__(self, toks: list[Token], path: str):
        self.toks = toks
        self.pos = 0
        self.path = path

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok)
        return self.next()

    def fail(self, msg: str, tok: Optional[Token] = None) -> None:
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col, self.path)

    # -- types --------------------------------------------------------------

    def parse_type(self) -> Type:
        left = self.parse_prod_type()
        if self.peek().kind == "->":
            self.next()
            return TArrow(left, self.parse_type())
        return left

    def parse_prod_type(self) -> Type:
        left = self.parse_atom_type()
        if self.peek().kind == "*":
            self.next()
            right = self.parse_atom_type()
            if self.peek().kind == "*":
                self.fail("nested products need parentheses, e.g. (int * int) * int")
            return TProd(left, right)
        return left

    def parse_atom_type(self) -> Type:
        tok = self.peek()
        if tok.kind == "unit":
            self.next()
            return UNIT
        if tok.kind == "int":
            self.next()
            return INT
        if tok.kind == "(":
            self.next()
            t = self.parse_type()
            self.expect(")")
            return t
        self.fail(f"expected a type, found {tok.text!r}", tok)
        raise AssertionError  # unreachable

    # -- terms --------------------------------------------------------------

    def parse_term(self) -> SurfaceTerm:
        first = self.parse_term1()
        if self.peek().kind == ";":
            tok = self.next()
            return SSeq(tok, first, self.parse_term())
        return first

    def parse_term1(self) -> SurfaceTerm:
        tok = self.peek()
        if tok.kind == "let":
            self.next()
            ident = self.binder_ident()
            self.expect("=")
            bound = self.parse_term1()
            self.expect("in")
            body = self.parse_term()
            return SLet(tok, ident, bound, body)
        if tok.kind == "letrec":
            self.next()
            ident = self.binder_ident()
            self.expect("(")
            param = self.binder_ident()
            self.expect(":")
            ptyp = self.parse_type()
            self.expect(")")
            self.expect(":")
            rtyp = self.parse_type()
            self.expect("=")
            fbody = self.parse_term1()
            self.expect("in")
            body = self.parse_term()
            return SLetrec(tok, ident, param, ptyp, rtyp, fbody, body)
        if tok.kind == "fun":
            self.next()
            self.expect("(")
            param = self.binder_ident()
            self.expect(":")
            ptyp = self.parse_type()
            self.expect(")")
            self.expect("->")
            body = self.parse_term()
            return SLam(tok, param, ptyp, body)
        if tok.kind == "if":
            self.next()
            cond = self.parse_term1()
            self.expect("then")
            then_b = self.parse_term1()
            self.expect("else")
            else_b = self.parse_term1()
            return SIf(tok, cond, then_b, else_b)
        if tok.kind == "assert":
            self.next()
            return SAssert(tok, self.parse_term1())
        if tok.kind == "ident" and self.peek(1).kind == ":=":
            ident_tok = self.next()
            self.next()  # :=
            return SAssign(ident_tok, ident_tok.text, self.parse_term1())
        return self.parse_or()

    def binder_ident(self) -> str:
        tok = self.expect("ident")
        if not ident_ok(tok.text):
            self.fail(
                f"identifier {tok.text!r} is reserved (ret<n>, m<n>, trailing "
                f"_<n> and leading _ are machine-generated shapes)", tok)
        return tok.text

    def _binop_chain(self, sub, ops: set[str]) -> SurfaceTerm:
        left = sub()
        while self.peek().kind in ops:
            tok = self.next()
            left = SBinOp(tok, tok.kind, left, sub())
        return left

    def parse_or(self) -> SurfaceTerm:
        return self._binop_chain(self.parse_and, {"||"})

    def parse_and(self) -> SurfaceTerm:
        return self._binop_chain(self.parse_cmp, {"&&"})

    def parse_cmp(self) -> SurfaceTerm:
        return self._binop_chain(self.parse_add, {"=", "<>", "<", "<=", ">", ">="})

    def parse_add(self) -> SurfaceTerm:
        return self._binop_chain(self.parse_mul, {"+", "-"})

    def parse_mul(self) -> SurfaceTerm:
        return self._binop_chain(self.parse_app, {"*", "div", "mod"})

    def parse_app(self) -> SurfaceTerm:
        tok = self.peek()
        if tok.kind in ("fst", "snd"):
            self.next()
            self.expect(":")
            self.expect("(")
            typ = self.parse_type()
            self.expect(")")
            arg = self.parse_atom()
            fn: SurfaceTerm = SProj(tok, 1 if tok.kind == "fst" else 2, typ, arg)
        else:
            fn = self.parse_atom()
        while self.peek().kind in _ATOM_START:
            tok = self.peek()
            fn = SApp(tok, fn, self.parse_atom())
        return fn

    def parse_atom(self) -> SurfaceTerm:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return SInt(tok, int(tok.text))
        if tok.kind == "-" and self.peek(1).kind == "int":
            self.next()
            lit = self.next()
            return SInt(tok, -int(lit.text))
        if tok.kind == "ident":
            self.next()
            return SVar(tok, tok.text)
        if tok.kind == "!":
            self.next()
            ident = self.expect("ident")
            return SDeref(tok, ident.text)
        if tok.kind == "fail":
            self.next()
            self.expect(":")
            self.expect("(")
            typ = self.parse_type()
            self.expect(")")
            return SFail(tok, typ)
        if tok.kind == "nil":
            self.fail("nil is internal to the checker and has no surface syntax", tok)
        if tok.kind == "(":
            self.next()
            if self.peek().kind == ")":
                self.next()
                return SUnit(tok)
            first = self.parse_term()
            if self.peek().kind == ",":
                self.next()
                second = self.parse_term()
                self.expect(")")
                return SPair(tok, first, second)
            self.expect(")")
            return first
        self.fail(f"expected a term, found {tok.text or 'end of input'!r}", tok)
        raise AssertionError  # unreachable

    # -- store literals ------------------------------------------------------

    def parse_store_lit(self):
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return int(tok.text)
        if tok.kind == "-" and self.peek(1).kind == "int":
            self.next()
            lit = self.next()
            return -int(lit.text)
        if tok.kind == "ident":
            self.next()
            return tok.text
        if tok.kind == "(":
            self.next()
            if self.peek().kind == ")":
                self.next()
                return ()
            first = self.parse_store_lit()
            self.expect(",")
            second = self.parse_store_lit()
            self.expect(")")
            return (first, second)
        self.fail("expected a store literal (integer, (), pair, or method name)", tok)

    # -- program -------------------------------------------------------------

    def parse_program(self):
        refs: list[tuple[Token, str, Type, SLit]] = []
        methods: list[tuple[Token, str, str, Type, Type, SurfaceTerm]] = []
        if self.peek().kind == "Refs":
            self.next()
            self.expect(":")
            while self.peek().kind == "ident":
                tok = self.peek()
                ident = self.binder_ident()
                self.expect(":")
                typ = self.parse_type()
                self.expect("=")
                lit = self.parse_store_lit()
                self.expect(";;")
                refs.append((tok, ident, typ, lit))
        if self.peek().kind == "Methods":
            self.next()
            self.expect(":")
            while self.peek().kind == "ident":
                tok = self.peek()
                ident = self.binder_ident()
                self.expect("(")
                param = self.binder_ident()
                self.expect(":")
                ptyp = self.parse_type()
                self.expect(")")
                self.expect(":")
                rtyp = self.parse_type()
                self.expect("=")
                body = self.parse_term()
                self.expect(";;")
                methods.append((tok, ident, param, ptyp, rtyp, body))
        main_tok = self.expect("Main")
        self.expect("(")
        params: list[tuple[Token, str, Type]] = []
        if self.peek().kind != ")":
            while True:
                ptok = self.peek()
                ident = self.binder_ident()
                self.expect(":")
                typ = self.parse_type()
                params.append((ptok, ident, typ))
                if self.peek().kind != ",":
                    break
                self.next()
        self.expect(")")
        self.expect("=")
        body = self.parse_term()
        if self.peek().kind == ";;":
            self.next()
        if self.peek().kind != "eof":
            self.fail("trailing input after Main body")
        return refs, methods, main_tok, params, body


# ---------------------------------------------------------------------------
# Elaboration: surface AST -> core terms
# ---------------------------------------------------------------------------


class ElabError(HobmcError):
    pass


@dataclass
class Program:
    """An elaborated, validated program ready for checking or running."""

    term: Term
    repo: dict[Name, Lam]
    store: dict[Name, Value]
    inputs: tuple[Name, ...]
    name: str = "<program>"

    def config(self, bound: int) -> Config:
        return Config(self.term, dict(self.repo), dict(self.store), bound)


class _Elab:
    def __init__(self, meths: Mapping[str, Name], refs: Mapping[str, Name],
                 used_idents: set[str], path: str):
        self.meths = dict(meths)
        self.refs = dict(refs)
        self.used = used_idents
        self.path = path

    def err(self, s: SurfaceTerm, msg: str) -> None:
        raise ElabError(f"{self.path}:{s.line}:{s.col}: {msg}")

    def fresh_var(self, base: str, typ: Type) -> Name:
        ident = fresh_ident(base, self.used)
        self.used.add(ident)
        return var(ident, typ)

    def elab(self, s: SurfaceTerm, env: Mapping[str, Name]) -> tuple[Term, Type]:
        if isinstance(s, SInt):
            return IntLit(s.value), INT
        if isinstance(s, SUnit):
            return UnitLit(), UNIT
        if isinstance(s, SFail):
            return Fail(s.typ), s.typ
        if isinstance(s, SVar):
            if s.ident in env:
                n = env[s.ident]
                return Var(n), n.typ
            if s.ident in self.meths:
                n = self.meths[s.ident]
                return MethTerm(n), n.typ
            if s.ident in self.refs:
                self.err(s, f"reference {s.ident} cannot be used as a value; "
                            f"use !{s.ident} to read it")
            self.err(s, f"unbound identifier {s.ident}")
        if isinstance(s, SPair):
            a, ta = self.elab(s.fst, env)
            b, tb = self.elab(s.snd, env)
            return Pair(a, b), TProd(ta, tb)
        if isinstance(s, SProj):
            a, ta = self.elab(s.arg, env)
            if not isinstance(ta, TProd):
                self.err(s, f"projection from non-pair type {type_str(ta)}")
            comp = ta.left if s.index == 1 else ta.right
            if comp != s.typ:
                self.err(s, f"projection annotated {type_str(s.typ)} but the "
                            f"component has type {type_str(comp)}")
            return Proj(s.index, s.typ, a), comp
        if isinstance(s, SLam):
            p = var(s.param, s.ptyp)
            inner = dict(env)
            inner[s.param] = p
            body, tb = self.elab(s.body, inner)
            lt = TArrow(s.ptyp, tb)
            return Lam(p, body, lt), lt
        if isinstance(s, SApp):
            fn, tf = self.elab(s.fn, env)
            if not isinstance(tf, TArrow):
                self.err(s, f"application of a non-function ({type_str(tf)})")
            arg, ta = self.elab(s.arg, env)
            if ta != tf.arg:
                self.err(s, f"argument has type {type_str(ta)}, expected "
                            f"{type_str(tf.arg)}")
            if isinstance(fn, Var):
                return AppVar(fn.name, arg), tf.res
            if isinstance(fn, MethTerm):
                return AppMeth(fn.name, arg), tf.res
            tmp = self.fresh_var("tmp", tf)
            return Let(tmp, fn, AppVar(tmp, arg)), tf.res
        if isinstance(s, SBinOp):
            l, tl = self.elab(s.left, env)
            r, tr = self.elab(s.right, env)
            if tl != INT or tr != INT:
                self.err(s, f"operator {s.op} needs int operands "
                            f"(got {type_str(tl)} and {type_str(tr)})")
            return BinOp(s.op, l, r), INT
        if isinstance(s, SIf):
            c, tc = self.elab(s.cond, env)
            if tc != INT:
                self.err(s, f"condition has type {type_str(tc)}, expected int")
            t, tt = self.elab(s.then_b, env)
            e, te = self.elab(s.else_b, env)
            if tt != te:
                self.err(s, f"branches differ: {type_str(tt)} vs {type_str(te)}")
            return If(c, t, e), tt
        if isinstance(s, SLet):
            bound, tb = self.elab(s.bound, env)
            x = var(s.ident, tb)
            inner = dict(env)
            inner[s.ident] = x
            body, tr = self.elab(s.body, inner)
            return Let(x, bound, body), tr
        if isinstance(s, SLetrec):
            ft = TArrow(s.ptyp, s.rtyp)
            f = var(s.ident, ft)
            p = var(s.param, s.ptyp)
            inner = dict(env)
            inner[s.ident] = f
            inner[s.param] = p
            fbody, tb = self.elab(s.fbody, inner)
            if tb != s.rtyp:
                self.err(s, f"letrec body has type {type_str(tb)}, declared "
                            f"{type_str(s.rtyp)}")
            outer = dict(env)
            outer[s.ident] = f
            body, tr = self.elab(s.body, outer)
            return Letrec(f, Lam(p, fbody, ft), body), tr
        if isinstance(s, SDeref):
            if s.ident not in self.refs:
                self.err(s, f"unknown reference {s.ident}")
            n = self.refs[s.ident]
            return Deref(n), n.typ
        if isinstance(s, SAssign):
            if s.ident not in self.refs:
                self.err(s, f"unknown reference {s.ident}")
            n = self.refs[s.ident]
            v, tv = self.elab(s.value, env)
            if tv != n.typ:
                self.err(s, f"assigning {type_str(tv)} to {s.ident} : "
                            f"{type_str(n.typ)}")
            return Assign(n, v), UNIT
        if isinstance(s, SSeq):
            first, tf = self.elab(s.first, env)
            if tf != UNIT:
                self.err(s, f"left side of ';' must have type unit, got "
                            f"{type_str(tf)}")
            tmp = self.fresh_var("tmp", UNIT)
            second, ts = self.elab(s.second, env)
            return Let(tmp, first, second), ts
        if isinstance(s, SAssert):
            c, tc = self.elab(s.cond, env)
            if tc != INT:
                self.err(s, f"assert needs an int condition, got {type_str(tc)}")
            return If(c, UnitLit(), Fail(UNIT)), UNIT
        raise TypeError(f"not a surface term: {s!r}")


def _collect_idents(toks: list[Token]) -> set[str]:
    return {t.text for t in toks if t.kind == "ident"}


def parse_program(text: str, path: str = "<string>") -> Program:
    toks = lex(text, path)
    parser = _Parser(toks, path)
    refs_raw, methods_raw, main_tok, params_raw, main_raw = parser.parse_program()

    # declared names: disjointness and reserved-shape checks happened at
    # parse time (binder_ident); build the three environments.
    decl_idents: set[str] = set()

    def declare(tok: Token, ident: str, what: str) -> None:
        if ident in decl_idents:
            raise ParseError(f"duplicate declaration of {ident} ({what})",
                             tok.line, tok.col, path)
        decl_idents.add(ident)

    meth_env: dict[str, Name] = {}
    for tok, ident, param, ptyp, rtyp, _body in methods_raw:
        declare(tok, ident, "method")
        meth_env[ident] = meth(ident, TArrow(ptyp, rtyp))
    ref_env: dict[str, Name] = {}
    for tok, ident, typ, _lit in refs_raw:
        declare(tok, ident, "reference")
        ref_env[ident] = ref(ident, typ)

    used = _collect_idents(toks)
    elab = _Elab(meth_env, ref_env, used, path)

    # store values (may name methods, hence resolved after Methods)
    def resolve_lit(tok: Token, lit, typ: Type) -> Value:
        if isinstance(lit, int):
            v: Value = VInt(lit)
        elif lit == ():
            v = VUnit()
        elif isinstance(lit, str):
            if lit not in meth_env:
                raise ParseError(f"store literal {lit} is not a declared method",
                                 tok.line, tok.col, path)
            v = VMeth(meth_env[lit])
        elif isinstance(lit, tuple):
            if not isinstance(typ, TProd):
                raise ParseError("pair literal for a non-pair reference",
                                 tok.line, tok.col, path)
            v = VPair(resolve_lit(tok, lit[0], typ.left),
                      resolve_lit(tok, lit[1], typ.right))
        else:
            raise AssertionError(lit)
        vt = value_type(v)
        if vt != typ:
            raise ParseError(
                f"store literal has type {type_str(vt)}, reference declared "
                f"{type_str(typ)}", tok.line, tok.col, path)
        return v

    store: dict[Name, Value] = {}
    for tok, ident, typ, lit in refs_raw:
        store[ref_env[ident]] = resolve_lit(tok, lit, typ)

    repo: dict[Name, Lam] = {}
    for tok, ident, param, ptyp, rtyp, body in methods_raw:
        p = var(param, ptyp)
        term, tb = elab.elab(body, {param: p})
        if tb != rtyp:
            raise ParseError(
                f"method {ident} returns {type_str(tb)}, declared {type_str(rtyp)}",
                tok.line, tok.col, path)
        repo[meth_env[ident]] = Lam(p, term, TArrow(ptyp, rtyp))

    inputs: list[Name] = []
    param_env: dict[str, Name] = {}
    for tok, ident, typ in params_raw:
        declare(tok, ident, "Main parameter")
        if not is_ground(typ):
            raise ParseError(
                f"Main parameter {ident} must have ground type (int, unit, or "
                f"pairs thereof), got {type_str(typ)}", tok.line, tok.col, path)
        n = var(ident, typ)
        inputs.append(n)
        param_env[ident] = n

    main_term, _ = elab.elab(main_raw, param_env)

    # Barendregt: binder idents unique across Main and all method bodies.
    taken = set(decl_idents) | {n.ident for n in inputs}
    new_repo: dict[Name, Lam] = {}
    for m, lam in repo.items():
        fresh = barendregt(lam, taken)
        assert isinstance(fresh, Lam)
        taken |= set(binder_idents(fresh))
        new_repo[m] = fresh
    main_term = barendregt(main_term, taken)

    prog = Program(main_term, new_repo, store, tuple(inputs), name=path)
    validate_config(prog.config(0), prog.inputs)
    return prog


def parse_term(text: str, *, vars: Optional[Mapping[str, Type]] = None,
               meths: Optional[Mapping[str, TArrow]] = None,
               refs: Optional[Mapping[str, Type]] = None,
               freshen: bool = True, path: str = "<string>") -> Term:
    """Parse a bare term.  Free variables, methods and references must be
    given types via the keyword maps."""
    toks = lex(text, path)
    parser = _Parser(toks, path)
    surface = parser.parse_term()
    if parser.peek().kind != "eof":
        parser.fail("trailing input after term")
    meth_env = {i: meth(i, t) for i, t in (meths or {}).items()}
    ref_env = {i: ref(i, t) for i, t in (refs or {}).items()}
    var_env = {i: var(i, t) for i, t in (vars or {}).items()}
    elab = _Elab(meth_env, ref_env, _collect_idents(toks), path)
    term, _ = elab.elab(surface, var_env)
    if freshen:
        term = barendregt(term, set(var_env) | set(meth_env) | set(ref_env))
    return term


# ---------------------------------------------------------------------------
# Program printing (inverse of parse_program, up to alpha and desugaring)
# ---------------------------------------------------------------------------


def _store_lit_str(v: Value) -> str:
    if isinstance(v, VInt):
        return str(v.value) if v.value >= 0 else f"-{-v.value}"
    if isinstance(v, VUnit):
        return "()"
    if isinstance(v, VMeth):
        return v.name.ident
    if isinstance(v, VPair):
        return f"({_store_lit_str(v.fst)}, {_store_lit_str(v.snd)})"
    raise TypeError(f"not a value: {v!r}")


def program_to_source(prog: Program) -> str:
    out: list[str] = []
    if prog.store:
        out.append("Refs:")
        for r, v in prog.store.items():
            out.append(f"  {r.ident} : {type_str(r.typ)} = {_store_lit_str(v)};;")
    if prog.repo:
        out.append("Methods:")
        for m, lam in prog.repo.items():
            assert isinstance(m.typ, TArrow)
            out.append(
                f"  {m.ident} ({lam.param.ident}:{type_str(lam.param.typ)}) : "
                f"{type_str(m.typ.res)} = {pretty(lam.body)};;"
            )
    params = ", ".join(f"{n.ident}:{type_str(n.typ)}" for n in prog.inputs)
    out.append(f"Main ({params}) =")
    out.append(f"  {pretty(prog.term)}")
    return "\n".join(out) + "\n"
