"""A small expression language for problem files.

Grammar (precedence climbing):

    expr     := ternary
    ternary  := or_expr [ 'if' or_expr 'else' ternary ]
    or_expr  := and_expr { 'or' and_expr }
    and_expr := not_expr { 'and' not_expr }
    not_expr := 'not' not_expr | cmp
    cmp      := sum { ('<'|'<='|'>'|'>='|'=='|'!=') sum }
    sum      := term { ('+'|'-') term }
    term     := power { ('*'|'/') power }
    power    := unary [ '^' power ]
    unary    := '-' unary | atom
    atom     := NUMBER | 'inf' | IDENT | IDENT '(' args ')' | '(' expr ')'

Identifiers are the coordinates x1..xd (x, y, z alias the first three).
Functions: abs, min, max, sqrt.  Guards compose with and/or/not and feed the
'A if COND else B' ternary.  Expressions compile to vectorized closures over
(n, d) arrays; undefined arithmetic (0/0 and friends) follows the convention
nan -> +inf.  Parse errors carry line/column and the offending token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, ProblemSyntaxError, UndefinedSymbol

__all__ = ["parse_expression", "compile_expression", "serialize", "Expr"]

_TOKEN_RE = re.compile(r"""
    (?P<num>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|!=|[-+*/^()<>,])
  | (?P<ws>\s+)
""", re.VERBOSE)

_FUNCS = {"abs": np.abs, "sqrt": np.sqrt}
_FUNCS2 = {"min": np.minimum, "max": np.maximum}
_KEYWORDS = {"if", "else", "and", "or", "not", "inf"}


@dataclass
class Token:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    line: int
    col: int


def _tokenize(src: str, line0: int = 1) -> list:
    toks = []
    line, col = line0, 1
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if not m:
            raise ProblemSyntaxError("unexpected character", line, col, src[i])
        text = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        i = m.end()
    toks.append(Token("end", "", line, col))
    return toks


# -- AST --------------------------------------------------------------------

@dataclass
class Expr:
    op: str  # 'num','var','inf','call','unary','binary','cmp','bool','not','ternary'
    args: tuple = ()
    value: float = 0.0
    name: str = ""


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ProblemSyntaxError(f"expected {text!r}", t.line, t.col, t.text or "<end>")
        return t

    def parse(self) -> Expr:
        e = self.ternary()
        t = self.peek()
        if t.kind != "end":
            raise ProblemSyntaxError("trailing input", t.line, t.col, t.text)
        return e

    def ternary(self) -> Expr:
        value = self.or_expr()
        if self.peek().text == "if":
            self.next()
            cond = self.or_expr()
            self.expect("else")
            other = self.ternary()
            return Expr("ternary", (value, cond, other))
        return value

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.peek().text == "or":
            self.next()
            e = Expr("bool", (e, self.and_expr()), name="or")
        return e

    def and_expr(self) -> Expr:
        e = self.not_expr()
        while self.peek().text == "and":
            self.next()
            e = Expr("bool", (e, self.not_expr()), name="and")
        return e

    def not_expr(self) -> Expr:
        if self.peek().text == "not":
            self.next()
            return Expr("not", (self.not_expr(),))
        return self.cmp()

    def cmp(self) -> Expr:
        e = self.sum()
        ops, parts = [], [e]
        while self.peek().text in ("<", "<=", ">", ">=", "==", "!="):
            ops.append(self.next().text)
            parts.append(self.sum())
        if not ops:
            return e
        chain = None
        for i, op in enumerate(ops):
            c = Expr("cmp", (parts[i], parts[i + 1]), name=op)
            chain = c if chain is None else Expr("bool", (chain, c), name="and")
        return chain

    def sum(self) -> Expr:
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            e = Expr("binary", (e, self.term()), name=op)
        return e

    def term(self) -> Expr:
        e = self.power()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            e = Expr("binary", (e, self.power()), name=op)
        return e

    def power(self) -> Expr:
        e = self.unary()
        if self.peek().text == "^":
            self.next()
            return Expr("binary", (e, self.power()), name="^")
        return e

    def unary(self) -> Expr:
        if self.peek().text == "-":
            self.next()
            return Expr("unary", (self.unary(),), name="-")
        return self.atom()

    def atom(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return Expr("num", value=float(t.text))
        if t.text == "(":
            e = self.ternary()
            self.expect(")")
            return e
        if t.kind == "name":
            if t.text == "inf":
                return Expr("inf")
            if t.text in _KEYWORDS:
                raise ProblemSyntaxError("keyword cannot start a value", t.line, t.col, t.text)
            if self.peek().text == "(":
                self.next()
                args = [self.ternary()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.ternary())
                self.expect(")")
                if t.text in _FUNCS and len(args) == 1:
                    return Expr("call", tuple(args), name=t.text)
                if t.text in _FUNCS2 and len(args) == 2:
                    return Expr("call", tuple(args), name=t.text)
                raise ProblemSyntaxError(
                    f"unknown function or wrong arity: {t.text}/{len(args)}", t.line, t.col, t.text)
            return Expr("var", name=t.text)
        raise ProblemSyntaxError("expected a value", t.line, t.col, t.text or "<end>")


def parse_expression(src: str, line0: int = 1) -> Expr:
    return _Parser(_tokenize(src, line0)).parse()


_ALIASES = {"x": 0, "y": 1, "z": 2}


def _var_index(name: str, dim: int, seen: dict) -> int:
    if name in _ALIASES and _ALIASES[name] < dim:
        return _ALIASES[name]
    m = re.fullmatch(r"x(\d+)", name)
    if m:
        i = int(m.group(1)) - 1
        if 0 <= i < dim:
            return i
        raise DimensionMismatch(f"coordinate {name} exceeds dimension {dim}")
    raise UndefinedSymbol(f"unknown identifier {name!r}")


def compile_expression(e: Expr, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile to a vectorized closure mapping (n, d) arrays to (n,) values."""

    def build(node: Expr):
        if node.op == "num":
            c = node.value
            return lambda pts: np.full(len(pts), c)
        if node.op == "inf":
            return lambda pts: np.full(len(pts), np.inf)
        if node.op == "var":
            i = _var_index(node.name, dim, {})
            return lambda pts: pts[:, i]
        if node.op == "call":
            f = _FUNCS.get(node.name) or _FUNCS2.get(node.name)
            subs = [build(a) for a in node.args]
            if len(subs) == 1:
                g = subs[0]
                return lambda pts: f(g(pts))
            g1, g2 = subs
            return lambda pts: f(g1(pts), g2(pts))
        if node.op == "unary":
            g = build(node.args[0])
            return lambda pts: -g(pts)
        if node.op == "binary":
            g1, g2 = build(node.args[0]), build(node.args[1])
            op = node.name
            if op == "+":
                return lambda pts: g1(pts) + g2(pts)
            if op == "-":
                return lambda pts: g1(pts) - g2(pts)
            if op == "*":
                return lambda pts: g1(pts) * g2(pts)
            if op == "/":
                return lambda pts: g1(pts) / g2(pts)
            if op == "^":
                return lambda pts: g1(pts) ** g2(pts)
        if node.op == "cmp":
            g1, g2 = build(node.args[0]), build(node.args[1])
            op = node.name
            table = {"<": np.less, "<=": np.less_equal, ">": np.greater,
                     ">=": np.greater_equal, "==": np.equal, "!=": np.not_equal}
            f = table[op]
            return lambda pts: f(g1(pts), g2(pts))
        if node.op == "bool":
            g1, g2 = build(node.args[0]), build(node.args[1])
            if node.name == "and":
                return lambda pts: np.asarray(g1(pts), bool) & np.asarray(g2(pts), bool)
            return lambda pts: np.asarray(g1(pts), bool) | np.asarray(g2(pts), bool)
        if node.op == "not":
            g = build(node.args[0])
            return lambda pts: ~np.asarray(g(pts), bool)
        if node.op == "ternary":
            gv, gc, go = build(node.args[0]), build(node.args[1]), build(node.args[2])
            return lambda pts: np.where(np.asarray(gc(pts), bool), gv(pts), go(pts))
        raise ValueError(f"unknown node {node.op}")

    core = build(e)

    def run(pts: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            out = np.asarray(core(np.atleast_2d(pts)), dtype=float)
        return np.where(np.isnan(out), np.inf, out)

    return run


def serialize(e: Expr) -> str:
    """Canonical text form; parsing it back yields an equivalent expression."""
    if e.op == "num":
        return repr(e.value)
    if e.op == "inf":
        return "inf"
    if e.op == "var":
        return e.name
    if e.op == "call":
        return f"{e.name}({', '.join(serialize(a) for a in e.args)})"
    if e.op == "unary":
        return f"(-{serialize(e.args[0])})"
    if e.op == "binary":
        return f"({serialize(e.args[0])} {e.name} {serialize(e.args[1])})"
    if e.op == "cmp":
        return f"({serialize(e.args[0])} {e.name} {serialize(e.args[1])})"
    if e.op == "bool":
        return f"({serialize(e.args[0])} {e.name} {serialize(e.args[1])})"
    if e.op == "not":
        return f"(not {serialize(e.args[0])})"
    if e.op == "ternary":
        v, c, o = e.args
        return f"({serialize(v)} if {serialize(c)} else {serialize(o)})"
    raise ValueError(f"unknown node {e.op}")
