"""S-expression surface syntax for terms.

::

    atom ::= 0 | 1 | x<i>
    expr ::= atom | (len e) | (sg e) | (+ e e) | (- e e) | (div2 e) | (* e e)
           | (proj i p) | (comp f e ...) | (ode1 g h) | (ode2 g h k) | (ode2* g h k)
           | (ode3 g) | (ode4 g k +|-) | (ode1* g h k) | (oracle name arity) | (std name)

``x<i>`` is the i-th projection of the enclosing arity.  Arities are
inferred as the least consistent choice: an expression with no fixed-arity
part takes the largest ``x`` index it mentions, and schema children take
the arity the schema needs (``h`` one more than ``g``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from .errors import InconsistentArity, ParseError, UnknownStdName
from .terms import (
    ADD, DIV2, LENGTH, SIGN, SUB, TIMES, Compose, Const0, Const1, Ode1, Ode1Star, Ode2, Ode2Star,
    Ode3, Ode4, Oracle, Proj, Term,
)

_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


@dataclass
class _Tok:
    text: str
    line: int
    col: int


@dataclass
class _Node:
    head: _Tok
    items: List[Union["_Node", _Tok]]


def _tokens(text: str) -> List[_Tok]:
    out, line, col = [], 1, 1
    for m in _TOKEN.finditer(text):
        s = m.group()
        if not s.isspace() and not s.startswith(";"):
            out.append(_Tok(s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
    return out


def _read(toks: List[_Tok]):
    pos = 0

    def expr():
        nonlocal pos
        if pos >= len(toks):
            last = toks[-1] if toks else _Tok("", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.col + len(last.text))
        t = toks[pos]
        pos += 1
        if t.text == ")":
            raise ParseError("unexpected ')'", t.line, t.col)
        if t.text != "(":
            return t
        items = []
        while True:
            if pos >= len(toks):
                raise ParseError("unclosed '('", t.line, t.col)
            if toks[pos].text == ")":
                pos += 1
                break
            items.append(expr())
        if not items:
            raise ParseError("empty list", t.line, t.col)
        return _Node(t, items)

    if not toks:
        raise ParseError("empty input", 1, 1)
    node = expr()
    if pos != len(toks):
        t = toks[pos]
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return node


# Arity inference: (fixed arity or None, least admissible arity)
Need = Tuple[Optional[int], int]

_XVAR = re.compile(r"x(\d+)$")
_UNARY = {"len": LENGTH, "sg": SIGN, "div2": DIV2}
_BINARY = {"+": ADD, "-": SUB, "*": TIMES}
_SCHEMA_PARTS = {"ode1": 2, "ode2": 3, "ode2*": 3, "ode3": 1, "ode4": 3, "ode1*": 3}


def _where(x) -> Tuple[int, int]:
    t = x.head if isinstance(x, _Node) else x
    return t.line, t.col


def _err(msg, x) -> ParseError:
    return ParseError(msg, *_where(x))


def _int(tok, what) -> int:
    if not isinstance(tok, _Tok) or not tok.text.isdigit():
        raise _err(f"expected {what}", tok)
    return int(tok.text)


class _Builder:
    def __init__(self, std_lookup):
        self.std_lookup = std_lookup

    def op(self, node: _Node) -> str:
        head = node.items[0]
        if not isinstance(head, _Tok):
            raise _err("expected an operator", head)
        return head.text

    def std(self, node: _Node) -> Term:
        if len(node.items) != 2 or not isinstance(node.items[1], _Tok):
            raise _err("(std name) takes one name", node)
        name = node.items[1].text
        try:
            return self.std_lookup(name)
        except KeyError:
            l, c = _where(node.items[1])
            raise UnknownStdName(f"unknown stdlib name {name!r}", l, c) from None

    def need(self, x) -> Need:
        if isinstance(x, _Tok):
            if x.text in ("0", "1"):
                return None, 0
            m = _XVAR.match(x.text)
            if m and int(m.group(1)) >= 1:
                return None, int(m.group(1))
            raise _err(f"unknown atom {x.text!r}", x)
        op = self.op(x)
        args = x.items[1:]
        if op in _UNARY or op in _BINARY:
            want = 1 if op in _UNARY else 2
            if len(args) != want:
                raise _err(f"({op} ...) takes {want} argument(s)", x)
            return self.merge([self.need(a) for a in args], x)
        if op == "proj":
            if len(args) != 2:
                raise _err("(proj i p) takes two numbers", x)
            i, p = _int(args[0], "index"), _int(args[1], "arity")
            if not 1 <= i <= p:
                raise _err(f"projection index {i} outside 1..{p}", x)
            return p, p
        if op == "std":
            return self.std(x).arity, 0
        if op == "oracle":
            if len(args) != 2 or not isinstance(args[0], _Tok):
                raise _err("(oracle name arity) takes a name and an arity", x)
            a = _int(args[1], "arity")
            return a, a
        if op == "comp":
            if len(args) < 1:
                raise _err("(comp f e ...) needs a function", x)
            f_need = self.need(args[0])
            if f_need[0] is not None and f_need[0] != len(args) - 1:
                raise _err(f"function of arity {f_need[0]} applied to {len(args) - 1} arguments", x)
            if f_need[1] > len(args) - 1:
                raise _err(f"function needs at least {f_need[1]} arguments", x)
            if len(args) == 1:
                return None, 0
            return self.merge([self.need(a) for a in args[1:]], x)
        if op in _SCHEMA_PARTS:
            return self.schema_need(op, args, x)
        raise _err(f"unknown operator {op!r}", x)

    def merge(self, needs: List[Need], node) -> Need:
        fixed = {f for f, _ in needs if f is not None}
        if len(fixed) > 1:
            raise _err(f"inconsistent arities {sorted(fixed)}", node)
        lo = max((m for _, m in needs), default=0)
        f = fixed.pop() if fixed else None
        if f is not None and lo > f:
            raise _err(f"index x{lo} exceeds arity {f}", node)
        return f, lo

    def schema_parts(self, op, args, node):
        want = _SCHEMA_PARTS[op]
        if len(args) != want:
            raise _err(f"({op} ...) takes {want} argument(s)", node)
        if op == "ode4":
            if not isinstance(args[2], _Tok) or args[2].text not in ("+", "-"):
                raise _err("ode4 direction must be + or -", args[2] if len(args) > 2 else node)
            args = args[:2]
        # offset of each part's arity relative to g's
        offsets = {"ode1": (0, 1), "ode2": (0, 1, 0), "ode2*": (0, 1, 0), "ode3": (0,),
                   "ode4": (0, 0), "ode1*": (0, 1, 1)}[op]
        return list(zip(args, offsets))

    def schema_need(self, op, args, node) -> Need:
        parts = self.schema_parts(op, args, node)
        shifted = []
        for a, off in parts:
            f, lo = self.need(a)
            shifted.append((None if f is None else f - off + 1, max(lo - off, 0) + 1))
        return self.merge(shifted, node)

    def build(self, x, p: int) -> Term:
        if isinstance(x, _Tok):
            if x.text == "0":
                return Const0(p)
            if x.text == "1":
                return Const1(p)
            i = int(_XVAR.match(x.text).group(1))
            if i > p:
                raise _err(f"x{i} used in a context of arity {p}", x)
            return Proj(i, p)
        op = self.op(x)
        args = x.items[1:]
        if op in _UNARY:
            return Compose(_UNARY[op], (self.build(args[0], p),))
        if op in _BINARY:
            return Compose(_BINARY[op], (self.build(args[0], p), self.build(args[1], p)))
        if op == "proj":
            t = Proj(int(args[0].text), int(args[1].text))
            return self.check(t, p, x)
        if op == "std":
            return self.check(self.std(x), p, x)
        if op == "oracle":
            return self.check(Oracle(args[0].text, int(args[1].text)), p, x)
        if op == "comp":
            f = self.build(args[0], len(args) - 1)
            return Compose(f, tuple(self.build(a, p) for a in args[1:]))
        parts = self.schema_parts(op, args, x)
        if p < 1:
            raise _err("a schema has arity at least 1", x)
        built = [self.build(a, p - 1 + off) for a, off in parts]
        if op == "ode1":
            return Ode1(*built)
        if op == "ode2":
            return Ode2(*built)
        if op == "ode2*":
            return Ode2Star(*built)
        if op == "ode3":
            return Ode3(*built)
        if op == "ode4":
            return Ode4(built[0], built[1], 1 if args[2].text == "+" else -1)
        return Ode1Star(*built)

    def check(self, t: Term, p: int, x) -> Term:
        if t.arity != p:
            raise _err(f"term of arity {t.arity} used where arity {p} is expected", x)
        return t


def _std_lookup(name: str) -> Term:
    from . import stdlib
    try:
        factory = stdlib.REGISTRY[name]
    except KeyError:
        raise KeyError(name) from None
    return factory().raw


def parse_dsl(text: str, arity: Optional[int] = None) -> Term:
    """Parse ``text`` into a term; ``arity`` overrides the inferred arity."""
    node = _read(_tokens(text))
    b = _Builder(_std_lookup)
    fixed, lo = b.need(node)
    if arity is None:
        p = fixed if fixed is not None else lo
    else:
        if fixed is not None and fixed != arity:
            raise InconsistentArity(f"expression has arity {fixed}, requested {arity}")
        if arity < lo:
            raise InconsistentArity(f"expression mentions x{lo}, requested arity {arity}")
        p = arity
    return b.build(node, p)
