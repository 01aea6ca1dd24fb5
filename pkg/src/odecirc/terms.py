"""Term language of the discrete-ODE function algebras.

A term denotes a function ``Z^p -> Z``.  Basic function symbols (``LENGTH``,
``SIGN``, ``ADD`` ...) are bare terms of fixed arity and are applied through
:class:`Compose`.  Schema nodes take the derivation variable as their first
argument, so their arity is ``arity(g) + 1``.

Terms are immutable; structural equality is provided by the dataclasses.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple

from .errors import InconsistentArity

__all__ = [
    "Term", "Const0", "Const1", "Length", "Sign", "Add", "Sub", "Div2", "Times",
    "Proj", "Compose", "Ode1", "Ode2", "Ode3", "Ode4", "Ode1Star", "Ode2Star",
    "Oracle", "LENGTH", "SIGN", "ADD", "SUB", "DIV2", "TIMES", "arity", "children",
    "iter_subterms", "SCHEMA_KINDS", "BASIC_KINDS", "kind", "add", "sub", "div2",
    "length", "sign", "times", "comp", "const", "proj_all",
]


class Term:
    """Base class of all term nodes."""

    @cached_property
    def arity(self) -> int:
        return _compute_arity(self)

    def __call__(self, *args: "Term") -> "Compose":
        return Compose(self, tuple(args))


@dataclass(frozen=True, eq=True)
class Const0(Term):
    n: int = 0

    def __repr__(self):
        return f"Const0({self.n})"


@dataclass(frozen=True, eq=True)
class Const1(Term):
    n: int = 0

    def __repr__(self):
        return f"Const1({self.n})"


@dataclass(frozen=True, eq=True)
class Length(Term):
    def __repr__(self):
        return "LENGTH"


@dataclass(frozen=True, eq=True)
class Sign(Term):
    def __repr__(self):
        return "SIGN"


@dataclass(frozen=True, eq=True)
class Add(Term):
    def __repr__(self):
        return "ADD"


@dataclass(frozen=True, eq=True)
class Sub(Term):
    def __repr__(self):
        return "SUB"


@dataclass(frozen=True, eq=True)
class Div2(Term):
    def __repr__(self):
        return "DIV2"


@dataclass(frozen=True, eq=True)
class Times(Term):
    def __repr__(self):
        return "TIMES"


@dataclass(frozen=True, eq=True)
class Proj(Term):
    i: int
    p: int

    def __repr__(self):
        return f"Proj({self.i},{self.p})"


@dataclass(frozen=True, eq=True)
class Compose(Term):
    f: Term
    args: Tuple[Term, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True, eq=True)
class Ode1(Term):
    g: Term
    h: Term


@dataclass(frozen=True, eq=True)
class Ode2(Term):
    g: Term
    h: Term
    k: Term


@dataclass(frozen=True, eq=True)
class Ode3(Term):
    g: Term


@dataclass(frozen=True, eq=True)
class Ode4(Term):
    g: Term
    k: Term
    direction: int = 1  # +1 left shift, -1 right shift

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError("Ode4 direction must be +1 or -1")


@dataclass(frozen=True, eq=True)
class Ode1Star(Term):
    g: Term
    h: Term
    k: Term


@dataclass(frozen=True, eq=True)
class Ode2Star(Term):
    g: Term
    h: Term
    k: Term


@dataclass(frozen=True, eq=True)
class Oracle(Term):
    name: str
    n: int
    boolean: bool = False

    def __repr__(self):
        return f"Oracle({self.name!r},{self.n})"


LENGTH = Length()
SIGN = Sign()
ADD = Add()
SUB = Sub()
DIV2 = Div2()
TIMES = Times()

_FIXED_ARITY = {Length: 1, Sign: 1, Div2: 1, Add: 2, Sub: 2, Times: 2}
BASIC_KINDS = frozenset({"Const0", "Const1", "Length", "Sign", "Add", "Sub", "Div2",
                         "Times", "Proj"})
SCHEMA_KINDS = frozenset({"Ode1", "Ode2", "Ode3", "Ode4", "Ode1Star", "Ode2Star"})


def kind(t: Term) -> str:
    return type(t).__name__


def children(t: Term) -> Tuple[Term, ...]:
    if isinstance(t, Compose):
        return (t.f,) + t.args
    if isinstance(t, (Ode2, Ode2Star, Ode1Star)):
        return (t.g, t.h, t.k)
    if isinstance(t, Ode1):
        return (t.g, t.h)
    if isinstance(t, Ode3):
        return (t.g,)
    if isinstance(t, Ode4):
        return (t.g, t.k)
    return ()


def iter_subterms(t: Term, path=()):
    """Yield ``(path, subterm)`` pairs in pre-order; shared subterms repeat."""
    stack = [(path, t)]
    while stack:
        p, s = stack.pop()
        yield p, s
        for idx, c in reversed(list(enumerate(children(s)))):
            stack.append((p + (idx,), c))


def _expect(t, got, want, what):
    if got != want:
        raise InconsistentArity(f"{kind(t)}: {what} has arity {got}, expected {want}")


def _compute_arity(t: Term) -> int:
    if isinstance(t, (Const0, Const1)):
        return t.n
    if type(t) in _FIXED_ARITY:
        return _FIXED_ARITY[type(t)]
    if isinstance(t, Proj):
        if not 1 <= t.i <= t.p:
            raise InconsistentArity(f"Proj({t.i},{t.p}) needs 1 <= i <= p")
        return t.p
    if isinstance(t, Oracle):
        return t.n
    if isinstance(t, Compose):
        _expect(t, t.f.arity, len(t.args), "outer function")
        if not t.args:
            return 0
        ar = {a.arity for a in t.args}
        if len(ar) != 1:
            raise InconsistentArity(f"Compose arguments disagree on arity: {sorted(ar)}")
        return ar.pop()
    if isinstance(t, Ode3):
        return t.g.arity + 1
    p = t.g.arity
    if isinstance(t, Ode1):
        _expect(t, t.h.arity, p + 1, "h")
    elif isinstance(t, (Ode2, Ode2Star)):
        _expect(t, t.h.arity, p + 1, "h")
        _expect(t, t.k.arity, p, "k")
    elif isinstance(t, Ode4):
        _expect(t, t.k.arity, p, "k")
    elif isinstance(t, Ode1Star):
        _expect(t, t.h.arity, p + 1, "h")
        _expect(t, t.k.arity, p + 1, "k")
    else:
        raise TypeError(f"not a term: {t!r}")
    return p + 1


def arity(t: Term) -> int:
    """Number of arguments ``t`` expects."""
    return t.arity


# Small construction helpers used throughout the stdlib.

def comp(f: Term, *args: Term) -> Compose:
    return Compose(f, tuple(args))


def add(a: Term, b: Term) -> Compose:
    return Compose(ADD, (a, b))


def sub(a: Term, b: Term) -> Compose:
    return Compose(SUB, (a, b))


def times(a: Term, b: Term) -> Compose:
    return Compose(TIMES, (a, b))


def div2(a: Term) -> Compose:
    return Compose(DIV2, (a,))


def length(a: Term) -> Compose:
    return Compose(LENGTH, (a,))


def sign(a: Term) -> Compose:
    return Compose(SIGN, (a,))


def const(value: int, n: int) -> Term:
    """Constant function of ``n`` arguments built from 0, 1 and +."""
    if value < 0:
        return sub(Const0(n), const(-value, n))
    if value == 0:
        return Const0(n)
    if value == 1:
        return Const1(n)
    half = const(value // 2, n)
    doubled = add(half, half)
    return add(doubled, Const1(n)) if value % 2 else doubled


def proj_all(p: int):
    return tuple(Proj(i, p) for i in range(1, p + 1))
