"""Derived functions of the algebras, each paired with an arithmetic oracle.

Terms are built in their natural form (``Ode1`` where convenient) and then
specialized to a home preset, ``ACDL`` for everything except the counting
terms which live in ``TCDL-STAR``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Optional

from .errors import NonBooleanStep, ValidationError
from .modes import PRESETS, SMASH, CheckedTerm, get_mode, specialize, statically_boolean, validate
from .terms import (
    Compose, Const0, Const1, Ode1, Ode2, Ode2Star, Ode3, Proj, Term, add, const, div2,
    length, sign, sub,
)


def _len(x: int) -> int:
    return abs(x).bit_length()


@dataclass(frozen=True)
class NamedTerm:
    """A checked term with the arithmetic function it is meant to compute."""

    name: str
    term: CheckedTerm
    oracle: Callable[..., int] = field(compare=False)
    modes: FrozenSet[str] = frozenset()
    boolean: bool = False
    regime: Optional[Callable[..., bool]] = field(default=None, compare=False)
    doc: str = ""

    @property
    def arity(self) -> int:
        return self.term.arity

    @property
    def raw(self) -> Term:
        return self.term.term

    def in_regime(self, *args) -> bool:
        if any(a < 0 for a in args):
            return False
        return self.regime is None or bool(self.regime(*args))

    def for_mode(self, mode) -> CheckedTerm:
        """This term rewritten into, and validated under, ``mode``."""
        mode = get_mode(mode)
        return validate(specialize(self.raw, mode), mode)


_HOMES = ("ACDL", "TCDL-STAR", "TCDL", "ACDL-SMASH", "TCDL-SMASH")


def named(name, raw: Term, oracle, boolean=False, regime=None, doc="", home=None) -> NamedTerm:
    """Specialize ``raw`` to its home preset and wrap it with ``oracle``."""
    homes = (home,) if home else _HOMES
    checked, last = None, None
    for h in homes:
        try:
            checked = validate(specialize(raw, h), h)
            break
        except ValidationError as exc:
            last = exc
    if checked is None:
        raise last
    modes = frozenset(
        m for m, preset in PRESETS.items() if _validates(checked.term, preset)
    )
    return NamedTerm(name, checked, oracle, modes, boolean, regime, doc)


def _validates(t, mode) -> bool:
    try:
        validate(t, mode)
        return True
    except ValidationError:
        return False


def _term(t) -> Term:
    if isinstance(t, NamedTerm):
        return t.raw
    if isinstance(t, CheckedTerm):
        return t.term
    return t


# Term-level building blocks.  Every helper takes argument terms of a common
# arity n and returns a term of arity n.

def P(i: int, n: int) -> Proj:
    return Proj(i, n)


def ap(f, *args: Term) -> Compose:
    return Compose(_term(f), tuple(args))


def one(n: int) -> Const1:
    return Const1(n)


def lift0(c: Term, m: int) -> Term:
    """Arity-0 term ``c`` viewed as a constant function of ``m`` arguments."""
    return Compose(Ode1(c, Const0(1)), (Const0(m),))


def cosg(a: Term) -> Term:
    return sub(one(a.arity), sign(a))


def and_(a: Term, b: Term) -> Term:
    return sign(sub(add(a, b), one(a.arity)))


def or_(a: Term, b: Term) -> Term:
    return sign(add(a, b))


def eq(a: Term, b: Term) -> Term:
    return cosg(add(sign(sub(a, b)), sign(sub(b, a))))


def implies(a: Term, b: Term) -> Term:
    return sign(add(sub(one(a.arity), a), b))


def s1(a: Term) -> Term:
    return add(add(a, a), one(a.arity))


SHIFT = Ode1(Proj(1, 1), Const0(2))                 # (x, y) -> y * 2^len(x)
SMASH_T = Ode2(Const1(1), Const0(2), Proj(1, 1))    # (x, y) -> 2^(len(x) len(y))
MSP = Ode3(Proj(1, 1))                              # (x, y) -> y // 2^len(x)
POW2LEN = Ode1(Const1(0), Const0(1))                # x -> 2^len(x)


def shift(x, y):
    return ap(SHIFT, x, y)


def smash(x, y):
    return ap(SMASH_T, x, y)


def msp(x, y):
    return ap(MSP, x, y)


def pow2len(x):
    return ap(POW2LEN, x)


def _build_if():
    X, Y, Z = P(1, 3), P(2, 3), P(3, 3)
    return add(sub(shift(cosg(X), Y), Y), sub(shift(sign(X), Z), Z))


IF = _build_if()


def if_(c, a, b):
    """``a`` when ``c <= 0``, else ``b``."""
    return ap(IF, c, a, b)


def _build_bit():
    X, Y = P(1, 2), P(2, 2)
    m = msp(s1(Y), X)
    return sub(msp(Y, X), add(m, m))


BIT_SMALL = _build_bit()


def bit(x, y):
    """Bit number len(y) of x."""
    return ap(BIT_SMALL, x, y)


def _build_f_aux():
    g = if_(P(2, 2), one(2), Const0(2))
    T, I = P(1, 3), P(3, 3)
    h = eq(add(length(T), one(3)), I)
    return Ode1(g, h)


F_AUX = _build_f_aux()


def _build_bexp():
    X, I = P(1, 2), P(2, 2)
    return msp(sub(ap(F_AUX, X, X, I), one(2)), pow2len(X))


BEXP = _build_bexp()


def bexp(x, i):
    return ap(BEXP, x, i)


def _build_BIT():
    X, Y = P(1, 2), P(2, 2)
    raw = bit(X, sub(bexp(X, Y), one(2)))
    return if_(sign(sub(length(X), Y)), Const0(2), raw)


BIT = _build_BIT()


def BIT_of(x, y):
    """Bit number y of x."""
    return ap(BIT, x, y)


def mod2(x):
    d = div2(x)
    return sub(sub(x, d), d)


# Combinators

def _bool_term(nt) -> bool:
    if isinstance(nt, NamedTerm) and nt.boolean:
        return True
    return statically_boolean(_term(nt))


def _rest(n: int, start: int, count: int):
    return tuple(P(i, n) for i in range(start, start + count))


def exists_raw(h_R) -> Term:
    """(x, ys) -> 1 iff some z <= len(x) has h_R(z, ys) = 1."""
    h_R = _term(h_R)
    p = h_R.arity - 1
    ys_g = _rest(p, 1, p)
    g = ap(h_R, Const0(p), *ys_g)
    X = P(1, p + 1)
    ys = _rest(p + 1, 2, p)
    h = ap(h_R, length(add(X, one(p + 1))), *ys)
    return sign(ap(Ode1(g, h), X, *ys))


def forall_raw(h_R) -> Term:
    h_R = _term(h_R)
    p = h_R.arity - 1
    g = cosg(ap(h_R, Const0(p), *_rest(p, 1, p)))
    X = P(1, p + 1)
    ys = _rest(p + 1, 2, p)
    h = cosg(ap(h_R, length(add(X, one(p + 1))), *ys))
    return cosg(ap(Ode1(g, h), X, *ys))


def crn_raw(g, h0, h1) -> Term:
    g, h0, h1 = _term(g), _term(h0), _term(h1)
    p = g.arity
    n = p + 2
    T, X = P(1, n), P(2, n)
    ys = _rest(n, 3, p)
    E = bexp(X, sub(length(X), length(T)))
    top = msp(E, X)
    H = if_(bit(X, sub(E, one(n))), ap(h0, top, *ys), ap(h1, top, *ys))
    h_F = ap(H, add(T, one(n)), X, *ys)
    g_F = ap(g, *_rest(p + 1, 2, p)) if p else lift0(g, 1)
    F = Ode1(g_F, h_F)
    X1 = P(1, p + 1)
    return ap(F, X1, X1, *_rest(p + 1, 2, p))


def bound_for(k: int, p: int) -> Term:
    """Arity-p term Y with len(Y) = len(x1)^k."""
    X1 = P(1, p)
    if k == 0:
        return one(p)
    if k == 1:
        return X1
    Y = sub(smash(X1, X1), one(p))
    for _ in range(k - 2):
        Y = sub(smash(Y, X1), one(p))
    return Y


def min_raw(g, h, k: int, boolean: bool = False) -> Term:
    g, h = _term(g), _term(h)
    p = g.arity - 1
    if p < 1:
        raise ValueError("min needs at least one parameter besides the index")
    xs = _rest(p, 1, p)
    Y = bound_for(k, p)
    if boolean:
        return ap(forall_raw(implies(h, g)), Y, *xs)
    # Q(i, xs): i satisfies the guard and no guarded j has a smaller value
    n2 = p + 2
    J, I = P(1, n2), P(2, n2)
    xs2 = _rest(n2, 3, p)
    R2 = implies(ap(h, J, *xs2), sign(add(sub(ap(g, J, *xs2), ap(g, I, *xs2)), one(n2))))
    n1 = p + 1
    I1 = P(1, n1)
    xs1 = _rest(n1, 2, p)
    Y1 = ap(Y, *xs1)
    Q = and_(ap(h, I1, *xs1), ap(forall_raw(R2), Y1, I1, *xs1))
    S = Ode1(Const0(p), exists_raw(Q))
    istar = sub(length(s1(Y)), length(ap(S, s1(Y), *xs)))
    any_guard = ap(exists_raw(h), Y, *xs)
    return if_(any_guard, one(p), ap(g, istar, *xs))


def bcount_raw() -> Term:
    Z, Y = P(1, 2), P(2, 2)
    F = Ode2Star(mod2(P(1, 1)), BIT_of(Y, length(add(Z, one(2)))), Const0(1))
    X = P(1, 1)
    return ap(F, X, X)


# Oracles

def crn_oracle(g, h0, h1):
    def f(x, *ys):
        if x == 0:
            return g(*ys)
        b = x & 1
        rest = x >> 1
        return 2 * f(rest, *ys) + (h1 if b else h0)(rest, *ys)
    return f


def min_oracle(g, h, k):
    def f(*xs):
        vals = [g(i, *xs) for i in range(_len(xs[0]) ** k + 1) if h(i, *xs) == 1]
        return min(vals) if vals else 1
    return f


# Constructors

@lru_cache(maxsize=None)
def mk_shift() -> NamedTerm:
    return named("shift", SHIFT, lambda x, y: y << _len(x), doc="y * 2^len(x)")


@lru_cache(maxsize=None)
def mk_smash() -> NamedTerm:
    return named("smash", SMASH_T, lambda x, y: 1 << (_len(x) * _len(y)), doc="2^(len(x) len(y))")


@lru_cache(maxsize=None)
def mk_msp() -> NamedTerm:
    return named("msp", MSP, lambda x, y: y >> _len(x), doc="y // 2^len(x)")


@lru_cache(maxsize=None)
def mk_pow2len() -> NamedTerm:
    return named("pow2len", POW2LEN, lambda x: 1 << _len(x), doc="2^len(x)")


@lru_cache(maxsize=None)
def mk_if() -> NamedTerm:
    return named("if", IF, lambda x, y, z: y if x <= 0 else z, doc="y if x = 0 else z")


@lru_cache(maxsize=None)
def mk_cond() -> NamedTerm:
    X, V, Y, Z = (P(i, 4) for i in range(1, 5))
    raw = if_(sign(sub(V, X)), Z, Y)
    return named("cond", raw, lambda x, v, y, z: y if x < v else z, doc="y if x < v else z")


@lru_cache(maxsize=None)
def mk_bit() -> NamedTerm:
    return named("bit", BIT_SMALL, lambda x, y: (x >> _len(y)) & 1, boolean=True,
                 doc="bit number len(y) of x")


@lru_cache(maxsize=None)
def mk_f_aux() -> NamedTerm:
    def oracle(t, x, i):
        L = _len(t)
        return 1 << (L - i) if i <= L else 0
    return named("f_aux", F_AUX, oracle, doc="2^(len(t) - i) for i <= len(t)")


@lru_cache(maxsize=None)
def mk_bexp() -> NamedTerm:
    return named("bexp", BEXP, lambda x, i: 1 << i, regime=lambda x, i: i <= _len(x),
                 doc="2^i for i <= len(x)")


@lru_cache(maxsize=None)
def mk_BIT() -> NamedTerm:
    return named("BIT", BIT, lambda x, y: (x >> y) & 1, boolean=True, doc="bit number y of x")


@lru_cache(maxsize=None)
def mk_mod2() -> NamedTerm:
    return named("mod2", mod2(P(1, 1)), lambda x: x % 2, boolean=True)


@lru_cache(maxsize=None)
def mk_s0() -> NamedTerm:
    X = P(1, 1)
    return named("s0", add(X, X), lambda x: 2 * x)


@lru_cache(maxsize=None)
def mk_s1() -> NamedTerm:
    return named("s1", s1(P(1, 1)), lambda x: 2 * x + 1)


@lru_cache(maxsize=None)
def mk_cosg() -> NamedTerm:
    return named("cosg", cosg(P(1, 1)), lambda x: 0 if x > 0 else 1, boolean=True)


@lru_cache(maxsize=None)
def mk_sg() -> NamedTerm:
    return named("sg", sign(P(1, 1)), lambda x: 1 if x > 0 else 0, boolean=True)


@lru_cache(maxsize=None)
def mk_and() -> NamedTerm:
    return named("and", and_(P(1, 2), P(2, 2)), lambda a, b: a & b, boolean=True,
                 regime=lambda a, b: a <= 1 and b <= 1)


@lru_cache(maxsize=None)
def mk_or() -> NamedTerm:
    return named("or", or_(P(1, 2), P(2, 2)), lambda a, b: a | b, boolean=True,
                 regime=lambda a, b: a <= 1 and b <= 1)


@lru_cache(maxsize=None)
def mk_eq() -> NamedTerm:
    return named("eq", eq(P(1, 2), P(2, 2)), lambda a, b: int(a == b), boolean=True)


def mk_crn(g: NamedTerm, h0: NamedTerm, h1: NamedTerm, name: Optional[str] = None) -> NamedTerm:
    """Term for the function defined by recursion on notation
    ``f(0) = g``, ``f(2x + i) = 2 f(x) + h_i(x)``."""
    for part, label in ((h0, "h0"), (h1, "h1")):
        if not _bool_term(part):
            raise NonBooleanStep(f"{label} is not known to be boolean")
    raw = crn_raw(g, h0, h1)
    name = name or f"crn({g.name},{h0.name},{h1.name})"
    return named(name, raw, crn_oracle(g.oracle, h0.oracle, h1.oracle))


def mk_bounded_exists(h_R: NamedTerm, name: Optional[str] = None) -> NamedTerm:
    def oracle(x, *ys):
        return int(any(h_R.oracle(z, *ys) == 1 for z in range(_len(x) + 1)))
    return named(name or f"exists({h_R.name})", exists_raw(h_R), oracle, boolean=True)


def mk_bounded_forall(h_R: NamedTerm, name: Optional[str] = None) -> NamedTerm:
    def oracle(x, *ys):
        return int(all(h_R.oracle(z, *ys) == 1 for z in range(_len(x) + 1)))
    return named(name or f"forall({h_R.name})", forall_raw(h_R), oracle, boolean=True)


def mk_min(g: NamedTerm, h: NamedTerm, k: int = 1, name: Optional[str] = None) -> NamedTerm:
    """min of g(i, xs) over i <= len(x1)^k with h(i, xs) = 1; 1 if none."""
    boolean = g.boolean
    raw = min_raw(g, h, k, boolean=boolean)
    return named(name or f"min({g.name},{h.name},{k})", raw, min_oracle(g.oracle, h.oracle, k),
                 boolean=boolean)


@lru_cache(maxsize=None)
def mk_bcount() -> NamedTerm:
    return named("bcount", bcount_raw(), lambda x: bin(x).count("1"), home="TCDL-STAR")


# Small named predicates used by the examples and tests.

@lru_cache(maxsize=None)
def mk_zero(arity: int = 2) -> NamedTerm:
    return named(f"zero{arity}", Const0(arity), lambda *a: 0, boolean=True)


@lru_cache(maxsize=None)
def mk_one(arity: int = 2) -> NamedTerm:
    return named(f"one{arity}", Const1(arity), lambda *a: 1, boolean=True)


@lru_cache(maxsize=None)
def mk_is_const(value: int, arity: int = 2) -> NamedTerm:
    """(z, ...) -> [z = value]."""
    raw = eq(P(1, arity), const(value, arity))
    return named(f"is{value}_{arity}", raw, lambda z, *a: int(z == value), boolean=True)


@lru_cache(maxsize=None)
def mk_ge_const(value: int, arity: int = 2) -> NamedTerm:
    """(z, ...) -> [z >= value]."""
    raw = sign(sub(add(P(1, arity), one(arity)), const(value, arity)))
    return named(f"ge{value}_{arity}", raw, lambda z, *a: int(z >= value), boolean=True)


@lru_cache(maxsize=None)
def mk_proj_index(arity: int = 2) -> NamedTerm:
    return named(f"index{arity}", P(1, arity), lambda i, *a: i)


@lru_cache(maxsize=None)
def mk_crn_copy() -> NamedTerm:
    """Recursion on notation copying the input bits under a leading 1."""
    return mk_crn(mk_one(0), mk_zero(1), mk_one(1), name="crn_copy")


@lru_cache(maxsize=None)
def mk_exists_two() -> NamedTerm:
    return mk_bounded_exists(mk_is_const(2, 2), name="exists_eq2")


@lru_cache(maxsize=None)
def mk_forall_true() -> NamedTerm:
    return mk_bounded_forall(mk_one(2), name="forall_true")


@lru_cache(maxsize=None)
def mk_min_ge2() -> NamedTerm:
    return mk_min(mk_proj_index(2), mk_ge_const(2, 2), 1, name="min_ge2")


REGISTRY: Dict[str, Callable[[], NamedTerm]] = {
    "shift": mk_shift,
    "smash": mk_smash,
    "msp": mk_msp,
    "pow2len": mk_pow2len,
    "if": mk_if,
    "cond": mk_cond,
    "bit": mk_bit,
    "f_aux": mk_f_aux,
    "bexp": mk_bexp,
    "BIT": mk_BIT,
    "mod2": mk_mod2,
    "s0": mk_s0,
    "s1": mk_s1,
    "sg": mk_sg,
    "cosg": mk_cosg,
    "and": mk_and,
    "or": mk_or,
    "eq": mk_eq,
    "crn_copy": mk_crn_copy,
    "exists_eq2": mk_exists_two,
    "forall_true": mk_forall_true,
    "min_ge2": mk_min_ge2,
    "bcount": mk_bcount,
}


def get(name: str) -> NamedTerm:
    from .errors import UnknownStdName
    try:
        return REGISTRY[name]()
    except KeyError:
        raise UnknownStdName(f"unknown stdlib name {name!r}", field=name) from None


def all_named():
    return [REGISTRY[k]() for k in REGISTRY]


def default_oracles() -> Dict[str, Callable[..., int]]:
    """Host bindings for the oracle basics built into some presets."""
    return {SMASH: lambda x, y: 1 << (_len(x) * _len(y))}
