"""Evaluation of algebra terms over Z.

Three routes are provided:

* :class:`Evaluator` / :func:`evaluate` -- closed-form solutions of every
  schema (the route the compiler is checked against);
* :class:`StepEvaluator` / :func:`step_oracle` -- literal iteration of the
  defining difference equations from ``f(0) = g``;
* :func:`solve_linear_length_ode` -- the general sum-of-products solution of
  a linear length-ODE given as sg-polynomials ``A`` and ``B``.
"""
from __future__ import annotations

import os
from typing import Callable, Dict, Mapping, Optional, Sequence

from . import poly
from .errors import BoundExceeded, MissingOracle, NotEssentiallyConstant, SchemaViolation
from .modes import CheckedTerm
from .terms import (
    Add, Compose, Const0, Const1, Div2, Length, Ode1, Ode1Star, Ode2, Ode2Star, Ode3,
    Ode4, Oracle, Proj, Sign, Sub, Term, Times,
)

DEFAULT_STEP_BOUND = 1 << 16


def length(x: int) -> int:
    """Binary length of |x|; ``length(0) == 0``."""
    return abs(x).bit_length()


def sg(x: int) -> int:
    return 1 if x > 0 else 0


def alpha(u: int) -> int:
    """Greatest integer of length ``u`` (``alpha(-1)`` is the initial-value slot)."""
    return (1 << u) - 1 if u >= 0 else -1


def _term(t):
    return t.term if isinstance(t, CheckedTerm) else t


def _check_bool(v, what, u):
    if v != 0 and v != 1:
        raise SchemaViolation("BooleanRange", f"{what} = {v} at jump u={u}")
    return v


class Evaluator:
    """Closed-form evaluator with a memo table over (subterm, arguments).

    One instance may be reused across calls to share the memo; the module
    level :func:`evaluate` uses a fresh instance per call.
    """

    def __init__(self, oracles: Optional[Mapping[str, Callable[..., int]]] = None):
        self.oracles = dict(oracles or {})
        self._memo: Dict[tuple, int] = {}
        self._shallow: Dict[int, bool] = {}
        self._support: Dict[int, Optional[tuple]] = {}
        self._reads: Dict[int, frozenset] = {}
        self._keep = []

    def __call__(self, t, args: Sequence[int]) -> int:
        t = _term(t)
        args = tuple(int(a) for a in args)
        if len(args) != t.arity:
            raise ValueError(f"term has arity {t.arity}, got {len(args)} arguments")
        if not self._keep or self._keep[-1] is not t:
            self._keep.append(t)  # memo keys hold ids; keep roots alive
        return self.ev(t, args)

    eval = __call__

    def ev(self, t: Term, args: tuple) -> int:
        if type(t) is Compose:
            shallow = self._shallow.get(id(t))
            if shallow is None:
                shallow = self._shallow[id(t)] = _is_shallow(t)
            if shallow:
                return self._compose(t, args)  # cheaper to recompute than to memoize
        sup = self._support.get(id(t), 0)
        if sup == 0:
            r = _reads(t, self._reads)
            sup = None if len(r) == t.arity else tuple(sorted(r))
            self._support[id(t)] = sup
        key = (id(t), args if sup is None else tuple([args[i] for i in sup]))
        memo = self._memo
        if key in memo:
            return memo[key]
        v = self._dispatch[type(t)](self, t, args)
        memo[key] = v
        return v

    # basics
    def _const0(self, t, a):
        return 0

    def _const1(self, t, a):
        return 1

    def _length(self, t, a):
        return abs(a[0]).bit_length()

    def _sign(self, t, a):
        return 1 if a[0] > 0 else 0

    def _add(self, t, a):
        return a[0] + a[1]

    def _sub(self, t, a):
        return a[0] - a[1]

    def _div2(self, t, a):
        return a[0] >> 1

    def _times(self, t, a):
        return a[0] * a[1]

    def _proj(self, t, a):
        return a[t.i - 1]

    def _oracle(self, t, a):
        try:
            fn = self.oracles[t.name]
        except KeyError:
            raise MissingOracle(f"no binding for oracle {t.name!r}") from None
        return int(fn(*a))

    def _compose(self, t, a):
        ev = self.ev
        inner = tuple(a[s.i - 1] if type(s) is Proj else ev(s, a) for s in t.args)
        fast = _BASIC.get(type(t.f))
        if fast is not None:
            return fast(inner)
        return ev(t.f, inner)

    # schemas: first argument is the derivation variable
    def _ode1(self, t, a):
        return self.ode_sum(t.g, t.h, None, a, shift_unit=1)

    def _ode2(self, t, a):
        K = length(self.ev(t.k, a[1:]))
        return self.ode_sum(t.g, t.h, K, a, shift_unit=K, star=False)

    def _ode2star(self, t, a):
        K = length(self.ev(t.k, a[1:]))
        return self.ode_sum(t.g, t.h, K, a, shift_unit=K, star=True)

    def ode_sum(self, g, h, K, a, shift_unit, star=True):
        x, ys = a[0], a[1:]
        L = length(x)
        total = self.ev(g, ys) << (shift_unit * L)
        hits = False
        for u in range(L):
            hv = _check_bool(self.ev(h, (alpha(u),) + ys), "h", u)
            if hv:
                hits = True
                total += 1 << (shift_unit * (L - u - 1))
        if hits and K == 0 and not star:
            raise SchemaViolation("KZeroWithHOne", "h takes value 1 while k(y) = 0")
        return total

    def _ode3(self, t, a):
        return self.ev(t.g, a[1:]) >> length(a[0])

    def _ode4(self, t, a):
        ys = a[1:]
        g = self.ev(t.g, ys)
        s = length(self.ev(t.k, ys)) * length(a[0])
        return g << s if t.direction > 0 else g >> s

    def _ode1star(self, t, a):
        x, ys = a[0], a[1:]
        L = length(x)
        total, e = 0, 0  # e = number of k(alpha(t)) == 1 with t > u
        for u in range(L - 1, -1, -1):
            pt = (alpha(u),) + ys
            hv = _check_bool(self.ev(t.h, pt), "h", u)
            total += hv << e
            e += _check_bool(self.ev(t.k, pt), "k", u)
        return total + (self.ev(t.g, ys) << e)

    _dispatch = {
        Const0: _const0, Const1: _const1, Length: _length, Sign: _sign, Add: _add,
        Sub: _sub, Div2: _div2, Times: _times, Proj: _proj, Oracle: _oracle,
        Compose: _compose, Ode1: _ode1, Ode2: _ode2, Ode2Star: _ode2star, Ode3: _ode3,
        Ode4: _ode4, Ode1Star: _ode1star,
    }


# Basics applied inside a composition skip the memo table.
_BASIC = {
    Const0: lambda v: 0,
    Const1: lambda v: 1,
    Length: lambda v: abs(v[0]).bit_length(),
    Sign: lambda v: 1 if v[0] > 0 else 0,
    Add: lambda v: v[0] + v[1],
    Sub: lambda v: v[0] - v[1],
    Div2: lambda v: v[0] >> 1,
    Times: lambda v: v[0] * v[1],
}


_SCHEMAS = (Ode1, Ode2, Ode2Star, Ode3, Ode4, Ode1Star)


def _reads(t: Term, cache: Dict[int, frozenset]) -> frozenset:
    """0-based argument positions whose value can affect ``t``."""
    r = cache.get(id(t))
    if r is not None:
        return r
    tt = type(t)
    if tt is Proj:
        r = frozenset((t.i - 1,))
    elif tt in (Const0, Const1):
        r = frozenset()
    elif tt is Compose:
        r = frozenset().union(*(_reads(t.args[j], cache) for j in _reads(t.f, cache)))
    elif tt in _SCHEMAS:
        # g (and k outside Ode1*) see ys; h (and Ode1*'s k) see (z, ys)
        out = {0} | {j + 1 for j in _reads(t.g, cache)}
        if tt is Ode1Star:
            out |= _reads(t.h, cache) | _reads(t.k, cache)
        else:
            if tt is not Ode3:
                out |= _reads(t.h, cache) if tt is not Ode4 else set()
            if tt in (Ode2, Ode2Star, Ode4):
                out |= {j + 1 for j in _reads(t.k, cache)}
        r = frozenset(out)
    else:
        r = frozenset(range(t.arity))
    cache[id(t)] = r
    return r


def _is_shallow(t: Compose) -> bool:
    return type(t.f) in _BASIC and all(type(s) in (Proj, Const0, Const1) for s in t.args)


def evaluate(t, args: Sequence[int], oracles=None) -> int:
    """Value of the term ``t`` at ``args``."""
    return Evaluator(oracles)(t, args)


# Per-schema solvers with explicit components.

def solve_ode1(g: Term, h: Term, x: int, ys=(), oracles=None) -> int:
    return Evaluator(oracles).ode_sum(g, h, None, (x,) + tuple(ys), shift_unit=1)


def solve_ode2(g: Term, h: Term, k: Term, x: int, ys=(), star: bool = False, oracles=None) -> int:
    ev = Evaluator(oracles)
    K = length(ev.ev(k, tuple(ys)))
    return ev.ode_sum(g, h, K, (x,) + tuple(ys), shift_unit=K, star=star)


def solve_ode3(g: Term, x: int, ys=(), oracles=None) -> int:
    return Evaluator(oracles).ev(Ode3(g), (x,) + tuple(ys))


def solve_ode4(g: Term, k: Term, direction: int, x: int, ys=(), oracles=None) -> int:
    return Evaluator(oracles).ev(Ode4(g, k, direction), (x,) + tuple(ys))


def solve_ode1_star(g: Term, h: Term, k: Term, x: int, ys=(), oracles=None) -> int:
    return Evaluator(oracles).ev(Ode1Star(g, h, k), (x,) + tuple(ys))


# Step oracle

def default_step_bound() -> int:
    env = os.environ.get("ODECIRC_MAX_ORACLE_X")
    return int(env) if env else DEFAULT_STEP_BOUND


_SCHEMAS = (Ode1, Ode2, Ode2Star, Ode3, Ode4, Ode1Star)


class StepEvaluator(Evaluator):
    """Evaluates schema nodes by iterating their difference equation.

    ``f(x+1) = f(x) + (len(x+1) - len(x)) * rhs(x, f(x))``; the right-hand
    side is only computed where the length increases.
    """

    def __init__(self, oracles=None, bound: Optional[int] = None):
        super().__init__(oracles)
        self.bound = default_step_bound() if bound is None else bound

    def sweep(self, t: Term, ys: tuple, upto: int):
        """Yield ``f(x, ys)`` for ``x = 0 .. upto`` for a schema node ``t``."""
        if upto > self.bound:
            raise BoundExceeded(f"x = {upto} exceeds step bound {self.bound}")
        ev = self.ev
        f = ev(t.g, ys)
        star = isinstance(t, (Ode2Star, Ode1Star))
        K = None
        if isinstance(t, (Ode2, Ode2Star, Ode4)):
            K = length(ev(t.k, ys))
        u = 0
        for x in range(upto + 1):
            yield f
            if x == upto:
                break
            if length(x + 1) == length(x):
                continue
            f = f + self._rhs(t, x, ys, f, K, star, u)
            u += 1

    def _rhs(self, t, x, ys, f, K, star, u):
        pt = (x,) + ys
        if isinstance(t, Ode1):
            return f + _check_bool(self.ev(t.h, pt), "h", u)
        if isinstance(t, (Ode2, Ode2Star)):
            hv = _check_bool(self.ev(t.h, pt), "h", u)
            if hv and K == 0 and not star:
                raise SchemaViolation("KZeroWithHOne", "h takes value 1 while k(y) = 0")
            return ((1 << K) - 1) * f + hv
        if isinstance(t, Ode3):
            return -(f - (f >> 1))
        if isinstance(t, Ode4):
            if t.direction > 0:
                return ((1 << K) - 1) * f
            return -(f - (f >> K))
        # Ode1Star
        kv = _check_bool(self.ev(t.k, pt), "k", u)
        hv = _check_bool(self.ev(t.h, pt), "h", u)
        return kv * f + hv

    def _schema(self, t, a):
        x = abs(a[0])
        out = None
        for out in self.sweep(t, a[1:], x):
            pass
        return out

    _dispatch = dict(Evaluator._dispatch)
    for _cls in _SCHEMAS:
        _dispatch[_cls] = _schema
    del _cls


def step_oracle(t, x: int, ys=(), bound: Optional[int] = None, oracles=None) -> int:
    """Value of ``t`` at ``(x, *ys)`` computed by iterating every schema."""
    return StepEvaluator(oracles, bound)(t, (x,) + tuple(ys))


# General linear length-ODE (testing oracle)

def solve_linear_length_ode(A, B, g, x: int, ys=(), bindings=None, oracles=None) -> int:
    """Sum-of-products solution of ``df/dlen = A * f + B`` with ``f(0) = g``.

    ``A`` and ``B`` are sg-polynomials over the names ``x`` (the jump point
    ``alpha(t)``), ``y1 .. yp``, ``f`` (the value ``f(alpha(t))``) and any
    name in ``bindings``.  A binding is an int, or a term evaluated at
    ``(alpha(t), *ys)`` if its arity is ``p + 1`` and at ``ys`` if ``p``.
    """
    for name, P in (("A", A), ("B", B)):
        if not poly.is_essentially_constant(P, {"f"}):
            raise NotEssentiallyConstant(f"{name} is not essentially constant in f")
    ys = tuple(ys)
    p = len(ys)
    bindings = dict(bindings or {})
    ev = Evaluator(oracles)
    g0 = g if isinstance(g, int) else ev(g, ys)
    L = length(x)
    F = {0: g0}  # F[u] = f at any x of length u

    def env_at(t):
        pt = alpha(t)

        def look(name):
            if name == "x":
                return pt
            if name == "f":
                return value_at(t)
            if name.startswith("y") and name[1:].isdigit():
                return ys[int(name[1:]) - 1]
            b = bindings[name]
            if isinstance(b, int):
                return b
            return ev(b, (pt,) + ys) if b.arity == p + 1 else ev(b, ys)

        return look

    def value_at(u):
        if u not in F:
            F[u] = formula(u)
        return F[u]

    def formula(Lx):
        total = 0
        for u in range(-1, Lx):
            prod = 1
            for t in range(u + 1, Lx):
                prod *= 1 + poly.evaluate(A, env_at(t))
            b = g0 if u == -1 else poly.evaluate(B, env_at(u))
            total += prod * b
        return total

    for u in range(L):
        value_at(u)
    return value_at(L)
