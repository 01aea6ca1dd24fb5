"""sg-polynomial expressions and their degree calculus."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping


class PolyExpr:
    def __add__(self, other):
        return PAdd(self, _lift(other))

    def __radd__(self, other):
        return PAdd(_lift(other), self)

    def __sub__(self, other):
        return PSub(self, _lift(other))

    def __rsub__(self, other):
        return PSub(_lift(other), self)

    def __mul__(self, other):
        return PMul(self, _lift(other))

    def __rmul__(self, other):
        return PMul(_lift(other), self)

    def __pow__(self, n: int):
        out = self
        for _ in range(n - 1):
            out = PMul(out, self)
        return out


@dataclass(frozen=True)
class IntConst(PolyExpr):
    value: int


@dataclass(frozen=True)
class Var(PolyExpr):
    name: str


@dataclass(frozen=True)
class PAdd(PolyExpr):
    left: PolyExpr
    right: PolyExpr


@dataclass(frozen=True)
class PSub(PolyExpr):
    left: PolyExpr
    right: PolyExpr


@dataclass(frozen=True)
class PMul(PolyExpr):
    left: PolyExpr
    right: PolyExpr


@dataclass(frozen=True)
class Sg(PolyExpr):
    arg: PolyExpr


def _lift(v):
    return IntConst(v) if isinstance(v, int) else v


def sg(p) -> Sg:
    return Sg(_lift(p))


def variables(p: PolyExpr) -> frozenset:
    if isinstance(p, Var):
        return frozenset({p.name})
    if isinstance(p, IntConst):
        return frozenset()
    if isinstance(p, Sg):
        return variables(p.arg)
    return variables(p.left) | variables(p.right)


def degree(p: PolyExpr, vars: Iterable[str]) -> int:
    """Degree of the variable set ``vars`` in ``p``.

    Constants and non-member variables have degree 0, member variables 1;
    sums and differences take the max, products the sum, and anything under
    sg has degree 0.
    """
    vs = frozenset(vars)
    return _deg(p, vs)


def _deg(p, vs):
    if isinstance(p, IntConst):
        return 0
    if isinstance(p, Var):
        return 1 if p.name in vs else 0
    if isinstance(p, Sg):
        return 0
    if isinstance(p, (PAdd, PSub)):
        return max(_deg(p.left, vs), _deg(p.right, vs))
    if isinstance(p, PMul):
        return _deg(p.left, vs) + _deg(p.right, vs)
    raise TypeError(f"not a PolyExpr: {p!r}")


def is_essentially_constant(p: PolyExpr, vars) -> bool:
    return degree(p, vars) == 0


def is_essentially_linear(p: PolyExpr, vars) -> bool:
    return degree(p, vars) == 1


def has_nested_sg(p: PolyExpr, inside: bool = False) -> bool:
    """True when some sg occurs below another sg (flagged, never rejected)."""
    if isinstance(p, Sg):
        return inside or has_nested_sg(p.arg, True)
    if isinstance(p, (IntConst, Var)):
        return False
    return has_nested_sg(p.left, inside) or has_nested_sg(p.right, inside)


def evaluate(p: PolyExpr, env: Mapping[str, int] | Callable[[str], int]) -> int:
    lookup = env if callable(env) else env.__getitem__
    if isinstance(p, IntConst):
        return p.value
    if isinstance(p, Var):
        return lookup(p.name)
    if isinstance(p, Sg):
        return 1 if evaluate(p.arg, lookup) > 0 else 0
    a, b = evaluate(p.left, lookup), evaluate(p.right, lookup)
    if isinstance(p, PAdd):
        return a + b
    if isinstance(p, PSub):
        return a - b
    return a * b
