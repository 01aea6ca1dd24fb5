"""Mode presets, static validation and rewriting between presets."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import FrozenSet, List, Optional, Tuple

from .errors import InconsistentArity, ValidationError
from .terms import (
    Compose, Const0, Const1, Ode1, Ode1Star, Ode2, Ode2Star, Ode3, Ode4, Oracle, Proj,
    Sign, Sub, Term, children, kind, length, sub, add,
)

_AC_BASICS = frozenset({"Const0", "Const1", "Length", "Sign", "Add", "Sub", "Div2", "Proj"})
_TC_BASICS = _AC_BASICS | {"Times"}

#: Name of the oracle basic standing for x # y in the smash presets.
SMASH = "smash"


@dataclass(frozen=True)
class ModePreset:
    name: str
    basics: FrozenSet[str]
    schemas: FrozenSet[str]
    builtin_oracles: FrozenSet[str] = frozenset()
    allow_oracles: bool = False
    wk_only: bool = False  # Ode2 accepted only in its weak form (h == Const0)

    @property
    def is_tc(self) -> bool:
        return self.name.startswith("TCDL")

    def with_oracles(self) -> "ModePreset":
        """Non-uniform variant: arbitrary oracle basics are permitted."""
        return replace(self, name=self.name + "_C", allow_oracles=True)


PRESETS = {
    p.name: p
    for p in [
        ModePreset("ACDL", _AC_BASICS, frozenset({"Ode2", "Ode3"})),
        ModePreset("ACDL-SMASH", _AC_BASICS, frozenset({"Ode1", "Ode3"}), frozenset({SMASH})),
        ModePreset("ACDL-WK", _AC_BASICS, frozenset({"Ode1", "Ode2", "Ode3"}), wk_only=True),
        ModePreset("ACDL-ODE4", _AC_BASICS, frozenset({"Ode1", "Ode4"})),
        ModePreset("TCDL", _TC_BASICS, frozenset({"Ode2", "Ode3"})),
        ModePreset("TCDL-STAR", _AC_BASICS, frozenset({"Ode2Star", "Ode3"})),
        ModePreset("TCDL-SMASH", _AC_BASICS, frozenset({"Ode1Star", "Ode3"}), frozenset({SMASH})),
    ]
}


def get_mode(mode) -> ModePreset:
    if isinstance(mode, ModePreset):
        return mode
    key = str(mode).upper().replace("_", "-")
    if key.endswith("-C") and key[:-2] in PRESETS:
        return PRESETS[key[:-2]].with_oracles()
    try:
        return PRESETS[key]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; choose from {sorted(PRESETS)}") from None


def modes_requiring(node_kind: str):
    return sorted(n for n, p in PRESETS.items() if node_kind in p.basics | p.schemas)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    path: Tuple[int, ...] = ()

    def __str__(self):
        where = "/".join(map(str, self.path)) or "root"
        return f"{self.severity} {self.code} at {where}: {self.message}"


@dataclass(frozen=True)
class CheckedTerm:
    """A term that passed :func:`validate` under ``mode``."""

    term: Term
    mode: ModePreset
    warnings: Tuple[Diagnostic, ...] = field(default=(), compare=False)

    @property
    def arity(self) -> int:
        return self.term.arity


def statically_boolean(t: Term) -> bool:
    """Best-effort syntactic judgment that ``t`` only takes values in {0, 1}."""
    if isinstance(t, (Const0, Const1, Sign)):
        return True
    if isinstance(t, Oracle):
        return t.boolean
    if isinstance(t, Compose):
        if statically_boolean(t.f):
            return True
        # cosg pattern: 1 - b with b boolean
        if isinstance(t.f, Sub) and isinstance(t.args[0], Const1) and statically_boolean(t.args[1]):
            return True
        # projection-like selection of a boolean argument
        if isinstance(t.f, Proj) and statically_boolean(t.args[t.f.i - 1]):
            return True
    return False


_GUARDED = {Ode1: ("h",), Ode2: ("h",), Ode2Star: ("h",), Ode1Star: ("h", "k")}


def diagnose(t: Term, mode) -> List[Diagnostic]:
    """Return every diagnostic for ``t`` under ``mode`` (errors and warnings)."""
    mode = get_mode(mode)
    out: List[Diagnostic] = []
    seen = set()

    def visit(s: Term, path):
        if id(s) in seen:
            return
        seen.add(id(s))
        k = kind(s)
        try:
            s.arity
        except InconsistentArity as exc:
            out.append(Diagnostic("error", "InconsistentArity", str(exc), path))
        if isinstance(s, Oracle):
            if not (mode.allow_oracles or s.name in mode.builtin_oracles):
                out.append(Diagnostic("error", "UnknownOracle",
                                      f"oracle {s.name!r} not available in {mode.name}", path))
        elif k in ("Compose",):
            pass
        elif k in mode.basics or k in mode.schemas:
            pass
        else:
            need = modes_requiring(k)
            hint = f"; requires one of {', '.join(need)}" if need else ""
            out.append(Diagnostic("error", "ForbiddenNode", f"{k} not permitted in {mode.name}{hint}", path))
        if isinstance(s, Ode2) and mode.wk_only and not isinstance(s.h, Const0):
            out.append(Diagnostic("error", "ForbiddenNode",
                                  f"{mode.name} only accepts Ode2 in weak form (h = 0)", path))
        for attr in _GUARDED.get(type(s), ()):
            child = getattr(s, attr)
            if not statically_boolean(child):
                out.append(Diagnostic("warning", "DynamicBooleanGuard",
                                      f"{attr} of {k} is not syntactically boolean; checked at runtime",
                                      path))
        for idx, c in enumerate(children(s)):
            visit(c, path + (idx,))

    visit(t, ())
    return out


def validate(t, mode) -> CheckedTerm:
    """Check ``t`` under ``mode``; raise :class:`ValidationError` on any error."""
    if isinstance(t, CheckedTerm):
        t = t.term
    mode = get_mode(mode)
    diags = diagnose(t, mode)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ValidationError(diags)
    return CheckedTerm(t, mode, tuple(diags))


def is_tc_only(t: Term) -> bool:
    from .terms import Times
    return any(isinstance(s, (Times, Ode1Star, Ode2Star)) for s in _walk(t))


def _walk(t):
    stack, seen = [t], set()
    while stack:
        s = stack.pop()
        if id(s) in seen:
            continue
        seen.add(id(s))
        yield s
        stack.extend(children(s))


def specialize(t: Term, mode) -> Term:
    """Rewrite schema nodes into the generator set of ``mode`` where an exact
    equivalent exists.

    * Ode1(g, h) is Ode2(g, h, 1), Ode2*(g, h, 1) or Ode1*(g, h, 1).
    * Ode2(g, 0, k) is Ode4(g, k, +), or a shift by a smash when # is basic.
    * Ode3(g) is Ode4(g, 1, -).

    Nodes with no rewrite are left alone; :func:`validate` reports them.
    """
    mode = get_mode(mode)
    cache = {}

    def rw(s: Term) -> Term:
        hit = cache.get(id(s))
        if hit is not None:
            return hit[1]
        r = _rewrite(s, rw, mode)
        cache[id(s)] = (s, r)  # keep s alive so its id is not reused
        return r

    return rw(t)


def _rewrite(s, rw, mode):
    from .terms import Ode1 as O1
    S = mode.schemas
    if isinstance(s, Compose):
        f, args = rw(s.f), tuple(rw(a) for a in s.args)
        if f is s.f and all(a is b for a, b in zip(args, s.args)):
            return s
        return Compose(f, args)
    if isinstance(s, O1):
        g, h = rw(s.g), rw(s.h)
        p = s.g.arity
        if "Ode1" in S:
            return O1(g, h)
        if "Ode2" in S:
            return Ode2(g, h, Const1(p))
        if "Ode2Star" in S:
            return Ode2Star(g, h, Const1(p))
        if "Ode1Star" in S:
            return Ode1Star(g, h, Const1(p + 1))
        return O1(g, h)
    if isinstance(s, Ode2):
        g, h, k = rw(s.g), rw(s.h), rw(s.k)
        weak = isinstance(s.h, Const0)
        if "Ode2" in S and (weak or not mode.wk_only):
            return Ode2(g, h, k)
        if "Ode2Star" in S:
            # same closed form wherever the Ode2 side condition holds
            return Ode2Star(g, h, k)
        if weak and "Ode4" in S:
            return Ode4(g, k, 1)
        if weak and SMASH in mode.builtin_oracles:
            return _shift_by_smash(g, k, rw, mode)
        if isinstance(s.k, Const1) and ("Ode1" in S or "Ode1Star" in S):
            return rw(Ode1(s.g, s.h))
        return Ode2(g, h, k)
    if isinstance(s, Ode3):
        g = rw(s.g)
        if "Ode3" in S:
            return Ode3(g)
        if "Ode4" in S:
            return Ode4(g, Const1(s.g.arity), -1)
        return Ode3(g)
    if isinstance(s, Ode4):
        g, k = rw(s.g), rw(s.k)
        if "Ode4" in S:
            return Ode4(g, k, s.direction)
        if s.direction < 0 and isinstance(s.k, Const1) and "Ode3" in S:
            return Ode3(g)
        if s.direction > 0:
            return rw(Ode2(s.g, Const0(s.g.arity + 1), s.k))
        return Ode4(g, k, s.direction)
    if isinstance(s, (Ode1Star, Ode2Star)):
        return type(s)(rw(s.g), rw(s.h), rw(s.k))
    return s


def _shift_by_smash(g, k, rw, mode):
    # g(y) * 2^(len(k(y)) * len(x)) == 2^len(smash(x, k(y)) - 1) * g(y)
    p = g.arity
    xs = tuple(Proj(i, p + 1) for i in range(2, p + 2))
    x = Proj(1, p + 1)
    smash = Compose(Oracle(SMASH, 2), (x, Compose(k, xs)))
    z = sub(smash, Const1(p + 1))
    shift = rw(Ode1(Proj(1, 1), Const0(2)))
    return Compose(shift, (z, Compose(g, xs)))
