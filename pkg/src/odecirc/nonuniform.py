"""Circuit families as oracle basics, and the Eval terms that simulate them.

A family is described by predicates over gate indices: ``C(x, a, b)`` (a is
a predecessor of b), ``L0in(a, x)`` / ``L0neg(a, x)`` (a is a positive or
negated input gate), ``Le(a, x)`` (a sits at level e) and ``m(n)`` (number
of outputs).  Gate indices range over ``0 .. n^k - 1`` with the outputs at
the top of that range.  One extra oracle ``rep(x)`` names the all-ones word
of the input length the circuit was built for, so inputs with leading zero
bits are read by the same circuit; for a genuine family it is
``2^len(x) - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .circuit import (
    AND, INPUT_NEG, INPUT_POS, MAJ, OR, BitVector, Circuit, Gate, simulate, validate_normal_form,
)
from .errors import IndexSpaceTooSmall, VariantMismatch
from .evaluator import Evaluator
from .modes import CheckedTerm, specialize, validate
from .stdlib import (
    BIT_of, P, and_, ap, bound_for, cosg, eq, exists_raw, forall_raw, implies, one, or_, pow2len,
)
from .terms import Const0, Ode1, Ode2Star, Oracle, Term, add, div2, length, sign, sub

Pred = Callable[..., int]

#: Oracle names used by the Eval terms.
C_NAME, L0IN, L0NEG, M_NAME, REP = "C", "L0in", "L0neg", "m", "rep"


def level_name(e: int) -> str:
    return f"L{e}"


def gate_kind(variant: str, level: int) -> str:
    if variant == "AC":
        return OR if level % 2 else AND
    return (MAJ, OR, AND)[level % 3]


@dataclass(frozen=True)
class CircuitFamilyAdapter:
    """Host-function predicates describing a circuit family."""

    k: int
    d: int
    variant: str
    m: Callable[[int], int]
    C: Pred
    L0in: Pred
    L0neg: Pred
    levels: Tuple[Pred, ...]
    rep: Callable[[int], int] = field(default=lambda x: (1 << abs(x).bit_length()) - 1)

    def __post_init__(self):
        if self.variant not in ("AC", "TC"):
            raise ValueError("variant must be 'AC' or 'TC'")
        if len(self.levels) != self.d:
            raise ValueError(f"need {self.d} level predicates, got {len(self.levels)}")
        if self.variant == "AC" and self.d % 2:
            raise ValueError("AC families have even depth")

    def L(self, e: int) -> Pred:
        return self.levels[e - 1]

    def oracles(self) -> Dict[str, Callable[..., int]]:
        table = {C_NAME: self.C, L0IN: self.L0in, L0NEG: self.L0neg, M_NAME: self.m,
                 REP: self.rep}
        for e in range(1, self.d + 1):
            table[level_name(e)] = self.levels[e - 1]
        return table

    def drop_edge(self, a: int, b: int) -> "CircuitFamilyAdapter":
        """Copy of the adapter with the edge a -> b removed (fault injection)."""
        C = self.C

        def C2(x, i, t):
            return 0 if (i, t) == (a, b) else C(x, i, t)

        return replace(self, C=C2)


def adapter_from_circuit(c: Circuit) -> CircuitFamilyAdapter:
    """Predicates answering for the single circuit ``c`` at every input length."""
    n, space = c.n_inputs, c.n_inputs ** c.k
    for g in c.gates:
        if g.id >= space:
            raise IndexSpaceTooSmall(f"gate id {g.id} exceeds n^k - 1 = {space - 1}")
    validate_normal_form(c)
    edges = frozenset((p, g.id) for g in c.gates for p in g.preds)
    by_level: Dict[int, frozenset] = {}
    for g in c.gates:
        if g.level > 0:
            by_level.setdefault(g.level, set()).add(g.id)
    by_level = {lv: frozenset(ids) for lv, ids in by_level.items()}
    m = c.m

    def C(x, a, b):
        return 1 if (a, b) in edges else 0

    def L0in(a, x):
        return 1 if 0 <= a < n else 0

    def L0neg(a, x):
        return 1 if n <= a < 2 * n else 0

    def level(e):
        ids = by_level.get(e, frozenset())
        return lambda a, x: 1 if a in ids else 0

    return CircuitFamilyAdapter(
        k=c.k, d=c.depth, variant=c.variant, m=lambda _n: m, C=C, L0in=L0in, L0neg=L0neg,
        levels=tuple(level(e) for e in range(1, c.depth + 1)),
        rep=lambda x: (1 << n) - 1,
    )


# Eval terms

@dataclass(frozen=True)
class EvalHierarchy:
    """The raw Eval terms: ``levels[e]`` is Eval_e, each of arity 2 ``(t, x)``."""

    levels: Tuple[Term, ...]
    gate: Term        # Eval_d restricted to output indices
    output: Term      # (y, x) -> output word when y = 2^m


def _count(v: Term) -> Term:
    """(X, ys) -> #{z <= len(X) : v(z, ys) = 1}, an Ode2* with vanishing k."""
    p = v.arity - 1
    X = P(1, p + 1)
    ys = tuple(P(i, p + 1) for i in range(2, p + 2))
    g = ap(v, Const0(p), *(P(i, p) for i in range(1, p + 1)))
    h = ap(v, length(add(X, one(p + 1))), *ys)
    return Ode2Star(g, h, Const0(p))


class _Basis:
    """Predicate terms: oracle nodes, or caller-supplied closed-form terms."""

    def __init__(self, d: int, terms: Optional[Mapping[str, Term]]):
        self.terms = dict(terms or {})
        arities = {C_NAME: 3, L0IN: 2, L0NEG: 2, M_NAME: 1, REP: 1}
        arities.update({level_name(e): 2 for e in range(1, d + 1)})
        self.arity = arities

    def __call__(self, name: str, *args: Term) -> Term:
        t = self.terms.get(name)
        if t is None:
            t = Oracle(name, self.arity[name], boolean=name not in (M_NAME, REP))
        return ap(t, *args)


def build_eval_hierarchy(adapter_or_spec, predicate_terms: Optional[Mapping[str, Term]] = None
                         ) -> EvalHierarchy:
    """Eval terms for a family; predicates are oracles unless given as terms.

    ``adapter_or_spec`` is an adapter or any object with ``k``, ``d`` and
    ``variant`` attributes.
    """
    k, d, variant = adapter_or_spec.k, adapter_or_spec.d, adapter_or_spec.variant
    B = _Basis(d, predicate_terms)
    T, X = P(1, 2), P(2, 2)
    rep = B(REP, X)
    n = length(rep)
    Y = ap(bound_for(k, 1), rep)          # len(Y) = n^k bounds every gate index
    N = length(Y)

    E0 = or_(and_(B(L0IN, T, X), BIT_of(X, T)),
             and_(B(L0NEG, T, X), cosg(BIT_of(X, sub(T, n)))))
    levels: List[Term] = [E0]
    I3, T3, X3 = P(1, 3), P(2, 3), P(3, 3)
    for e in range(1, d + 1):
        prev = ap(levels[-1], I3, X3)
        edge = B(C_NAME, X3, I3, T3)
        kind = gate_kind(variant, e)
        if kind == AND:
            body = ap(forall_raw(implies(edge, prev)), Y, T, X)
        elif kind == OR:
            body = ap(exists_raw(and_(edge, prev)), Y, T, X)
        else:
            ones = ap(_count(and_(edge, prev)), Y, T, X)
            preds = ap(_count(edge), Y, T, X)
            body = sign(sub(add(ones, ones), preds))   # strict majority
        levels.append(and_(B(level_name(e), T, X), body))

    M = B(M_NAME, n)
    in_range = and_(sign(add(sub(T, N), add(M, one(2)))), sign(sub(N, T)))
    gate = and_(levels[-1], in_range)

    # f(2^m, x): digit u (most significant first) is Eval(N - 1 - m + u)
    Yv, Xv = P(1, 2), P(2, 2)
    nv = length(B(REP, Xv))
    Nv = length(ap(bound_for(k, 1), B(REP, Xv)))
    idx = add(sub(sub(Nv, one(2)), B(M_NAME, nv)), length(Yv))
    output = Ode1(Const0(1), ap(gate, idx, Xv))
    return EvalHierarchy(tuple(levels), gate, output)


def _home(variant: str, uniform: bool) -> str:
    base = "ACDL" if variant == "AC" else "TCDL-STAR"
    return base if uniform else base + "_C"


def _checked(t: Term, variant: str, uniform: bool) -> CheckedTerm:
    mode = _home(variant, uniform)
    return validate(specialize(t, mode), mode)


def build_eval_term(adapter: CircuitFamilyAdapter,
                    predicate_terms: Optional[Mapping[str, Term]] = None) -> CheckedTerm:
    """Output term of an AC family, checked under ACDL with oracles.

    With ``predicate_terms`` covering every predicate the result is checked
    under plain ACDL instead.
    """
    if adapter.variant != "AC":
        raise VariantMismatch("build_eval_term needs an AC family; use build_eval_term_tc")
    h = build_eval_hierarchy(adapter, predicate_terms)
    return _checked(h.output, "AC", _covers(adapter.d, predicate_terms))


def build_eval_term_tc(adapter: CircuitFamilyAdapter,
                       predicate_terms: Optional[Mapping[str, Term]] = None) -> CheckedTerm:
    """Output term of a TC family; Maj levels count predecessors with Ode2*."""
    if adapter.variant != "TC":
        raise VariantMismatch("build_eval_term_tc needs a TC family; use build_eval_term")
    h = build_eval_hierarchy(adapter, predicate_terms)
    return _checked(h.output, "TC", _covers(adapter.d, predicate_terms))


def _covers(d: int, terms) -> bool:
    need = {C_NAME, L0IN, L0NEG, M_NAME, REP} | {level_name(e) for e in range(1, d + 1)}
    return bool(terms) and need <= set(terms)


def eval_term_for(adapter: CircuitFamilyAdapter) -> CheckedTerm:
    return (build_eval_term if adapter.variant == "AC" else build_eval_term_tc)(adapter)


# Round trip

def output_bits(value: int, m: int) -> Tuple[int, ...]:
    """Output gate bits in id order from the output word (first id = MSB)."""
    return tuple((value >> (m - 1 - j)) & 1 for j in range(m))


@dataclass
class Mismatch:
    input: BitVector
    expected: Tuple[int, ...]
    got: Tuple[int, ...]


@dataclass
class RoundTripReport:
    checked: int = 0
    mismatches: List[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def format(self) -> str:
        lines = [f"checked {self.checked} inputs, {len(self.mismatches)} mismatches"]
        for mm in self.mismatches:
            lines.append(f"input {mm.input} expected {''.join(map(str, mm.expected))} "
                         f"got {''.join(map(str, mm.got))}")
        return "\n".join(lines)


def all_inputs(n: int) -> List[BitVector]:
    return [BitVector.from_int(v, n) for v in range(1 << n)]


def roundtrip_check(c: Circuit, inputs: Optional[Iterable] = None,
                    adapter: Optional[CircuitFamilyAdapter] = None,
                    stop_at_first: bool = False) -> RoundTripReport:
    """Compare direct simulation with evaluation of the built Eval term.

    ``adapter`` overrides the one derived from ``c`` (fault injection).
    """
    validate_normal_form(c)
    adapter = adapter or adapter_from_circuit(c)
    term = eval_term_for(adapter)
    ev = Evaluator(adapter.oracles())
    y = 1 << c.m
    report = RoundTripReport()
    for inp in (all_inputs(c.n_inputs) if inputs is None else inputs):
        if not isinstance(inp, BitVector):
            inp = BitVector(tuple(int(b) for b in inp))
        expected = simulate(c, inp).bits
        got = output_bits(ev(term, (y, inp.to_int())), c.m)
        report.checked += 1
        if got != tuple(expected):
            report.mismatches.append(Mismatch(inp, tuple(expected), got))
            if stop_at_first:
                break
    return report


def live_edges(c: Circuit) -> List[Tuple[int, int]]:
    """Edges (a, b) whose target gate has a path to an output."""
    by_id = c.by_id
    seen, stack = set(), list(c.output_ids)
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        stack.extend(by_id[g].preds)
    return [(p, g.id) for g in c.gates if g.id in seen for p in g.preds]


def simulate_without_edge(c: Circuit, edge: Tuple[int, int], inp: BitVector) -> Tuple[int, ...]:
    """Direct simulation of ``c`` with one edge removed.

    An And gate left without predecessors yields 1, an Or or Maj gate 0,
    matching the empty quantifiers and counts of the Eval terms.
    """
    n = c.n_inputs
    val: Dict[int, int] = {}
    for i in range(n):
        val[i] = inp.bits[i]
        val[i + n] = 1 - inp.bits[i]
    for g in c.ordered:
        if g.level == 0:
            continue
        vs = [val[p] for p in g.preds if (p, g.id) != edge]
        if g.kind == AND:
            val[g.id] = int(all(vs))
        elif g.kind == OR:
            val[g.id] = int(any(vs))
        else:
            val[g.id] = int(2 * sum(vs) > len(vs))
    return tuple(val[o] for o in c.output_ids)


def observable_edges(c: Circuit) -> List[Tuple[int, int]]:
    """Edges whose removal changes the function computed by ``c``."""
    inputs = all_inputs(c.n_inputs)
    base = [tuple(simulate(c, x).bits) for x in inputs]
    return [e for e in live_edges(c)
            if any(simulate_without_edge(c, e, x) != y for x, y in zip(inputs, base))]


def fault_injection_trial(c: Circuit, rng) -> Optional[bool]:
    """Corrupt the adapter by one observable dropped edge; True when noticed.

    Returns None when every edge is redundant (no mutant can be told apart).
    """
    edges = observable_edges(c)
    if not edges:
        return None
    a, b = edges[int(rng.integers(len(edges)))]
    bad = adapter_from_circuit(c).drop_edge(a, b)
    return not roundtrip_check(c, adapter=bad, stop_at_first=True).ok


# A uniform stand-in family: x -> its low floor(n/2) bits

def low_half_circuit(n: int) -> Circuit:
    """Member of the low-half family for input length n (n >= 4)."""
    if n < 4:
        raise ValueError("the low-half family starts at n = 4")
    m = n // 2
    N = n * n
    gates = [Gate(i, 0, INPUT_POS if i < n else INPUT_NEG) for i in range(2 * n)]
    gates += [Gate(2 * n + j, 1, OR, (j,)) for j in range(m)]
    # output N - m + j carries bit m - 1 - j, so the word reads x mod 2^m
    gates += [Gate(N - m + j, 2, AND, (2 * n + m - 1 - j,)) for j in range(m)]
    return Circuit("AC", n, 2, 2, tuple(gates), tuple(range(N - m, N)))


@dataclass(frozen=True)
class _Spec:
    k: int
    d: int
    variant: str


def low_half_predicates() -> Dict[str, Term]:
    """Closed-form predicate terms of the low-half family (no oracles)."""

    def n_of(x):
        return length(x)

    def between(a, lo, hi):
        """lo <= a < hi."""
        return and_(sign(add(sub(a, lo), one(a.arity))), sign(sub(hi, a)))

    A2, X2 = P(1, 2), P(2, 2)
    n2 = n_of(X2)
    m2 = div2(n2)
    N2 = length(ap(bound_for(2, 1), X2))
    L0in = sign(sub(n2, A2))
    L0neg = between(A2, n2, add(n2, n2))
    L1 = between(A2, add(n2, n2), add(add(n2, n2), m2))
    L2 = between(A2, sub(N2, m2), N2)
    X3, I3, T3 = P(1, 3), P(2, 3), P(3, 3)
    n3 = n_of(X3)
    m3 = div2(n3)
    N3 = length(ap(bound_for(2, 1), X3))
    two_n = add(n3, n3)
    e1 = and_(between(T3, two_n, add(two_n, m3)), eq(I3, sub(T3, two_n)))
    e2 = and_(between(T3, sub(N3, m3), N3),
              eq(I3, sub(add(two_n, sub(N3, one(3))), T3)))
    C = or_(e1, e2)
    X1 = P(1, 1)
    return {
        C_NAME: C, L0IN: L0in, L0NEG: L0neg, level_name(1): L1, level_name(2): L2,
        M_NAME: div2(X1), REP: sub(pow2len(X1), one(1)),
    }


def low_half_term() -> CheckedTerm:
    """Eval term of the low-half family, checked under plain ACDL."""
    return build_eval_term(_adapter_shape(), low_half_predicates())


def _adapter_shape() -> CircuitFamilyAdapter:
    zero = lambda *a: 0  # noqa: E731
    return CircuitFamilyAdapter(k=2, d=2, variant="AC", m=lambda n: n // 2, C=zero, L0in=zero,
                                L0neg=zero, levels=(zero, zero))
