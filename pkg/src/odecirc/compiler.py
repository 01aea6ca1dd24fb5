"""Lowering of algebra terms to constant-depth normal-form circuits.

Values travel as sign-and-magnitude bundles whose widths come from an
interval analysis of the term.  Every block has a depth that depends only on
the term shape: no constant folding is done, so the same term yields the
same depth at every input width.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .circuit import AND, INPUT_NEG, INPUT_POS, MAJ, OR, BitVector, Circuit, Gate, min_k, stats
from .errors import ModeError, PlanTooNarrow, UnboundOracle, WidthMismatch
from .modes import CheckedTerm, get_mode
from .terms import (
    Add, Compose, Const0, Const1, Div2, Length, Ode1, Ode1Star, Ode2, Ode2Star, Ode3, Ode4,
    Oracle, Proj, Sign, Sub, Term, Times,
)

Interval = Tuple[int, int]

#: Rounds of column compression in iterated addition; enough for 2^127 operands.
COMPRESSION_ROUNDS = 4
MIN_BUNDLE = 2


def _len(x: int) -> int:
    return abs(x).bit_length()


def _alpha(u: int) -> int:
    return (1 << u) - 1


def mag_width(iv: Interval) -> int:
    return max(abs(iv[0]), abs(iv[1])).bit_length()


# Interval analysis

def _len_range(iv: Interval) -> Tuple[int, int]:
    lo, hi = iv
    top = max(_len(lo), _len(hi))
    if lo <= 0 <= hi:
        return 0, top
    return min(_len(lo), _len(hi)), top


def _scale_range(g: Interval, smin: int, smax: int) -> Interval:
    lo, hi = g
    return min(lo << smin, lo << smax), max(hi << smin, hi << smax)


def _shr_range(g: Interval, smin: int, smax: int) -> Interval:
    lo, hi = g
    return min(lo >> smin, lo >> smax), max(hi >> smin, hi >> smax)


class IntervalAnalysis:
    """Sound value ranges of subterms, given ranges of the arguments."""

    def __init__(self):
        self._memo: Dict[tuple, Interval] = {}
        self.hull: Dict[int, Interval] = {}
        self._keep: Dict[int, Term] = {}

    def of(self, t: Term, env: Tuple[Interval, ...]) -> Interval:
        key = (id(t), env)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        iv = self._rule(t, env)
        self._memo[key] = iv
        old = self.hull.get(id(t))
        self.hull[id(t)] = iv if old is None else (min(old[0], iv[0]), max(old[1], iv[1]))
        self._keep[id(t)] = t
        return iv

    def h_range(self, h: Term, ys, L: int) -> Interval:
        """Range of h over the jump points alpha(0) .. alpha(L - 1), clamped to {0, 1}."""
        his = [self.of(h, ((_alpha(u), _alpha(u)),) + ys) for u in range(L)]
        if not his:
            return (0, 0)
        return max(0, min(i[0] for i in his)), min(1, max(i[1] for i in his))

    def _rule(self, t, env) -> Interval:
        if isinstance(t, Const0):
            return (0, 0)
        if isinstance(t, Const1):
            return (1, 1)
        if isinstance(t, Proj):
            return env[t.i - 1]
        if isinstance(t, Oracle):
            raise UnboundOracle(f"oracle {t.name!r} cannot be compiled; use the nonuniform adapter")
        if isinstance(t, Length):
            return _len_range(env[0])
        if isinstance(t, Sign):
            lo, hi = env[0]
            return (1 if lo > 0 else 0, 1 if hi > 0 else 0)
        if isinstance(t, Add):
            (a, b), (c, d) = env
            return (a + c, b + d)
        if isinstance(t, Sub):
            (a, b), (c, d) = env
            return (a - d, b - c)
        if isinstance(t, Times):
            (a, b), (c, d) = env
            ps = (a * c, a * d, b * c, b * d)
            return (min(ps), max(ps))
        if isinstance(t, Div2):
            lo, hi = env[0]
            return (lo >> 1, hi >> 1)
        if isinstance(t, Compose):
            args = tuple(self.of(a, env) for a in t.args)
            return self.of(t.f, args)
        x, ys = env[0], env[1:]
        Lmin, Lmax = _len_range(x)
        if isinstance(t, Ode3):
            return _shr_range(self.of(t.g, ys), Lmin, Lmax)
        g = self.of(t.g, ys)
        if isinstance(t, Ode1):
            h = self.h_range(t.h, ys, Lmax)
            lo, hi = _scale_range(g, Lmin, Lmax)
            return lo, hi + ((1 << Lmax) - 1 if h[1] else 0)
        if isinstance(t, Ode1Star):
            h = self.h_range(t.h, ys, Lmax)
            self.h_range(t.k, ys, Lmax)
            lo, hi = _scale_range(g, 0, Lmax)
            return lo, hi + ((1 << Lmax) - 1 if h[1] else 0)
        Kmin, Kmax = _len_range(self.of(t.k, ys))
        if isinstance(t, Ode4):
            if t.direction > 0:
                return _scale_range(g, Kmin * Lmin, Kmax * Lmax)
            return _shr_range(g, Kmin * Lmin, Kmax * Lmax)
        # Ode2 / Ode2Star
        h = self.h_range(t.h, ys, Lmax)
        smax = Kmax * Lmax
        lo, hi = _scale_range(g, Kmin * Lmin, smax)
        return lo, hi + (max((1 << smax) - 1, Lmax) if h[1] else 0)


# Width-independent sign analysis.  Both ends may be None (unbounded); every
# input and every jump point is taken to range over [0, inf), so the answer
# does not depend on input widths and neither does the circuit shape.

Bound = Tuple[Optional[int], Optional[int]]
_NAT: Bound = (0, None)


def _nn(b: Bound) -> bool:
    return b[0] is not None and b[0] >= 0


class SignAnalysis:
    def __init__(self):
        self._memo: Dict[tuple, Bound] = {}

    def of(self, t: Term, env: Tuple[Bound, ...]) -> Bound:
        key = (id(t), env)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = self._rule(t, env)
        return hit

    def _rule(self, t, env) -> Bound:
        if isinstance(t, Const0):
            return (0, 0)
        if isinstance(t, Const1):
            return (1, 1)
        if isinstance(t, Proj):
            return env[t.i - 1]
        if isinstance(t, Oracle):
            return (None, None)
        if isinstance(t, Length):
            lo, hi = env[0]
            if lo is None or hi is None:
                return _NAT
            return _len_range((lo, hi))
        if isinstance(t, Sign):
            lo, hi = env[0]
            return (1 if lo is not None and lo > 0 else 0, 0 if hi is not None and hi <= 0 else 1)
        if isinstance(t, (Add, Sub)):
            (a, b), (c, d) = env
            if isinstance(t, Sub):
                c, d = (None if d is None else -d), (None if c is None else -c)
            return (None if a is None or c is None else a + c,
                    None if b is None or d is None else b + d)
        if isinstance(t, Times):
            (a, b), (c, d) = env
            if None not in (a, b, c, d):
                ps = (a * c, a * d, b * c, b * d)
                return (min(ps), max(ps))
            if _nn(env[0]) and _nn(env[1]):
                return (a * c, None)
            return (None, None)
        if isinstance(t, Div2):
            lo, hi = env[0]
            return (None if lo is None else lo >> 1, None if hi is None else hi >> 1)
        if isinstance(t, Compose):
            return self.of(t.f, tuple(self.of(a, env) for a in t.args))
        ys = env[1:]
        g = self.of(t.g, ys)
        if isinstance(t, Ode3) or (isinstance(t, Ode4) and t.direction < 0):
            if isinstance(t, Ode4):
                self.of(t.k, ys)
            return (None if g[0] is None else min(0, g[0]), None if g[1] is None else max(0, g[1]))
        for part in ("h", "k"):
            sub = getattr(t, part, None)
            if sub is not None:
                self.of(sub, ys if isinstance(t, (Ode2, Ode2Star, Ode4)) and part == "k"
                        else (_NAT,) + ys)
        return (g[0] if _nn(g) else None, None)

    def may_be_negative(self, t: Term, env) -> bool:
        return not _nn(self.of(t, env))


@dataclass
class WidthPlan:
    """Input widths and the inferred range of the result."""

    input_widths: Tuple[int, ...]
    out_interval: Interval
    subterm_intervals: Dict[int, Interval] = field(default_factory=dict, repr=False)
    may_be_negative: bool = False

    @property
    def signed(self) -> bool:
        """Output carries a sign bit; decided without looking at widths."""
        return self.out_interval[0] < 0 or self.may_be_negative

    @property
    def mag_width(self) -> int:
        return max(1, mag_width(self.out_interval))

    @property
    def out_width(self) -> int:
        return self.mag_width + (1 if self.signed else 0)

    @property
    def n_inputs(self) -> int:
        return sum(self.input_widths)

    def encode_inputs(self, args: Sequence[int]) -> List[int]:
        if len(args) != len(self.input_widths):
            raise WidthMismatch(f"expected {len(self.input_widths)} arguments, got {len(args)}")
        bits: List[int] = []
        for a, w in zip(args, self.input_widths):
            bits.extend(BitVector.from_int(int(a), w).bits)
        return bits

    def decode_output(self, bits: Sequence[int]) -> int:
        if len(bits) != self.out_width:
            raise WidthMismatch(f"expected {self.out_width} output bits, got {len(bits)}")
        return BitVector(tuple(bits)).to_int(signed=self.signed)

    def output_bits(self, value: int) -> BitVector:
        return BitVector.from_int(value, self.out_width, signed=self.signed)


def _raw(t) -> Term:
    return t.term if isinstance(t, CheckedTerm) else getattr(getattr(t, "term", None), "term", t)


def infer_widths(t, input_widths: Sequence[int]) -> WidthPlan:
    """Interval-based width plan for naturals of the given bit widths."""
    t = _raw(t)
    widths = tuple(int(w) for w in input_widths)
    if len(widths) != t.arity:
        raise WidthMismatch(f"term has arity {t.arity}, got {len(widths)} widths")
    if any(w < 0 for w in widths):
        raise WidthMismatch("widths must be non-negative")
    ia = IntervalAnalysis()
    env = tuple((0, (1 << w) - 1) for w in widths)
    iv = ia.of(t, env)
    neg = SignAnalysis().may_be_negative(t, (_NAT,) * len(widths))
    return WidthPlan(widths, iv, dict(ia.hull), neg)


# Gate netlist

_POS, _NEG = "pos", "neg"


class Net:
    """Hash-consed DAG of And/Or/Maj gates over input literals."""

    def __init__(self, n_inputs: int, variant: str):
        self.n = n_inputs
        self.variant = variant
        self.kind: List[str] = []
        self.preds: List[Tuple[int, ...]] = []
        self.level: List[int] = []
        self.const: Dict[int, bool] = {}
        self._hc: Dict[tuple, int] = {}
        self._neg: Dict[int, int] = {}
        self._src: Dict[int, int] = {}
        self.pos = [self._new(_POS, (i,)) for i in range(n_inputs)]
        self.negl = [self._new(_NEG, (i,)) for i in range(n_inputs)]
        for i in range(n_inputs):
            self._neg[self.pos[i]] = self.negl[i]
            self._neg[self.negl[i]] = self.pos[i]
        # both constants sit at level 2 so constant operands never skew block depths
        self._taut = self.gate(OR, (self.pos[0], self.negl[0]))
        self.TRUE = self.gate(AND, (self._taut,))
        self.FALSE = self.gate(AND, (self.pos[0], self.negl[0]))
        self.const[self.TRUE] = True
        self.const[self.FALSE] = False
        self._neg[self.TRUE] = self.FALSE
        self._neg[self.FALSE] = self.TRUE

    def source(self, i: int) -> int:
        """Input bit i buffered to level 2, where the constants also live."""
        hit = self._src.get(i)
        if hit is None:
            hit = self._new(AND, (self._new(OR, (self.pos[i],)),))
            neg = self._new(AND, (self._new(OR, (self.negl[i],)),))
            self._neg[hit], self._neg[neg] = neg, hit
            self._src[i] = hit
        return hit

    def _new(self, kind, preds) -> int:
        self.kind.append(kind)
        self.preds.append(tuple(preds))
        if kind in (_POS, _NEG):
            self.level.append(0)
        else:
            self.level.append(self._place(kind, 1 + max(self.level[p] for p in preds)))
        return len(self.kind) - 1

    def pad(self, v: int, L: int) -> int:
        """v delayed through single-input gates until it sits at level L."""
        while self.level[v] < L:
            kind = self._kind_at(self.level[v] + 1)
            key = ("buf", kind, v)
            hit = self._hc.get(key)
            if hit is None:
                hit = self._hc[key] = self._new(kind, (v,))
            v = hit
        return v

    def sync(self, bits: Sequence[int]) -> List[int]:
        """Pad bits and their negations to one common level.

        Blocks fed by synchronised bundles have a latency that depends only
        on their shape, which keeps the overall depth width-independent.
        """
        negs = [self.NOT(b) for b in bits]
        if not bits:
            return []
        L = max(self.level[v] for v in list(bits) + negs)
        out = []
        for b, nb in zip(bits, negs):
            p, q = self.pad(b, L), self.pad(nb, L)
            self._neg[p], self._neg[q] = q, p
            out.append(p)
        return out

    def fresh_const(self, value: bool) -> int:
        """A constant gate distinct from every other node."""
        node = self._new(AND, (self._taut,) if value else (self.pos[0], self.negl[0]))
        self.const[node] = value
        return node

    def gate(self, kind: str, preds: Sequence[int]) -> int:
        if kind == MAJ:
            if self.variant != "TC":
                raise ModeError("threshold gates need the TC circuit variant")
            preds = self._distinct(preds)
            if not preds:
                return self.FALSE
            return self._new(MAJ, preds)
        ps = tuple(sorted(set(preds)))
        if not ps:
            return self.TRUE if kind == AND else self.FALSE
        key = (kind, ps)
        hit = self._hc.get(key)
        if hit is None:
            hit = self._hc[key] = self._new(kind, ps)
        return hit

    def _distinct(self, preds):
        out, seen = [], set()
        for p in preds:
            if p in seen:
                p = self.fresh_const(self.const[p]) if p in self.const else self._new(OR, (p,))
            seen.add(p)
            out.append(p)
        return tuple(out)

    def AND(self, *ps) -> int:
        return self.gate(AND, ps)

    def OR(self, *ps) -> int:
        return self.gate(OR, ps)

    def NOT(self, a: int) -> int:
        hit = self._neg.get(a)
        if hit is not None:
            return hit
        kd = self.kind[a]
        if a in self.const:
            r = self.fresh_const(not self.const[a])
        elif kd == AND:
            r = self.gate(OR, [self.NOT(p) for p in self.preds[a]])
        elif kd == OR:
            r = self.gate(AND, [self.NOT(p) for p in self.preds[a]])
        else:
            # not MAJ(x) = MAJ(not x, 1) under strict majority
            r = self.gate(MAJ, [self.NOT(p) for p in self.preds[a]] + [self.fresh_const(True)])
        self._neg[a] = r
        self._neg[r] = a
        return r

    def XOR(self, a: int, b: int) -> int:
        return self.OR(self.AND(a, self.NOT(b)), self.AND(self.NOT(a), b))

    def MAJ(self, ps) -> int:
        return self.gate(MAJ, ps)

    # normal form

    def _kind_at(self, level: int) -> str:
        if self.variant == "AC":
            return OR if level % 2 else AND
        return (MAJ, OR, AND)[level % 3]

    def _place(self, kind: str, base: int) -> int:
        L = max(base, 1)
        while self._kind_at(L) != kind:
            L += 1
        return L

    def to_circuit(self, outputs: Sequence[int]) -> Circuit:
        n = self.n
        live = set()
        stack = list(outputs)
        while stack:
            v = stack.pop()
            if v in live:
                continue
            live.add(v)
            stack.extend(p for p in self.preds[v] if self.kind[v] not in (_POS, _NEG))
        level: Dict[int, int] = {}
        for v in sorted(live):
            kd = self.kind[v]
            if kd in (_POS, _NEG):
                level[v] = 0
            else:
                level[v] = self._place(kd, 1 + max(level[p] for p in self.preds[v]))
        top = max(level[o] for o in outputs)
        if self.variant == "AC" and top % 2:
            top += 1
        records: List[Tuple[int, str, Tuple]] = []  # (level, kind, pred keys)
        index: Dict[tuple, int] = {}

        def ref(v: int, L: int):
            """Key of node v made available at level L (buffering as needed)."""
            kd = self.kind[v]
            if kd in (_POS, _NEG) and L == 0:
                return ("in", self.preds[v][0] + (n if kd == _NEG else 0))
            if level[v] == L:
                return ("node", v)
            key = ("buf", v, L)
            if key not in index:
                below = ref(v, L - 1)
                index[key] = len(records)
                records.append((L, self._kind_at(L), (below,)))
            return key

        for v in sorted(live):
            if self.kind[v] in (_POS, _NEG):
                continue
            L = level[v]
            preds = tuple(ref(p, L - 1) for p in self.preds[v])
            index[("node", v)] = len(records)
            records.append((L, self.kind[v], preds))
        out_keys = []
        for j, o in enumerate(outputs):
            # every output gets its own gate: a copy of o when it already sits on
            # the top level, a buffer otherwise
            key = ("out", j)
            if level[o] == top:
                preds = tuple(ref(p, top - 1) for p in self.preds[o])
            else:
                preds = (ref(o, top - 1),)
            index[key] = len(records)
            records.append((top, self._kind_at(top), preds))
            out_keys.append(key)
        m = len(outputs)
        total = 2 * n + len(records)
        k = min_k(n, total)
        space = n ** k
        ids: Dict[tuple, int] = {("in", i): i for i in range(2 * n)}
        nxt = 2 * n
        out_set = set(out_keys)
        for key, _ in sorted(index.items(), key=lambda kv: kv[1]):
            if key in out_set:
                ids[key] = space - m + key[1]
            else:
                ids[key] = nxt
                nxt += 1
        gates = [Gate(i, 0, INPUT_POS if i < n else INPUT_NEG) for i in range(2 * n)]
        for key, pos in sorted(index.items(), key=lambda kv: kv[1]):
            L, kd, preds = records[pos]
            gates.append(Gate(ids[key], L, kd, tuple(ids[p] for p in preds)))
        return Circuit(self.variant, n, k, top, tuple(gates), tuple(range(space - m, space)))


# Lowering

@dataclass(eq=False)
class Num:
    sign: Optional[int]          # None when the value is known to be >= 0
    mag: Tuple[int, ...]         # magnitude bits, least significant first
    lo: int
    hi: int
    ab: Optional[Bound] = None   # width-independent range, decides sign handling


class Rng(tuple):
    """A precise interval carrying its width-independent bound."""

    def __new__(cls, iv: Interval, ab: Bound):
        r = super().__new__(cls, iv)
        r.ab = ab
        return r


class Lowering:
    def __init__(self, net: Net):
        self.net = net
        self.ia = IntervalAnalysis()
        self.sa = SignAnalysis()
        self._memo: Dict[tuple, Num] = {}
        self._keep: List[object] = []
        self._consts: Dict[int, Num] = {}

    @property
    def tc(self) -> bool:
        return self.net.variant == "TC"

    # bundle helpers

    def fit(self, bits: Sequence[int], width: int) -> Tuple[int, ...]:
        bits = tuple(bits[:width])
        return bits + (self.net.FALSE,) * (width - len(bits))

    def mk(self, sign, mag, iv: Interval) -> Num:
        lo, hi = iv[0], iv[1]
        w = max(MIN_BUNDLE, mag_width(iv))
        ab = getattr(iv, "ab", None)
        if ab is not None and _nn(ab):
            sign = None
        # synchronise before truncating so dropped bits still set the level
        mag = self.fit(mag, max(w, len(mag)))
        bits = self.net.sync(list(mag) + ([sign] if sign is not None else []))
        return Num(bits[-1] if sign is not None else None, tuple(bits[:w]), lo, hi, ab)

    def const_num(self, v: int) -> Num:
        hit = self._consts.get(v)
        if hit is None:
            T = self.net.TRUE
            F = self.net.FALSE
            bits = tuple(T if (abs(v) >> i) & 1 else F for i in range(max(MIN_BUNDLE, _len(v))))
            hit = Num(T if v < 0 else None, bits, v, v, _NAT if v >= 0 else (None, None))
            self._consts[v] = hit
        return hit

    # arithmetic blocks

    def carries(self, a, b, cin) -> List[int]:
        net = self.net
        w = len(a)
        g = [net.AND(a[i], b[i]) for i in range(w)]
        p = [net.OR(a[i], b[i]) for i in range(w)]
        cs = [cin]
        for i in range(1, w + 1):
            terms = [net.AND(g[j], *p[j + 1:i]) for j in range(i)]
            terms.append(net.AND(cin, *p[:i]))
            cs.append(net.OR(*terms))
        return cs

    def add_u(self, a, b, cin=None) -> List[int]:
        net = self.net
        w = max(len(a), len(b))
        a = self.fit(a, w)
        b = self.fit(b, w)
        cin = net.FALSE if cin is None else cin
        cs = self.carries(a, b, cin)
        return [net.XOR(net.XOR(a[i], b[i]), cs[i]) for i in range(w)] + [cs[w]]

    def sub_u(self, a, b):
        """(a - b mod 2^w, [a >= b]) for unsigned bit lists."""
        net = self.net
        w = max(len(a), len(b))
        a = self.fit(a, w)
        nb = [net.NOT(x) for x in self.fit(b, w)]
        cs = self.carries(a, nb, net.TRUE)
        return [net.XOR(net.XOR(a[i], nb[i]), cs[i]) for i in range(w)], cs[w]

    def add_sm(self, A: Num, B: Num, iv: Interval) -> Num:
        net = self.net
        if A.sign is None and B.sign is None:
            return self.mk(None, self.add_u(A.mag, B.mag), iv)
        sA = A.sign if A.sign is not None else net.FALSE
        sB = B.sign if B.sign is not None else net.FALSE
        diff = net.XOR(sA, sB)
        same = net.NOT(diff)
        S = self.add_u(A.mag, B.mag)
        D1, ge = self.sub_u(A.mag, B.mag)
        D2, _ = self.sub_u(B.mag, A.mag)
        lt = net.NOT(ge)
        w = len(S)
        D1, D2 = self.fit(D1, w), self.fit(D2, w)
        mag = [net.OR(net.AND(same, S[j]), net.AND(diff, ge, D1[j]), net.AND(diff, lt, D2[j]))
               for j in range(w)]
        sign = net.OR(net.AND(same, sA), net.AND(diff, ge, sA), net.AND(diff, lt, sB))
        return self.mk(sign, mag, iv)

    def negate(self, A: Num) -> Num:
        sign = self.net.NOT(A.sign) if A.sign is not None else self.net.TRUE
        return Num(sign, A.mag, -A.hi, -A.lo, (None, None))

    def mux(self, sel: int, A: Num, B: Num, iv: Interval) -> Num:
        """A when sel else B."""
        net = self.net
        w = mag_width(iv)
        a, b = self.fit(A.mag, w), self.fit(B.mag, w)
        ns = net.NOT(sel)
        mag = [net.OR(net.AND(sel, a[j]), net.AND(ns, b[j])) for j in range(w)]
        sA = A.sign if A.sign is not None else net.FALSE
        sB = B.sign if B.sign is not None else net.FALSE
        sign = net.OR(net.AND(sel, sA), net.AND(ns, sB))
        return self.mk(sign, mag, iv)

    def onehot_len(self, mag) -> List[int]:
        """[len(m) = b] for b = 0 .. width."""
        net = self.net
        w = len(mag)
        neg = [net.NOT(x) for x in mag]
        out = [net.AND(*neg)]
        for b in range(1, w + 1):
            out.append(net.AND(mag[b - 1], *neg[b:]))
        return out

    def active(self, mag) -> List[int]:
        """[u < len(m)] for u = 0 .. width - 1."""
        return [self.net.OR(*mag[u:]) for u in range(len(mag))]

    def threshold(self, bits, t: int) -> int:
        """[popcount(bits) >= t] as one padded strict-majority gate."""
        net = self.net
        k = len(bits)
        pad = 2 * t - 1 - k
        extra = [net.fresh_const(False) for _ in range(pad)] if pad > 0 else \
            [net.fresh_const(True) for _ in range(-pad)]
        return net.MAJ(list(bits) + extra)

    def onehot_count(self, bits) -> List[int]:
        """[popcount(bits) = s] for s = 0 .. len(bits)."""
        net = self.net
        if not self.tc:
            raise ModeError("counting needs the TC circuit variant")
        k = len(bits)
        T = [None] + [self.threshold(bits, t) for t in range(1, k + 1)]
        if k == 0:
            return [net.TRUE]
        out = [net.NOT(T[1])]
        for s in range(1, k):
            out.append(net.AND(T[s], net.NOT(T[s + 1])))
        out.append(net.AND(T[k]))
        return out

    def popcount(self, bits) -> List[int]:
        eq = self.onehot_count(bits)
        k = len(bits)
        return [self.net.OR(*[eq[s] for s in range(1, k + 1) if (s >> i) & 1])
                for i in range(_len(k))]

    def multi_add(self, vectors: Sequence[Sequence[Optional[int]]]) -> List[int]:
        """Sum of non-negative bit vectors by fixed-round column counting."""
        ops = [list(v) for v in vectors]
        for _ in range(COMPRESSION_ROUNDS):
            cols: Dict[int, List[int]] = {}
            for v in ops:
                for j, bit in enumerate(v):
                    if bit is not None:
                        cols.setdefault(j, []).append(bit)
            new: List[List[Optional[int]]] = []
            for j, col in sorted(cols.items()):
                for i, bit in enumerate(self.popcount(col)):
                    while len(new) <= i:
                        new.append([])
                    row = new[i]
                    while len(row) < j + i:
                        row.append(None)
                    row.append(bit)
            ops = new
        if len(ops) > 2:
            raise PlanTooNarrow("too many operands left after column compression")
        F = self.net.FALSE
        dense = [[F if b is None else b for b in v] for v in ops] + [[], []]
        return self.add_u(dense[0], dense[1])

    # term dispatch

    def lower(self, t: Term, env: Tuple[Num, ...]) -> Num:
        key = (id(t), tuple(id(e) for e in env))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        iv = self.ia.of(t, tuple((e.lo, e.hi) for e in env))
        ab = self.sa.of(t, tuple(e.ab for e in env))
        r = self._lower(t, env, Rng(iv, ab))
        if r.ab is None:
            r.ab = ab
        self._memo[key] = r
        self._keep.append((t, env, r))
        return r

    def hbit(self, h: Term, u: int, ys) -> int:
        r = self.lower(h, (self.const_num(_alpha(u)),) + ys)
        return r.mag[0] if r.mag else self.net.FALSE

    def _lower(self, t, env, iv) -> Num:
        net = self.net
        if isinstance(t, Const0):
            return Num(None, (net.FALSE,), 0, 0, (0, 0))
        if isinstance(t, Const1):
            return Num(None, (net.TRUE,), 1, 1, (1, 1))
        if isinstance(t, Proj):
            return env[t.i - 1]
        if isinstance(t, Compose):
            args = tuple(self.lower(a, env) for a in t.args)
            return self.lower(t.f, args)
        if isinstance(t, Oracle):
            raise UnboundOracle(f"oracle {t.name!r} cannot be compiled; use the nonuniform adapter")
        if isinstance(t, Add):
            return self.add_sm(env[0], env[1], iv)
        if isinstance(t, Sub):
            return self.add_sm(env[0], self.negate(env[1]), iv)
        if isinstance(t, Times):
            return self._times(env[0], env[1], iv)
        if isinstance(t, Length):
            eq = self.onehot_len(env[0].mag)
            w = mag_width(iv)
            return self.mk(None, [net.OR(*[eq[b] for b in range(len(eq)) if (b >> i) & 1])
                                  for i in range(w)], iv)
        if isinstance(t, Sign):
            A = env[0]
            parts = [net.OR(*A.mag)] + ([net.NOT(A.sign)] if A.sign is not None else [])
            return self.mk(None, [net.AND(*parts)], iv)
        if isinstance(t, Div2):
            A = env[0]
            if A.sign is None:
                return self.mk(None, A.mag[1:], iv)
            inc = net.AND(A.sign, A.mag[0]) if A.mag else net.FALSE
            return self.mk(A.sign, self.add_u(A.mag[1:], [], inc), iv)
        x, ys = env[0], env[1:]
        if isinstance(t, Ode1):
            return self._ode1(t, x, ys, iv)
        if isinstance(t, (Ode2, Ode2Star)):
            return self._ode2(t, x, ys, iv)
        if isinstance(t, Ode3):
            g = self.lower(t.g, ys)
            eqL = self.onehot_len(x.mag)
            return self._shift_right(g, [(eqL[b], b) for b in range(len(eqL))], iv)
        if isinstance(t, Ode4):
            g = self.lower(t.g, ys)
            amounts = self._pair_amounts(self.lower(t.k, ys), x)
            if t.direction > 0:
                return self._shift_left(g, amounts, iv)
            return self._shift_right(g, amounts, iv)
        if isinstance(t, Ode1Star):
            return self._ode1_star(t, x, ys, iv)
        raise TypeError(f"cannot lower {t!r}")

    def _times(self, A: Num, B: Num, iv) -> Num:
        net = self.net
        if not self.tc:
            raise ModeError("Times needs the TC circuit variant")
        rows = []
        for i, a in enumerate(A.mag):
            rows.append([None] * i + [net._new(AND, tuple(sorted({a, b}))) for b in B.mag])
        mag = self.multi_add(rows)
        sign = None
        if A.sign is not None or B.sign is not None:
            sign = net.XOR(A.sign if A.sign is not None else net.FALSE,
                           B.sign if B.sign is not None else net.FALSE)
        return self.mk(sign, mag, iv)

    def _pair_amounts(self, k: Num, x: Num):
        eqK = self.onehot_len(k.mag)
        eqL = self.onehot_len(x.mag)
        return [(self.net.AND(eqK[a], eqL[b]), a * b) for a in range(len(eqK))
                for b in range(len(eqL))]

    def _place(self, terms: Dict[int, List[int]], sel: int, bits, shift: int, width: int):
        for i, bit in enumerate(bits):
            j = i + shift
            if j < width:
                terms.setdefault(j, []).append(self.net.AND(sel, bit))

    def _collect(self, terms: Dict[int, List[int]], width: int) -> List[int]:
        return [self.net.OR(*terms.get(j, ())) for j in range(width)]

    def _shift_left(self, g: Num, amounts, iv) -> Num:
        w = mag_width(iv)
        terms: Dict[int, List[int]] = {}
        for sel, amt in amounts:
            self._place(terms, sel, g.mag, amt, w)
        return self.mk(g.sign, self._collect(terms, w), iv)

    def _shift_right(self, g: Num, amounts, iv) -> Num:
        net = self.net
        w = len(g.mag)
        terms: Dict[int, List[int]] = {}
        rem: List[int] = []
        for sel, amt in amounts:
            for j in range(w):
                if j + amt < w:
                    terms.setdefault(j, []).append(net.AND(sel, g.mag[j + amt]))
            if g.sign is not None and amt:
                rem.append(net.AND(sel, net.OR(*g.mag[:amt])))
        shifted = self._collect(terms, w)
        if g.sign is None:
            return self.mk(None, shifted, iv)
        # floor division of a negative value rounds the magnitude up
        inc = net.AND(g.sign, net.OR(*rem))
        return self.mk(g.sign, self.add_u(shifted, [], inc), iv)

    def _combine(self, g: Num, gterms, hterms, iv) -> Num:
        """g placed by gterms plus the non-negative h contributions."""
        w = mag_width(iv)
        if g.sign is None:
            merged: Dict[int, List[int]] = {}
            for src in (gterms, hterms):
                for j, lst in src.items():
                    merged.setdefault(j, []).extend(lst)
            return self.mk(None, self._collect(merged, w), iv)
        G = Num(g.sign, tuple(self._collect(gterms, w)), iv[0], iv[1])
        H = Num(None, tuple(self._collect(hterms, w)), 0, (1 << w) - 1)
        return self.add_sm(G, H, iv)

    def _ode1(self, t: Ode1, x: Num, ys, iv) -> Num:
        w = mag_width(iv)
        g = self.lower(t.g, ys)
        eqL = self.onehot_len(x.mag)
        hb = [self.hbit(t.h, u, ys) for u in range(len(x.mag))]
        gterms: Dict[int, List[int]] = {}
        hterms: Dict[int, List[int]] = {}
        for b, sel in enumerate(eqL):
            self._place(gterms, sel, g.mag, b, w)
            for u in range(b):
                self._place(hterms, sel, (hb[u],), b - u - 1, w)
        return self._combine(g, gterms, hterms, iv)

    def _ode2(self, t, x: Num, ys, iv) -> Num:
        net = self.net
        w = mag_width(iv)
        star = isinstance(t, Ode2Star)
        g = self.lower(t.g, ys)
        k = self.lower(t.k, ys)
        eqK = self.onehot_len(k.mag)
        eqL = self.onehot_len(x.mag)
        hb = [self.hbit(t.h, u, ys) for u in range(len(x.mag))]
        klo, khi = self.sa.of(t.k, tuple(e.ab for e in ys))
        k_may_vanish = (klo is None or klo <= 0) and (khi is None or khi >= 0)
        gterms: Dict[int, List[int]] = {}
        hterms: Dict[int, List[int]] = {}
        for a, selk in enumerate(eqK):
            if a == 0 and star and k_may_vanish:
                continue
            for b, sell in enumerate(eqL):
                sel = net.AND(selk, sell)
                self._place(gterms, sel, g.mag, a * b, w)
                if a == 0:
                    continue  # Ode2 side condition: h vanishes when k = 0
                for u in range(b):
                    self._place(hterms, sel, (hb[u],), a * (b - u - 1), w)
        main = self._combine(g, gterms, hterms, iv)
        if not (star and k_may_vanish):
            return main
        if not self.tc:
            raise ModeError("Ode2* with a vanishing k counts bits; it needs the TC variant")
        act = self.active(x.mag)
        cnt = self.popcount([net.AND(hb[u], act[u]) for u in range(len(act))])
        C = Num(None, tuple(cnt), 0, len(act))
        S0 = self.add_sm(g, C, (g.lo, g.hi + len(act)))
        return self.mux(eqK[0], S0, main, iv)

    def _ode1_star(self, t: Ode1Star, x: Num, ys, iv) -> Num:
        net = self.net
        if not self.tc:
            raise ModeError("Ode1* needs the TC circuit variant")
        w = mag_width(iv)
        g = self.lower(t.g, ys)
        W = len(x.mag)
        act = self.active(x.mag)
        kb = [net.AND(self.hbit(t.k, u, ys), act[u]) for u in range(W)]
        hb = [net.AND(self.hbit(t.h, u, ys), act[u]) for u in range(W)]
        rows = []
        for u in range(W):
            eq = self.onehot_count(kb[u + 1:])
            rows.append([net.AND(hb[u], e) for e in eq])
        eq_all = self.onehot_count(kb)
        gterms: Dict[int, List[int]] = {}
        for s, sel in enumerate(eq_all):
            self._place(gterms, sel, g.mag, s, w)
        if g.sign is None:
            rows.append(self._collect(gterms, w))
            return self.mk(None, self.multi_add(rows), iv)
        H = self.multi_add(rows)
        G = Num(g.sign, tuple(self._collect(gterms, w)), iv[0], iv[1])
        return self.add_sm(G, Num(None, tuple(H), 0, (1 << len(H)) - 1), iv)


def is_tc_only(t: Term) -> bool:
    """Needs threshold gates: Times, Ode1*, or Ode2* whose k may vanish."""
    from .modes import _walk
    return any(isinstance(s, (Times, Ode1Star, Ode2Star)) for s in _walk(t))


def _variant_for(t, variant: Optional[str]) -> str:
    if variant is not None:
        v = variant.upper()
        if v not in ("AC", "TC"):
            raise ValueError("variant must be 'AC' or 'TC'")
        return v
    if isinstance(t, CheckedTerm):
        return "TC" if t.mode.is_tc else "AC"
    return "TC" if is_tc_only(_raw(t)) else "AC"


@dataclass
class Compiled:
    circuit: Circuit
    plan: WidthPlan
    phantom_inputs: int = 0

    def input_bits(self, args: Sequence[int]) -> List[int]:
        return self.plan.encode_inputs(args) + [0] * self.phantom_inputs

    def run(self, args: Sequence[int]) -> int:
        from .circuit import simulate
        out = simulate(self.circuit, self.input_bits(args))
        return self.plan.decode_output(out.bits)

    def run_batch(self, rows: Sequence[Sequence[int]]) -> List[int]:
        import numpy as np
        from .circuit import simulate_batch
        X = np.array([self.input_bits(r) for r in rows], dtype=bool)
        if len(rows) == 0:
            return []
        Y = simulate_batch(self.circuit, X)
        return [self.plan.decode_output([int(b) for b in row]) for row in Y]


def compile_term(t, widths: Union[WidthPlan, Sequence[int]], variant: Optional[str] = None,
                 out_width: Optional[int] = None) -> Compiled:
    """Compile ``t`` for naturals of the given widths; see :func:`compile`."""
    plan = widths if isinstance(widths, WidthPlan) else infer_widths(t, widths)
    if out_width is not None and out_width < plan.out_width:
        raise PlanTooNarrow(f"result needs {plan.out_width} bits, plan allows {out_width}")
    v = _variant_for(t, variant)
    raw = _raw(t)
    n_real = plan.n_inputs
    n = max(2, n_real)
    net = Net(n, v)
    low = Lowering(net)
    env = []
    pos = 0
    for w in plan.input_widths:
        env.append(Num(None, tuple(net.source(pos + i) for i in range(w)), 0, (1 << w) - 1, _NAT))
        pos += w
    r = low.lower(raw, tuple(env))
    if (r.lo, r.hi) != plan.out_interval:
        # the plan was supplied externally; honour its width
        r = low.mk(r.sign, r.mag, plan.out_interval)
    mag = low.fit(r.mag, plan.mag_width)
    outs = list(mag)
    if plan.signed:
        nonzero = net.OR(*mag)
        outs.append(net.AND(r.sign if r.sign is not None else net.FALSE, nonzero))
    circ = net.to_circuit(outs)
    return Compiled(circ, plan, n - n_real)


def compile(t, widths: Union[WidthPlan, Sequence[int]], variant: Optional[str] = None) -> Circuit:
    """Circuit computing ``t`` on naturals of the given bit widths.

    Inputs are the arguments' bits concatenated (each least-significant
    first), followed by phantom inputs when fewer than two bits are declared.
    Outputs are the magnitude bits followed by a sign bit when the result
    range includes negatives.
    """
    return compile_term(t, widths, variant).circuit


def depth_profile(t, widths_list, variant: Optional[str] = None) -> List[Dict[str, int]]:
    t_raw = _raw(t)
    out = []
    for w in widths_list:
        ws = tuple(w) if isinstance(w, (tuple, list)) else (w,) * t_raw.arity
        c = compile_term(t, ws, variant).circuit
        s = stats(c)
        out.append({"width": w, "depth": s["depth"], "size": s["size"]})
    return out
