"""Layered normal-form Boolean circuits (AC and TC variants)."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidCircuit, ParseError, WidthMismatch
from .modes import Diagnostic

INPUT_POS, INPUT_NEG, AND, OR, MAJ = "InputPos", "InputNeg", "And", "Or", "Maj"
KINDS = (INPUT_POS, INPUT_NEG, AND, OR, MAJ)
VARIANTS = ("AC", "TC")
FORMAT_TAG = "odecirc-circuit"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class BitVector:
    """Fixed-width bit string, least-significant bit first."""

    bits: Tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return len(self.bits)

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    @classmethod
    def from_int(cls, value: int, width: int, signed: bool = False) -> "BitVector":
        """Sign-and-magnitude encoding; the sign, if any, is the top bit."""
        mag = abs(value)
        mbits = width - 1 if signed else width
        if mag >> mbits:
            raise WidthMismatch(f"{value} does not fit in {width} bits (signed={signed})")
        if value < 0 and not signed:
            raise WidthMismatch(f"negative value {value} in an unsigned vector")
        bits = [(mag >> i) & 1 for i in range(mbits)]
        if signed:
            bits.append(1 if value < 0 else 0)
        return cls(tuple(bits))

    def to_int(self, signed: bool = False) -> int:
        bits = self.bits[:-1] if signed else self.bits
        mag = sum(b << i for i, b in enumerate(bits))
        return -mag if signed and self.bits and self.bits[-1] else mag

    @classmethod
    def parse(cls, text: str) -> "BitVector":
        """Read a string of 0/1 characters, least-significant first."""
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise ParseError(f"bad bit string {text!r}", field="bits")
        return cls(tuple(int(ch) for ch in text))

    def __str__(self):
        return "".join(map(str, self.bits))


def concat(*vectors: BitVector) -> BitVector:
    out: List[int] = []
    for v in vectors:
        out.extend(v.bits)
    return BitVector(tuple(out))


@dataclass(frozen=True)
class Gate:
    id: int
    level: int
    kind: str
    preds: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "preds", tuple(self.preds))


@dataclass(frozen=True)
class Circuit:
    variant: str
    n_inputs: int
    k: int
    depth: int
    gates: Tuple[Gate, ...]
    output_ids: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "output_ids", tuple(self.output_ids))

    @property
    def m(self) -> int:
        return len(self.output_ids)

    @property
    def size(self) -> int:
        return len(self.gates)

    @cached_property
    def by_id(self) -> Dict[int, Gate]:
        return {g.id: g for g in self.gates}

    @cached_property
    def levels(self) -> Dict[int, List[Gate]]:
        out: Dict[int, List[Gate]] = {}
        for g in self.gates:
            out.setdefault(g.level, []).append(g)
        return out

    @cached_property
    def ordered(self) -> Tuple[Gate, ...]:
        return tuple(sorted(self.gates, key=lambda g: (g.level, g.id)))


def gate_kind_for_level(variant: str, level: int) -> Optional[str]:
    """Kind required at ``level`` (None for level 0, which holds inputs)."""
    if level == 0:
        return None
    if variant == "AC":
        return OR if level % 2 else AND
    return (MAJ, OR, AND)[level % 3]


def _err(code, msg, gid=None):
    return Diagnostic("error", code, msg, () if gid is None else (gid,))


def diagnose_normal_form(c: Circuit) -> List[Diagnostic]:
    out: List[Diagnostic] = []
    if c.variant not in VARIANTS:
        return [_err("Variant", f"unknown variant {c.variant!r}")]
    n = c.n_inputs
    if n < 1:
        out.append(_err("Inputs", "n_inputs must be positive"))
        return out
    space = n ** c.k
    seen: Dict[int, Gate] = {}
    for g in c.gates:
        if g.id in seen:
            out.append(_err("DuplicateId", f"gate id {g.id} used twice", g.id))
        seen[g.id] = g
        if not 0 <= g.id < space:
            out.append(_err("IdRange", f"id {g.id} outside 0..{space - 1}", g.id))
        if g.kind not in KINDS:
            out.append(_err("Kind", f"unknown kind {g.kind!r}", g.id))
    for i in range(2 * n):
        want = INPUT_POS if i < n else INPUT_NEG
        g = seen.get(i)
        if g is None or g.kind != want or g.level != 0:
            out.append(_err("InputLayout", f"id {i} must be a level-0 {want} gate", i))
    max_level = 0
    for g in c.gates:
        max_level = max(max_level, g.level)
        if g.kind in (INPUT_POS, INPUT_NEG):
            if g.level != 0 or g.id >= 2 * n:
                out.append(_err("InputLayout", f"input gate {g.id} outside the input block", g.id))
            if g.preds:
                out.append(_err("InputPreds", f"input gate {g.id} has predecessors", g.id))
            continue
        if g.level == 0:
            out.append(_err("LevelKind", f"{g.kind} gate {g.id} at level 0", g.id))
            continue
        want = gate_kind_for_level(c.variant, g.level)
        if g.kind != want:
            out.append(_err("LevelKind", f"{g.kind} gate {g.id} at level {g.level}; expected {want}",
                            g.id))
        if not g.preds:
            out.append(_err("NoPreds", f"gate {g.id} has no predecessors", g.id))
        for p in g.preds:
            pg = seen.get(p)
            if pg is None:
                out.append(_err("DanglingEdge", f"gate {g.id} reads missing gate {p}", g.id))
            elif pg.level != g.level - 1:
                out.append(_err("LevelSkip", f"edge {p}->{g.id} spans levels {pg.level}->{g.level}",
                                g.id))
    if c.depth != max_level:
        out.append(_err("Depth", f"declared depth {c.depth} but top level is {max_level}"))
    if c.variant == "AC" and c.depth % 2:
        out.append(_err("Depth", f"AC depth {c.depth} is odd"))
    m = c.m
    if m < 1:
        out.append(_err("Outputs", "no outputs"))
    expect = tuple(range(space - m, space))
    if c.output_ids != expect:
        out.append(_err("Outputs", f"outputs must be ids {space - m}..{space - 1} in order"))
    for o in c.output_ids:
        g = seen.get(o)
        if g is None:
            out.append(_err("Outputs", f"output id {o} has no gate", o))
        elif g.level != c.depth:
            out.append(_err("Outputs", f"output {o} at level {g.level}, not the top level", o))
    return out


def validate_normal_form(c: Circuit) -> Circuit:
    """Return ``c`` if it is in normal form, else raise :class:`InvalidCircuit`."""
    diags = diagnose_normal_form(c)
    if diags:
        raise InvalidCircuit(diags)
    return c


def stats(c: Circuit) -> Dict[str, int]:
    counts = {kd: 0 for kd in KINDS}
    edges = 0
    for g in c.gates:
        counts[g.kind] += 1
        edges += len(g.preds)
    return {"size": c.size, "depth": c.depth, "edges": edges, "outputs": c.m,
            "n_inputs": c.n_inputs, "k": c.k, **{kd.lower(): v for kd, v in counts.items()}}


# Simulation

class _Plan:
    """Dense index layout of a circuit for batched evaluation."""

    def __init__(self, c: Circuit):
        order = c.ordered
        self.index = {g.id: i for i, g in enumerate(order)}
        self.order = order
        self.n = c.n_inputs
        self.out_idx = np.array([self.index[o] for o in c.output_ids], dtype=np.int64)
        self.steps = [(self.index[g.id], g.kind, np.array([self.index[p] for p in g.preds],
                                                           dtype=np.int64))
                      for g in order if g.level > 0]


_PLANS: Dict[int, Tuple[Circuit, _Plan]] = {}


def _plan(c: Circuit) -> _Plan:
    hit = _PLANS.get(id(c))
    if hit is not None and hit[0] is c:
        return hit[1]
    p = _Plan(c)
    if len(_PLANS) > 64:
        _PLANS.clear()
    _PLANS[id(c)] = (c, p)
    return p


def simulate_batch(c: Circuit, inputs) -> np.ndarray:
    """Evaluate ``c`` on a (samples, n_inputs) 0/1 array; return (samples, m)."""
    X = np.asarray(inputs, dtype=bool)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != c.n_inputs:
        raise WidthMismatch(f"circuit has {c.n_inputs} inputs, got {X.shape[1]}")
    plan = _plan(c)
    V = np.zeros((len(plan.order), X.shape[0]), dtype=bool)
    n = plan.n
    for g in plan.order:
        if g.kind == INPUT_POS:
            V[plan.index[g.id]] = X[:, g.id]
        elif g.kind == INPUT_NEG:
            V[plan.index[g.id]] = ~X[:, g.id - n]
    for i, kd, preds in plan.steps:
        rows = V[preds]
        if kd == AND:
            V[i] = rows.all(axis=0)
        elif kd == OR:
            V[i] = rows.any(axis=0)
        else:
            V[i] = 2 * rows.sum(axis=0) > len(preds)
    return V[plan.out_idx].T.copy()


def simulate(c: Circuit, inp: Union[BitVector, Sequence[int]]) -> BitVector:
    bits = inp.bits if isinstance(inp, BitVector) else tuple(inp)
    if len(bits) != c.n_inputs:
        raise WidthMismatch(f"circuit has {c.n_inputs} inputs, got {len(bits)}")
    out = simulate_batch(c, np.array([bits], dtype=bool))[0]
    return BitVector(tuple(int(b) for b in out))


# Interchange format

def encode(c: Circuit) -> str:
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"variant {c.variant}",
        f"n_inputs {c.n_inputs}",
        f"k {c.k}",
        f"depth {c.depth}",
        f"m {c.m}",
    ]
    for g in c.gates:
        preds = " ".join(map(str, g.preds))
        lines.append(f"gate {g.id} {g.level} {g.kind}" + (f" {preds}" if preds else ""))
    lines.append("outputs " + " ".join(map(str, c.output_ids)))
    lines.append("end")
    return "\n".join(lines) + "\n"


def _int(tok: str, line: int, fld: str) -> int:
    try:
        v = int(tok, 10)
    except ValueError:
        raise ParseError(f"expected a decimal integer, got {tok!r}", line=line, field=fld) from None
    if v < 0:
        raise ParseError(f"negative value {v}", line=line, field=fld)
    return v


def decode(data: Union[str, bytes]) -> Circuit:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8 text: {exc}") from None
    rows = []
    for no, raw in enumerate(data.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if s:
            rows.append((no, s.split()))
    if not rows or rows[0][1][:1] != [FORMAT_TAG]:
        raise ParseError("missing header", line=rows[0][0] if rows else 1, field="version")
    no, head = rows[0]
    if len(head) != 2 or _int(head[1], no, "version") != FORMAT_VERSION:
        raise ParseError("unsupported format version", line=no, field="version")
    header: Dict[str, object] = {}
    gates: List[Gate] = []
    outputs: Optional[Tuple[int, ...]] = None
    ended = False
    for no, toks in rows[1:]:
        key = toks[0]
        if ended:
            raise ParseError("content after end", line=no, field=key)
        if key == "variant":
            if len(toks) != 2 or toks[1] not in VARIANTS:
                raise ParseError("variant must be AC or TC", line=no, field="variant")
            header["variant"] = toks[1]
        elif key in ("n_inputs", "k", "depth", "m"):
            if len(toks) != 2:
                raise ParseError(f"{key} takes one value", line=no, field=key)
            header[key] = _int(toks[1], no, key)
        elif key == "gate":
            if len(toks) < 4:
                raise ParseError("gate needs id, level and kind", line=no, field="gate")
            kd = toks[3]
            if kd not in KINDS:
                raise ParseError(f"unknown gate kind {kd!r}", line=no, field="kind")
            gates.append(Gate(_int(toks[1], no, "id"), _int(toks[2], no, "level"), kd,
                              tuple(_int(t, no, "preds") for t in toks[4:])))
        elif key == "outputs":
            outputs = tuple(_int(t, no, "outputs") for t in toks[1:])
        elif key == "end":
            ended = True
        else:
            raise ParseError(f"unknown record {key!r}", line=no, field=key)
    last = rows[-1][0]
    for key in ("variant", "n_inputs", "k", "depth", "m"):
        if key not in header:
            raise ParseError(f"missing {key}", line=last, field=key)
    if outputs is None:
        raise ParseError("missing outputs", line=last, field="outputs")
    if not ended:
        raise ParseError("truncated input (no end record)", line=last, field="end")
    if len(outputs) != header["m"]:
        raise ParseError(f"m = {header['m']} but {len(outputs)} outputs listed", line=last,
                         field="outputs")
    return Circuit(header["variant"], header["n_inputs"], header["k"], header["depth"],
                   tuple(gates), outputs)


def to_dot(c: Circuit) -> str:
    shape = {INPUT_POS: "box", INPUT_NEG: "box", AND: "invtriangle", OR: "triangle",
             MAJ: "diamond"}
    lines = ["digraph circuit {", "  rankdir=BT;"]
    for lvl, gs in sorted(c.levels.items()):
        ids = " ".join(f"g{g.id};" for g in gs)
        lines.append(f"  {{ rank=same; {ids} }}")
    outs = set(c.output_ids)
    for g in c.ordered:
        label = g.kind if g.level else (f"x{g.id}" if g.kind == INPUT_POS else f"~x{g.id - c.n_inputs}")
        extra = ", peripheries=2" if g.id in outs else ""
        lines.append(f'  g{g.id} [label="{label}\\n{g.id}", shape={shape[g.kind]}{extra}];')
        for p in g.preds:
            lines.append(f"  g{p} -> g{g.id};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# Construction helpers

def min_k(n: int, count: int) -> int:
    """Least k with n^k >= count (n >= 2)."""
    k, cap = 0, 1
    while cap < count:
        cap *= n
        k += 1
    return k


def assemble(variant: str, n: int, levels: Sequence[Sequence[Tuple[str, Sequence[int]]]],
             m: int) -> Circuit:
    """Build a circuit from per-level gate lists.

    ``levels[0]`` is ignored (inputs are implicit).  Each later entry is a list
    of ``(kind, preds)`` where preds index the previous level's list (for
    level 1, positions 0..2n-1 of the input block).  The last ``m`` gates of
    the top level become the outputs.
    """
    internal = sum(len(lv) for lv in levels[1:])
    total = 2 * n + internal
    if n < 2:
        raise ValueError("assemble needs n >= 2")
    k = min_k(n, total)
    space = n ** k
    gates = [Gate(i, 0, INPUT_POS if i < n else INPUT_NEG) for i in range(2 * n)]
    prev_ids = list(range(2 * n))
    next_id = 2 * n
    top = len(levels) - 1
    out_start = space - m
    for lvl in range(1, len(levels)):
        ids = []
        entries = levels[lvl]
        for j, (kd, preds) in enumerate(entries):
            if lvl == top and j >= len(entries) - m:
                gid = out_start + (j - (len(entries) - m))
            else:
                gid = next_id
                next_id += 1
            gates.append(Gate(gid, lvl, kd, tuple(prev_ids[p] for p in preds)))
            ids.append(gid)
        prev_ids = ids
    if next_id > out_start:
        raise ValueError("index space too small")
    return Circuit(variant, n, k, top, tuple(gates), tuple(range(out_start, space)))


def random_circuit(rng, variant: str = "AC", n: int = 3, depth: int = 2, width: int = 3,
                   m: int = 1, max_fanin: int = 3) -> Circuit:
    """A random normal-form circuit; ``rng`` is a ``numpy.random.Generator``."""
    if variant == "AC" and depth % 2:
        raise ValueError("AC depth must be even")
    levels: List[List[Tuple[str, Tuple[int, ...]]]] = [[]]
    prev = 2 * n
    for lvl in range(1, depth + 1):
        kd = gate_kind_for_level(variant, lvl)
        count = m if lvl == depth else int(rng.integers(1, width + 1))
        entries = []
        for _ in range(count):
            fan = int(rng.integers(1, min(max_fanin, prev) + 1))
            preds = tuple(sorted(int(p) for p in rng.choice(prev, size=fan, replace=False)))
            entries.append((kd, preds))
        levels.append(entries)
        prev = count
    return assemble(variant, n, levels, m)


def reachable_inputs(c: Circuit) -> set:
    """Input positions (0..n-1) with a path to some output."""
    seen, stack = set(), list(c.output_ids)
    by_id = c.by_id
    while stack:
        g = stack.pop()
        if g in seen:
            continue
        seen.add(g)
        stack.extend(by_id[g].preds)
    n = c.n_inputs
    return {i for i in range(n) if i in seen or i + n in seen}


def example_and_circuit() -> Circuit:
    """x0 AND x1 on two inputs, one output."""
    return assemble("AC", 2, [[], [(OR, (0,)), (OR, (1,))], [(AND, (0, 1))]], 1)


def example_maj_circuit() -> Circuit:
    """Strict majority of three inputs, padded to the TC level pattern."""
    return assemble("TC", 3, [[], [(OR, (i,)) for i in range(3)], [(AND, (i,)) for i in range(3)],
                              [(MAJ, (0, 1, 2))]], 1)


def identity_circuit(n: int = 2) -> Circuit:
    """Depth-0 circuit whose outputs are the top input gates (needs n^k = 2n)."""
    k = min_k(n, 2 * n)
    if n ** k != 2 * n:
        raise ValueError("identity circuit needs n^k = 2n")
    gates = tuple(Gate(i, 0, INPUT_POS if i < n else INPUT_NEG) for i in range(2 * n))
    return Circuit("AC", n, k, 0, gates, (2 * n - 1,))
