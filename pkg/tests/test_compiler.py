import random

import pytest
from hypothesis import given, settings, strategies as st

from odecirc.circuit import decode, encode, simulate, validate_normal_form
from odecirc.compiler import compile, compile_term, depth_profile, infer_widths
from odecirc.errors import ModeError, PlanTooNarrow, UnboundOracle, WidthMismatch
from odecirc.evaluator import evaluate
from odecirc.stdlib import P, get
from odecirc.terms import (
    TIMES, Compose, Const0, Const1, Ode1, Ode1Star, Ode2, Ode2Star, Ode3, Ode4, Oracle, add, div2,
    length, sign, sub,
)


def test_width_inference_examples():
    assert infer_widths(get("smash").term, (4, 4)).out_width >= 17
    assert infer_widths(Const1(1), (4,)).out_width == 1
    assert infer_widths(div2(P(1, 1)), (8,)).out_width <= 8


def test_width_inference_monotone():
    for name in ("shift", "smash", "msp", "if", "bit", "BIT"):
        t = get(name).term
        ws = [infer_widths(t, (w,) * t.arity).out_width for w in (2, 4, 8, 16)]
        assert ws == sorted(ws), name


def test_compile_examples():
    shift = compile_term(get("shift").term, (4, 4))
    out = simulate(shift.circuit, shift.input_bits((6, 5)))
    assert out == shift.plan.output_bits(40)
    msp = compile_term(get("msp").term, (4, 8))
    assert msp.run((3, 20)) == 5
    one = compile_term(Const1(1), (3,))
    assert one.circuit.depth <= 2
    assert all(one.run((x,)) == 1 for x in range(8))


def test_compile_returns_circuit():
    c = compile(get("mod2").term, (5,))
    validate_normal_form(c)
    assert decode(encode(c)) == c


def test_signed_results():
    t = sub(P(1, 2), P(2, 2))
    comp = compile_term(t, (3, 3))
    assert comp.plan.signed
    assert all(comp.run((a, b)) == a - b for a in range(8) for b in range(8))


def test_errors():
    with pytest.raises(UnboundOracle):
        compile_term(Oracle("C", 2), (2, 2))
    with pytest.raises(ModeError):
        compile_term(get("bcount").term, (4,), variant="AC")
    with pytest.raises(ModeError):
        compile_term(Compose(TIMES, (P(1, 2), P(2, 2))), (3, 3), variant="AC")
    with pytest.raises(PlanTooNarrow):
        compile_term(get("smash").term, (4, 4), out_width=4)
    comp = compile_term(get("mod2").term, (3,))
    with pytest.raises(WidthMismatch):
        comp.run((9,))


def test_depth_profile_constant():
    for name in ("smash", "BIT", "mod2", "if"):
        rows = depth_profile(get(name).term, [4, 8, 16])
        assert len({r["depth"] for r in rows}) == 1, (name, rows)
    rows = depth_profile(Const0(1), [4, 8])
    assert rows[0]["depth"] == rows[1]["depth"]


def test_times_under_tc():
    t = Compose(TIMES, (P(1, 2), P(2, 2)))
    comp = compile_term(t, (4, 4), variant="TC")
    validate_normal_form(comp.circuit)
    assert all(comp.run((a, b)) == a * b for a in range(16) for b in range(16))


@pytest.mark.parametrize("name", ["shift", "smash", "msp", "if", "cond", "bit", "mod2", "s1",
                                  "cosg", "and", "or", "eq", "pow2len", "bcount"])
def test_stdlib_exhaustive_small_width(name):
    nt = get(name)
    W = 3 if nt.arity <= 2 else 2
    comp = compile_term(nt.term, (W,) * nt.arity)
    validate_normal_form(comp.circuit)
    rows = [tuple((i >> (W * j)) & ((1 << W) - 1) for j in range(nt.arity))
            for i in range(1 << (W * nt.arity))]
    assert comp.run_batch(rows) == [evaluate(nt.term, r) for r in rows]


# random terms built from the schemas

Y = P(1, 1)


def _terms():
    g = st.sampled_from([Y, Const1(1), add(Y, Const1(1)), div2(Y)])
    h = st.sampled_from([Const0(2), Const1(2), sign(P(2, 2)), sign(sub(P(2, 2), P(1, 2)))])
    k = st.sampled_from([Y, Const1(1), Const0(1)])
    return st.one_of(
        st.builds(Ode1, g, h),
        st.builds(lambda g_, k_: Ode2(g_, Const0(2), k_), g, k),
        st.builds(Ode3, g),
        st.builds(lambda g_, k_, d: Ode4(g_, k_, d), g, k, st.sampled_from([1, -1])),
        st.builds(lambda g_, h_: Ode2Star(g_, h_, Const0(1)), g, h),
        st.builds(lambda g_, h_: Ode1Star(g_, h_, sign(P(1, 2))), g, h),
        st.builds(lambda a: length(add(a, P(2, 2))), st.sampled_from([P(1, 2), Const1(2)])),
    )


@settings(max_examples=40, deadline=None)
@given(_terms(), st.integers(2, 4), st.integers(0, 2 ** 31))
def test_random_schema_terms_compile_correctly(t, W, seed):
    comp = compile_term(t, (W,) * t.arity)
    validate_normal_form(comp.circuit)
    rng = random.Random(seed)
    rows = [tuple(rng.randrange(1 << W) for _ in range(t.arity)) for _ in range(40)]
    assert comp.run_batch(rows) == [evaluate(t, r) for r in rows]
