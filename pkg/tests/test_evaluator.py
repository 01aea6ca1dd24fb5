import pytest
from hypothesis import given, settings, strategies as st

from odecirc import poly
from odecirc.errors import BoundExceeded, MissingOracle, NotEssentiallyConstant, SchemaViolation
from odecirc.evaluator import (
    Evaluator, StepEvaluator, alpha, evaluate, length, solve_linear_length_ode, solve_ode1,
    solve_ode1_star, solve_ode2, solve_ode3, solve_ode4, step_oracle,
)
from odecirc.stdlib import BIT_of, P, bcount_raw, mk_msp, mk_smash, mod2
from odecirc.terms import (
    LENGTH, SUB, Compose, Const0, Const1, Ode1, Ode1Star, Ode2, Ode2Star, Ode3, Ode4, Oracle, add,
    sign,
)

Y = P(1, 1)
ONE1, ZERO1 = Const1(1), Const0(1)


def test_basics():
    assert evaluate(Compose(LENGTH, (P(1, 1),)), (0,)) == 0
    assert evaluate(Compose(LENGTH, (P(1, 1),)), (1,)) == 1
    assert evaluate(Compose(SUB, (P(1, 2), P(2, 2))), (3, 7)) == -4
    assert evaluate(Ode1(Const1(0), Const0(1)), (5,)) == 8


def test_length_and_alpha():
    assert [length(x) for x in (0, 1, 2, 3, 4, -5)] == [0, 1, 2, 2, 3, 3]
    for u in range(10):
        assert length(alpha(u)) == u


def test_solve_ode1():
    assert solve_ode1(Y, Const0(2), 6, (5,)) == 40
    assert solve_ode1(Const1(0), Const1(1), 7) == 15
    assert solve_ode1(Y, Const1(2), 0, (9,)) == 9


def test_solve_ode1_rejects_non_boolean_h():
    with pytest.raises(SchemaViolation) as exc:
        solve_ode1(Y, P(1, 2), 5, (1,))
    assert exc.value.kind == "BooleanRange"


def test_solve_ode2():
    assert solve_ode2(Const1(1), Const0(2), Y, 3, (5,)) == 64
    # bcount configuration: g = y mod 2, h(z, y) = BIT(y, len(z + 1)), k = 0
    Z2, Y2 = P(1, 2), P(2, 2)
    h = BIT_of(Y2, Compose(LENGTH, (add(Z2, Const1(2)),)))
    assert solve_ode2(mod2(Y), h, ZERO1, 13, (13,), star=True) == 3
    with pytest.raises(SchemaViolation) as exc:
        solve_ode2(mod2(Y), h, ZERO1, 13, (13,), star=False)
    assert exc.value.kind == "KZeroWithHOne"


def test_solve_ode3_and_ode4():
    assert solve_ode3(Y, 3, (20,)) == 5
    assert solve_ode3(Y, 0, (20,)) == 20
    assert solve_ode3(Y, 1, (7,)) == 3
    assert solve_ode4(Const1(0), Const1(0), 1, 5) == 8
    assert solve_ode4(Y, ONE1, -1, 3, (20,)) == 5
    assert solve_ode4(Y, ZERO1, 1, 12345, (9,)) == 9


def test_solve_ode1_star():
    assert solve_ode1_star(Const1(0), Const0(1), Const1(1), 5) == 8
    assert solve_ode1_star(Const1(0), Const1(1), Const1(1), 7) == 15
    Z2, Y2 = P(1, 2), P(2, 2)
    h = BIT_of(Y2, Compose(LENGTH, (add(Z2, Const1(2)),)))
    assert solve_ode1_star(mod2(Y), h, Const0(2), 13, (13,)) == 3


def test_linear_length_ode():
    A, B = poly.IntConst(1), poly.IntConst(0)
    assert solve_linear_length_ode(A, B, 1, 5) == 8
    Ak = poly.Var("ky")
    assert solve_linear_length_ode(Ak, B, 1, 3, (5,), bindings={"ky": 2 ** length(5) - 1}) == 64
    assert solve_linear_length_ode(poly.IntConst(0), poly.IntConst(1), 0, 13) == 4
    with pytest.raises(NotEssentiallyConstant):
        solve_linear_length_ode(poly.Var("f"), B, 1, 3)


def test_step_oracle_examples():
    assert step_oracle(mk_smash().term, 3, (5,)) == 64
    assert step_oracle(mk_msp().term, 3, (20,)) == 5
    assert step_oracle(Ode1(Y, Const1(2)), 0, (11,)) == 11
    with pytest.raises(BoundExceeded):
        step_oracle(Ode3(Y), 100, (1,), bound=50)


def test_step_bound_from_environment(monkeypatch):
    monkeypatch.setenv("ODECIRC_MAX_ORACLE_X", "10")
    with pytest.raises(BoundExceeded):
        StepEvaluator()(Ode3(Y), (11, 1))


def test_missing_oracle():
    with pytest.raises(MissingOracle):
        evaluate(Oracle("C", 1), (1,))
    assert evaluate(Oracle("C", 1), (4,), {"C": lambda x: x + 1}) == 5


def test_negative_div2_floors():
    from odecirc.terms import div2
    assert evaluate(div2(P(1, 1)), (-3,)) == -2


nat = st.integers(0, 1 << 12)
small = st.integers(0, 1 << 10)
GS = [Y, ONE1, add(Y, ONE1)]
HS = [Const0(2), Const1(2), sign(P(2, 2)), mod2(P(1, 2)), sign(add(P(1, 2), P(2, 2)))]
KS = [Y, ONE1, ZERO1, add(Y, ONE1)]


@settings(max_examples=60, deadline=None)
@given(nat, small, st.sampled_from(GS), st.sampled_from(HS), st.sampled_from(KS),
       st.sampled_from(["ode1", "ode2", "ode2*", "ode3", "ode4+", "ode4-", "ode1*"]))
def test_closed_form_matches_step_oracle(x, y, g, h, k, kind):
    t = {"ode1": lambda: Ode1(g, h), "ode2": lambda: Ode2(g, h, k),
         "ode2*": lambda: Ode2Star(g, h, k), "ode3": lambda: Ode3(g),
         "ode4+": lambda: Ode4(g, k, 1), "ode4-": lambda: Ode4(g, k, -1),
         "ode1*": lambda: Ode1Star(g, h, sign(P(1, 2)))}[kind]()

    def outcome(fn):
        try:
            return fn()
        except SchemaViolation as exc:
            return exc.kind
    assert outcome(lambda: evaluate(t, (x, y))) == outcome(lambda: step_oracle(t, x, (y,)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 1 << 14), small, st.sampled_from(GS), st.sampled_from(HS[:3]))
def test_depends_on_x_only_through_length(x, y, g, h):
    x2 = (1 << (length(x) - 1)) + (x * 7919) % (1 << (length(x) - 1)) if x > 1 else x
    assert length(x2) == length(x)
    for t in (Ode1(g, h), Ode2Star(g, h, Y), Ode3(g)):
        assert evaluate(t, (x, y)) == evaluate(t, (x2, y))


@given(nat, nat)
def test_shift_then_msp_is_identity(x, y):
    shifted = evaluate(Ode1(Y, Const0(2)), (x, y))
    assert evaluate(Ode3(Y), (x, shifted)) == y


@settings(max_examples=40, deadline=None)
@given(nat, small, st.sampled_from(GS), st.sampled_from(HS[:3]))
def test_ode1_agrees_with_linear_solution(x, y, g, h):
    # ODE1: f' = f + h, i.e. A = 1, B = h
    got = evaluate(Ode1(g, h), (x, y))
    ref = solve_linear_length_ode(poly.IntConst(1), poly.Var("h"), g, x, (y,), bindings={"h": h})
    assert got == ref


def test_popcount_term():
    t = bcount_raw()
    ev = Evaluator()
    assert [ev(t, (x,)) for x in (13, 0, 255)] == [3, 0, 8]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(GS), st.sampled_from(HS), st.sampled_from(KS),
       st.lists(st.tuples(nat, small), min_size=2, max_size=12))
def test_shared_memo_matches_fresh_evaluation(g, h, k, points):
    # subterms independent of x are memoized on the arguments they read
    t = Ode2Star(g, h, k)
    shared = Evaluator()
    assert [shared(t, p) for p in points] == [evaluate(t, p) for p in points]
