import numpy as np
import pytest
from sklearn.base import clone

from odecirc.estimators import CircuitCompiler, TermEvaluator
from odecirc.errors import ValidationError
from odecirc.stdlib import get


def test_term_evaluator_predicts_stdlib():
    X = np.array([[3, 5], [0, 9], [7, 1]])
    est = TermEvaluator("smash").fit(X)
    assert est.n_features_in_ == 2
    assert list(est.predict(X)) == [64, 1, 8]
    assert est.score(X, [64, 1, 8]) == 1.0
    assert est.score(X, [64, 1, 9]) == pytest.approx(2 / 3)


def test_term_evaluator_methods_agree():
    X = [[x] for x in range(64)]
    closed = TermEvaluator("bcount", mode="TCDL-STAR").fit(X).predict(X)
    step = TermEvaluator("bcount", mode="TCDL-STAR", method="step").fit(X).predict(X)
    assert list(closed) == list(step) == [bin(x).count("1") for x in range(64)]


def test_term_evaluator_accepts_dsl_and_checks_mode():
    assert list(TermEvaluator("(+ x1 x2)").fit().predict([[2, 3]])) == [5]
    with pytest.raises(ValidationError):
        TermEvaluator("(* x1 x2)").fit()
    with pytest.raises(ValueError):
        TermEvaluator("mod2", method="fast").fit()


def test_term_evaluator_params_round_trip():
    est = TermEvaluator("mod2", mode="TCDL")
    assert est.get_params()["mode"] == "TCDL"
    assert clone(est).set_params(mode="ACDL").mode == "ACDL"


def test_predict_before_fit():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        TermEvaluator("mod2").predict([[1]])


def test_circuit_compiler_matches_evaluator():
    X = np.array([[a, b] for a in range(8) for b in range(8)])
    cc = CircuitCompiler("shift").fit(X)
    assert cc.widths_ == (3, 3)
    want = TermEvaluator("shift").fit(X).predict(X)
    assert list(cc.predict(X)) == list(want)
    assert cc.score(X, want) == 1.0


def test_circuit_compiler_width_forms():
    term = get("mod2").raw
    assert CircuitCompiler(term, widths=4).fit().widths_ == (4,)
    assert CircuitCompiler(term, widths=[5]).fit().circuit_.n_inputs == 5
    with pytest.raises(ValueError):
        CircuitCompiler(term).fit()


def test_rejects_bad_rows():
    est = TermEvaluator("mod2").fit()
    with pytest.raises(ValueError):
        est.predict([[1, 2]])
    with pytest.raises(ValueError):
        CircuitCompiler("mod2", widths=3).fit().predict([[-1]])
