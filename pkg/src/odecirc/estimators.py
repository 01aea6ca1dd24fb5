"""scikit-learn style wrappers: rows of integer arguments in, values out."""
from __future__ import annotations

import numbers
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .compiler import compile_term
from .evaluator import Evaluator, StepEvaluator
from .modes import CheckedTerm, get_mode, specialize, validate
from .terms import Term


def check_int_matrix(X, n_features: Optional[int] = None, nonnegative: bool = False
                     ) -> List[Tuple[int, ...]]:
    """Rows of exact Python ints from a 2-d array-like.

    Values are kept as arbitrary-precision ints, so nothing is lost to int64.
    """
    arr = np.asarray(X, dtype=object)
    if arr.ndim == 1 and n_features == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {arr.shape}")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"expected {n_features} columns, got {arr.shape[1]}")
    rows = []
    for row in arr:
        vals = []
        for v in row:
            if isinstance(v, (bool, np.bool_)) or not isinstance(v, (numbers.Integral, np.integer)):
                raise ValueError(f"non-integer entry {v!r}")
            v = int(v)
            if nonnegative and v < 0:
                raise ValueError(f"negative entry {v}")
            vals.append(v)
        rows.append(tuple(vals))
    return rows


def resolve_term(term) -> Term:
    """Accept a Term, CheckedTerm, NamedTerm, stdlib name or DSL text."""
    from .stdlib import REGISTRY, NamedTerm
    if isinstance(term, NamedTerm):
        return term.raw
    if isinstance(term, CheckedTerm):
        return term.term
    if isinstance(term, Term):
        return term
    if isinstance(term, str):
        if term in REGISTRY:
            return REGISTRY[term]().raw
        from .dsl import parse_dsl
        return parse_dsl(term)
    raise TypeError(f"cannot interpret {term!r} as a term")


def _values(ys) -> np.ndarray:
    out = np.empty(len(ys), dtype=object)
    out[:] = ys
    return out


class TermEvaluator(BaseEstimator):
    """Evaluate a term on each row of X.

    ``method`` is ``"closed"`` (closed-form solutions) or ``"step"`` (literal
    iteration of the schemas).  ``fit`` validates the term under ``mode``.
    """

    def __init__(self, term=None, mode: str = "ACDL", method: str = "closed",
                 oracles=None, specialize: bool = True):
        self.term = term
        self.mode = mode
        self.method = method
        self.oracles = oracles
        self.specialize = specialize

    def fit(self, X=None, y=None):
        if self.method not in ("closed", "step"):
            raise ValueError("method must be 'closed' or 'step'")
        raw = resolve_term(self.term)
        if self.specialize:
            raw = specialize(raw, self.mode)
        self.term_ = validate(raw, get_mode(self.mode))
        self.n_features_in_ = self.term_.arity
        if X is not None:
            check_int_matrix(X, self.n_features_in_)
        return self

    def _engine(self):
        from .stdlib import default_oracles
        oracles = dict(default_oracles())
        oracles.update(self.oracles or {})
        return StepEvaluator(oracles) if self.method == "step" else Evaluator(oracles)

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "term_")
        rows = check_int_matrix(X, self.n_features_in_)
        ev = self._engine()
        return _values([ev(self.term_, r) for r in rows])

    def score(self, X, y) -> float:
        got = self.predict(X)
        want = [int(v) for v in np.asarray(y, dtype=object).ravel()]
        return float(np.mean([g == w for g, w in zip(got, want)])) if want else 1.0


class CircuitCompiler(BaseEstimator):
    """Compile a term to a circuit and predict by simulating it.

    ``widths`` gives one bit width per argument (an int applies to all);
    when None, ``fit`` takes the widest value seen in each column of X.
    """

    def __init__(self, term=None, widths: Union[None, int, Sequence[int]] = None,
                 variant: Optional[str] = None):
        self.term = term
        self.widths = widths
        self.variant = variant

    def fit(self, X=None, y=None):
        raw = resolve_term(self.term)
        p = raw.arity
        if self.widths is None:
            if X is None:
                raise ValueError("give widths or training rows")
            rows = check_int_matrix(X, p, nonnegative=True)
            widths = tuple(max([r[j].bit_length() for r in rows] + [1]) for j in range(p))
        elif isinstance(self.widths, numbers.Integral):
            widths = (int(self.widths),) * p
        else:
            widths = tuple(int(w) for w in self.widths)
        self.compiled_ = compile_term(raw, widths, self.variant)
        self.circuit_ = self.compiled_.circuit
        self.plan_ = self.compiled_.plan
        self.widths_ = widths
        self.n_features_in_ = p
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "compiled_")
        rows = check_int_matrix(X, self.n_features_in_, nonnegative=True)
        return _values(self.compiled_.run_batch(rows))

    def score(self, X, y) -> float:
        got = self.predict(X)
        want = [int(v) for v in np.asarray(y, dtype=object).ravel()]
        return float(np.mean([g == w for g, w in zip(got, want)])) if want else 1.0
