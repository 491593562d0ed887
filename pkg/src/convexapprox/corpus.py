"""Analytic test functions with symbolic derivatives."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .poly import EvaluableFunction

X = sp.Symbol("x", real=True)

# id -> (expression, description)
DEFINITIONS = {
    "x4": ("x**4", "quartic"),
    "exp": ("exp(x)", "exponential"),
    "cosh2x": ("cosh(2*x)", "hyperbolic cosine"),
    "x6x2": ("x**6 + x**2", "even sextic"),
    "flat_right": ("(1 - x)**5 / 32", "second derivative vanishes at +1"),
    "x2": ("x**2", "quadratic (reproduction check)"),
}


@dataclass(frozen=True)
class CorpusEntry:
    fid: str
    expression: str
    description: str
    function: EvaluableFunction


def _vectorize(expr):
    f = sp.lambdify(X, expr, modules="numpy")
    if expr.free_symbols:
        return lambda x: np.asarray(f(np.asarray(x, dtype=float)), dtype=float) + 0.0 * np.asarray(x, dtype=float)
    c = float(expr)
    return lambda x: np.full(np.shape(x), c) if np.ndim(x) else np.float64(c)


def function_from_expression(text, orders=8, name=""):
    """:class:`EvaluableFunction` with derivatives ``1..orders`` computed symbolically."""
    expr = sp.sympify(text, locals={"x": X})
    ders = []
    d = expr
    for _ in range(orders):
        d = sp.diff(d, X)
        ders.append(_vectorize(d))
    return EvaluableFunction(_vectorize(expr), ders, name=name or str(text))


@lru_cache(maxsize=None)
def corpus():
    return {fid: CorpusEntry(fid, e, desc, function_from_expression(e, name=fid))
            for fid, (e, desc) in DEFINITIONS.items()}


def get_function(spec):
    """Corpus id or a sympy expression in ``x``."""
    c = corpus()
    if spec in c:
        return c[spec].function
    return function_from_expression(spec)
