"""Polynomials in the Chebyshev basis on [-1, 1], plus a small callable-function wrapper.

High degrees (several thousand) are routine for the kernel constructions, so
everything is kept in the Chebyshev basis and moved between values and
coefficients with the type-I discrete cosine transform.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct
from scipy.special import roots_legendre


def cgl_points(degree):
    """Chebyshev-Gauss-Lobatto points ``cos(k pi / D)``, ``k = 0..D`` (decreasing)."""
    if degree == 0:
        return np.array([1.0])
    x = np.cos(np.pi * np.arange(degree + 1) / degree)
    x[0], x[-1] = 1.0, -1.0
    if degree % 2 == 0:
        x[degree // 2] = 0.0
    return x


def values_to_coeffs(values):
    """Chebyshev coefficients of the interpolant of values at :func:`cgl_points`."""
    v = np.asarray(values, dtype=float)
    if v.size == 1:
        return v.copy()
    D = v.size - 1
    c = dct(v, type=1) / D
    c[0] /= 2
    c[-1] /= 2
    return c


def coeffs_to_values(coeffs):
    """Values at :func:`cgl_points` of a Chebyshev series (inverse of :func:`values_to_coeffs`)."""
    c = np.array(coeffs, dtype=float)
    if c.size == 1:
        return c
    c[0] *= 2
    c[-1] *= 2
    return dct(c, type=1) / 2


class Polynomial:
    """Algebraic polynomial stored by its Chebyshev coefficients.

    Parameters
    ----------
    coeffs : array_like
        Coefficients of ``T_0, ..., T_D``.
    degree_bound : int, optional
        Declared degree bound; defaults to ``len(coeffs) - 1``.
    """

    __slots__ = ("coeffs", "degree_bound")

    def __init__(self, coeffs, degree_bound=None):
        c = np.atleast_1d(np.array(coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a nonempty 1-d array")
        if not np.all(np.isfinite(c)):
            raise FloatingPointError("non-finite polynomial coefficient")
        c.setflags(write=False)
        self.coeffs = c
        self.degree_bound = int(c.size - 1 if degree_bound is None else degree_bound)

    # ------------------------------------------------------------ builders
    @classmethod
    def from_samples(cls, values):
        """Interpolant of values given at the ``D + 1`` Chebyshev-Gauss-Lobatto points.

        Raises
        ------
        ValueError
            If a sample is not finite.
        """
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("samples must be a nonempty 1-d array")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite sample")
        return cls(values_to_coeffs(v))

    @classmethod
    def from_function(cls, f, degree):
        """Interpolant of ``f`` at ``degree + 1`` Chebyshev-Gauss-Lobatto points."""
        return cls.from_samples(np.asarray(f(cgl_points(degree)), dtype=float))

    @classmethod
    def zero(cls):
        return cls([0.0])

    @classmethod
    def linear(cls, value_at_minus1, slope):
        """``value_at_minus1 + slope * (x + 1)``."""
        return cls([value_at_minus1 + slope, slope])

    @classmethod
    def from_power_coeffs(cls, power):
        """From monomial coefficients ``a_0 + a_1 x + ...`` (low degrees only)."""
        return cls(C.poly2cheb(np.asarray(power, dtype=float)))

    # ---------------------------------------------------------- evaluation
    @property
    def degree(self):
        return self.coeffs.size - 1

    def __call__(self, x):
        return C.chebval(x, self.coeffs)

    def cgl_values(self, degree=None):
        """Values at the CGL points of ``degree`` (at least the current degree)."""
        D = self.degree if degree is None else int(degree)
        if D < self.degree:
            raise ValueError("grid degree below polynomial degree")
        c = np.zeros(D + 1)
        c[: self.coeffs.size] = self.coeffs
        return coeffs_to_values(c)

    # ------------------------------------------------------------ calculus
    def derivative(self, m=1):
        if self.degree < m:
            return Polynomial.zero()
        return Polynomial(C.chebder(self.coeffs, m))

    def antiderivative(self, value_at_minus1=0.0):
        """Antiderivative taking ``value_at_minus1`` at ``x = -1``."""
        return Polynomial(C.chebint(self.coeffs, lbnd=-1.0, k=[value_at_minus1]))

    def definite_integral(self, a=-1.0, b=1.0):
        prim = C.chebint(self.coeffs)
        return float(C.chebval(b, prim) - C.chebval(a, prim))

    # ----------------------------------------------------------- algebra
    def _coerce(self, other):
        if isinstance(other, Polynomial):
            return other.coeffs
        return np.array([float(other)])

    def __add__(self, other):
        return Polynomial(C.chebadd(self.coeffs, self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Polynomial(C.chebsub(self.coeffs, self._coerce(other)))

    def __rsub__(self, other):
        return Polynomial(C.chebsub(self._coerce(other), self.coeffs))

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(C.chebmul(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def scale(self, a):
        return self * a

    def compose_linear(self, a, b):
        """``x -> p(a x + b)``, re-interpolated at the same degree (exact in exact arithmetic)."""
        D = self.degree
        return Polynomial.from_samples(self(a * cgl_points(D) + b))

    def trimmed(self, tol=0.0):
        """Drop trailing coefficients with magnitude at most ``tol * max|c|``."""
        c = self.coeffs
        thr = tol * np.max(np.abs(c))
        nz = np.nonzero(np.abs(c) > thr)[0]
        last = nz[-1] if nz.size else 0
        return Polynomial(c[: last + 1])

    def sup_norm(self, grid=None):
        """Sampled sup norm on a CGL grid of at least twice the degree."""
        if grid is None:
            return float(np.max(np.abs(self.cgl_values(max(2 * self.degree, 8)))))
        return float(np.max(np.abs(self(grid))))

    # -------------------------------------------------------- serialization
    def to_dict(self):
        return {"degree_bound": self.degree_bound, "basis": "chebyshev",
                "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, d):
        if d.get("basis", "chebyshev") != "chebyshev":
            raise ValueError("only the chebyshev basis is supported")
        return cls(d["coeffs"], d.get("degree_bound"))

    def __repr__(self):
        return f"Polynomial(degree={self.degree})"


class EvaluableFunction:
    """A real function on [-1, 1] with optional derivative evaluators.

    Parameters
    ----------
    func : callable
        Vectorized function of ``x``.
    derivatives : sequence of callable, optional
        ``derivatives[m - 1]`` evaluates the ``m``-th derivative.
    r : int, optional
        Smoothness tag, the number of available derivatives.
    name : str, optional
    """

    def __init__(self, func: Callable, derivatives: Sequence[Callable] = (), r=None, name=""):
        self.func = func
        self.derivatives = tuple(derivatives)
        self.r = len(self.derivatives) if r is None else int(r)
        self.name = name

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float) * np.ones_like(x, dtype=float)

    def derivative(self, m):
        """Evaluator of the ``m``-th derivative (``m = 0`` is the function)."""
        if m == 0:
            return self
        if m > len(self.derivatives):
            raise ValueError(f"derivative of order {m} not available")
        g = self.derivatives[m - 1]
        return EvaluableFunction(g, self.derivatives[m:], name=f"{self.name}^({m})")

    @classmethod
    def from_polynomial(cls, p: Polynomial, order=6):
        ders = []
        q = p
        for _ in range(order):
            q = q.derivative()
            ders.append(q)
        return cls(p, ders, name="polynomial")


@lru_cache(maxsize=256)
def _legendre(nodes):
    x, w = roots_legendre(nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_nodes(a, b, nodes):
    """Gauss-Legendre nodes and weights mapped to ``[a, b]``."""
    x, w = _legendre(int(nodes))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def gauss_quadrature(f, a, b, nodes):
    """Gauss-Legendre rule with ``nodes`` points on ``[a, b]``.

    Exact for polynomial integrands of degree at most ``2 * nodes - 1``.

    Examples
    --------
    >>> round(gauss_quadrature(lambda x: x**2, -1, 1, 2), 15)
    0.666666666666667
    """
    if nodes < 1:
        raise ValueError("nodes must be positive")
    x, w = gauss_nodes(a, b, nodes)
    return float(np.dot(w, f(x)))
