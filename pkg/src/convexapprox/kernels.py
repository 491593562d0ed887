"""Polynomial kernels localized at Chebyshev intervals.

``t_j`` is a sum of two squared quotients of ``cos(2n arccos x)`` and
``sin(2n arccos x)`` by linear factors; it behaves like
``(|x - x_j| + h_j)^-2``.  Raising it to the power ``mu``, multiplying by
``(1 - x^2)^xi`` and by optional sign factors, and integrating gives the
smooth steps ``tau_j``.  Mixtures of two neighbouring steps integrate to the
ramp approximants ``q_j``, and on the doubled partition to the convex pair
``p_j`` and the locally concave ``pt_j``.

All kernels of one partition share a degree, so the bank keeps their
normalized integrands sampled on a single Chebyshev-Gauss-Lobatto grid and
linear combinations become one transform.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from math import ceil

import numpy as np
from numpy.polynomial import chebyshev as C

from .partition import build_partition, endpoint_weight
from .poly import Polynomial, cgl_points, gauss_nodes, values_to_coeffs


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class KernelParams:
    """Kernel exponents.

    ``alpha`` and ``beta`` are the target endpoint and decay exponents,
    ``xi`` and ``mu`` the powers of ``1 - x^2`` and ``t_j``.
    """

    alpha: float
    beta: float
    xi: int
    mu: int

    def degree(self, n, gamma1=0, gamma2=0):
        """Exact degree of the integrand of ``tau_{j,n}``."""
        return gamma1 + gamma2 + 2 * self.xi + self.mu * (4 * n - 2)

    @property
    def degree_factor(self):
        """Constant ``c`` with kernel degrees (on the doubled partition) at most ``c * n``."""
        return 8 * self.mu + 1

    def escalate(self):
        """Next candidate when an invariant fails: raise ``mu``, then ``xi``."""
        if self.mu <= 2 * self.xi + 8:
            return KernelParams(self.alpha, self.beta, self.xi, self.mu + 2)
        return KernelParams(self.alpha, self.beta, self.xi + 1, self.mu)

    def to_dict(self):
        return asdict(self)


def default_params(alpha=2.0, beta=None, k=4):
    """Exponents from the target decay.

    ``(1 - y^2)^xi`` supplies the endpoint factor and ``t_j^mu`` the decay;
    ``xi = ceil(alpha / 2)`` and ``mu = xi + ceil((beta + 1) / 2)``, the extra
    ``xi`` paying for the growth of ``(1 - y^2)^xi`` away from the endpoints.
    """
    beta = k + 7 if beta is None else beta
    xi = int(ceil(alpha / 2))
    mu = xi + int(ceil((beta + 1) / 2))
    return KernelParams(float(alpha), float(beta), xi, mu)


# --------------------------------------------------------------------------
# t_j


def kernel_roots(n, j):
    """The two shifted knots ``(x_j^0, xbar_j)`` used by ``t_j``."""
    xbar = np.cos((j - 0.5) * np.pi / n)
    shift = 0.25 if j < n / 2 else 0.75
    x0 = np.cos((j - shift) * np.pi / n)
    return x0, xbar


def _chebyshev_ode_taylor(N, x0, y0, y1, order=4):
    """Derivatives ``y^(m)(x0)``, ``m <= order``, of a solution of the degree-N Chebyshev ODE.

    Uses ``(1 - x^2) y^(m+2) = (2m + 1) x y^(m+1) + (m^2 - N^2) y^(m)``.
    """
    ders = [y0, y1]
    w = (1.0 - x0) * (1.0 + x0)
    for m in range(order - 1):
        ders.append(((2 * m + 1) * x0 * ders[m + 1] + (m * m - N * N) * ders[m]) / w)
    return ders


def _quotient(N, x, root, kind, guard=1e-8):
    """``cos(N arccos x) / (x - root)`` (kind 'cos') or ``sin(N arccos x) / (x - root)``.

    ``root`` is a zero of the numerator; within ``guard`` of it a fourth-order
    Taylor expansion replaces the quotient.
    """
    x = np.asarray(x, dtype=float)
    theta = np.arccos(np.clip(x, -1.0, 1.0))
    num = np.cos(N * theta) if kind == "cos" else np.sin(N * theta)
    d = x - root
    near = np.abs(d) < guard
    out = np.empty_like(x)
    far = ~near
    out[far] = num[far] / d[far]
    if np.any(near):
        th0 = np.arccos(root)
        s0 = np.sin(th0)
        if kind == "cos":
            y1 = N * np.sin(N * th0) / s0
        else:
            y1 = -N * np.cos(N * th0) / s0
        ders = _chebyshev_ode_taylor(N, root, 0.0, y1, order=4)
        dn = d[near]
        # y(x)/(x - root) = y1 + y2 d / 2 + y3 d^2 / 6 + y4 d^3 / 24
        out[near] = ders[1] + ders[2] * dn / 2 + ders[3] * dn**2 / 6 + ders[4] * dn**3 / 24
    return out


def t_kernel(n, j, x):
    """Evaluate ``t_j`` for the partition with ``n`` intervals at ``x``.

    A polynomial of degree ``4n - 2``, nonnegative as a sum of squares.
    """
    if not 1 <= j <= n:
        raise ValueError("need 1 <= j <= n")
    x0, xbar = kernel_roots(n, j)
    a = _quotient(2 * n, x, x0, "cos")
    b = _quotient(2 * n, x, xbar, "sin")
    return a * a + b * b


def log_t_kernel(n, j, x):
    return np.log(t_kernel(n, j, x))


# --------------------------------------------------------------------------
# integrands and the kernel bank


def _log_abs_integrand(n, j, gamma1, gamma2, xi, mu, x):
    """``log |theta_j(x)|`` and its sign, where theta_j is the unnormalized integrand."""
    p = build_partition(n)
    xj, xj1 = p.knots[j], p.knots[j - 1]
    x = np.asarray(x, dtype=float)
    w = (1.0 - x) * (1.0 + x)
    with np.errstate(divide="ignore"):
        logv = mu * np.log(t_kernel(n, j, x)) + (xi * np.log(w) if xi else 0.0)
        sign = np.ones_like(x)
        if gamma1:
            a = x - xj
            logv = logv + gamma1 * np.log(np.abs(a))
            sign = sign * np.sign(a) ** gamma1
        if gamma2:
            b = xj1 - x
            logv = logv + gamma2 * np.log(np.abs(b))
            sign = sign * np.sign(b) ** gamma2
    return logv, sign


def _series_integral(c):
    """``int_{-1}^{1}`` of a Chebyshev series."""
    k = np.arange(0, c.size, 2)
    return float(np.sum(c[::2] * 2.0 / (1.0 - k.astype(float) ** 2)))


def _series_moment(c, power, about=1.0, sign=-1.0):
    """``int (about + sign*x)^power * series`` exactly, via repeated multiplication by x."""
    cc = np.array(c, dtype=float)
    for _ in range(power):
        cc = C.chebadd(about * cc, sign * C.chebmulx(cc))
    return _series_integral(cc)


class KernelParameterError(RuntimeError):
    """Kernel exponents too small for a required invariant."""


class KernelBank:
    """All ``tau_{j,n}(.; gamma1, gamma2, xi, mu)``, ``j = 1..n``, of one partition.

    Parameters
    ----------
    n : int
        Partition size of the kernels themselves (the doubled size when used
        for ``p_j``).
    gamma1, gamma2, xi, mu : int
    """

    def __init__(self, n, gamma1, gamma2, xi, mu):
        self.n = int(n)
        self.gamma1, self.gamma2, self.xi, self.mu = int(gamma1), int(gamma2), int(xi), int(mu)
        self.partition = build_partition(self.n)
        self.degree = self.gamma1 + self.gamma2 + 2 * self.xi + self.mu * (4 * self.n - 2)
        self.grid = cgl_points(self.degree)
        self._samples = np.empty((self.n, self.degree + 1))
        self.log_d = np.empty(self.n)
        self.coef_norm = np.empty(self.n)
        self.moments = np.empty((self.n, 6))  # E[(1 - T)^p], p = 0..5
        for j in range(1, self.n + 1):
            self._build(j)
        self._samples.setflags(write=False)

    # -------------------------------------------------------------- build
    def _build(self, j):
        logv, sign = _log_abs_integrand(self.n, j, self.gamma1, self.gamma2, self.xi, self.mu, self.grid)
        top = np.max(logv[np.isfinite(logv)])
        v = np.where(np.isfinite(logv), sign * np.exp(logv - top), 0.0)
        c = values_to_coeffs(v)
        d = _series_integral(c)
        if not (d > 0 and np.isfinite(d)):
            raise KernelParameterError(
                f"normalizer not positive for n={self.n}, j={j}: parameters too small")
        self.log_d[j - 1] = top + np.log(d)
        self._samples[j - 1] = v / d
        c = c / d
        self.coef_norm[j - 1] = np.sum(np.abs(c))
        for p in range(6):
            self.moments[j - 1, p] = _series_moment(c, p)

    # ------------------------------------------------------------- access
    @property
    def means(self):
        """``E_j[T] = int t theta_j / d_j``; also ``int tau_j = 1 - mean``."""
        return 1.0 - self.moments[:, 1]

    @property
    def tau_integrals(self):
        """``int_{-1}^{1} tau_j``."""
        return self.moments[:, 1]

    def d(self, j):
        return float(np.exp(self.log_d[j - 1]))

    def density_samples(self, j):
        return self._samples[j - 1]

    def density(self, j, x):
        """Normalized integrand ``theta_j(x) / d_j`` evaluated from the closed form."""
        logv, sign = _log_abs_integrand(self.n, j, self.gamma1, self.gamma2, self.xi, self.mu, x)
        return sign * np.exp(logv - self.log_d[j - 1])

    def density_polynomial(self, j):
        return Polynomial.from_samples(self._samples[j - 1])

    def tau(self, j):
        """``tau_j`` as a polynomial."""
        return self.density_polynomial(j).antiderivative(0.0)

    def mixture_density(self, weights):
        """Samples of ``sum_j w_j theta_j / d_j`` on the bank grid (``weights`` indexed j-1)."""
        w = np.asarray(weights, dtype=float)
        nz = np.nonzero(w)[0]
        if nz.size == 0:
            return np.zeros(self.degree + 1)
        return w[nz] @ self._samples[nz]


_BANKS: dict = {}


def kernel_bank(n, gamma1, gamma2, xi, mu) -> KernelBank:
    """Cached :class:`KernelBank`."""
    key = (int(n), int(gamma1), int(gamma2), int(xi), int(mu))
    bank = _BANKS.get(key)
    if bank is None:
        bank = KernelBank(*key)
        _BANKS[key] = bank
    return bank


def clear_kernel_cache():
    _BANKS.clear()


def tau_hat(n, j, gamma1, gamma2, xi, mu):
    """``tau_{j,n}`` as a polynomial together with its normalizer ``d_j``."""
    bank = kernel_bank(n, gamma1, gamma2, xi, mu)
    return bank.tau(j), bank.d(j)


# --------------------------------------------------------------------------
# ramps q_j and the pair p_j, pt_j


def mixing_weight(bank: KernelBank, j):
    """``lambda_j`` making ``q_j(1) = 1 - x_j`` (needs ``1 <= j <= n - 1``).

    ``q_j(1) = lambda A_j + (1 - lambda) A_{j+1}`` with ``A_i = int tau_i``.
    """
    A = bank.tau_integrals
    xj = bank.partition.knots[j]
    return float((1.0 - xj - A[j]) / (A[j - 1] - A[j]))


def q_weights(bank: KernelBank, j):
    """Mixture weights over the bank (indexed j-1) for ``q_j'' = lambda theta_j + (1-lambda) theta_{j+1}``."""
    lam = mixing_weight(bank, j)
    if not 0.0 < lam < 1.0:
        raise KernelParameterError(f"mixing weight {lam} outside (0, 1) for n={bank.n}, j={j}")
    w = np.zeros(bank.n)
    w[j - 1] = lam
    w[j] = 1.0 - lam
    return w, lam


def q_kernel(n, j, gamma1, gamma2, xi, mu):
    """Ramp approximant ``q_j`` of ``(x - x_j)_+`` and its mixing weight."""
    if not 1 <= j <= n - 1:
        raise ValueError("need 1 <= j <= n - 1")
    bank = kernel_bank(n, gamma1, gamma2, xi, mu)
    w, lam = q_weights(bank, j)
    dens = Polynomial.from_samples(bank.mixture_density(w))
    return dens.antiderivative(0.0).antiderivative(0.0), lam


class PairKernels:
    """The pair ``p_j`` (convex) and ``pt_j`` for a partition of size ``n``.

    Both are built on the doubled partition: ``p_j`` from the steps at the two
    half-intervals adjacent to ``x_j`` with exponents ``(0, 0)``, and ``pt_j``
    from the two halves of ``I_j`` with exponents ``(1, 1)``.
    """

    def __init__(self, n, params: KernelParams):
        self.n = int(n)
        self.params = params
        self.plain = kernel_bank(2 * self.n, 0, 0, params.xi, params.mu)
        self.signed = kernel_bank(2 * self.n, 1, 1, params.xi, params.mu)
        self.lam_plain = np.zeros(self.n)
        self.lam_signed = np.zeros(self.n)
        for j in range(1, self.n):
            self.lam_plain[j - 1] = q_weights(self.plain, 2 * j)[1]
            self.lam_signed[j - 1] = q_weights(self.signed, 2 * j - 1)[1]

    @property
    def degree(self):
        return max(self.plain.degree, self.signed.degree) + 2

    def weights_p(self, j):
        """Bank weights (doubled partition) of ``p_j''``."""
        w = np.zeros(2 * self.n)
        lam = self.lam_plain[j - 1]
        w[2 * j - 1] = lam        # tau_{2j}
        w[2 * j] = 1.0 - lam      # tau_{2j+1}
        return w

    def weights_pt(self, j):
        """Bank weights of ``pt_j''``."""
        w = np.zeros(2 * self.n)
        lam = self.lam_signed[j - 1]
        w[2 * j - 2] = lam        # tau_{2j-1}
        w[2 * j - 1] = 1.0 - lam  # tau_{2j}
        return w

    def combination(self, a_p=None, a_pt=None):
        """Polynomial ``sum a_p[j] p_j + sum a_pt[j] pt_j`` (arrays indexed j-1, length n-1)."""
        total = None
        for coeffs, bank, wfun in ((a_p, self.plain, self.weights_p), (a_pt, self.signed, self.weights_pt)):
            if coeffs is None:
                continue
            w = np.zeros(2 * self.n)
            for j in np.nonzero(np.asarray(coeffs))[0] + 1:
                w += coeffs[j - 1] * wfun(j)
            dens = Polynomial.from_samples(bank.mixture_density(w))
            part = dens.antiderivative(0.0).antiderivative(0.0)
            total = part if total is None else total + part
        return total if total is not None else Polynomial.zero()

    def p(self, j):
        e = np.zeros(self.n - 1)
        e[j - 1] = 1.0
        return self.combination(a_p=e)

    def pt(self, j):
        e = np.zeros(self.n - 1)
        e[j - 1] = 1.0
        return self.combination(a_pt=e)


_PAIRS: dict = {}


def pair_kernels(n, params: KernelParams) -> PairKernels:
    key = (int(n), params.xi, params.mu)
    pk = _PAIRS.get(key)
    if pk is None or pk.params != params:
        pk = PairKernels(n, params)
        _PAIRS[key] = pk
    return pk


def pp_pair(n, j, xi, mu):
    """``(p_j, pt_j)`` for the partition with ``n`` intervals."""
    if not 1 <= j <= n - 1:
        raise ValueError("need 1 <= j <= n - 1")
    pk = pair_kernels(n, KernelParams(0.0, 0.0, xi, mu))
    return pk.p(j), pk.pt(j)


# --------------------------------------------------------------------------
# invariants and parameter escalation


def normalization_report(bank: KernelBank):
    """Per-kernel ``tau_j(1) - 1`` and the interval-mean condition."""
    p = bank.partition
    tau_end = np.array([bank.tau(j)(1.0) for j in range(1, bank.n + 1)]) - 1.0
    A = bank.tau_integrals
    lo = 1.0 - p.knots[:-1]  # 1 - x_{j-1}
    hi = 1.0 - p.knots[1:]   # 1 - x_j
    inside = (lo < A) & (A < hi)
    return {"tau_end_error": tau_end, "integral": A, "lower": lo, "upper": hi, "inside": inside}


def validate_params(params: KernelParams, ns=(8, 16, 32), max_steps=12):
    """Escalate ``(xi, mu)`` until normalization, mean and mixing invariants hold.

    Returns
    -------
    KernelParams
        The first parameters passing on every ``n`` in ``ns``.
    list of dict
        Log of tried parameters and failures.
    """
    log = []
    for _ in range(max_steps):
        failures = []
        try:
            for n in ns:
                for g in ((0, 0), (1, 1)):
                    bank = kernel_bank(2 * n, g[0], g[1], params.xi, params.mu)
                    rep = normalization_report(bank)
                    if np.max(np.abs(rep["tau_end_error"])) > 1e-9:
                        failures.append(f"tau(1) n={n} g={g}")
                    if g == (0, 0) and not np.all(rep["inside"]):
                        failures.append(f"mean outside interval n={n}")
                PairKernels(n, params)
        except KernelParameterError as exc:
            failures.append(str(exc))
        log.append({"xi": params.xi, "mu": params.mu, "failures": failures})
        if not failures:
            return params, log
        params = params.escalate()
    raise KernelParameterError(f"no admissible parameters found: {log[-1]}")


def kernel_dump(n, j, params: KernelParams):
    """Audit record ``{n, j, params, degree, d_j, lambda_j}`` for ``p_j``."""
    pk = pair_kernels(n, params)
    bank = pk.plain
    return {
        "n": n,
        "j": j,
        "params": params.to_dict(),
        "degree": bank.degree + 2,
        "d_j": [bank.d(2 * j), bank.d(2 * j + 1)] if j < n else [bank.d(2 * j)],
        "lambda_j": float(pk.lam_plain[j - 1]) if j < n else None,
    }


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
