"""Intensity-dependent coupling function f_j(n) and the quantities built on it.

The double sum over odd ``m`` and ``k = 0..(m-1)/2`` only depends on the pair
through ``d = m - 2k``, so it is evaluated as a single sum over odd ``d``

    f_j(n) = sum_d W_d exp(-x_d/2) d^j n!/(n+j)! L^j_n(x_d),   x_d = (eta theta d)^2

with ``W_d`` accumulated block by block in ``m``. The ``W_d`` are the cosine
Fourier coefficients of ``arcsin(r cos phi)``, which the tests use as an
independent check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    NumericError,
    ParameterDomainError,
    SeriesDivergenceError,
    SingularityError,
)

DEFAULT_TOL = 1e-14
ZERO_F_TOL = 1e-12
_HARD_M_CAP = 2_000_001


def laguerre_assoc(n: int, j: float, x):
    """Associated Laguerre polynomial L^j_n(x) by the three-term recurrence.

    Parameters
    ----------
    n : int
        Degree, ``n >= 0``.
    j : float
        Order (``j > -1``).
    x : float or numpy.ndarray
        Evaluation points.

    Returns
    -------
    float or numpy.ndarray
    """
    table = laguerre_table(n, j, x)
    return table[n]


def laguerre_table(nmax: int, j: float, x) -> np.ndarray:
    """All L^j_k(x) for k = 0..nmax, stacked along the first axis."""
    if nmax < 0:
        raise ParameterDomainError(f"Laguerre degree must be >= 0, got {nmax}")
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 1.0 + j - x
    for k in range(1, nmax):
        out[k + 1] = ((2 * k + 1 + j - x) * out[k] - (k + j) * out[k - 1]) / (k + 1)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"Laguerre recurrence overflowed (n <= {nmax}, j={j})")
    return out


def _auto_m_cap(r: float, tol: float) -> int:
    if r == 0.0:
        return 1
    # blocks decay like r^m; allow generous headroom past the tolerance point
    m = 2 * math.ceil(math.log(tol * 1e-3) / math.log(r)) + 101
    return min(max(m, 101), _HARD_M_CAP)


@lru_cache(maxsize=64)
def _series_weights(r: float, tol: float, m_max: int | None, j: int):
    """Return (d, W_d, m_used) with the odd-m sum truncated at relative ``tol``.

    Block m contributes at most ``sum_k t_{m,k} d^j`` to |f_j(n)|, because
    |exp(-x/2) n!/(n+j)! L^j_n(x)| <= 1 for x >= 0. Summation stops once the
    geometric tail estimate of the next blocks drops below ``tol`` times the
    accumulated absolute mass.
    """
    cap = _auto_m_cap(r, tol) if m_max is None else int(m_max)
    nd = (cap + 1) // 2
    weights = np.zeros(nd)
    mass = 0.0
    a_l = 1.0  # C(2l, l) / 4^l
    ratio = r * r
    converged = False
    m = 1
    log_r = math.log(r) if r > 0 else -math.inf
    while m <= cap:
        l = (m - 1) // 2
        if l > 0:
            a_l *= (2 * l - 1) / (2 * l)
        # binomial(m, k) / 2^m for k = l, l-1, ..., 0 via downward ratios
        b_center = a_l * (2 * l + 1) / (2 * (l + 1))
        if l > 0:
            kk = np.arange(l, 0, -1)
            ratios = kk / (m - kk + 1.0)
            b_desc = b_center * np.concatenate(([1.0], np.cumprod(ratios)))
        else:
            b_desc = np.array([b_center])
        # b_desc[i] is k = l - i, i.e. d = 2i + 1
        scale = 2.0 * a_l * math.exp(m * log_r) / m if r > 0 else 0.0
        t = scale * b_desc
        weights[: l + 1] += t
        d = 2.0 * np.arange(l + 1) + 1.0
        block = float(np.sum(t * d**j))
        mass += block
        tail = block * ratio / (1.0 - ratio) if ratio < 1 else math.inf
        if mass == 0.0 or tail < tol * mass:
            converged = True
            break
        m += 2
    if not converged:
        raise SeriesDivergenceError(
            f"f-series not converged to tol={tol:g} within m_max={cap} (r_c={r})"
        )
    used = l + 1
    d = 2.0 * np.arange(used) + 1.0
    w = weights[:used].copy()
    w.setflags(write=False)
    d.setflags(write=False)
    return d, w, m


def series_weights(reflectivity: float, tol: float = DEFAULT_TOL, m_max: int | None = None, j: int = 1):
    """Odd harmonics ``d`` and their weights ``W_d`` for the given reflectivity."""
    _check_series_args(reflectivity, tol)
    return _series_weights(float(reflectivity), float(tol), m_max, int(j))


def _check_series_args(r, tol):
    if r >= 1.0:
        raise SeriesDivergenceError(f"f-series diverges for r_c >= 1 (got {r})")
    if r < 0.0:
        raise ParameterDomainError(f"r_c must be >= 0, got {r}")
    if not tol > 0:
        raise ParameterDomainError(f"series tolerance must be > 0, got {tol}")


def _unpack(params):
    if hasattr(params, "reflectivity"):
        return float(params.reflectivity), float(params.eta), float(params.theta)
    r, eta, theta = params
    return float(r), float(eta), float(theta)


def f_values(j: int, nmax: int, params, tol: float = DEFAULT_TOL, m_max: int | None = None):
    """f_j(n) for n = 0..nmax. ``params`` is DimensionlessParams or (r_c, eta, theta)."""
    r, eta, theta = _unpack(params)
    _check_series_args(r, tol)
    if eta <= 0 or theta <= 0:
        raise ParameterDomainError("eta and theta must be > 0")
    if j < 0 or nmax < 0:
        raise ParameterDomainError("j and n must be non-negative")
    if r == 0.0:
        return np.zeros(nmax + 1), 1
    d, w, m_used = series_weights(r, tol, m_max, j)
    x = (eta * theta * d) ** 2
    lag = laguerre_table(nmax, j, x)
    n = np.arange(nmax + 1)
    # n!/(n+j)! = 1 / ((n+1)(n+2)...(n+j))
    fact = np.ones(nmax + 1)
    for i in range(1, j + 1):
        fact /= n + i
    terms = (w * np.exp(-0.5 * x) * d**j)[None, :] * lag
    return fact * terms.sum(axis=1), m_used


def f_series(j: int, n: int, params, tol: float = DEFAULT_TOL, m_max: int | None = None) -> float:
    vals, _ = f_values(j, n, params, tol, m_max)
    return float(vals[n])


def g_from_f(f) -> np.ndarray:
    """(n+1) f(n)^2 - n f(n-1)^2 elementwise."""
    f = np.asarray(f, dtype=float)
    n = np.arange(f.size)
    prev = np.concatenate(([0.0], f[:-1]))
    return (n + 1) * f**2 - n * prev**2


def p_from_f(f) -> np.ndarray:
    """P(0) = 1, P(l) = f(0) f(1) ... f(l-1); length len(f) + 1."""
    f = np.asarray(f, dtype=float)
    return np.concatenate(([1.0], np.cumprod(f)))


@dataclass(frozen=True)
class NonlinearityProfile:
    """Tabulated f(n), g(n), P(n) for a fixed parameter set.

    ``params`` is ``(r_c, eta, theta)`` or ``None`` for hand-built tables.
    """

    f_table: np.ndarray
    g_table: np.ndarray
    p_table: np.ndarray
    params: tuple | None = None
    j: int = 1
    series_cutoff: int = 0
    series_tol: float = DEFAULT_TOL
    zero_levels: tuple = field(default=())

    @property
    def size(self) -> int:
        return self.f_table.size

    def f(self, n):
        return self.f_table[n]

    def g(self, n):
        return self.g_table[n]

    def require(self, dim: int):
        if dim > self.size:
            raise ParameterDomainError(
                f"nonlinearity table has {self.size} levels but {dim} were requested"
            )

    def F_table(self) -> np.ndarray:
        """n f(n-1)^2, the helper function of the disentangling identities."""
        n = np.arange(self.size)
        prev = np.concatenate(([0.0], self.f_table[:-1]))
        return n * prev**2


def profile_from_f(f, params=None, j=1, series_cutoff=0, series_tol=DEFAULT_TOL) -> NonlinearityProfile:
    f = np.array(f, dtype=float)
    zeros = tuple(int(i) for i in np.nonzero(np.abs(f) < ZERO_F_TOL)[0])
    for arr in (f,):
        arr.setflags(write=False)
    g = g_from_f(f)
    p = p_from_f(f)
    g.setflags(write=False)
    p.setflags(write=False)
    return NonlinearityProfile(f, g, p, params, j, series_cutoff, series_tol, zeros)


def constant_profile(size: int, value: float = 1.0) -> NonlinearityProfile:
    """f(n) = value for every level; value 1 gives the standard optomechanical coupling."""
    return profile_from_f(np.full(size, float(value)))


def make_profile(params, size: int = 80, j: int = 1, tol: float = DEFAULT_TOL, m_max: int | None = None) -> NonlinearityProfile:
    """Tabulate f_j on levels 0..size-1."""
    r, eta, theta = _unpack(params)
    vals, m_used = f_values(j, size - 1, (r, eta, theta), tol, m_max)
    return profile_from_f(vals, (r, eta, theta), j, m_used, tol)


def g_of_n(profile: NonlinearityProfile, n: int) -> float:
    if not 0 <= n < profile.size:
        raise ParameterDomainError(f"level {n} outside the {profile.size}-entry table")
    return float(profile.g_table[n])


def deformed_lowering(profile: NonlinearityProfile, dim: int) -> np.ndarray:
    """Matrix of f(n) b: apply b first, then the function of n, so B|k> = f(k-1) sqrt(k) |k-1>."""
    profile.require(dim)
    sub = profile.f_table[: dim - 1] * np.sqrt(np.arange(1, dim))
    return np.diag(sub.astype(complex), k=1)


def check_nondegenerate(profile: NonlinearityProfile, dim: int):
    """Reject a coupling that vanishes identically (r_c = 0)."""
    if np.all(np.abs(profile.f_table[:dim]) < ZERO_F_TOL):
        raise ParameterDomainError("f(n) vanishes identically (r_c = 0): the coupling is degenerate")


def inverse_f_diag(profile: NonlinearityProfile, dim: int) -> np.ndarray:
    profile.require(dim)
    f = profile.f_table[:dim]
    bad = np.nonzero(np.abs(f) < ZERO_F_TOL)[0]
    if bad.size:
        lvl = int(bad[0])
        raise SingularityError(f"f({lvl}) = {f[lvl]:.3e} vanishes; 1/f(n) undefined at level {lvl}", level=lvl)
    return 1.0 / f


@dataclass(frozen=True)
class LinearizedF:
    """f(n) ~ eps + sigma n, with the quadratic coefficients of g(k).

    ``gamma_coef``/``delta_coef`` follow the printed closed forms; the direct
    expansion of (n+1)(eps + sigma n)^2 - n(eps + sigma (n-1))^2 is available
    as ``gamma_exact``/``delta_exact``.
    """

    eps: float
    sigma: float
    gamma_coef: float
    delta_coef: float

    @property
    def gamma_exact(self) -> float:
        return 3.0 * self.sigma**2

    @property
    def delta_exact(self) -> float:
        return self.sigma**2 - 4.0 * self.eps * self.sigma

    def coefficients(self, mode: str = "paper"):
        if mode == "paper":
            return self.gamma_coef, self.delta_coef
        if mode == "exact":
            return self.gamma_exact, self.delta_exact
        raise ParameterDomainError(f"unknown linearization mode {mode!r}")

    def g(self, k, mode: str = "paper"):
        """g(k) ~ Gamma k^2 - Delta k + eps^2."""
        gam, dlt = self.coefficients(mode)
        k = np.asarray(k, dtype=float)
        return gam * k**2 - dlt * k + self.eps**2

    def f(self, n):
        return self.eps + self.sigma * np.asarray(n, dtype=float)


def gamma_delta_paper(eps: float, sigma: float):
    gamma = (eps - sigma) ** 2 + sigma * eps + 2 * sigma
    delta = sigma * (sigma - 3 * eps) + eps**2
    return gamma, delta


def linearize_f(params, tol: float = DEFAULT_TOL, m_max: int | None = None) -> LinearizedF:
    r, eta, theta = _unpack(params)
    _check_series_args(r, tol)
    et = eta * theta
    if et > 0.1:
        warnings.warn(f"eta*theta = {et:.3g} is not small; the linear form of f is unreliable", stacklevel=2)
    if r == 0.0:
        return LinearizedF(0.0, 0.0, *gamma_delta_paper(0.0, 0.0))
    # sigma carries d^3, so converge the weights against that heavier tail
    d, w, _ = series_weights(r, tol, m_max, 3)
    damp = np.exp(-0.5 * (et * d) ** 2)
    eps = float(np.sum(w * d * damp))
    sigma = float(-0.5 * et**2 * np.sum(w * d**3 * damp))
    return LinearizedF(eps, sigma, *gamma_delta_paper(eps, sigma))
