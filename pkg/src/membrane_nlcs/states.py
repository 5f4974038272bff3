"""Nonlinear coherent states, deformed ladder operators and cat-state superpositions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import fockspace as fs
from .errors import TruncationLeakError, UsageError
from .evolution import factors
from .nonlinearity import LinearizedF, NonlinearityProfile, deformed_lowering, inverse_f_diag

TAIL_TOL = 1e-10


@dataclass(frozen=True)
class Nlcs:
    amplitude: complex
    coeffs: np.ndarray
    norm_const: float  # 1 / sqrt(sum |P(l) Lambda^l|^2 / l!)

    @property
    def dim(self) -> int:
        return self.coeffs.size


def _raw_nlcs(Lambda, profile, dim):
    """Unnormalized P(l) Lambda^l / sqrt(l!) via c_l = c_{l-1} Lambda f(l-1) / sqrt(l)."""
    profile.require(dim)
    c = np.empty(dim, dtype=complex)
    c[0] = 1.0
    f = profile.f_table
    for l in range(1, dim):
        c[l] = c[l - 1] * Lambda * f[l - 1] / math.sqrt(l)
    return c


def make_nlcs(Lambda: complex, profile: NonlinearityProfile, dim: int | None = None,
              tail_tol: float = TAIL_TOL) -> Nlcs:
    """Normalized eigenstate of (1/f(n)) b with eigenvalue ``Lambda``.

    With ``dim=None`` the cutoff grows until the last normalized coefficient
    falls below ``tail_tol``; an explicit ``dim`` that leaves a heavier tail
    raises TruncationLeakError.
    """
    Lambda = complex(Lambda)
    if dim is None:
        dim = min(profile.size, max(8, int(abs(Lambda) ** 2 * np.max(np.abs(profile.f_table[:40])) ** 2) + 10))
        while True:
            c = _raw_nlcs(Lambda, profile, dim)
            nrm = np.linalg.norm(c)
            if abs(c[-1]) / nrm < tail_tol and abs(c[-2]) / nrm < tail_tol:
                break
            if dim >= profile.size:
                raise TruncationLeakError(
                    f"NLCS with |Lambda| = {abs(Lambda):.3g} needs more than {profile.size} levels",
                    dim=dim, leaked=float(abs(c[-1]) / nrm),
                )
            dim = min(profile.size, dim + 10)
    else:
        c = _raw_nlcs(Lambda, profile, dim)
        nrm = np.linalg.norm(c)
        if abs(c[-1]) / nrm >= tail_tol:
            raise TruncationLeakError(
                f"NLCS tail |c_{dim - 1}| = {abs(c[-1]) / nrm:.2e} exceeds {tail_tol:g}; increase dim",
                dim=dim, leaked=float(abs(c[-1]) / nrm),
            )
    return Nlcs(Lambda, c / nrm, float(1.0 / nrm))


@dataclass(frozen=True)
class DeformedOps:
    B: np.ndarray
    B_dag: np.ndarray
    C: np.ndarray
    C_dag: np.ndarray
    valid_levels: int  # identities hold on levels < valid_levels - 1


def make_deformed_ops(profile: NonlinearityProfile, dim: int) -> DeformedOps:
    """B = f(n) b and C = (1/f(n)) b, applying b before the function of n."""
    B = deformed_lowering(profile, dim)
    # C|l> needs 1/f(l-1) for l = 1..dim-1
    inv = inverse_f_diag(profile, dim - 1)
    C = np.diag((inv * np.sqrt(np.arange(1, dim))).astype(complex), k=1)
    return DeformedOps(B, B.conj().T, C, C.conj().T, dim)


def _poisson_log(alpha2, n):
    if alpha2 == 0:
        return np.where(n == 0, 0.0, -np.inf)
    return n * math.log(alpha2) - alpha2 - gammaln(n + 1)


def _field_cut(alpha2, tol=1e-12):
    """Smallest N with Poisson(alpha2) tail beyond N below ``tol``."""
    n = np.arange(0, int(alpha2 + 12 * math.sqrt(alpha2 + 1) + 30))
    pmf = np.exp(_poisson_log(alpha2, n))
    tail = 1.0 - np.cumsum(pmf)
    idx = np.nonzero(tail < tol)[0]
    return int(idx[0]) + 1 if idx.size else n.size


def superposition_weights(alpha, tau, beta, profile, dim_f: int | None = None):
    """Poisson weights times exp(-2 n^2 Im(Theta) g(0)) for n < dim_f (unnormalized)."""
    alpha2 = abs(alpha) ** 2
    dim_f = dim_f or _field_cut(alpha2)
    n = np.arange(dim_f)
    fac = factors(tau, beta)
    logw = _poisson_log(alpha2, n) - 2.0 * n**2 * fac.theta_big.imag * profile.g_table[0]
    return np.exp(logw)


def superposition_density(alpha, tau, beta, profile: NonlinearityProfile, dim_f: int | None = None,
                          dim_m: int | None = None, weights: str = "printed") -> np.ndarray:
    """Reduced membrane density for a coherent cavity field.

    ``weights="printed"``: normalized NLCS projectors |Lambda_n><Lambda_n| with
    real weights Poisson(n) * exp(-2 n^2 Im(Theta) g(0)), renormalized to unit
    trace. Components whose weight is below 1e-16 of the largest are dropped.

    ``weights="evolved"``: partial trace over the field of the state produced
    by the disentangled propagator from |alpha>|0>; there the per-sector norm
    of the unnormalized kets compensates the exponential factor.
    """
    alpha2 = abs(alpha) ** 2
    dim_f = dim_f or _field_cut(alpha2)
    fac = factors(tau, beta)
    if weights == "evolved":
        from .evolution import evolve_closed_form

        D = fs.coherent_ket(alpha, dim_f)
        st = evolve_closed_form([1.0], D, tau, beta, profile, dim_m=dim_m)
        return fs.hermitize(st.membrane_density())
    if weights != "printed":
        raise UsageError(f"unknown weights mode {weights!r}")
    w = superposition_weights(alpha, tau, beta, profile, dim_f)
    keep = np.nonzero(w > 1e-16 * w.max())[0]
    kets = {int(n): make_nlcs(fac.lam(n), profile) for n in keep}
    dim = dim_m or max(k.dim for k in kets.values())
    rho = np.zeros((dim, dim), dtype=complex)
    for n, ket in kets.items():
        v = np.zeros(dim, dtype=complex)
        if ket.dim > dim:
            ket = make_nlcs(fac.lam(n), profile, dim)
        v[: ket.dim] = ket.coeffs
        rho += w[n] * np.outer(v, v.conj())
    rho = fs.normalize_dm(fs.hermitize(rho))
    fs.check_leak(np.real(np.diag(rho)), "superposition density")
    return rho


def joint_nlcs_density(D, tau, beta, profile: NonlinearityProfile, dim_m: int) -> np.ndarray:
    """Joint density sum_{n,l} D_n D_l* e^{i(n^2 Theta - l^2 Theta*) g(0)} |n><l| (x) |Lambda_n><Lambda_l|.

    Built from normalized NLCS kets; the trace is not 1 in general.
    """
    D = np.asarray(D, dtype=complex)
    fac = factors(tau, beta)
    g0 = profile.g_table[0]
    v = np.zeros((D.size, dim_m), dtype=complex)
    for n, dn in enumerate(D):
        if dn == 0:
            continue
        ket = make_nlcs(fac.lam(n), profile, dim_m)
        v[n] = dn * np.exp(1j * n * n * fac.theta_big * g0) * ket.coeffs
    vec = v.reshape(-1)
    return np.outer(vec, vec.conj())


@dataclass(frozen=True)
class CatState:
    zeta: complex
    xi: float
    phi: float
    coeffs: np.ndarray
    norm_const: float  # normalization of the base NLCS |zeta; f>
    global_phase: complex = 1.0  # unobservable prefactor, kept for bookkeeping

    @property
    def dim(self) -> int:
        return self.coeffs.size


def make_cat(zeta: complex, xi: float, phi: float, profile: NonlinearityProfile, dim: int | None = None,
             global_phase: complex = 1.0) -> CatState:
    """Coefficients proportional to exp(2 pi i xi k^2) (e^{i phi} zeta)^k P(k) / sqrt(k!)."""
    base = make_nlcs(zeta, profile, dim)
    k = np.arange(base.dim, dtype=float)
    # reduce xi k^2 mod 1 before exponentiating to keep the phase exact for large k
    quad = np.mod(xi * k * k, 1.0)
    c = base.coeffs * np.exp(2j * np.pi * quad + 1j * phi * k)
    c = c / np.linalg.norm(c)
    return CatState(complex(zeta), float(xi), float(phi), c, base.norm_const, complex(global_phase))


def cat_norm_plus(zeta: complex, profile: NonlinearityProfile, dim: int | None = None) -> float:
    """[2 + 2 N'^2 sum_n (-zeta^2)^n P(n)^2 / n!]^(-1/2), N' the NLCS normalization of zeta.

    This is the normalization of the even combination |zeta; f> + |-zeta; f>.
    """
    base = make_nlcs(zeta, profile, dim)
    n = np.arange(base.dim)
    P = profile.p_table[: base.dim]
    zeta = complex(zeta)
    terms = np.exp(n * np.log(abs(zeta)) * 2 - gammaln(n + 1)) if zeta != 0 else (n == 0).astype(float)
    phase = np.exp(1j * n * np.angle(-(zeta**2))) if zeta != 0 else 1.0
    s = np.sum(terms * phase * P**2)
    val = 2.0 + 2.0 * base.norm_const**2 * s
    return float(np.real(val) ** -0.5)


def two_component_cat(zeta: complex, profile: NonlinearityProfile, dim: int | None = None,
                      normalize: bool = True) -> np.ndarray:
    """e^{i pi/4} |zeta; f> + e^{-i pi/4} |-zeta; f>, normalized by its own norm."""
    plus = make_nlcs(zeta, profile, dim)
    minus = make_nlcs(-zeta, profile, plus.dim)
    v = np.exp(0.25j * np.pi) * plus.coeffs + np.exp(-0.25j * np.pi) * minus.coeffs
    return fs.normalize_ket(v) if normalize else v


def xi_phi_from_physical(l: int, beta, linf: LinearizedF, mode: str = "paper"):
    """Quadratic and linear cat phases: xi = l^2 |beta|^2 Gamma, phi = 2 pi l^2 |beta|^2 Delta."""
    gam, dlt = linf.coefficients(mode)
    b2 = abs(beta) ** 2
    return l * l * b2 * gam, 2 * np.pi * l * l * b2 * dlt


def cat_global_phase(l: int, beta, linf: LinearizedF) -> complex:
    return complex(np.exp(2j * np.pi * (l * linf.eps * abs(beta)) ** 2))
