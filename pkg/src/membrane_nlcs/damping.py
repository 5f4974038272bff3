"""Photon leakage from the cavity: first-order Born correction and a master-equation reference.

Damping rates are in units of the mechanical frequency. The joint ordering
is field (x) membrane as everywhere else.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import fockspace as fs
from .errors import ConvergenceError, ParameterDomainError, UsageError
from .evolution import block_diag, factors, product_state, sector_propagators
from .nonlinearity import NonlinearityProfile, deformed_lowering
from .states import make_nlcs

log = logging.getLogger(__name__)

NEG_EIG_WARN = -1e-6


@dataclass
class DampedEvolutionResult:
    rho0: np.ndarray
    rho1: np.ndarray
    rho: np.ndarray
    kappa: float
    quadrature_nodes: int
    dims: tuple
    min_eig: float
    mode: str = "born"

    def membrane_density(self) -> np.ndarray:
        return fs.partial_trace_field(self.rho, *self.dims)


def _field_ops(dim_f, dim_m):
    a, _, n = fs.ladder_ops(dim_f)
    eye = np.eye(dim_m)
    return np.kron(a, eye), np.kron(n, eye)


def _unitary(tau, beta, profile, dim_f, dim_m, kerr_g):
    return block_diag(sector_propagators(tau, beta, profile, dim_f, dim_m, kerr_g))


def atilde(dt, beta, profile: NonlinearityProfile, dim_f: int, dim_m: int, mode: str = "direct",
           kerr_g=None) -> np.ndarray:
    """Field lowering operator carried through the propagator over ``dt``.

    ``direct``: U(dt) a U(dt)^dag. ``paper``: a (x) e^{beta mu B^dag} e^{-beta* mu* B}
    e^{i |beta|^2 ramp g(n_b)}, which leaves out the photon-number dependence
    picked up when a is moved through the exponents.
    """
    A, _ = _field_ops(dim_f, dim_m)
    if mode == "direct":
        U = _unitary(dt, beta, profile, dim_f, dim_m, kerr_g)
        return U @ A @ U.conj().T
    if mode == "paper":
        fac = factors(dt, beta)
        B = deformed_lowering(profile, dim_m)
        g = profile.g_table[:dim_m] if kerr_g is None else np.asarray(kerr_g)[:dim_m]
        M = fs.expm(beta * fac.mu * B.conj().T) @ fs.expm(-np.conj(beta) * np.conj(fac.mu) * B)
        M = M * np.exp(1j * fac.theta_big * g)[None, :]
        a, _, _ = fs.ladder_ops(dim_f)
        return np.kron(a, M)
    raise UsageError(f"unknown atilde mode {mode!r}")


def atilde_discrepancy(dt, beta, profile, dim_f, dim_m) -> float:
    return float(np.linalg.norm(atilde(dt, beta, profile, dim_f, dim_m, "direct")
                                - atilde(dt, beta, profile, dim_f, dim_m, "paper")))


def _dissipator(rho, A, N):
    return A @ rho @ A.conj().T - 0.5 * (N @ rho + rho @ N)


def _simpson(values, h):
    v = values
    return (h / 3.0) * (v[0] + v[-1] + 4 * sum(v[1:-1:2]) + 2 * sum(v[2:-1:2]))


def born_rho1(D, tau, kappa, beta, profile: NonlinearityProfile, dim_m: int, C=None,
              quadrature_nodes: int = 65, mode: str = "born", tol: float = 1e-8,
              max_nodes: int = 1025, kerr_g=None) -> DampedEvolutionResult:
    """Undamped joint state plus its first-order correction in ``kappa``.

    ``mode="born"`` (default) integrates the leakage term in the frame of the
    undamped propagator,
        rho1 = kappa U(tau) [int_0^tau U(t)^dag D[U(t) rho(0) U(t)^dag] U(t) dt] U(tau)^dag,
    with D[r] = a r a^dag - (n r + r n)/2. ``mode="literal"`` evaluates
        kappa int_0^tau a~(tau-t) rho0(tau) a~(tau-t)^dag dt - (kappa/2) {n, rho0(tau)},
    with a~ from :func:`atilde` in direct mode. Simpson nodes double until
    rho1 changes by less than ``tol`` (Frobenius).
    """
    if kappa < 0:
        raise ParameterDomainError(f"kappa must be >= 0, got {kappa}")
    if quadrature_nodes < 9 or quadrature_nodes % 2 == 0:
        raise UsageError("quadrature_nodes must be odd and >= 9")
    if mode not in ("born", "literal"):
        raise UsageError(f"unknown Born mode {mode!r}")
    D = np.asarray(D, dtype=complex)
    dim_f = D.size
    if C is None:
        C = [1.0]
    psi0 = product_state(D, C, dim_f=dim_f, dim_m=dim_m).vector
    psi0 = psi0 / np.linalg.norm(psi0)
    rho_init = np.outer(psi0, psi0.conj())
    A, N = _field_ops(dim_f, dim_m)
    Utau = _unitary(tau, beta, profile, dim_f, dim_m, kerr_g)
    rho0 = Utau @ rho_init @ Utau.conj().T
    fs.check_leak(fs.level_populations(rho0, dim_f, dim_m), "undamped joint state")

    if kappa == 0:
        rho1 = np.zeros_like(rho0)
        nodes = 0
    else:
        cache = {}

        def integrand(t):
            key = round(t / tau, 14) if tau else 0.0
            if key in cache:
                return cache[key]
            if mode == "born":
                Ut = _unitary(t, beta, profile, dim_f, dim_m, kerr_g)
                inner = _dissipator(Ut @ rho_init @ Ut.conj().T, A, N)
                val = Ut.conj().T @ inner @ Ut
            else:
                At = atilde(tau - t, beta, profile, dim_f, dim_m, "direct", kerr_g)
                val = At @ rho0 @ At.conj().T
            cache[key] = val
            return val

        def integrate(n):
            if tau == 0:
                return np.zeros_like(rho0)
            ts = np.linspace(0.0, tau, n)
            return _simpson([integrand(t) for t in ts], tau / (n - 1))

        nodes = quadrature_nodes
        prev = integrate(nodes)
        while True:
            finer = 2 * nodes - 1
            if finer > max_nodes:
                raise ConvergenceError(f"Born quadrature not converged at {nodes} nodes")
            cur = integrate(finer)
            change = kappa * np.linalg.norm(cur - prev)
            nodes = finer
            if change < tol:
                break
            prev = cur
        if mode == "born":
            rho1 = kappa * (Utau @ cur @ Utau.conj().T)
        else:
            rho1 = kappa * cur - 0.5 * kappa * (N @ rho0 + rho0 @ N)
    rho = fs.normalize_dm(fs.hermitize(rho0 + rho1))
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if min_eig < NEG_EIG_WARN:
        warnings.warn(
            f"damped density has eigenvalue {min_eig:.3e}: kappa*tau = {kappa * tau:.3g} is beyond "
            "the first-order regime",
            stacklevel=2,
        )
    return DampedEvolutionResult(rho0, rho1, rho, float(kappa), nodes, (dim_f, dim_m), min_eig, mode)


def _lindblad_rhs_factory(beta, profile, dim_f, dim_m, kappa):
    B = deformed_lowering(profile, dim_m)
    lo, hi = np.conj(beta) * B, beta * B.conj().T
    nvec = np.arange(dim_f, dtype=float)
    sq = np.sqrt(np.arange(1, dim_f, dtype=float))
    n_sum = nvec[:, None, None, None] + nvec[None, None, :, None]

    def rhs(t, R):
        hm = lo * np.exp(-1j * t) + hi * np.exp(1j * t)
        # H = n_f (x) hm acts on the membrane index of each side
        HR = np.transpose(np.tensordot(hm, R, axes=([1], [1])), (1, 0, 2, 3)) * nvec[:, None, None, None]
        RH = np.tensordot(R, hm, axes=([3], [0])) * nvec[None, None, :, None]
        out = -1j * (HR - RH)
        if kappa:
            jump = np.zeros_like(R)
            jump[:-1, :, :-1, :] = sq[:, None, None, None] * sq[None, None, :, None] * R[1:, :, 1:, :]
            out = out + kappa * (jump - 0.5 * n_sum * R)
        return out

    return rhs


def _rk4_density(R, t0, t1, steps, rhs):
    h = (t1 - t0) / steps
    t = t0
    for _ in range(steps):
        k1 = rhs(t, R)
        k2 = rhs(t + 0.5 * h, R + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, R + 0.5 * h * k2)
        k4 = rhs(t + h, R + h * k3)
        R = R + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return R


def lindblad_trajectory(rho0, taus, kappa, beta, profile, dim_f: int, dim_m: int,
                        steps_per_unit: float = 40.0, tol: float = 1e-10, max_doublings: int = 6):
    """RK4 solution of d(rho)/d(tau) = -i[H(tau), rho] + kappa (a rho a^dag - {n, rho}/2).

    H(tau) = n_f (x) (beta* B e^{-i tau} + beta B^dag e^{i tau}). Steps double
    until the step-doubling error estimate is below ``tol``; the returned
    matrices are Richardson-extrapolated.
    """
    if kappa < 0:
        raise ParameterDomainError(f"kappa must be >= 0, got {kappa}")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim_f * dim_m, dim_f * dim_m):
        raise UsageError(f"initial density of shape {rho0.shape} does not match dims ({dim_f}, {dim_m})")
    taus = np.asarray(taus, dtype=float)
    rhs = _lindblad_rhs_factory(beta, profile, dim_f, dim_m, kappa)
    R0 = rho0.reshape(dim_f, dim_m, dim_f, dim_m)

    def run(spu):
        out, R, tp = [], R0, 0.0
        for t in taus:
            if t > tp:
                R = _rk4_density(R, tp, t, max(1, int(math.ceil((t - tp) * spu))), rhs)
            out.append(R)
            tp = t
        return out

    spu = steps_per_unit
    coarse = run(spu)
    for _ in range(max_doublings):
        fine = run(2 * spu)
        err = max(np.linalg.norm(a - b) for a, b in zip(coarse, fine)) / 15.0
        if err < tol:
            res = []
            for c, f in zip(coarse, fine):
                m = (f + (f - c) / 15.0).reshape(dim_f * dim_m, dim_f * dim_m)
                res.append(fs.hermitize(m))
            return res
        coarse, spu = fine, 2 * spu
    raise ConvergenceError(f"master-equation integrator not converged (error estimate {err:.3e})")


def lindblad_oracle(rho0, tau, kappa, beta, profile, dim_f: int, dim_m: int, steps: int | None = None,
                    tol: float = 1e-10) -> np.ndarray:
    spu = 40.0 if steps is None else steps / max(tau, 1e-300)
    return lindblad_trajectory(rho0, [tau], kappa, beta, profile, dim_f, dim_m, spu, tol)[-1]


def coeff_I(n: int, l: int, k: int, kprime: int, tau, beta, profile: NonlinearityProfile,
            dim: int | None = None) -> complex:
    """Expansion coefficient of the jump term a rho0 a^dag between |k> and |k'>.

    e^{i(n^2 Theta - l^2 Theta*) g(0)} N_n N_l sqrt(n l) Lambda_n^k (Lambda_l*)^k' P(k) P(k') / sqrt(k! k'!),
    where N_n is the normalization of the NLCS with amplitude Lambda_n.
    """
    if n < 1 or l < 1:
        raise ParameterDomainError("coeff_I needs n, l >= 1")
    fac = factors(tau, beta)
    g0 = profile.g_table[0]
    ln, ll = fac.lam(n), fac.lam(l)
    Nn = make_nlcs(ln, profile, dim).norm_const
    Nl = make_nlcs(ll, profile, dim).norm_const
    P = profile.p_table
    phase = np.exp(1j * (n * n * fac.theta_big - l * l * np.conj(fac.theta_big)) * g0)
    lf = 0.5 * (math.lgamma(k + 1) + math.lgamma(kprime + 1))
    return complex(phase * Nn * Nl * math.sqrt(n * l) * ln**k * np.conj(ll) ** kprime
                   * P[k] * P[kprime] * math.exp(-lf))


def membrane_series(D, taus, kappa, beta, profile, dim_m: int, C=None, mode: str = "born",
                    quadrature_nodes: int = 65, kerr_g=None):
    """Reduced membrane densities of the damped evolution at each ``tau``."""
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        for t in taus:
            res = born_rho1(D, t, kappa, beta, profile, dim_m, C=C, quadrature_nodes=quadrature_nodes,
                            mode=mode, kerr_g=kerr_g)
            out.append(fs.hermitize(res.membrane_density()))
    return out


def nlcs_coeffs(zeta, profile, dim):
    """Membrane coefficients of |zeta; f> padded to ``dim`` levels."""
    return make_nlcs(zeta, profile, dim).coeffs
