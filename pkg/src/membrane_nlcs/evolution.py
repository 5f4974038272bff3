"""Interaction-picture dynamics of the cavity field and the membrane.

The approximate propagator is the product

    exp(beta mu n_f B^dag) exp(-beta* mu* n_f B) exp(i |beta|^2 ramp n_f^2 g(n_b))

with ``mu = 1 - exp(i tau)`` and ``ramp = tau + i mu*``. Every factor
conserves the photon number, so all joint objects are assembled sector by
sector. ``oracle_evolve`` integrates the exact time-dependent Schroedinger
equation and is the reference the approximate form is checked against.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import fockspace as fs
from .errors import ApproximationBreakdownError, ConvergenceError, UsageError
from .nonlinearity import NonlinearityProfile, deformed_lowering

log = logging.getLogger(__name__)

BETA_WARN = 0.1


@dataclass(frozen=True)
class PropagatorFactors:
    tau: float
    beta: complex
    mu: complex
    ramp: complex  # tau + i mu*, dimensionless
    theta_big: complex  # |beta|^2 ramp

    def lam(self, n):
        """Membrane displacement amplitude n beta mu for photon number n."""
        return n * self.beta * self.mu


def factors(tau: float, beta: complex) -> PropagatorFactors:
    mu = 1.0 - np.exp(1j * tau)
    ramp = tau + 1j * np.conj(mu)
    return PropagatorFactors(float(tau), complex(beta), complex(mu), complex(ramp), abs(beta) ** 2 * complex(ramp))


def _kerr_g(profile, dim_m, kerr_g):
    if kerr_g is None:
        profile.require(dim_m)
        return profile.g_table[:dim_m]
    kerr_g = np.asarray(kerr_g, dtype=float)
    if kerr_g.size < dim_m:
        raise UsageError(f"Kerr g table has {kerr_g.size} entries, need {dim_m}")
    return kerr_g[:dim_m]


def sector_propagator(n: int, fac: PropagatorFactors, profile: NonlinearityProfile, dim_m: int, kerr_g=None):
    """Membrane block of the propagator for photon number ``n``."""
    if n == 0:
        return np.eye(dim_m, dtype=complex)
    B = deformed_lowering(profile, dim_m)
    lam = fac.lam(n)
    g = _kerr_g(profile, dim_m, kerr_g)
    kerr = np.exp(1j * n * n * fac.theta_big * g)
    X = fs.expm(lam * B.conj().T)
    Y = fs.expm(-np.conj(lam) * B)
    return (X @ Y) * kerr[None, :]


def sector_propagators(tau, beta, profile, dim_f, dim_m, kerr_g=None):
    if abs(beta) > BETA_WARN:
        warnings.warn(
            f"|beta| = {abs(beta):.3g} > {BETA_WARN}: the second-order propagator degrades as O(beta^3)",
            stacklevel=3,
        )
    fac = factors(tau, beta)
    return [sector_propagator(n, fac, profile, dim_m, kerr_g) for n in range(dim_f)]


def block_diag(blocks) -> np.ndarray:
    dim_f = len(blocks)
    dim_m = blocks[0].shape[0]
    out = np.zeros((dim_f * dim_m, dim_f * dim_m), dtype=complex)
    for n, blk in enumerate(blocks):
        out[n * dim_m:(n + 1) * dim_m, n * dim_m:(n + 1) * dim_m] = blk
    return out


def propagator(tau, beta, profile, dim_f, dim_m, kerr_g=None) -> np.ndarray:
    """Joint matrix of the disentangled propagator (field-major ordering).

    ``kerr_g`` replaces g(n_b) in the Kerr factor only, e.g. with the
    linearized quadratic used for the cat-state scenarios.
    """
    return block_diag(sector_propagators(tau, beta, profile, dim_f, dim_m, kerr_g))


@dataclass
class JointState:
    """Amplitudes psi[n, k] over field level n and membrane level k."""

    amplitudes: np.ndarray
    provenance: str = "closed-form"
    prenorm: float | None = None

    @property
    def dims(self):
        return self.amplitudes.shape

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "JointState":
        return JointState(self.amplitudes / self.norm(), self.provenance, self.prenorm)

    def density(self) -> np.ndarray:
        return fs.ket_to_dm(self.vector)

    def membrane_density(self) -> np.ndarray:
        psi = self.amplitudes
        return psi.T @ psi.conj()

    def field_density(self) -> np.ndarray:
        psi = self.amplitudes
        return psi @ psi.conj().T

    def membrane_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)


def product_state(D, C, dim_f=None, dim_m=None) -> JointState:
    D = np.asarray(D, dtype=complex)
    C = np.asarray(C, dtype=complex)
    dim_f = dim_f or D.size
    dim_m = dim_m or C.size
    Dp = np.zeros(dim_f, dtype=complex)
    Cp = np.zeros(dim_m, dtype=complex)
    Dp[: D.size] = D
    Cp[: C.size] = C
    return JointState(np.outer(Dp, Cp), provenance="initial", prenorm=None)


def apply_propagator(psi: JointState, tau, beta, profile, kerr_g=None) -> JointState:
    dim_f, dim_m = psi.dims
    blocks = sector_propagators(tau, beta, profile, dim_f, dim_m, kerr_g)
    out = np.array([blocks[n] @ psi.amplitudes[n] for n in range(dim_f)])
    nrm = float(np.linalg.norm(out))
    fs.check_leak(np.sum(np.abs(out) ** 2, axis=0) / nrm**2, "propagated state")
    return JointState(out / nrm, provenance="operator-applied", prenorm=nrm)


def _membrane_hamiltonian_parts(beta, profile, dim_m):
    B = deformed_lowering(profile, dim_m)
    return np.conj(beta) * B, beta * B.conj().T


def _rk4_schroedinger(psi, t0, t1, steps, parts, nvec):
    lo, hi = parts
    h = (t1 - t0) / steps

    def rhs(t, y):
        hm = lo * np.exp(-1j * t) + hi * np.exp(1j * t)
        return -1j * nvec[:, None] * (y @ hm.T)

    t = t0
    y = psi
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def _integrate(psi0, taus, steps_per_unit, parts, nvec):
    out = []
    y = psi0
    t_prev = 0.0
    for t in taus:
        span = t - t_prev
        if span > 0:
            n = max(1, int(math.ceil(span * steps_per_unit)))
            y = _rk4_schroedinger(y, t_prev, t, n, parts, nvec)
        out.append(y)
        t_prev = t
    return out


def oracle_trajectory(psi0: JointState, taus, beta, profile, steps_per_unit: float = 200.0,
                      tol: float = 1e-10, max_doublings: int = 6):
    """Integrate i d(psi)/d(tau) = n_f (beta* B e^{-i tau} + beta B^dag e^{i tau}) psi with RK4.

    The step is halved until the step-doubling error estimate
    ``|fine - coarse| / 15`` drops below ``tol``; the returned states carry the
    Richardson-extrapolated value ``fine + (fine - coarse) / 15``.
    Returns a list of JointState objects, one per entry of ``taus``.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(np.diff(taus) < 0) or (taus.size and taus[0] < 0):
        raise UsageError("oracle times must be non-negative and increasing")
    dim_f, dim_m = psi0.dims
    parts = _membrane_hamiltonian_parts(beta, profile, dim_m)
    nvec = np.arange(dim_f, dtype=float)
    y0 = psi0.amplitudes.astype(complex)
    spu = float(steps_per_unit)
    coarse = _integrate(y0, taus, spu, parts, nvec)
    for _ in range(max_doublings):
        fine = _integrate(y0, taus, 2 * spu, parts, nvec)
        delta = max((np.linalg.norm(a - b) for a, b in zip(coarse, fine)), default=0.0) / 15.0
        if delta < tol:
            states = []
            for yc, yf in zip(coarse, fine):
                y = yf + (yf - yc) / 15.0
                fs.check_leak(np.sum(np.abs(y) ** 2, axis=0) / np.sum(np.abs(y) ** 2), "oracle state")
                states.append(JointState(y, provenance="oracle", prenorm=float(np.linalg.norm(y))))
            return states
        coarse, spu = fine, 2 * spu
    raise ConvergenceError(f"RK4 oracle did not converge to {tol:g} (error estimate {delta:.3e})")


def oracle_evolve(psi0: JointState, tau, beta, profile, steps: int | None = None, tol: float = 1e-10) -> JointState:
    """Exact-dynamics reference state at a single time ``tau``."""
    if steps is not None:
        spu = steps / max(tau, 1e-300)
        if tau == 0:
            return JointState(psi0.amplitudes.copy(), "oracle", psi0.norm())
        return oracle_trajectory(psi0, [tau], beta, profile, steps_per_unit=spu, tol=tol)[-1]
    return oracle_trajectory(psi0, [tau], beta, profile, tol=tol)[-1]


def oracle_fixed_steps(psi0: JointState, tau, beta, profile, steps: int) -> np.ndarray:
    """RK4 with exactly ``steps`` steps and no convergence control (for order studies)."""
    dim_f, dim_m = psi0.dims
    parts = _membrane_hamiltonian_parts(beta, profile, dim_m)
    return _rk4_schroedinger(psi0.amplitudes.astype(complex), 0.0, tau, steps, parts, np.arange(dim_f, dtype=float))


def _closed_form_amplitudes(C, D, fac, profile, dim_m, kerr_g):
    B = deformed_lowering(profile, dim_m)
    Bd = B.conj().T
    g = _kerr_g(profile, dim_m, kerr_g)
    Cp = np.zeros(dim_m, dtype=complex)
    Cp[: C.size] = C
    out = np.zeros((D.size, dim_m), dtype=complex)
    for n, dn in enumerate(D):
        if dn == 0:
            continue
        lam = fac.lam(n)
        phased = Cp * np.exp(1j * n * n * fac.theta_big * g)
        vec = fs.expm(-np.conj(lam) * B) @ phased
        out[n] = dn * (fs.expm(lam * Bd) @ vec)
    return out


def auto_membrane_dim(max_amplitude: float, f_scale: float, start: int = 12) -> int:
    """Rough Fock cutoff for a displaced state of amplitude ``max_amplitude * f_scale``."""
    a = abs(max_amplitude) * abs(f_scale)
    return int(max(start, math.ceil(a * a + 8 * a + 12)))


def evolve_closed_form(C, D, tau, beta, profile, dim_m: int | None = None, kerr_g=None,
                       max_dim: int | None = None) -> JointState:
    """Joint state sum_{n,k} C_k D_n e^{i n^2 Theta g(k)} |n> (x) |Lambda_{n,k}(tau)>.

    The membrane kets are built by applying the two displacement-like
    exponentials to |k>. The result is renormalized; ``prenorm`` keeps the
    norm before renormalization. With ``dim_m=None`` the membrane cutoff grows
    until the population in the top three levels is below 1e-10.
    """
    C = np.asarray(C, dtype=complex)
    D = np.asarray(D, dtype=complex)
    fac = factors(tau, beta)
    if abs(beta) > BETA_WARN:
        warnings.warn(f"|beta| = {abs(beta):.3g} > {BETA_WARN}: O(beta^3) errors grow", stacklevel=2)
    max_dim = max_dim or profile.size
    if dim_m is None:
        fmax = float(np.max(np.abs(profile.f_table[: min(profile.size, 40)])))
        dim = max(C.size + 4, auto_membrane_dim(abs(fac.lam(D.size - 1)), fmax))
        dim = min(dim, max_dim)
        while True:
            amps = _closed_form_amplitudes(C, D, fac, profile, dim, kerr_g)
            pops = np.sum(np.abs(amps) ** 2, axis=0)
            if np.sum(pops[-3:]) < 1e-10 * np.sum(pops) or dim >= max_dim:
                break
            dim = min(max_dim, dim + 10)
    else:
        amps = _closed_form_amplitudes(C, D, fac, profile, dim_m, kerr_g)
    nrm = float(np.linalg.norm(amps))
    # a leak also spoils the norm, so report it first
    fs.check_leak(np.sum(np.abs(amps) ** 2, axis=0) / nrm**2, "closed-form membrane state")
    if abs(1.0 - nrm) > 0.5:
        raise ApproximationBreakdownError(
            f"closed-form norm {nrm:.4f} deviates from 1 by more than 0.5; |beta| too large"
        )
    amps = amps / nrm
    log.debug("closed form tau=%g prenorm=%.15f dims=%s", tau, nrm, amps.shape)
    return JointState(amps, provenance="closed-form", prenorm=nrm)


def lambda_nk_series(n: int, k: int, tau, beta, profile, dim: int, printed: bool = False) -> np.ndarray:
    """Membrane ket e^{Lambda_n B^dag} e^{-Lambda_n* B} |k> from the explicit double sum.

    Term (l, l') lands on level k + l - l' with l' <= k. The factorial factor
    is sqrt(k! (k+l-l')!) / (k-l')!; ``printed=True`` substitutes the printed
    sqrt((k+l)!/(k-l')!), which only agrees when l = 0 or l' = 0.
    """
    lam = factors(tau, beta).lam(n)
    P = profile.p_table
    out = np.zeros(dim, dtype=complex)
    for lp in range(k + 1):
        for l in range(dim - (k - lp)):
            q = k + l - lp
            if q >= dim:
                break
            if printed:
                logfac = 0.5 * (gammaln(k + l + 1) - gammaln(k - lp + 1))
            else:
                logfac = 0.5 * (gammaln(k + 1) + gammaln(q + 1)) - gammaln(k - lp + 1)
            coeff = lam**l * (-np.conj(lam)) ** lp * math.exp(logfac - gammaln(l + 1) - gammaln(lp + 1))
            out[q] += coeff * P[k] * P[q] / P[k - lp] ** 2
    return out


def default_field_dim(D) -> int:
    D = np.asarray(D)
    occ = np.nonzero(np.abs(D) > 0)[0]
    top = int(occ[-1]) if occ.size else 0
    return top + 2
