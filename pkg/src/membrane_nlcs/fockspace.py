"""Dense linear algebra on truncated Fock spaces.

States are plain numpy arrays: kets are 1-D complex vectors, operators and
density matrices are 2-D. Joint field-membrane objects use the ordering
``field (x) membrane``, so the joint index is ``n * dim_m + k``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.special

from .errors import NumericError, TruncationLeakError, UsageError

LEAK_TOL = 1e-8


def ladder_ops(dim: int):
    """Lowering, raising and number operators truncated to ``dim`` levels."""
    if int(dim) != dim or dim < 2:
        raise UsageError(f"Fock dimension must be an integer >= 2, got {dim!r}")
    dim = int(dim)
    lower = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    raise_ = lower.T.copy()
    number = np.diag(np.arange(dim, dtype=float)).astype(complex)
    return lower, raise_, number


def expm(op) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise UsageError(f"expm needs a square matrix, got shape {op.shape}")
    if not np.all(np.isfinite(op)):
        raise NumericError("expm: operator has non-finite entries")
    return scipy.linalg.expm(op)


def fock_ket(k: int, dim: int) -> np.ndarray:
    if not 0 <= k < dim:
        raise UsageError(f"level {k} outside a {dim}-level space")
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return v


def coherent_ket(alpha: complex, dim: int, normalize: bool = False) -> np.ndarray:
    """Number-basis coefficients exp(-|a|^2/2) a^k / sqrt(k!) for k < dim."""
    k = np.arange(dim)
    # log-space keeps large |alpha| and k finite
    logmag = -0.5 * abs(alpha) ** 2 - 0.5 * scipy.special.gammaln(k + 1)
    if alpha == 0:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
    else:
        v = np.exp(logmag + k * np.log(abs(alpha)) + 1j * k * np.angle(alpha))
    return normalize_ket(v) if normalize else v


def normalize_ket(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0 or not np.isfinite(nrm):
        raise NumericError("cannot normalize a zero or non-finite vector")
    return v / nrm


def ket_to_dm(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def normalize_dm(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    tr = np.trace(rho).real
    if not np.isfinite(tr) or abs(tr) < 1e-300:
        raise NumericError("density matrix has zero or non-finite trace")
    return rho / tr


def hermitize(rho) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def joint_op(field_op, membrane_op) -> np.ndarray:
    return np.kron(field_op, membrane_op)


def partial_trace_field(rho, dim_f: int, dim_m: int) -> np.ndarray:
    """Trace out the cavity field from a joint density matrix."""
    rho = np.asarray(rho)
    if rho.shape != (dim_f * dim_m, dim_f * dim_m):
        raise UsageError(
            f"joint density of shape {rho.shape} does not match dims ({dim_f}, {dim_m})"
        )
    return np.einsum("nanb->ab", rho.reshape(dim_f, dim_m, dim_f, dim_m))


def partial_trace_membrane(rho, dim_f: int, dim_m: int) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (dim_f * dim_m, dim_f * dim_m):
        raise UsageError(
            f"joint density of shape {rho.shape} does not match dims ({dim_f}, {dim_m})"
        )
    return np.einsum("akbk->ab", rho.reshape(dim_f, dim_m, dim_f, dim_m))


def expect(op, state) -> complex:
    """<op> for a ket (1-D) or density matrix (2-D)."""
    state = np.asarray(state)
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    return complex(np.trace(op @ state))


def _psd_sqrt(rho):
    w, v = np.linalg.eigh(hermitize(rho))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(a, b) -> float:
    """|<a|b>|^2 for kets, <a|rho|a> for ket/mixed, Uhlmann fidelity otherwise."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] != b.shape[0]:
        raise UsageError(f"fidelity: dimension mismatch {a.shape} vs {b.shape}")
    if a.ndim == 1 and b.ndim == 1:
        val = abs(np.vdot(a, b)) ** 2
    elif a.ndim == 1:
        val = np.vdot(a, b @ a).real
    elif b.ndim == 1:
        val = np.vdot(b, a @ b).real
    else:
        s = _psd_sqrt(a)
        m = s @ b @ s
        ev = np.clip(np.linalg.eigvalsh(hermitize(m)), 0.0, None)
        val = np.sum(np.sqrt(ev)) ** 2
    return float(min(max(val, 0.0), 1.0))


def trace_distance(rho, sigma) -> float:
    ev = np.linalg.eigvalsh(hermitize(np.asarray(rho) - np.asarray(sigma)))
    return 0.5 * float(np.sum(np.abs(ev)))


def level_populations(state, dim_f: int | None = None, dim_m: int | None = None):
    """Populations per level of the (last) mode; joint inputs are reduced to the membrane."""
    state = np.asarray(state)
    if state.ndim == 1:
        pops = np.abs(state) ** 2
        if dim_f is not None:
            pops = pops.reshape(dim_f, dim_m).sum(axis=0)
        return pops
    diag = np.real(np.diag(state))
    if dim_f is not None:
        diag = diag.reshape(dim_f, dim_m).sum(axis=0)
    return diag


def check_leak(pops, where: str = "state", tol: float = LEAK_TOL) -> int:
    """Raise if population above index ``0.999 * dim`` exceeds ``tol``.

    Returns the highest level carrying more than ``tol`` population.
    """
    pops = np.asarray(pops, dtype=float)
    dim = pops.size
    edge = min(int(np.floor(0.999 * dim)), dim - 1)
    leaked = float(np.sum(pops[edge:]))
    if leaked > tol:
        raise TruncationLeakError(
            f"{where}: population {leaked:.3e} at level >= {edge} of a {dim}-level basis "
            f"(limit {tol:.0e}); increase the truncation dimension",
            dim=dim,
            leaked=leaked,
        )
    occupied = np.nonzero(pops > tol)[0]
    return int(occupied[-1]) if occupied.size else 0
