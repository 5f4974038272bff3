"""Quadrature squeezing, Mandel parameter and Husimi Q-function of the membrane."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.special import gammaln

from . import fockspace as fs
from .errors import NumericError, UsageError

NORM_TOL = 1e-8


def _as_state(state):
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        tr = float(np.vdot(state, state).real)
    elif state.ndim == 2 and state.shape[0] == state.shape[1]:
        tr = float(np.trace(state).real)
    else:
        raise UsageError(f"expected a ket or square density matrix, got shape {state.shape}")
    if abs(tr - 1.0) > NORM_TOL:
        raise UsageError(f"state is not normalized (trace/norm^2 = {tr:.12g})")
    return state


def _moments(state):
    """<b^dag b>, <b^2>, <b> for a ket or density matrix, using the off-diagonal structure of b."""
    dim = state.shape[0]
    k = np.arange(dim, dtype=float)
    s1 = np.sqrt(k[1:])
    s2 = np.sqrt(k[2:] * k[1:-1])
    if state.ndim == 1:
        c = state
        n1 = float(np.sum(k * np.abs(c) ** 2))
        b1 = np.sum(np.conj(c[:-1]) * s1 * c[1:])
        b2 = np.sum(np.conj(c[:-2]) * s2 * c[2:])
    else:
        n1 = float(np.sum(k * np.real(np.diag(state))))
        # <b> = tr(b rho) = sum_k sqrt(k) rho[k, k-1]
        b1 = np.sum(s1 * np.diagonal(state, offset=-1))
        b2 = np.sum(s2 * np.diagonal(state, offset=-2))
    return n1, complex(b1), complex(b2)


@dataclass(frozen=True)
class QuadratureReport:
    tau: float
    A1: float
    A2: complex
    A3: complex
    S1: float
    S2: float
    varX1: float
    varX2: float

    @property
    def uncertainty_product(self) -> float:
        return self.varX1 * self.varX2


def squeezing(state, tau: float) -> QuadratureReport:
    """Squeezing parameters in the frame rotating with the membrane.

    S1 = 2 A1 + 2 Re A2 - 4 (Re A3)^2 and S2 = 2 A1 - 2 Re A2 - 4 (Im A3)^2,
    with A1 = <b^dag b>, A2 = <b^2> e^{2 i tau}, A3 = <b> e^{i tau}.
    Negative S_j means variance below the vacuum level in quadrature j.
    """
    state = _as_state(state)
    n1, b1, b2 = _moments(state)
    A2 = b2 * np.exp(2j * tau)
    A3 = b1 * np.exp(1j * tau)
    S1 = 2 * n1 + 2 * A2.real - 4 * A3.real**2
    S2 = 2 * n1 - 2 * A2.real - 4 * A3.imag**2
    return QuadratureReport(float(tau), n1, complex(A2), complex(A3), float(S1), float(S2),
                            (S1 + 1) / 4, (S2 + 1) / 4)


def mandel(state) -> float:
    """(<n^2> - <n>^2)/<n> - 1, with the vacuum convention M = 0 when <n> < 1e-14."""
    state = np.asarray(state, dtype=complex)
    pops = np.abs(state) ** 2 if state.ndim == 1 else np.real(np.diag(state))
    pops = pops / np.sum(pops)
    k = np.arange(pops.size, dtype=float)
    mean = float(np.sum(k * pops))
    if mean < 1e-14:
        return 0.0
    # factorial moment form avoids cancelling <n^2> against <n>^2 + <n>
    fact2 = float(np.sum(k * (k - 1) * pops))
    return (fact2 - mean * mean) / mean


@dataclass
class QGrid:
    gamma_re: np.ndarray
    gamma_im: np.ndarray
    values: np.ndarray  # values[i, j] at gamma = gamma_re[j] + i gamma_im[i]
    norm_mode: str = "raw"
    norm_const: float | None = None
    extensions: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def spacing(self):
        return (self.gamma_re[1] - self.gamma_re[0], self.gamma_im[1] - self.gamma_im[0])

    def riemann_sum(self) -> float:
        dx, dy = self.spacing
        vals = self.values if self.norm_mode == "raw" else self.values * (self.norm_const or 1.0) ** 2
        return float(np.sum(vals) * dx * dy)

    def rows(self):
        """Yield (gamma_re, gamma_im, Q) triples, real axis fastest."""
        for i, y in enumerate(self.gamma_im):
            for j, x in enumerate(self.gamma_re):
                yield x, y, self.values[i, j]


def _coherent_matrix(gammas, dim):
    """V[k, p] = <k|gamma_p> in log-space."""
    k = np.arange(dim)[:, None]
    mag = np.abs(gammas)[None, :]
    logmag = np.log(np.where(mag > 0, mag, 1.0))
    expo = -0.5 * mag**2 - 0.5 * gammaln(k + 1) + k * logmag
    # gamma = 0 is the vacuum: only k = 0 survives
    expo = np.where((k > 0) & (mag == 0), -np.inf, expo)
    return np.exp(expo + 1j * k * np.angle(gammas)[None, :])


def _q_values(state, gammas, chunk=16384):
    dim = state.shape[0]
    out = np.empty(gammas.size)
    for s in range(0, gammas.size, chunk):
        V = _coherent_matrix(gammas[s:s + chunk], dim)
        if state.ndim == 1:
            amp = V.conj().T @ state
            out[s:s + chunk] = np.abs(amp) ** 2
        else:
            W = state @ V
            out[s:s + chunk] = np.real(np.sum(V.conj() * W, axis=0))
    return out / np.pi


def q_at(state, gamma) -> np.ndarray:
    """Q = <gamma|rho|gamma>/pi at arbitrary points."""
    g = np.atleast_1d(np.asarray(gamma, dtype=complex))
    return _q_values(np.asarray(state, dtype=complex), g.ravel()).reshape(g.shape)


def husimi_q(rho, extent: float = 5.0, points: int = 201, auto_extend: bool = True,
             max_extensions: int = 12, boundary_tol: float = 1e-6, norm_mode: str = "raw",
             norm_const: float | None = None, center: complex = 0.0) -> QGrid:
    """Q-function of a membrane ket or density matrix on a square grid.

    The grid starts at [-extent, extent]^2 around ``center`` and grows by 2 on
    each side (keeping the spacing) until the boundary maximum is below
    ``boundary_tol`` times the global maximum. ``norm_mode="paper"`` divides
    the values by ``norm_const**2``.
    """
    state = np.asarray(rho, dtype=complex)
    if points < 3:
        raise UsageError("Q grid needs at least 3 points per axis")
    step = 2 * extent / (points - 1)
    ext = extent
    for ext_count in range(max_extensions + 1):
        n = int(round(2 * ext / step)) + 1
        xs = complex(center).real + np.linspace(-ext, ext, n)
        ys = complex(center).imag + np.linspace(-ext, ext, n)
        G = xs[None, :] + 1j * ys[:, None]
        Q = _q_values(state, G.ravel()).reshape(G.shape)
        edge = max(Q[0].max(), Q[-1].max(), Q[:, 0].max(), Q[:, -1].max())
        if not auto_extend or edge < boundary_tol * Q.max():
            break
        ext += 2.0
    else:
        raise NumericError(
            f"Q-function still {edge / Q.max():.2e} of its maximum on the boundary after "
            f"{max_extensions} extensions (half-width {ext - 2:.1f})"
        )
    if norm_mode == "paper":
        if not norm_const:
            raise UsageError("paper normalization needs norm_const")
        Q = Q / norm_const**2
    elif norm_mode != "raw":
        raise UsageError(f"unknown Q normalization {norm_mode!r}")
    return QGrid(xs, ys, Q, norm_mode, norm_const, ext_count)


@dataclass(frozen=True)
class PeakReport:
    count: int
    peaks: list  # (gamma_re, gamma_im, height), highest first
    distances: np.ndarray  # condensed pairwise distances

    @property
    def separation(self) -> float:
        return float(self.distances.max()) if self.distances.size else 0.0


def count_q_peaks(grid: QGrid, rel_threshold: float = 0.1) -> PeakReport:
    """Local maxima over 8-neighbourhoods above ``rel_threshold`` times the global maximum.

    Flat-topped maxima spanning several cells count once (the highest cell).
    """
    Q = grid.values
    filt = ndimage.maximum_filter(Q, size=3, mode="constant", cval=-np.inf)
    mask = (Q >= filt) & (Q >= rel_threshold * Q.max())
    labels, nlab = ndimage.label(mask, structure=np.ones((3, 3)))
    peaks = []
    for lab in range(1, nlab + 1):
        idx = np.argwhere(labels == lab)
        i, j = idx[np.argmax(Q[idx[:, 0], idx[:, 1]])]
        peaks.append((float(grid.gamma_re[j]), float(grid.gamma_im[i]), float(Q[i, j])))
    peaks.sort(key=lambda p: -p[2])
    pts = np.array([[p[0], p[1]] for p in peaks]).reshape(-1, 2)
    if len(peaks) > 1:
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=-1))
        iu = np.triu_indices(len(peaks), k=1)
        distances = dist[iu]
    else:
        distances = np.zeros(0)
    return PeakReport(len(peaks), peaks, distances)


def qn_paper_formula(alpha, tau, beta, profile, grid: QGrid, nmax: int | None = None) -> QGrid:
    """Q-function from the closed-form series without the P(l) factors in the overlap.

    Q = exp(-|alpha|^2 - |gamma|^2)/pi * sum_n |alpha|^{2n}/n! w_n |exp(Lambda_n |gamma| e^{i phi})|^2,
    phi = arg(gamma). Comparison mode only; the returned grid is in the
    paper normalization (norm_const = 1).
    """
    from .evolution import factors

    fac = factors(tau, beta)
    a2 = abs(alpha) ** 2
    nmax = nmax or int(a2 + 12 * math.sqrt(a2 + 1) + 20)
    G = grid.gamma_re[None, :] + 1j * grid.gamma_im[:, None]
    total = np.zeros(G.shape)
    g0 = profile.g_table[0]
    for n in range(nmax):
        logw = (n * math.log(a2) if a2 > 0 else (0.0 if n == 0 else -np.inf)) - gammaln(n + 1)
        logw -= 2 * n * n * fac.theta_big.imag * g0
        if not np.isfinite(logw):
            continue
        z = fac.lam(n) * np.abs(G) * np.exp(1j * np.angle(G))
        total += np.exp(logw + 2 * z.real)
    Q = np.exp(-a2 - np.abs(G) ** 2) * total / np.pi
    return QGrid(grid.gamma_re, grid.gamma_im, Q, "paper", 1.0)


def uncertainty_ok(report: QuadratureReport, tol: float = 1e-9) -> bool:
    return report.uncertainty_product >= 1 / 16 - tol


def populations(state) -> np.ndarray:
    return fs.level_populations(state)
