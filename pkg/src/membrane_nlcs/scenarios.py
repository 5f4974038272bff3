"""Time series and phase-space grids assembled from the library layers.

Each builder returns a :class:`Table`; the command line writes tables to CSV.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import damping as dmp
from . import fockspace as fs
from . import observables as ob
from . import states as st
from .evolution import evolve_closed_form
from .nonlinearity import check_nondegenerate, linearize_f, make_profile
from .params import DimensionlessParams


@dataclass
class Table:
    name: str
    columns: list
    data: np.ndarray
    meta: dict = field(default_factory=dict)
    sidecar: dict | None = None  # extra structured output (peak reports)


def tau_grid(tau_max: float = 2 * np.pi, steps: int = 200, include_ends: bool = False) -> np.ndarray:
    if steps < 1 or tau_max <= 0:
        raise ValueError("tau grid needs steps >= 1 and tau_max > 0")
    if include_ends:
        return np.linspace(0.0, tau_max, steps)
    return np.linspace(0.0, tau_max, steps + 2)[1:-1]


def pmap(func, items, jobs: int | None = None):
    """Ordered map; uses worker processes when ``jobs`` > 1."""
    items = list(items)
    jobs = jobs or 1
    if jobs <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(func, items))


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _profile(dp: DimensionlessParams, size=80):
    prof = make_profile(dp, size=size)
    check_nondegenerate(prof, size)
    return prof


def nonlinearity_table(dp: DimensionlessParams, nmax: int = 50, j: int = 1) -> Table:
    prof = make_profile(dp, size=nmax + 1, j=j)
    n = np.arange(nmax + 1)
    data = np.column_stack([n, prof.f_table, prof.g_table, prof.p_table[: nmax + 1]])
    meta = {"rc": dp.reflectivity, "eta": dp.eta, "theta": dp.theta, "j": j,
            "series_cutoff": prof.series_cutoff, "zero_levels": list(prof.zero_levels)}
    return Table("nonlinearity", ["n", "f", "g", "P"], data, meta)


def nlcs_membrane_states(dp: DimensionlessParams, taus, field_level: int = 1):
    """Reduced membrane density at each tau for field Fock |l>, membrane vacuum."""
    prof = _profile(dp)
    D = np.zeros(field_level + 1)
    D[field_level] = 1.0
    out = []
    for t in taus:
        s = evolve_closed_form([1.0], D, t, dp.beta, prof)
        out.append(fs.hermitize(s.membrane_density()))
    return out


def _squeeze_rows(rhos, taus):
    rows = []
    for r, t in zip(rhos, taus):
        q = ob.squeezing(fs.normalize_dm(r), t)
        rows.append((t, q.S1, q.S2, q.uncertainty_product))
    return np.array(rows)


def squeezing_series(dp: DimensionlessParams, taus, field_level: int = 1) -> Table:
    rhos = nlcs_membrane_states(dp, taus, field_level)
    meta = _meta(dp, field_level=field_level)
    return Table("squeezing", ["tau", "S1", "S2", "varX1_varX2"], _squeeze_rows(rhos, taus), meta)


def mandel_series(dp: DimensionlessParams, taus, field_level: int = 1) -> Table:
    rhos = nlcs_membrane_states(dp, taus, field_level)
    data = np.array([(t, ob.mandel(r)) for r, t in zip(rhos, taus)])
    return Table("mandel", ["tau", "M"], data, _meta(dp, field_level=field_level))


def evolve_diagnostics(dp: DimensionlessParams, taus, field_levels: int = 4, dim_m: int = 30,
                       oracle: bool = True) -> Table:
    """Pre-normalization norm of the closed form and its fidelity with the exact integration."""
    from .evolution import oracle_trajectory, product_state

    prof = _profile(dp)
    D = np.ones(field_levels + 1) / np.sqrt(field_levels + 1)
    psi0 = product_state(D, [1.0], dim_f=field_levels + 1, dim_m=dim_m)
    ref = oracle_trajectory(psi0, taus, dp.beta, prof) if oracle else None
    rows = []
    for i, t in enumerate(taus):
        s = evolve_closed_form([1.0], D, t, dp.beta, prof, dim_m=dim_m)
        fid = fs.fidelity(s.vector, ref[i].normalized().vector) if oracle else np.nan
        vac = fs.fidelity(fs.fock_ket(0, dim_m), s.membrane_density())
        rows.append((t, s.prenorm, fid, vac))
    return Table("evolve", ["tau", "prenorm", "oracle_fidelity", "vacuum_fidelity"], np.array(rows),
                 _meta(dp, field_levels=field_levels, dim_m=dim_m))


def _grid_table(name, grid: ob.QGrid, meta, rel_threshold=0.1):
    rep = ob.count_q_peaks(grid, rel_threshold)
    data = np.array(list(grid.rows()))
    sidecar = {
        "count": rep.count,
        "peaks": [{"gamma_re": x, "gamma_im": y, "height": h} for x, y, h in rep.peaks],
        "separation": rep.separation,
        "rel_threshold": rel_threshold,
        "riemann_sum_raw": grid.riemann_sum(),
    }
    return Table(name, ["gamma_re", "gamma_im", "Q"], data, meta, sidecar)


def superposition_q(dp: DimensionlessParams, alpha2: float = 4.0, tau: float = 2.9, weights: str = "printed",
                    points: int = 201) -> Table:
    prof = _profile(dp, size=120)
    rho = st.superposition_density(np.sqrt(alpha2), tau, dp.beta, prof, weights=weights)
    grid = ob.husimi_q(rho, points=points)
    return _grid_table("qfunc", grid, _meta(dp, alpha2=alpha2, tau=tau, weights=weights))


def cat_phases(dp: DimensionlessParams, xi: float):
    """Linear phase accompanying a quadratic phase ``xi`` for the given parameters."""
    lin = linearize_f(dp)
    return 2 * np.pi * xi * lin.delta_coef / lin.gamma_coef


def cat_state(dp: DimensionlessParams, zeta, xi, phi=None):
    prof = _profile(dp, size=120)
    phi = cat_phases(dp, xi) if phi is None else phi
    return st.make_cat(zeta, xi, phi, prof), prof


def cat_q(dp: DimensionlessParams, zeta, xi, phi=None, points: int = 201) -> Table:
    cat, _ = cat_state(dp, zeta, xi, phi)
    grid = ob.husimi_q(cat.coeffs, points=points)
    return _grid_table("qfunc", grid, _meta(dp, zeta=zeta, xi=xi, phi=cat.phi))


def cat_table(dp: DimensionlessParams, zeta, xi, phi=None) -> Table:
    cat, _ = cat_state(dp, zeta, xi, phi)
    k = np.arange(cat.dim)
    data = np.column_stack([k, cat.coeffs.real, cat.coeffs.imag, np.abs(cat.coeffs) ** 2])
    meta = _meta(dp, zeta=zeta, xi=xi, phi=cat.phi, base_norm=cat.norm_const)
    return Table("catstate", ["k", "re", "im", "prob"], data, meta)


def _damped_point(args):
    D, t, kappa, beta, prof, dim_m, C, kerr_g, mode = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        res = dmp.born_rho1(D, t, kappa, beta, prof, dim_m, C=C, mode=mode, kerr_g=kerr_g)
    return fs.hermitize(res.membrane_density()), res.min_eig


def damped_membrane_states(dp: DimensionlessParams, taus, kappa: float, field_level: int = 1,
                           dim_m: int = 14, jobs: int | None = None, mode: str = "born"):
    prof = _profile(dp)
    D = np.zeros(field_level + 1)
    D[field_level] = 1.0
    args = [(D, t, kappa, dp.beta, prof, dim_m, None, None, mode) for t in taus]
    return pmap(_damped_point, args, jobs)


def damped_series(dp: DimensionlessParams, taus, kappa: float, scenario: str = "mandel",
                  field_level: int = 1, dim_m: int = 14, jobs: int | None = None) -> Table:
    res = damped_membrane_states(dp, taus, kappa, field_level, dim_m, jobs)
    rows = []
    for (r, mineig), t in zip(res, taus):
        r = fs.normalize_dm(r)
        if scenario == "mandel":
            rows.append((t, ob.mandel(r), kappa, mineig))
        elif scenario == "squeezing":
            q = ob.squeezing(r, t)
            rows.append((t, q.S1, q.S2, kappa, mineig))
        else:
            raise ValueError(f"unknown damped scenario {scenario!r}")
    cols = ["tau", "M", "kappa", "min_eig"] if scenario == "mandel" else ["tau", "S1", "S2", "kappa", "min_eig"]
    return Table(f"damped_{scenario}", cols, np.array(rows),
                 _meta(dp, kappa=kappa, field_level=field_level, dim_m=dim_m))


def damped_cat_density(dp: DimensionlessParams, zeta: float, xi: float, kappa: float, field_level: int = 6,
                       dim_m: int = 30):
    """Membrane density at tau = 2 pi for a cat prepared by field Fock |l> and an NLCS membrane.

    |beta| is chosen so that l^2 |beta|^2 Gamma = xi, and the Kerr factor uses
    the quadratic approximation of g so the undamped state is exactly the cat.
    """
    lin = linearize_f(dp)
    bm = float(np.sqrt(xi / (field_level**2 * lin.gamma_coef)))
    prof = _profile(dp)
    kerr_g = lin.g(np.arange(prof.size))
    C = st.make_nlcs(zeta, prof, dim_m).coeffs
    D = np.zeros(field_level + 1)
    D[field_level] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        res = dmp.born_rho1(D, 2 * np.pi, kappa, 1j * bm, prof, dim_m, C=C, kerr_g=kerr_g)
    return fs.hermitize(res.membrane_density()), res, bm


def damped_cat_q(dp: DimensionlessParams, zeta, xi, kappa, field_level: int = 6, dim_m: int = 30,
                 points: int = 201) -> Table:
    rho, res, bm = damped_cat_density(dp, zeta, xi, kappa, field_level, dim_m)
    grid = ob.husimi_q(fs.normalize_dm(rho), points=points)
    return _grid_table("damped_qfunc", grid,
                       _meta(dp, zeta=zeta, xi=xi, kappa=kappa, field_level=field_level, beta_mag_used=bm,
                             min_eig=res.min_eig))


def _meta(dp: DimensionlessParams, **extra):
    meta = {"rc": dp.reflectivity, "eta": dp.eta, "theta": dp.theta, "beta_mag": dp.beta_mag}
    if dp.chi_mag is not None:
        meta["chi_mag"] = dp.chi_mag
    meta.update(extra)
    return meta
