"""Frozen parameter bundles that regenerate each published panel as data tables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import scenarios as sc
from .params import PhysicalParams, derive_dimensionless, DimensionlessParams

PRESET_VERSION = "1"

# Lab values used for the squeezing panels; the short cavity is the alternative length.
MEMBRANE_MASS = 50e-15
WAVELENGTH = 532e-9
MECH_FREQ = 2 * np.pi * 1e5
LONG_CAVITY = 0.07
SHORT_CAVITY = 0.0067

# Coupling used where a panel fixes only (r_c, eta): large enough that the
# superposition components sit apart from the origin on the Q plane.
SUPERPOSITION_BETA = 0.5
CAT_ETA = 0.19
DAMPED_FIELD_LEVEL = 1
CAT_FIELD_LEVEL = 6


@dataclass(frozen=True)
class FigurePreset:
    id: str
    kind: str
    description: str
    curves: tuple = field(default=())  # tuple of dicts, one per line / panel member
    options: dict = field(default_factory=dict)


def lab_params(rc: float, eta: float, cavity_length: float = LONG_CAVITY) -> DimensionlessParams:
    """Lab-derived theta and |beta| with the Lamb-Dicke parameter pinned to ``eta``."""
    dp = derive_dimensionless(PhysicalParams(cavity_length, MEMBRANE_MASS, WAVELENGTH, MECH_FREQ, rc))
    return dp.with_(eta=eta)


def _squeeze(pid, rc, etas, length):
    return FigurePreset(
        pid, "squeezing",
        f"S2 vs tau, r_c={rc}, eta in {etas}, L={length} m, m=50 pg, lambda=532 nm, omega_m/2pi=1e5 Hz",
        tuple({"rc": rc, "eta": e, "cavity_length": length} for e in etas),
    )


_PRESETS = [
    FigurePreset("fig2a", "nonlinearity", "f(n) for r_c=0.99, eta=0.8, theta=1e-4",
                 ({"rc": 0.99, "eta": 0.8, "theta": 1e-4},), {"nmax": 50}),
    FigurePreset("fig2b", "nonlinearity", "f(n) for r_c=0.9, eta=1e-5, theta=1e-4",
                 ({"rc": 0.9, "eta": 1e-5, "theta": 1e-4},), {"nmax": 50}),
    _squeeze("fig3a", 0.9, (0.14, 0.19, 0.24), LONG_CAVITY),
    _squeeze("fig3b", 0.98, (0.1, 0.14, 0.18), LONG_CAVITY),
    _squeeze("fig3a-short", 0.9, (0.14, 0.19, 0.24), SHORT_CAVITY),
    _squeeze("fig3b-short", 0.98, (0.1, 0.14, 0.18), SHORT_CAVITY),
    FigurePreset("fig4a", "mandel", "M vs tau, r_c=0.9, eta in (0.25, 0.3)",
                 ({"rc": 0.9, "eta": 0.25}, {"rc": 0.9, "eta": 0.3})),
    FigurePreset("fig4b", "mandel", "M vs tau, r_c=0.98, eta in (0.25, 0.3)",
                 ({"rc": 0.98, "eta": 0.25}, {"rc": 0.98, "eta": 0.3})),
    FigurePreset("fig5a", "superposition", "Q at tau=2.9, |alpha|^2=4, r_c=0.95, eta=0.8",
                 ({"rc": 0.95, "eta": 0.8, "beta": SUPERPOSITION_BETA},), {"alpha2": 4.0, "tau": 2.9}),
    FigurePreset("fig5b", "superposition", "Q at tau=2.9, |alpha|^2=4, r_c=0.998, eta=0.82",
                 ({"rc": 0.998, "eta": 0.82, "beta": SUPERPOSITION_BETA},), {"alpha2": 4.0, "tau": 2.9}),
    FigurePreset("fig5c", "superposition", "Q at tau=2.9, |alpha|^2=4, r_c=0.998, eta=0.98",
                 ({"rc": 0.998, "eta": 0.98, "beta": SUPERPOSITION_BETA},), {"alpha2": 4.0, "tau": 2.9}),
    FigurePreset("fig6a", "cat", "cat Q at tau=2pi, r_c=0.95, xi=1.1, zeta=0.25",
                 ({"rc": 0.95, "eta": CAT_ETA, "xi": 1.1, "zeta": 0.25},)),
    FigurePreset("fig6b", "cat", "cat Q at tau=2pi, r_c=0.95, xi=1.8, zeta=0.25",
                 ({"rc": 0.95, "eta": CAT_ETA, "xi": 1.8, "zeta": 0.25},)),
    FigurePreset("fig6c", "cat", "cat Q at tau=2pi, r_c=0.95, xi=1.8, zeta=sqrt(1/6)",
                 ({"rc": 0.95, "eta": CAT_ETA, "xi": 1.8, "zeta": float(np.sqrt(1 / 6))},)),
    FigurePreset("fig7a", "cat", "cat Q at tau=2pi, r_c=0.8, xi=1/sqrt(8), zeta=1.8",
                 ({"rc": 0.8, "eta": CAT_ETA, "xi": float(1 / np.sqrt(8)), "zeta": 1.8},)),
    FigurePreset("fig7b", "cat", "cat Q at tau=2pi, r_c=0.87, xi=1/sqrt(8), zeta=1.8",
                 ({"rc": 0.87, "eta": CAT_ETA, "xi": float(1 / np.sqrt(8)), "zeta": 1.8},)),
    FigurePreset("fig7c", "cat", "cat Q at tau=2pi, r_c=0.99, xi=1/sqrt(8), zeta=1.8",
                 ({"rc": 0.99, "eta": CAT_ETA, "xi": float(1 / np.sqrt(8)), "zeta": 1.8},)),
    FigurePreset("fig8a", "damped_mandel", "damped M vs tau, eta=0.19; (r_c, kappa) = (0.93, 0), (0.93, 1), (0.95, 1)",
                 ({"rc": 0.93, "eta": 0.19, "kappa": 0.0}, {"rc": 0.93, "eta": 0.19, "kappa": 1.0},
                  {"rc": 0.95, "eta": 0.19, "kappa": 1.0})),
    FigurePreset("fig8b", "damped_mandel", "damped M vs tau, r_c=0.95; (eta, kappa) = (0.19, 0), (0.19, 1), (0.16, 1)",
                 ({"rc": 0.95, "eta": 0.19, "kappa": 0.0}, {"rc": 0.95, "eta": 0.19, "kappa": 1.0},
                  {"rc": 0.95, "eta": 0.16, "kappa": 1.0})),
    FigurePreset("fig9a", "damped_squeezing", "damped S2 vs tau, r_c=0.95; (eta, kappa) = (0.19, 0), (0.19, 1), (0.16, 1)",
                 ({"rc": 0.95, "eta": 0.19, "kappa": 0.0}, {"rc": 0.95, "eta": 0.19, "kappa": 1.0},
                  {"rc": 0.95, "eta": 0.16, "kappa": 1.0})),
    FigurePreset("fig9b", "damped_squeezing", "damped S2 vs tau, eta=0.16; (r_c, kappa) = (0.96, 0), (0.96, 1), (0.95, 1)",
                 ({"rc": 0.96, "eta": 0.16, "kappa": 0.0}, {"rc": 0.96, "eta": 0.16, "kappa": 1.0},
                  {"rc": 0.95, "eta": 0.16, "kappa": 1.0})),
    FigurePreset("fig10a", "damped_cat", "damped cat Q at tau=2pi, r_c=0.95, xi=1.8, zeta=0.25, kappa=0.01",
                 ({"rc": 0.95, "eta": CAT_ETA, "xi": 1.8, "zeta": 0.25, "kappa": 0.01},)),
    FigurePreset("fig10b", "damped_cat", "damped cat Q at tau=2pi, r_c=0.95, xi=1.8, zeta=0.25, kappa=0.4",
                 ({"rc": 0.95, "eta": CAT_ETA, "xi": 1.8, "zeta": 0.25, "kappa": 0.4},)),
]

PRESETS = {p.id: p for p in _PRESETS}


def get_preset(pid: str) -> FigurePreset:
    try:
        return PRESETS[pid]
    except KeyError:
        raise KeyError(f"unknown preset {pid!r}; choose from {', '.join(PRESETS)}") from None


def curve_params(curve: dict) -> DimensionlessParams:
    if "cavity_length" in curve:
        return lab_params(curve["rc"], curve["eta"], curve["cavity_length"])
    kw = {"eta": curve["eta"], "reflectivity": curve["rc"]}
    if "theta" in curve:
        kw["theta"] = curve["theta"]
    if "beta" in curve:
        kw["beta_mag"] = curve["beta"]
    return DimensionlessParams(**kw)


def run_preset(pid: str, tau_steps: int = 200, jobs: int | None = None, points: int = 201):
    """Compute every table of a preset. Returns a list of Table objects."""
    pre = get_preset(pid)
    tables = []
    taus = sc.tau_grid(2 * np.pi, tau_steps)
    for i, curve in enumerate(pre.curves):
        dp = curve_params(curve)
        if pre.kind == "nonlinearity":
            t = sc.nonlinearity_table(dp, pre.options.get("nmax", 50))
        elif pre.kind == "squeezing":
            t = sc.squeezing_series(dp, taus)
        elif pre.kind == "mandel":
            t = sc.mandel_series(dp, taus)
        elif pre.kind == "superposition":
            t = sc.superposition_q(dp, pre.options["alpha2"], pre.options["tau"], points=points)
        elif pre.kind == "cat":
            t = sc.cat_q(dp, curve["zeta"], curve["xi"], points=points)
        elif pre.kind in ("damped_mandel", "damped_squeezing"):
            scen = pre.kind.split("_", 1)[1]
            t = sc.damped_series(dp, taus, curve["kappa"], scen, DAMPED_FIELD_LEVEL, jobs=jobs)
        elif pre.kind == "damped_cat":
            t = sc.damped_cat_q(dp, curve["zeta"], curve["xi"], curve["kappa"], CAT_FIELD_LEVEL, points=points)
        else:  # pragma: no cover
            raise ValueError(pre.kind)
        t.name = f"{pid}_{i}" if len(pre.curves) > 1 else pid
        t.meta = {"preset": pid, "preset_version": PRESET_VERSION, "description": pre.description, **t.meta}
        tables.append(t)
    return tables
