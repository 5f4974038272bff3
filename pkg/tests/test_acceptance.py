"""Acceptance gate: one verdict line per criterion.

Run ``pytest tests/test_acceptance.py -v``; the verdicts are repeated in the
"acceptance criteria" section of the terminal summary. Tolerances are the
pinned values of the build contract and are not tuned to the results.
"""

import time
import warnings
from functools import lru_cache

import numpy as np
import pytest

from membrane_nlcs import damping as dmp
from membrane_nlcs import fockspace as fs
from membrane_nlcs import observables as ob
from membrane_nlcs import scenarios as sc
from membrane_nlcs import states as st
from membrane_nlcs.evolution import (apply_propagator, evolve_closed_form, oracle_evolve, oracle_trajectory,
                                     product_state)
from membrane_nlcs.nonlinearity import f_values, make_profile
from membrane_nlcs.params import DimensionlessParams
from membrane_nlcs.presets import CAT_ETA, LONG_CAVITY, curve_params, get_preset, lab_params

BASE = (0.95, 0.19, 1e-4)
TAU_SAMPLES = 200


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@lru_cache(maxsize=None)
def _profile(rc, eta, theta=1e-4, size=120):
    return make_profile((rc, eta, theta), size)


def _uniform_field(levels=5):
    return np.ones(levels) / np.sqrt(levels)


# -- states shared with the uncertainty criterion ----------------------------

@lru_cache(maxsize=None)
def _revival_state():
    s = evolve_closed_form([1.0], _uniform_field(), 2 * np.pi, 0.01j, _profile(*BASE), dim_m=30)
    return fs.hermitize(s.membrane_density())


@lru_cache(maxsize=None)
def _squeezing_states(rc, eta):
    dp = lab_params(rc, eta, LONG_CAVITY)
    taus = sc.tau_grid(2 * np.pi, TAU_SAMPLES)
    return taus, sc.nlcs_membrane_states(dp, taus)


@lru_cache(maxsize=None)
def _mandel_states(rc, eta):
    dp = DimensionlessParams(eta=eta, reflectivity=rc)
    taus = sc.tau_grid(2 * np.pi, TAU_SAMPLES)
    return taus, sc.nlcs_membrane_states(dp, taus)


@lru_cache(maxsize=None)
def _superposition(pid):
    pre = get_preset(pid)
    dp = curve_params(pre.curves[0])
    rho = st.superposition_density(np.sqrt(pre.options["alpha2"]), pre.options["tau"], dp.beta,
                                   sc._profile(dp, size=120))
    return rho, ob.count_q_peaks(ob.husimi_q(rho))


@lru_cache(maxsize=None)
def _cat(pid):
    curve = get_preset(pid).curves[0]
    cat, _ = sc.cat_state(curve_params(curve), curve["zeta"], curve["xi"])
    return cat.coeffs, ob.count_q_peaks(ob.husimi_q(cat.coeffs))


@lru_cache(maxsize=None)
def _identity_pair(zeta):
    prof = _profile(0.95, CAT_ETA)
    cat = st.make_cat(zeta, 0.25, 0.0, prof)
    rhs = st.two_component_cat(zeta, prof, dim=cat.dim)
    return cat.coeffs, rhs


# -- criteria ------------------------------------------------------------------

def test_propagator_matches_exact_integration(criterion):
    t0 = time.perf_counter()
    prof = _profile(*BASE)
    psi0 = product_state(_uniform_field(), [1.0], dim_f=5, dim_m=30)
    taus = np.linspace(0, 2 * np.pi, 50)
    ref = oracle_trajectory(psi0, taus, 0.01j, prof)
    fids = [fs.fidelity(evolve_closed_form([1.0], _uniform_field(), t, 0.01j, prof, dim_m=30).vector,
                        r.normalized().vector) for t, r in zip(taus, ref)]
    elapsed = time.perf_counter() - t0
    worst = min(fids)
    criterion(1, "propagator vs RK4 fidelity", worst >= 0.999 and elapsed < 30,
              f"min fidelity {worst:.12f} (>= 0.999) over 50 points, {elapsed:.1f} s (< 30 s)")


def test_truncation_error_scales_as_beta_cubed(criterion):
    prof = _profile(*BASE)
    psi0 = product_state(_uniform_field(), [1.0], dim_f=5, dim_m=30)
    betas = np.array([0.0125, 0.025, 0.05])
    devs = []
    for b in betas:
        exact = oracle_evolve(psi0, np.pi, 1j * b, prof, tol=1e-13)
        closed = apply_propagator(psi0, np.pi, 1j * b, prof)
        devs.append(np.linalg.norm(exact.amplitudes - closed.amplitudes * closed.prenorm))
    slope = _slope(betas, devs)
    criterion(2, "deviation-norm slope vs |beta|", abs(slope - 3.0) <= 0.3,
              f"slope {slope:.3f} (3.0 +/- 0.3), deviations {', '.join(f'{d:.2e}' for d in devs)}")


def test_nlcs_eigenvalue_relation(criterion, rng):
    worst, checked, skipped = 0.0, 0, 0
    for rc in (0.9, 0.98):
        for eta in (0.14, 0.25):
            prof = _profile(rc, eta)
            lams = 2 * np.sqrt(rng.uniform(0, 1, 20)) * np.exp(2j * np.pi * rng.uniform(0, 1, 20))
            for lam in lams:
                ket = st.make_nlcs(lam, prof)
                if any(z < ket.dim for z in prof.zero_levels):
                    skipped += 1
                    continue
                C = st.make_deformed_ops(prof, ket.dim).C
                worst = max(worst, float(np.linalg.norm(C @ ket.coeffs - lam * ket.coeffs)))
                checked += 1
    criterion(3, "deformed-operator eigenvalue relation", worst <= 1e-8 and checked == 80,
              f"max residual {worst:.2e} (<= 1e-8) over {checked} states, {skipped} skipped for f zeros")


def test_membrane_revival(criterion):
    prof = _profile(*BASE)
    vac = fs.fock_ket(0, 30)
    closed = fs.fidelity(vac, _revival_state())
    psi0 = product_state(_uniform_field(), [1.0], dim_f=5, dim_m=30)
    exact = oracle_evolve(psi0, 2 * np.pi, 0.01j, prof).normalized()
    oracle = fs.fidelity(vac, fs.hermitize(exact.membrane_density()))
    criterion(4, "vacuum revival at tau = 2 pi", closed >= 1 - 1e-12 and oracle >= 0.999,
              f"closed form 1-F = {1 - closed:.2e} (<= 1e-12), oracle F = {oracle:.12f} (>= 0.999)")


def _s2_series(rc, eta):
    taus, rhos = _squeezing_states(rc, eta)
    s2 = np.array([ob.squeezing(fs.normalize_dm(r), t).S2 for r, t in zip(rhos, taus)])
    return taus, s2


def _s2_at_pi(rc, eta):
    dp = lab_params(rc, eta, LONG_CAVITY)
    rho = sc.nlcs_membrane_states(dp, [np.pi])[0]
    return ob.squeezing(fs.normalize_dm(rho), np.pi).S2


def test_squeezing_structure(criterion):
    parts = {}
    spacing = 2 * np.pi / (TAU_SAMPLES + 1)
    minima_ok = True
    depths = {}
    for rc, eta in [(0.9, 0.14), (0.9, 0.19), (0.9, 0.24), (0.98, 0.1), (0.98, 0.14), (0.98, 0.18)]:
        taus, s2 = _s2_series(rc, eta)
        interior = np.nonzero((s2[1:-1] < s2[:-2]) & (s2[1:-1] < s2[2:]))[0] + 1
        minima_ok &= interior.size > 0 and bool(np.all(np.abs(taus[interior] - np.pi) <= spacing))
        depths[(rc, eta)] = s2.min()
    parts["minima at pi"] = minima_ok
    s_a, s_b, s_c = _s2_at_pi(0.9, 0.24), _s2_at_pi(0.98, 0.18), _s2_at_pi(0.9, 0.14)
    parts["S2(pi)<0 at (0.9,0.24),(0.98,0.18)"] = s_a < 0 and s_b < 0
    parts["S2(pi)>=0 at (0.9,0.14)"] = s_c >= 0
    parts["deeper with eta"] = (depths[(0.9, 0.24)] < depths[(0.9, 0.19)] < depths[(0.9, 0.14)]
                                and depths[(0.98, 0.18)] < depths[(0.98, 0.14)] < depths[(0.98, 0.1)])
    detail = "; ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in parts.items())
    criterion(5, "squeezing structure", all(parts.values()),
              f"{detail}; S2(pi) = {s_a:.2e}, {s_b:.2e}, {s_c:.2e}")


def test_mandel_sub_poissonian(criterion):
    fracs, mins = {}, {}
    for rc, eta in [(0.9, 0.25), (0.9, 0.3), (0.98, 0.3)]:
        _, rhos = _mandel_states(rc, eta)
        m = np.array([ob.mandel(r) for r in rhos])
        fracs[(rc, eta)] = float(np.mean(m < 0))
        mins[(rc, eta)] = float(m.min())
    frac_ok = fracs[(0.9, 0.25)] >= 0.6 and fracs[(0.9, 0.3)] >= 0.6
    enhance = mins[(0.98, 0.3)] < mins[(0.9, 0.3)]
    criterion(6, "Mandel parameter", frac_ok and enhance,
              f"negative fraction {fracs[(0.9, 0.25)]:.2f}, {fracs[(0.9, 0.3)]:.2f} (>= 0.6); "
              f"min M {mins[(0.98, 0.3)]:.3e} at r_c=0.98 vs {mins[(0.9, 0.3)]:.3e} at r_c=0.9")


def test_q_peak_counts_and_separations(criterion):
    _, a = _superposition("fig5a")
    _, b = _superposition("fig5b")
    seps = [_cat(pid)[1].separation for pid in ("fig7a", "fig7b", "fig7c")]
    parts = {
        "fig5a >= 2 peaks": a.count >= 2,
        "fig5b >= 2 peaks": b.count >= 2,
        "fig5 separation grows": b.separation > a.separation,
        "fig7 separation increasing": bool(np.all(np.diff(seps) > 0)),
    }
    detail = "; ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in parts.items())
    criterion(7, "Q-function peaks", all(parts.values()),
              f"{detail}; peaks {a.count}/{b.count}, separations {a.separation:.3f}/{b.separation:.3f}, "
              f"cat separations {', '.join(f'{s:.3f}' for s in seps)}")


def test_cat_identity(criterion):
    errs = []
    for zeta in (0.25, 1.8):
        cat, rhs = _identity_pair(zeta)
        errs.append(abs(1 - abs(np.vdot(rhs, cat))))
    criterion(8, "cat at xi = 1/4 equals the two-component superposition", max(errs) <= 1e-10,
              f"|1 - |overlap|| = {', '.join(f'{e:.1e}' for e in errs)} (<= 1e-10)")


def test_uncertainty_floor(criterion):
    products = []

    def add(state, tau):
        products.append(ob.squeezing(fs.normalize_dm(state) if np.ndim(state) == 2 else state, tau)
                        .uncertainty_product)

    add(_revival_state(), 2 * np.pi)
    for rc, eta in [(0.9, 0.14), (0.9, 0.24), (0.98, 0.18)]:
        taus, rhos = _squeezing_states(rc, eta)
        for r, t in zip(rhos, taus):
            add(r, t)
    for rc, eta in [(0.9, 0.25), (0.9, 0.3), (0.98, 0.3)]:
        taus, rhos = _mandel_states(rc, eta)
        for r, t in zip(rhos, taus):
            add(r, t)
    for pid in ("fig5a", "fig5b"):
        add(_superposition(pid)[0], 2.9)
    for pid in ("fig7a", "fig7b", "fig7c"):
        add(_cat(pid)[0], 2 * np.pi)
    for zeta in (0.25, 1.8):
        for v in _identity_pair(zeta):
            add(v, 2 * np.pi)
    low = min(products)
    criterion(9, "uncertainty product floor", low >= 1 / 16 - 1e-9,
              f"min varX1*varX2 = {low:.12f} (>= 1/16 - 1e-9) over {len(products)} states")


def test_damping_correction_order(criterion):
    t0 = time.perf_counter()
    prof = _profile(*BASE)
    dim_f, dim_m = 6, 30
    D = fs.coherent_ket(1.0, dim_f, normalize=True)
    psi0 = product_state(D, [1.0], dim_f=dim_f, dim_m=dim_m).vector
    rho_init = np.outer(psi0, psi0.conj())
    kappas = np.array([0.025, 0.05, 0.1])
    dists = []
    for k in kappas:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            born = dmp.born_rho1(D, np.pi, k, 0.01j, prof, dim_m)
        exact = dmp.lindblad_oracle(rho_init, np.pi, k, 0.01j, prof, dim_f, dim_m)
        dists.append(fs.trace_distance(born.rho, exact))
    elapsed = time.perf_counter() - t0
    slope = _slope(kappas, dists)
    criterion(10, "first-order damping vs master equation", abs(slope - 2.0) <= 0.3 and elapsed < 120,
              f"slope {slope:.3f} (2.0 +/- 0.3), distances {', '.join(f'{d:.2e}' for d in dists)}, "
              f"{elapsed:.1f} s (< 120 s)")


def _rising_then_falling(m):
    peak = int(np.argmax(m))
    return bool(m[0] > 0 and m[min(peak, 5)] >= m[0] and 0 < peak < m.size - 1 and m[peak:].min() < m[peak])


def test_damped_trends(criterion):
    dp = DimensionlessParams(eta=0.19, reflectivity=0.93)
    taus = sc.tau_grid(2 * np.pi, TAU_SAMPLES)
    damped_m = sc.damped_series(dp, taus, 1.0, "mandel").data[:, 1]
    s2_damped = sc.damped_series(dp, taus, 1.0, "squeezing").data[:, 2].min()
    s2_free = sc.damped_series(dp, taus, 0.0, "squeezing").data[:, 2].min()
    fig10 = get_preset("fig10a").curves[0]
    reports = {}
    for kappa in (0.01, 0.4):
        tab = sc.damped_cat_q(curve_params(fig10), fig10["zeta"], fig10["xi"], kappa)
        reports[kappa] = tab.sidecar
    h_lo = max(p["height"] for p in reports[0.01]["peaks"])
    h_hi = max(p["height"] for p in reports[0.4]["peaks"])
    parts = {
        "M rises then falls": _rising_then_falling(damped_m),
        "S2 minima shallower": s2_damped > s2_free,
        "cat peak heights drop": h_hi < h_lo,
        "cat separation drops": reports[0.4]["separation"] < reports[0.01]["separation"],
    }
    detail = "; ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in parts.items())
    criterion(11, "damped trends", all(parts.values()),
              f"{detail}; min S2 damped {s2_damped:.2e} vs free {s2_free:.2e}; peak height {h_lo:.4f} -> {h_hi:.4f}; "
              f"separation {reports[0.01]['separation']:.3f} -> {reports[0.4]['separation']:.3f}")


def test_nonlinearity_sanity(criterion):
    flat, _ = f_values(1, 50, (0.9, 1e-5, 1e-4))
    spread = float(flat.max() - flat.min())
    curved, _ = f_values(1, 50, (0.99, 0.8, 1e-4))
    rel = float((curved.max() - curved.min()) / np.abs(curved).mean())
    criterion(12, "f(n) flat and curved regimes", spread <= 1e-10 and rel > 0.01,
              f"spread {spread:.1e} at (0.9, 1e-5) (<= 1e-10); relative variation {rel:.2e} at (0.99, 0.8) (> 1e-2)")


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
