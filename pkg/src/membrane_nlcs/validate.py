"""Self-check suite run by ``membrane-nlcs validate``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import damping as dmp
from . import fockspace as fs
from .errors import TruncationLeakError
from .evolution import evolve_closed_form, oracle_trajectory, product_state
from .nonlinearity import make_profile
from .states import make_deformed_ops, make_nlcs


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: measured {self.measured:.3e} (limit {self.limit:.1e}) {self.detail}".rstrip()


def _oracle_check(prof):
    D = np.ones(5) / np.sqrt(5)
    psi0 = product_state(D, [1.0], dim_f=5, dim_m=30)
    taus = np.linspace(0, 2 * np.pi, 9)
    ref = oracle_trajectory(psi0, taus, 0.01j, prof)
    worst = 1.0
    for t, r in zip(taus, ref):
        s = evolve_closed_form([1.0], D, t, 0.01j, prof, dim_m=30)
        worst = min(worst, fs.fidelity(s.vector, r.normalized().vector))
    return CheckResult("propagator vs exact integration (fidelity deficit)", 1 - worst <= 1e-3, 1 - worst, 1e-3)


def _eigen_check(prof, ops_prof):
    ops = make_deformed_ops(ops_prof, 60)
    worst = 0.0
    for lam in (0.3, 1.0 + 0.5j, -1.2j, 1.8):
        v = make_nlcs(lam, prof, 60).coeffs
        worst = max(worst, float(np.linalg.norm(ops.C @ v - lam * v)))
    return CheckResult("deformed-operator eigenvalue relation", worst <= 1e-8, worst, 1e-8)


def _algebra_check(prof):
    ops = make_deformed_ops(prof, 40)
    comm = ops.B @ ops.C_dag - ops.C_dag @ ops.B
    err = float(np.max(np.abs(comm[:-1, :-1] - np.eye(39))))
    return CheckResult("dual algebra [B, C^dag] = 1 on the interior", err <= 1e-10, err, 1e-10)


def _revival_check(prof):
    s = evolve_closed_form([1.0], [0.0, 0.6, 0.8], 2 * np.pi, 0.01j, prof)
    fid = fs.fidelity(fs.fock_ket(0, s.dims[1]), s.membrane_density())
    return CheckResult("membrane returns to vacuum after one period", 1 - fid <= 1e-12, 1 - fid, 1e-12)


def _damping_checks(prof):
    D = fs.coherent_ket(0.8, 4, normalize=True)
    dim_m = 12
    psi0 = product_state(D, [1.0], dim_f=4, dim_m=dim_m).vector
    rho_init = np.outer(psi0, psi0.conj())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        born = dmp.born_rho1(D, np.pi, 0.025, 0.01j, prof, dim_m)
    exact = dmp.lindblad_oracle(rho_init, np.pi, 0.025, 0.01j, prof, 4, dim_m)
    drift = abs(np.trace(exact).real - 1)
    dist = fs.trace_distance(born.rho, exact)
    return [
        CheckResult("master-equation trace drift", drift <= 1e-9, drift, 1e-9),
        CheckResult("first-order damping vs master equation (trace distance)", dist <= 1e-2, dist, 1e-2),
    ]


def _leak_check(reduced):
    dim_m = 6 if reduced else 60
    try:
        evolve_closed_form([1.0], [0, 0, 0, 0, 1.0], np.pi, 0.1j, make_profile((0.95, 0.19, 1e-4), 80), dim_m=dim_m)
    except TruncationLeakError as exc:
        return CheckResult("truncation guard", False, float(exc.leaked or 0.0), fs.LEAK_TOL, f"-- {exc}")
    return CheckResult("truncation guard", True, 0.0, fs.LEAK_TOL)


def run_checks(fault_injection: bool = False, reduced_dims: bool = False):
    prof = make_profile((0.95, 0.19, 1e-4), 80)
    ops_prof = prof
    if fault_injection:
        f = prof.f_table.copy()
        f[3] *= 1.01
        ops_prof = replace(prof, f_table=f)
    results = [
        _oracle_check(prof),
        _eigen_check(prof, ops_prof),
        _algebra_check(prof),
        _revival_check(prof),
        *_damping_checks(prof),
        _leak_check(reduced_dims),
    ]
    return results
