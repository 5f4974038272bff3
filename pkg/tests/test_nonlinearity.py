import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, special

from membrane_nlcs import nonlinearity as nl
from membrane_nlcs.errors import ParameterDomainError, SeriesDivergenceError, SingularityError
from membrane_nlcs.params import DimensionlessParams


def fourier_weight(r, d):
    """(2/pi) int_0^pi arcsin(r cos phi) cos(d phi) dphi, by adaptive oscillatory quadrature."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda p: math.asin(r * math.cos(p)), 0, math.pi, weight="cos", wvar=d,
                                epsabs=1e-15, epsrel=1e-13, limit=400)
    return 2 * val / math.pi


def f_reference(j, nmax, r, eta, theta, dcount):
    """f_j(n) from quadrature weights and scipy's generalized Laguerre polynomials."""
    out = np.zeros(nmax + 1)
    for i in range(dcount):
        d = 2 * i + 1
        w = fourier_weight(r, d)
        x = (eta * theta * d) ** 2
        for n in range(nmax + 1):
            ratio = math.exp(special.gammaln(n + 1) - special.gammaln(n + j + 1))
            out[n] += w * math.exp(-x / 2) * d**j * ratio * special.eval_genlaguerre(n, j, x)
    return out


def brute_weights(r, m_max):
    """Exact rational double sum over odd m <= m_max, converted to float at the end."""
    rf = Fraction(r).limit_denominator(10**6)
    w = {}
    for m in range(1, m_max + 1, 2):
        l = (m - 1) // 2
        a = Fraction(math.comb(2 * l, l), 4**l)
        for k in range(l + 1):
            d = m - 2 * k
            w[d] = w.get(d, 0) + 2 * a * rf**m / m * Fraction(math.comb(m, k), 2**m)
    return {d: float(v) for d, v in w.items()}


@pytest.mark.parametrize("n, j, x", [(0, 1, 0.3), (5, 1, 2.0), (12, 2, 0.01), (40, 1, 7.5), (7, 0.5, 3.3)])
def test_laguerre_matches_scipy(n, j, x):
    assert nl.laguerre_assoc(n, j, x) == pytest.approx(special.eval_genlaguerre(n, j, x), rel=1e-12, abs=1e-12)


def test_laguerre_direct_series():
    # L^j_n(x) = sum_i (-1)^i C(n+j, n-i) x^i / i!
    n, j, x = 9, 1, 1.7
    direct = sum((-1) ** i * math.comb(n + j, n - i) * x**i / math.factorial(i) for i in range(n + 1))
    assert nl.laguerre_assoc(n, j, x) == pytest.approx(direct, rel=1e-13)


def test_laguerre_vectorized():
    xs = np.linspace(0, 5, 7)
    tab = nl.laguerre_table(6, 1, xs)
    assert tab.shape == (7, 7)
    assert np.allclose(tab[6], special.eval_genlaguerre(6, 1, xs))
    with pytest.raises(ParameterDomainError):
        nl.laguerre_table(-1, 1, 0.0)


@pytest.mark.parametrize("r", [0.3, 0.9])
def test_series_weights_are_fourier_coefficients(r):
    d, w, _ = nl.series_weights(r)
    for i in range(8):
        assert w[i] == pytest.approx(fourier_weight(r, int(d[i])), abs=1e-14)


def test_series_weights_exact_rational():
    r = 0.5
    exact = brute_weights(r, 61)
    d, w, _ = nl.series_weights(r)
    for i in range(6):
        assert w[i] == pytest.approx(exact[int(d[i])], rel=1e-13)


@pytest.mark.parametrize("r, eta, theta", [(0.9, 0.19, 1e-4), (0.95, 0.8, 1e-4), (0.6, 3.0, 0.05)])
def test_f_against_quadrature_oracle(r, eta, theta):
    ours, _ = nl.f_values(1, 20, (r, eta, theta))
    ref = f_reference(1, 20, r, eta, theta, dcount=220)
    assert np.allclose(ours, ref, rtol=1e-11, atol=1e-13)


def test_f_higher_order_j():
    ours, _ = nl.f_values(2, 8, (0.7, 2.0, 0.05))
    ref = f_reference(2, 8, 0.7, 2.0, 0.05, dcount=120)
    assert np.allclose(ours, ref, rtol=1e-11)


@pytest.mark.parametrize("r", [0.5, 0.9, 0.98])
def test_f_small_argument_limit(r):
    # as eta*theta -> 0, f_1(n) -> sum_d d W_d = (2 r / pi) K(r^2)
    expected = 2 * r / math.pi * special.ellipk(r * r)
    f, _ = nl.f_values(1, 10, (r, 1e-5, 1e-4))
    assert np.allclose(f, expected, rtol=1e-11)


def test_f_constant_for_tiny_eta():
    f, _ = nl.f_values(1, 50, DimensionlessParams(eta=1e-5, reflectivity=0.9))
    assert np.ptp(f) < 1e-10


def test_f_zero_reflectivity():
    f, _ = nl.f_values(1, 5, (0.0, 0.2, 1e-4))
    assert np.all(f == 0)


@pytest.mark.parametrize("args, exc", [
    ((1.0, 0.2, 1e-4), SeriesDivergenceError),
    ((-0.1, 0.2, 1e-4), ParameterDomainError),
    ((0.9, 0.0, 1e-4), ParameterDomainError),
])
def test_f_domain(args, exc):
    with pytest.raises(exc):
        nl.f_values(1, 3, args)


def test_explicit_m_max_binding():
    with pytest.raises(SeriesDivergenceError):
        nl.f_values(1, 3, (0.99, 0.2, 1e-4), m_max=101)


def test_auto_cutoff_near_unit_reflectivity():
    _, m_used = nl.f_values(1, 3, (0.99, 0.8, 1e-4))
    assert m_used > 1001


def test_g_and_p_tables():
    f = np.array([1.5, 1.2, 0.7, 0.3])
    assert np.allclose(nl.g_from_f(f), [1.5**2, 2 * 1.2**2 - 1.5**2, 3 * 0.7**2 - 2 * 1.2**2, 4 * 0.3**2 - 3 * 0.7**2])
    assert np.allclose(nl.p_from_f(f), [1, 1.5, 1.8, 1.26, 0.378])


def test_profile_tables_and_constants():
    prof = nl.make_profile((0.95, 0.19, 1e-4), 30)
    assert prof.size == 30 and prof.params == (0.95, 0.19, 1e-4)
    assert nl.g_of_n(prof, 4) == pytest.approx(5 * prof.f(4) ** 2 - 4 * prof.f(3) ** 2)
    assert np.allclose(prof.F_table()[1:], np.arange(1, 30) * prof.f_table[:-1] ** 2)
    with pytest.raises(ParameterDomainError):
        nl.g_of_n(prof, 30)
    with pytest.raises(ParameterDomainError):
        prof.require(31)
    assert not prof.f_table.flags.writeable


def test_deformed_lowering_convention():
    prof = nl.profile_from_f([2.0, 3.0, 5.0])
    B = nl.deformed_lowering(prof, 3)
    # B|2> = f(1) sqrt(2) |1>
    assert B[1, 2] == pytest.approx(3.0 * math.sqrt(2))
    comm = B @ B.conj().T - B.conj().T @ B
    assert np.allclose(np.diag(comm)[:2], prof.g_table[:2])


def test_zero_levels_and_singularity():
    prof = nl.profile_from_f([1.0, 0.0, 0.5])
    assert prof.zero_levels == (1,)
    with pytest.raises(SingularityError) as exc:
        nl.inverse_f_diag(prof, 3)
    assert exc.value.level == 1
    with pytest.raises(ParameterDomainError):
        nl.check_nondegenerate(nl.constant_profile(4, 0.0), 4)


def test_linearization_expansion():
    lin = nl.linearize_f((0.95, 0.8, 1e-4))
    k = np.arange(6)
    f_lin = lin.f(np.arange(-1, 6))
    g_direct = (k + 1) * f_lin[1:] ** 2 - k * f_lin[:-1] ** 2
    assert np.allclose(lin.g(k, mode="exact"), g_direct, rtol=1e-13)
    gam, dlt = nl.gamma_delta_paper(lin.eps, lin.sigma)
    assert (lin.gamma_coef, lin.delta_coef) == (gam, dlt)
    with pytest.raises(ParameterDomainError):
        lin.coefficients("other")


def test_linearization_tracks_f():
    prof = nl.make_profile((0.95, 0.8, 1e-4), 10)
    lin = nl.linearize_f((0.95, 0.8, 1e-4))
    assert lin.eps == pytest.approx(prof.f(0), rel=1e-12)
    assert lin.f(3) == pytest.approx(prof.f(3), rel=1e-8)
