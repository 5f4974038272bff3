import math

import pytest

from membrane_nlcs.errors import ParameterDomainError, UsageError
from membrane_nlcs.params import (C_LIGHT, HBAR, DimensionlessParams, PhysicalParams, apply_overrides,
                                  derive_dimensionless, params_from_config, read_config)

LAB = dict(cavity_length=0.07, membrane_mass=50e-15, optical_wavelength=532e-9,
           mechanical_freq=2 * math.pi * 1e5, reflectivity=0.9)


def test_lab_values_by_hand():
    dp = derive_dimensionless(PhysicalParams(**LAB))
    x0 = math.sqrt(HBAR / (2 * LAB["membrane_mass"] * LAB["mechanical_freq"]))
    w_l = 2 * math.pi * C_LIGHT / LAB["optical_wavelength"]
    assert dp.eta == pytest.approx(w_l * x0 / (LAB["cavity_length"] * LAB["mechanical_freq"]), rel=1e-12)
    assert dp.theta == pytest.approx(2 * 0.07 * LAB["mechanical_freq"] / C_LIGHT, rel=1e-12)
    # frozen reference values
    assert dp.theta == pytest.approx(2.934183e-4, rel=1e-6)
    assert dp.beta_mag == pytest.approx(3.2980647e-3, rel=1e-6)
    assert dp.chi_mag == pytest.approx(2072.2352, rel=1e-6)


def test_eta_and_beta_coincide_for_pump_at_cavity_wavelength():
    dp = derive_dimensionless(PhysicalParams(**LAB))
    assert dp.eta == pytest.approx(dp.beta_mag, rel=1e-12)


@pytest.mark.parametrize("field, factor, expected", [
    ("membrane_mass", 2.0, 2 ** -0.5),
    ("cavity_length", 2.0, 0.5),
    ("mechanical_freq", 4.0, 4 ** -1.5),
])
def test_eta_scaling(field, factor, expected):
    base = derive_dimensionless(PhysicalParams(**LAB))
    scaled = derive_dimensionless(PhysicalParams(**{**LAB, field: LAB[field] * factor}))
    assert scaled.eta / base.eta == pytest.approx(expected, rel=1e-12)


def test_theta_linear_in_length():
    a = derive_dimensionless(PhysicalParams(**LAB))
    b = derive_dimensionless(PhysicalParams(**{**LAB, "cavity_length": 0.0067}))
    assert b.theta / a.theta == pytest.approx(0.0067 / 0.07, rel=1e-12)


@pytest.mark.parametrize("bad", [
    {"cavity_length": 0.0},
    {"membrane_mass": -1.0},
    {"optical_wavelength": float("nan")},
    {"mechanical_freq": float("inf")},
    {"reflectivity": 1.0},
    {"reflectivity": -0.1},
    {"pump_freq": 0.0},
])
def test_physical_domain(bad):
    with pytest.raises(ParameterDomainError):
        PhysicalParams(**{**LAB, **bad})


@pytest.mark.parametrize("bad", [{"eta": 0.0}, {"theta": -1e-4}, {"beta_mag": -0.1}, {"reflectivity": 1.2}])
def test_dimensionless_domain(bad):
    kw = {"eta": 0.19, **bad}
    with pytest.raises(ParameterDomainError):
        DimensionlessParams(**kw)


def test_beta_is_imaginary():
    dp = DimensionlessParams(eta=0.2, beta_mag=0.03)
    assert dp.beta == 0.03j
    assert dp.eta_theta == pytest.approx(0.2 * 1e-4)


def test_overrides_drop_chi_when_beta_changes():
    dp = derive_dimensionless(PhysicalParams(**LAB))
    out = apply_overrides(dp, {"beta": 0.02, "eta": None})
    assert out.beta_mag == 0.02 and out.chi_mag is None and out.eta == dp.eta
    assert apply_overrides(dp, {}) is dp


def test_config_dimensionless(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[dimensionless]\neta = 0.24\nrc = 0.98\nbeta = 0.02\n")
    dp = params_from_config(read_config(cfg), {"theta": 2e-4})
    assert (dp.eta, dp.reflectivity, dp.beta_mag, dp.theta) == (0.24, 0.98, 0.02, 2e-4)


def test_config_physical(tmp_path):
    cfg = tmp_path / "lab.ini"
    cfg.write_text("[physical]\n" + "".join(f"{k} = {v!r}\n" for k, v in LAB.items()))
    dp = params_from_config(read_config(cfg))
    assert dp.theta == pytest.approx(2.934183e-4, rel=1e-6)


@pytest.mark.parametrize("text", [
    "[physical]\ncavity_length = 0.07\n[dimensionless]\neta = 0.2\n",
    "[other]\neta = 0.2\n",
    "[dimensionless]\ntheta = 1e-4\n",
    "[dimensionless]\neta = abc\n",
    "[dimensionless]\neta = 0.2\nbogus = 1\n",
    "[physical]\ncavity_length = 0.07\n",
    "not a config",
])
def test_config_errors(tmp_path, text):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    with pytest.raises(UsageError):
        params_from_config(read_config(cfg))


def test_missing_config_file(tmp_path):
    with pytest.raises(UsageError):
        read_config(tmp_path / "absent.ini")
