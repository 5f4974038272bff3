"""Laboratory parameters and the dimensionless set that drives the simulation."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace

from .errors import ParameterDomainError, UsageError

HBAR = 1.0545718e-34  # J s
C_LIGHT = 2.99792458e8  # m / s

# Values used when a sweep fixes only part of the dimensionless set.
DEFAULT_THETA = 1e-4
DEFAULT_BETA_MAG = 0.01


@dataclass(frozen=True)
class PhysicalParams:
    """SI lab quantities of a membrane-in-the-middle cavity.

    ``pump_freq`` defaults to ``2 pi c / optical_wavelength``.
    """

    cavity_length: float
    membrane_mass: float
    optical_wavelength: float
    mechanical_freq: float
    reflectivity: float
    pump_freq: float | None = None

    def __post_init__(self):
        for name in ("cavity_length", "membrane_mass", "optical_wavelength", "mechanical_freq"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterDomainError(f"{name} must be finite and > 0, got {value!r}")
        if not (0.0 <= self.reflectivity < 1.0):
            raise ParameterDomainError(f"reflectivity must lie in [0, 1), got {self.reflectivity!r}")
        if self.pump_freq is None:
            object.__setattr__(self, "pump_freq", 2 * math.pi * C_LIGHT / self.optical_wavelength)
        elif not (math.isfinite(self.pump_freq) and self.pump_freq > 0):
            raise ParameterDomainError(f"pump_freq must be finite and > 0, got {self.pump_freq!r}")

    @property
    def zero_point_length(self) -> float:
        """sqrt(hbar / (2 m omega_m)) in meters."""
        return math.sqrt(HBAR / (2 * self.membrane_mass * self.mechanical_freq))


@dataclass(frozen=True)
class DimensionlessParams:
    """Dimensionless parameter set.

    ``chi_mag`` (rad/s) is only known when the set was derived from lab values;
    synthetic sweeps leave it as ``None``.
    """

    eta: float
    theta: float = DEFAULT_THETA
    beta_mag: float = DEFAULT_BETA_MAG
    reflectivity: float = 0.9
    chi_mag: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ParameterDomainError(f"eta must be finite and > 0, got {self.eta!r}")
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise ParameterDomainError(f"theta must be finite and > 0, got {self.theta!r}")
        if not (math.isfinite(self.beta_mag) and self.beta_mag >= 0):
            raise ParameterDomainError(f"beta_mag must be finite and >= 0, got {self.beta_mag!r}")
        if not (0.0 <= self.reflectivity < 1.0):
            raise ParameterDomainError(f"reflectivity must lie in [0, 1), got {self.reflectivity!r}")

    @property
    def beta(self) -> complex:
        # chi carries a factor i, so the physical coupling is purely imaginary
        return 1j * self.beta_mag

    @property
    def eta_theta(self) -> float:
        return self.eta * self.theta

    def with_(self, **changes) -> "DimensionlessParams":
        return replace(self, **changes)


def derive_dimensionless(p: PhysicalParams) -> DimensionlessParams:
    """Map lab quantities onto (eta, theta, |chi|, |beta|)."""
    x0 = p.zero_point_length
    eta = p.pump_freq / (p.cavity_length * p.mechanical_freq) * x0
    theta = 2 * p.cavity_length * p.mechanical_freq / C_LIGHT
    chi_mag = 2 * math.pi * C_LIGHT / (p.cavity_length * p.optical_wavelength) * x0
    return DimensionlessParams(
        eta=eta,
        theta=theta,
        beta_mag=chi_mag / p.mechanical_freq,
        reflectivity=p.reflectivity,
        chi_mag=chi_mag,
    )


_PHYSICAL_KEYS = {
    "cavity_length": "cavity_length",
    "membrane_mass": "membrane_mass",
    "optical_wavelength": "optical_wavelength",
    "mechanical_freq": "mechanical_freq",
    "pump_freq": "pump_freq",
    "reflectivity": "reflectivity",
    "rc": "reflectivity",
    "r_c": "reflectivity",
}

_DIMENSIONLESS_KEYS = {
    "eta": "eta",
    "theta": "theta",
    "beta": "beta_mag",
    "beta_mag": "beta_mag",
    "reflectivity": "reflectivity",
    "rc": "reflectivity",
    "r_c": "reflectivity",
}


def _read_section(section, keymap, where):
    out = {}
    for key, raw in section.items():
        name = keymap.get(key.strip().lower())
        if name is None:
            raise UsageError(f"unknown key {key!r} in [{where}]")
        try:
            out[name] = float(raw)
        except ValueError:
            raise UsageError(f"[{where}] {key} is not a number: {raw!r}") from None
    return out


def read_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from exc
    return parser


def params_from_config(parser: configparser.ConfigParser, overrides=None) -> DimensionlessParams:
    """Build a parameter set from exactly one of ``[physical]`` / ``[dimensionless]``.

    ``overrides`` maps ``eta``, ``theta``, ``rc``, ``beta`` to values that
    replace whatever the file produced; ``None`` entries are ignored.
    """
    present = [s for s in ("physical", "dimensionless") if parser.has_section(s)]
    if len(present) != 1:
        raise UsageError("config needs exactly one of [physical] or [dimensionless]")
    if present[0] == "physical":
        values = _read_section(parser["physical"], _PHYSICAL_KEYS, "physical")
        try:
            dp = derive_dimensionless(PhysicalParams(**values))
        except TypeError as exc:
            raise UsageError(f"[physical] incomplete: {exc}") from None
    else:
        values = _read_section(parser["dimensionless"], _DIMENSIONLESS_KEYS, "dimensionless")
        if "eta" not in values:
            raise UsageError("[dimensionless] requires eta")
        dp = DimensionlessParams(**values)
    return apply_overrides(dp, overrides)


def apply_overrides(dp: DimensionlessParams, overrides=None) -> DimensionlessParams:
    if not overrides:
        return dp
    names = {"eta": "eta", "theta": "theta", "rc": "reflectivity", "beta": "beta_mag"}
    changes = {names[k]: float(v) for k, v in overrides.items() if v is not None and k in names}
    if "beta_mag" in changes:
        changes["chi_mag"] = None
    return replace(dp, **changes) if changes else dp
