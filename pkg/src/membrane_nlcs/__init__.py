"""Membrane-in-the-middle optomechanics: nonlinear coherent states, cat states and damping."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.1.0"
