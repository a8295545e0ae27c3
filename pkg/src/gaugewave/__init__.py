"""Pseudospectral evolutions of periodic gauge-field systems.

Submodules are imported lazily so the command line entry point can apply the
``GAUGEWAVE_THREADS`` cap before numpy first loads.
"""
import importlib

__version__ = "1.0.0"

_SUBMODULES = ("spectral", "snapshots", "gauge", "mkg", "mcsh", "evolve",
               "analysis", "config", "cli", "report")

__all__ = list(_SUBMODULES)


def __getattr__(name):
    if name in _SUBMODULES:
        module = importlib.import_module("." + name, __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
