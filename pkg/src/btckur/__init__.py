"""Simulator and analytics for the kinetic uncertainty relation in the
driven collective-spin model (boundary time crystal).

Submodules are imported lazily so that the CLI can pin the BLAS thread
count before numpy is loaded.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "dicke",
    "meanfield",
    "lindblad",
    "trajectories",
    "activity",
    "harness",
    "csvio",
    "cli",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f"{__name__}.{name}")
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
