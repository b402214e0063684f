"""Phase-space flows, cutoff Hamiltonians, metaplectic window transport, and
Gabor frame-bound experiments on a periodized 1-D grid.

Submodules are imported lazily so the command-line front end can configure
BLAS threading before any numerical library loads.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = (
    "symplectic",
    "lattice",
    "flow",
    "quantum",
    "metaplectic",
    "frame",
    "config",
    "cli",
)


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f"{__name__}.{name}")
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
