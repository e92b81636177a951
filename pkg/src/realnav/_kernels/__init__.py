"""Backend selection for the hot path-planning kernel.

The compiled Cython extension is preferred; the pure-Python implementation
is a drop-in replacement producing bit-identical distance fields (both
recompute keys from integer step counts, see _pure).  Selection happens
once at import; ``BACKEND`` reports which one is active.
"""

from realnav._kernels import _pure
from realnav._kernels._pure import NEIGHBOR_OFFSETS

try:
    from realnav._kernels import _core
except ImportError:  # extension not built; sdist/pure install
    _core = None

if _core is not None:
    BACKEND = "compiled"
    grid_distance_field = _core.grid_distance_field
else:
    BACKEND = "pure"
    grid_distance_field = _pure.grid_distance_field

__all__ = ["BACKEND", "NEIGHBOR_OFFSETS", "grid_distance_field", "backends"]


def backends() -> dict:
    """Mapping of available backend name -> kernel function."""
    out = {"pure": _pure.grid_distance_field}
    if _core is not None:
        out["compiled"] = _core.grid_distance_field
    return out
