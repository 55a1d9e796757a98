"""Hot pixel kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time from ``SIGNMON_BACKEND``
(``numba`` or ``numpy``).  Without the variable numba is used when it
imports cleanly.  Both backends stay loadable side by side through
:func:`load_backend`, which is what the benchmark and the equivalence tests
use.
"""

import logging
import os
import types
from types import SimpleNamespace

from . import _loops, _vectorized

log = logging.getLogger(__name__)

KERNELS = (
    "resize_bilinear",
    "box_blur",
    "otsu_threshold",
    "find_borders",
    "contour_measures",
    "fill_polygon",
)

_cache = {}


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def load_backend(name):
    """Return a namespace holding every kernel for backend ``name``."""
    if name in _cache:
        return _cache[name]
    if name == "numba":
        import numba

        jit = numba.njit(cache=True, nogil=True)
        ns = SimpleNamespace(name="numba", **{k: jit(getattr(_loops, k)) for k in KERNELS if k != "find_borders"})
        # find_borders resolves _grow from its globals at compile time; give the
        # compiled copy its own namespace so the plain module stays untouched
        glb = dict(vars(_loops), _grow=jit(_loops._grow))
        fb = _loops.find_borders
        ns.find_borders = jit(types.FunctionType(fb.__code__, glb, fb.__name__, fb.__defaults__))
    elif name == "numpy":
        ns = SimpleNamespace(name="numpy", **{k: getattr(_vectorized, k) for k in KERNELS})
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    _cache[name] = ns
    return ns


def _select():
    requested = os.environ.get("SIGNMON_BACKEND", "").strip().lower()
    if requested in ("", "numba"):
        if numba_available():
            return "numba"
        if requested == "numba":
            log.warning("SIGNMON_BACKEND=numba but numba is not importable; using numpy")
        return "numpy"
    if requested == "numpy":
        return "numpy"
    raise ValueError(f"SIGNMON_BACKEND must be 'numba' or 'numpy', got {requested!r}")


backend = load_backend(_select())
BACKEND = backend.name

resize_bilinear = backend.resize_bilinear
box_blur = backend.box_blur
otsu_threshold = backend.otsu_threshold
find_borders = backend.find_borders
contour_measures = backend.contour_measures
fill_polygon = backend.fill_polygon
