"""Distance kernel backends.

Two interchangeable implementations exist: a compiled Cython extension
and a pure numpy fallback. The active backend is chosen once at import
time from the WEIGHTINFO_BACKEND environment variable:

    auto      compiled if built, numpy otherwise (default)
    compiled  require the extension, fail loudly if missing
    python    force the numpy fallback

Per-pair results agree between backends to float64 rounding but are
only bitwise reproducible within one backend; all exactness contracts
in the package are within-backend contracts.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_NAMES = ("sq_dist", "pairwise_sq", "cross_sq", "nearest_sq", "nearest_sq_bulk")


def available_backends():
    """Names of backends importable in this installation."""
    names = ["python"]
    if _ckernels is not None:
        names.insert(0, "compiled")
    return tuple(names)


def get_backend(name=None):
    """Return the kernel module for a backend name.

    With name=None the WEIGHTINFO_BACKEND environment variable decides
    (defaulting to "auto").
    """
    if name is None:
        name = os.environ.get("WEIGHTINFO_BACKEND", "auto")
    if name == "auto":
        return _ckernels if _ckernels is not None else _pykernels
    if name == "compiled":
        if _ckernels is None:
            raise ImportError(
                "WEIGHTINFO_BACKEND=compiled but the extension is not built"
            )
        return _ckernels
    if name == "python":
        return _pykernels
    raise ValueError(f"unknown kernel backend {name!r}")


_active = get_backend()

sq_dist = _active.sq_dist
pairwise_sq = _active.pairwise_sq
cross_sq = _active.cross_sq
nearest_sq = _active.nearest_sq
nearest_sq_bulk = _active.nearest_sq_bulk


def backend_name():
    """Name of the backend selected at import time."""
    return "compiled" if _active is _ckernels else "python"
