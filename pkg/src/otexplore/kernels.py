"""Backend selection for the hot per-step kernels.

The compiled extension is used when it imports; otherwise the numpy
versions are used. Setting ``OTEXPLORE_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("OTEXPLORE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

ZERO_TOL = 1e-12


def get_backend(name=None):
    """Return the kernel module for ``name`` ("python", "cython" or None = active)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def as_points(a):
    return np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 2)


def as_vector(a):
    return np.ascontiguousarray(a, dtype=np.float64).reshape(-1)


def distances(points, x, y):
    return _impl.distances(points, float(x), float(y))


def nearest_positive(points, weights, x, y, k):
    return _impl.nearest_positive(points, weights, float(x), float(y), int(k))


def best_order(x, y, pts, w):
    return _impl.best_order(float(x), float(y), as_points(pts), as_vector(w))


def greedy_deposit(points, weights, x, y, mass, zero_tol=ZERO_TOL):
    return _impl.greedy_deposit(points, weights, float(x), float(y), float(mass),
                                float(zero_tol))


def weighted_distance_sum(points, weights, x, y):
    return _impl.weighted_distance_sum(points, weights, float(x), float(y))


def within_range(targets, agents, r):
    return _impl.within_range(as_points(targets), as_points(agents), float(r))
