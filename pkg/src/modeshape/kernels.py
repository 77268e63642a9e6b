"""Backend selection for the hot loops.

The compiled extension is used when it was built and ``MODESHAPE_PURE_PYTHON``
is unset; otherwise the numpy implementations are used. Both expose the same
three functions with identical results.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("MODESHAPE_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def local_extrema(x):
    """Return ``(max_indices, min_indices)`` of interior extrema of `x`."""
    return _impl.local_extrema(_f64(x))


def assign_labels(points, centroids):
    """Return ``(labels, squared_distance)`` of each point to its nearest centroid."""
    return _impl.assign_labels(_f64(points), _f64(centroids))


def silhouette_samples(points, labels, k):
    """Per-point silhouette values; singleton clusters score 0."""
    return _impl.silhouette_samples(
        _f64(points), np.ascontiguousarray(labels, dtype=np.int64), int(k)
    )


__all__ = ["BACKEND", "local_extrema", "assign_labels", "silhouette_samples"]
