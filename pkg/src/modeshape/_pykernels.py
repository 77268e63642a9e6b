"""Pure-numpy versions of the compiled kernels in ``_ckernels.pyx``."""
import numpy as np
from scipy.spatial.distance import cdist


def local_extrema(x):
    """Indices of local maxima and minima of a 1-D series.

    A flat run counts as one extremum, placed at its middle sample, when the
    slope changes sign across it. End samples are never extrema.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    d = np.diff(x)
    nz = np.flatnonzero(d)
    if nz.size < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    s = np.sign(d[nz])
    change = s[:-1] != s[1:]
    idx = (nz[:-1][change] + 1 + nz[1:][change]) // 2
    rising = s[:-1][change] > 0
    return idx[rising].astype(np.int64), idx[~rising].astype(np.int64)


def assign_labels(points, centroids):
    """Nearest centroid (squared Euclidean) per row; ties go to the lower index."""
    diff = points[:, None, :] - centroids[None, :, :]
    d2 = np.einsum("qkd,qkd->qk", diff, diff)
    labels = np.argmin(d2, axis=1).astype(np.int64)
    return labels, d2[np.arange(points.shape[0]), labels]


def silhouette_samples(points, labels, k):
    q = points.shape[0]
    dist = cdist(points, points)
    onehot = np.zeros((q, k))
    onehot[np.arange(q), labels] = 1.0
    sums = dist @ onehot
    counts = onehot.sum(axis=0)

    own = counts[labels]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = sums[np.arange(q), labels] / (own - 1)
        mean_other = sums / counts
    mean_other[np.arange(q), labels] = np.inf
    mean_other[:, counts == 0] = np.inf
    b = mean_other.min(axis=1)

    out = np.zeros(q)
    ok = (own > 1) & np.isfinite(b)
    m = np.maximum(a, b)
    ok &= m > 0
    out[ok] = (b[ok] - a[ok]) / m[ok]
    return out
