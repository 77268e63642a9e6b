"""Part II: group observations with k-Means and average each group.

The number of clusters is chosen by the mean silhouette over a range of k.
Each dimension of the observation points is standardised before clustering
so frequency, decay rate and phasor coordinates weigh in comparably; centroids
are reported back in the original units.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import NoObservations, TooManyClusters, UndefinedSilhouette

MAX_ITER = 300


# -------------------------------------------------------------------------- k-Means


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    wcss: float
    wcss_history: list
    n_iter: int


def kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    q = points.shape[0]
    centers = [points[rng.integers(q)]]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        i = rng.choice(q, p=d2 / total) if total > 0 else rng.integers(q)
        centers.append(points[i])
        d2 = np.minimum(d2, np.sum((points - points[i]) ** 2, axis=1))
    return np.array(centers)


def _update_centroids(points, labels, centroids, d2):
    k = centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros_like(centroids)
    np.add.at(sums, labels, points)
    new = centroids.copy()
    filled = counts > 0
    new[filled] = sums[filled] / counts[filled, None]
    empty = np.flatnonzero(~filled)
    if empty.size:
        # Distance of each point to its own (updated) centroid; the farthest
        # points become the new centres of the empty clusters.
        own = np.sum((points - new[labels]) ** 2, axis=1)
        far = np.argsort(-own, kind="stable")[: empty.size]
        new[empty] = points[far]
    return new


def kmeans(
    points,
    k: int,
    seed: int = 0,
    max_iter: int = MAX_ITER,
    init: np.ndarray | None = None,
) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeding.

    Stops when no assignment changes or after `max_iter` updates. The total
    within-cluster sum of squares after every assignment step is recorded in
    ``wcss_history`` and never increases.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-D array")
    q = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > q:
        raise TooManyClusters(f"k={k} exceeds the number of points ({q})")

    if init is None:
        centroids = kmeans_plusplus(points, k, np.random.default_rng(seed))
    else:
        centroids = np.array(init, dtype=np.float64)
    labels, d2 = kernels.assign_labels(points, centroids)
    history = [float(d2.sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        centroids = _update_centroids(points, labels, centroids, d2)
        new_labels, d2 = kernels.assign_labels(points, centroids)
        history.append(float(d2.sum()))
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        if not changed:
            break
    else:
        centroids = _update_centroids(points, labels, centroids, d2)
        labels, d2 = kernels.assign_labels(points, centroids)
    return KMeansResult(labels, centroids, float(d2.sum()), history, n_iter)


def kmeans_restarts(points, k: int, seed: int = 0, n_init: int = 10) -> KMeansResult:
    """Best (lowest WCSS) of `n_init` seeded runs; ties keep the earliest restart."""
    best = None
    for r in range(n_init):
        res = kmeans(points, k, seed=_subseed(seed, k, r))
        if best is None or res.wcss < best.wcss:
            best = res
    return best


def _subseed(seed: int, k: int, restart: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, k, restart])


def silhouette_score(points, labels) -> float:
    """Mean silhouette with Euclidean distances; members of singleton clusters score 0."""
    points = np.asarray(points, dtype=np.float64)
    _, compact = np.unique(np.asarray(labels), return_inverse=True)
    k = int(compact.max()) + 1 if compact.size else 0
    if k < 2:
        raise UndefinedSilhouette("silhouette needs at least two clusters")
    return float(np.mean(kernels.silhouette_samples(points, compact, k)))


# ------------------------------------------------------------------ observations


@dataclass
class ObservationMatrix:
    """Observation points plus the per-dimension affine map used for clustering.

    ``scaled = (points - offset) / scale``.
    """

    points: np.ndarray
    offset: np.ndarray
    scale: np.ndarray
    method: str = "standardize"

    @classmethod
    def build(cls, points, method: str = "standardize", min_scale: float = 1e-2) -> "ObservationMatrix":
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[0] < 1 or points.shape[1] < 4 or points.shape[1] % 2:
            raise ValueError(f"observation matrix must be Q x (2M+2), got {points.shape}")
        d = points.shape[1]
        if method == "standardize":
            offset = points.mean(axis=0)
            scale = np.maximum(points.std(axis=0), min_scale)
        elif method == "none":
            offset = np.zeros(d)
            scale = np.ones(d)
        else:
            raise ValueError(f"unknown scaling {method!r}")
        return cls(points, offset, scale, method)

    @property
    def scaled(self) -> np.ndarray:
        return (self.points - self.offset) / self.scale

    def unscale(self, rows) -> np.ndarray:
        return np.asarray(rows) * self.scale + self.offset

    @property
    def n_channels(self) -> int:
        return (self.points.shape[1] - 2) // 2

    def scaling_record(self) -> dict:
        return {"method": self.method, "offset": self.offset.tolist(), "scale": self.scale.tolist()}


@dataclass
class ModeEstimate:
    frequency_hz: float
    decay_rate: float
    shape: np.ndarray
    member_count: int
    member_indices: list
    dispersion: np.ndarray
    low_confidence: bool = False
    member_points: np.ndarray | None = field(default=None, repr=False)

    def as_point(self) -> np.ndarray:
        p = np.empty(2 + 2 * self.shape.size)
        p[0], p[1] = self.frequency_hz, self.decay_rate
        p[2::2], p[3::2] = self.shape.real, self.shape.imag
        return p


def _point_to_parts(p):
    p = np.asarray(p, dtype=float)
    return float(p[0]), float(p[1]), p[2::2] + 1j * p[3::2]


def _estimate(centroid, rows, indices, low_confidence=False) -> ModeEstimate:
    f, s, shape = _point_to_parts(centroid)
    return ModeEstimate(
        frequency_hz=f,
        decay_rate=s,
        shape=shape,
        member_count=len(indices),
        member_indices=[int(i) for i in indices],
        dispersion=rows.std(axis=0),
        low_confidence=low_confidence,
        member_points=rows,
    )


def _sort_estimates(estimates):
    return sorted(estimates, key=lambda e: (-e.member_count, e.frequency_hz, min(e.member_indices, default=0)))


@dataclass
class ClusteringResult:
    estimates: list
    labels: np.ndarray  # per observation, index into `estimates`
    k: int
    silhouettes: dict
    matrix: ObservationMatrix
    low_confidence: bool = False

    def __iter__(self):
        return iter(self.estimates)

    def __len__(self):
        return len(self.estimates)


def _as_points(obs) -> np.ndarray:
    if isinstance(obs, np.ndarray):
        return np.atleast_2d(obs.astype(float))
    if hasattr(obs, "points"):
        return obs.points()
    obs = list(obs)
    if not obs:
        return np.empty((0, 4))
    return np.vstack([o.as_point() for o in obs])


def select_and_cluster(
    obs,
    k_min: int = 2,
    k_max: int = 10,
    seed: int = 0,
    n_init: int = 10,
    scaling: str = "standardize",
    min_silhouette: float = 0.25,
    min_scale: float = 1e-2,
) -> ClusteringResult:
    """Cluster observations, choosing k in ``[k_min, min(k_max, Q-1)]`` by mean silhouette.

    Parameters
    ----------
    obs : ObservationSet, sequence of ModeObservation, or Q x (2M+2) array
    min_silhouette : float
        If no k reaches this mean silhouette, all observations form a single
        cluster and the result is flagged ``low_confidence``.

    Returns
    -------
    ClusteringResult
        Estimates sorted by member count, largest first.
    """
    points = _as_points(obs)
    q = points.shape[0]
    if q == 0:
        raise NoObservations("no observations to cluster")
    if k_min < 2:
        raise ValueError("k_min must be >= 2 (silhouette is undefined for one cluster)")
    matrix = ObservationMatrix.build(points, scaling, min_scale)
    scaled = matrix.scaled

    silhouettes = {}
    fits = {}
    for k in range(k_min, min(k_max, q - 1) + 1):
        res = kmeans_restarts(scaled, k, seed, n_init)
        fits[k] = res
        try:
            silhouettes[k] = silhouette_score(scaled, res.labels)
        except UndefinedSilhouette:
            silhouettes[k] = -1.0

    best_k = max(silhouettes, key=lambda k: (silhouettes[k], -k)) if silhouettes else None
    if best_k is None or silhouettes[best_k] < min_silhouette:
        centroid = matrix.unscale(scaled.mean(axis=0))
        est = _estimate(centroid, points, np.arange(q), low_confidence=True)
        return ClusteringResult([est], np.zeros(q, dtype=np.int64), 1, silhouettes, matrix, True)

    res = fits[best_k]
    estimates = []
    for c in range(best_k):
        members = np.flatnonzero(res.labels == c)
        if members.size == 0:
            continue
        estimates.append(_estimate(matrix.unscale(res.centroids[c]), points[members], members))
    estimates = _sort_estimates(estimates)
    return ClusteringResult(estimates, _labels_for(estimates, q), best_k, silhouettes, matrix, False)


def _labels_for(estimates, q):
    labels = np.full(q, -1, dtype=np.int64)
    for i, e in enumerate(estimates):
        labels[e.member_indices] = i
    return labels


# ---------------------------------------------------------------------- replicates


def optimal_rotation(reference, other) -> complex:
    """Unit phasor ``r`` minimising ``sum |reference - r * other|**2``."""
    s = np.vdot(other, reference)
    return s / abs(s) if abs(s) > 0 else 1.0 + 0j


def shapes_match(a, b, angle_tol_deg: float = 15.0, significant: float = 0.3, negligible: float = 0.1) -> bool:
    """Whether `b`, optimally rotated onto `a`, agrees phasor by phasor in angle.

    Both shapes are normalised to unit maximum magnitude. Angles are compared
    only where both phasors are at least `significant`; a phasor significant
    in one shape but below `negligible` in the other is a mismatch.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or not np.abs(a).max() > 0 or not np.abs(b).max() > 0:
        return False
    a = a / np.abs(a).max()
    b = b / np.abs(b).max()
    b = b * optimal_rotation(a, b)
    ma, mb = np.abs(a), np.abs(b)
    if np.any((ma >= significant) & (mb < negligible)) or np.any((mb >= significant) & (ma < negligible)):
        return False
    both = (ma >= significant) & (mb >= significant)
    if not both.any():
        return False
    diff = np.degrees(np.abs(np.angle(a[both] * b[both].conj())))
    return bool(np.all(diff <= angle_tol_deg))


def _rotate_points(rows, r):
    rows = np.array(rows, dtype=float)
    g = (rows[:, 2::2] + 1j * rows[:, 3::2]) * r
    rows[:, 2::2], rows[:, 3::2] = g.real, g.imag
    return rows


def _merge_pair(a: ModeEstimate, b: ModeEstimate) -> ModeEstimate:
    r = optimal_rotation(a.shape, b.shape)
    if a.member_points is not None and b.member_points is not None:
        rows = np.vstack([a.member_points, _rotate_points(b.member_points, r)])
        centroid = rows.mean(axis=0)
        disp = rows.std(axis=0)
    else:
        # Without member rows, re-average the centroids weighted by size.
        pb = _rotate_points(b.as_point()[None, :], r)[0]
        n = a.member_count + b.member_count
        centroid = (a.member_count * a.as_point() + b.member_count * pb) / n
        disp = np.sqrt((a.member_count * a.dispersion**2 + b.member_count * b.dispersion**2) / n)
        rows = None
    f, s, shape = _point_to_parts(centroid)
    return ModeEstimate(
        frequency_hz=f,
        decay_rate=s,
        shape=shape,
        member_count=a.member_count + b.member_count,
        member_indices=sorted(a.member_indices + b.member_indices),
        dispersion=disp,
        low_confidence=a.low_confidence or b.low_confidence,
        member_points=rows,
    )


def merge_replicates(
    estimates: Sequence[ModeEstimate],
    angle_tol_deg: float = 15.0,
    freq_tol_hz: float = 0.05,
) -> list:
    """Merge estimates that are rotated copies of each other.

    Two estimates are replicates when their frequencies differ by less than
    `freq_tol_hz` and their shapes agree within `angle_tol_deg` per phasor
    after the best global rotation. The larger estimate sets the orientation
    of the merged one. Repeats until no pair qualifies, so applying it twice
    changes nothing.
    """
    current = _sort_estimates(list(estimates))
    merged = True
    while merged:
        merged = False
        for i in range(len(current)):
            for j in range(i + 1, len(current)):
                a, b = current[i], current[j]
                if abs(a.frequency_hz - b.frequency_hz) < freq_tol_hz and shapes_match(a.shape, b.shape, angle_tol_deg):
                    current[i] = _merge_pair(a, b)
                    del current[j]
                    merged = True
                    break
            if merged:
                break
        current = _sort_estimates(current)
    return current


def shape_errors(estimate, truth):
    """Per-phasor angle error (deg) and relative magnitude error after optimal rotation.

    Both shapes are normalised to unit maximum magnitude first.
    """
    e = np.asarray(estimate, dtype=complex)
    t = np.asarray(truth, dtype=complex)
    e = e / np.abs(e).max()
    t = t / np.abs(t).max()
    e = e * optimal_rotation(t, e)
    angle = np.degrees(np.abs(np.angle(e * t.conj())))
    mag = np.abs(np.abs(e) - np.abs(t)) / np.where(np.abs(t) > 0, np.abs(t), 1.0)
    return angle, mag


def silhouette_summary(result: ClusteringResult) -> str:
    parts = [f"k={k}: {s:.3f}" for k, s in sorted(result.silhouettes.items())]
    return ", ".join(parts) if parts else "no k evaluated"
