"""Real PCA, complex PCA, and the two-layer PCA -> CPCA decomposition.

The two-layer pipeline for one window ``X`` (M x N, zero-mean rows)::

    S  = U^T X                       real PCA scores
    S' = S - R                       R = EMD residual of each score row
    Y  = taper(S' + j H(S'))         analytic signal, ends cut off
    Z  = V^* Y                       complex PCA scores
    W  = U V                         so that X ~ Re(W Z) on the tapered span

Column ``j`` of ``W`` gives the amplitude and phase with which complex
component ``z_j`` appears in each channel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoComponentsKept, NonFiniteInput, TooFewSamples
from .sigproc import EmdConfig, analytic_signal, emd, taper_count, taper_ends

NULL_EIGENVALUE_RTOL = 1e-12


@dataclass(frozen=True)
class ComponentSelection:
    """How many components to keep.

    With `count` set, keep that many (capped at the number available).
    Otherwise keep the leading components until their cumulative share of the
    variance reaches `variance`. Numerically null components are never kept.
    """

    count: int | None = None
    variance: float = 0.95

    def __post_init__(self):
        if self.count is not None and self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0 < self.variance <= 1:
            raise ValueError("variance threshold must be in (0, 1]")

    @classmethod
    def parse(cls, text: str) -> "ComponentSelection":
        """``"3"`` keeps three components, ``"0.9"`` keeps 90 % of the variance."""
        value = float(text)
        if value >= 1 and value == int(value):
            return cls(count=int(value))
        return cls(variance=value)

    def n_keep(self, eigenvalues: np.ndarray) -> int:
        ev = np.asarray(eigenvalues, dtype=float)
        if ev.size == 0 or not ev[0] > 0:
            return 0
        usable = int(np.count_nonzero(ev > NULL_EIGENVALUE_RTOL * ev[0]))
        if self.count is not None:
            return min(self.count, usable)
        frac = np.cumsum(ev) / ev.sum()
        n = int(np.searchsorted(frac, self.variance - 1e-12)) + 1
        return min(n, usable)


@dataclass
class PcaResult:
    components: np.ndarray  # M x M_PC
    scores: np.ndarray  # M_PC x N
    eigenvalues: np.ndarray  # M_PC, descending
    variance_fractions: np.ndarray
    all_eigenvalues: np.ndarray  # M, descending

    @property
    def n_components(self) -> int:
        return self.components.shape[1]


@dataclass
class CpcaResult:
    components: np.ndarray  # M_PC x M_CPC complex
    scores: np.ndarray  # M_CPC x N' complex
    eigenvalues: np.ndarray
    variance_fractions: np.ndarray
    all_eigenvalues: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[1]


@dataclass
class TwoLayerResult:
    w: np.ndarray  # M x M_CPC complex
    z: np.ndarray  # M_CPC x N' complex
    residuals: np.ndarray  # M_PC x N
    pca: PcaResult
    cpca: CpcaResult
    taper_offset: int  # index of the first kept sample in the window

    @property
    def n_components(self) -> int:
        return self.w.shape[1]


def _check_matrix(x, complex_ok=False):
    x = np.asarray(x)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
    if x.shape[1] < 2:
        raise TooFewSamples(f"need at least 2 samples, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input contains NaN or inf")
    if not complex_ok:
        x = x.astype(np.float64, copy=False)
    return x


def _sort_desc(evals, evecs):
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    return evals, evecs[:, order]


def _fix_phase(vecs):
    """Rotate each column so its largest-magnitude entry is real and positive."""
    if vecs.size == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=0)
    pivot = vecs[idx, np.arange(vecs.shape[1])]
    if np.iscomplexobj(vecs):
        return vecs * (np.abs(pivot) / np.where(pivot == 0, 1, pivot))
    return vecs * np.where(pivot < 0, -1.0, 1.0)


def _fractions(evals):
    total = evals.sum()
    return evals / total if total > 0 else np.zeros_like(evals)


def pca(x, keep: ComponentSelection | None = None) -> PcaResult:
    """Principal components of zero-mean rows via the covariance ``X X^T / (N-1)``."""
    keep = keep or ComponentSelection()
    x = _check_matrix(x)
    row_max = np.max(np.abs(x), axis=1)
    if np.any(np.abs(x.mean(axis=1)) > 1e-9 * np.maximum(row_max, 1e-300)):
        raise ValueError("pca expects zero-mean rows; call remove_mean first")
    n = x.shape[1]
    cov = x @ x.T / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    evals, evecs = _sort_desc(evals, evecs)
    evecs = _fix_phase(evecs)
    m = keep.n_keep(evals)
    u = evecs[:, :m]
    fractions = _fractions(evals)
    return PcaResult(u, u.T @ x, evals[:m], fractions[:m], evals)


def hermitian_eigh(c: np.ndarray, embedded: bool = False):
    """Eigen-decomposition of a Hermitian matrix, descending.

    With ``embedded=True`` the real symmetric form ``[[A, -B], [B, A]]`` of
    ``C = A + jB`` is solved instead. Each eigenvalue then appears twice, with
    eigenvectors ``[a; b]`` and ``[-b; a]`` spanning the same complex vector
    ``a + jb``; one of each pair is kept.
    """
    if not embedded:
        evals, evecs = np.linalg.eigh(c)
        return _sort_desc(evals, evecs)
    k = c.shape[0]
    a, b = c.real, c.imag
    big = np.block([[a, -b], [b, a]])
    evals, evecs = np.linalg.eigh(big)
    evals, evecs = _sort_desc(evals, evecs)
    cand = evecs[:k] + 1j * evecs[k:]
    chosen: list[int] = []
    basis = np.zeros((k, 0), dtype=complex)
    for i in range(2 * k):
        v = cand[:, i]
        # Drop the twin: remove what the already-chosen vectors explain.
        v = v - basis @ (basis.conj().T @ v)
        norm = np.linalg.norm(v)
        if norm < 1e-6:
            continue
        basis = np.column_stack([basis, v / norm])
        chosen.append(i)
        if len(chosen) == k:
            break
    return evals[chosen], basis


def cpca(y, keep: ComponentSelection | None = None, embedded: bool = False) -> CpcaResult:
    """Complex PCA via the Hermitian covariance ``Y Y^* / (N-1)``; scores ``Z = V^* Y``."""
    keep = keep or ComponentSelection()
    y = _check_matrix(y, complex_ok=True).astype(np.complex128, copy=False)
    n = y.shape[1]
    cov = y @ y.conj().T / (n - 1)
    cov = 0.5 * (cov + cov.conj().T)
    evals, evecs = hermitian_eigh(cov, embedded=embedded)
    evecs = _fix_phase(evecs)
    m = keep.n_keep(evals)
    v = evecs[:, :m]
    return CpcaResult(v, v.conj().T @ y, evals[:m], _fractions(evals)[:m], evals)


def two_layer(
    x,
    sample_rate_hz: float,
    keep1: ComponentSelection | None = None,
    keep2: ComponentSelection | None = None,
    taper: float = 0.10,
    emd_config: EmdConfig | None = None,
) -> TwoLayerResult:
    """Run PCA, EMD detrending, Hilbert transform, tapering and CPCA on one window.

    Raises
    ------
    NoComponentsKept
        The first layer finds no variance to keep.
    """
    x = _check_matrix(x)
    p = pca(x, keep1)
    if p.n_components == 0:
        raise NoComponentsKept("first-layer PCA kept no components (input has no variance)")
    residuals = np.vstack([emd(s, sample_rate_hz, emd_config).residual for s in p.scores])
    detrended = p.scores - residuals
    y = np.vstack([analytic_signal(s) for s in detrended])
    y = taper_ends(y, taper)
    c = cpca(y, keep2)
    return TwoLayerResult(
        w=p.components @ c.components,
        z=c.scores,
        residuals=residuals,
        pca=p,
        cpca=c,
        taper_offset=taper_count(x.shape[1], taper),
    )
