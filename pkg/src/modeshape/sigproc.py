"""Single-series signal processing used by the decomposition pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import get_window

from . import kernels
from .errors import (
    EmptyInput,
    NonPositiveAmplitude,
    SingularRegression,
    WindowTooShortAfterTaper,
    ZeroPower,
)

MIN_SERIES_LENGTH = 4


def remove_mean(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise EmptyInput("cannot remove the mean of an empty series")
    return x - x.mean()


# ------------------------------------------------------------------------------ EMD


@dataclass(frozen=True)
class EmdConfig:
    """Sifting parameters.

    Envelopes are cubic splines through the extrema, extended past each end by
    mirroring `n_mirror` extrema. A proto-IMF is accepted once the Cauchy-type
    difference ``sum((h_prev - h)**2) / sum(h_prev**2)`` drops below `sd_threshold`
    or after `max_sift` iterations. Decomposition stops when the remainder has
    fewer than `min_extrema` extrema.
    """

    sd_threshold: float = 0.2
    max_sift: int = 50
    min_extrema: int = 3
    n_mirror: int = 2
    max_imfs: int = 16


@dataclass
class EmdResult:
    imfs: list
    residual: np.ndarray
    n_sift_iterations: list = field(default_factory=list)

    def reconstruct(self) -> np.ndarray:
        return np.sum(self.imfs, axis=0) + self.residual if self.imfs else self.residual.copy()


def _mirror_side(imax, imin, x, nbsym, left):
    """Mirror points for one boundary, following Rilling's scheme.

    Returns (t_max, x_max, t_min, x_min) of the extra knots in index units.
    """
    n = x.size
    if not left:
        # Solve the right end as a left end of the reversed series.
        rmax = (n - 1 - imax)[::-1]
        rmin = (n - 1 - imin)[::-1]
        tmx, vmx, tmn, vmn = _mirror_side(rmax, rmin, x[::-1], nbsym, True)
        return (n - 1 - tmx), vmx, (n - 1 - tmn), vmn

    if imax[0] < imin[0]:
        if x[0] > x[imin[0]]:
            lmax = imax[1:nbsym + 1][::-1]
            lmin = imin[:nbsym][::-1]
            sym = imax[0]
        else:
            lmax = imax[:nbsym][::-1]
            lmin = np.append(imin[:nbsym - 1][::-1], 0)
            sym = 0
    else:
        if x[0] < x[imax[0]]:
            lmax = imax[:nbsym][::-1]
            lmin = imin[1:nbsym + 1][::-1]
            sym = imin[0]
        else:
            lmax = np.append(imax[:nbsym - 1][::-1], 0)
            lmin = imin[:nbsym][::-1]
            sym = 0

    tmax = 2 * sym - lmax
    tmin = 2 * sym - lmin
    # Mirrored knots must reach past the first sample, else mirror about it.
    if (tmax.size and tmax[0] > 0) or (tmin.size and tmin[0] > 0):
        if sym == imax[0]:
            lmax = imax[:nbsym][::-1]
        else:
            lmin = imin[:nbsym][::-1]
        sym = 0
        tmax = 2 * sym - lmax
        tmin = 2 * sym - lmin
    return tmax.astype(float), x[lmax], tmin.astype(float), x[lmin]


def _envelope_mean(h, nbsym):
    imax, imin = kernels.local_extrema(h)
    if imax.size < 1 or imin.size < 1 or imax.size + imin.size < 3:
        return None
    n = h.size
    lt_max, lx_max, lt_min, lx_min = _mirror_side(imax, imin, h, nbsym, True)
    rt_max, rx_max, rt_min, rx_min = _mirror_side(imax, imin, h, nbsym, False)
    t_max = np.concatenate([lt_max, imax.astype(float), rt_max[::-1]])
    v_max = np.concatenate([lx_max, h[imax], rx_max[::-1]])
    t_min = np.concatenate([lt_min, imin.astype(float), rt_min[::-1]])
    v_min = np.concatenate([lx_min, h[imin], rx_min[::-1]])
    t_max, keep = np.unique(t_max, return_index=True)
    v_max = v_max[keep]
    t_min, keep = np.unique(t_min, return_index=True)
    v_min = v_min[keep]
    if t_max.size < 2 or t_min.size < 2:
        return None
    grid = np.arange(n, dtype=float)
    upper = CubicSpline(t_max, v_max)(grid) if t_max.size > 2 else np.interp(grid, t_max, v_max)
    lower = CubicSpline(t_min, v_min)(grid) if t_min.size > 2 else np.interp(grid, t_min, v_min)
    return 0.5 * (upper + lower)


def _n_extrema(x) -> int:
    imax, imin = kernels.local_extrema(x)
    return imax.size + imin.size


def emd(x, sample_rate_hz: float = 1.0, cfg: EmdConfig | None = None) -> EmdResult:
    """Empirical mode decomposition by Huang-style sifting.

    IMFs come out fastest first. A series with fewer than ``cfg.min_extrema``
    extrema is returned unchanged as the residual with no IMFs. The sample
    rate only sets the time axis, which sifting does not depend on; it is
    accepted so callers can pass window metadata through unchanged.
    """
    cfg = cfg or EmdConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < MIN_SERIES_LENGTH:
        raise EmptyInput(f"EMD needs a 1-D series of at least {MIN_SERIES_LENGTH} samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("EMD input must be finite")

    residual = x.copy()
    imfs, iters = [], []
    scale = np.max(np.abs(x)) if x.size else 0.0
    while len(imfs) < cfg.max_imfs and _n_extrema(residual) >= cfg.min_extrema:
        if scale == 0 or np.max(np.abs(residual)) <= 1e-12 * scale:
            break
        h = residual.copy()
        n_it = 0
        for n_it in range(1, cfg.max_sift + 1):
            m = _envelope_mean(h, cfg.n_mirror)
            if m is None:
                break
            h_new = h - m
            denom = np.dot(h, h)
            sd = np.dot(h - h_new, h - h_new) / denom if denom > 0 else 0.0
            h = h_new
            if sd < cfg.sd_threshold:
                break
        imfs.append(h)
        iters.append(n_it)
        residual = residual - h
    return EmdResult(imfs, residual, iters)


def detrend_by_emd(x, sample_rate_hz: float = 1.0, cfg: EmdConfig | None = None) -> np.ndarray:
    """Subtract the EMD residual (the non-oscillatory trend) from `x`."""
    x = np.asarray(x, dtype=np.float64)
    return x - emd(x, sample_rate_hz, cfg).residual


# ---------------------------------------------------------------------- Hilbert etc.


def analytic_signal(x) -> np.ndarray:
    """``x + j H(x)`` via the one-sided spectrum.

    Negative-frequency bins are zeroed and positive ones doubled; DC and (for
    even lengths) the Nyquist bin are kept as is. The real part is replaced by
    `x` itself so it matches the input exactly rather than to round-off.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < MIN_SERIES_LENGTH:
        raise EmptyInput(f"analytic signal needs at least {MIN_SERIES_LENGTH} samples")
    n = x.size
    spec = np.fft.fft(x)
    gain = np.zeros(n)
    gain[0] = 1.0
    if n % 2 == 0:
        gain[n // 2] = 1.0
        gain[1:n // 2] = 2.0
    else:
        gain[1:(n + 1) // 2] = 2.0
    z = np.fft.ifft(spec * gain)
    return x + 1j * z.imag


def taper_count(n: int, fraction: float) -> int:
    # guard against 0.1*100 -> 10.000000000000002
    return int(math.ceil(round(fraction * n, 9)))


def taper_ends(y, fraction: float = 0.10) -> np.ndarray:
    """Drop ``ceil(fraction * N)`` samples from each end."""
    if not 0 <= fraction < 0.5:
        raise ValueError(f"taper fraction must be in [0, 0.5), got {fraction}")
    y = np.asarray(y)
    cut = taper_count(y.shape[-1], fraction)
    out_len = y.shape[-1] - 2 * cut
    if out_len < MIN_SERIES_LENGTH:
        raise WindowTooShortAfterTaper(
            f"{y.shape[-1]} samples minus 2x{cut} tapered leaves {out_len} (< {MIN_SERIES_LENGTH})"
        )
    return y[..., cut:y.shape[-1] - cut]


def mean_frequency(
    z,
    sample_rate_hz: float,
    window=("kaiser", 38.0),
    freq_range: tuple | None = None,
) -> float:
    """Power-weighted mean frequency over the periodogram bins in ``[0, fs/2]``.

    Parameters
    ----------
    z : array_like
        Real or complex series.
    sample_rate_hz : float
    window : str, tuple or None
        Any window spec understood by :func:`scipy.signal.get_window`. The
        default Kaiser window with ``beta=38`` is what MATLAB's ``meanfreq``
        uses. ``None`` gives a plain rectangular periodogram, which is biased
        upwards on damped tones by the slow spectral tail of the onset.
    freq_range : (lo, hi), optional
        Restrict the average to bins inside this range. Broadband noise
        otherwise pulls the mean towards ``fs/4``.
    """
    z = np.asarray(z)
    n = z.shape[-1]
    if n < MIN_SERIES_LENGTH:
        raise EmptyInput(f"need at least {MIN_SERIES_LENGTH} samples")
    if window is not None:
        z = z * get_window(window, n, fftbins=False)
    power = np.abs(np.fft.fft(z)) ** 2
    freqs = np.fft.fftfreq(n, 1.0 / sample_rate_hz)
    sel = freqs >= 0
    f = freqs[sel]
    p = power[sel]
    if n % 2 == 0:
        # fftfreq reports the Nyquist bin as -fs/2
        f = np.append(f, sample_rate_hz / 2)
        p = np.append(p, power[n // 2])
    if freq_range is not None:
        inside = (f >= freq_range[0]) & (f <= freq_range[1])
        f, p = f[inside], p[inside]
    total = p.sum()
    if not total > 0:
        raise ZeroPower("series has no power")
    return float(np.dot(f, p) / total)


# ------------------------------------------------------------------ exponential fit


@dataclass(frozen=True)
class ExpFit:
    alpha: float
    beta: float
    mse: float


def fit_exponential(xs, ys) -> ExpFit:
    """Fit ``ys ~ alpha * exp(beta * xs)`` by least squares on ``log(ys)``.

    The returned `mse` is the mean squared error of the fitted curve against
    `ys` in the original (not logarithmic) domain.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise ValueError("xs and ys must be 1-D of equal length >= 2")
    if np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise NonPositiveAmplitude("exponential fit needs strictly positive amplitudes")
    xm = xs.mean()
    dx = xs - xm
    sxx = np.dot(dx, dx)
    if sxx <= 0:
        raise SingularRegression("all abscissae are equal")
    ly = np.log(ys)
    beta = np.dot(dx, ly - ly.mean()) / sxx
    alpha = math.exp(ly.mean() - beta * xm)
    resid = alpha * np.exp(beta * xs) - ys
    return ExpFit(alpha, float(beta), float(np.mean(resid * resid)))


def fit_envelope(t, z) -> ExpFit:
    """Exponential fit to ``|z|`` normalised to unit maximum."""
    env = np.abs(np.asarray(z))
    peak = env.max() if env.size else 0.0
    if not peak > 0:
        raise NonPositiveAmplitude("envelope is identically zero")
    return fit_exponential(t, env / peak)
