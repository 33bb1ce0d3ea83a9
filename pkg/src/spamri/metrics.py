"""PSNR and SSIM on magnitude images.

Both metrics expect magnitude images already scaled to [0, 1]; use
:func:`magnitude_01` to get there from a complex grid.  SSIM defaults to the
windowed form (11x11 Gaussian, sigma 1.5); ``window=None`` computes the
single-statistic global formula instead.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import convolve

from .grid import ComplexGrid

C1 = 0.01**2
C2 = 0.03**2


def magnitude_01(x: ComplexGrid) -> np.ndarray:
    """Magnitude image scaled to [0, 1] by its own maximum."""
    m = np.abs(x.data)
    peak = m.max()
    return m / peak if peak > 0 else m


def _as_mag(x) -> np.ndarray:
    if isinstance(x, ComplexGrid):
        return np.abs(x.data)
    return np.asarray(x, dtype=np.float64)


def psnr(x, ref) -> float:
    """Peak signal-to-noise ratio in dB with MAX_I = 1; +inf for identical images."""
    a, b = _as_mag(x), _as_mag(ref)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return -10.0 * np.log10(mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def ssim_global(x, ref) -> float:
    """The single-statistic SSIM formula evaluated over the whole image."""
    a, b = _as_mag(x), _as_mag(ref)
    mu_a, mu_b = a.mean(), b.mean()
    var_a, var_b = a.var(), b.var()
    cov = np.mean((a - mu_a) * (b - mu_b))
    return float(
        (2 * mu_a * mu_b + C1) * (2 * cov + C2)
        / ((mu_a**2 + mu_b**2 + C1) * (var_a + var_b + C2))
    )


def ssim(x, ref, window: int | None = 11, sigma: float = 1.5) -> float:
    """Mean of windowed SSIM over Gaussian windows; falls back to the global
    formula when the image is smaller than the window."""
    a, b = _as_mag(x), _as_mag(ref)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 3:  # average per frame
        vals = [ssim(a[i], b[i], window, sigma) for i in range(a.shape[0])]
        return float(np.mean(vals))
    if window is None or min(a.shape) < window:
        return ssim_global(a, b)
    k = _gaussian_window(window, sigma)

    def filt(img):
        return convolve(img, k, mode="reflect")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    s = ((2 * mu_a * mu_b + C1) * (2 * cov + C2)) / (
        (mu_a**2 + mu_b**2 + C1) * (var_a + var_b + C2)
    )
    return float(s.mean())
