"""Parallel-imaging measurement operator, its adjoint, and coil-map synthesis.

The forward model maps an image-space grid x to per-coil undersampled k-space
via M * F(s_c * x), with F the centered orthonormal 2D DFT applied per frame.
Coil maps are pixel-wise normalized so the combined operator is a partial
isometry, which makes null-space projection an exact k-space replacement in
the single-coil case.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import IMAGE, KSPACE, ComplexGrid
from .masks import SamplingMask


def fft2c(x: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2D FFT over the last two axes."""
    return np.fft.ifftshift(
        np.fft.fft2(np.fft.fftshift(x, axes=(-2, -1)), axes=(-2, -1), norm="ortho"),
        axes=(-2, -1),
    )


def ifft2c(x: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2D inverse FFT over the last two axes."""
    return np.fft.ifftshift(
        np.fft.ifft2(np.fft.fftshift(x, axes=(-2, -1)), axes=(-2, -1), norm="ortho"),
        axes=(-2, -1),
    )


@dataclass(frozen=True)
class CoilSensitivities:
    """Per-coil complex weight maps (coil, H, W), pixel-wise normalized."""

    maps: np.ndarray

    def __post_init__(self):
        maps = np.array(self.maps, dtype=np.complex128, order="C", copy=True)
        if maps.ndim != 3 or maps.shape[0] < 1:
            raise ValueError(f"expected (coil, H, W) maps, got shape {maps.shape}")
        ssq = np.sum(np.abs(maps) ** 2, axis=0)
        if not np.allclose(ssq, 1.0, atol=1e-4):
            raise ValueError("coil maps are not pixel-wise normalized")
        maps.setflags(write=False)
        object.__setattr__(self, "maps", maps)

    @property
    def n_coils(self) -> int:
        return self.maps.shape[0]


@dataclass(frozen=True)
class KSpaceData:
    """Measured k-space (coil, frame, H, W); zero at masked-out locations."""

    data: np.ndarray
    mask: SamplingMask

    def __post_init__(self):
        data = np.array(self.data, dtype=np.complex128, order="C", copy=True)
        if data.ndim != 4:
            raise ValueError(f"expected (coil, frame, H, W) data, got shape {data.shape}")
        if data.shape[-2:] != self.mask.shape:
            raise ValueError(
                f"k-space shape {data.shape[-2:]} does not match mask {self.mask.shape}"
            )
        data *= self.mask.keep  # enforce the masked-out-is-zero invariant
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class EncodingOperator:
    """The measurement operator A combining coils, Fourier encoding and mask."""

    mask: SamplingMask
    coils: CoilSensitivities

    def __post_init__(self):
        if self.coils.maps.shape[-2:] != self.mask.shape:
            raise ValueError("coil maps and mask disagree on grid size")

    @property
    def shape(self) -> tuple:
        return self.mask.shape


def forward(op: EncodingOperator, x: ComplexGrid) -> KSpaceData:
    """Apply A: per coil c, y_c = M * F(s_c * x)."""
    if x.domain != IMAGE:
        raise ValueError("forward expects an image-space grid")
    if x.shape[-2:] != op.shape:
        raise ValueError(f"image shape {x.shape[-2:]} does not match operator {op.shape}")
    weighted = op.coils.maps[:, None] * x.data[None]  # (coil, frame, H, W)
    return KSpaceData(fft2c(weighted) * op.mask.keep, op.mask)


def adjoint(op: EncodingOperator, y: KSpaceData) -> ComplexGrid:
    """Apply the Hermitian adjoint: x = sum_c conj(s_c) * Finv(M * y_c)."""
    if y.data.shape[-2:] != op.shape:
        raise ValueError(f"k-space shape {y.data.shape[-2:]} does not match operator {op.shape}")
    imgs = ifft2c(y.data * op.mask.keep)
    return ComplexGrid(np.sum(np.conj(op.coils.maps)[:, None] * imgs, axis=0), IMAGE)


def zero_filled(op: EncodingOperator, y: KSpaceData) -> ComplexGrid:
    """The adjoint reconstruction: the naive baseline and the inversion seed."""
    return adjoint(op, y)


def gen_coil_maps(n_coils: int, h: int, w: int, seed: int) -> CoilSensitivities:
    """Smooth synthetic coil profiles: Gaussian bumps at boundary positions.

    Each coil gets a magnitude bump centered on an ellipse around the grid and
    a mild linear phase ramp; maps are then normalized so the per-pixel
    sensitivity energy is exactly one.
    """
    if n_coils < 1:
        raise ValueError("need at least one coil")
    rng = np.random.default_rng(seed)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    theta0 = rng.uniform(0.0, 2.0 * np.pi)
    sigma = 0.6 * max(h, w)
    maps = np.empty((n_coils, h, w), dtype=np.complex128)
    for c in range(n_coils):
        th = theta0 + 2.0 * np.pi * c / n_coils
        cy = h / 2 + 0.6 * (h / 2) * np.sin(th)
        cx = w / 2 + 0.6 * (w / 2) * np.cos(th)
        mag = np.exp(-((rows - cy) ** 2 + (cols - cx) ** 2) / (2 * sigma**2))
        pr, pc = rng.uniform(-np.pi, np.pi, size=2)
        phase = pr * (rows - h / 2) / h + pc * (cols - w / 2) / w
        maps[c] = mag * np.exp(1j * phase)
    maps /= np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return CoilSensitivities(maps)
