"""Complex image/k-space grids, pseudo-real channel packing, and intensity
normalization.

A grid is a complex array of shape (frames, H, W) tagged with the domain it
lives in.  The pseudo-real representation interleaves (real, imag) channel
pairs per frame, giving a real array of shape (2*frames, H, W) suitable for
feeding real-valued networks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IMAGE = "image-space"
KSPACE = "k-space"


@dataclass(frozen=True)
class ComplexGrid:
    """Immutable complex array of shape (frames, H, W) with a domain tag."""

    data: np.ndarray
    domain: str = IMAGE

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128, order="C", copy=True)
        if arr.ndim != 3:
            raise ValueError(f"expected (frames, H, W) array, got shape {arr.shape}")
        if self.domain not in (IMAGE, KSPACE):
            raise ValueError(f"unknown domain tag {self.domain!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def frames(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class NormParams:
    """Scalars of the two-stage intensity normalization; both strictly positive."""

    std_scale: float
    max_magnitude: float

    def __post_init__(self):
        if not (self.std_scale > 0 and self.max_magnitude > 0):
            raise ValueError("normalization params must be strictly positive")


def to_pseudo_real(g: ComplexGrid) -> np.ndarray:
    """Pack an image-space grid into a (2*frames, H, W) real stack.

    Channel 2k holds the real part of frame k, channel 2k+1 its imaginary
    part.
    """
    if g.domain != IMAGE:
        raise ValueError("pseudo-real packing is defined for image-space grids")
    f, h, w = g.shape
    out = np.empty((2 * f, h, w), dtype=np.float64)
    out[0::2] = g.data.real
    out[1::2] = g.data.imag
    return out


def from_pseudo_real(s: np.ndarray) -> ComplexGrid:
    """Inverse of :func:`to_pseudo_real`; errors on an odd channel count."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 3:
        raise ValueError(f"expected (channels, H, W) stack, got shape {s.shape}")
    if s.shape[0] % 2 != 0:
        raise ValueError(f"malformed stack: odd channel count {s.shape[0]}")
    return ComplexGrid(s[0::2] + 1j * s[1::2], IMAGE)


def _std_scale(g: ComplexGrid) -> float:
    # Joint std over pseudo-real elements with the complex mean removed, so a
    # constant grid is degenerate regardless of its value.
    centered = g.data - g.data.mean()
    p = np.stack([centered.real, centered.imag])
    return float(np.sqrt(np.mean(p * p)))


def normalize(g: ComplexGrid) -> tuple[ComplexGrid, NormParams]:
    """Scale to unit standard deviation, then by the max magnitude.

    The resulting pseudo-real values lie in [-1, 1].  Returns the scaled grid
    and the parameters needed to invert the transform.
    """
    sigma = _std_scale(g)
    if sigma == 0.0:
        raise ValueError("degenerate input: zero standard deviation")
    g1 = g.data / sigma
    m = float(np.abs(g1).max())
    return ComplexGrid(g1 / m, g.domain), NormParams(sigma, m)


def denormalize(g: ComplexGrid, p: NormParams) -> ComplexGrid:
    """Undo :func:`normalize`."""
    return ComplexGrid(g.data * (p.std_scale * p.max_magnitude), g.domain)
