"""Cartesian undersampling mask generators and acceleration auditing.

Gaussian and uniform masks sample whole phase-encode columns and keep exactly
``round(w / accel)`` of them (the centered ACS band counts toward the budget),
so the realized acceleration matches the nominal one.  Radial masks rasterize
golden-angle spokes through the grid center.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

GOLDEN_ANGLE = np.deg2rad(180.0 * (np.sqrt(5.0) - 1.0) / 2.0)  # ~111.246 degrees


@dataclass(frozen=True)
class SamplingMask:
    """Binary k-space keep pattern with optional ACS rectangle."""

    keep: np.ndarray  # bool, (H, W)
    acs_rect: Optional[Tuple[int, int, int, int]] = None  # (row0, col0, rows, cols)
    nominal_accel: float = 1.0

    def __post_init__(self):
        keep = np.array(self.keep, dtype=bool, order="C", copy=True)
        if keep.ndim != 2:
            raise ValueError(f"mask must be 2D, got shape {keep.shape}")
        if not keep.any():
            raise ValueError("mask keeps no samples")
        if self.acs_rect is not None:
            r0, c0, rs, cs = self.acs_rect
            h, w = keep.shape
            if r0 < 0 or c0 < 0 or r0 + rs > h or c0 + cs > w:
                raise ValueError(f"ACS rect {self.acs_rect} exceeds mask shape {keep.shape}")
            if not keep[r0 : r0 + rs, c0 : c0 + cs].all():
                raise ValueError("ACS rect contains unsampled locations")
        if not self.nominal_accel > 0:
            raise ValueError("nominal acceleration must be positive")
        keep.setflags(write=False)
        object.__setattr__(self, "keep", keep)

    @property
    def shape(self) -> tuple:
        return self.keep.shape


def effective_acceleration(m: SamplingMask) -> float:
    """Actual acceleration: total cells over kept cells."""
    return m.keep.size / float(np.count_nonzero(m.keep))


def _check_column_budget(w: int, accel: float, acs_cols: int) -> int:
    if accel < 1:
        raise ValueError("acceleration must be >= 1")
    if acs_cols < 0:
        raise ValueError("ACS width must be non-negative")
    budget = int(round(w / accel))
    if acs_cols >= w / accel and acs_cols > 0:
        raise ValueError(
            f"infeasible mask: {acs_cols} ACS columns exceed the column budget {budget}"
        )
    return budget


def _acs_columns(w: int, acs_cols: int) -> np.ndarray:
    c0 = (w - acs_cols) // 2
    return np.arange(c0, c0 + acs_cols)


def _column_mask(h: int, w: int, cols: np.ndarray, accel: float, acs_cols: int) -> SamplingMask:
    keep = np.zeros((h, w), dtype=bool)
    keep[:, cols] = True
    rect = None
    if acs_cols > 0:
        rect = (0, int((w - acs_cols) // 2), h, acs_cols)
    return SamplingMask(keep, rect, accel)


def gen_uniform_mask(h: int, w: int, accel: float, acs_cols: int) -> SamplingMask:
    """Evenly spaced phase-encode columns plus a centered ACS band.

    Exactly ``round(w / accel)`` columns are kept in total; the columns
    outside the ACS band are spread evenly over the remaining index range.
    """
    budget = _check_column_budget(w, accel, acs_cols)
    acs = _acs_columns(w, acs_cols)
    rest = np.setdiff1d(np.arange(w), acs)
    n_extra = budget - acs_cols
    if n_extra > 0:
        picks = rest[np.floor(np.linspace(0, len(rest) - 1, n_extra)).astype(int)]
        cols = np.union1d(acs, picks)
    else:
        cols = acs
    return _column_mask(h, w, cols, accel, acs_cols)


def gen_gaussian_mask(h: int, w: int, accel: float, acs_cols: int, seed: int) -> SamplingMask:
    """Random phase-encode columns drawn from a centered Gaussian density.

    Non-ACS columns are drawn without replacement with probability
    proportional to a Gaussian of std w/6 centered on the grid; the total
    kept-column count is exactly ``round(w / accel)``.
    """
    budget = _check_column_budget(w, accel, acs_cols)
    acs = _acs_columns(w, acs_cols)
    rest = np.setdiff1d(np.arange(w), acs)
    n_extra = budget - acs_cols
    if n_extra > 0:
        density = np.exp(-0.5 * ((rest - (w - 1) / 2.0) / (w / 6.0)) ** 2)
        rng = np.random.default_rng(seed)
        picks = rng.choice(rest, size=n_extra, replace=False, p=density / density.sum())
        cols = np.union1d(acs, picks)
    else:
        cols = acs
    return _column_mask(h, w, cols, accel, acs_cols)


def _spoke_cells(h: int, w: int, angle: float) -> tuple[np.ndarray, np.ndarray]:
    radius = 0.5 * np.hypot(h, w)
    n = int(np.ceil(4 * radius))
    t = np.linspace(-radius, radius, n)
    rows = np.clip(np.rint(h / 2 + t * np.sin(angle)).astype(int), 0, h - 1)
    cols = np.clip(np.rint(w / 2 + t * np.cos(angle)).astype(int), 0, w - 1)
    return rows, cols

def gen_radial_mask(h: int, w: int, accel: float, seed: int) -> SamplingMask:
    """Golden-angle spokes through the center, rasterized to nearest cells.

    The spoke count is searched so the kept fraction lands within 10% of
    1/accel (or as close as the discrete spoke union allows).  The seed only
    sets the initial spoke angle.
    """
    if accel < 1:
        raise ValueError("acceleration must be >= 1")
    rng = np.random.default_rng(seed)
    theta0 = rng.uniform(0.0, 2.0 * np.pi)
    target = 1.0 / accel

    keep = np.zeros((h, w), dtype=bool)
    best = None  # (|frac - target|, n, mask copy)
    n_max = 8 * max(h, w)
    frac = 0.0
    for k in range(n_max):
        r, c = _spoke_cells(h, w, theta0 + k * GOLDEN_ANGLE)
        keep[r, c] = True
        frac = np.count_nonzero(keep) / keep.size
        err = abs(frac - target)
        if best is None or err < best[0]:
            best = (err, k + 1, keep.copy())
        if frac >= target:
            break
    mask = best[2]
    return SamplingMask(mask, None, accel)
