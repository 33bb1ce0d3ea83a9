"""Measurement-consistency machinery: residuals, frequency-decomposed
weighting, the adaptive back-projection step, and the DDNM/DPS baseline rules.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from .denoiser import GaussianPrior
from .encoding import EncodingOperator, KSpaceData, adjoint, forward
from .grid import ComplexGrid, from_pseudo_real, to_pseudo_real
from .schedule import NoiseSchedule

OMEGA_HALF_TANH = "half-tanh"
OMEGA_FULL_RANGE = "full-range"


@dataclass(frozen=True)
class FrequencyWeights:
    """Residual weights for the low-frequency center block vs everything else."""

    lambda_low: float = 0.4
    lambda_high: float = 0.6
    center_rect: Tuple[int, int] = (32, 32)

    def __post_init__(self):
        if self.lambda_low < 0 or self.lambda_high < 0:
            raise ValueError("frequency weights must be non-negative")
        if not np.isfinite([self.lambda_low, self.lambda_high]).all():
            raise ValueError("frequency weights must be finite")


@dataclass(frozen=True)
class ConsistencyState:
    """Base scale xi and the residual norms threaded between reverse steps."""

    xi: float
    delta_prev: float = 0.0
    delta_curr: float = 0.0

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("base scale xi must be positive")
        if not np.isfinite([self.delta_prev, self.delta_curr]).all():
            raise ValueError("residual norms must be finite")


def residual(x: ComplexGrid, y: KSpaceData, op: EncodingOperator) -> KSpaceData:
    """Masked k-space measurement residual A(x) - y."""
    return KSpaceData(forward(op, x).data - y.data, op.mask)


def _weight_map(h: int, w: int, fw: FrequencyWeights) -> np.ndarray:
    ch, cw = fw.center_rect
    ch, cw = min(ch, h), min(cw, w)  # clamp for grids smaller than the block
    wmap = np.full((h, w), fw.lambda_high)
    r0, c0 = (h - ch) // 2, (w - cw) // 2
    wmap[r0 : r0 + ch, c0 : c0 + cw] = fw.lambda_low
    return wmap


def freq_decompose(delta: KSpaceData, w: FrequencyWeights) -> KSpaceData:
    """Scale the centered low-frequency block by lambda_low, the rest by lambda_high."""
    h, wd = delta.data.shape[-2:]
    return KSpaceData(delta.data * _weight_map(h, wd, w), delta.mask)


def adaptive_weight(st: ConsistencyState, form: str = OMEGA_HALF_TANH) -> float:
    """Adaptive back-projection scale from the change in residual norm.

    The default reading xi * (1 + tanh(dprev - dcurr) / 2) keeps the weight in
    (xi/2, 3 xi/2); the alternative form xi * (1 + tanh(..)) / 2 maps to
    (0, xi).
    """
    th = np.tanh(st.delta_prev - st.delta_curr)
    if form == OMEGA_HALF_TANH:
        return float(st.xi * (1.0 + th / 2.0))
    if form == OMEGA_FULL_RANGE:
        return float(st.xi * (1.0 + th) / 2.0)
    raise ValueError(f"unknown omega form {form!r}")


def backproject_adaptive(
    x0_hat: ComplexGrid,
    y: KSpaceData,
    op: EncodingOperator,
    w: FrequencyWeights,
    st: ConsistencyState,
    form: str = OMEGA_HALF_TANH,
) -> Tuple[ComplexGrid, float]:
    """One adaptive consistency step on the clean-image estimate.

    Computes the frequency-decomposed residual, its norm delta_t, the adaptive
    weight from (delta_prev, delta_t), and subtracts the weighted
    back-projection.  Returns the updated estimate and delta_t.
    """
    delta_d = freq_decompose(residual(x0_hat, y, op), w)
    delta_t = float(np.linalg.norm(delta_d.data))
    omega = adaptive_weight(replace(st, delta_curr=delta_t), form)
    corr = adjoint(op, delta_d)
    return ComplexGrid(x0_hat.data - omega * corr.data), delta_t


def ddnm_project(x0_hat: ComplexGrid, y: KSpaceData, op: EncodingOperator) -> ComplexGrid:
    """Null-space projection: keep x0_hat outside the measurements, replace inside."""
    ax = forward(op, x0_hat)
    corr = adjoint(op, KSpaceData(ax.data - y.data, op.mask))
    return ComplexGrid(x0_hat.data - corr.data)


def dps_gradient(
    prior: GaussianPrior,
    x_t: np.ndarray,
    t: int,
    y: KSpaceData,
    op: EncodingOperator,
    s: NoiseSchedule,
) -> np.ndarray:
    """Gradient of ||y - A(x0(x_t))||^2 w.r.t. x_t for the analytic denoiser.

    x0(x_t) is the exact Gaussian posterior mean, an affine elementwise map of
    x_t, so the chain rule reduces to an elementwise Jacobian after the
    adjoint.  The 1/sigma^2 scaling is left to the caller.  Only the analytic
    prior route is supported; neural denoisers have no tractable Jacobian
    here.
    """
    ab = s.alpha_bar[t]
    marg_var = ab * prior.var + (1.0 - ab)
    # posterior mean: (x_t + (1 - ab) * score) / sqrt(ab), affine in x_t
    score = -(x_t - np.sqrt(ab) * prior.mean) / marg_var
    x0 = (x_t + (1.0 - ab) * score) / np.sqrt(ab)
    jac = np.sqrt(ab) * prior.var / marg_var  # d x0 / d x_t, elementwise

    r = residual(from_pseudo_real(x0), y, op)
    grad_x0 = to_pseudo_real(adjoint(op, r))
    return 2.0 * jac * grad_x0
