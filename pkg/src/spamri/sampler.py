"""Sampling loops: DDIM reverse steps, naive and diffusion-aware inversion,
the full adaptive-consistency reconstruction, and the null-space baseline.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .consistency import (
    OMEGA_HALF_TANH,
    ConsistencyState,
    FrequencyWeights,
    adaptive_weight,
    backproject_adaptive,
    ddnm_project,
)
from .denoiser import Denoiser, estimate_x0
from .encoding import EncodingOperator, KSpaceData, zero_filled
from .grid import ComplexGrid, NormParams, denormalize, from_pseudo_real, normalize, to_pseudo_real
from .schedule import NoiseSchedule, ddim_sigma, uniform_plan


@dataclass(frozen=True)
class ReconConfig:
    """All sampler hyperparameters; defaults follow the reference setup."""

    reverse_steps: int = 200
    inversion_steps: int = 25
    eta: float = 0.0
    inversion_noise_scale: float = 1.0
    t_start: Optional[int] = None  # None means T - 1
    seed: int = 0
    xi: float = 3.0
    clip_x0: Optional[float] = None  # clamp clean estimates; use 1.0 for [-1,1]-trained denoisers
    dc_iters: int = 1  # projection-sampler consistency iterations; >1 tightens multi-coil replacement
    freq_weights: FrequencyWeights = field(default_factory=FrequencyWeights)
    omega_form: str = OMEGA_HALF_TANH
    normalize_input: bool = True

    def __post_init__(self):
        if self.reverse_steps < 1:
            raise ValueError("need at least one reverse step")
        if self.inversion_steps < 0:
            raise ValueError("inversion step count must be non-negative")
        if not (0.0 <= self.inversion_noise_scale <= 1.0):
            raise ValueError("inversion noise scale must lie in [0, 1]")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.xi < 0:
            raise ValueError("xi must be non-negative")
        if self.dc_iters < 1:
            raise ValueError("need at least one consistency iteration")

    def resolve_t_start(self, s: NoiseSchedule) -> int:
        return s.T - 1 if self.t_start is None else self.t_start


@dataclass
class SampleTrace:
    """Per-step diagnostics and the exact denoiser-call count."""

    rows: List[tuple] = field(default_factory=list)  # (step, t, delta, omega, x0_norm, cum_nfe)
    nfe: int = 0

    def record(self, step: int, t: int, delta: float, omega: float, x0_norm: float):
        self.rows.append((step, t, delta, omega, x0_norm, self.nfe))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["step_index", "t", "delta", "omega", "x0_norm", "cum_nfe"])
            wr.writerows(self.rows)


class DivergenceError(RuntimeError):
    """Raised when a sampling loop produces non-finite values."""

    def __init__(self, message: str, trace: SampleTrace):
        super().__init__(message)
        self.trace = trace


def ddim_reverse_step(
    x_t: np.ndarray,
    t: int,
    t_prev: int,
    den: Denoiser,
    s: NoiseSchedule,
    eta: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One deterministic-unless-eta DDIM update from t down to t_prev."""
    eps_hat = den.eps(x_t, t)
    x0_hat = estimate_x0(x_t, t, eps_hat, s)
    return ddim_update(x0_hat, eps_hat, t, t_prev, s, eta, rng)


def implied_eps(x_t: np.ndarray, x0_used: np.ndarray, t: int, s: NoiseSchedule) -> np.ndarray:
    """Noise direction consistent with the clean estimate actually kept.

    After clipping or data-consistency edits the predicted noise no longer
    matches the modified clean estimate; re-deriving it from the current state
    keeps the trajectory on-manifold.  With an unmodified estimate this is
    exactly the original prediction.
    """
    ab = s.alpha_bar[t]
    return (x_t - np.sqrt(ab) * x0_used) / np.sqrt(1.0 - ab)


def ddim_update(
    x0_hat: np.ndarray,
    eps_hat: np.ndarray,
    t: int,
    t_prev: int,
    s: NoiseSchedule,
    eta: float,
    rng: Optional[np.random.Generator],
) -> np.ndarray:
    """Recombine a clean estimate and noise prediction at level t_prev."""
    sigma = ddim_sigma(s, t, t_prev, eta)
    ab_prev = s.alpha_bar[t_prev]
    coef = np.sqrt(max(1.0 - ab_prev - sigma**2, 0.0))
    out = np.sqrt(ab_prev) * x0_hat + coef * eps_hat
    if sigma > 0:
        out = out + sigma * rng.standard_normal(out.shape)
    return out


def ddim_forward_naive(
    x_t: np.ndarray, t: int, t_next: int, den: Denoiser, s: NoiseSchedule
) -> np.ndarray:
    """Deterministic ascent step: re-noise the current clean estimate to t_next."""
    if not (0 <= t < t_next < s.T):
        raise ValueError(f"need 0 <= t < t_next < T, got t={t}, t_next={t_next}")
    eps_hat = den.eps(x_t, t)
    x0_hat = estimate_x0(x_t, t, eps_hat, s)
    ab_next = s.alpha_bar[t_next]
    return np.sqrt(ab_next) * x0_hat + np.sqrt(1.0 - ab_next) * eps_hat


def dai_forward_step(
    x_t: np.ndarray,
    t: int,
    t_next: int,
    den: Denoiser,
    s: NoiseSchedule,
    noise_scale: float,
    rng: np.random.Generator,
    clip_x0: Optional[float] = None,
) -> np.ndarray:
    """Diffusion-aware ascent step with a controllable fresh-noise perturbation."""
    if not (0 <= t < t_next < s.T):
        raise ValueError(f"need 0 <= t < t_next < T, got t={t}, t_next={t_next}")
    eps_hat = den.eps(x_t, t)
    x0_hat = _clip(estimate_x0(x_t, t, eps_hat, s), clip_x0)
    ab_next = s.alpha_bar[t_next]
    lam_beta = noise_scale * s.beta[t_next]
    radicand = 1.0 - ab_next - lam_beta
    if radicand < 0:
        raise ValueError(
            f"infeasible schedule: 1 - alpha_bar - noise_scale*beta < 0 at t={t_next}; "
            "reduce the noise scale"
        )
    if clip_x0 is not None:
        eps_hat = implied_eps(x_t, x0_hat, t, s)
    out = np.sqrt(ab_next) * x0_hat + np.sqrt(radicand) * eps_hat
    if noise_scale > 0:
        out = out + np.sqrt(lam_beta) * rng.standard_normal(out.shape)
    return out


def _clip(x0_hat: np.ndarray, bound: Optional[float]) -> np.ndarray:
    return x0_hat if bound is None else np.clip(x0_hat, -bound, bound)


def _ascending_levels(s: NoiseSchedule, n_steps: int, t_start: int) -> np.ndarray:
    plan = uniform_plan(s, n_steps + 1, t_start)
    return plan.steps[::-1]


def invert(
    x0_prime: ComplexGrid,
    cfg: ReconConfig,
    den: Denoiser,
    s: NoiseSchedule,
    rng: Optional[np.random.Generator] = None,
    trace: Optional[SampleTrace] = None,
) -> np.ndarray:
    """Map a degraded image up the diffusion trajectory to seed reverse sampling.

    Applies ``inversion_steps`` diffusion-aware ascent steps along an evenly
    spaced plan from 0 to t_start.  With zero steps the seed falls back to
    pure Gaussian noise and standard sampling.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    x = to_pseudo_real(x0_prime)
    t_start = cfg.resolve_t_start(s)
    if cfg.inversion_steps == 0:
        return rng.standard_normal(x.shape)
    levels = _ascending_levels(s, cfg.inversion_steps, t_start)
    for k in range(cfg.inversion_steps):
        x = dai_forward_step(x, int(levels[k]), int(levels[k + 1]), den, s,
                             cfg.inversion_noise_scale, rng, cfg.clip_x0)
        if trace is not None:
            trace.nfe += 1
            trace.record(-cfg.inversion_steps + k, int(levels[k]), float("nan"),
                         float("nan"), float(np.linalg.norm(x)))
    return x


def _prepare(y: KSpaceData, op: EncodingOperator, cfg: ReconConfig):
    x0p = zero_filled(op, y)
    if cfg.normalize_input:
        x0n, params = normalize(x0p)
        scale = params.std_scale * params.max_magnitude
        y_n = KSpaceData(y.data / scale, y.mask)
    else:
        x0n, params = x0p, None
        y_n = y
    return x0n, y_n, params


def _finish(g: ComplexGrid, params: Optional[NormParams]) -> ComplexGrid:
    return denormalize(g, params) if params is not None else g


def spa_mri_sample(
    y: KSpaceData,
    op: EncodingOperator,
    den: Denoiser,
    s: NoiseSchedule,
    cfg: ReconConfig,
) -> Tuple[ComplexGrid, SampleTrace]:
    """Full adaptive-consistency reconstruction from undersampled k-space.

    The zero-filled image is normalized and inverted up the trajectory, then
    reverse sampling alternates the Tweedie estimate with the adaptive
    frequency-weighted back-projection; the residual norm from the previous
    iteration drives the weight (starting from zero).
    """
    rng = np.random.default_rng(cfg.seed)
    trace = SampleTrace()
    x0n, y_n, params = _prepare(y, op, cfg)
    x = invert(x0n, cfg, den, s, rng, trace)

    plan = uniform_plan(s, cfg.reverse_steps, cfg.resolve_t_start(s), cfg.eta)
    delta_prev = 0.0
    result = None
    for i, t in enumerate(plan.steps):
        t = int(t)
        eps_hat = den.eps(x, t)
        trace.nfe += 1
        x0_hat = _clip(estimate_x0(x, t, eps_hat, s), cfg.clip_x0)
        g0 = from_pseudo_real(x0_hat)
        if cfg.xi > 0:
            st = ConsistencyState(cfg.xi, delta_prev, 0.0)
            g_bp, delta = backproject_adaptive(g0, y_n, op, cfg.freq_weights, st, cfg.omega_form)
            omega = adaptive_weight(ConsistencyState(cfg.xi, delta_prev, delta), cfg.omega_form)
        else:
            g_bp, delta, omega = g0, float("nan"), float("nan")
        if not np.isfinite(g_bp.data).all():
            raise DivergenceError(f"non-finite estimate at t={t}", trace)
        trace.record(i, t, delta, omega, float(np.linalg.norm(g_bp.data)))
        if i == len(plan.steps) - 1:
            result = g_bp
            break
        x0_used = to_pseudo_real(g_bp)
        x = ddim_update(x0_used, implied_eps(x, x0_used, t, s), t,
                        int(plan.steps[i + 1]), s, cfg.eta, rng)
        delta_prev = delta if np.isfinite(delta) else 0.0
    return _finish(result, params), trace


def ddnm_sample(
    y: KSpaceData,
    op: EncodingOperator,
    den: Denoiser,
    s: NoiseSchedule,
    cfg: ReconConfig,
) -> Tuple[ComplexGrid, SampleTrace]:
    """Baseline: reverse DDIM from pure noise with per-step null-space projection.

    ``cfg.dc_iters`` repeats the projection within each step; with multiple
    coils a single pass only approximates exact k-space replacement, and a
    few iterations tighten it toward the pseudo-inverse solution.
    """
    rng = np.random.default_rng(cfg.seed)
    trace = SampleTrace()
    x0n, y_n, params = _prepare(y, op, cfg)
    x = rng.standard_normal(to_pseudo_real(x0n).shape)

    plan = uniform_plan(s, cfg.reverse_steps, cfg.resolve_t_start(s), cfg.eta)
    result = None
    for i, t in enumerate(plan.steps):
        t = int(t)
        eps_hat = den.eps(x, t)
        trace.nfe += 1
        x0_hat = _clip(estimate_x0(x, t, eps_hat, s), cfg.clip_x0)
        g0 = from_pseudo_real(x0_hat)
        g_pr = g0
        for _ in range(cfg.dc_iters):
            g_pr = ddnm_project(g_pr, y_n, op)
        if not np.isfinite(g_pr.data).all():
            raise DivergenceError(f"non-finite estimate at t={t}", trace)
        resid = float(np.linalg.norm((g0.data - g_pr.data)))
        trace.record(i, t, resid, float("nan"), float(np.linalg.norm(g_pr.data)))
        if i == len(plan.steps) - 1:
            result = g_pr
            break
        x0_used = to_pseudo_real(g_pr)
        x = ddim_update(x0_used, implied_eps(x, x0_used, t, s), t,
                        int(plan.steps[i + 1]), s, cfg.eta, rng)
    return _finish(result, params), trace
