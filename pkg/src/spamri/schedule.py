"""Discrete variance-preserving noise schedules and DDIM step plans."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step beta/alpha coefficients and their cumulative product."""

    beta: np.ndarray
    alpha: np.ndarray = field(init=False)
    alpha_bar: np.ndarray = field(init=False)

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64, copy=True)
        if beta.ndim != 1 or beta.size < 2:
            raise ValueError("schedule needs at least two steps")
        if not ((beta > 0).all() and (beta < 1).all()):
            raise ValueError("beta values must lie in (0, 1)")
        if (np.diff(beta) < -1e-12).any():
            raise ValueError("beta must be nondecreasing")
        alpha = 1.0 - beta
        alpha_bar = np.cumprod(alpha)
        beta.setflags(write=False)
        alpha.setflags(write=False)
        alpha_bar.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def T(self) -> int:
        return self.beta.size


@dataclass(frozen=True)
class TimestepPlan:
    """Strictly decreasing reverse-sampling timesteps and the DDIM eta."""

    steps: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        steps = np.array(self.steps, dtype=np.int64, copy=True)
        if steps.ndim != 1 or steps.size < 1:
            raise ValueError("plan needs at least one step")
        if steps[-1] != 0:
            raise ValueError("plan must end at step 0")
        if (np.diff(steps) >= 0).any():
            raise ValueError("plan steps must be strictly decreasing")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)


def cosine_schedule(T: int) -> NoiseSchedule:
    """iDDPM-style cosine schedule with offset 0.008 and betas clipped at 0.999."""
    if T < 2:
        raise ValueError("schedule needs at least two steps")
    s = 0.008
    t = np.arange(T + 1, dtype=np.float64) / T
    f = np.cos((t + s) / (1 + s) * np.pi / 2) ** 2
    alpha_bar = f / f[0]
    beta = np.minimum(1.0 - alpha_bar[1:] / alpha_bar[:-1], 0.999)
    return NoiseSchedule(beta)


def linear_schedule(T: int, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linearly increasing betas; provided for ablations."""
    if T < 2:
        raise ValueError("schedule needs at least two steps")
    return NoiseSchedule(np.linspace(beta_start, beta_end, T))


def ddim_sigma(s: NoiseSchedule, t: int, t_prev: int, eta: float) -> float:
    """Stochasticity scale for one reverse step: eta * sqrt(beta_t * (1 - abar_prev) / (1 - abar_t))."""
    if not (0 <= t_prev < t < s.T):
        raise ValueError(f"need 0 <= t_prev < t < T, got t={t}, t_prev={t_prev}, T={s.T}")
    if eta == 0.0:
        return 0.0
    return float(
        eta * np.sqrt(s.beta[t] * (1.0 - s.alpha_bar[t_prev]) / (1.0 - s.alpha_bar[t]))
    )


def uniform_plan(s: NoiseSchedule, n_steps: int, t_start: int, eta: float = 0.0) -> TimestepPlan:
    """n_steps indices evenly spaced from t_start down to 0 inclusive."""
    if not (0 <= t_start < s.T):
        raise ValueError(f"t_start {t_start} out of range for T={s.T}")
    if not (1 <= n_steps <= t_start + 1):
        raise ValueError(f"cannot place {n_steps} steps on [0, {t_start}]")
    steps = np.floor(np.linspace(0, t_start, n_steps)).astype(np.int64)
    return TimestepPlan(steps[::-1], eta)
