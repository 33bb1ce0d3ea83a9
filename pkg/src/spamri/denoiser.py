"""Noise predictors: the Tweedie x0 estimate, score conversion, an analytic
Gaussian-prior denoiser used as a testing oracle, and a small trainable
convolutional denoiser.

Every denoiser follows the same contract: ``eps(x_t, t)`` maps a pseudo-real
stack (channels, H, W) to a same-shaped noise prediction, deterministically
for fixed weights.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .schedule import NoiseSchedule

WEIGHTS_MAGIC = b"SPAW"
WEIGHTS_VERSION = 1


class Denoiser(Protocol):
    def eps(self, x_t: np.ndarray, t: int) -> np.ndarray: ...


def estimate_x0(
    x_t: np.ndarray, t: int, eps_hat: np.ndarray, s: NoiseSchedule
) -> np.ndarray:
    """Tweedie estimate of the clean stack: (x_t - sqrt(1-abar_t) eps) / sqrt(abar_t)."""
    if not (0 <= t < s.T):
        raise ValueError(f"timestep {t} out of range for T={s.T}")
    ab = s.alpha_bar[t]
    return (x_t - np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(ab)


def score_from_eps(eps_hat: np.ndarray, t: int, s: NoiseSchedule) -> np.ndarray:
    """Convert a noise prediction to the marginal score: -eps / sqrt(1-abar_t)."""
    if not (0 <= t < s.T):
        raise ValueError(f"timestep {t} out of range for T={s.T}")
    ab = s.alpha_bar[t]
    if 1.0 - ab == 0.0:
        raise ValueError("degenerate conversion: alpha_bar == 1")
    return -eps_hat / np.sqrt(1.0 - ab)


def eps_from_score(score: np.ndarray, t: int, s: NoiseSchedule) -> np.ndarray:
    """Inverse of :func:`score_from_eps`."""
    return -np.sqrt(1.0 - s.alpha_bar[t]) * score


@dataclass(frozen=True)
class GaussianPrior:
    """Diagonal Gaussian over pseudo-real elements; the oracle prior."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        var = np.broadcast_to(np.asarray(self.var, dtype=np.float64), mean.shape).copy()
        if (var <= 0).any():
            raise ValueError("prior variances must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)


def analytic_gaussian_eps(
    prior: GaussianPrior, x_t: np.ndarray, t: int, s: NoiseSchedule
) -> np.ndarray:
    """Exact noise prediction for a diagonal Gaussian prior.

    The noised marginal is N(sqrt(abar) mean, abar var + (1 - abar)); its
    score at x_t is converted to eps form.
    """
    ab = s.alpha_bar[t]
    marg_var = ab * prior.var + (1.0 - ab)
    score = -(x_t - np.sqrt(ab) * prior.mean) / marg_var
    return -np.sqrt(1.0 - ab) * score


class AnalyticGaussianDenoiser:
    """Denoiser-protocol wrapper around :func:`analytic_gaussian_eps`."""

    def __init__(self, prior: GaussianPrior, schedule: NoiseSchedule):
        self.prior = prior
        self.schedule = schedule

    def eps(self, x_t: np.ndarray, t: int) -> np.ndarray:
        return analytic_gaussian_eps(self.prior, x_t, t, self.schedule)


class CountingDenoiser:
    """Wrapper that counts eps evaluations; used to audit NFE reporting."""

    def __init__(self, inner: Denoiser):
        self.inner = inner
        self.calls = 0

    def eps(self, x_t: np.ndarray, t: int) -> np.ndarray:
        self.calls += 1
        return self.inner.eps(x_t, t)


# --- tiny trainable denoiser -------------------------------------------------


@dataclass
class TinyDenoiserWeights:
    """Named parameter arrays of the small conv denoiser plus its meta config."""

    in_channels: int
    base_width: int
    T: int
    params: dict = field(default_factory=dict)  # name -> float32 ndarray
    epoch_losses: list = field(default_factory=list)  # not serialized

    def n_params(self) -> int:
        return sum(int(np.prod(v.shape)) for v in self.params.values())


def _build_net(in_channels: int, base_width: int):
    import torch
    from torch import nn

    w1, w2, w3, w4 = base_width, 2 * base_width, 4 * base_width, 4 * base_width
    temb_dim = 4 * base_width

    class TinyEpsNet(nn.Module):
        def __init__(self):
            super().__init__()
            act = nn.SiLU()
            self.act = act
            self.temb = nn.Sequential(nn.Linear(temb_dim, temb_dim), act, nn.Linear(temb_dim, temb_dim))
            self.proj = nn.ModuleList([nn.Linear(temb_dim, w) for w in (w1, w2, w3, w4)])
            self.conv_in = nn.Conv2d(in_channels, w1, 3, padding=1)
            self.enc1 = nn.Conv2d(w1, w1, 3, padding=1)
            self.down1 = nn.Conv2d(w1, w2, 3, stride=2, padding=1)
            self.enc2 = nn.Conv2d(w2, w2, 3, padding=1)
            self.down2 = nn.Conv2d(w2, w3, 3, stride=2, padding=1)
            self.enc3 = nn.Conv2d(w3, w3, 3, padding=1)
            self.down3 = nn.Conv2d(w3, w4, 3, stride=2, padding=1)
            self.mid = nn.Conv2d(w4, w4, 3, padding=1)
            self.up3 = nn.Conv2d(w4, w3, 3, padding=1)
            self.dec3 = nn.Conv2d(2 * w3, w3, 3, padding=1)
            self.up2 = nn.Conv2d(w3, w2, 3, padding=1)
            self.dec2 = nn.Conv2d(2 * w2, w2, 3, padding=1)
            self.up1 = nn.Conv2d(w2, w1, 3, padding=1)
            self.dec1 = nn.Conv2d(2 * w1, w1, 3, padding=1)
            self.conv_out = nn.Conv2d(w1, in_channels, 3, padding=1)

        def _embed(self, t: "torch.Tensor") -> "torch.Tensor":
            half = temb_dim // 2
            freqs = torch.exp(
                -np.log(10000.0) * torch.arange(half, dtype=torch.float64) / half
            ).to(t.dtype)
            ang = t[:, None] * freqs[None, :]
            return self.temb(torch.cat([torch.sin(ang), torch.cos(ang)], dim=1))

        def forward(self, x, t):
            emb = self._embed(t.float())

            def add(h, i):
                return h + self.proj[i](emb)[:, :, None, None]

            a = self.act
            h1 = a(self.conv_in(x))
            h1 = a(self.enc1(add(h1, 0)))
            h2 = a(self.down1(h1))
            h2 = a(self.enc2(add(h2, 1)))
            h3 = a(self.down2(h2))
            h3 = a(self.enc3(add(h3, 2)))
            h4 = a(self.down3(h3))
            h4 = a(self.mid(add(h4, 3)))
            u3 = torch.nn.functional.interpolate(h4, size=h3.shape[-2:], mode="nearest")
            u3 = a(self.dec3(torch.cat([a(self.up3(u3)), h3], dim=1)))
            u2 = torch.nn.functional.interpolate(u3, size=h2.shape[-2:], mode="nearest")
            u2 = a(self.dec2(torch.cat([a(self.up2(u2)), h2], dim=1)))
            u1 = torch.nn.functional.interpolate(u2, size=h1.shape[-2:], mode="nearest")
            u1 = a(self.dec1(torch.cat([a(self.up1(u1)), h1], dim=1)))
            return self.conv_out(u1)

    return TinyEpsNet()


def _weights_from_module(net, in_channels: int, base_width: int, T: int) -> TinyDenoiserWeights:
    params = {
        name: p.detach().cpu().numpy().astype(np.float32)
        for name, p in net.state_dict().items()
    }
    return TinyDenoiserWeights(in_channels, base_width, T, params)


def _module_from_weights(w: TinyDenoiserWeights):
    import torch

    net = _build_net(w.in_channels, w.base_width)
    state = {k: torch.from_numpy(np.asarray(v)) for k, v in w.params.items()}
    net.load_state_dict(state)
    net.eval()
    return net


def train_tiny_denoiser(
    dataset: list,
    s: NoiseSchedule,
    epochs: int,
    lr: float,
    seed: int,
    base_width: int = 16,
    batch_size: int = 8,
    ema_decay: float = 0.999,
) -> TinyDenoiserWeights:
    """Train the small denoiser with the standard noise-prediction MSE.

    Each training pair draws a uniform timestep and fresh Gaussian noise;
    optimization uses Adam starting at the given rate with cosine decay over
    the epochs.  The returned weights are an exponential moving average of
    the iterates (``ema_decay=0`` disables it).  Deterministic given the
    seed.
    """
    import torch

    if len(dataset) == 0:
        raise ValueError("empty training dataset")
    stacks = np.stack([np.asarray(d, dtype=np.float32) for d in dataset])
    in_channels = stacks.shape[1]

    torch.manual_seed(seed)
    net = _build_net(in_channels, base_width)
    weights = _weights_from_module(net, in_channels, base_width, s.T)
    if weights.n_params() > 2e6:
        raise RuntimeError("denoiser exceeds its parameter budget")
    if epochs == 0:
        return weights

    rng = np.random.default_rng(seed)
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    sched_lr = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=epochs)
    ema = {k: v.detach().clone() for k, v in net.state_dict().items()}
    abar = s.alpha_bar
    losses = []
    for _ in range(epochs):
        order = rng.permutation(len(stacks))
        epoch_loss = 0.0
        n_batches = 0
        for i in range(0, len(order), batch_size):
            idx = order[i : i + batch_size]
            x0 = torch.from_numpy(stacks[idx])
            t = rng.integers(0, s.T, size=len(idx))
            noise = rng.standard_normal(x0.shape).astype(np.float32)
            eps = torch.from_numpy(noise)
            ab = torch.from_numpy(abar[t].astype(np.float32))[:, None, None, None]
            x_t = torch.sqrt(ab) * x0 + torch.sqrt(1.0 - ab) * eps
            pred = net(x_t, torch.from_numpy(t))
            loss = torch.mean((pred - eps) ** 2)
            opt.zero_grad()
            loss.backward()
            opt.step()
            with torch.no_grad():
                for k, v in net.state_dict().items():
                    ema[k].mul_(ema_decay).add_(v, alpha=1.0 - ema_decay)
            epoch_loss += float(loss.detach())
            n_batches += 1
        sched_lr.step()
        losses.append(epoch_loss / n_batches)

    if ema_decay > 0:
        net.load_state_dict(ema)
    weights = _weights_from_module(net, in_channels, base_width, s.T)
    weights.epoch_losses = losses
    return weights


def tiny_denoiser_eps(w: TinyDenoiserWeights, x_t: np.ndarray, t: int) -> np.ndarray:
    """Single forward pass of the trained denoiser on one pseudo-real stack."""
    return TinyDenoiser(w).eps(x_t, t)


class TinyDenoiser:
    """Denoiser-protocol wrapper caching the torch module built from weights."""

    def __init__(self, weights: TinyDenoiserWeights):
        self.weights = weights
        self._net = _module_from_weights(weights)

    def eps(self, x_t: np.ndarray, t: int) -> np.ndarray:
        import torch

        x_t = np.asarray(x_t, dtype=np.float32)
        if x_t.ndim != 3 or x_t.shape[0] != self.weights.in_channels:
            raise ValueError(
                f"expected ({self.weights.in_channels}, H, W) stack, got {x_t.shape}"
            )
        h, w = x_t.shape[-2:]
        ph, pw = (-h) % 8, (-w) % 8  # grid must be divisible by the downsample factor
        x = torch.from_numpy(x_t)[None]
        if ph or pw:
            x = torch.nn.functional.pad(x, (0, pw, 0, ph), mode="reflect")
        with torch.no_grad():
            out = self._net(x, torch.tensor([t]))
        out = out[0, :, :h, :w].numpy().astype(np.float64)
        if not np.isfinite(out).all():
            raise FloatingPointError("denoiser produced non-finite output")
        return out


def save_weights(path, w: TinyDenoiserWeights) -> None:
    """Serialize weights in the sectioned SPAW binary format."""
    records = {"__meta__": np.array([w.in_channels, w.base_width, w.T], dtype=np.float32)}
    records.update(w.params)
    with open(path, "wb") as f:
        f.write(WEIGHTS_MAGIC)
        f.write(struct.pack("<H", WEIGHTS_VERSION))
        for name, arr in records.items():
            arr = np.ascontiguousarray(arr, dtype="<f4")
            raw = name.encode()
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<BB", 1, arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            f.write(arr.tobytes())


def load_weights(path) -> TinyDenoiserWeights:
    raw = Path(path).read_bytes()
    if raw[:4] != WEIGHTS_MAGIC:
        raise ValueError(f"{path}: not a SPAW weights file")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != WEIGHTS_VERSION:
        raise ValueError(f"{path}: unsupported weights version {version}")
    off = 6
    records = {}
    while off < len(raw):
        (nlen,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off : off + nlen].decode()
        off += nlen
        code, ndim = struct.unpack_from("<BB", raw, off)
        off += 2
        dims = struct.unpack_from(f"<{ndim}Q", raw, off)
        off += 8 * ndim
        n = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        records[name] = np.frombuffer(raw, dtype="<f4", count=n, offset=off).reshape(dims).copy()
        off += 4 * n
    meta = records.pop("__meta__")
    return TinyDenoiserWeights(int(meta[0]), int(meta[1]), int(meta[2]), records)
