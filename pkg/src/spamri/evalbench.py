"""Synthetic phantoms, acquisition simulation, and the benchmark runner."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import load_config
from .denoiser import TinyDenoiser, load_weights
from .encoding import CoilSensitivities, EncodingOperator, KSpaceData, forward, gen_coil_maps, zero_filled
from .grid import ComplexGrid
from .masks import SamplingMask, gen_gaussian_mask, gen_radial_mask, gen_uniform_mask
from .metrics import magnitude_01, psnr, ssim
from .sampler import FrequencyWeights, ReconConfig, ddnm_sample, spa_mri_sample
from .schedule import cosine_schedule


@dataclass(frozen=True)
class Phantom:
    """Synthetic test image plus the parameters that regenerate it."""

    image: ComplexGrid
    descriptor: dict


def gen_phantom(h: int, w: int, seed: int, n_ellipses: int = 8) -> Phantom:
    """Random overlapping ellipses with a smooth complex phase ramp.

    Magnitude is clipped to be non-negative and scaled to peak at 1.
    """
    if h < 16 or w < 16:
        raise ValueError("phantom dims must be at least 16")
    rng = np.random.default_rng(seed)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    acc = np.zeros((h, w))
    for _ in range(n_ellipses):
        cy = rng.uniform(0.2 * h, 0.8 * h)
        cx = rng.uniform(0.2 * w, 0.8 * w)
        ay = rng.uniform(0.08, 0.35) * h
        ax = rng.uniform(0.08, 0.35) * w
        th = rng.uniform(0, np.pi)
        amp = rng.uniform(-0.5, 1.0)
        yr = (rows - cy) * np.cos(th) + (cols - cx) * np.sin(th)
        xr = -(rows - cy) * np.sin(th) + (cols - cx) * np.cos(th)
        acc += amp * ((yr / ay) ** 2 + (xr / ax) ** 2 <= 1.0)
    mag = np.clip(acc, 0.0, None)
    if mag.max() > 0:
        mag = mag / mag.max()
    py, px = rng.uniform(-0.05, 0.05, size=2)
    phase = 2 * np.pi * (py * rows / h + px * cols / w)
    img = mag * np.exp(1j * phase)
    desc = {"h": h, "w": w, "seed": seed, "n_ellipses": n_ellipses}
    return Phantom(ComplexGrid(img[None]), desc)


def simulate_acquisition(
    ph: Phantom, coils: CoilSensitivities, mask: SamplingMask, seed: int = 0
) -> KSpaceData:
    """Noiseless forward acquisition of a phantom; seed reserved for future noise."""
    op = EncodingOperator(mask, coils)
    return forward(op, ph.image)


@dataclass
class BenchReport:
    """Rows of per-cell results mirroring the comparison-table layout."""

    rows: List[dict] = field(default_factory=list)

    COLUMNS = ["method", "pattern", "accel", "seed", "psnr_db", "ssim", "nfe", "seconds"]

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as f:
            wr = csv.DictWriter(f, fieldnames=self.COLUMNS + ["status"])
            wr.writeheader()
            for row in self.rows:
                wr.writerow(row)


def make_mask(pattern: str, h: int, w: int, accel: float, acs: int, seed: int) -> SamplingMask:
    if pattern == "gaussian":
        return gen_gaussian_mask(h, w, accel, acs, seed)
    if pattern == "uniform":
        return gen_uniform_mask(h, w, accel, acs)
    if pattern == "radial":
        return gen_radial_mask(h, w, accel, seed)
    raise ValueError(f"unknown sampling pattern {pattern!r}")


def _save_panel(path, truth: np.ndarray, recon: np.ndarray, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    err = np.abs(truth - recon) * 5.0  # amplified error map
    fig, axes = plt.subplots(1, 3, figsize=(9, 3))
    for ax, img, name in zip(axes, [truth, recon, err], ["ground truth", title, "error x5"]):
        ax.imshow(img, cmap="gray", vmin=0, vmax=1)
        ax.set_title(name, fontsize=9)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def run_cell(cell: dict) -> List[dict]:
    """Run all methods for one (pattern, accel, seed) cell; returns report rows."""
    h, w = cell["h"], cell["w"]
    pattern, accel, seed = cell["pattern"], cell["accel"], cell["seed"]
    sched = cosine_schedule(cell["T"])
    ph = gen_phantom(h, w, seed, cell["n_ellipses"])
    coils = gen_coil_maps(cell["n_coils"], h, w, cell["coil_seed"])
    mask = make_mask(pattern, h, w, accel, cell["acs"], seed)
    op = EncodingOperator(mask, coils)
    y = simulate_acquisition(ph, coils, mask)
    truth = magnitude_01(ph.image)[0]

    den = None
    if cell.get("weights"):
        den = TinyDenoiser(load_weights(cell["weights"]))

    fw = FrequencyWeights(cell["lambda_low"], cell["lambda_high"], (cell["center"], cell["center"]))
    cfg = ReconConfig(
        reverse_steps=cell["reverse_steps"],
        inversion_steps=cell["inversion_steps"],
        eta=cell["eta"],
        seed=seed,
        xi=cell["xi"],
        clip_x0=cell.get("clip_x0"),
        dc_iters=cell.get("dc_iters", 1),
        freq_weights=fw,
    )

    rows = []
    outdir = Path(cell["outdir"]) if cell.get("outdir") else None
    for method in cell["methods"]:
        t0 = time.perf_counter()
        status = "ok"
        try:
            if method == "zero-filled":
                recon, nfe = zero_filled(op, y), 0
            elif method == "ddnm":
                recon, trace = ddnm_sample(y, op, den, sched, cfg)
                nfe = trace.nfe
            elif method == "spa":
                recon, trace = spa_mri_sample(y, op, den, sched, cfg)
                nfe = trace.nfe
            else:
                raise ValueError(f"unknown method {method!r}")
            rec = magnitude_01(recon)[0]
            row_psnr, row_ssim = psnr(rec, truth), ssim(rec, truth)
        except Exception:
            status, rec = "failed", None
            row_psnr, row_ssim, nfe = float("nan"), float("nan"), -1
        seconds = time.perf_counter() - t0
        if outdir is not None and rec is not None:
            _save_panel(outdir / f"{pattern}_R{accel}_seed{seed}_{method}.png", truth, rec, method)
        rows.append(
            dict(method=method, pattern=pattern, accel=accel, seed=seed,
                 psnr_db=row_psnr, ssim=row_ssim, nfe=nfe, seconds=round(seconds, 4),
                 status=status)
        )
    return rows


BENCH_DEFAULTS = {
    "bench.h": 64,
    "bench.w": 64,
    "bench.patterns": ["gaussian"],
    "bench.accels": [4],
    "bench.seeds": [0],
    "bench.methods": ["zero-filled", "ddnm", "spa"],
    "bench.n_coils": 4,
    "bench.coil_seed": 1234,
    "bench.acs": 16,
    "bench.n_ellipses": 8,
    "bench.weights": "",
    "bench.out": "bench_out",
    "bench.workers": 1,
    "schedule.T": 1000,
    "sampler.reverse_steps": 100,
    "sampler.inversion_steps": 25,
    "sampler.eta": 0.0,
    "sampler.clip_x0": 1.0,
    "sampler.dc_iters": 1,
    "consistency.xi": 3.0,
    "consistency.lambda_low": 0.4,
    "consistency.lambda_high": 0.6,
    "consistency.center": 32,
}


def _as_list(v):
    return v if isinstance(v, list) else [v]


def run_benchmark(cfg_path) -> BenchReport:
    """Run the method-comparison grid described by a config file.

    Writes ``report.csv`` plus per-case PNG panels into ``bench.out``; cells
    are independent and may run in a process pool, merged in config order.
    """
    cfg = dict(BENCH_DEFAULTS)
    cfg.update(load_config(cfg_path))
    outdir = Path(cfg["bench.out"])
    outdir.mkdir(parents=True, exist_ok=True)

    cells = []
    for pattern in _as_list(cfg["bench.patterns"]):
        for accel in _as_list(cfg["bench.accels"]):
            for seed in _as_list(cfg["bench.seeds"]):
                cells.append(
                    dict(
                        h=cfg["bench.h"], w=cfg["bench.w"], pattern=pattern,
                        accel=accel, seed=seed, acs=cfg["bench.acs"],
                        n_coils=cfg["bench.n_coils"], coil_seed=cfg["bench.coil_seed"],
                        n_ellipses=cfg["bench.n_ellipses"],
                        methods=_as_list(cfg["bench.methods"]),
                        weights=cfg["bench.weights"] or None,
                        T=cfg["schedule.T"],
                        reverse_steps=cfg["sampler.reverse_steps"],
                        inversion_steps=cfg["sampler.inversion_steps"],
                        eta=cfg["sampler.eta"], xi=cfg["consistency.xi"],
                        clip_x0=(float(cfg["sampler.clip_x0"]) or None),
                        dc_iters=int(cfg["sampler.dc_iters"]),
                        lambda_low=cfg["consistency.lambda_low"],
                        lambda_high=cfg["consistency.lambda_high"],
                        center=cfg["consistency.center"], outdir=str(outdir),
                    )
                )

    workers = int(cfg["bench.workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(run_cell, cells))
    else:
        per_cell = [run_cell(c) for c in cells]

    report = BenchReport([row for rows in per_cell for row in rows])
    report.to_csv(outdir / "report.csv")
    return report
