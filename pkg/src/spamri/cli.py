"""Command-line entry point wiring all modules together.

Subcommands: phantom, mask, coils, acquire, train, reconstruct, eval, bench.
Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import cxg
from .config import format_config, load_config
from .denoiser import TinyDenoiser, load_weights, save_weights, train_tiny_denoiser
from .encoding import CoilSensitivities, EncodingOperator, KSpaceData, gen_coil_maps, zero_filled
from .evalbench import gen_phantom, make_mask, run_benchmark, simulate_acquisition
from .grid import ComplexGrid, to_pseudo_real
from .masks import SamplingMask, effective_acceleration
from .metrics import magnitude_01, psnr, ssim
from .sampler import FrequencyWeights, ReconConfig, ddnm_sample, spa_mri_sample
from .schedule import cosine_schedule, linear_schedule


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


SAMPLER_DEFAULTS = {
    "schedule.type": "cosine",
    "schedule.T": 4000,
    "sampler.reverse_steps": 200,
    "sampler.inversion_steps": 25,
    "sampler.eta": 0.0,
    "sampler.inversion_noise_scale": 1.0,
    "sampler.clip_x0": 1.0,  # 0 disables clean-estimate clamping
    "sampler.t_start": -1,  # -1 means T - 1
    "sampler.dc_iters": 1,
    "consistency.xi": 3.0,
    "consistency.lambda_low": 0.4,
    "consistency.lambda_high": 0.6,
    "consistency.center": 32,
    "consistency.omega_form": "half-tanh",
}


def _schedule_from(cfg: dict):
    T = int(cfg["schedule.T"])
    if cfg["schedule.type"] == "cosine":
        return cosine_schedule(T)
    if cfg["schedule.type"] == "linear":
        return linear_schedule(T)
    raise ValueError(f"unknown schedule type {cfg['schedule.type']!r}")


def _recon_config(cfg: dict, seed: int) -> ReconConfig:
    fw = FrequencyWeights(
        float(cfg["consistency.lambda_low"]),
        float(cfg["consistency.lambda_high"]),
        (int(cfg["consistency.center"]), int(cfg["consistency.center"])),
    )
    return ReconConfig(
        reverse_steps=int(cfg["sampler.reverse_steps"]),
        inversion_steps=int(cfg["sampler.inversion_steps"]),
        eta=float(cfg["sampler.eta"]),
        inversion_noise_scale=float(cfg["sampler.inversion_noise_scale"]),
        seed=seed,
        xi=float(cfg["consistency.xi"]),
        clip_x0=(float(cfg["sampler.clip_x0"]) or None),
        t_start=(None if int(cfg["sampler.t_start"]) < 0 else int(cfg["sampler.t_start"])),
        dc_iters=int(cfg["sampler.dc_iters"]),
        freq_weights=fw,
        omega_form=str(cfg["consistency.omega_form"]),
    )


def _merged_config(args) -> dict:
    cfg = dict(SAMPLER_DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(load_config(args.config))
    overrides = {
        "sampler.reverse_steps": getattr(args, "reverse_steps", None),
        "sampler.inversion_steps": getattr(args, "inversion_steps", None),
        "sampler.eta": getattr(args, "eta", None),
        "schedule.T": getattr(args, "T", None),
        "consistency.xi": getattr(args, "xi", None),
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def _build_parser() -> _Parser:
    p = _Parser(prog="spa-recon", description="Sampling-pattern-agnostic diffusion MRI reconstruction")
    sub = p.add_subparsers(dest="command")

    q = sub.add_parser("phantom", help="generate a synthetic phantom image")
    q.add_argument("--h", type=int, default=64)
    q.add_argument("--w", type=int, default=64)
    q.add_argument("--n-ellipses", type=int, default=8)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("-o", "--output", required=True)

    q = sub.add_parser("mask", help="generate an undersampling mask")
    q.add_argument("--pattern", choices=["gaussian", "uniform", "radial"], required=True)
    q.add_argument("--accel", type=float, required=True)
    q.add_argument("--acs", type=int, default=16)
    q.add_argument("--h", type=int, required=True)
    q.add_argument("--w", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("-o", "--output", required=True)

    q = sub.add_parser("coils", help="generate synthetic coil sensitivity maps")
    q.add_argument("--n-coils", type=int, default=4)
    q.add_argument("--h", type=int, required=True)
    q.add_argument("--w", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("-o", "--output", required=True)

    q = sub.add_parser("acquire", help="simulate undersampled multi-coil acquisition")
    q.add_argument("--image", required=True)
    q.add_argument("--mask", required=True)
    q.add_argument("--coils", required=True)
    q.add_argument("-o", "--output", required=True)

    q = sub.add_parser("train", help="train the tiny denoiser on generated phantoms")
    q.add_argument("--n-phantoms", type=int, default=200)
    q.add_argument("--h", type=int, default=64)
    q.add_argument("--w", type=int, default=64)
    q.add_argument("--epochs", type=int, default=100)
    q.add_argument("--lr", type=float, default=1e-4)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--T", type=int, default=None)
    q.add_argument("--config", default=None)
    q.add_argument("-o", "--output", required=True)

    q = sub.add_parser("reconstruct", help="reconstruct an image from k-space data")
    q.add_argument("--method", choices=["spa", "ddnm", "zero-filled"], required=True)
    q.add_argument("--kspace", required=True)
    q.add_argument("--mask", required=True)
    q.add_argument("--coils", required=True)
    q.add_argument("--weights", default=None)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--config", default=None)
    q.add_argument("--reverse-steps", type=int, default=None)
    q.add_argument("--inversion-steps", type=int, default=None)
    q.add_argument("--eta", type=float, default=None)
    q.add_argument("--xi", type=float, default=None)
    q.add_argument("--T", type=int, default=None)
    q.add_argument("--trace", default=None)
    q.add_argument("--print-config", action="store_true")
    q.add_argument("-o", "--output", required=True)

    q = sub.add_parser("eval", help="compute PSNR/SSIM of a reconstruction")
    q.add_argument("--recon", required=True)
    q.add_argument("--ref", required=True)

    q = sub.add_parser("bench", help="run the method-comparison benchmark")
    q.add_argument("--config", required=True)
    q.add_argument("--workers", type=int, default=None)
    return p


def _load_mask(path) -> SamplingMask:
    arr = cxg.load_cxg(path)
    return SamplingMask(arr.astype(bool))


def _cmd_phantom(args):
    ph = gen_phantom(args.h, args.w, args.seed, args.n_ellipses)
    cxg.save_cxg(args.output, ph.image.data.astype(np.complex64))


def _cmd_mask(args):
    m = make_mask(args.pattern, args.h, args.w, args.accel, args.acs, args.seed)
    cxg.save_cxg(args.output, m.keep.astype(np.uint8))
    print(f"effective acceleration: {effective_acceleration(m):.4f}")


def _cmd_coils(args):
    maps = gen_coil_maps(args.n_coils, args.h, args.w, args.seed)
    cxg.save_cxg(args.output, maps.maps.astype(np.complex64))


def _cmd_acquire(args):
    image = ComplexGrid(cxg.load_cxg(args.image))
    mask = _load_mask(args.mask)
    coils = CoilSensitivities(cxg.load_cxg(args.coils))
    op = EncodingOperator(mask, coils)
    from .encoding import forward

    cxg.save_cxg(args.output, forward(op, image).data.astype(np.complex64))


def _cmd_train(args):
    cfg = _merged_config(args)
    sched = _schedule_from(cfg)
    data = [
        to_pseudo_real(gen_phantom(args.h, args.w, args.seed + i).image)
        for i in range(args.n_phantoms)
    ]
    weights = train_tiny_denoiser(data, sched, args.epochs, args.lr, args.seed)
    save_weights(args.output, weights)
    if weights.epoch_losses:
        print(f"first-epoch loss {weights.epoch_losses[0]:.5f}, "
              f"final-epoch loss {weights.epoch_losses[-1]:.5f}")


def _cmd_reconstruct(args):
    cfg = _merged_config(args)
    if args.print_config:
        print(format_config(cfg))
    mask = _load_mask(args.mask)
    coils = CoilSensitivities(cxg.load_cxg(args.coils))
    op = EncodingOperator(mask, coils)
    y = KSpaceData(cxg.load_cxg(args.kspace), mask)

    if args.method == "zero-filled":
        recon, nfe = zero_filled(op, y), 0
        trace = None
    else:
        if not args.weights:
            raise ValueError(f"method {args.method!r} requires --weights")
        den = TinyDenoiser(load_weights(args.weights))
        sched = _schedule_from(cfg)
        rc = _recon_config(cfg, args.seed)
        sample = spa_mri_sample if args.method == "spa" else ddnm_sample
        recon, trace = sample(y, op, den, sched, rc)
        nfe = trace.nfe
    cxg.save_cxg(args.output, recon.data.astype(np.complex64))
    if args.trace and trace is not None:
        trace.to_csv(args.trace)
    print(f"nfe: {nfe}")


def _cmd_eval(args):
    recon = ComplexGrid(cxg.load_cxg(args.recon))
    ref = ComplexGrid(cxg.load_cxg(args.ref))
    a, b = magnitude_01(recon), magnitude_01(ref)
    print(f"psnr_db,{psnr(a, b):.4f}")
    print(f"ssim,{ssim(a, b):.6f}")


def _cmd_bench(args):
    report = run_benchmark(args.config)
    n_fail = sum(1 for r in report.rows if r["status"] != "ok")
    print(f"{len(report.rows)} rows, {n_fail} failed")


def dispatch(argv=None) -> int:
    threads = os.environ.get("SPA_RECON_THREADS")
    if threads:
        try:
            import torch

            torch.set_num_threads(int(threads))
        except ImportError:
            pass
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    handler = {
        "phantom": _cmd_phantom,
        "mask": _cmd_mask,
        "coils": _cmd_coils,
        "acquire": _cmd_acquire,
        "train": _cmd_train,
        "reconstruct": _cmd_reconstruct,
        "eval": _cmd_eval,
        "bench": _cmd_bench,
    }[args.command]
    try:
        handler(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2
    return 0


def main():
    raise SystemExit(dispatch())


if __name__ == "__main__":
    main()
