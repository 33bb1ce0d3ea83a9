import numpy as np
import pytest

import spamri as sp
from spamri.sampler import ddim_update

from conftest import random_grid, random_mask, unit_coil


@pytest.fixture(scope="module")
def sched():
    return sp.cosine_schedule(200)


@pytest.fixture
def gauss_den(sched, rng):
    prior = sp.GaussianPrior(rng.standard_normal((2, 16, 16)), 0.5)
    return sp.AnalyticGaussianDenoiser(prior, sched)


def test_recon_config_validation():
    with pytest.raises(ValueError):
        sp.ReconConfig(reverse_steps=0)
    with pytest.raises(ValueError):
        sp.ReconConfig(inversion_steps=-1)
    with pytest.raises(ValueError):
        sp.ReconConfig(inversion_noise_scale=1.5)
    with pytest.raises(ValueError):
        sp.ReconConfig(eta=-0.1)
    with pytest.raises(ValueError):
        sp.ReconConfig(xi=-1.0)


def test_resolve_t_start(sched):
    assert sp.ReconConfig().resolve_t_start(sched) == 199
    assert sp.ReconConfig(t_start=42).resolve_t_start(sched) == 42


def test_implied_eps_identity_when_unmodified(sched, rng):
    # with the unmodified Tweedie estimate, the implied noise equals the
    # prediction that produced it
    x_t = rng.standard_normal((2, 8, 8))
    eps = rng.standard_normal((2, 8, 8))
    t = 120
    x0 = sp.estimate_x0(x_t, t, eps, sched)
    np.testing.assert_allclose(sp.implied_eps(x_t, x0, t, sched), eps, atol=1e-10)


def test_ddim_update_deterministic_matches_formula(sched, rng):
    x0 = rng.standard_normal((2, 8, 8))
    eps = rng.standard_normal((2, 8, 8))
    out = ddim_update(x0, eps, 100, 80, sched, 0.0, None)
    ab = sched.alpha_bar[80]
    np.testing.assert_allclose(out, np.sqrt(ab) * x0 + np.sqrt(1 - ab) * eps, atol=1e-12)


def test_ddim_reverse_step_exact_data(sched, rng):
    # feeding a perfectly noised sample with the exact-prior denoiser walks
    # back towards the prior mean without exploding
    mean = rng.standard_normal((2, 8, 8))
    den = sp.AnalyticGaussianDenoiser(sp.GaussianPrior(mean, 1e-4), sched)
    t = 150
    ab = sched.alpha_bar[t]
    x_t = np.sqrt(ab) * mean + np.sqrt(1 - ab) * rng.standard_normal(mean.shape)
    out = sp.ddim_reverse_step(x_t, t, 100, den, sched, 0.0, rng)
    abp = sched.alpha_bar[100]
    # the deterministic update should keep the sample near its marginal scale
    assert np.linalg.norm(out - np.sqrt(abp) * mean) < np.linalg.norm(x_t - np.sqrt(ab) * mean) + 1e-6


def test_naive_forward_validates_order(sched, gauss_den, rng):
    x = rng.standard_normal((2, 16, 16))
    with pytest.raises(ValueError):
        sp.ddim_forward_naive(x, 50, 50, gauss_den, sched)
    with pytest.raises(ValueError):
        sp.ddim_forward_naive(x, 50, 20, gauss_den, sched)
    out = sp.ddim_forward_naive(x, 20, 50, gauss_den, sched)
    assert out.shape == x.shape


def test_dai_forward_reduces_to_naive_at_zero_noise(sched, gauss_den, rng):
    x = rng.standard_normal((2, 16, 16))
    naive = sp.ddim_forward_naive(x, 20, 50, gauss_den, sched)
    dai = sp.dai_forward_step(x, 20, 50, gauss_den, sched, 0.0, rng)
    np.testing.assert_allclose(dai, naive, atol=1e-12)


def test_dai_forward_noise_seeded(sched, gauss_den, rng):
    x = rng.standard_normal((2, 16, 16))
    a = sp.dai_forward_step(x, 20, 50, gauss_den, sched, 1.0, np.random.default_rng(3))
    b = sp.dai_forward_step(x, 20, 50, gauss_den, sched, 1.0, np.random.default_rng(3))
    c = sp.dai_forward_step(x, 20, 50, gauss_den, sched, 1.0, np.random.default_rng(4))
    np.testing.assert_array_equal(a, b)
    assert (a != c).any()


def test_invert_zero_steps_is_pure_noise(sched, gauss_den, rng):
    g = random_grid(rng)
    cfg = sp.ReconConfig(inversion_steps=0, seed=9)
    out = sp.invert(g, cfg, gauss_den, sched)
    expect = np.random.default_rng(9).standard_normal((2, 16, 16))
    np.testing.assert_array_equal(out, expect)


def test_invert_marginal_scale(sched, gauss_den, rng):
    # inversion output should sit near the t_start marginal, i.e. roughly
    # unit-variance noise for small alpha_bar
    g = random_grid(rng)
    cfg = sp.ReconConfig(inversion_steps=20, seed=0)
    out = sp.invert(g, cfg, gauss_den, sched)
    rms = np.sqrt(np.mean(out**2))
    assert 0.5 < rms < 2.5


def make_problem(rng, den_mean, h=16, w=16):
    mask = random_mask(rng, h, w)
    op = sp.EncodingOperator(mask, unit_coil(h, w))
    truth = sp.from_pseudo_real(den_mean)
    return op, sp.forward(op, truth)


def test_spa_sample_runs_and_traces(sched, rng):
    mean = rng.standard_normal((2, 16, 16))
    den = sp.AnalyticGaussianDenoiser(sp.GaussianPrior(mean, 1e-4), sched)
    op, y = make_problem(rng, mean)
    cfg = sp.ReconConfig(reverse_steps=30, inversion_steps=5, seed=0, normalize_input=False)
    out, trace = sp.spa_mri_sample(y, op, den, sched, cfg)
    assert out.shape == (1, 16, 16)
    assert trace.nfe == 35
    assert len(trace.rows) == 35
    # reverse-phase rows carry finite residual norms and weights
    rev = [r for r in trace.rows if r[0] >= 0]
    assert len(rev) == 30
    assert all(np.isfinite(r[2]) and np.isfinite(r[3]) for r in rev)


def test_spa_sample_deterministic(sched, rng):
    mean = rng.standard_normal((2, 16, 16))
    den = sp.AnalyticGaussianDenoiser(sp.GaussianPrior(mean, 1e-3), sched)
    op, y = make_problem(rng, mean)
    cfg = sp.ReconConfig(reverse_steps=20, inversion_steps=5, seed=3)
    a, _ = sp.spa_mri_sample(y, op, den, sched, cfg)
    b, _ = sp.spa_mri_sample(y, op, den, sched, cfg)
    np.testing.assert_array_equal(a.data, b.data)


def test_ddnm_sample_counts_nfe(sched, rng):
    mean = rng.standard_normal((2, 16, 16))
    den = sp.CountingDenoiser(sp.AnalyticGaussianDenoiser(sp.GaussianPrior(mean, 1e-3), sched))
    op, y = make_problem(rng, mean)
    cfg = sp.ReconConfig(reverse_steps=25, seed=0)
    out, trace = sp.ddnm_sample(y, op, den, sched, cfg)
    assert trace.nfe == 25 == den.calls


def test_trace_csv(tmp_path, sched, rng):
    mean = rng.standard_normal((2, 16, 16))
    den = sp.AnalyticGaussianDenoiser(sp.GaussianPrior(mean, 1e-3), sched)
    op, y = make_problem(rng, mean)
    cfg = sp.ReconConfig(reverse_steps=10, inversion_steps=2, seed=0)
    _, trace = sp.spa_mri_sample(y, op, den, sched, cfg)
    p = tmp_path / "trace.csv"
    trace.to_csv(p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "step_index,t,delta,omega,x0_norm,cum_nfe"
    assert len(lines) == 13


def test_clip_bounds_x0(sched, rng):
    # with an aggressive clip the recorded clean estimates stay bounded
    mean = rng.standard_normal((2, 16, 16))
    den = sp.AnalyticGaussianDenoiser(sp.GaussianPrior(mean, 1.0), sched)
    op, y = make_problem(rng, mean)
    cfg = sp.ReconConfig(reverse_steps=20, seed=0, xi=0.0, clip_x0=1.0, normalize_input=False)
    out, _ = sp.spa_mri_sample(y, op, den, sched, cfg)
    assert np.abs(sp.to_pseudo_real(out)).max() <= 1.0 + 1e-9


def test_ddnm_dc_iters_tightens_multicoil_consistency(sched, rng):
    # with several coils one projection pass under-corrects; iterating it
    # shrinks the measured-k-space residual of the final estimate
    coils = sp.gen_coil_maps(4, 16, 16, seed=7)
    mask = random_mask(rng, 16, 16)
    op = sp.EncodingOperator(mask, coils)
    truth = sp.from_pseudo_real(rng.standard_normal((2, 16, 16)))
    y = sp.forward(op, truth)
    mean = rng.standard_normal((2, 16, 16))
    den = sp.AnalyticGaussianDenoiser(sp.GaussianPrior(mean, 1e-3), sched)

    def resid(n):
        cfg = sp.ReconConfig(reverse_steps=20, seed=0, dc_iters=n, normalize_input=False)
        out, _ = sp.ddnm_sample(y, op, den, sched, cfg)
        return np.linalg.norm(sp.forward(op, out).data[..., mask.keep] - y.data[..., mask.keep])

    r1, r5 = resid(1), resid(5)
    assert r5 < r1


def test_dc_iters_validated():
    with pytest.raises(ValueError):
        sp.ReconConfig(dc_iters=0)
