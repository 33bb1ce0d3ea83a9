import numpy as np
import pytest

import spamri as sp

from conftest import random_grid, random_mask, unit_coil


def make_problem(rng, h=16, w=16, n_coils=4):
    coils = sp.gen_coil_maps(n_coils, h, w, int(rng.integers(1 << 30)))
    mask = random_mask(rng, h, w)
    op = sp.EncodingOperator(mask, coils)
    truth = random_grid(rng, h=h, w=w)
    return op, truth, sp.forward(op, truth)


def test_residual_zero_at_truth(rng):
    op, truth, y = make_problem(rng)
    r = sp.residual(truth, y, op)
    np.testing.assert_allclose(r.data, 0, atol=1e-12)


def test_freq_decompose_identity_weights(rng):
    op, truth, y = make_problem(rng)
    r = sp.residual(random_grid(rng), y, op)
    w = sp.FrequencyWeights(1.0, 1.0, (8, 8))
    np.testing.assert_array_equal(sp.freq_decompose(r, w).data, r.data)


def test_freq_decompose_norm_identity(rng):
    """||D||^2 = l1^2 ||low||^2 + l2^2 ||high||^2 on the disjoint regions."""
    op, truth, y = make_problem(rng)
    r = sp.residual(random_grid(rng), y, op)
    l1, l2 = 0.4, 0.6
    w = sp.FrequencyWeights(l1, l2, (8, 8))
    d = sp.freq_decompose(r, w)
    h, wd = r.data.shape[-2:]
    sel = np.zeros((h, wd), dtype=bool)
    sel[(h - 8) // 2 : (h + 8) // 2, (wd - 8) // 2 : (wd + 8) // 2] = True
    low = np.linalg.norm(r.data[..., sel]) ** 2
    high = np.linalg.norm(r.data[..., ~sel]) ** 2
    expect = l1**2 * low + l2**2 * high
    assert np.linalg.norm(d.data) ** 2 == pytest.approx(expect, rel=1e-10)


def test_freq_decompose_center_block_clamped(rng):
    # a center block larger than the grid degrades to all-low weighting
    op, truth, y = make_problem(rng, h=8, w=8)
    r = sp.residual(random_grid(rng, h=8, w=8), y, op)
    w = sp.FrequencyWeights(0.4, 0.6, (32, 32))
    np.testing.assert_allclose(sp.freq_decompose(r, w).data, 0.4 * r.data, atol=1e-12)


def test_adaptive_weight_neutral_point():
    st = sp.ConsistencyState(xi=3.0, delta_prev=1.0, delta_curr=1.0)
    assert sp.adaptive_weight(st) == 3.0


def test_adaptive_weight_limits():
    up = sp.ConsistencyState(3.0, 25.0, 0.0)  # residual dropped a lot
    dn = sp.ConsistencyState(3.0, 0.0, 25.0)
    assert sp.adaptive_weight(up) == pytest.approx(4.5, abs=1e-6)
    assert sp.adaptive_weight(dn) == pytest.approx(1.5, abs=1e-6)


def test_adaptive_weight_full_range_form():
    assert sp.adaptive_weight(sp.ConsistencyState(3.0, 0.0, 0.0), "full-range") == 1.5
    assert sp.adaptive_weight(sp.ConsistencyState(3.0, 25.0, 0.0), "full-range") == pytest.approx(3.0, abs=1e-6)
    with pytest.raises(ValueError):
        sp.adaptive_weight(sp.ConsistencyState(3.0), "bogus")


def test_consistency_state_validation():
    with pytest.raises(ValueError):
        sp.ConsistencyState(0.0)
    with pytest.raises(ValueError):
        sp.ConsistencyState(1.0, float("nan"), 0.0)


def test_backproject_reduces_residual(rng):
    op, truth, y = make_problem(rng)
    guess = random_grid(rng)
    w = sp.FrequencyWeights(0.4, 0.6, (8, 8))
    st = sp.ConsistencyState(1.0, 0.0, 0.0)
    before = np.linalg.norm(sp.residual(guess, y, op).data)
    out, delta = sp.backproject_adaptive(guess, y, op, w, st)
    after = np.linalg.norm(sp.residual(out, y, op).data)
    assert after < before
    assert delta > 0


def test_backproject_fixed_point_at_truth(rng):
    op, truth, y = make_problem(rng)
    w = sp.FrequencyWeights(0.4, 0.6, (8, 8))
    out, delta = sp.backproject_adaptive(truth, y, op, w, sp.ConsistencyState(3.0))
    np.testing.assert_allclose(out.data, truth.data, atol=1e-10)
    assert delta == pytest.approx(0.0, abs=1e-10)


def test_ddnm_exact_replacement_unit_coil(rng):
    # single unit coil: projection replaces measured k-space with y exactly
    for h, w in ((8, 8), (16, 12), (32, 32)):
        mask = random_mask(rng, h, w)
        op = sp.EncodingOperator(mask, unit_coil(h, w))
        truth = random_grid(rng, h=h, w=w)
        y = sp.forward(op, truth)
        guess = random_grid(rng, h=h, w=w)
        out = sp.ddnm_project(guess, y, op)
        k = sp.fft2c(out.data)[0]
        np.testing.assert_allclose(k[mask.keep], y.data[0, 0][mask.keep], atol=1e-10)
        # unmeasured frequencies untouched
        gk = sp.fft2c(guess.data)[0]
        np.testing.assert_allclose(k[~mask.keep], gk[~mask.keep], atol=1e-10)


def test_dps_gradient_matches_finite_differences(rng):
    """Central-difference oracle for the analytic-prior likelihood gradient."""
    sched = sp.cosine_schedule(100)
    for _ in range(20):
        coils = sp.gen_coil_maps(2, 16, 16, int(rng.integers(1 << 30)))
        mask = random_mask(rng)
        op = sp.EncodingOperator(mask, coils)
        truth = random_grid(rng)
        y = sp.forward(op, truth)
        prior = sp.GaussianPrior(rng.standard_normal((2, 16, 16)), 0.5)
        t = int(rng.integers(5, 95))
        x_t = rng.standard_normal((2, 16, 16))
        grad = sp.dps_gradient(prior, x_t, t, y, op, sched)

        def loss(x):
            ab = sched.alpha_bar[t]
            mv = ab * prior.var + 1 - ab
            score = -(x - np.sqrt(ab) * prior.mean) / mv
            x0 = (x + (1 - ab) * score) / np.sqrt(ab)
            r = sp.residual(sp.from_pseudo_real(x0), y, op)
            return float(np.linalg.norm(r.data) ** 2)

        # spot-check a handful of coordinates
        idx = [tuple(rng.integers(0, s) for s in x_t.shape) for _ in range(3)]
        eps = 1e-5
        for i in idx:
            xp, xm = x_t.copy(), x_t.copy()
            xp[i] += eps
            xm[i] -= eps
            fd = (loss(xp) - loss(xm)) / (2 * eps)
            assert grad[i] == pytest.approx(fd, rel=1e-4, abs=1e-7)
