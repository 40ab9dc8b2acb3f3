import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sosgen.metrics import (
    MetricInputError,
    abs_diff_display,
    evaluate_pair,
    frame_stability,
    mae,
    mape,
    region_rmse,
    rmse,
    ssim,
)


def const(shape, v):
    return np.full(shape, float(v))


# ---------------------------------------------------------------------------
# rmse / mae / mape closed-form oracles


def test_rmse_oracles():
    assert rmse(const((8, 8), 1500), const((8, 8), 1500)) == 0.0
    assert rmse(const((8, 8), 1500), const((8, 8), 1510)) == pytest.approx(10.0)
    assert rmse(np.array([1500.0, 1500.0]), np.array([1490.0, 1520.0])) == pytest.approx(
        np.sqrt(250.0)
    )
    assert np.sqrt(250.0) == pytest.approx(15.8113883, abs=1e-6)


def test_mae_mape_oracles():
    assert mae(const((4, 4), 1500), const((4, 4), 1500)) == 0.0
    assert mape(const((4, 4), 1500), const((4, 4), 1500)) == 0.0
    assert mae(const((4, 4), 1500), const((4, 4), 1515)) == pytest.approx(15.0)
    assert mape(const((4, 4), 1500), const((4, 4), 1515)) == pytest.approx(1.0)
    gt = np.array([1400.0, 1600.0])
    pred = np.array([1414.0, 1584.0])
    assert mae(gt, pred) == pytest.approx(15.0)
    assert mape(gt, pred) == pytest.approx(1.0)


def test_shape_mismatch_rejected():
    with pytest.raises(MetricInputError):
        rmse(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(MetricInputError):
        mape(np.zeros((2, 2)), np.zeros((2, 2)))  # zeros in gt


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rmse_at_least_mae(seed):
    rng = np.random.default_rng(seed)
    gt = 1500.0 + 50.0 * rng.standard_normal((16, 16))
    pred = gt + 20.0 * rng.standard_normal((16, 16))
    assert rmse(gt, pred) >= mae(gt, pred) >= 0.0


def test_rmse_mae_symmetric_mape_not():
    rng = np.random.default_rng(3)
    gt = 1500.0 + 50.0 * rng.standard_normal((16, 16))
    pred = 1500.0 + 50.0 * rng.standard_normal((16, 16))
    assert rmse(gt, pred) == rmse(pred, gt)
    assert mae(gt, pred) == mae(pred, gt)
    assert mape(gt, pred) != mape(pred, gt)


# ---------------------------------------------------------------------------
# SSIM


def test_ssim_identity():
    rng = np.random.default_rng(0)
    x = 1500.0 + 50.0 * rng.standard_normal((64, 64))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant_pair_matches_luminance_closed_form():
    a, b = 1450.0, 1550.0
    got = ssim(const((64, 64), a), const((64, 64), b))
    # zero-variance fields: only the luminance term survives
    c1 = (0.01 * 400.0) ** 2
    expected = (2 * a * b + c1) / (a * a + b * b + c1)
    assert got == pytest.approx(expected, rel=1e-9)


def test_ssim_degrades_with_noise():
    rng = np.random.default_rng(1)
    gt = 1500.0 + 50.0 * rng.standard_normal((64, 64))
    light = ssim(gt, gt + rng.standard_normal((64, 64)))
    heavy = ssim(gt, gt + 40.0 * rng.standard_normal((64, 64)))
    assert 1.0 > light > heavy


# ---------------------------------------------------------------------------
# display difference floor


def test_abs_diff_display_floor():
    gt = const((8, 8), 1500)
    np.testing.assert_array_equal(abs_diff_display(gt, gt), np.zeros((8, 8)))
    np.testing.assert_array_equal(
        abs_diff_display(gt, const((8, 8), 1529)), np.zeros((8, 8))
    )
    np.testing.assert_array_equal(
        abs_diff_display(gt, const((8, 8), 1531)), const((8, 8), 31)
    )


# ---------------------------------------------------------------------------
# region metrics


def test_region_rmse_oracles():
    gt = const((8, 8), 1500)
    mask = np.zeros((8, 8), dtype=bool)
    mask[2:5, 2:5] = True
    assert region_rmse(gt, gt, mask) == (0.0, 0.0)
    pred = gt.copy()
    pred[mask] += 10.0
    assert region_rmse(gt, pred, mask) == (pytest.approx(10.0), 0.0)
    checker = np.indices((8, 8)).sum(axis=0) % 2 == 0
    pred2 = gt.copy()
    pred2[checker] += 10.0
    pred2[~checker] += 20.0
    r_in, r_bg = region_rmse(gt, pred2, checker)
    assert (r_in, r_bg) == (pytest.approx(10.0), pytest.approx(20.0))


def test_region_rmse_recombination_identity():
    rng = np.random.default_rng(2)
    gt = 1500.0 + 50.0 * rng.standard_normal((32, 32))
    pred = gt + 10.0 * rng.standard_normal((32, 32))
    mask = rng.random((32, 32)) > 0.6
    r_in, r_bg = region_rmse(gt, pred, mask)
    w = mask.mean()
    total = rmse(gt, pred)
    assert total**2 == pytest.approx(w * r_in**2 + (1 - w) * r_bg**2, rel=1e-9)


def test_region_rmse_empty_or_full_mask_rejected():
    gt = const((4, 4), 1500)
    with pytest.raises(MetricInputError):
        region_rmse(gt, gt, np.zeros((4, 4), dtype=bool))
    with pytest.raises(MetricInputError):
        region_rmse(gt, gt, np.ones((4, 4), dtype=bool))


# ---------------------------------------------------------------------------
# frame stability


def frames_mask():
    mask = np.zeros((16, 16), dtype=bool)
    mask[4:10, 4:10] = True
    return mask


def test_stability_identical_frames():
    mask = frames_mask()
    f = const((16, 16), 1520)
    rep = frame_stability([f, f, f], mask)
    assert np.all(rep.frame_means_inclusion == 1520.0)
    assert np.all(rep.frame_sds_inclusion == 0.0)
    assert rep.mean_sd_background == 0.0
    assert rep.frame_count == 3


def test_stability_constant_frames():
    mask = frames_mask()
    rep = frame_stability([const((16, 16), 1500), const((16, 16), 1510)], mask)
    np.testing.assert_allclose(rep.frame_means_inclusion, [1500.0, 1510.0])
    np.testing.assert_allclose(rep.frame_means_background, [1500.0, 1510.0])
    np.testing.assert_allclose(rep.frame_sds_inclusion, [0.0, 0.0])


def test_stability_known_noise_sd():
    rng = np.random.default_rng(4)
    mask = np.zeros((384, 384), dtype=bool)
    mask[100:250, 100:250] = True
    frames = [1500.0 + 5.0 * rng.standard_normal((384, 384)) for _ in range(4)]
    rep = frame_stability(frames, mask)
    assert np.all(np.abs(rep.frame_sds_inclusion - 5.0) / 5.0 < 0.05)
    assert np.all(np.abs(rep.frame_sds_background - 5.0) / 5.0 < 0.05)
    assert abs(rep.mean_sd_inclusion - 5.0) / 5.0 < 0.05


def test_stability_requires_two_frames():
    with pytest.raises(MetricInputError):
        frame_stability([const((8, 8), 1500)], frames_mask()[:8, :8])


# ---------------------------------------------------------------------------
# combined report


def test_evaluate_pair_fields():
    rng = np.random.default_rng(5)
    gt = 1500.0 + 50.0 * rng.standard_normal((64, 64))
    pred = gt + 5.0 * rng.standard_normal((64, 64))
    mask = np.zeros((64, 64), dtype=bool)
    mask[16:40, 16:40] = True
    rep = evaluate_pair(gt, pred, mask, sample_id="s01")
    assert rep.sample_id == "s01"
    assert rep.rmse >= rep.mae > 0
    assert 0 < rep.ssim <= 1
    assert rep.region_rmse_inclusion is not None
    rep2 = evaluate_pair(gt, pred)
    assert rep2.region_rmse_inclusion is None
