"""Quantitative evaluation of reconstructed SoS maps.

Full-map errors (RMSE/MAE/MAPE), structural similarity, region-restricted
RMSE, display difference maps, and consecutive-frame stability statistics.
Metric values are plain floats; CSV/JSON report assembly lives in the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage.metrics import structural_similarity

SSIM_DATA_RANGE = 400.0  # the SoS span, 1700 - 1300 m/s
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DISPLAY_FLOOR = 30.0  # m/s


class MetricInputError(ValueError):
    pass


@dataclass
class EvalReport:
    sample_id: str
    rmse: float
    mae: float
    mape: float
    ssim: float
    region_rmse_inclusion: float | None = None
    region_rmse_background: float | None = None


@dataclass
class StabilityReport:
    frame_means_inclusion: np.ndarray
    frame_means_background: np.ndarray
    frame_sds_inclusion: np.ndarray
    frame_sds_background: np.ndarray
    mean_sd_inclusion: float
    mean_sd_background: float
    frame_count: int


def _check_shapes(gt, pred):
    gt = np.asarray(gt, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if gt.shape != pred.shape:
        raise MetricInputError(f"shape mismatch: {gt.shape} vs {pred.shape}")
    return gt, pred


def rmse(gt, pred) -> float:
    gt, pred = _check_shapes(gt, pred)
    return float(np.sqrt(np.mean((gt - pred) ** 2)))


def mae(gt, pred) -> float:
    gt, pred = _check_shapes(gt, pred)
    return float(np.mean(np.abs(gt - pred)))


def mape(gt, pred) -> float:
    """Mean absolute percentage error, normalized by the ground truth."""
    gt, pred = _check_shapes(gt, pred)
    if np.any(gt == 0):
        raise MetricInputError("ground truth contains zeros")
    return float(np.mean(np.abs(gt - pred) / np.abs(gt)) * 100.0)


def ssim(gt, pred, data_range: float = SSIM_DATA_RANGE) -> float:
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1/K2 = 0.01/0.03."""
    gt, pred = _check_shapes(gt, pred)
    return float(
        structural_similarity(
            gt,
            pred,
            win_size=SSIM_WINDOW,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            K1=SSIM_K1,
            K2=SSIM_K2,
            data_range=data_range,
            use_sample_covariance=False,
        )
    )


def abs_diff_display(gt, pred, floor: float = DISPLAY_FLOOR) -> np.ndarray:
    """|gt - pred| with values below the floor zeroed, for visualization only."""
    gt, pred = _check_shapes(gt, pred)
    diff = np.abs(gt - pred)
    diff[diff < floor] = 0.0
    return diff


def region_rmse(gt, pred, mask) -> tuple[float, float]:
    """RMSE inside the mask and over the complement."""
    gt, pred = _check_shapes(gt, pred)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != gt.shape:
        raise MetricInputError("mask shape does not match the maps")
    n_in = int(mask.sum())
    if n_in == 0 or n_in == mask.size:
        raise MetricInputError("mask must be neither empty nor full")
    sq = (gt - pred) ** 2
    return float(np.sqrt(sq[mask].mean())), float(np.sqrt(sq[~mask].mean()))


def frame_stability(preds, mask) -> StabilityReport:
    """Per-frame region means/SDs plus the cross-frame mean of the SDs."""
    frames = [np.asarray(f, dtype=np.float64) for f in preds]
    if len(frames) < 2:
        raise MetricInputError("stability statistics need at least 2 frames")
    mask = np.asarray(mask, dtype=bool)
    if any(f.shape != mask.shape for f in frames):
        raise MetricInputError("frame shapes inconsistent with the mask")
    means_in = np.array([f[mask].mean() for f in frames])
    means_bg = np.array([f[~mask].mean() for f in frames])
    sds_in = np.array([f[mask].std() for f in frames])
    sds_bg = np.array([f[~mask].std() for f in frames])
    return StabilityReport(
        frame_means_inclusion=means_in,
        frame_means_background=means_bg,
        frame_sds_inclusion=sds_in,
        frame_sds_background=sds_bg,
        mean_sd_inclusion=float(sds_in.mean()),
        mean_sd_background=float(sds_bg.mean()),
        frame_count=len(frames),
    )


def evaluate_pair(gt, pred, mask=None, sample_id: str = "") -> EvalReport:
    """All metrics for one (ground truth, prediction) pair."""
    r_in = r_bg = None
    if mask is not None:
        r_in, r_bg = region_rmse(gt, pred, mask)
    return EvalReport(
        sample_id=sample_id,
        rmse=rmse(gt, pred),
        mae=mae(gt, pred),
        mape=mape(gt, pred),
        ssim=ssim(gt, pred),
        region_rmse_inclusion=r_in,
        region_rmse_background=r_bg,
    )
