"""Reference implementations of the training losses.

These are forward computations with pinned semantics, meant for validating
external training code and for tests; there is no autograd here. The total
loss is

    l_total = l_depth + weight * (l_grad + l_ssim)

where l_depth is the mean squared residual error against ground truth,
l_grad the mean absolute gradient of the error against the pseudo ground
truth, and l_ssim half of one minus the mean structural similarity.
By default losses are evaluated below a crop row (the sensor-free top band
of automotive frames); set crop_rows=0 for full-frame evaluation.
"""

from dataclasses import dataclass

import cv2
import numpy as np
from scipy import ndimage

from .image import DepthImage, ResidualImage
from .morphology import forward_differences

__all__ = ["LossConfig", "LossReport", "depth_loss", "grad_loss", "ssim_loss", "total_loss"]


@dataclass(frozen=True)
class LossConfig:
    """Loss settings.

    ``ssim_c1`` and ``ssim_c2`` default to (0.01 * dynamic_range)^2 and
    (0.03 * dynamic_range)^2, the canonical stabilizers scaled to the depth
    span. The SSIM window is a uniform box by default; set
    ``gaussian_window`` for the weighted variant.
    """

    structural_weight: float = 1.0
    ssim_window: int = 11
    ssim_c1: float = None
    ssim_c2: float = None
    dynamic_range: float = 85.0  # meters
    gaussian_window: bool = False
    gaussian_sigma: float = 1.5
    crop_rows: int = 100

    def __post_init__(self):
        if not np.isfinite(self.structural_weight) or self.structural_weight < 0:
            raise ValueError("structural_weight must be finite and >= 0")
        if int(self.ssim_window) != self.ssim_window or self.ssim_window < 3 or self.ssim_window % 2 == 0:
            raise ValueError("ssim_window must be an odd integer >= 3")
        object.__setattr__(self, "ssim_window", int(self.ssim_window))
        if not np.isfinite(self.dynamic_range) or self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be finite and > 0")
        if self.ssim_c1 is None:
            object.__setattr__(self, "ssim_c1", (0.01 * self.dynamic_range) ** 2)
        if self.ssim_c2 is None:
            object.__setattr__(self, "ssim_c2", (0.03 * self.dynamic_range) ** 2)
        if self.ssim_c1 <= 0 or self.ssim_c2 <= 0:
            raise ValueError("ssim_c1 and ssim_c2 must be > 0")
        if self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be > 0")
        if int(self.crop_rows) != self.crop_rows or self.crop_rows < 0:
            raise ValueError("crop_rows must be a non-negative integer")
        object.__setattr__(self, "crop_rows", int(self.crop_rows))


@dataclass(frozen=True)
class LossReport:
    l_depth: float  # m^2
    l_grad: float  # m/pixel
    l_ssim: float  # dimensionless, in [0, 1]
    l_total: float

    def __post_init__(self):
        if self.l_depth < 0 or self.l_grad < 0:
            raise ValueError("loss components must be non-negative")
        if not 0 <= self.l_ssim <= 1:
            raise ValueError(f"l_ssim must lie in [0, 1], got {self.l_ssim}")

    def to_dict(self):
        return {
            "l_depth": self.l_depth,
            "l_grad": self.l_grad,
            "l_ssim": self.l_ssim,
            "l_total": self.l_total,
        }


def _region(img, crop, what):
    if crop >= img.shape[0]:
        raise ValueError(f"crop_rows={crop} leaves no rows in {what}")
    return img.values[crop:], img.valid[crop:]


def _dense_region(img: DepthImage, crop, what):
    values, valid = _region(img, crop, what)
    if not valid.all():
        raise ValueError(f"{what} must be dense below the crop row")
    return values


def _check_shapes(*imgs):
    shapes = {img.shape for img in imgs}
    if len(shapes) != 1:
        raise ValueError(f"image shapes do not match: {sorted(shapes)}")


def depth_loss(gt: DepthImage, pseudo: DepthImage, residual: ResidualImage, cfg: LossConfig = None) -> float:
    """Mean squared error of pseudo + residual against ground truth, m^2.

    Averaged over the ground-truth pixels below the crop row; the pseudo
    map must cover all of them.
    """
    if cfg is None:
        cfg = LossConfig()
    _check_shapes(gt, pseudo, residual)
    crop = cfg.crop_rows
    gt_values, gt_valid = _region(gt, crop, "ground truth")
    if not gt_valid.any():
        raise ValueError("no valid ground-truth pixels below the crop row")
    if not pseudo.valid[crop:][gt_valid].all():
        raise ValueError("pseudo map must cover every evaluated ground-truth pixel")
    e = (gt_values - pseudo.values[crop:] - residual.values[crop:])[gt_valid]
    return float(np.mean(e**2))


def grad_loss(pseudo_gt: DepthImage, pseudo: DepthImage, residual: ResidualImage, cfg: LossConfig = None) -> float:
    """Mean |dx| + |dy| of the error field, in meters/pixel.

    The error is pseudo_gt - (pseudo + residual) on the region below the
    crop row; by linearity this equals the gradient difference between the
    two maps, so a globally shifted prediction costs nothing.
    """
    if cfg is None:
        cfg = LossConfig()
    _check_shapes(pseudo_gt, pseudo, residual)
    crop = cfg.crop_rows
    target = _dense_region(pseudo_gt, crop, "pseudo ground truth")
    base = _dense_region(pseudo, crop, "pseudo depth")
    e = target - (base + residual.values[crop:])
    gx, gy = forward_differences(e)
    return float(np.mean(np.abs(gx) + np.abs(gy)))


def _window_mean(field, cfg):
    k = cfg.ssim_window
    if cfg.gaussian_window:
        smoothed = cv2.GaussianBlur(field, (k, k), cfg.gaussian_sigma)
    else:
        smoothed = ndimage.uniform_filter(field, size=k, mode="constant")
    m = k // 2
    h, w = field.shape
    return smoothed[m : h - m, m : w - m]


def ssim_loss(pseudo_gt: DepthImage, pseudo: DepthImage, residual: ResidualImage, cfg: LossConfig = None) -> float:
    """0.5 * (1 - mean SSIM) between pseudo_gt and pseudo + residual.

    SSIM uses per-window population moments over every window fully inside
    the evaluated region and the stabilizers from the config. The score of
    an image with itself is exactly 1, so the loss is exactly 0 there.
    """
    if cfg is None:
        cfg = LossConfig()
    _check_shapes(pseudo_gt, pseudo, residual)
    crop = cfg.crop_rows
    a = _dense_region(pseudo_gt, crop, "pseudo ground truth")
    b = _dense_region(pseudo, crop, "pseudo depth") + residual.values[crop:]
    if cfg.ssim_window > min(a.shape):
        raise ValueError(
            f"ssim_window={cfg.ssim_window} larger than the {a.shape} evaluated region"
        )

    mu_a = _window_mean(a, cfg)
    mu_b = _window_mean(b, cfg)
    var_a = _window_mean(a * a, cfg) - mu_a * mu_a
    var_b = _window_mean(b * b, cfg) - mu_b * mu_b
    cov = _window_mean(a * b, cfg) - mu_a * mu_b

    c1, c2 = cfg.ssim_c1, cfg.ssim_c2
    ssim_map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    # windowed SSIM lies in [-1, 1] up to rounding; clip so the loss
    # honors its range
    score = float(np.clip(np.mean(ssim_map), -1.0, 1.0))
    return 0.5 * (1.0 - score)


def total_loss(
    gt: DepthImage,
    pseudo_gt: DepthImage,
    pseudo: DepthImage,
    residual: ResidualImage,
    cfg: LossConfig = None,
) -> LossReport:
    """All loss components and their weighted total."""
    if cfg is None:
        cfg = LossConfig()
    l_depth = depth_loss(gt, pseudo, residual, cfg)
    l_grad = grad_loss(pseudo_gt, pseudo, residual, cfg)
    l_ssim = ssim_loss(pseudo_gt, pseudo, residual, cfg)
    l_total = l_depth + cfg.structural_weight * (l_grad + l_ssim)
    return LossReport(l_depth, l_grad, l_ssim, l_total)
