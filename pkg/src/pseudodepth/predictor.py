"""Prediction sources and depth-dependent outlier removal.

A prediction source yields a dense depth map for a frame: either the
pseudo map itself (the analytic zero-residual baseline) or an externally
produced file. Post-processing then strips pixels that disagree with the
pseudo map by more than a depth-dependent threshold, trading a little
density for much cleaner point clouds.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .image import DepthImage
from . import kitti_io

__all__ = [
    "ThresholdSchedule",
    "ZeroResidual",
    "ExternalFiles",
    "predict_dense",
    "postprocess",
    "PredictionFilter",
    "GLOBAL_THRESHOLD_PRESETS",
]

# Single global thresholds (meters) commonly swept when tuning.
GLOBAL_THRESHOLD_PRESETS = (10.0, 5.0, 3.0, 1.0)

# Default depth-dependent schedule: tight near, looser far.
DYNAMIC_BANDS = ((10.0, 0.1), (40.0, 0.3), (math.inf, 0.5))


@dataclass(frozen=True)
class ThresholdSchedule:
    """Piecewise thresholds keyed by depth.

    ``bands`` is an ordered sequence of (upper_bound, threshold) pairs with
    strictly increasing upper bounds, the last one infinite. A band covers
    depths from the previous bound (inclusive) up to its own bound
    (exclusive), so with the default dynamic schedule a 10 m pixel falls in
    the 10-40 m band.
    """

    bands: tuple = DYNAMIC_BANDS

    def __post_init__(self):
        try:
            bands = tuple((float(u), float(t)) for u, t in self.bands)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bands must be (upper_bound, threshold) pairs: {exc}") from None
        if not bands:
            raise ValueError("schedule needs at least one band")
        uppers = [u for u, _ in bands]
        if any(b <= a for a, b in zip(uppers, uppers[1:])):
            raise ValueError("upper bounds must be strictly increasing")
        if not math.isinf(uppers[-1]):
            raise ValueError("the final band must be unbounded (upper bound inf)")
        if any(not t > 0 or math.isinf(t) for _, t in bands):
            raise ValueError("thresholds must be finite and > 0")
        object.__setattr__(self, "bands", bands)

    @classmethod
    def dynamic(cls) -> "ThresholdSchedule":
        return cls(DYNAMIC_BANDS)

    @classmethod
    def global_threshold(cls, threshold: float) -> "ThresholdSchedule":
        return cls(((math.inf, float(threshold)),))

    def threshold_for(self, depth):
        """Threshold of the band containing each depth (array or scalar)."""
        uppers = np.array([u for u, _ in self.bands])
        thresholds = np.array([t for _, t in self.bands])
        idx = np.searchsorted(uppers, np.asarray(depth, dtype=np.float64), side="right")
        return thresholds[np.minimum(idx, len(self.bands) - 1)]


@dataclass(frozen=True)
class ZeroResidual:
    """Baseline source: the prediction is the pseudo map itself."""


@dataclass(frozen=True)
class ExternalFiles:
    """Predictions stored as 16-bit depth PNGs, matched by filename stem."""

    root: str
    suffix: str = ".png"

    def path_for(self, stem: str) -> Path:
        return Path(self.root) / f"{stem}{self.suffix}"


def predict_dense(sparse: DepthImage, pseudo: DepthImage, source, frame_stem: str = None) -> DepthImage:
    """Dense prediction for a frame from the configured source.

    The zero-residual source returns the pseudo map unchanged (``sparse``
    is part of the interface for sources that need it). External files are
    decoded and must match the pseudo map's size; ``frame_stem`` selects
    the file.
    """
    if isinstance(source, ZeroResidual):
        return pseudo
    if isinstance(source, ExternalFiles):
        if frame_stem is None:
            raise ValueError("frame_stem is required for external prediction files")
        path = source.path_for(frame_stem)
        if not path.is_file():
            raise FileNotFoundError(f"missing prediction file {path}")
        pred = kitti_io.read_depth_png(path)
        if pred.shape != pseudo.shape:
            raise ValueError(
                f"prediction {path} has shape {pred.shape}, expected {pseudo.shape}"
            )
        return pred
    raise TypeError(f"unknown prediction source {source!r}")


def postprocess(
    pred: DepthImage,
    pseudo: DepthImage,
    schedule: ThresholdSchedule = None,
    band_source: str = "pred",
) -> DepthImage:
    """Invalidate prediction pixels that stray too far from the pseudo map.

    A pixel is dropped iff |pred - pseudo| exceeds the threshold of the
    band containing the *predicted* depth (the prediction is the object
    being filtered; set ``band_source="pseudo"`` to key bands off the
    pseudo map instead). Surviving values are unchanged. Pixels without
    pseudo coverage cannot be checked and are kept.
    """
    if schedule is None:
        schedule = ThresholdSchedule.dynamic()
    if pred.shape != pseudo.shape:
        raise ValueError(f"shapes {pred.shape} and {pseudo.shape} do not match")
    if band_source not in ("pred", "pseudo"):
        raise ValueError(f"band_source must be 'pred' or 'pseudo', got {band_source!r}")
    keyed = pred.values if band_source == "pred" else pseudo.values
    thresholds = schedule.threshold_for(keyed)
    drop = pred.valid & pseudo.valid & (np.abs(pred.values - pseudo.values) > thresholds)
    keep = pred.valid & ~drop
    return DepthImage(np.where(keep, pred.values, 0.0), keep)


class PredictionFilter(BaseEstimator, TransformerMixin):
    """Transformer wrapper around :func:`postprocess`.

    ``transform`` takes a (prediction, pseudo) pair of DepthImages, or a
    list of such pairs. Stateless.
    """

    def __init__(self, schedule=None, band_source="pred"):
        self.schedule = schedule
        self.band_source = band_source

    def _schedule(self):
        if self.schedule is None:
            return ThresholdSchedule.dynamic()
        if isinstance(self.schedule, ThresholdSchedule):
            return self.schedule
        return ThresholdSchedule(self.schedule)

    def fit(self, X=None, y=None):
        self._schedule()
        if self.band_source not in ("pred", "pseudo"):
            raise ValueError(
                f"band_source must be 'pred' or 'pseudo', got {self.band_source!r}"
            )
        return self

    def transform(self, X):
        schedule = self._schedule()
        if isinstance(X, (tuple, list)) and len(X) == 2 and isinstance(X[0], DepthImage):
            pred, pseudo = X
            return postprocess(pred, pseudo, schedule, self.band_source)
        return [postprocess(pred, pseudo, schedule, self.band_source) for pred, pseudo in X]
