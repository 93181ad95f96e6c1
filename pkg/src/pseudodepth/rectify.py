"""Removal of mixed-depth pixels and complemented ground truth.

Raw scans projected into the camera pick up far points that shine through
the silhouettes of near objects (the sensors sit apart, so the camera and
the scanner do not occlude the same things). Pixels whose depth strays too
far from the dense pseudo map are dropped; the survivors are trustworthy
enough to back-fill holes in the ground truth.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .image import DepthImage
from .morphology import PseudoDepthCompleter

__all__ = ["RectifyConfig", "rectify_sparse", "build_gt_plus", "SparseRectifier"]


@dataclass(frozen=True)
class RectifyConfig:
    threshold: float = 1.0  # meters

    def __post_init__(self):
        if not np.isfinite(self.threshold) or self.threshold <= 0:
            raise ValueError("threshold must be finite and > 0")


def _check_same_shape(a, b, what):
    if a.shape != b.shape:
        raise ValueError(f"{what}: shapes {a.shape} and {b.shape} do not match")


def rectify_sparse(sparse: DepthImage, pseudo: DepthImage, cfg: RectifyConfig = None) -> DepthImage:
    """Keep sparse pixels that agree with the pseudo map within the threshold.

    A pixel survives iff |sparse - pseudo| <= threshold; survivors keep
    their exact input depth. Sparse pixels where the pseudo map has no
    value cannot be checked and are dropped.
    """
    if cfg is None:
        cfg = RectifyConfig()
    _check_same_shape(sparse, pseudo, "rectify_sparse")
    keep = (
        sparse.valid
        & pseudo.valid
        & (np.abs(sparse.values - pseudo.values) <= cfg.threshold)
    )
    # survivors keep their exact input depth, so the arrays stay canonical
    return DepthImage._trusted(np.where(keep, sparse.values, 0.0), keep)


def build_gt_plus(gt: DepthImage, rectified_sparse: DepthImage) -> DepthImage:
    """Supplement ground truth with rectified pixels where it has holes.

    Ground truth always wins where both have a value; rectified pixels only
    fill in where the ground truth is missing.
    """
    _check_same_shape(gt, rectified_sparse, "build_gt_plus")
    values = np.where(
        gt.valid,
        gt.values,
        np.where(rectified_sparse.valid, rectified_sparse.values, 0.0),
    )
    return DepthImage(values, gt.valid | rectified_sparse.valid)


class SparseRectifier(BaseEstimator, TransformerMixin):
    """Transformer that rectifies sparse depth images.

    The pseudo map is produced internally by ``completer`` (a default
    PseudoDepthCompleter when None), so ``transform`` maps a sparse
    DepthImage straight to its rectified version. Stateless.
    """

    def __init__(self, threshold=1.0, completer=None):
        self.threshold = threshold
        self.completer = completer

    def fit(self, X=None, y=None):
        RectifyConfig(threshold=self.threshold)
        self._completer().fit()
        return self

    def _completer(self):
        return self.completer if self.completer is not None else PseudoDepthCompleter()

    def transform(self, X):
        cfg = RectifyConfig(threshold=self.threshold)
        completer = self._completer()
        if isinstance(X, DepthImage):
            return rectify_sparse(X, completer.transform(X), cfg)
        return [rectify_sparse(img, completer.transform(img), cfg) for img in X]
