"""Sparse depth densification, rectification, and evaluation toolkit.

The pipeline turns a sparse depth image into a dense pseudo depth map by
morphological filling, uses that map to strip mixed-depth pixels from the
sparse input, supplements ground truth with the survivors, and evaluates
dense predictions with the standard depth metrics plus edge-focused
variants. Geometry helpers cover back-projection, z-buffered rasterization,
scan thinning, and PLY export.
"""

from .image import DensityStat, DepthImage, ResidualImage, density
from .kitti_io import (
    decode_depth_png,
    encode_depth_png,
    frame_stems,
    intrinsics_from_projection,
    load_velo_to_camera,
    parse_calib_text,
    read_depth_png,
    read_velodyne_bin,
    write_depth_png,
    write_velodyne_bin,
)
from .morphology import (
    MorphConfig,
    PseudoDepthCompleter,
    cross_kernel,
    diamond_kernel,
    forward_differences,
    gradient_magnitude,
    pseudo_depth,
    square_kernel,
    structuring_element,
)
from .rectify import RectifyConfig, SparseRectifier, build_gt_plus, rectify_sparse
from .metrics import (
    EdgeMask,
    MetricsReport,
    edge_mask,
    evaluate_frame,
    irmse_imae,
    outlier_ratio,
    rmse_edge,
    rmse_gt_plus,
    rmse_mae,
)
from .losses import LossConfig, LossReport, depth_loss, grad_loss, ssim_loss, total_loss
from .geometry import (
    CameraIntrinsics,
    PointCloud,
    RigidTransform,
    backproject,
    project_points,
    subsample_scan,
)
from .ply import export_ply, load_ply
from .predictor import (
    GLOBAL_THRESHOLD_PRESETS,
    ExternalFiles,
    PredictionFilter,
    ThresholdSchedule,
    ZeroResidual,
    postprocess,
    predict_dense,
)

__version__ = "0.1.0"

__all__ = [
    "DensityStat",
    "DepthImage",
    "ResidualImage",
    "density",
    "decode_depth_png",
    "encode_depth_png",
    "read_depth_png",
    "write_depth_png",
    "read_velodyne_bin",
    "write_velodyne_bin",
    "parse_calib_text",
    "intrinsics_from_projection",
    "load_velo_to_camera",
    "frame_stems",
    "MorphConfig",
    "PseudoDepthCompleter",
    "pseudo_depth",
    "gradient_magnitude",
    "forward_differences",
    "diamond_kernel",
    "square_kernel",
    "cross_kernel",
    "structuring_element",
    "RectifyConfig",
    "SparseRectifier",
    "rectify_sparse",
    "build_gt_plus",
    "EdgeMask",
    "MetricsReport",
    "edge_mask",
    "evaluate_frame",
    "rmse_mae",
    "irmse_imae",
    "outlier_ratio",
    "rmse_gt_plus",
    "rmse_edge",
    "LossConfig",
    "LossReport",
    "depth_loss",
    "grad_loss",
    "ssim_loss",
    "total_loss",
    "CameraIntrinsics",
    "RigidTransform",
    "PointCloud",
    "backproject",
    "project_points",
    "subsample_scan",
    "export_ply",
    "load_ply",
    "ThresholdSchedule",
    "GLOBAL_THRESHOLD_PRESETS",
    "ZeroResidual",
    "ExternalFiles",
    "predict_dense",
    "postprocess",
    "PredictionFilter",
    "__version__",
]
