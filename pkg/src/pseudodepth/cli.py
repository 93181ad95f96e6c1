"""Command-line interface wiring the densification pipeline.

Commands operate on single files or whole directories matched by filename
stem. Batch runs never abort on one corrupt frame: the frame is reported
and skipped, and the exit status is 0 as long as at least one frame went
through. All commands are deterministic for fixed inputs and options,
regardless of --threads.
"""

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import kitti_io
from .geometry import CameraIntrinsics, backproject, project_points, subsample_scan
from .image import density
from .metrics import (
    OUTLIER_ABS_METERS,
    OUTLIER_REL,
    MetricsReport,
    _evaluation_set,
    edge_mask,
    evaluate_frame,
)
from .morphology import MorphConfig, pseudo_depth
from .ply import export_ply
from .predictor import ExternalFiles, ThresholdSchedule, ZeroResidual, postprocess, predict_dense
from .rectify import RectifyConfig, build_gt_plus, rectify_sparse

DATA_ROOT_ENV = "PSEUDODEPTH_DATA_ROOT"

_POSTPROCESS_EPILOG = (
    "The default dynamic schedule uses the bands (10, 0.1), (40, 0.3), (∞, 0.5):\n"
    "a 0.1 m threshold for pixels closer than 10 m, 0.3 m between 10 m and 40 m,\n"
    "and 0.5 m beyond 40 m. Single global thresholds are available as\n"
    "--schedule global:10, global:5, global:3 or global:1 (meters), or any\n"
    "custom band list such as --schedule 5:0.2,20:0.4,inf:0.6."
)


class CliError(Exception):
    """Fatal configuration problem; maps to exit status 2."""


def _parse_intrinsics(text) -> CameraIntrinsics:
    try:
        fx, fy, cx, cy = (float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"--intrinsics expects 'fx,fy,cx,cy', got {text!r}") from None
    return CameraIntrinsics(fx, fy, cx, cy)


def _parse_schedule(text) -> ThresholdSchedule:
    if text == "dynamic":
        return ThresholdSchedule.dynamic()
    if text.startswith("global:"):
        try:
            return ThresholdSchedule.global_threshold(float(text[len("global:"):]))
        except ValueError as exc:
            raise CliError(f"bad global schedule {text!r}: {exc}") from None
    bands = []
    try:
        for part in text.split(","):
            upper, _, thr = part.partition(":")
            bands.append((math.inf if upper.strip() == "inf" else float(upper), float(thr)))
        return ThresholdSchedule(tuple(bands))
    except ValueError as exc:
        raise CliError(f"bad schedule {text!r}: {exc}") from None


def _parse_elevation(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"--elevation expects 'low,high' degrees, got {text!r}") from None
    return lo, hi


def _morph_config(args) -> MorphConfig:
    blur = args.blur
    if blur in (None, "", "none"):
        blur = None
    try:
        return MorphConfig(
            dilation_kernel=args.dilation_kernel,
            closure_kernel=args.closure_kernel,
            large_fill_enabled=args.large_fill_enabled,
            inversion_ceiling=args.inversion_ceiling,
            top_crop_rows=args.top_crop_rows,
            blur=blur,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _resolve_input(path, args) -> Path:
    """Relative input paths are looked up under --data-root when set."""
    path = Path(path)
    root = args.data_root or os.environ.get(DATA_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _frame_list(path: Path, suffix=".png"):
    """(stem, file) pairs for a directory, or the single file itself."""
    if path.is_dir():
        stems = kitti_io.frame_stems(path, suffix)
        if not stems:
            raise CliError(f"{path}: no {suffix} frames found")
        return [(stem, path / f"{stem}{suffix}") for stem in stems], True
    if path.is_file():
        return [(path.stem, path)], False
    raise CliError(f"{path}: no such file or directory")


def _out_path(out: Path, stem: str, batch: bool, suffix=".png") -> Path:
    if batch or out.is_dir():
        out.mkdir(parents=True, exist_ok=True)
        return out / f"{stem}{suffix}"
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _run_frames(frames, worker, threads):
    """Run worker(frame) per frame, print in stem order, collect payloads.

    The worker returns (lines, payload). Failures are reported on stderr
    and skipped; processing order never affects output order.
    """
    results, failures = {}, {}

    def guarded(frame):
        stem = frame[0]
        try:
            return stem, worker(frame), None
        except Exception as exc:  # noqa: BLE001 - a bad frame must not kill the batch
            return stem, None, exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(guarded, frames))
    else:
        outcomes = [guarded(f) for f in frames]

    for stem, result, error in outcomes:
        if error is None:
            results[stem] = result
        else:
            failures[stem] = error

    for stem in sorted(results):
        for line in results[stem][0]:
            print(line)
    for stem in sorted(failures):
        print(f"frame {stem} failed: {failures[stem]}", file=sys.stderr)

    return {stem: results[stem][1] for stem in sorted(results)}, failures


def _write_report(args, payload):
    if getattr(args, "report", None):
        path = Path(args.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n")


def _cmd_complete(args) -> int:
    cfg = _morph_config(args)
    intrinsics = _parse_intrinsics(args.intrinsics) if args.intrinsics else None
    if args.emit_cloud and intrinsics is None:
        raise CliError("--emit-cloud needs --intrinsics fx,fy,cx,cy")
    frames, batch = _frame_list(_resolve_input(args.sparse, args))
    out = Path(args.out)
    cloud_dir = Path(args.emit_cloud) if args.emit_cloud else None
    if cloud_dir:
        cloud_dir.mkdir(parents=True, exist_ok=True)

    def worker(frame):
        stem, path = frame
        start = time.perf_counter()
        sparse = kitti_io.read_depth_png(path)
        dense = pseudo_depth(sparse, cfg)
        kitti_io.write_depth_png(_out_path(out, stem, batch), dense)
        if cloud_dir is not None:
            export_ply(backproject(dense, intrinsics), cloud_dir / f"{stem}.ply")
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        stat = density(dense)
        line = f"{stem}: {elapsed_ms:.2f} ms, density {stat.density:.4f}"
        return [line], {"ms": elapsed_ms, "density": stat.density}

    payloads, failures = _run_frames(frames, worker, args.threads)
    _write_report(args, {"frames": payloads})
    return 0 if payloads else 1


def _cmd_rectify(args) -> int:
    cfg = _morph_config(args)
    rcfg = RectifyConfig(threshold=args.rectify_threshold)
    frames, batch = _frame_list(_resolve_input(args.sparse, args))
    out = Path(args.out)

    def worker(frame):
        stem, path = frame
        start = time.perf_counter()
        sparse = kitti_io.read_depth_png(path)
        rectified = rectify_sparse(sparse, pseudo_depth(sparse, cfg), rcfg)
        kitti_io.write_depth_png(_out_path(out, stem, batch), rectified)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        before, after = density(sparse), density(rectified)
        line = (
            f"{stem}: {elapsed_ms:.2f} ms, kept {after.valid_count}/{before.valid_count}"
            f" ({after.density:.4f} of frame)"
        )
        return [line], {"ms": elapsed_ms, "kept": after.valid_count, "input": before.valid_count}

    payloads, failures = _run_frames(frames, worker, args.threads)
    _write_report(args, {"frames": payloads})
    return 0 if payloads else 1


def _cmd_gtplus(args) -> int:
    cfg = _morph_config(args)
    rcfg = RectifyConfig(threshold=args.rectify_threshold)
    gt_dir = _resolve_input(args.gt, args)
    sparse_dir = _resolve_input(args.sparse, args)
    rect_dir = _resolve_input(args.rectified, args) if args.rectified else None
    frames, batch = _frame_list(gt_dir)
    out = Path(args.out)

    def worker(frame):
        stem, gt_path = frame
        start = time.perf_counter()
        gt = kitti_io.read_depth_png(gt_path)
        if rect_dir is not None:
            rectified = kitti_io.read_depth_png(_companion(rect_dir, stem, batch, "rectified"))
        else:
            sparse = kitti_io.read_depth_png(_companion(sparse_dir, stem, batch, "sparse"))
            rectified = rectify_sparse(sparse, pseudo_depth(sparse, cfg), rcfg)
        merged = build_gt_plus(gt, rectified)
        kitti_io.write_depth_png(_out_path(out, stem, batch), merged)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        line = (
            f"{stem}: {elapsed_ms:.2f} ms, density {density(gt).density:.4f}"
            f" -> {density(merged).density:.4f}"
        )
        return [line], {"ms": elapsed_ms, "gt_density": density(gt).density,
                        "gt_plus_density": density(merged).density}

    payloads, failures = _run_frames(frames, worker, args.threads)
    _write_report(args, {"frames": payloads})
    return 0 if payloads else 1


def _companion(directory: Path, stem: str, batch: bool, what: str) -> Path:
    if not batch:
        # single-frame mode accepts a file path directly
        if directory.is_file():
            return directory
    path = directory / f"{stem}.png"
    if not path.is_file():
        raise FileNotFoundError(f"missing {what} file {path}")
    return path


def _format_report(label: str, report: MetricsReport) -> str:
    parts = [
        f"rmse {report.rmse:.2f}",
        f"mae {report.mae:.2f}",
        f"irmse {report.irmse:.3f}",
        f"imae {report.imae:.3f}",
        f"outliers {report.outlier_ratio:.4f}",
        f"n {report.evaluated_pixels}",
    ]
    if report.rmse_gt_plus is not None:
        parts.append(f"rmse_gt+ {report.rmse_gt_plus:.2f}")
    if report.rmse_edge is not None:
        parts.append(f"rmse_edge {report.rmse_edge:.2f}")
    return f"{label}: " + " ".join(parts)


def _cmd_eval(args) -> int:
    cfg = _morph_config(args)
    rcfg = RectifyConfig(threshold=args.rectify_threshold)
    gt_dir = _resolve_input(args.gt, args)
    sparse_dir = _resolve_input(args.sparse, args)
    if args.pred == "zero":
        source = ZeroResidual()
        pred_stems = set()
    else:
        pred_dir = _resolve_input(args.pred, args)
        if not pred_dir.is_dir():
            raise CliError(f"{pred_dir}: prediction directory not found")
        source = ExternalFiles(str(pred_dir))
        pred_stems = set(kitti_io.frame_stems(pred_dir))
    if not gt_dir.is_dir():
        raise CliError(f"{gt_dir}: ground-truth directory not found")
    stems = sorted(set(kitti_io.frame_stems(gt_dir)) | pred_stems)
    if not stems:
        raise CliError("no frames to evaluate")

    def worker(frame):
        stem = frame[0]
        gt = kitti_io.read_depth_png(_companion(gt_dir, stem, True, "ground-truth"))
        sparse = kitti_io.read_depth_png(_companion(sparse_dir, stem, True, "sparse"))
        pseudo = pseudo_depth(sparse, cfg)
        prediction = predict_dense(sparse, pseudo, source, frame_stem=stem)
        rectified = rectify_sparse(sparse, pseudo, rcfg)
        gt_plus = build_gt_plus(gt, rectified)
        edges = edge_mask(pseudo, cfg.top_crop_rows)
        report = evaluate_frame(prediction, gt, gt_plus, edges, rule=args.outlier_rule)

        p, r = _evaluation_set(prediction, gt)
        diff_mm = (p - r) * 1000.0
        inv_diff = 1000.0 / p - 1000.0 / r
        err = np.abs(p - r)
        if args.outlier_rule == "error":
            flagged = (err > OUTLIER_ABS_METERS) & (err / r > OUTLIER_REL)
        else:
            flagged = (r > OUTLIER_ABS_METERS) & (err / r > OUTLIER_REL)
        gp, gr = _evaluation_set(prediction, gt_plus)
        ep, er = _evaluation_set(prediction, gt_plus, extra=edges.flags)
        sums = {
            "n": int(p.size),
            "sq_mm": float(np.sum(diff_mm**2)),
            "abs_mm": float(np.sum(np.abs(diff_mm))),
            "inv_sq": float(np.sum(inv_diff**2)),
            "inv_abs": float(np.sum(np.abs(inv_diff))),
            "outliers": int(np.count_nonzero(flagged)),
            "gtp_n": int(gp.size),
            "gtp_sq_mm": float(np.sum(((gp - gr) * 1000.0) ** 2)),
            "edge_n": int(ep.size),
            "edge_sq_mm": float(np.sum(((ep - er) * 1000.0) ** 2)),
        }
        return [_format_report(stem, report)], {"report": report.to_dict(), "sums": sums}

    payloads, failures = _run_frames([(s,) for s in stems], worker, args.threads)
    if not payloads:
        return 1

    total = {k: 0 for k in ("n", "outliers", "gtp_n", "edge_n")}
    acc = {k: 0.0 for k in ("sq_mm", "abs_mm", "inv_sq", "inv_abs", "gtp_sq_mm", "edge_sq_mm")}
    for stem in sorted(payloads):  # fixed fold order keeps aggregates bit-stable
        sums = payloads[stem]["sums"]
        for k in total:
            total[k] += sums[k]
        for k in acc:
            acc[k] += sums[k]
    aggregate = MetricsReport(
        rmse=math.sqrt(acc["sq_mm"] / total["n"]),
        mae=acc["abs_mm"] / total["n"],
        irmse=math.sqrt(acc["inv_sq"] / total["n"]),
        imae=acc["inv_abs"] / total["n"],
        outlier_ratio=total["outliers"] / total["n"],
        evaluated_pixels=total["n"],
        rmse_gt_plus=math.sqrt(acc["gtp_sq_mm"] / total["gtp_n"]) if total["gtp_n"] else None,
        rmse_edge=math.sqrt(acc["edge_sq_mm"] / total["edge_n"]) if total["edge_n"] else None,
    )
    print(_format_report(f"aggregate ({len(payloads)} frames, pooled pixels)", aggregate))
    _write_report(
        args,
        {
            "frames": {stem: payloads[stem]["report"] for stem in payloads},
            "aggregate": aggregate.to_dict(),
        },
    )
    return 0


def _cmd_postprocess(args) -> int:
    cfg = _morph_config(args)
    schedule = _parse_schedule(args.schedule)
    pred_dir = _resolve_input(args.pred, args)
    sparse_dir = _resolve_input(args.sparse, args)
    pseudo_dir = _resolve_input(args.pseudo, args) if args.pseudo else None
    frames, batch = _frame_list(pred_dir)
    out = Path(args.out)

    def worker(frame):
        stem, pred_path = frame
        start = time.perf_counter()
        prediction = kitti_io.read_depth_png(pred_path)
        if pseudo_dir is not None:
            pseudo = kitti_io.read_depth_png(_companion(pseudo_dir, stem, batch, "pseudo"))
        else:
            sparse = kitti_io.read_depth_png(_companion(sparse_dir, stem, batch, "sparse"))
            pseudo = pseudo_depth(sparse, cfg)
        filtered = postprocess(prediction, pseudo, schedule)
        kitti_io.write_depth_png(_out_path(out, stem, batch), filtered)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        kept = int(filtered.valid.sum())
        had = int(prediction.valid.sum())
        share = kept / had if had else 0.0
        line = f"{stem}: {elapsed_ms:.2f} ms, kept {kept}/{had} ({share:.4f})"
        return [line], {"ms": elapsed_ms, "kept": kept, "input": had, "retention": share}

    payloads, failures = _run_frames(frames, worker, args.threads)
    _write_report(args, {"frames": payloads})
    return 0 if payloads else 1


def _cmd_subsample(args) -> int:
    if args.keep_every < 1:
        raise CliError("--keep-every must be >= 1")
    scan_dir = _resolve_input(args.scans, args)
    intrinsics, transform = kitti_io.load_velo_to_camera(
        _resolve_input(args.calib_cam2cam, args),
        _resolve_input(args.calib_velo2cam, args),
        camera=args.camera,
    )
    frames, _ = _frame_list(scan_dir, suffix=".bin")
    # two files per frame, so the output is always a directory
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    elevation = _parse_elevation(args.elevation)

    def worker(frame):
        stem, path = frame
        start = time.perf_counter()
        cloud = kitti_io.read_velodyne_bin(path)
        thinned = subsample_scan(cloud, args.keep_every, bins=args.bins, elevation_range=elevation)
        kitti_io.write_velodyne_bin(out / f"{stem}.bin", thinned)
        projected = project_points(
            thinned, intrinsics, transform, size=(args.width, args.height)
        )
        kitti_io.write_depth_png(out / f"{stem}.png", projected)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        line = (
            f"{stem}: {elapsed_ms:.2f} ms, {len(thinned)}/{len(cloud)} points,"
            f" projected density {density(projected).density:.4f}"
        )
        return [line], {"ms": elapsed_ms, "points": len(thinned), "input_points": len(cloud)}

    payloads, failures = _run_frames(frames, worker, args.threads)
    _write_report(args, {"frames": payloads})
    return 0 if payloads else 1


def _cmd_cloud(args) -> int:
    intrinsics = _parse_intrinsics(args.intrinsics)
    frames, batch = _frame_list(_resolve_input(args.depth, args))
    out = Path(args.out)

    def worker(frame):
        stem, path = frame
        start = time.perf_counter()
        depth = kitti_io.read_depth_png(path)
        cloud = backproject(depth, intrinsics)
        export_ply(cloud, _out_path(out, stem, batch, suffix=".ply"))
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return [f"{stem}: {elapsed_ms:.2f} ms, {len(cloud)} points"], {
            "ms": elapsed_ms,
            "points": len(cloud),
        }

    payloads, failures = _run_frames(frames, worker, args.threads)
    _write_report(args, {"frames": payloads})
    return 0 if payloads else 1


def _common_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file with option defaults; explicit flags win")
    p.add_argument("--report", help="write a machine-readable JSON report here")
    p.add_argument("--threads", type=int, default=1, help="worker threads for batch runs")
    p.add_argument(
        "--data-root",
        default=None,
        help=f"base directory for relative input paths (default ${DATA_ROOT_ENV})",
    )
    return p


def _morph_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--dilation-kernel", default="diamond:5", help="shape:size, e.g. diamond:5")
    p.add_argument("--closure-kernel", default="square:5", help="shape:size, e.g. square:5")
    p.add_argument(
        "--no-large-fill",
        dest="large_fill_enabled",
        action="store_false",
        help="skip large-hole filling (coverage no longer guaranteed)",
    )
    p.add_argument("--inversion-ceiling", type=float, default=100.0,
                   help="depth inversion ceiling in meters; must exceed the scene maximum")
    p.add_argument("--top-crop-rows", type=int, default=100,
                   help="sensor-free top rows passed through untouched")
    p.add_argument("--blur", default="none", help="'none' or 'median<odd size>', e.g. median5")
    return p


def _rectify_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--rectify-threshold", type=float, default=1.0,
                   help="max |sparse - pseudo| in meters before a pixel is dropped")
    return p


def build_parser():
    common = _common_parent()
    morph = _morph_parent()
    rect = _rectify_parent()

    parser = argparse.ArgumentParser(
        prog="pseudodepth",
        description="Sparse depth densification, rectification, and evaluation tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", parents=[common, morph],
                       help="densify sparse depth PNGs into pseudo depth maps")
    p.add_argument("sparse", help="sparse depth PNG file or directory")
    p.add_argument("out", help="output PNG file or directory")
    p.add_argument("--emit-cloud", metavar="DIR", help="also write back-projected PLY clouds")
    p.add_argument("--intrinsics", help="fx,fy,cx,cy in pixels (needed for --emit-cloud)")
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("rectify", parents=[common, morph, rect],
                       help="drop sparse pixels that disagree with the pseudo map")
    p.add_argument("sparse", help="sparse depth PNG file or directory")
    p.add_argument("out", help="output PNG file or directory")
    p.set_defaults(func=_cmd_rectify)

    p = sub.add_parser("gtplus", parents=[common, morph, rect],
                       help="supplement ground truth with rectified sparse pixels")
    p.add_argument("gt", help="ground-truth depth PNG file or directory")
    p.add_argument("sparse", help="sparse depth PNG file or directory")
    p.add_argument("out", help="output PNG file or directory")
    p.add_argument("--rectified", help="use precomputed rectified PNGs instead of rectifying")
    p.set_defaults(func=_cmd_gtplus)

    p = sub.add_parser("eval", parents=[common, morph, rect],
                       help="evaluate predictions against ground truth and GT+")
    p.add_argument("pred", help="prediction PNG directory, or 'zero' for the pseudo baseline")
    p.add_argument("gt", help="ground-truth PNG directory")
    p.add_argument("sparse", help="sparse input PNG directory")
    p.add_argument("--outlier-rule", choices=("error", "depth"), default="error",
                   help="outlier test: error>3m and >5%% relative (default), or the "
                        "literal depth>3m reading")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser(
        "postprocess",
        parents=[common, morph],
        help="remove prediction pixels that stray from the pseudo map",
        epilog=_POSTPROCESS_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("pred", help="prediction PNG file or directory")
    p.add_argument("sparse", help="sparse input PNG file or directory")
    p.add_argument("out", help="output PNG file or directory")
    p.add_argument("--pseudo", help="use precomputed pseudo maps instead of completing sparse")
    p.add_argument("--schedule", default="dynamic",
                   help="dynamic (default), global:<t>, or upper:thr[,upper:thr...]")
    p.set_defaults(func=_cmd_postprocess)

    p = sub.add_parser("subsample", parents=[common],
                       help="thin raw scans to fewer beams and project them")
    p.add_argument("scans", help=".bin scan file or directory")
    p.add_argument("out", help="output directory for thinned .bin and projected .png")
    p.add_argument("--keep-every", type=int, required=True,
                   help="keep every Nth elevation row (2 = half, 4 = quarter, 1 = identity)")
    p.add_argument("--bins", type=int, default=64, help="elevation rows spanning the range")
    p.add_argument("--elevation", default="-24.9,2.0", help="elevation range 'low,high' degrees")
    p.add_argument("--calib-cam2cam", required=True, help="camera calibration text file")
    p.add_argument("--calib-velo2cam", required=True, help="scanner calibration text file")
    p.add_argument("--camera", type=int, default=2, help="rectified camera index (default 2)")
    p.add_argument("--width", type=int, default=1242, help="projected image width")
    p.add_argument("--height", type=int, default=375, help="projected image height")
    p.set_defaults(func=_cmd_subsample)

    p = sub.add_parser("cloud", parents=[common],
                       help="back-project depth PNGs to PLY point clouds")
    p.add_argument("depth", help="depth PNG file or directory")
    p.add_argument("out", help="output PLY file or directory")
    p.add_argument("--intrinsics", required=True, help="fx,fy,cx,cy in pixels")
    p.set_defaults(func=_cmd_cloud)

    return parser, sub


def _apply_config_file(argv, parser, sub):
    """Load --config JSON and install it as defaults so flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    try:
        loaded = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file {known.config}: {exc}") from None
    if not isinstance(loaded, dict):
        raise CliError(f"config file {known.config} must hold a JSON object")

    known_dests = set()
    for sp in sub.choices.values():
        known_dests.update(a.dest for a in sp._actions)
    bad = sorted(set(loaded) - known_dests)
    if bad:
        raise CliError(f"unknown config keys: {', '.join(bad)}")
    for sp in sub.choices.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in loaded.items() if k in dests})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()
    try:
        _apply_config_file(argv, parser, sub)
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
