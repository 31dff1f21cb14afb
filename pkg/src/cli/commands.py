"""
Command line interface: mask generation and optimization, PSF simulation,
MTF export, capture, reconstruction, refocusing, metrics and experiments.
"""
import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.config import (
    ADMM_ITERATIONS,
    ADMM_RHO,
    APERTURE_FRACTION,
    DESK_SHAPE,
    EPOCHS,
    FAR_DEPTH_CM,
    FULL_SENSOR_PITCH_UM,
    FULL_SHAPE,
    FZA_ZONES,
    LEARNING_RATE,
    LOG_LEVEL,
    MASK_SENSOR_DIST_MM,
    N_SECTIONS,
    OPTIM_SHAPE,
    RANDOM_DENSITY,
    SEED,
    SENSOR_PITCH_UM,
    SHOW_PROGRESS,
    TOOL_NAME,
    TOOL_VERSION,
)
from src.errors import InvalidParameterError, RadialensError
from src.masks.factory import MaskSpec, build_mask
from src.masks.mask_image import MaskImage
from src.masks.radial import RadialMaskParams
from src.optics.psf import Geometry, Psf
from src.utils.file_utils import (
    load_image,
    load_json,
    save_csv,
    save_image,
    save_json,
    sidecar_path,
    write_sidecar,
)

logger = logging.getLogger(__name__)


# Argument parsing helpers
def parse_size(text: str) -> Tuple[int, int]:
    """Parse '128x156' into (rows, cols)"""
    try:
        rows, cols = (int(token) for token in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 128x156, got {text!r}")
    if rows < 2 or cols < 2:
        raise argparse.ArgumentTypeError(f"size must be at least 2x2, got {text!r}")
    return rows, cols


def parse_depths(text: str) -> List[float]:
    try:
        return [float(token) for token in text.split(",") if token.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"depths must be comma-separated numbers, got {text!r}")


def parse_region(text: str) -> Tuple[slice, slice]:
    """Parse 'r0:r1,c0:c1' into a pair of slices"""
    try:
        rows, cols = text.split(",")
        r0, r1 = (int(v) for v in rows.split(":"))
        c0, c1 = (int(v) for v in cols.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"region must look like r0:r1,c0:c1, got {text!r}")
    return slice(r0, r1), slice(c0, c1)


def _args_config(args: argparse.Namespace) -> Dict[str, Any]:
    """JSON-safe view of the arguments, hashed into every sidecar"""
    config = {}
    for key, value in sorted(vars(args).items()):
        if callable(value):
            continue
        if isinstance(value, slice):
            value = [value.start, value.stop]
        elif isinstance(value, tuple) and value and isinstance(value[0], slice):
            value = [[s.start, s.stop] for s in value]
        elif isinstance(value, tuple):
            value = list(value)
        config[key] = value
    return config


def _save_artifact(image: np.ndarray, path: str, args: argparse.Namespace, seed: Optional[int] = None,
                   bit_depth: int = 8, normalize: bool = True, **extra) -> None:
    fields = save_image(image, path, bit_depth=bit_depth, normalize=normalize)
    fields.update(extra)
    write_sidecar(path, _args_config(args), seed, fields)
    logger.info("Wrote %s", path)


def load_mask(path: str, pitch: float = SENSOR_PITCH_UM, aperture_fraction: float = APERTURE_FRACTION) -> MaskImage:
    """Read a mask image (first channel) and reapply the aperture"""
    grid = np.clip(load_image(path)[0], 0.0, 1.0)
    return MaskImage.shielded(grid, pitch=pitch, aperture_fraction=aperture_fraction)


def load_psf(path: str) -> Psf:
    """Read a PSF image; depth and magnification come from its sidecar when present"""
    kernel = load_image(path)[0]
    meta = load_json(sidecar_path(path)) if os.path.exists(sidecar_path(path)) else {}
    return Psf.from_kernel(
        np.clip(kernel, 0.0, None),
        depth_z=float(meta.get("depth_cm", FAR_DEPTH_CM)),
        mag=float(meta.get("mag", 1.0)),
        mask_sensor_dist_mm=meta.get("mask_sensor_dist_mm"),
    )


def load_measurement(path: str):
    from src.imaging.forward import SensorMeasurement

    channels = load_image(path)
    meta = load_json(sidecar_path(path)) if os.path.exists(sidecar_path(path)) else {}
    # PNG previews store values divided by their normalization constant
    if meta.get("format") == "png":
        channels = channels * float(meta.get("normalization", 1.0))
    return SensorMeasurement(np.clip(channels, 0.0, None))


# Commands
def cmd_mask_gen(args: argparse.Namespace) -> int:
    params = RadialMaskParams.from_dict(load_json(args.params)) if args.params else None
    if args.kind == "radial" and params is None:
        raise InvalidParameterError("radial masks need --params")
    spec = MaskSpec(kind=args.kind, sections=args.sections, density=args.density,
                    beta=args.beta, zones=args.zones, binarize=args.binarize)
    mask = build_mask(spec, args.size, args.seed, params, pitch=args.pitch, aperture_fraction=args.aperture)
    _save_artifact(mask.grid, args.out, args, seed=args.seed, normalize=False,
                   mean_transmittance=round(mask.mean_transmittance, 6))
    print(f"{spec.label} mask {args.size[0]}x{args.size[1]}: mean transmittance {mask.mean_transmittance:.4f}")
    return 0


def cmd_mask_optimize(args: argparse.Namespace) -> int:
    from src.optimization.optimizer import optimize, star_chart_baselines
    from src.optimization.types import OptimConfig
    from src.ui.display import display_optimization

    cfg = OptimConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
                      grid_ny=args.size[0], grid_nx=args.size[1], n_sections=args.sections,
                      aperture_fraction=args.aperture)
    trace = optimize(cfg, progress=SHOW_PROGRESS)
    save_json(trace.final_params.to_dict(), args.out)
    if args.trace:
        save_csv(trace.to_frame(), args.trace)
    baselines = star_chart_baselines(cfg) if args.baselines else None
    display_optimization(trace.final_loss, trace.final_mean_transmittance, trace.binarity_fraction, baselines)
    return 0


def cmd_psf(args: argparse.Namespace) -> int:
    mask = load_mask(args.mask, pitch=args.pitch, aperture_fraction=args.aperture)
    geometry = Geometry(args.dist, args.pitch, args.size)
    psf = geometry.psf(mask, args.depth)
    _save_artifact(psf.kernel, args.out, args, **psf.sidecar())
    return 0


def cmd_mtf(args: argparse.Namespace) -> int:
    from src.optics.mtf import mtf_comparison, plot_mtf_profiles

    labels = args.labels or [os.path.splitext(os.path.basename(path))[0] for path in args.inputs]
    if len(labels) != len(args.inputs):
        raise InvalidParameterError("--labels must name every input")
    kernels = {label: load_image(path)[0] for label, path in zip(labels, args.inputs)}
    frame = mtf_comparison(kernels, n_bins=args.bins)
    save_csv(frame, args.out)
    if args.plot:
        plot_mtf_profiles(frame, args.plot)
        write_sidecar(args.plot, _args_config(args), None, {"format": "png"})
    return 0


def cmd_capture(args: argparse.Namespace) -> int:
    from src.data_ingestion.scenes import dual_depth_scene, load_scene_manifest
    from src.imaging.forward import NoiseModel, capture

    scene = load_scene_manifest(args.scene, shape=args.size) if args.scene else dual_depth_scene(args.size)
    mask = load_mask(args.mask, pitch=args.pitch, aperture_fraction=args.aperture)
    geometry = Geometry(args.dist, args.pitch, args.size)
    psfs = {depth: geometry.psf(mask, depth) for depth in scene.depths}
    noise = None
    if args.noise_sigma > 0 or args.poisson_scale is not None:
        noise = NoiseModel(gaussian_sigma=args.noise_sigma, poisson_scale=args.poisson_scale)
    measurement = capture(scene, psfs, args.size, noise=noise, seed=args.seed)
    _save_artifact(measurement.channels, args.out, args, seed=args.seed, bit_depth=16,
                   depths_cm=[float(d) for d in scene.depths])
    if args.truth:
        _save_artifact(scene.flattened(), args.truth, args)
    return 0


def _admm_config(args: argparse.Namespace, depth: float = FAR_DEPTH_CM):
    from src.reconstruction.admm import AdmmConfig

    return AdmmConfig(tau=args.tau, rho=args.rho, iterations=args.iters, psf_depth_cm=depth)


def _save_traces(traces, path: str) -> None:
    if len(traces) == 1:
        save_csv(traces[0], path)
        return
    stem, ext = os.path.splitext(path)
    for c, trace in enumerate(traces):
        save_csv(trace, f"{stem}_c{c}{ext}")


def cmd_recon(args: argparse.Namespace) -> int:
    from src.reconstruction.admm import admm_solve

    measurement = load_measurement(args.measurement)
    psf = load_psf(args.psf)
    recon = admm_solve(measurement, psf, _admm_config(args, psf.depth_z), scene_dims=args.scene_size,
                       progress=SHOW_PROGRESS)
    _save_artifact(recon.image, args.out, args, psf_depth_cm=recon.psf_depth_cm,
                   tau=[round(t, 12) for t in recon.taus])
    if args.trace:
        _save_traces(recon.residual_trace, args.trace)
    return 0


def cmd_refocus(args: argparse.Namespace) -> int:
    from src.reconstruction.refocus import refocus_sweep

    measurement = load_measurement(args.measurement)
    mask = load_mask(args.mask, pitch=args.pitch, aperture_fraction=args.aperture)
    geometry = Geometry(args.dist, args.pitch, args.size or measurement.shape)
    sweep = refocus_sweep(measurement, mask, args.depths, _admm_config(args), geometry=geometry,
                          progress=SHOW_PROGRESS)
    for depth, recon in sweep:
        path = os.path.join(args.out_dir, f"refocus_{depth:g}cm.{args.format}")
        _save_artifact(recon.image, path, args, psf_depth_cm=depth)
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    from src.evaluation.metrics import evaluate

    report = evaluate(load_image(args.ref), load_image(args.test), region=args.region,
                      normalize=not args.no_normalize)
    data = report.to_dict()
    if args.out:
        save_json(data, args.out)
    print(f"PSNR {data['psnr_db']}  SSIM {data['ssim']:.4f}  MAE {data['mae']:.6f}")
    return 0


def cmd_experiment_run(args: argparse.Namespace) -> int:
    from app import ExperimentConfig, run_experiment
    from src.ui.display import display_metric_table, display_refocus

    cfg = ExperimentConfig.from_dict(load_json(args.config), base_dir=os.path.dirname(os.path.abspath(args.config)))
    if args.full_scale:
        cfg = replace(cfg, sensor_dims=FULL_SHAPE, sensor_pitch_um=FULL_SENSOR_PITCH_UM)
    if args.out_dir:
        cfg = replace(cfg, output_dir=args.out_dir)
    manifest = run_experiment(cfg, workers=args.workers, progress=SHOW_PROGRESS)
    summary = load_json(os.path.join(cfg.output_dir, manifest["summary"]))
    display_metric_table(summary, region="near")
    display_refocus(summary)
    return 0


def _geometry_args(parser: argparse.ArgumentParser, size_default: Optional[Tuple[int, int]] = DESK_SHAPE) -> None:
    parser.add_argument("--size", type=parse_size, default=size_default, help="grid as ROWSxCOLS")
    parser.add_argument("--pitch", type=float, default=SENSOR_PITCH_UM, help="pixel pitch in micrometers")
    parser.add_argument("--aperture", type=float, default=APERTURE_FRACTION, help="relative aperture diameter")


def _solver_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", type=float, default=None, help="TV weight (default scales with the measurement)")
    parser.add_argument("--rho", type=float, default=ADMM_RHO)
    parser.add_argument("--iters", type=int, default=ADMM_ITERATIONS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="Extended depth-of-field lensless imaging with radial masks")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    parser.add_argument("--log-level", default=LOG_LEVEL)
    commands = parser.add_subparsers(dest="command", required=True)

    # mask gen | optimize
    mask = commands.add_parser("mask", help="generate or optimize coded masks")
    mask_commands = mask.add_subparsers(dest="mask_command", required=True)

    gen = mask_commands.add_parser("gen", help="realize a mask on a grid")
    gen.add_argument("--kind", choices=("radial", "star", "fza", "random"), required=True)
    _geometry_args(gen)
    gen.add_argument("--sections", type=int, default=N_SECTIONS)
    gen.add_argument("--params", help="radial parameters JSON")
    gen.add_argument("--density", type=float, default=RANDOM_DENSITY)
    gen.add_argument("--beta", type=float, default=None, help="FZA constant in micrometers")
    gen.add_argument("--zones", type=int, default=FZA_ZONES)
    gen.add_argument("--seed", type=int, default=SEED)
    gen.add_argument("--binarize", action="store_true")
    gen.add_argument("--out", required=True, help="output .pfm or .png")
    gen.set_defaults(func=cmd_mask_gen)

    opt = mask_commands.add_parser("optimize", help="optimize a radial mask for mean MTF")
    opt.add_argument("--sections", type=int, default=N_SECTIONS)
    opt.add_argument("--size", type=parse_size, default=OPTIM_SHAPE)
    opt.add_argument("--aperture", type=float, default=APERTURE_FRACTION)
    opt.add_argument("--lr", type=float, default=LEARNING_RATE)
    opt.add_argument("--epochs", type=int, default=EPOCHS)
    opt.add_argument("--seed", type=int, default=SEED)
    opt.add_argument("--out", required=True, help="parameters JSON")
    opt.add_argument("--trace", help="per-epoch trace CSV")
    opt.add_argument("--baselines", action="store_true", help="also report star-chart mean MTF")
    opt.set_defaults(func=cmd_mask_optimize)

    psf = commands.add_parser("psf", help="simulate the PSF of a mask at one depth")
    psf.add_argument("--mask", required=True)
    psf.add_argument("--depth", type=float, required=True, help="source distance in cm")
    psf.add_argument("--dist", type=float, default=MASK_SENSOR_DIST_MM, help="mask-sensor distance in mm")
    _geometry_args(psf, size_default=None)
    psf.add_argument("--out", required=True)
    psf.set_defaults(func=cmd_psf)

    mtf = commands.add_parser("mtf", help="export radial MTF profiles")
    mtf.add_argument("--inputs", nargs="+", required=True, help="mask or PSF images")
    mtf.add_argument("--labels", nargs="+")
    mtf.add_argument("--bins", type=int, default=32)
    mtf.add_argument("--out", required=True, help="profiles CSV")
    mtf.add_argument("--plot", help="profiles PNG")
    mtf.set_defaults(func=cmd_mtf)

    cap = commands.add_parser("capture", help="synthesize a sensor measurement")
    cap.add_argument("--scene", help="scene manifest JSON (default: bundled dual-depth charts)")
    cap.add_argument("--mask", required=True)
    cap.add_argument("--dist", type=float, default=MASK_SENSOR_DIST_MM)
    _geometry_args(cap)
    cap.add_argument("--noise-sigma", type=float, default=0.0)
    cap.add_argument("--poisson-scale", type=float, default=None)
    cap.add_argument("--seed", type=int, default=SEED)
    cap.add_argument("--out", required=True, help="measurement .pfm or .png")
    cap.add_argument("--truth", help="also write the all-in-focus scene")
    cap.set_defaults(func=cmd_capture)

    recon = commands.add_parser("recon", help="reconstruct a scene")
    recon_commands = recon.add_subparsers(dest="recon_command", required=True)
    admm = recon_commands.add_parser("admm", help="ADMM with TV and nonnegativity")
    admm.add_argument("--measurement", required=True)
    admm.add_argument("--psf", required=True)
    _solver_args(admm)
    admm.add_argument("--scene-size", type=parse_size, default=None)
    admm.add_argument("--out", required=True)
    admm.add_argument("--trace", help="residual CSV")
    admm.set_defaults(func=cmd_recon)

    refocus = commands.add_parser("refocus", help="reconstruct at several assumed depths")
    refocus.add_argument("--measurement", required=True)
    refocus.add_argument("--mask", required=True)
    refocus.add_argument("--depths", type=parse_depths, required=True, help="comma-separated depths in cm")
    refocus.add_argument("--dist", type=float, default=MASK_SENSOR_DIST_MM)
    _geometry_args(refocus, size_default=None)
    _solver_args(refocus)
    refocus.add_argument("--format", choices=("png", "pfm"), default="png")
    refocus.add_argument("--out-dir", required=True)
    refocus.set_defaults(func=cmd_refocus)

    metrics = commands.add_parser("metrics", help="PSNR, SSIM and MAE of a reconstruction")
    metrics.add_argument("--ref", required=True)
    metrics.add_argument("--test", required=True)
    metrics.add_argument("--region", type=parse_region, default=None, help="r0:r1,c0:c1")
    metrics.add_argument("--no-normalize", action="store_true")
    metrics.add_argument("--out", help="report JSON")
    metrics.set_defaults(func=cmd_metrics)

    experiment = commands.add_parser("experiment", help="run a configured experiment")
    experiment_commands = experiment.add_subparsers(dest="experiment_command", required=True)
    run = experiment_commands.add_parser("run")
    run.add_argument("config", help="experiment JSON")
    run.add_argument("--full-scale", action="store_true", help=f"use the {FULL_SHAPE[0]}x{FULL_SHAPE[1]} grid")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out-dir", default=None)
    run.set_defaults(func=cmd_experiment_run)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point.

    Returns:
        0 on success, 1 when a stage raised a RadialensError
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RadialensError as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
