"""
Main application module that ties the mask, optics, imaging, reconstruction
and evaluation components into reproducible experiments.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config.config import (
    APERTURE_FRACTION,
    DESK_SHAPE,
    MASK_SENSOR_DIST_MM,
    OUTPUT_DIR,
    SEED,
    SENSOR_PITCH_UM,
    SHOW_PROGRESS,
    THREADS,
    TOOL_VERSION,
)
from src.data_ingestion.scenes import BUILTIN_PREFIX, load_scene_manifest
from src.errors import InvalidParameterError, StageError
from src.evaluation.metrics import evaluate
from src.imaging.forward import NoiseModel, capture
from src.imaging.scene import Scene
from src.masks.factory import MaskSpec, build_mask
from src.masks.mask_image import MaskImage
from src.masks.radial import RadialMaskParams
from src.optics.mtf import mean_mtf
from src.optics.psf import Geometry, Psf, psf_scale_mae
from src.optimization.optimizer import optimize
from src.optimization.types import OptimConfig
from src.reconstruction.admm import AdmmConfig, Reconstruction, admm_solve
from src.reconstruction.refocus import refocus_sweep
from src.utils.file_utils import (
    config_hash,
    load_json,
    save_csv,
    save_image,
    save_json,
    write_sidecar,
)

logger = logging.getLogger(__name__)

DEFAULT_SCENE = {"layers": [{"depth_cm": 30.0, "image": "builtin:toy"},
                            {"depth_cm": 5.0, "image": "builtin:ou"}]}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything needed to rerun one experiment.

    Attributes:
        name: Experiment name
        masks: Mask variants compared in the experiment
        scene: Scene manifest (inline); image paths are absolute or builtin
        sensor_dims: Sensor and PSF grid (rows, cols); masks are realized on it
        mask_sensor_dist_mm: Mask-to-sensor distance
        sensor_pitch_um: Sensor pixel pitch (also the mask pitch)
        aperture_fraction: Relative diameter of the unshielded disk
        recon: Reconstruction settings
        refocus_depths: Depths of an optional refocus sweep
        noise: Optional NoiseModel settings
        output_dir: Where artifacts are written
        seed: Root seed; every variant draws its own child seed from it
    """

    name: str = "experiment"
    masks: Tuple[MaskSpec, ...] = ()
    scene: Dict[str, Any] = field(default_factory=lambda: DEFAULT_SCENE)
    sensor_dims: Tuple[int, int] = DESK_SHAPE
    mask_sensor_dist_mm: float = MASK_SENSOR_DIST_MM
    sensor_pitch_um: float = SENSOR_PITCH_UM
    aperture_fraction: float = APERTURE_FRACTION
    recon: AdmmConfig = AdmmConfig()
    refocus_depths: Tuple[float, ...] = ()
    noise: Optional[Dict[str, Any]] = None
    output_dir: str = OUTPUT_DIR
    seed: int = SEED

    def __post_init__(self):
        if not self.masks:
            raise InvalidParameterError("an experiment needs at least one mask")
        labels = [spec.label for spec in self.masks]
        if len(set(labels)) != len(labels):
            raise InvalidParameterError(f"mask labels must be unique, got {labels}")
        if not self.mask_sensor_dist_mm > 0 or not self.sensor_pitch_um > 0:
            raise InvalidParameterError("geometry values must be positive")
        if len(self.sensor_dims) != 2 or min(self.sensor_dims) < 2:
            raise InvalidParameterError(f"invalid sensor dims {self.sensor_dims}")
        if any(not depth > 0 for depth in self.refocus_depths):
            raise InvalidParameterError("refocus depths must be positive")
        for spec in self.masks:
            if spec.params_file is not None and not os.path.exists(spec.params_file):
                raise InvalidParameterError(f"params file not found: {spec.params_file}")
        for layer in self.scene.get("layers", []):
            image = str(layer.get("image", ""))
            if not image.startswith(BUILTIN_PREFIX) and not os.path.exists(image):
                raise InvalidParameterError(f"scene image not found: {image}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Optional[str] = None) -> "ExperimentConfig":
        """
        Build a config from parsed JSON, resolving relative paths against base_dir.

        Args:
            data: Parsed experiment JSON
            base_dir: Directory of the JSON file

        Returns:
            Validated ExperimentConfig
        """
        base_dir = base_dir or os.getcwd()
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidParameterError(f"unknown experiment settings: {sorted(unknown)}")

        def resolve(path: str) -> str:
            return path if os.path.isabs(path) or path.startswith(BUILTIN_PREFIX) else os.path.join(base_dir, path)

        masks = []
        for entry in data.get("masks", []):
            entry = dict(entry)
            if entry.get("params_file"):
                entry["params_file"] = resolve(entry["params_file"])
            masks.append(MaskSpec.from_dict(entry))

        scene = data.get("scene", DEFAULT_SCENE)
        if isinstance(scene, str):
            scene = load_json(resolve(scene))
        scene = {"layers": [dict(layer, image=resolve(str(layer["image"]))) for layer in scene.get("layers", [])]}

        kwargs = dict(data)
        kwargs.update(
            masks=tuple(masks),
            scene=scene,
            recon=AdmmConfig.from_dict(data.get("recon", {})),
            refocus_depths=tuple(float(d) for d in data.get("refocus_depths", ())),
        )
        if "sensor_dims" in data:
            kwargs["sensor_dims"] = tuple(int(n) for n in data["sensor_dims"])
        return cls(**kwargs)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["masks"] = [spec.to_dict() for spec in self.masks]
        data["sensor_dims"] = list(self.sensor_dims)
        data["refocus_depths"] = list(self.refocus_depths)
        return data

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.mask_sensor_dist_mm, self.sensor_pitch_um, self.sensor_dims)


@contextmanager
def _stage(name: str, manifest: Dict[str, Any]):
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error("Stage %s failed: %s", name, e)
        raise StageError(name, dict(manifest), e) from e


def _layer_regions(scene: Scene) -> Dict[str, Tuple[float, Optional[Tuple[slice, slice]]]]:
    far, near = max(scene.depths), min(scene.depths)
    return {"far": (far, scene.region_of(far)), "near": (near, scene.region_of(near))}


def _region_metrics(scene: Scene, image: np.ndarray) -> Dict[str, Dict[str, Any]]:
    """Full-frame metrics plus per-layer metrics inside each layer's region"""
    metrics = {"full": evaluate(scene.flattened(), image).to_dict()}
    for name, (depth, region) in _layer_regions(scene).items():
        if region is not None:
            metrics[name] = evaluate(scene.layer(depth).image, image, region=region).to_dict()
    return metrics


def _layer_psnr(scene: Scene, image: np.ndarray) -> Dict[str, Any]:
    return {name: evaluate(scene.layer(depth).image, image, region=region).psnr_db
            for name, (depth, region) in _layer_regions(scene).items() if region is not None}


class _Variant:
    """Runs the mask -> PSF -> capture -> recon -> metrics chain for one mask"""

    def __init__(self, cfg: ExperimentConfig, spec: MaskSpec, scene: Scene, seed: int, progress: bool):
        self.cfg = cfg
        self.spec = spec
        self.scene = scene
        self.seed = seed
        self.progress = progress
        self.out_dir = os.path.join(cfg.output_dir, spec.label)
        self.config_dict = cfg.to_dict()
        self.manifest: Dict[str, Any] = {"label": spec.label, "artifacts": []}
        self.summary: Dict[str, Any] = {"kind": spec.kind}
        self.mask: Optional[MaskImage] = None

    def _path(self, name: str) -> str:
        self.manifest["artifacts"].append(os.path.join(self.spec.label, name))
        return os.path.join(self.out_dir, name)

    def _save(self, image: np.ndarray, name: str, bit_depth: int = 8, normalize: bool = True, **extra) -> None:
        path = self._path(name)
        fields = save_image(image, path, bit_depth=bit_depth, normalize=normalize)
        fields.update(extra)
        write_sidecar(path, self.config_dict, self.seed, fields)

    def _stage(self, name: str):
        return _stage(f"{self.spec.label}:{name}", self.manifest)

    def _radial_params(self) -> RadialMaskParams:
        if self.spec.params_file is not None:
            return RadialMaskParams.from_dict(load_json(self.spec.params_file))
        settings = dict(self.spec.optimize or {})
        settings.setdefault("n_sections", self.spec.sections)
        settings.setdefault("aperture_fraction", self.cfg.aperture_fraction)
        settings["seed"] = self.seed
        trace = optimize(OptimConfig.from_dict(settings), progress=self.progress)
        save_json(trace.final_params.to_dict(), self._path("params.json"))
        save_csv(trace.to_frame(), self._path("trace.csv"))
        self.summary["optimization"] = {
            "final_loss": round(float(trace.final_loss), 8),
            "mean_transmittance": round(float(trace.final_mean_transmittance), 6),
            "binarity_fraction": round(float(trace.binarity_fraction), 6),
        }
        return trace.final_params

    def psfs(self) -> Dict[float, Psf]:
        cfg = self.cfg
        depths = sorted(set(self.scene.depths) | {cfg.recon.psf_depth_cm} | set(cfg.refocus_depths))
        if self.spec.kind == "impulse":
            return {depth: Psf.impulse(1, 1, depth_z=depth) for depth in depths}

        with self._stage("mask"):
            params = self._radial_params() if self.spec.kind == "radial" else None
            self.mask = build_mask(self.spec, cfg.sensor_dims, self.seed, params,
                                   pitch=cfg.sensor_pitch_um, aperture_fraction=cfg.aperture_fraction)
            self._save(self.mask.grid, "mask.png", normalize=False)
            self._save(self.mask.grid, "mask.pfm")
            self.summary["mean_transmittance"] = round(self.mask.mean_transmittance, 6)
            self.summary["mean_mtf"] = round(mean_mtf(self.mask.grid), 8)

        with self._stage("psf"):
            psfs = {depth: cfg.geometry.psf(self.mask, depth) for depth in depths}
            for depth, psf in psfs.items():
                self._save(psf.kernel, f"psf_{depth:g}cm.pfm", **psf.sidecar())
        return psfs

    def run(self) -> Dict[str, Any]:
        cfg = self.cfg
        psfs = self.psfs()
        with self._stage("psf"):
            far, near = max(self.scene.depths), min(self.scene.depths)
            self.summary["psf_scale_mae"] = round(psf_scale_mae(psfs[far], psfs[near]), 12)

        with self._stage("capture"):
            noise = NoiseModel(**cfg.noise) if cfg.noise else None
            measurement = capture(self.scene, psfs, cfg.sensor_dims, noise=noise, seed=self.seed)
            self._save(measurement.channels, "measurement.pfm")
            self._save(measurement.channels, "measurement.png", bit_depth=16)

        with self._stage("recon"):
            recon = admm_solve(measurement, psfs[cfg.recon.psf_depth_cm], cfg.recon,
                               scene_dims=self.scene.shape, progress=False)
            self._save(recon.image, "recon.pfm", psf_depth_cm=recon.psf_depth_cm)
            self._save(recon.image, "recon.png", psf_depth_cm=recon.psf_depth_cm)
            self._save_traces(recon, "residuals")

        with self._stage("metrics"):
            self.summary["metrics"] = _region_metrics(self.scene, recon.image)

        if cfg.refocus_depths and self.spec.kind != "impulse":
            with self._stage("refocus"):
                sweep = refocus_sweep(measurement, self.mask, cfg.refocus_depths, cfg.recon,
                                      geometry=cfg.geometry, scene_dims=self.scene.shape, progress=False)
                self.summary["refocus"] = {}
                for depth, result in sweep:
                    self._save(result.image, f"refocus_{depth:g}cm.png", psf_depth_cm=depth)
                    self.summary["refocus"][f"{depth:g}"] = _layer_psnr(self.scene, result.image)
        return self.summary

    def _save_traces(self, recon: Reconstruction, stem: str) -> None:
        if len(recon.residual_trace) == 1:
            save_csv(recon.residual_trace[0], self._path(f"{stem}.csv"))
            return
        for c, trace in enumerate(recon.residual_trace):
            save_csv(trace, self._path(f"{stem}_c{c}.csv"))


def variant_seeds(seed: int, n: int) -> List[int]:
    """Independent child seeds, stable under reordering of execution"""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(n)]


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None,
                   progress: bool = SHOW_PROGRESS) -> Dict[str, Any]:
    """
    Run every mask variant of an experiment and write the summary.

    Args:
        cfg: Experiment configuration
        workers: Parallel variants (capped by RADIALENS_THREADS)
        progress: Show progress bars

    Returns:
        Manifest with the summary path and every artifact, relative to output_dir
    """
    os.makedirs(cfg.output_dir, exist_ok=True)
    manifest: Dict[str, Any] = {"output_dir": cfg.output_dir, "variants": {}}
    config_dict = cfg.to_dict()

    with _stage("scene", manifest):
        scene = load_scene_manifest(cfg.scene, shape=cfg.sensor_dims)
        truth_path = os.path.join(cfg.output_dir, "truth.pfm")
        write_sidecar(truth_path, config_dict, cfg.seed, save_image(scene.flattened(), truth_path))
        manifest["truth"] = "truth.pfm"

    seeds = variant_seeds(cfg.seed, len(cfg.masks))
    workers = max(1, min(workers or THREADS, THREADS, len(cfg.masks)))
    inner_progress = progress and workers == 1
    variants = [_Variant(cfg, spec, scene, seed, inner_progress) for spec, seed in zip(cfg.masks, seeds)]
    logger.info("Running %d mask variants of '%s' on %d worker(s)", len(variants), cfg.name, workers)

    results: Dict[str, Dict[str, Any]] = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(variant.run) for variant in variants]
        for variant, future in tqdm(list(zip(variants, futures)), desc="variants", disable=not progress):
            try:
                results[variant.spec.label] = future.result()
            except StageError as e:
                manifest["variants"][variant.spec.label] = variant.manifest
                e.manifest = manifest
                raise
            manifest["variants"][variant.spec.label] = variant.manifest

    summary = {
        "name": cfg.name,
        "config_hash": config_hash(config_dict),
        "seed": cfg.seed,
        "masks": results,
        "tool_version": TOOL_VERSION,
    }
    save_json(summary, os.path.join(cfg.output_dir, "summary.json"))
    manifest["summary"] = "summary.json"
    return manifest
