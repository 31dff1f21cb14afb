"""
Desk-scale end-to-end checks of the extended depth-of-field claims.

Run with `pytest -m slow`.
"""
from dataclasses import replace
from pathlib import Path

import pandas as pd
import pytest

from app import ExperimentConfig, run_experiment
from config.config import DESK_SHAPE, SENSOR_PITCH_UM, STAR_CHART_SECTIONS
from src.data_ingestion.scenes import builtin_layer
from src.evaluation.metrics import evaluate
from src.imaging.forward import capture
from src.imaging.scene import Scene
from src.masks.baselines import default_fza_beta, gen_fza, gen_random, gen_star_chart
from src.masks.radial import realize_radial
from src.optics.mtf import mtf, radial_mtf_profile
from src.optics.psf import Geometry, psf_scale_mae
from src.optimization.loss import loss
from src.optimization.optimizer import optimize, star_chart_baselines
from src.optimization.types import OptimConfig
from src.reconstruction.admm import AdmmConfig, admm_solve
from src.utils.file_utils import load_json

pytestmark = pytest.mark.slow

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"


@pytest.fixture(scope="module")
def optimized_trace():
    return optimize(OptimConfig(epochs=2000, seed=0), progress=False)


@pytest.fixture(scope="module")
def optimized_params(optimized_trace):
    return optimized_trace.final_params


@pytest.fixture(scope="module")
def table1_dir(tmp_path_factory):
    path = EXPERIMENTS / "table1.json"
    cfg = ExperimentConfig.from_dict(load_json(str(path)), base_dir=str(path.parent))
    cfg = replace(cfg, output_dir=str(tmp_path_factory.mktemp("table1")))
    run_experiment(cfg, progress=False)
    return Path(cfg.output_dir)


@pytest.fixture(scope="module")
def table1_summary(table1_dir):
    return load_json(str(table1_dir / "summary.json"))


def test_optimized_mask_beats_star_charts(optimized_params):
    cfg = OptimConfig(epochs=2000, seed=0)
    mean = -loss(optimized_params, cfg)
    assert all(mean > value for value in star_chart_baselines(cfg).values())

    shape = (cfg.grid_ny, cfg.grid_nx)
    optimized = radial_mtf_profile(mtf(realize_radial(optimized_params, *shape).grid))["mean_mtf"]
    for n_sections in STAR_CHART_SECTIONS:
        star = radial_mtf_profile(mtf(gen_star_chart(n_sections, *shape).grid))["mean_mtf"]
        assert (optimized >= star).mean() >= 0.7, n_sections


def test_optimized_mask_turns_binary(optimized_trace):
    assert optimized_trace.binarity_fraction >= 0.8


@pytest.mark.xfail(strict=True, reason="the mean-MTF optimum settles near 15% transmittance; see DESIGN.md")
def test_optimized_mask_transmits_about_half(optimized_trace):
    assert 0.35 <= optimized_trace.final_mean_transmittance <= 0.55


def test_radial_psf_scale_error_is_at_most_half_of_baselines(optimized_params):
    geometry = Geometry(4.0, SENSOR_PITCH_UM, DESK_SHAPE)

    def scale_error(mask):
        return psf_scale_mae(geometry.psf(mask, 30.0), geometry.psf(mask, 5.0))

    kwargs = {"pitch": SENSOR_PITCH_UM}
    radial = scale_error(realize_radial(optimized_params, *DESK_SHAPE, **kwargs))
    fza = scale_error(gen_fza(default_fza_beta(*DESK_SHAPE, **kwargs), *DESK_SHAPE, **kwargs))
    random = scale_error(gen_random(0.5, 0, *DESK_SHAPE, **kwargs))
    assert radial <= 0.5 * fza
    assert radial <= 0.5 * random


def test_matched_single_depth_round_trip(optimized_params):
    shape = (128, 128)
    mask = realize_radial(optimized_params, *shape, pitch=SENSOR_PITCH_UM)
    psf = Geometry(4.0, SENSOR_PITCH_UM, shape).psf(mask, 30.0)
    truth = builtin_layer("toy", shape)
    b = capture(Scene([(30.0, truth)]), {30.0: psf})
    recon = admm_solve(b, psf, AdmmConfig(iterations=100), progress=False)
    assert evaluate(truth, recon.image).psnr_db >= 25.0


def test_near_object_ordering(table1_summary):
    near = {label: entry["metrics"]["near"] for label, entry in table1_summary["masks"].items()}
    assert near["radial"]["psnr_db"] >= near["fza"]["psnr_db"] + 3.0
    assert near["radial"]["psnr_db"] >= near["random"]["psnr_db"] + 3.0
    assert near["radial"]["ssim"] > near["fza"]["ssim"]
    assert near["radial"]["ssim"] > near["random"]["ssim"]


def test_radial_far_layer_ignores_focus(table1_summary):
    radial = table1_summary["masks"]["radial"]["refocus"]
    assert abs(radial["30"]["far"] - radial["5"]["far"]) < 1.0


def test_fza_near_layer_prefers_close_focus(table1_summary):
    fza = table1_summary["masks"]["fza"]["refocus"]
    assert fza["5"]["near"] > fza["30"]["near"]


@pytest.mark.xfail(strict=True, reason="crosstalk from the mismatched layer dominates at desk scale; see DESIGN.md")
def test_radial_near_layer_ignores_focus(table1_summary):
    radial = table1_summary["masks"]["radial"]["refocus"]
    assert abs(radial["30"]["near"] - radial["5"]["near"]) < 1.0


@pytest.mark.xfail(strict=True, reason="crosstalk from the mismatched layer dominates at desk scale; see DESIGN.md")
def test_fza_far_layer_prefers_far_focus(table1_summary):
    fza = table1_summary["masks"]["fza"]["refocus"]
    assert fza["30"]["far"] > fza["5"]["far"]


def test_objective_does_not_increase(table1_dir, table1_summary):
    traces = sorted(table1_dir.glob("*/residuals*.csv"))
    # one trace per color channel of every mask
    assert len(traces) == 3 * len(table1_summary["masks"])
    for path in traces:
        objective = pd.read_csv(path)["objective"]
        assert objective.iloc[-1] <= objective.iloc[0], path
