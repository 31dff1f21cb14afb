import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from config.config import ADMM_TAU_SCALE
from src.errors import DimensionMismatchError, InvalidParameterError, OperatorCheckError
from src.imaging.forward import SensorMeasurement, forward_apply
from src.masks.radial import realize_radial
from src.optics.psf import Geometry, Psf
from src.reconstruction.admm import TRACE_COLUMNS, AdmmConfig, AdmmSolver, admm_solve
from src.reconstruction.refocus import refocus_sweep

PITCH = 10.0


def blur_kernel():
    kernel = np.zeros((3, 3))
    kernel[1, 1] = 0.7
    kernel[0, 1] = kernel[2, 1] = kernel[1, 0] = kernel[1, 2] = 0.075
    return Psf.from_kernel(kernel)


def test_single_pixel_psf_runs_every_iteration(rng):
    b = SensorMeasurement(rng.random((2, 6, 7)))
    recon = admm_solve(b, Psf(np.ones((1, 1))), AdmmConfig(tau=0.0, iterations=100), progress=False)
    assert_allclose(recon.image, b.channels, atol=1e-6)
    assert len(recon.residual_trace) == 2
    trace = recon.residual_trace[0]
    assert list(trace.columns) == TRACE_COLUMNS
    assert len(trace) == 100
    assert trace["primal_residual"].iloc[0] > 0.0
    assert trace["objective"].iloc[-1] < trace["objective"].iloc[0]
    assert recon.taus == [0.0, 0.0]


def test_centered_impulse_recovers_scene(rng):
    scene = 0.2 + 0.8 * rng.random((32, 32))
    b = SensorMeasurement(scene)
    recon = admm_solve(b, Psf.impulse(3, 3), AdmmConfig(tau=0.0, iterations=100), progress=False)
    assert recon.image.shape == (1, 32, 32)
    assert_allclose(recon.image[0], scene, atol=1e-6)


def test_full_measurement_deconvolves_blur(rng):
    scene = 0.2 + 0.8 * rng.random((30, 30))
    psf = blur_kernel()
    # sensor sees the whole linear convolution
    b = SensorMeasurement(np.maximum(forward_apply(scene, psf, (32, 32)), 0.0))
    recon = admm_solve(b, psf, AdmmConfig(tau=0.0, iterations=100), scene_dims=(30, 30), progress=False)
    error = np.linalg.norm(recon.image[0] - scene) / np.linalg.norm(scene)
    assert error < 1e-6


def test_reconstruction_is_nonnegative_and_deterministic(rng, radial_params):
    mask = realize_radial(radial_params, 32, 32, pitch=PITCH)
    psf = Geometry(4.0, PITCH).psf(mask, 30.0)
    scene = rng.random((3, 32, 32))
    b = SensorMeasurement(np.stack([np.maximum(forward_apply(c, psf, (32, 32)), 0.0) for c in scene]))
    cfg = AdmmConfig(iterations=20)
    first = admm_solve(b, psf, cfg, progress=False)
    second = admm_solve(b, psf, cfg, progress=False)
    assert first.image.shape == (3, 32, 32)
    assert first.image.min() >= 0.0
    assert_array_equal(first.image, second.image)
    assert len(first.residual_trace) == 3
    assert all(np.isfinite(trace.to_numpy()).all() for trace in first.residual_trace)
    assert first.psf_depth_cm == 30.0


def test_default_tau_scales_with_measurement(rng):
    psf = blur_kernel()
    b = SensorMeasurement(rng.random((16, 16)))
    recon = admm_solve(b, psf, AdmmConfig(iterations=2), progress=False)
    solver = AdmmSolver(psf, (16, 16), (16, 16), AdmmConfig())
    expected = ADMM_TAU_SCALE * float(np.max(solver.At(b.channels[0] / b.channels.max())))
    assert recon.taus[0] == pytest.approx(expected)
    assert recon.taus[0] > 0.0


def test_tv_lowers_the_total_variation_of_noise(rng):
    scene = np.full((24, 24), 0.5)
    psf = blur_kernel()
    noisy = np.maximum(forward_apply(scene, psf, (24, 24)) + 0.05 * rng.standard_normal((24, 24)), 0.0)
    b = SensorMeasurement(noisy)
    plain = admm_solve(b, psf, AdmmConfig(tau=0.0, iterations=100), progress=False)
    smooth = admm_solve(b, psf, AdmmConfig(tau=0.05, iterations=100), progress=False)
    variation = lambda img: np.abs(np.diff(img[0], axis=0)).sum() + np.abs(np.diff(img[0], axis=1)).sum()
    assert variation(smooth.image) < variation(plain.image)


def test_solver_operators_pass_adjoint_checks(radial_params):
    mask = realize_radial(radial_params, 16, 16, pitch=PITCH)
    psf = Geometry(4.0, PITCH).psf(mask, 30.0)
    for sensor in [(16, 16), (8, 8), (12, 10)]:
        AdmmSolver(psf, sensor, (16, 16), AdmmConfig()).check_adjoints()


def test_broken_adjoint_is_detected():
    solver = AdmmSolver(blur_kernel(), (16, 16), (16, 16), AdmmConfig())
    solver.Ht = lambda y: 2.0 * solver.H(y)
    with pytest.raises(OperatorCheckError):
        solver.check_adjoints()


def test_solver_rejects_mismatched_measurement():
    solver = AdmmSolver(blur_kernel(), (16, 16), (16, 16), AdmmConfig())
    with pytest.raises(DimensionMismatchError):
        solver.solve_channel(np.zeros((12, 12)))


@pytest.mark.parametrize("settings", [
    {"tau": -1.0},
    {"rho": 0.0},
    {"iterations": 0},
    {"psf_depth_cm": 0.0},
])
def test_admm_config_validation(settings):
    with pytest.raises(InvalidParameterError):
        AdmmConfig(**settings)


def test_admm_config_from_dict():
    assert AdmmConfig.from_dict({"tau": 0.1, "iterations": 3}) == AdmmConfig(tau=0.1, iterations=3)
    with pytest.raises(InvalidParameterError):
        AdmmConfig.from_dict({"mu": 1.0})


def test_single_depth_refocus_equals_direct_solve(rng, radial_params):
    mask = realize_radial(radial_params, 32, 32, pitch=PITCH)
    geometry = Geometry(4.0, PITCH)
    psf = geometry.psf(mask, 30.0)
    b = SensorMeasurement(np.maximum(forward_apply(rng.random((32, 32)), psf, (32, 32)), 0.0))
    cfg = AdmmConfig(iterations=10)
    sweep = refocus_sweep(b, mask, [30.0], cfg, geometry=geometry, progress=False)
    direct = admm_solve(b, psf, cfg, progress=False)
    assert [depth for depth, _ in sweep] == [30.0]
    assert_array_equal(sweep[0][1].image, direct.image)


def test_refocus_keeps_depth_order(rng, radial_params):
    mask = realize_radial(radial_params, 32, 32, pitch=PITCH)
    geometry = Geometry(4.0, PITCH)
    b = SensorMeasurement(rng.random((32, 32)))
    sweep = refocus_sweep(b, mask, [5.0, 30.0, 10.0], AdmmConfig(iterations=2), geometry=geometry, progress=False)
    assert [depth for depth, _ in sweep] == [5.0, 30.0, 10.0]
    assert [recon.psf_depth_cm for _, recon in sweep] == [5.0, 30.0, 10.0]


def test_refocus_needs_a_depth(rng, radial_params):
    mask = realize_radial(radial_params, 32, 32, pitch=PITCH)
    with pytest.raises(InvalidParameterError):
        refocus_sweep(SensorMeasurement(rng.random((32, 32))), mask, [], AdmmConfig())
