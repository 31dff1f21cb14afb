"""
ADMM reconstruction with anisotropic TV and nonnegativity.

Solves min_{v >= 0} 1/2 ||b - C H v||^2 + tau ||D v||_1 with the splitting
u1 = H v (crop-aware data block), u2 = D v (TV block), w = v (nonnegativity).
The unknown lives on the padded convolution grid where H and D are circular
and diagonal in the Fourier domain.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import fft
from tqdm import tqdm

from config.config import (
    ADMM_ITERATIONS,
    ADMM_RHO,
    ADMM_TAU_SCALE,
    FAR_DEPTH_CM,
    OPERATOR_CHECK_TOL,
    SHOW_PROGRESS,
)
from src.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    MaskOpaqueError,
    NonFiniteError,
    OperatorCheckError,
)
from src.imaging.forward import SensorMeasurement, crop_window, full_shape
from src.optics.psf import Psf
from src.reconstruction.tv import soft_threshold, tv_adjoint, tv_forward

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iter", "primal_residual", "dual_residual", "objective"]


@dataclass(frozen=True)
class AdmmConfig:
    """
    Reconstruction settings.

    Attributes:
        tau: TV weight; None picks ADMM_TAU_SCALE * max(A^T b) per channel
        rho: Penalty parameter shared by the three splitting blocks
        iterations: Iterations per channel
        psf_depth_cm: Depth the reconstruction PSF is calibrated for
    """

    tau: Optional[float] = None
    rho: float = ADMM_RHO
    iterations: int = ADMM_ITERATIONS
    psf_depth_cm: float = FAR_DEPTH_CM

    def __post_init__(self):
        if self.tau is not None and self.tau < 0:
            raise InvalidParameterError(f"tau must be nonnegative, got {self.tau}")
        if not self.rho > 0:
            raise InvalidParameterError(f"rho must be positive, got {self.rho}")
        if self.iterations < 1:
            raise InvalidParameterError(f"iterations must be at least 1, got {self.iterations}")
        if not self.psf_depth_cm > 0:
            raise InvalidParameterError(f"psf_depth_cm must be positive, got {self.psf_depth_cm}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AdmmConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidParameterError(f"unknown reconstruction settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Reconstruction:
    """
    Scene estimate in the units of the measurement.

    Attributes:
        image: Array (C, H, W), nonnegative
        residual_trace: One DataFrame per channel with TRACE_COLUMNS
        taus: TV weight used for each channel
        psf_depth_cm: Depth of the PSF used
    """

    image: np.ndarray
    residual_trace: List[pd.DataFrame] = field(default_factory=list)
    taus: List[float] = field(default_factory=list)
    psf_depth_cm: float = float("nan")


class AdmmSolver:
    """
    Precomputed operators for one (PSF, sensor crop, scene size) triple.

    Args:
        psf: Reconstruction PSF
        sensor_dims: (ny, nx) of the measurement
        scene_dims: (H, W) of the reconstructed scene
        cfg: Solver settings
    """

    def __init__(self, psf: Psf, sensor_dims: Tuple[int, int], scene_dims: Tuple[int, int], cfg: AdmmConfig):
        kernel = np.asarray(psf.kernel, dtype=np.float64)
        norm = np.linalg.norm(kernel)
        if not norm > 0:
            raise MaskOpaqueError("reconstruction PSF is zero")
        self.cfg = cfg
        self.scene_dims = tuple(scene_dims)
        self.sensor_dims = tuple(sensor_dims)
        self.full = full_shape(self.scene_dims, kernel.shape)
        self.crop = crop_window(self.full, *self.sensor_dims)
        self.grid = tuple(fft.next_fast_len(n, real=True) for n in self.full)
        self.scene_window = crop_window(self.grid, *self.scene_dims)

        # Unit-l2 kernel keeps the data term on the scale of the penalty;
        # estimates are scaled back by 1 / norm at the end.
        self.kernel_scale = 1.0 / norm
        padded = np.zeros(self.grid)
        padded[: kernel.shape[0], : kernel.shape[1]] = kernel * self.kernel_scale
        # Roll so a scene centered on the grid lands on the linear-convolution support
        offset = (self.scene_window[0].start, self.scene_window[1].start)
        padded = np.roll(padded, (-offset[0], -offset[1]), axis=(0, 1))
        self.h_spec = fft.rfft2(padded)

        self.crop_mask = np.zeros(self.grid)
        self.crop_mask[self.crop] = 1.0

        f_y = np.exp(2j * np.pi * fft.fftfreq(self.grid[0]))[:, None]
        f_x = np.exp(2j * np.pi * fft.rfftfreq(self.grid[1]))[None, :]
        self.dtd_spec = np.abs(f_x - 1.0) ** 2 + np.abs(f_y - 1.0) ** 2
        self.check_adjoints()

    # Operator blocks
    def H(self, v: np.ndarray) -> np.ndarray:
        return fft.irfft2(fft.rfft2(v) * self.h_spec, s=self.grid)

    def Ht(self, y: np.ndarray) -> np.ndarray:
        return fft.irfft2(fft.rfft2(y) * np.conj(self.h_spec), s=self.grid)

    def C(self, y: np.ndarray) -> np.ndarray:
        return y[self.crop]

    def Ct(self, b: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid)
        out[self.crop] = b
        return out

    @staticmethod
    def D(v: np.ndarray) -> np.ndarray:
        return tv_forward(v, boundary="circular")

    @staticmethod
    def Dt(d: np.ndarray) -> np.ndarray:
        return tv_adjoint(d, boundary="circular")

    def A(self, v: np.ndarray) -> np.ndarray:
        return self.C(self.H(v))

    def At(self, b: np.ndarray) -> np.ndarray:
        return self.Ht(self.Ct(b))

    def check_adjoints(self, tol: float = OPERATOR_CHECK_TOL) -> None:
        """Verify <Kx, y> = <x, K^T y> for the crop, convolution and difference blocks"""
        rng = np.random.default_rng(0)
        x = rng.standard_normal(self.grid)
        pairs = {
            "crop": (self.C, self.Ct, rng.standard_normal(self.sensor_dims)),
            "convolution": (self.H, self.Ht, rng.standard_normal(self.grid)),
            "difference": (self.D, self.Dt, rng.standard_normal((2,) + self.grid)),
        }
        for name, (forward, adjoint, y) in pairs.items():
            lhs = np.vdot(forward(x), y)
            rhs = np.vdot(x, adjoint(y))
            if abs(lhs - rhs) > tol * max(abs(lhs), abs(rhs), 1.0):
                raise OperatorCheckError(f"{name} adjoint mismatch: {lhs} vs {rhs}")

    def default_tau(self, b: np.ndarray) -> float:
        return ADMM_TAU_SCALE * float(np.max(self.At(b)))

    def objective(self, v: np.ndarray, b: np.ndarray, tau: float) -> float:
        residual = b - self.A(v)
        value = 0.5 * float(np.sum(residual ** 2))
        if tau > 0:
            value += tau * float(np.abs(self.D(v)).sum())
        return value

    def solve_channel(self, b: np.ndarray, tau: Optional[float] = None,
                      progress: bool = False) -> Tuple[np.ndarray, pd.DataFrame, float]:
        """
        Reconstruct one channel.

        Args:
            b: Measurement channel, already normalized
            tau: TV weight (None uses the measurement-scaled default)
            progress: Show a progress bar

        Returns:
            Tuple (estimate on the scene grid, residual trace, tau used)
        """
        if b.shape != self.sensor_dims:
            raise DimensionMismatchError(f"measurement {b.shape} does not match sensor {self.sensor_dims}")
        tau = self.default_tau(b) if tau is None else tau
        mu = self.cfg.rho
        use_tv = tau > 0

        ctb = self.Ct(b)
        denom = mu * np.abs(self.h_spec) ** 2 + mu
        if use_tv:
            denom = denom + mu * self.dtd_spec

        v = np.zeros(self.grid)
        u1 = np.zeros(self.grid)
        y1 = np.zeros(self.grid)
        w = np.zeros(self.grid)
        y3 = np.zeros(self.grid)
        u2 = np.zeros((2,) + self.grid)
        y2 = np.zeros((2,) + self.grid)

        rows = []
        for it in tqdm(range(self.cfg.iterations), desc="admm", disable=not progress, leave=False):
            # v-update: normal equations, diagonal in frequency
            rhs = mu * self.Ht(u1 - y1) + mu * (w - y3)
            if use_tv:
                rhs = rhs + mu * self.Dt(u2 - y2)
            v = fft.irfft2(fft.rfft2(rhs) / denom, s=self.grid)
            if not np.all(np.isfinite(v)):
                raise NonFiniteError(f"ADMM produced non-finite values at iteration {it}")

            hv = self.H(v)
            u1_old, w_old, u2_old = u1, w, u2
            # data block: crop-aware, pointwise
            u1 = (ctb + mu * (hv + y1)) / (self.crop_mask + mu)
            w = np.maximum(v + y3, 0.0)
            y1 = y1 + hv - u1
            y3 = y3 + v - w
            primal = np.sum((hv - u1) ** 2) + np.sum((v - w) ** 2)
            dual = np.sum((u1 - u1_old) ** 2) + np.sum((w - w_old) ** 2)
            if use_tv:
                dv = self.D(v)
                u2 = soft_threshold(dv + y2, tau / mu)
                y2 = y2 + dv - u2
                primal += np.sum((dv - u2) ** 2)
                dual += np.sum((u2 - u2_old) ** 2)

            rows.append((it, float(np.sqrt(primal)), float(mu * np.sqrt(dual)), self.objective(w, b, tau)))

        trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
        if trace["objective"].iloc[-1] > trace["objective"].iloc[0]:
            logger.warning("ADMM objective increased: %.6g -> %.6g",
                           trace["objective"].iloc[0], trace["objective"].iloc[-1])
        estimate = w[self.scene_window] * self.kernel_scale
        return estimate, trace, float(tau)


def admm_solve(b: SensorMeasurement, psf: Psf, cfg: AdmmConfig,
               scene_dims: Optional[Tuple[int, int]] = None,
               progress: bool = SHOW_PROGRESS) -> Reconstruction:
    """
    Reconstruct every channel of a measurement with one PSF.

    The measurement is scaled to unit maximum before solving and the
    estimate is scaled back, so a perfect solve returns the scene in the
    units of the capture.

    Args:
        b: Sensor measurement
        psf: PSF calibrated at the assumed depth
        cfg: Solver settings
        scene_dims: Size of the reconstructed scene (defaults to the sensor size)
        progress: Show progress bars

    Returns:
        Reconstruction with a nonnegative image of shape (C, H, W)
    """
    scene_dims = b.shape if scene_dims is None else tuple(scene_dims)
    solver = AdmmSolver(psf, b.shape, scene_dims, cfg)
    peak = float(b.channels.max())
    scale = peak if peak > 0 else 1.0

    images, traces, taus = [], [], []
    for c, channel in enumerate(b.channels):
        logger.debug("ADMM channel %d/%d", c + 1, b.n_channels)
        estimate, trace, tau = solver.solve_channel(channel / scale, cfg.tau, progress=progress)
        images.append(estimate * scale)
        traces.append(trace)
        taus.append(tau)
    image = np.maximum(np.stack(images), 0.0)
    return Reconstruction(image=image, residual_trace=traces, taus=taus, psf_depth_cm=float(psf.depth_z))
