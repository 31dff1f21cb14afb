"""
Adam optimization of radial mask parameters against the mean-MTF loss.
"""
import logging
from typing import Dict, Optional

import numpy as np
from scipy.special import expit
from tqdm import tqdm

from config.config import SHOW_PROGRESS, STALL_WINDOW, STAR_CHART_SECTIONS
from src.errors import NonFiniteError
from src.masks.baselines import gen_star_chart
from src.masks.radial import RadialMaskParams, section_areas
from src.optics.mtf import mean_mtf
from src.optimization.adam import AdamOptimizer
from src.optimization.loss import loss_and_gradient
from src.optimization.types import OptimConfig, OptimTrace

logger = logging.getLogger(__name__)

BINARY_LOW = 0.1
BINARY_HIGH = 0.9


def initial_params(cfg: OptimConfig) -> RadialMaskParams:
    """Uniform random initialization in [init_low, init_high), deterministic in cfg.seed"""
    rng = np.random.default_rng(cfg.seed)
    return RadialMaskParams(rng.uniform(cfg.init_low, cfg.init_high, cfg.n_sections), cfg.n_sections)


def mean_transmittance(params: RadialMaskParams, areas: np.ndarray) -> float:
    """Area-weighted mean transmittance of the realized mask inside the aperture"""
    return float(np.dot(areas, expit(params.raw_values)) / areas.sum())


def binarity_fraction(params: RadialMaskParams) -> float:
    """Fraction of sections whose transmittance lies outside [0.1, 0.9]"""
    values = expit(params.raw_values)
    return float(np.mean((values < BINARY_LOW) | (values > BINARY_HIGH)))


def optimize(cfg: OptimConfig, init: Optional[RadialMaskParams] = None,
             progress: bool = SHOW_PROGRESS) -> OptimTrace:
    """
    Minimize the negated mean MTF with Adam.

    Args:
        cfg: Optimization settings
        init: Starting parameters (defaults to the seeded uniform draw)
        progress: Show a progress bar

    Returns:
        OptimTrace with one entry per epoch and the final parameters
    """
    params = initial_params(cfg) if init is None else init
    areas = section_areas(cfg.grid_ny, cfg.grid_nx, cfg.n_sections, cfg.aperture_fraction)
    adam = AdamOptimizer(cfg.n_sections, lr=cfg.learning_rate, beta1=cfg.beta1,
                         beta2=cfg.beta2, eps=cfg.eps_adam)

    losses = np.empty(cfg.epochs)
    transmittances = np.empty(cfg.epochs)
    logger.info("Optimizing %d sections on %dx%d for %d epochs (lr=%g, seed=%d)",
                cfg.n_sections, cfg.grid_ny, cfg.grid_nx, cfg.epochs, cfg.learning_rate, cfg.seed)

    with tqdm(total=cfg.epochs, desc="mask optimize", disable=not progress) as bar:
        for epoch in range(cfg.epochs):
            value, grad = loss_and_gradient(params, cfg)
            if not np.isfinite(value) or not np.all(np.isfinite(grad)):
                raise NonFiniteError(f"non-finite loss or gradient at epoch {epoch} (loss={value})")
            losses[epoch] = value
            transmittances[epoch] = mean_transmittance(params, areas)
            params = RadialMaskParams(adam.step(params.raw_values, grad), cfg.n_sections)
            bar.update(1)
            if epoch % 100 == 0:
                bar.set_postfix(loss=f"{value:.6f}")

    trace = OptimTrace(
        losses=losses,
        mean_transmittances=transmittances,
        final_params=params,
        final_mean_transmittance=mean_transmittance(params, areas),
        binarity_fraction=binarity_fraction(params),
        final_loss=loss_and_gradient(params, cfg)[0],
    )
    trace.stalled = trace.stalled_windows(STALL_WINDOW)
    if trace.stalled:
        logger.warning("best loss did not improve in windows starting at epochs %s", trace.stalled)
    logger.info("Final loss %.6f, mean transmittance %.3f, binarity %.2f",
                trace.final_loss, trace.final_mean_transmittance, trace.binarity_fraction)
    return trace


def star_chart_baselines(cfg: OptimConfig, sections=STAR_CHART_SECTIONS) -> Dict[str, float]:
    """
    Mean MTF of the hand-crafted star charts on the optimization grid.

    Args:
        cfg: Provides grid size and aperture
        sections: Wedge counts of the baselines

    Returns:
        Mapping like {"star20": 0.01, ...}
    """
    return {
        f"star{n}": mean_mtf(gen_star_chart(n, cfg.grid_ny, cfg.grid_nx, cfg.aperture_fraction).grid)
        for n in sections
    }
