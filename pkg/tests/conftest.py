import numpy as np
import pytest

from src.masks.radial import RadialMaskParams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def radial_params():
    """High-contrast 70-section parameters"""
    return RadialMaskParams.from_values(np.random.default_rng(7).normal(0.0, 3.0, 70))
