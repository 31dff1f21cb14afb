import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.errors import GridSizeError, InvalidParameterError
from src.reconstruction.tv import soft_threshold, tv_adjoint, tv_forward, tv_norm


@pytest.mark.parametrize("boundary", ["neumann", "circular"])
@pytest.mark.parametrize("shape", [(8, 8), (16, 16), (7, 11)])
def test_difference_adjoint_inner_product(rng, boundary, shape):
    x = rng.standard_normal(shape)
    y = rng.standard_normal((2,) + shape)
    lhs = np.vdot(tv_forward(x, boundary), y)
    rhs = np.vdot(x, tv_adjoint(y, boundary))
    assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), abs(rhs), 1.0)


def test_neumann_differences_vanish_on_last_row_and_column(rng):
    diffs = tv_forward(rng.random((6, 5)))
    assert_array_equal(diffs[0, :, -1], 0.0)
    assert_array_equal(diffs[1, -1, :], 0.0)


def test_circular_differences_wrap():
    image = np.arange(9.0).reshape(3, 3)
    dx, dy = tv_forward(image, "circular")
    assert dx[0, 2] == image[0, 0] - image[0, 2]
    assert dy[2, 0] == image[0, 0] - image[2, 0]


def test_tv_norm_of_constant_and_step():
    assert tv_norm(np.full((5, 5), 3.0)) == 0.0
    step = np.zeros((4, 6))
    step[:, 3:] = 1.0
    assert tv_norm(step) == pytest.approx(4.0)


def test_tv_rejects_small_or_unknown():
    with pytest.raises(GridSizeError):
        tv_forward(np.zeros((1, 5)))
    with pytest.raises(InvalidParameterError):
        tv_forward(np.zeros((3, 3)), boundary="reflect")


def test_soft_threshold():
    assert_allclose(soft_threshold(np.array([-2.0, -0.5, 0.0, 0.5, 2.0]), 1.0), [-1.0, 0.0, 0.0, 0.0, 1.0])
