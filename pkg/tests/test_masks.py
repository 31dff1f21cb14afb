import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import expit

from src.errors import GridSizeError, InvalidParameterError
from src.masks.baselines import default_fza_beta, gen_fza, gen_random, gen_star_chart
from src.masks.factory import MaskSpec, build_mask
from src.masks.mask_image import MaskImage, aperture_mask, binarize
from src.masks.radial import (
    RadialMaskParams,
    realize_radial,
    section_areas,
    section_index_map,
    transmittance,
)


def test_section_index_follows_polar_angle():
    index = section_index_map(5, 5, 4)
    # center (2, 2); rows grow downwards, angle measured with arctan2(dy, dx)
    assert index[2, 4] == 0
    assert index[4, 1] == 1
    assert index[1, 0] == 2
    assert index[0, 3] == 3
    assert index[2, 2] == 0


def test_section_index_marks_shielded_pixels():
    index = section_index_map(32, 32, 8, aperture_fraction=0.5)
    assert index[0, 0] == -1
    assert np.all(index[aperture_mask(32, 32, 0.5)] >= 0)
    assert index.max() == 7


def test_section_areas_are_equal_under_fourfold_symmetry():
    areas = section_areas(32, 32, 4)
    assert np.all(areas == areas[0])


def test_aperture_covers_half_the_square_by_default():
    fraction = aperture_mask(256, 256).mean()
    assert abs(fraction - 0.5) < 0.01


def test_realize_radial_maps_sigmoid_of_each_section(radial_params):
    mask = realize_radial(radial_params, 64, 80)
    index = section_index_map(64, 80, 70)
    inside = mask.aperture
    assert_allclose(mask.grid[inside], expit(radial_params.raw_values)[index[inside]])
    assert np.all(mask.grid[~inside] == 0.0)


def test_transmittance_stays_open_interval():
    values = transmittance(RadialMaskParams.from_values([-30.0, 0.0, 30.0]))
    assert np.all(values > 0.0) and np.all(values < 1.0)
    assert values[1] == 0.5


def test_params_validation_and_roundtrip(radial_params):
    with pytest.raises(InvalidParameterError):
        RadialMaskParams(np.zeros(3), 4)
    with pytest.raises(InvalidParameterError):
        RadialMaskParams.from_values([0.0, np.nan])
    restored = RadialMaskParams.from_dict(radial_params.to_dict())
    assert_array_equal(restored.raw_values, radial_params.raw_values)
    assert_array_equal(radial_params.rolled(1).raw_values, np.roll(radial_params.raw_values, 1))


def test_star_chart_alternates_wedges():
    mask = gen_star_chart(20, 128, 128)
    index = section_index_map(128, 128, 20)
    inside = mask.aperture
    assert_array_equal(mask.grid[inside], (index[inside] % 2 == 0).astype(float))
    assert abs(mask.open_fraction - 0.5) < 0.05


@pytest.mark.parametrize("n_sections", [0, 3, 21])
def test_star_chart_rejects_odd_counts(n_sections):
    with pytest.raises(InvalidParameterError):
        gen_star_chart(n_sections, 32, 32)


def test_fza_is_binary_and_open_at_center():
    beta = default_fza_beta(65, 65, pitch=10.0, zones=8)
    mask = gen_fza(beta, 65, 65, pitch=10.0)
    assert set(np.unique(mask.grid)) <= {0.0, 1.0}
    assert mask.grid[32, 32] == 1.0
    radius_um = math.sqrt(2.0 / math.pi) * 65 / 2.0 * 10.0
    assert beta == pytest.approx(radius_um / 4.0)


def test_fza_rejects_nonpositive_beta():
    with pytest.raises(InvalidParameterError):
        gen_fza(0.0, 32, 32)


def test_random_mask_is_seeded():
    a = gen_random(0.5, 3, 64, 64)
    b = gen_random(0.5, 3, 64, 64)
    c = gen_random(0.5, 4, 64, 64)
    assert_array_equal(a.grid, b.grid)
    assert not np.array_equal(a.grid, c.grid)


@pytest.mark.parametrize("seed", range(5))
def test_random_mask_density_concentrates(seed):
    mask = gen_random(0.5, seed, 140, 140)
    assert abs(mask.open_fraction - 0.5) <= 0.03


def test_random_mask_density_extremes():
    assert gen_random(0.0, 0, 16, 16).grid.max() == 0.0
    full = gen_random(1.0, 0, 16, 16)
    assert_array_equal(full.grid, full.aperture.astype(float))
    with pytest.raises(InvalidParameterError):
        gen_random(1.5, 0, 16, 16)


def test_mask_image_validation():
    with pytest.raises(InvalidParameterError):
        MaskImage(np.ones((8, 8)))
    with pytest.raises(InvalidParameterError):
        MaskImage.shielded(np.full((8, 8), 2.0))
    with pytest.raises(GridSizeError):
        MaskImage.shielded(np.ones((1, 8)))
    with pytest.raises(InvalidParameterError):
        MaskImage.shielded(np.ones((8, 8)), aperture_fraction=0.0)


def test_mask_grid_is_read_only(radial_params):
    mask = realize_radial(radial_params, 32, 32)
    with pytest.raises(ValueError):
        mask.grid[16, 16] = 0.0


def test_binarize_thresholds_inside_aperture(radial_params):
    mask = realize_radial(radial_params, 48, 48)
    binary = binarize(mask)
    assert_array_equal(binary.grid, ((mask.grid >= 0.5) & mask.aperture).astype(float))
    with pytest.raises(InvalidParameterError):
        binarize(mask, threshold=1.0)


def test_build_mask_dispatches_on_kind(radial_params):
    shape = (40, 48)
    radial = build_mask(MaskSpec("radial"), shape, 0, radial_params)
    assert_array_equal(radial.grid, realize_radial(radial_params, *shape).grid)
    star = build_mask(MaskSpec("star", sections=20), shape, 0)
    assert_array_equal(star.grid, gen_star_chart(20, *shape).grid)
    random = build_mask(MaskSpec("random", density=0.3), shape, 11)
    assert_array_equal(random.grid, gen_random(0.3, 11, *shape).grid)
    fza = build_mask(MaskSpec("fza", binarize=True), shape, 0)
    assert set(np.unique(fza.grid)) <= {0.0, 1.0}


def test_build_mask_rejects_missing_inputs():
    with pytest.raises(InvalidParameterError):
        build_mask(MaskSpec("radial"), (32, 32), 0)
    with pytest.raises(InvalidParameterError):
        build_mask(MaskSpec("impulse"), (32, 32), 0)


def test_mask_spec_parsing():
    spec = MaskSpec.from_dict({"kind": "random", "density": 0.25})
    assert spec.label == "random"
    assert MaskSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(InvalidParameterError):
        MaskSpec("hexagon")
    with pytest.raises(InvalidParameterError):
        MaskSpec.from_dict({"kind": "star", "spokes": 4})


@pytest.mark.parametrize("shape,n_sections", [((16, 16), 4), ((15, 22), 7), ((32, 27), 70)])
def test_section_index_matches_per_pixel_binning(shape, n_sections):
    n_y, n_x = shape
    index = section_index_map(n_y, n_x, n_sections)
    for i in range(n_y):
        for j in range(n_x):
            phi = math.atan2(i - (n_y - 1) / 2.0, j - (n_x - 1) / 2.0) % (2.0 * math.pi)
            expected = min(int(phi * n_sections / (2.0 * math.pi)), n_sections - 1)
            assert index[i, j] == expected, (i, j)


def test_rolling_sections_rotates_the_grid_a_quarter_turn(rng):
    params = RadialMaskParams.from_values(rng.normal(0.0, 2.0, 4))
    grid = realize_radial(params, 32, 32).grid
    # section k+1 sits a quarter turn clockwise (rows grow downwards) from section k
    assert_array_equal(realize_radial(params.rolled(1), 32, 32).grid, np.rot90(grid, k=-1))
    assert_array_equal(realize_radial(params.rolled(4), 32, 32).grid, grid)


def test_equal_sections_are_symmetric_under_quarter_turns():
    grid = realize_radial(RadialMaskParams.from_values([0.7] * 70), 40, 40).grid
    assert_array_equal(np.rot90(grid), grid)


@pytest.mark.parametrize("n_sections", [2, 4, 20])
def test_star_chart_equals_saturated_radial_mask(n_sections):
    raw = np.tile([40.0, -40.0], n_sections // 2)
    radial = realize_radial(RadialMaskParams.from_values(raw), 64, 64)
    assert_allclose(gen_star_chart(n_sections, 64, 64).grid, radial.grid, rtol=0.0, atol=1e-15)


def test_fza_rings_switch_at_half_integer_zones():
    n, pitch = 41, 10.0
    beta = default_fza_beta(n, n, pitch=pitch, zones=8)
    mask = gen_fza(beta, n, n, pitch=pitch)
    boundaries = [beta * math.sqrt(k + 0.5) for k in range(40)]
    center = (n - 1) / 2.0
    for i in range(n):
        for j in range(n):
            if not mask.aperture[i, j]:
                assert mask.grid[i, j] == 0.0
                continue
            r = math.hypot(i - center, j - center) * pitch
            crossed = sum(1 for edge in boundaries if edge < r)
            assert mask.grid[i, j] == (1.0 if crossed % 2 == 0 else 0.0), (i, j)
    assert gen_fza(beta, n, n, pitch=pitch, aperture_fraction=1.0).grid[20, 20] == 1.0
