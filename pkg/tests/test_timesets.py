"""Tests for dyadic time sets and their grid restriction"""

import math

import numpy as np
import pytest

from src.lab.errors import PreconditionError, ResourceCapError
from src.lab.timesets import (
    CantorSpec,
    DyadicTimeSet,
    build_cantor_set,
    empty_set,
    full_interval,
    grid_size,
    image_points,
    restrict_to_grid,
    single_cell,
)


class TestCantorSets:
    def test_middle_thirds_depth_one(self):
        E = build_cantor_set(CantorSpec(base=3, kept_digits=(0, 2), depth=1))
        np.testing.assert_array_equal(E.cells, [0, 2])
        assert E.analytic_dim == pytest.approx(math.log(2) / math.log(3))
        np.testing.assert_allclose(E.intervals(), [[0.0, 1 / 3], [2 / 3, 1.0]])

    def test_cell_count_is_exact(self):
        E = build_cantor_set(CantorSpec(base=5, kept_digits=(0, 2, 4), depth=4))
        assert E.n_cells == 3 ** 4

    def test_single_kept_digit_has_dimension_zero(self):
        E = build_cantor_set(CantorSpec(base=4, kept_digits=(0,), depth=3))
        np.testing.assert_array_equal(E.cells, [0])
        assert E.width == pytest.approx(4.0 ** -3)
        assert E.analytic_dim == 0.0

    def test_deeper_sets_refine_shallower_ones(self):
        coarse = build_cantor_set(CantorSpec(base=3, depth=3))
        fine = build_cantor_set(CantorSpec(base=3, depth=4))
        assert fine.is_refinement_of(coarse)
        assert not coarse.is_refinement_of(fine)

    def test_cap_is_enforced(self):
        with pytest.raises(ResourceCapError):
            build_cantor_set(CantorSpec(base=3, depth=12), cap=1000)

    def test_dyadic_cover_contains_every_cell(self):
        E = build_cantor_set(CantorSpec(base=3, depth=4))
        dyadic = E.to_dyadic()
        assert dyadic.base == 2
        assert dyadic.level == 7
        for lo, hi in E.intervals():
            assert dyadic.contains(lo)
            assert dyadic.contains(0.5 * (lo + hi))
            assert dyadic.contains(hi)

    def test_invalid_digits_are_rejected(self):
        with pytest.raises(PreconditionError):
            CantorSpec(base=3, kept_digits=(0, 3))


class TestDyadicTimeSet:
    def test_cells_must_increase(self):
        with pytest.raises(PreconditionError):
            DyadicTimeSet(level=3, cells=np.array([2, 1]))

    def test_cells_must_fit_the_level(self):
        with pytest.raises(PreconditionError):
            DyadicTimeSet(level=2, cells=np.array([4]))

    def test_contains_closed_cells(self):
        E = single_cell(2, 1)
        assert E.contains(0.25)
        assert E.contains(0.5)
        assert not E.contains(0.6)


class TestGridRestriction:
    def test_full_interval_keeps_every_grid_time(self):
        np.testing.assert_array_equal(restrict_to_grid(full_interval(), 1 / 8, 1.0), np.arange(9))

    def test_single_cell_keeps_its_closed_range(self):
        np.testing.assert_array_equal(restrict_to_grid(single_cell(1, 1), 1 / 8, 1.0), [4, 5, 6, 7, 8])

    def test_grid_scales_with_the_horizon(self):
        np.testing.assert_array_equal(restrict_to_grid(single_cell(1, 0), 0.5, 4.0), [0, 1, 2, 3, 4])

    def test_empty_set_has_no_points(self):
        assert restrict_to_grid(empty_set(), 1 / 8, 1.0).size == 0

    def test_undersampling_is_rejected(self):
        with pytest.raises(PreconditionError):
            restrict_to_grid(single_cell(5, 0), 1 / 8, 1.0)

    def test_non_integer_grid_is_rejected(self):
        with pytest.raises(PreconditionError):
            grid_size(0.3, 1.0)

    def test_image_points_keep_duplicates(self):
        cloud = image_points(np.zeros((5, 2)), [0, 1, 2])
        assert cloud.shape == (3, 2)

    def test_image_points_outside_the_path(self):
        with pytest.raises(PreconditionError):
            image_points(np.zeros((5, 1)), [5])
