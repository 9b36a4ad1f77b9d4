"""Tests for the stopping-time cover engines"""

import math

import numpy as np
import pytest

from src.lab import covering
from src.lab.covering import (
    PreimageCoverConfig,
    covering_statistics,
    dyadic_image_config,
    dyadic_preimage_config,
    image_cover_count,
    image_cover_counts,
    max_image_cover_count,
    preimage_cover_count,
    preimage_cover_counts,
    tail_slope,
)
from src.lab.errors import CoverValidityError, PreconditionError
from src.lab.paths import simulate
from src.lab.processes import BrownianMotion, ZeroProcess
from src.lab.rng import RngStream
from tests.conftest import make_path


class TestImageCovers:
    def test_constant_path_needs_one_ball(self):
        path = make_path(np.zeros(65))
        assert image_cover_count(path, (0.0, 1.0), 0.1, validate=True) == 1

    def test_single_jump_needs_two_balls(self):
        values = np.zeros(65)
        values[33:] = 0.3
        assert image_cover_count(make_path(values), (0.0, 1.0), 0.1, validate=True) == 2

    def test_linear_drift(self):
        path = make_path(np.linspace(0.0, 1.0, 1001))
        assert image_cover_count(path, (0.0, 1.0), 0.1055, validate=True) == math.ceil(1.0 / 0.106)

    def test_vectorized_counts_match_one_by_one(self):
        path = simulate(BrownianMotion(2), None, 1.0, 1024, RngStream(11))
        config = dyadic_image_config(4, 0.45)
        together = image_cover_counts(path, config, validate=True)
        apart = [image_cover_count(path, iv, config.theta_n) for iv in config.intervals]
        np.testing.assert_array_equal(together, apart)
        assert max_image_cover_count(path, config) == max(apart)

    def test_interval_outside_the_path_is_rejected(self):
        with pytest.raises(PreconditionError):
            image_cover_count(make_path(np.zeros(17)), (0.0, 2.0), 0.1)

    def test_broken_chain_fails_validation(self, monkeypatch):
        values = np.zeros(65)
        values[33:] = 0.3
        monkeypatch.setattr(covering, "_chain_centers", lambda segment, theta: [0])
        monkeypatch.setenv("LAB_VALIDATE_COVERS", "1")
        with pytest.raises(CoverValidityError):
            image_cover_count(make_path(values), (0.0, 1.0), 0.1)

    def test_family_geometry(self):
        config = dyadic_image_config(3, 0.5, T=2.0)
        assert config.family_size == 8
        assert config.t_n == pytest.approx(0.25)
        assert config.theta_n == pytest.approx(0.5)
        np.testing.assert_allclose(config.intervals[-1], [1.75, 2.0])


class TestPreimageCovers:
    def test_ball_never_entered(self):
        path = make_path(np.zeros(17))
        assert preimage_cover_count(path, ([5.0], 0.1), 0.25, 1.0, validate=True) == 0

    @pytest.mark.parametrize("t_n", [0.25, 0.3, 0.5])
    def test_constant_path_inside_the_ball(self, t_n):
        path = make_path(np.full(17, 0.4))
        assert preimage_cover_count(path, ([0.4], 0.1), t_n, 1.0, validate=True) == math.ceil(1.0 / t_n)

    def test_horizon_must_exceed_interval_length(self):
        with pytest.raises(PreconditionError):
            preimage_cover_count(make_path(np.zeros(17)), ([0.0], 0.1), 1.0, 1.0)

    def test_family_counts_for_a_constant_path(self):
        path = make_path(np.full(65, 0.05))
        config = PreimageCoverConfig(r_n=0.125, t_n=0.25, T=1.0, dim=1)
        counts = preimage_cover_counts(path, config, validate=True)
        assert counts == {(0,): 4}

    def test_family_geometry(self):
        config = PreimageCoverConfig(r_n=0.25, t_n=0.1, T=1.0, dim=2)
        assert config.family_size == 64
        assert config.radius == pytest.approx(math.sqrt(2) * 0.125)
        dyadic = dyadic_preimage_config(4, 0.5, 1.0, 2)
        assert dyadic.r_n == pytest.approx(1 / 16)
        assert dyadic.t_n == pytest.approx(0.25)


class TestStatistics:
    def test_tail_slope_needs_three_points(self):
        slope, stderr = tail_slope(np.array([1, 1, 2]))
        assert math.isnan(slope) and math.isnan(stderr)

    def test_geometric_tail_has_negative_slope(self):
        counts = np.repeat(np.arange(1, 11), 2 ** (10 - np.arange(1, 11)))
        slope, _ = tail_slope(counts)
        assert -1.0 < slope < -0.5

    def test_constant_process_image_rows(self):
        rows = covering_statistics(ZeroProcess(1), "image", [2, 3], 0.5, 2, RngStream(1), 64)
        assert [r.family_size for r in rows] == [4, 8]
        assert all(r.max_count == 1 and r.q95 == 1.0 for r in rows)

    def test_constant_process_preimage_rows(self):
        rows = covering_statistics(ZeroProcess(1), "preimage", [2], 0.5, 1, RngStream(1), 64, x0=[0.1])
        assert rows[0].max_count == 2
        assert rows[0].family_size == 8

    def test_brownian_rows_do_not_depend_on_threads(self):
        args = (BrownianMotion(1), "image", [3, 4], 0.45, 3, RngStream(4), 256)
        one = covering_statistics(*args, threads=1)
        two = covering_statistics(*args, threads=2)
        assert [(r.max_count, r.q95) for r in one] == [(r.max_count, r.q95) for r in two]
        for row in one:
            assert 1 <= row.q50 <= row.q95 <= row.max_count

    def test_unknown_mode(self):
        with pytest.raises(PreconditionError):
            covering_statistics(ZeroProcess(1), "both", [2], 0.5, 1, RngStream(1), 64)
