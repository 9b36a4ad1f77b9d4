"""Tests for the path simulators and the random streams behind them"""

import numpy as np
import pytest

from src.lab.errors import PreconditionError, SimulationError
from src.lab.paths import (
    SamplePath,
    endpoint_sample,
    sample_positive_stable,
    sample_stable_increment,
    simulate,
    simulate_batch,
    simulate_jump_diffusion,
    simulate_stable_like_sde,
    simulate_subordinator,
    subordinate_path,
)
from src.lab.processes import BrownianMotion, StableLevy, ZeroProcess
from src.lab.rng import RngStream
from src.lab.symbols import StableSpectralSpec, constant_kernel, jump_diffusion_atoms


def test_same_stream_gives_identical_paths():
    first = simulate(BrownianMotion(2), None, 1.0, 256, RngStream(7))
    second = simulate(BrownianMotion(2), None, 1.0, 256, RngStream(7))
    np.testing.assert_array_equal(first.values, second.values)


def test_spawned_streams_differ():
    root = RngStream(7)
    a = simulate(BrownianMotion(1), None, 1.0, 64, root.spawn("path", 0))
    b = simulate(BrownianMotion(1), None, 1.0, 64, root.spawn("path", 1))
    assert not np.array_equal(a.values, b.values)
    assert root.spawn("path", 0) == root.spawn("path", 0)


def test_path_starts_at_x0_on_the_requested_grid():
    path = simulate(BrownianMotion(2), [1.0, -1.0], 2.0, 128, RngStream(1))
    assert path.values.shape == (129, 2)
    np.testing.assert_array_equal(path.values[0], [1.0, -1.0])
    assert path.dt == pytest.approx(2.0 / 128)
    assert path.horizon == pytest.approx(2.0)


def test_zero_process_stays_put():
    path = simulate(ZeroProcess(3), [0.5, 0.5, 0.5], 1.0, 32, RngStream(1))
    assert np.all(path.values == 0.5)


def test_brownian_endpoint_variance():
    ends = endpoint_sample(BrownianMotion(1), None, 2.0, 20000, RngStream(3))
    assert ends.shape == (20000, 1)
    assert abs(float(np.var(ends)) - 2.0) < 0.1


def test_gaussian_stable_increment_variance():
    draws = sample_stable_increment(2.0, 1.0, RngStream(4), size=20000)
    assert abs(float(np.var(draws)) - 2.0) < 0.1


def test_stable_increment_rejects_bad_index():
    with pytest.raises(PreconditionError):
        sample_stable_increment(2.5, 1.0, 0)


def test_positive_stable_draws_are_positive():
    draws = sample_positive_stable(0.6, 1.0, RngStream(5), size=1000)
    assert np.all(draws > 0)


def test_stable_scaling_of_spread():
    spec = StableLevy(StableSpectralSpec.uniform(1.5, 1, mass=2.0))
    short = endpoint_sample(spec, None, 1.0, 8000, RngStream(6))[:, 0]
    long = endpoint_sample(spec, None, 8.0, 8000, RngStream(7))[:, 0]
    ratio = np.subtract(*np.percentile(long, [75, 25])) / np.subtract(*np.percentile(short, [75, 25]))
    assert ratio == pytest.approx(8.0 ** (1.0 / 1.5), rel=0.1)


def test_subordinator_is_nondecreasing():
    path = simulate_subordinator(0.6, 1.0, 512, RngStream(1))
    assert np.all(np.diff(path.values[:, 0]) >= 0)


def test_subordinated_path_starts_at_x0():
    path = subordinate_path(BrownianMotion(2), 0.7, 1.0, 128, RngStream(2), x0=[1.0, 2.0])
    assert path.values.shape == (129, 2)
    np.testing.assert_array_equal(path.values[0], [1.0, 2.0])
    assert np.all(np.isfinite(path.values))


def test_identity_clock_reads_the_base_path():
    stream = RngStream(4)
    subordinated = subordinate_path(BrownianMotion(2), 0.5, 1.0, 64, stream, refine=4, clock="identity")
    base = simulate(BrownianMotion(2), None, 1.0, 256, stream.spawn("base"))
    np.testing.assert_array_equal(subordinated.values, base.values[::4])


def test_batch_does_not_depend_on_threads():
    one = simulate_batch(BrownianMotion(1), None, 1.0, 64, 10, RngStream(5), threads=1, chunk_size=4)
    many = simulate_batch(BrownianMotion(1), None, 1.0, 64, 10, RngStream(5), threads=3, chunk_size=4)
    assert one.shape == (10, 65, 1)
    np.testing.assert_array_equal(one, many)


def test_stable_like_path_is_finite():
    path = simulate_stable_like_sde(constant_kernel(1.5, 1), None, 1.0, 256, RngStream(2))
    assert path.values.shape == (257, 1)
    assert np.all(np.isfinite(path.values))


def test_jump_diffusion_path_is_finite():
    spec = jump_diffusion_atoms(1.5, [[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], drift=[0.5, 0.0], reversion=0.2)
    path = simulate_jump_diffusion(spec, [0.0, 0.0], 1.0, 256, RngStream(3))
    assert path.values.shape == (257, 2)
    assert np.all(np.isfinite(path.values))


def test_sample_path_rejects_non_finite_values():
    with pytest.raises(SimulationError):
        SamplePath(t0=0.0, dt=0.5, values=[[0.0], [np.nan], [1.0]], start_x=[0.0])


def test_sample_path_must_start_at_start_x():
    with pytest.raises(SimulationError):
        SamplePath(t0=0.0, dt=0.5, values=[[0.0], [1.0]], start_x=[1.0])


@pytest.mark.parametrize("T, n_steps", [(0.0, 16), (1.0, 0)])
def test_bad_grid_is_rejected(T, n_steps):
    with pytest.raises(PreconditionError):
        simulate(BrownianMotion(1), None, T, n_steps, RngStream(1))


def test_start_point_dimension_must_match():
    with pytest.raises(PreconditionError):
        simulate(BrownianMotion(2), [0.0, 0.0, 0.0], 1.0, 16, RngStream(1))
