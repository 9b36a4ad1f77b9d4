"""Tests for exponents, symbols and the growth condition"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.lab.errors import PreconditionError
from src.lab.processes import BrownianMotion, StableLevy, symbol_of
from src.lab.symbols import (
    GrowthConditionSpec,
    LevyTriplet,
    StableSpectralSpec,
    check_growth_condition,
    constant_kernel,
    eval_levy_exponent,
    eval_stable_exponent,
    eval_stable_like_symbol,
    fit_symbol_constant,
    growth_zeta,
    isotropic_density_constant,
    jump_diffusion_atoms,
    eval_jump_diffusion_symbol,
    oscillating_kernel,
    stable_density_constant_1d,
    uniform_sphere_moment,
)


def test_brownian_triplet_exponent():
    psi = eval_levy_exponent(LevyTriplet.brownian(2), np.array([1.0, 2.0]))
    assert psi == pytest.approx(2.5)


def test_drift_enters_imaginary_part():
    triplet = LevyTriplet(np.array([1.0]), np.zeros((1, 1)))
    assert eval_levy_exponent(triplet, np.array([3.0])) == pytest.approx(3.0j)


def test_symmetric_one_dimensional_stable_is_real():
    spec = StableSpectralSpec.uniform(1.5, 1, mass=2.0)
    psi = eval_stable_exponent(spec, np.array([2.0]))
    assert spec.is_symmetric
    assert psi.real == pytest.approx(2.0 * 2.0 ** 1.5)
    assert abs(psi.imag) < 1e-12


def test_uniform_measure_matches_closed_form_moment():
    alpha = 1.2
    spec = StableSpectralSpec.uniform(alpha, 2, mass=1.0)
    psi = eval_stable_exponent(spec, np.array([0.6, 0.8]))
    np.testing.assert_allclose(psi.real, uniform_sphere_moment(alpha, 2), rtol=1e-5)


def test_density_constants_are_reciprocal_in_one_dimension():
    for alpha in (0.5, 1.0, 1.5, 1.9):
        product = isotropic_density_constant(alpha, 1) * stable_density_constant_1d(alpha)
        assert product == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.2, 1.95), x=st.floats(-5.0, 5.0), y=st.floats(-5.0, 5.0))
def test_atomic_exponent_is_hermitian(alpha, x, y):
    spec = StableSpectralSpec.atomic(alpha, [((1.0, 0.0), 1.0), ((0.0, 1.0), 0.5)])
    xi = np.array([x, y])
    plus = eval_stable_exponent(spec, xi)
    minus = eval_stable_exponent(spec, -xi)
    np.testing.assert_allclose(minus, np.conj(plus), atol=1e-9)
    assert plus.real >= -1e-12


def test_atomic_spectral_rejects_non_unit_directions():
    with pytest.raises(PreconditionError):
        StableSpectralSpec.atomic(1.5, [((2.0, 0.0), 1.0)])


def test_skewed_atomic_measure_is_not_symmetric():
    assert not StableSpectralSpec.atomic(1.5, [((1.0,), 1.0)]).is_symmetric


@pytest.mark.parametrize("dim, rtol", [(1, 1e-4), (2, 1e-3)])
def test_constant_kernel_symbol_is_isotropic_stable(dim, rtol):
    alpha, value = 1.5, 2.0
    kernel = constant_kernel(alpha, dim, value)
    xi = np.zeros(dim)
    xi[0] = 1.3
    psi = eval_stable_like_symbol(kernel, np.zeros(dim), xi)
    expected = value * isotropic_density_constant(alpha, dim) * 1.3 ** alpha
    np.testing.assert_allclose(psi.real, expected, rtol=rtol)


def test_stable_like_symbol_vanishes_at_zero_frequency():
    assert eval_stable_like_symbol(constant_kernel(1.0, 1), np.zeros(1), np.zeros(1)) == 0j


def test_oscillating_kernel_symbol_stays_between_bounds():
    alpha = 1.5
    kernel = oscillating_kernel(alpha, 1, base=1.0, amplitude=0.5)
    xi = np.array([1.0])
    k = isotropic_density_constant(alpha, 1)
    for x in (0.0, 0.7, math.pi / 2):
        psi = eval_stable_like_symbol(kernel, np.array([x]), xi).real
        assert k * (1.0 - 1e-4) <= psi <= 1.5 * k * (1.0 + 1e-4)


def test_jump_diffusion_symbol_with_drift():
    spec = jump_diffusion_atoms(1.5, [[1.0]], [1.0], drift=[2.0])
    psi = eval_jump_diffusion_symbol(spec, np.zeros(1), np.array([1.0]))
    assert psi == pytest.approx(1.0 - 2.0j)


def test_jump_diffusion_drift_needs_alpha_above_one():
    spec = jump_diffusion_atoms(0.8, [[1.0]], [1.0], drift=[1.0])
    with pytest.raises(PreconditionError):
        eval_jump_diffusion_symbol(spec, np.zeros(1), np.array([1.0]))


def test_fit_symbol_constant_for_brownian():
    symbol = symbol_of(BrownianMotion(1))
    c = fit_symbol_constant(symbol, [np.zeros(1)], [np.array([1.0]), np.array([2.0])], alpha=2.0)
    assert c == pytest.approx(0.5)


class TestGrowthCondition:
    def test_brownian_passes(self):
        exponent = symbol_of(BrownianMotion(1)).exponent()
        spec = GrowthConditionSpec(alpha=2.0, zeta_prime=0.1, K5=2.0)
        report = check_growth_condition(exponent, spec, [[1.0], [4.0], [16.0]])
        assert report.passed
        assert report.fitted_constants["K5"] >= 1.0

    def test_too_small_constant_is_reported(self):
        exponent = symbol_of(BrownianMotion(1)).exponent()
        spec = GrowthConditionSpec(alpha=2.0, zeta_prime=0.1, K5=1.0)
        report = check_growth_condition(exponent, spec, [[1.0], [2.0]])
        assert not report.passed
        assert 0 in report.violations

    def test_large_slack_is_flagged(self):
        exponent = symbol_of(StableLevy(StableSpectralSpec.uniform(1.5, 1, mass=2.0))).exponent()
        spec = GrowthConditionSpec(alpha=1.5, zeta_prime=0.6, K5=4.0)
        report = check_growth_condition(exponent, spec, [[1.0], [8.0]])
        assert "zeta_prime_exceeds_gap" in report.flags
        assert report.passed

    def test_grid_below_tau_is_rejected(self):
        exponent = symbol_of(BrownianMotion(1)).exponent()
        spec = GrowthConditionSpec(alpha=2.0, zeta_prime=0.1, K5=2.0, tau=1.0)
        with pytest.raises(PreconditionError):
            check_growth_condition(exponent, spec, [[0.5]])

    def test_zeta_needs_slack_below_alpha(self):
        assert growth_zeta(1.5, 0.5) == pytest.approx(0.5 / (1.5 * 1.0))
        with pytest.raises(PreconditionError):
            growth_zeta(1.5, 1.5)
