"""Monte Carlo and quadrature checks of the regularity conditions"""

import math

import numpy as np
import pytest
from scipy import stats

from src.lab.conditions import (
    MClassSpec,
    ball_probability_via_exponent,
    brownian_ball_probability,
    check_a1,
    check_ball_bounds,
    check_M_class,
    check_moment_bound,
    check_pruitt,
    check_self_similarity,
    envelope_ball_probability,
    estimate_ball_probability,
    estimate_hitting_probability,
    estimate_max_tail,
    hitting_probability_bound,
    pruitt_upper_bound,
    verify_ottaviani,
)
from src.lab.errors import PreconditionError
from src.lab.processes import BrownianMotion, StableLevy, symbol_of
from src.lab.symbols import GrowthConditionSpec, StableSpectralSpec, constant_kernel

BROWNIAN = BrownianMotion(1)
STABLE = StableLevy(StableSpectralSpec.uniform(1.5, 1))

# P{sup_{s <= 1} |B_s| >= 1} for standard Brownian motion
BROWNIAN_SUP_TAIL = 0.6292


def test_brownian_ball_probability_closed_form():
    assert brownian_ball_probability(1.0, [0.0], [0.0], 1.0) == pytest.approx(2 * stats.norm.cdf(1.0) - 1)
    assert brownian_ball_probability(0.0, [0.0], [2.0], 1.0) == 0.0


def test_ball_probability_estimate_matches_closed_form(stream):
    est = estimate_ball_probability(BrownianMotion(2), 0.5, [0.0, 0.0], [0.3, 0.0], 0.5, 8000, stream)
    exact = brownian_ball_probability(0.5, [0.3, 0.0], [0.0, 0.0], 0.5)
    assert abs(est.prob_hat - exact) <= 4 * est.std_err + 1e-3


@pytest.mark.slow
def test_sup_tail_of_brownian_motion(stream):
    est = estimate_max_tail(BROWNIAN, None, 1.0, 1.0, 4000, stream, n_steps=1024)
    assert abs(est.prob_hat - BROWNIAN_SUP_TAIL) < 0.05
    assert est.prob_hat <= BROWNIAN_SUP_TAIL + 3 * est.std_err


def test_a1_for_brownian_motion(stream):
    report = check_a1(BROWNIAN, 0.5, [0.3], [2.0 ** -k for k in range(4, 9)], 2000, stream, n_steps=32)
    assert report.passed
    assert report.fitted_constants["eta[gamma=0.3]"] > 0


def test_a1_for_a_stable_process(stream):
    # sup tail of order t^(1 - gamma alpha) for the 1.5-stable process
    report = check_a1(STABLE, 1 / 1.5, [0.3], [2.0 ** -k for k in range(4, 9)], 2000, stream, n_steps=32)
    assert report.passed
    assert 0.2 < report.fitted_constants["eta[gamma=0.3]"] < 0.9


def test_a1_needs_gamma_below_index(stream):
    with pytest.raises(PreconditionError):
        check_a1(BROWNIAN, 0.5, [0.6], [0.1], 100, stream)


def test_m_class_for_brownian_motion(stream):
    mspec = MClassSpec(H=0.5, beta=1.0, C=10.0)
    report = check_M_class(BROWNIAN, mspec, [(0.01, 0.5), (0.05, 0.5)], 1000, stream, s_points=4, n_steps=16)
    assert report.passed
    assert math.isfinite(report.fitted_constants["C"])


def test_m_class_grid_must_be_scaled_below_one(stream):
    with pytest.raises(PreconditionError):
        check_M_class(BROWNIAN, MClassSpec(H=0.5, beta=1.0, C=1.0), [(0.5, 0.5)], 100, stream)


def test_ottaviani_bound_holds_for_brownian_motion(stream):
    report = verify_ottaviani(BROWNIAN, None, 0.25, 1.0, 4000, stream, n_steps=64)
    assert report.passed
    assert report.rhs[0] > report.lhs[0]


def test_pruitt_symbol_bound_for_brownian_motion():
    bound = pruitt_upper_bound(symbol_of(BROWNIAN), None, 0.1, 0.5)
    assert bound == pytest.approx(0.1 / (2 * 0.25))


def test_pruitt_fits_a_finite_constant(stream):
    report = check_pruitt(BROWNIAN, [(2.0 ** -6, 0.25), (2.0 ** -4, 0.5)], 1000, stream, n_steps=32)
    assert report.passed
    assert math.isfinite(report.fitted_constants["C"])


def test_ball_bounds_for_brownian_motion(stream):
    grid = [(1.0, 0.25), (0.25, 0.25), (0.0625, 0.125)]
    report = check_ball_bounds(BROWNIAN, 0.5, 0.05, 0.05, grid, 2000, stream, n_steps=1)
    assert report.passed
    assert report.fitted_constants["C1"] > 0
    assert report.spec["t_ref"] == 1.0


def test_parseval_bracket_contains_the_exact_probability():
    exact = brownian_ball_probability(1.0, [0.0], [0.0], 0.5)
    bracket = ball_probability_via_exponent(symbol_of(BROWNIAN).exponent(), 1.0, 0.5, 1)
    assert bracket.lower <= exact <= bracket.upper


def _norm(xi):
    return np.linalg.norm(np.asarray(xi, dtype=float), axis=-1)


def test_growth_bracket_contains_the_brownian_probability():
    exact = brownian_ball_probability(1.0, [0.0], [0.0], 0.5)
    growth = GrowthConditionSpec(alpha=2.0, zeta_prime=0.1, K5=2.0, tau=1.0)
    bracket = ball_probability_via_exponent(symbol_of(BROWNIAN).exponent(), 1.0, 0.5, 1, growth=growth)
    assert 0.0 <= bracket.growth_lower <= exact <= bracket.growth_upper


def test_growth_lower_ignores_frequencies_below_tau():
    # satisfies the growth laws only for |xi| >= 5; heavy below that
    def exponent(xi):
        return 5.0 * _norm(xi) ** 0.5 + _norm(xi) ** 1.5

    growth = GrowthConditionSpec(alpha=1.5, zeta_prime=0.1, K5=2.0, tau=5.0)
    bracket = ball_probability_via_exponent(exponent, 1.0, 1.0, 1, growth=growth)
    assert 0.0 <= bracket.growth_lower <= bracket.upper
    assert bracket.lower <= bracket.upper


def test_envelope_probability_is_ordered():
    lower, upper = envelope_ball_probability(0.5, [0.0, 0.0], [0.5, 0.0], 0.25, 1.5, 2, C=2.0)
    assert 0.0 < lower <= upper <= 1.0


def test_hitting_bound_with_closed_form_source():
    bound = hitting_probability_bound(brownian_ball_probability, [0.0], 0.25, 0.25, 1.0, homogeneous=True)
    assert 0.0 < bound < math.inf


def test_hitting_bound_needs_delay_at_most_half_the_horizon():
    with pytest.raises(PreconditionError):
        hitting_probability_bound(BROWNIAN, [0.0], 0.25, 0.75, 1.0)


def test_hitting_radius_must_resolve_the_grid(stream):
    with pytest.raises(PreconditionError):
        estimate_hitting_probability(BROWNIAN, None, None, 1e-4, 0.25, 1.0, 100, stream, n_steps=64)


def test_hitting_probability_shrinks_with_radius(stream):
    small = estimate_hitting_probability(BROWNIAN, None, None, 0.1, 0.25, 1.0, 1000, stream, n_steps=1024)
    large = estimate_hitting_probability(BROWNIAN, None, None, 0.5, 0.25, 1.0, 1000, stream, n_steps=1024)
    assert small.prob_hat <= large.prob_hat


def test_moment_ratios_agree_for_a_constant_kernel(stream):
    report = check_moment_bound(constant_kernel(1.5, 1), 0.8, [0.25, 1.0, 4.0], 500, stream, n_steps=32)
    assert report.passed
    assert report.fitted_constants["spread"] < 5.0


def test_moment_order_must_stay_below_alpha(stream):
    with pytest.raises(PreconditionError):
        check_moment_bound(constant_kernel(1.5, 1), 1.6, [1.0], 10, stream)


def test_self_similarity_accepts_the_right_index(stream):
    report = check_self_similarity(BrownianMotion(2), 0.5, 4.0, 1.0, 2000, stream)
    assert report.passed


def test_self_similarity_rejects_a_wrong_index(stream):
    report = check_self_similarity(BrownianMotion(2), 1.0, 4.0, 1.0, 2000, stream)
    assert not report.passed
    assert min(report.extra["pvalues"]) < report.extra["level"]


def test_stable_self_similarity_index(stream):
    assert check_self_similarity(STABLE, 1 / 1.5, 16.0, 1.0, 2000, stream).passed
    assert not check_self_similarity(STABLE, 0.5, 16.0, 1.0, 2000, stream).passed


def test_unit_scale_compares_a_sample_with_itself(stream):
    report = check_self_similarity(BROWNIAN, 0.5, 1.0, 1.0, 500, stream)
    np.testing.assert_allclose(report.lhs, 0.0)
