"""Closed-form engine tests. Derived values are checked against independent
oracles (bisection, damped fixed-point iteration, series summation, scipy)
computed here rather than against the implementation itself."""

import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from caperc.analytic import (
    DEFAULT_EPS_GRID,
    PSystemError,
    SeriesTruncationError,
    borel_pmf,
    classify_lambda,
    color_strings,
    extended_type_distribution,
    f_infinity_generating_function,
    f_infinity_inclusion_exclusion,
    g_product,
    lambert_w0,
    near_critical_constant,
    phi_eval,
    solve_p_system,
    survival_theta,
    two_color_f_ell,
    total_progeny_gf,
)
from caperc.params import LambdaVector


# -- oracles ----------------------------------------------------------------

def bisection_w(x: float, lo: float = -1.0, hi: float = 0.0) -> float:
    """Bisection on w e^w - x; oracle for principal-branch W on [-1/e, 0]."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) - x <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def damped_theta(mu: float, tol: float = 1e-12) -> float:
    """Damped fixed-point iteration for theta = 1 - exp(-mu theta)."""
    theta = 0.9
    for _ in range(100000):
        nxt = 0.5 * theta + 0.5 * (1.0 - math.exp(-mu * theta))
        if abs(nxt - theta) < tol * 0.01:
            return nxt
        theta = nxt
    return theta


THETA2 = damped_theta(2.0)  # 0.79681213...


# -- Lambert W --------------------------------------------------------------

def test_lambert_trivial_points():
    assert lambert_w0(0.0) == 0.0
    assert abs(lambert_w0(math.e) - 1.0) < 1e-14
    assert abs(lambert_w0(-1.0 / math.e) - (-1.0)) < 1e-8


def test_lambert_branch_choice_against_bisection():
    x = -2.0 * math.exp(-2.0)
    oracle = bisection_w(x)
    assert abs(oracle - (-0.40637573995996)) < 1e-11
    assert abs(lambert_w0(x) - oracle) < 1e-12


def test_lambert_domain_error():
    with pytest.raises(ValueError):
        lambert_w0(-1.0 / math.e - 1e-6)


def test_lambert_residual_sweep():
    xs = np.concatenate([
        -1.0 / math.e + np.logspace(-14, -0.5, 60),
        np.logspace(-12, 8, 80),
    ])
    for x in xs:
        w = lambert_w0(float(x))
        assert abs(w * math.exp(w) - x) <= 1e-13 * max(1.0, abs(x))
        assert w >= -1.0


def test_lambert_matches_scipy():
    for x in [-0.3, -0.1, -0.01, 0.5, 3.0, 100.0, 1e6]:
        assert abs(lambert_w0(x) - float(scipy.special.lambertw(x).real)) < 1e-12


@given(st.floats(min_value=-0.36787944117144, max_value=1e6,
                 allow_nan=False, allow_infinity=False))
@settings(max_examples=200, deadline=None)
def test_lambert_identity_property(x):
    w = lambert_w0(x)
    assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))


# -- survival theta ---------------------------------------------------------

def test_theta_sub_and_critical_are_zero():
    assert survival_theta(1.0) == 0.0
    assert survival_theta(0.5) == 0.0


def test_theta2_against_damped_oracle():
    assert abs(THETA2 - 0.796812) < 1e-6
    assert abs(survival_theta(2.0) - THETA2) < 1e-9


def test_theta_fixed_point_identity():
    for mu in np.linspace(1.01, 10.0, 50):
        th = survival_theta(float(mu))
        assert 0.0 < th < 1.0
        assert abs(th - (1.0 - math.exp(-mu * th))) <= 1e-12


def test_theta_near_critical_precision():
    # theta(1+eps) = 2 eps - 8/3 eps^2 + O(eps^3); the expm1 Newton polish
    # must hold far more precision than the raw W closed form here
    for eps in (1e-3, 1e-5):
        th = survival_theta(1.0 + eps)
        expansion = 2.0 * eps - 8.0 / 3.0 * eps ** 2
        assert abs(th - expansion) < 10.0 * eps ** 3


# -- regime classification --------------------------------------------------

def test_classify_examples():
    r = classify_lambda((2.0, 2.0))
    assert r.fully_supercritical and r.assumption_holds
    assert r.supercritical_indices == frozenset({0, 1})

    r = classify_lambda((0.4, 0.4, 0.4))
    assert r.fully_critical_subcritical and r.assumption_holds
    assert not r.fully_supercritical

    r = classify_lambda((0.9, 0.9, 0.2))
    assert r.fully_supercritical and r.assumption_holds

    # threshold case: lambda without color 2 sums to exactly 1.0
    r = classify_lambda((0.5, 0.5, 0.9))
    assert 0 in r.supercritical_indices and 2 not in r.supercritical_indices
    assert not r.fully_supercritical and not r.fully_critical_subcritical


def test_assumption_violation_detected():
    assert not classify_lambda((1.2, 0.4, 0.4)).assumption_holds
    assert not classify_lambda((0.6, 0.6, 0.3, 0.3)).assumption_holds


# -- the p_I system ---------------------------------------------------------

def test_p_system_k2_values():
    table = solve_p_system((2.0, 2.0))
    assert table.p[0] == 0.0
    assert abs(table.p[0b01] - THETA2) < 1e-9
    assert abs(table.p[0b10] - THETA2) < 1e-9
    p12_oracle = 1.0 - math.exp(-4.0 * THETA2)
    assert abs(table.p[0b11] - p12_oracle) < 1e-9
    assert table.relevant
    assert table.max_residual <= 1e-10


def test_p_system_direct_substitution_k3():
    lam = LambdaVector((0.9, 0.8, 0.7))
    table = solve_p_system(lam)
    full = 0b111
    for mask in range(8):
        c = sum(lam[j] * table.p[mask & ~(1 << j)]
                for j in range(3) if (mask >> j) & 1)
        mu = lam.lambda_mask(full & ~mask)
        assert abs(table.p[mask]
                   - (1.0 - math.exp(-c - mu * table.p[mask]))) <= 1e-10


def test_p_system_non_supercritical_flagged():
    table = solve_p_system((0.8, 0.8))
    assert not table.relevant
    assert table.p[0b01] == 0.0 and table.p[0b11] == 0.0


# -- f*_inf routes ----------------------------------------------------------

def test_f_inf_zero_for_subcritical():
    assert f_infinity_inclusion_exclusion((0.8, 0.8)) == 0.0
    assert f_infinity_inclusion_exclusion((0.4, 0.4, 0.4)) == 0.0


def test_f_inf_k2_value_and_factorization():
    # for k = 2 the two avoiding clusters are independent, so
    # f*_inf = theta(lam_1) theta(lam_2); also matches the spec-rounded 0.6349
    val = f_infinity_inclusion_exclusion((2.0, 2.0))
    assert abs(val - THETA2 ** 2) < 1e-9
    assert abs(val - 0.634902) < 1e-4


def test_f_inf_bounds():
    for lam in [(2.0, 2.0), (1.5, 3.0), (0.9, 0.9, 0.9), (0.8, 0.9, 0.6)]:
        v = f_infinity_inclusion_exclusion(lam)
        lamv = LambdaVector(lam)
        theta_min = min(survival_theta(lamv.lambda_without(i))
                        for i in range(lamv.k))
        assert 0.0 <= v <= theta_min + 1e-12


def test_f_inf_monotone_in_lambda():
    vals = [f_infinity_inclusion_exclusion((x, x))
            for x in (1.2, 1.5, 2.0, 3.0)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_gf_route_requires_supercritical():
    with pytest.raises(ValueError):
        f_infinity_generating_function((0.8, 0.8))


# -- extended types ---------------------------------------------------------

def test_extended_types_k2():
    table = solve_p_system((2.0, 2.0))
    phat = extended_type_distribution((2.0, 2.0), table)
    assert abs(sum(phat.values()) - 1.0) < 1e-12
    assert abs(phat[0b00] - (1.0 - table.p[0b11])) < 1e-12
    assert abs(phat[0b01] - (table.p[0b11] - table.p[0b10])) < 1e-12
    assert abs(phat[0b01] - 0.161910) < 1e-4


def _mc_extended_types_k2(lam, samples, rng):
    """MC of the joint extended type: per color i, survival of the pure
    opposite-color process, simulated by generation growth with a certified
    frontier threshold."""
    freqs = np.zeros(4)
    survive = np.empty((samples, 2), dtype=bool)
    for i in range(2):
        mu = lam[1 - i]
        theta = damped_theta(mu) if mu > 1 else 0.0
        cert = 1 if theta == 0 else max(1, math.ceil(
            math.log(1e-10) / math.log1p(-theta)))
        active = rng.poisson(mu, samples)
        status = np.full(samples, -1, dtype=np.int8)  # -1 growing
        status[active == 0] = 0
        if theta == 0.0:
            # subcritical: survival impossible
            while (status == -1).any():
                idx = np.flatnonzero(status == -1)
                nxt = rng.poisson(mu * active[idx])
                active[idx] = nxt
                status[idx[nxt == 0]] = 0
            survive[:, i] = False
            continue
        status[active >= cert] = 1
        guard = 0
        while (status == -1).any():
            idx = np.flatnonzero(status == -1)
            nxt = rng.poisson(mu * active[idx])
            active[idx] = nxt
            status[idx[nxt == 0]] = 0
            status[idx[nxt >= cert]] = 1
            guard += 1
            assert guard < 10000
        survive[:, i] = status == 1
    # gamma bit i = i-avoiding alive = pure-other-color survival
    codes = survive[:, 0].astype(int) + 2 * survive[:, 1].astype(int)
    for g in range(4):
        freqs[g] = (codes == g).mean()
    return freqs


def test_extended_types_match_mc():
    rng = np.random.default_rng(42)
    samples = 10**5
    freqs = _mc_extended_types_k2((2.0, 2.0), samples, rng)
    phat = extended_type_distribution((2.0, 2.0))
    for g in range(4):
        se = math.sqrt(max(phat[g] * (1 - phat[g]), 1e-12) / samples)
        assert abs(freqs[g] - phat[g]) < 3.5 * se + 1e-9


def test_extended_types_subcritical_degenerate():
    phat = extended_type_distribution((0.8, 0.8))
    assert phat[0b00] == pytest.approx(1.0, abs=1e-12)


# -- g product --------------------------------------------------------------

def test_g_product_examples():
    assert g_product([1], [0], [0.5]) == 0.0
    assert g_product([0, 0], [2, 3], [0.5, 0.5]) == pytest.approx(0.25 * 0.125)
    assert g_product([1, 1, 1], [1, 1, 1], [0.3, 0.3, 0.3]) == pytest.approx(0.3 ** 3)


@given(st.integers(1, 4), st.data())
@settings(max_examples=100, deadline=None)
def test_g_product_bounds_property(k, data):
    gamma = data.draw(st.lists(st.integers(0, 1), min_size=k, max_size=k))
    beta = data.draw(st.lists(st.integers(0, 10), min_size=k, max_size=k))
    x = data.draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k))
    val = g_product(gamma, beta, x)
    assert 0.0 <= val <= 1.0


# -- Borel law and progeny GF -----------------------------------------------

def certified_borel_sum(mu: float, tail_tol: float = 1e-10) -> float:
    """Sum Borel(mu) pmf until the geometric tail bound drops below tail_tol."""
    ratio_bound = mu * math.exp(1.0 - mu)
    assert ratio_bound < 1.0
    total = 0.0
    m = 1
    while True:
        term = borel_pmf(mu, m)
        total += term
        if m > 5 and term * ratio_bound / (1.0 - ratio_bound) < tail_tol:
            return total
        m += 1
        assert m < 10**6


def test_borel_trivials():
    assert borel_pmf(0.5, 1) == pytest.approx(math.exp(-0.5))
    assert borel_pmf(0.0, 1) == 1.0
    assert borel_pmf(0.5, 2) == pytest.approx(math.exp(-1.0) / 2.0, rel=1e-12)


def test_borel_normalization():
    for mu in (0.2, 0.5, 0.8, 0.95):
        assert abs(certified_borel_sum(mu) - 1.0) < 1e-9


def test_total_progeny_gf_points():
    assert total_progeny_gf(0.5, 0.0) == 0.0
    assert total_progeny_gf(0.5, 1.0) == 1.0
    assert total_progeny_gf(2.0, 1.0) == pytest.approx(1.0 - survival_theta(2.0),
                                                       abs=1e-12)
    # series oracle at z = 0.5
    series = sum(borel_pmf(0.5, m) * 0.5 ** m for m in range(1, 200))
    assert abs(total_progeny_gf(0.5, 0.5) - series) < 1e-10


# -- Phi recursion ----------------------------------------------------------

def test_phi0_identity():
    for z in (0.0, 0.3, 1.0):
        assert phi_eval((2.0, 2.0), 0, {(): z}) == z


def test_phi_at_one_is_one():
    for lam, h in [((0.9, 0.9, 0.9), 1), ((0.3, 0.3, 0.3, 0.3), 1),
                   ((0.3, 0.3, 0.3, 0.3), 2)]:
        z = {s: 1.0 for s in color_strings(len(lam), h)}
        assert phi_eval(lam, h, z) == pytest.approx(1.0, abs=1e-12)


def test_phi_dimension_mismatch():
    with pytest.raises(ValueError):
        phi_eval((0.9, 0.9, 0.9), 1, {(0,): 0.5, (1,): 0.5})


# -- two-color series -------------------------------------------------------

def test_two_color_subcritical_is_point_mass():
    assert two_color_f_ell(0.5, 0.5, 1) == pytest.approx(1.0, abs=1e-9)
    for ell in (2, 3, 10):
        assert two_color_f_ell(0.5, 0.5, ell) == pytest.approx(0.0, abs=1e-9)


def test_two_color_asymmetric_sums_to_one():
    lam_r, lam_b = 1.7, 2.4
    f_inf = f_infinity_inclusion_exclusion((lam_r, lam_b))
    total = f_inf + sum(two_color_f_ell(lam_r, lam_b, ell)
                        for ell in range(1, 220))
    assert abs(total - 1.0) < 1e-6


def test_series_truncation_error_reported():
    from caperc.analytic import _borel_binomial_series

    # mu = 1, q = 0: terms decay like m^{-3/2}, so the certified geometric
    # tail bound (~ m^{-1/2}) can never reach 1e-12 within the term budget
    with pytest.raises(SeriesTruncationError):
        _borel_binomial_series(1.0, 0.0, 1, 1e-12, m_max=5000)


# -- near-critical constant -------------------------------------------------

def test_near_critical_diagnostics_monotone():
    _, diag = near_critical_constant(2, DEFAULT_EPS_GRID)
    assert diag.monotone
    assert len(diag.ratios) == len(DEFAULT_EPS_GRID)


def test_near_critical_grid_validation():
    with pytest.raises(ValueError):
        near_critical_constant(3, (2.0, 1.0))  # violates the assumption
    with pytest.raises(ValueError):
        near_critical_constant(2, (1e-3, 1e-2))  # not decreasing
