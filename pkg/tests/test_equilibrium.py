import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exportnet.equilibrium import (
    EntryEnvironment,
    MultipleRootsWarning,
    cross_partial_forms,
    cross_partial_gamma_drho,
    cross_partial_gamma_n,
    cutoff_cost,
    density_weight_slope,
    dn_dgamma_analytic,
    follow_attenuation,
    free_entry_residual,
    large_distance_limit,
    signed_regime,
    solve_equilibrium_n,
    variable_cost_I4,
    variable_entry_cost_I3,
)
from exportnet.errors import DomainError, NoEquilibriumError, SingularityError
from exportnet.market import IndustryParams, Preferences


def env(d_s=1.0, d_0s=2.0, d_prime_s=3.0, d_rho_s=1.5, gamma=0.5, sigma=0.5, i=2.0,
        alpha=2.0, eta=1.0, p_bar=1.0, s_s=1.0, L=10.0):
    return EntryEnvironment(d_s, d_0s, d_prime_s, d_rho_s,
                            IndustryParams(gamma, sigma, i, 1.0, 0.0, s_s), Preferences(alpha, eta), p_bar, L)


def test_attenuation():
    assert follow_attenuation(1) == 1.0
    assert 5 * follow_attenuation(5) == pytest.approx(0.0916, abs=5e-5)
    assert round(5 * follow_attenuation(5), 2) == 0.09
    assert 28 * follow_attenuation(28) == pytest.approx(5.3e-11, rel=0.01)
    assert follow_attenuation(0) == pytest.approx(math.e)
    with pytest.raises(DomainError):
        follow_attenuation(-1)


def test_I3_examples():
    e = env(d_s=3, d_0s=4, d_prime_s=6, d_rho_s=2, sigma=0.5, i=2)
    assert variable_entry_cost_I3(e, 1.0) == pytest.approx(7.0)
    assert variable_entry_cost_I3(env(sigma=1.0, i=2.0, d_s=3.0), 1.0) == pytest.approx(6.0)
    assert variable_entry_cost_I3(env(sigma=0.0), 4.0) == pytest.approx(2 + 3 - 1.5)


def test_I4_examples():
    e = env(alpha=2, eta=1, gamma=1, p_bar=1, s_s=1)
    assert variable_cost_I4(1.0, e) == pytest.approx(1.5)
    assert variable_cost_I4(0.0, env(alpha=3.0, s_s=0.7)) == pytest.approx(2.1)
    assert variable_cost_I4(1e9, env(p_bar=0.8, s_s=0.5)) == pytest.approx(0.4, rel=1e-6)


def test_cutoff_composition():
    e = env(d_s=3, d_0s=4, d_prime_s=6, d_rho_s=2, sigma=0.5, i=2, alpha=2, eta=1, gamma=1, p_bar=1)
    assert cutoff_cost(e, 1.0) == pytest.approx(8.5)
    floor = env(d_s=0, d_0s=0, d_prime_s=0, d_rho_s=0, sigma=0.0, alpha=3.0, s_s=0.6)
    assert cutoff_cost(floor, 0.0) == pytest.approx(1.8)


def test_cutoff_decreasing_when_following_only():
    e = env(sigma=1.0, gamma=0.3, eta=0.5)
    n = np.linspace(0, 20, 401)
    c = cutoff_cost(e, n)
    assert np.all(np.diff(c) < 0)


def test_solver_round_trip_example():
    e = env()
    c = cutoff_cost(e, 3.0)
    assert solve_equilibrium_n(e, c) == pytest.approx(3.0, abs=1e-8)


def test_solver_matches_closed_form_without_following():
    e = env(sigma=0.0, gamma=0.4, eta=0.3, alpha=5.0, p_bar=2.0, s_s=0.9, d_0s=0.5, d_prime_s=1.0, d_rho_s=0.7)
    D = e.peer_distance
    c = 4.0
    closed = (0.9 * 5.0 - c + D) / (0.4 * 0.3 * (c - 0.9 * 2.0 - D))
    assert closed > 0
    assert solve_equilibrium_n(e, c) == pytest.approx(closed, abs=1e-8)


def test_solver_infeasible_target():
    e = env(d_s=0, d_0s=0, d_prime_s=0, d_rho_s=0, sigma=0.0, alpha=2.0, s_s=1.0)
    with pytest.raises(NoEquilibriumError):
        solve_equilibrium_n(e, 2.5)


def test_solver_flags_multiple_roots():
    # with p_bar above alpha the price term rises back after the follow term decays
    e = env(sigma=1.0, i=2.0, d_s=1.0, alpha=2.0, eta=0.1, gamma=1.0, p_bar=3.0, s_s=1.0, L=10.0)
    n = np.linspace(0, 100, 20001)
    c = cutoff_cost(e, n)
    target = 0.5 * (c.min() + c[-1])
    assert c[0] > target > c.min() and c[-1] > target
    with pytest.warns(MultipleRootsWarning):
        root = solve_equilibrium_n(e, target)
    assert cutoff_cost(e, root) == pytest.approx(target, abs=1e-10)
    assert root == pytest.approx(n[np.argmax(c <= target)], abs=0.01)


admissible = st.fixed_dictionaries({
    "d_s": st.floats(0.0, 5.0), "d_0s": st.floats(0.0, 5.0), "d_prime_s": st.floats(0.0, 10.0),
    "d_rho_s": st.floats(0.0, 10.0), "gamma": st.floats(0.05, 2.0), "sigma": st.floats(0.0, 1.0),
    "i": st.floats(1.01, 4.0), "alpha": st.floats(1.0, 10.0), "eta": st.floats(0.05, 3.0),
    "p_frac": st.floats(0.05, 0.95), "s_s": st.floats(0.1, 1.0), "n": st.floats(0.0, 40.0),
})


@given(admissible)
@settings(max_examples=1000, deadline=None)
def test_solver_round_trip_property(p):
    e = env(p["d_s"], p["d_0s"], p["d_prime_s"], p["d_rho_s"], p["gamma"], p["sigma"], p["i"],
            p["alpha"], p["eta"], p["p_frac"] * p["alpha"], p["s_s"], L=10.0)
    c = cutoff_cost(e, p["n"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MultipleRootsWarning)
        root = solve_equilibrium_n(e, c)
    assert root == pytest.approx(p["n"], abs=1e-8)


def _fd_dn_dgamma(e, c, h_rel=1e-6):
    h = h_rel * e.gamma
    return (solve_equilibrium_n(e.with_gamma(e.gamma + h), c) - solve_equilibrium_n(e.with_gamma(e.gamma - h), c)) / (2 * h)


@pytest.mark.parametrize("gamma", [0.2, 0.5, 1.0])
@pytest.mark.parametrize("n", [1.0, 4.0, 9.0])
def test_dn_dgamma_matches_finite_difference(gamma, n):
    e = env(gamma=gamma)
    c = cutoff_cost(e, n)
    got = dn_dgamma_analytic(e, n, c).value
    assert got == pytest.approx(_fd_dn_dgamma(e, c), rel=1e-4)


def test_dn_dgamma_large_distance_regime():
    g, eta = 0.5, 1.0
    e = env(gamma=g, eta=eta, d_0s=1e6)
    c_fixed = e.params.s_s * e.prefs.alpha
    d = dn_dgamma_analytic(e, 5.0, c_fixed)
    assert d.value > 0
    # the exact limit carries gamma squared
    assert d.value == pytest.approx(large_distance_limit(5.0, e.params, e.prefs), rel=1e-4)
    assert d.limit == pytest.approx(1 / (g**3 * eta))
    unit = dn_dgamma_analytic(env(gamma=1.0, eta=1.0, d_0s=1e6), 5.0, 2.0)
    assert unit.value == pytest.approx(1.0, rel=1e-4) and unit.limit_within_10pct


def test_dn_dgamma_singularity():
    e = env(sigma=0.0, d_0s=0, d_prime_s=0, d_rho_s=0, p_bar=1.0, s_s=1.0, eta=1.0)
    with pytest.raises(SingularityError):
        dn_dgamma_analytic(e, 2.0, 1.0)


def test_cross_partial_examples():
    prefs = Preferences(2.0, 1.0)
    assert cross_partial_gamma_n(2.0, 0.1, prefs, 1.0, 1.0) < 0
    assert cross_partial_gamma_n(5.0, 0.2, prefs, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert cross_partial_gamma_n(20.0, 0.2, prefs, 1.0, 1.0) > 0
    assert signed_regime(2.0, 0.1, 1.0, 2.0, 1.0) and not signed_regime(20.0, 0.2, 1.0, 2.0, 1.0)


@pytest.mark.parametrize("gamma", [0.1, 0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("n", [1.0, 2.0, 4.0, 6.0, 8.0])
def test_cross_partial_matches_mixed_difference(gamma, n):
    e = env(gamma=gamma, eta=0.5)
    hg, hn = 1e-4 * gamma, 1e-4 * max(n, 1.0)

    def c(g, m):
        return variable_cost_I4(m, e.with_gamma(g))

    fd = (c(gamma + hg, n + hn) - c(gamma + hg, n - hn) - c(gamma - hg, n + hn) + c(gamma - hg, n - hn)) / (4 * hg * hn)
    got = cross_partial_gamma_n(n, gamma, e.prefs, e.p_bar, 1.0)
    scale = max(abs(got), 0.5 * (2.0 - 1.0) / (0.5 * n * gamma + 1) ** 3)
    assert abs(got - fd) <= 1e-4 * scale


@given(st.floats(0.01, 30), st.floats(0.01, 3), st.floats(0.01, 3), st.floats(0.5, 10), st.floats(0.01, 0.99), st.floats(0.1, 1))
@settings(max_examples=300, deadline=None)
def test_cross_partial_forms_agree(n, gamma, eta, alpha, frac, s_s):
    prefs = Preferences(alpha, eta)
    q, x, c = cross_partial_forms(n, gamma, prefs, frac * alpha, s_s)
    floor = abs(s_s * eta * alpha * (1 - frac)) / (eta * n * gamma + 1) ** 3
    assert abs(q - c) <= 1e-12 * max(abs(c), floor)
    assert abs(x - c) <= 1e-12 * max(abs(c), floor)


def test_drho_partial():
    prefs = Preferences(2.0, 1.0)
    one = cross_partial_gamma_drho(2.0, 0.1, prefs, 1.0, 1.0, 1.0)
    two = cross_partial_gamma_drho(2.0, 0.1, prefs, 1.0, 1.0, 2.0)
    assert one == pytest.approx(-cross_partial_gamma_n(2.0, 0.1, prefs, 1.0, 1.0))
    assert two == pytest.approx(one / 2)
    assert one > 0
    with pytest.raises(SingularityError):
        cross_partial_gamma_drho(2.0, 0.1, prefs, 1.0, 1.0, 0.0)


def test_density_weight_slope_matches_difference():
    sizes, dists = np.array([2.0, 5.0, 10.0]), np.array([1.0, 2.0, 3.0])
    from exportnet.equilibrium import density_weighted
    h = 1e-6
    fd = (density_weighted(3.0 + h, sizes, dists) - density_weighted(3.0 - h, sizes, dists)) / (2 * h)
    assert -fd == pytest.approx(density_weight_slope(3.0, sizes, dists), rel=1e-8)


def test_residual_zero_at_root():
    e = env()
    c = cutoff_cost(e, 2.5)
    assert abs(free_entry_residual(e, 2.5, c)) < 1e-12
