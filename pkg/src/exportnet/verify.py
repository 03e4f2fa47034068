"""Finite-difference verification of the analytic comparative statics.

Three derivatives are checked at every grid point:

* ``dn_dgamma``: implicit dN/dgamma at a fixed cutoff, against a central
  difference of the equilibrium solver over gamma;
* ``cross_gamma_n``: d^2 c_D / dgamma dN, against a mixed central difference
  of the cutoff;
* ``cross_gamma_rho``: the same cross effect routed through the
  density-weighted distance, against a mixed difference in (gamma, d_rho)
  with the peer count recovered from d_rho by root finding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from .equilibrium import (
    EntryEnvironment,
    cross_partial_gamma_drho,
    cross_partial_gamma_n,
    cross_partial_scale,
    cutoff_cost,
    density_weight_slope,
    density_weighted,
    dn_dgamma_analytic,
    signed_regime,
    solve_equilibrium_n,
)
from .errors import DomainError
from .market import IndustryParams, Preferences


@dataclass(frozen=True)
class VerifyGrid:
    gammas: tuple = tuple(round(0.1 * k, 1) for k in range(1, 11))
    n_values: tuple = tuple(float(k) for k in range(1, 11))
    etas: tuple = (0.5, 1.0, 2.0)
    alpha: float = 2.0
    p_bar: float = 1.0
    s_s: float = 1.0
    sigma: float = 0.5
    info_cost: float = 2.0
    d_s: float = 1.0
    d_0s: float = 2.0
    d_prime_s: float = 3.0
    d_rho_s: float = 1.5
    L: float = 10.0
    # neighbour markets used for the d_rho chain: sizes and distances
    sizes: tuple = (2.0, 5.0, 10.0)
    dists: tuple = (1.0, 2.0, 3.0)
    tol: float = 1e-4
    h_gamma: float = 1e-6
    h_mixed: float = 1e-4

    def points(self):
        return list(itertools.product(self.gammas, self.n_values, self.etas))

    def env(self, gamma, eta, d_0s=None):
        return EntryEnvironment(
            self.d_s, self.d_0s if d_0s is None else d_0s, self.d_prime_s, self.d_rho_s,
            IndustryParams(gamma, self.sigma, self.info_cost, 1.0, 0.0, self.s_s),
            Preferences(self.alpha, eta), self.p_bar, self.L,
        )


@dataclass
class VerifyReport:
    table: pd.DataFrame
    tol: float
    failures: pd.DataFrame = field(init=False)

    def __post_init__(self):
        self.failures = self.table[~self.table["pass"]]

    @property
    def ok(self):
        return len(self.table) > 0 and len(self.failures) == 0

    def worst(self):
        if len(self.table) == 0:
            return None
        return self.table.loc[self.table["rel_err"].idxmax()]


def _rel(a, b, floor=0.0):
    return abs(a - b) / max(abs(a), floor, 1e-300)


def fd_dn_dgamma(env: EntryEnvironment, c_Ds, h_rel):
    h = h_rel * env.gamma
    up = solve_equilibrium_n(env.with_gamma(env.gamma + h), c_Ds)
    dn = solve_equilibrium_n(env.with_gamma(env.gamma - h), c_Ds)
    return (up - dn) / (2.0 * h)


def fd_cross_gamma_n(env: EntryEnvironment, n_s, h_rel):
    g = env.gamma
    hg, hn = h_rel * g, h_rel * max(n_s, 1.0)

    def c(gam, n):
        return cutoff_cost(env.with_gamma(gam), n)

    return (c(g + hg, n_s + hn) - c(g + hg, n_s - hn) - c(g - hg, n_s + hn) + c(g - hg, n_s - hn)) / (4.0 * hg * hn)


def fd_cross_gamma_rho(env: EntryEnvironment, n_s, sizes, dists, h_rel):
    """Mixed difference of c_D in (gamma, d_rho) with all neighbour counts equal to N(d_rho)."""
    rho0 = density_weighted(n_s, sizes, dists)

    def n_of(rho):
        f = lambda n: density_weighted(n, sizes, dists) - rho
        return brentq(f, 0.0, 10.0 * n_s + 100.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    def c(gam, rho):
        e = EntryEnvironment(env.d_s, env.d_0s, env.d_prime_s, rho, env.params, env.prefs, env.p_bar, env.L)
        return cutoff_cost(e.with_gamma(gam), n_of(rho))

    g = env.gamma
    hg, hr = h_rel * g, h_rel * rho0
    return (c(g + hg, rho0 + hr) - c(g + hg, rho0 - hr) - c(g - hg, rho0 + hr) + c(g - hg, rho0 - hr)) / (4.0 * hg * hr)


def run_verification(grid: VerifyGrid | None = None) -> VerifyReport:
    grid = grid or VerifyGrid()
    if not grid.points():
        raise DomainError("verification grid is empty")
    if not grid.tol > 0:
        raise DomainError("tolerance must be positive")
    rows = []
    for gamma, n, eta in grid.points():
        env = grid.env(gamma, eta)
        prefs = env.prefs
        regime = signed_regime(n, gamma, eta, grid.alpha, grid.p_bar)

        c = cutoff_cost(env, n)
        a = dn_dgamma_analytic(env, n, c).value
        f = fd_dn_dgamma(env, c, grid.h_gamma)
        rows.append(("dn_dgamma", gamma, n, eta, a, f, _rel(a, f), regime))

        # relative errors are floored where the cross partial crosses zero
        floor = cross_partial_scale(n, gamma, prefs, grid.p_bar, grid.s_s)
        a = cross_partial_gamma_n(n, gamma, prefs, grid.p_bar, grid.s_s)
        f = fd_cross_gamma_n(env, n, grid.h_mixed)
        rows.append(("cross_gamma_n", gamma, n, eta, a, f, _rel(a, f, floor), regime))

        w = density_weight_slope(n, grid.sizes, grid.dists)
        a = cross_partial_gamma_drho(n, gamma, prefs, grid.p_bar, grid.s_s, w)
        f = fd_cross_gamma_rho(env, n, grid.sizes, grid.dists, grid.h_mixed)
        rows.append(("cross_gamma_rho", gamma, n, eta, a, f, _rel(a, f, floor / w), regime))

    table = pd.DataFrame(rows, columns=["quantity", "gamma", "n_s", "eta", "analytic", "finite_diff", "rel_err", "signed_regime"])
    table["pass"] = table["rel_err"] <= grid.tol
    return VerifyReport(table, grid.tol)


def limit_check(grid: VerifyGrid | None = None, d_0s=1e6, n_min_magnitude=4.0) -> pd.DataFrame:
    """dN/dgamma with a remote hub at ``d_0s`` and the cutoff held at s_s * alpha.

    Reports the sign and the distance to the quoted approximation
    1/(gamma^3 eta) for every grid point.
    """
    grid = grid or VerifyGrid()
    rows = []
    for gamma, n, eta in grid.points():
        env = grid.env(gamma, eta, d_0s=d_0s)
        d = dn_dgamma_analytic(env, n, grid.s_s * grid.alpha)
        rows.append((gamma, n, eta, d.value, d.limit, d.value > 0, d.limit_within_10pct, n >= n_min_magnitude))
    return pd.DataFrame(rows, columns=["gamma", "n_s", "eta", "value", "quoted_limit", "positive", "within_10pct", "magnitude_checked"])


def quoted_attenuation():
    """N e^{1-N} at the two peer counts quoted alongside the limit."""
    return {5: 5 * math.exp(-4.0), 28: 28 * math.exp(-27.0)}
