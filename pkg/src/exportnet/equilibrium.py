"""Entry costs, the zero-profit cutoff and the equilibrium number of exporters.

The cutoff cost of a market is the sum of a variable entry cost (following
peers, or searching around peers' markets) and a price/variety term:

    c_D = sigma * i * exp(1 - N) * d_s + (1 - sigma) * (d_0 + d' - d_rho)
          + s / (eta N + 1/gamma) * (alpha/gamma + eta N p_bar)

Holding ``c_D`` fixed, free entry pins down ``N``.  Multiplying through by
``eta N + 1/gamma`` gives the residual solved by :func:`solve_equilibrium_n`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NoEquilibriumError, SingularityError
from .market import IndustryParams, Preferences


class MultipleRootsWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class EntryEnvironment:
    d_s: float
    d_0s: float
    d_prime_s: float
    d_rho_s: float
    params: IndustryParams
    prefs: Preferences
    p_bar: float
    L: float = 1.0

    def __post_init__(self):
        for name in ("d_s", "d_0s"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if not self.p_bar > 0:
            raise DomainError("p_bar must be positive")
        if not self.L > 0:
            raise DomainError("market size L must be positive")

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def peer_distance(self):
        """d_0 + d' - d_rho, the distance term of the peer-neighbour channel."""
        return self.d_0s + self.d_prime_s - self.d_rho_s

    def with_gamma(self, gamma):
        return replace(self, params=replace(self.params, gamma=gamma))

    def with_prefs(self, **kw):
        return replace(self, prefs=replace(self.prefs, **kw))


def follow_attenuation(n_s):
    if np.any(np.asarray(n_s) < 0):
        raise DomainError("n_s must be non-negative")
    return np.exp(-np.asarray(n_s, dtype=float) + 1.0)[()]


def variable_entry_cost_I3(env: EntryEnvironment, n_s):
    p = env.params
    follow = p.info_cost * np.exp(-np.asarray(n_s, dtype=float) + 1.0) * env.d_s
    return (p.sigma * follow + (1.0 - p.sigma) * env.peer_distance)[()]


def variable_cost_I4(n_s, env: EntryEnvironment):
    p, pr = env.params, env.prefs
    if not p.gamma > 0:
        raise DomainError("gamma must be positive")
    n = np.asarray(n_s, dtype=float)
    denom = pr.eta * n + 1.0 / p.gamma
    return (p.s_s / denom * (pr.alpha / p.gamma + pr.eta * n * env.p_bar))[()]


def cutoff_cost(env: EntryEnvironment, n_s):
    return variable_entry_cost_I3(env, n_s) + variable_cost_I4(n_s, env)


def free_entry_residual(env: EntryEnvironment, n_s, c_target):
    """F(N) = (eta N + 1/gamma) * (c_D(N) - c_target), written out term by term."""
    p, pr = env.params, env.prefs
    n = np.asarray(n_s, dtype=float)
    g = p.gamma
    weight = pr.eta * n + 1.0 / g
    att = np.exp(-n + 1.0)
    out = (
        (pr.alpha * p.s_s / g + pr.eta * p.s_s * n * env.p_bar)
        - weight * c_target
        + p.sigma * (p.info_cost * att * env.d_s) * weight
        + (1.0 - p.sigma) * env.peer_distance * weight
    )
    return out[()]


def _residual_scale(env, n_s, c_target):
    """Sum of the residual's term magnitudes; roundoff in F is a small multiple of it."""
    p, pr = env.params, env.prefs
    n = np.asarray(n_s, dtype=float)
    weight = pr.eta * n + 1.0 / p.gamma
    return (
        abs(pr.alpha * p.s_s / p.gamma) + abs(pr.eta * p.s_s * env.p_bar) * n + weight * abs(c_target)
        + p.sigma * p.info_cost * np.exp(-n + 1.0) * env.d_s * weight
        + (1.0 - p.sigma) * abs(env.peer_distance) * weight
    )


def free_entry_residual_dn(env: EntryEnvironment, n_s, c_target):
    """dF/dN, the coefficient on dN in the total differential of F."""
    p, pr = env.params, env.prefs
    n = np.asarray(n_s, dtype=float)
    follow = p.sigma * p.info_cost * np.exp(-n + 1.0) * env.d_s
    return (
        pr.eta * p.s_s * env.p_bar
        - pr.eta * c_target
        - follow * (pr.eta * n + 1.0 / p.gamma)
        + follow * pr.eta
        + (1.0 - p.sigma) * env.peer_distance * pr.eta
    )[()]


def _scan_grid(n_max):
    head = min(n_max, 64.0)
    pts = [np.linspace(0.0, head, 1025)]
    if n_max > head:
        pts.append(np.geomspace(head, n_max, 513))
    return np.unique(np.concatenate(pts))


def solve_equilibrium_n(env: EntryEnvironment, c_target, n_max=None, max_bisect=200, max_newton=10):
    """Smallest N >= 0 with c_D(N) = c_target, by bracketing bisection plus Newton polish.

    Raises :class:`NoEquilibriumError` when the residual keeps one sign on
    ``[0, n_max]`` (default ``10 * L``).  Emits :class:`MultipleRootsWarning`
    if more than one sign change is found.
    """
    if n_max is None:
        n_max = 10.0 * env.L
    if not n_max > 0:
        raise DomainError("n_max must be positive")
    grid = _scan_grid(float(n_max))
    vals = free_entry_residual(env, grid, c_target)
    if not np.all(np.isfinite(vals)):
        raise NoEquilibriumError("free-entry residual is not finite on the bracket")
    signs = np.sign(vals)
    signs[np.abs(vals) <= 1e-13 * _residual_scale(env, grid, c_target)] = 0.0
    zero = np.flatnonzero(signs == 0)
    change = np.flatnonzero(signs[:-1] * signs[1:] < 0)
    n_roots = len(zero) + len(change)
    if n_roots == 0:
        raise NoEquilibriumError(
            f"no equilibrium on [0, {n_max:g}]: c_target={c_target:.6g}, "
            f"c_D(0)={cutoff_cost(env, 0.0):.6g}, c_D(n_max)={cutoff_cost(env, n_max):.6g}"
        )
    if n_roots > 1:
        warnings.warn(
            f"free-entry residual changes sign {n_roots} times; returning the smallest root",
            MultipleRootsWarning, stacklevel=2,
        )
    first_zero = zero[0] if len(zero) else len(grid)
    first_change = change[0] if len(change) else len(grid)
    if first_zero <= first_change:
        return float(grid[first_zero])

    lo, hi = float(grid[first_change]), float(grid[first_change + 1])
    f_lo = float(vals[first_change])
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = free_entry_residual(env, mid, c_target)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if math.copysign(1.0, f_mid) == math.copysign(1.0, f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    n = 0.5 * (lo + hi)
    f_n = abs(free_entry_residual(env, n, c_target))
    for _ in range(max_newton):
        slope = free_entry_residual_dn(env, n, c_target)
        if slope == 0.0 or f_n == 0.0:
            break
        step = n - free_entry_residual(env, n, c_target) / slope
        if not lo <= step <= hi:
            break
        f_step = abs(free_entry_residual(env, step, c_target))
        if f_step >= f_n:
            break
        n, f_n = step, f_step
    return float(n)


class GammaDerivative(NamedTuple):
    value: float
    limit: float
    limit_within_10pct: bool


def dn_dgamma_analytic(env: EntryEnvironment, n_s, c_Ds) -> GammaDerivative:
    """Implicit-function derivative dN/dgamma of the free-entry condition at fixed c_D.

    ``limit`` is the large-distance approximation 1/(gamma^3 eta) quoted
    alongside it; ``limit_within_10pct`` reports whether it is within 10% of
    the exact value.
    """
    p, pr = env.params, env.prefs
    g, e = p.gamma, pr.eta
    follow = p.sigma * p.info_cost * math.exp(-n_s + 1.0) * env.d_s
    peer = (1.0 - p.sigma) * env.peer_distance
    num = (-c_Ds + pr.alpha * p.s_s + follow + peer) / g**2
    den = e * p.s_s * env.p_bar - e * c_Ds - follow * (e * n_s + 1.0 / g) + follow * e + peer * e
    if abs(den) < 1e-12:
        raise SingularityError(f"dN/dgamma denominator vanishes ({den:.3g})")
    value = num / den
    limit = 1.0 / (g**3 * e)
    return GammaDerivative(value, limit, abs(limit - value) <= 0.1 * abs(value))


def large_distance_limit(n_s, params: IndustryParams, prefs: Preferences):
    """Closed form of dN/dgamma as d_0 -> infinity with c_D held finite.

    Only the (1 - sigma) peer-distance terms survive, which leaves
    1 / (gamma^2 eta) for any sigma < 1.
    """
    if params.sigma >= 1.0:
        raise SingularityError("the peer-distance terms vanish when sigma = 1")
    return 1.0 / (params.gamma**2 * prefs.eta)


def _check_price(prefs, p_bar):
    if not prefs.alpha > p_bar:
        warnings.warn(f"alpha={prefs.alpha} <= p_bar={p_bar}: outside the signed regime",
                      RuntimeWarning, stacklevel=3)


def cross_partial_forms(n_s, gamma, prefs: Preferences, p_bar, s_s):
    """d^2 c_D / (dgamma dN) three ways: quartic (printed), A.9 expansion, reduced cubic."""
    e, a = prefs.eta, prefs.alpha
    x = e * n_s * gamma
    quartic = -s_s / (x + 1.0) ** 4 * (a * e - e * p_bar) * (-(e**2) * n_s**2 * gamma**2 + 1.0)
    expanded = s_s / (x + 1.0) ** 4 * (
        (-a * e + e * p_bar) * (x + 1.0) ** 2
        - 2.0 * e * gamma * (x + 1.0) * (-a * e * n_s + e * n_s * p_bar)
    )
    cubic = s_s * (e * p_bar - e * a) * (1.0 - x) / (x + 1.0) ** 3
    return quartic, expanded, cubic


def cross_partial_scale(n_s, gamma, prefs: Preferences, p_bar, s_s):
    """Magnitude of the cross partial with its vanishing (1 - eta N gamma) factor removed."""
    x = prefs.eta * n_s * gamma
    return abs(s_s * prefs.eta * (prefs.alpha - p_bar)) / (x + 1.0) ** 3


def cross_partial_gamma_n(n_s, gamma, prefs: Preferences, p_bar, s_s):
    """How the cutoff's response to heterogeneity shifts with the number of peers.

    Negative when alpha > p_bar and eta N gamma < 1; zero on eta N gamma = 1.
    """
    _check_price(prefs, p_bar)
    quartic, _, cubic = cross_partial_forms(n_s, gamma, prefs, p_bar, s_s)
    floor = cross_partial_scale(n_s, gamma, prefs, p_bar, s_s)
    if abs(quartic - cubic) > 1e-12 * max(abs(quartic), abs(cubic), floor):
        raise ArithmeticError(f"cross-partial forms disagree: {quartic!r} vs {cubic!r}")
    return cubic


def cross_partial_gamma_drho(n_s, gamma, prefs: Preferences, p_bar, s_s, weight_sum):
    """Cross partial in (gamma, d_rho) via dN/dd_rho = -1 / weight_sum.

    ``weight_sum`` is sum_i exp(1 - N_i/L_i) / L_i * d'_is, the slope of
    d_rho in the peer count.
    """
    if weight_sum == 0:
        raise SingularityError("weight_sum is zero")
    return -cross_partial_gamma_n(n_s, gamma, prefs, p_bar, s_s) / weight_sum


def density_weight_slope(n, sizes, dists):
    """sum_i exp(1 - n_i/L_i) / L_i * d_i for peer counts ``n`` (scalar or per market)."""
    sizes = np.asarray(sizes, dtype=float)
    n = np.broadcast_to(np.asarray(n, dtype=float), sizes.shape)
    return float(np.sum(np.exp(-n / sizes + 1.0) / sizes * np.asarray(dists, dtype=float)))


def density_weighted(n, sizes, dists):
    sizes = np.asarray(sizes, dtype=float)
    n = np.broadcast_to(np.asarray(n, dtype=float), sizes.shape)
    return float(np.sum(np.exp(-n / sizes + 1.0) * np.asarray(dists, dtype=float)))


def signed_regime(n_s, gamma, eta, alpha, p_bar) -> bool:
    """True where the cross partials carry the signs asserted for them."""
    return bool(eta * n_s * gamma < 1.0 and alpha > p_bar)
