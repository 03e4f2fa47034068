"""Linear-demand monopolistic competition: demand, pricing and profits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FirmNotViableError


@dataclass(frozen=True)
class Preferences:
    alpha: float
    eta: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")

    def check_price(self, p_bar):
        if not self.alpha > p_bar:
            raise DomainError(f"average price {p_bar} must stay below alpha={self.alpha}")


@dataclass(frozen=True)
class IndustryParams:
    gamma: float
    sigma: float = 0.5
    info_cost: float = 1.5
    delta: float = 1.0
    f_e: float = 0.0
    s_s: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.sigma <= 1.0:
            raise DomainError(f"sigma must lie in [0, 1], got {self.sigma}")
        if not self.info_cost > 1.0:
            raise DomainError(f"info_cost must exceed 1, got {self.info_cost}")
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not self.f_e >= 0:
            raise DomainError(f"f_e must be non-negative, got {self.f_e}")
        if not 0.0 < self.s_s <= 1.0:
            raise DomainError(f"s_s must lie in (0, 1], got {self.s_s}")


@dataclass(frozen=True)
class MarketIndustryState:
    """One (industry, country) cell.  ``n_firms`` is real-valued while solving."""

    n_firms: float
    avg_price: float
    cutoff: float
    industry_total: float | None = None
    size: float | None = None

    def __post_init__(self):
        if self.n_firms < 0:
            raise DomainError("n_firms must be non-negative")
        if not self.avg_price > 0:
            raise DomainError("avg_price must be positive")
        if self.cutoff < 0:
            raise DomainError("cutoff must be non-negative")

    @property
    def x_share(self):
        if not self.industry_total:
            return None
        return self.n_firms / self.industry_total

    @property
    def density(self):
        if self.size is None:
            return None
        return self.n_firms / self.size


def demand_quantity(p_i, state: MarketIndustryState, prefs: Preferences, gamma, L):
    """Quantity demanded of one variety at price ``p_i``; not clamped at zero."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    n, p_bar = state.n_firms, state.avg_price
    denom = prefs.eta * n + 1.0 / gamma
    return (prefs.alpha * L + prefs.eta * n * p_bar * L * gamma) / denom - L * gamma * p_i


def optimal_price(c, cutoff):
    if np.any(np.asarray(c) > np.asarray(cutoff)):
        raise FirmNotViableError(f"unit cost {c} exceeds cutoff {cutoff}")
    return 0.5 * (cutoff + c)


def is_viable(c, cutoff):
    return np.asarray(c) <= np.asarray(cutoff)


def firm_profit(c, cutoff, L, gamma):
    """Operating profit (L gamma / 4)(c_D - c)^2; zero for firms above the cutoff."""
    gap = np.asarray(cutoff, dtype=float) - np.asarray(c, dtype=float)
    out = np.where(gap >= 0.0, 0.25 * L * gamma * gap * gap, 0.0)
    return out[()] if out.ndim == 0 else out


def incremental_export_profit(delta_q, c, cutoff):
    """Gross gain from selling ``delta_q`` more units at the optimal markup."""
    if np.any(np.asarray(delta_q) < 0):
        raise DomainError("delta_q must be non-negative")
    return 0.5 * delta_q * (cutoff - c)


def optimal_quantity(c, cutoff, L, gamma):
    """Supply rule q = L gamma (p - c) evaluated at the optimal price."""
    return L * gamma * (optimal_price(c, cutoff) - c)
