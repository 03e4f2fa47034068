"""Market-entry channels and the channel-choice rule.

Every channel pays the same gross gain from a new market of size ``delta_L``,
(delta_L gamma / 4)(c_D - c)^2, and differs in what it costs to find buyers:

* local search: ``i * d_s`` straight from home;
* remote search: ``i * d'_s + d_0s`` routed through an existing partner;
* following peers already in the market: ``delta * i * exp(1 - N_s) * d_s``;
* searching around peers' markets: ``delta * (d_0s + d'_s - d_rho)``.

The functions broadcast over numpy arrays so the simulator can evaluate a
whole period at once.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .errors import ChannelUnavailableError, DomainError

LOCAL, REMOTE, FOLLOW, PEER = "local", "remote", "follow", "peer_neighbor"
# Tie-break priority for equal net profits.
CHANNEL_ORDER = (FOLLOW, PEER, REMOTE, LOCAL)


def _gross(delta_L, gamma, c_D, c):
    if np.any(np.asarray(c) > np.asarray(c_D)):
        raise DomainError("unit cost above the cutoff: the firm cannot sell in this market")
    gap = np.asarray(c_D, dtype=float) - c
    return 0.25 * delta_L * gamma * gap * gap


def local_search_profit(delta_L, gamma, c_D, c, i, d_s, shock=0.0):
    return _gross(delta_L, gamma, c_D, c) - i * d_s + shock


def remote_search_profit(delta_L, gamma, c_D, c, i, d_prime_s, d_0s, shock=0.0):
    # d_0s is charged without the unit information cost.
    return _gross(delta_L, gamma, c_D, c) - i * d_prime_s - d_0s + shock


def follow_profit(delta_L, gamma, c_Ds, c, delta, i, n_s, d_s, shock=0.0):
    if np.any(np.asarray(n_s) < 1):
        raise ChannelUnavailableError("following needs at least one peer in the market")
    return _gross(delta_L, gamma, c_Ds, c) - delta * i * np.exp(-np.asarray(n_s, dtype=float) + 1.0) * d_s + shock


def peer_neighbor_profit(delta_L, gamma, c_Ds, c, delta, d_0s, d_prime_s, d_rho_s, shock=0.0):
    """I_1 - I_2 with the shock inside I_2, so it enters with a minus sign."""
    i_1 = _gross(delta_L, gamma, c_Ds, c)
    i_2 = delta * (d_0s + d_prime_s - d_rho_s) + shock
    return i_1 - i_2


def triangle_check(d_s, d_prime_s, d_0s) -> bool:
    """Direct route strictly shorter than the detour through a partner."""
    if min(d_s, d_prime_s, d_0s) < 0:
        raise DomainError("distances must be non-negative")
    return bool(d_s < d_prime_s + d_0s)


@dataclass(frozen=True)
class EntryOpportunity:
    firm: object
    target: object
    channel: str
    delta_L: float
    gross_profit: float
    entry_cost: float
    shock: float
    net_profit: float = None

    def __post_init__(self):
        if self.channel not in CHANNEL_ORDER:
            raise DomainError(f"unknown channel {self.channel!r}")
        net = self.gross_profit - self.entry_cost + self.shock
        if self.net_profit is None:
            object.__setattr__(self, "net_profit", net)
        elif self.net_profit != net:
            raise DomainError("net_profit must equal gross_profit - entry_cost + shock")


def opportunity(firm, target, channel, delta_L, gamma, c_D, c, cost, shock):
    """Build an :class:`EntryOpportunity` from a channel's entry cost."""
    gross = float(_gross(delta_L, gamma, c_D, c))
    return EntryOpportunity(firm, target, channel, delta_L, gross, float(cost), float(shock))


def entry_decision(firm, target, channels: Iterable[EntryOpportunity], reservation=0.0):
    """Best available channel if it beats ``reservation``, else ``None``.

    Ties go to the channel listed first in :data:`CHANNEL_ORDER`.
    """
    best = None
    for opp in sorted(channels, key=lambda o: CHANNEL_ORDER.index(o.channel)):
        if opp.firm != firm or opp.target != target:
            raise DomainError("opportunity belongs to a different firm or target")
        if best is None or opp.net_profit > best.net_profit:
            best = opp
    if best is None or not best.net_profit > reservation:
        return None
    return best


def choose_channels(values, available, reservation=0.0):
    """Vectorised :func:`entry_decision` over rows.

    ``values`` and ``available`` have one column per channel in
    :data:`CHANNEL_ORDER`.  Returns the chosen column per row (-1 for no entry)
    and the winning net profit (``-inf`` where nothing is available).
    """
    values = np.where(available, values, -np.inf)
    best = np.argmax(values, axis=1)
    top = values[np.arange(len(values)), best]
    chosen = np.where(top > reservation, best, -1)
    return chosen, top
