"""Multi-period simulation of industry export networks.

Each period every firm looks at every foreign market it does not yet serve,
prices each available entry channel against the previous period's market
state, and enters through the best channel when its net gain is positive.
Market counts, average prices and cutoffs are then recomputed.  Firms never
leave a market.
"""

from __future__ import annotations

import json
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import rng
from .errors import ConfigError, NumericAbort
from .geo import Country, WorldGeometry, synthetic_world
from .market import IndustryParams, Preferences
from .search import CHANNEL_ORDER, choose_channels

_FOLLOW, _PEER, _REMOTE, _LOCAL = (CHANNEL_ORDER.index(c) for c in ("follow", "peer_neighbor", "remote", "local"))


DESK_GAMMAS = tuple(round(0.1 * k, 1) for k in range(1, 11))


@dataclass(frozen=True)
class SimConfig:
    """Simulation inputs.

    The defaults are the desk-scale calibration: ten industries of 50 firms,
    40 countries and six periods, with parameters chosen so that exporters
    are a minority of firm-country pairs and the risk-set entry rate is a
    few percent.
    """

    gammas: tuple = DESK_GAMMAS
    n_firms: int = 50
    n_periods: int = 6
    n_countries: int = 40
    seed: int = 0
    world: WorldGeometry | None = None
    distance_scale: float = 15240.0
    gdp_scale: float = 1.24
    gdp_sigma: float = 1.0
    alpha: float = 5.3
    eta: float = 0.0794
    sigma: float = 0.947
    info_cost: float = 1.474
    delta: float = 0.745
    f_e: float = 0.31
    s_s: float = 1.0
    shock_std: float = 0.407
    cost_max: float = 24.73
    p_bar0: float = 2.65
    seed_markets: int = 3
    n_sectors: int | None = None
    n_regions: int = 5
    world_import_growth: tuple = (0.05, 0.10)
    reservation: float | None = None
    initial_portfolios: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if self.n_periods < 2:
            raise ConfigError("n_periods must be at least 2", field="n_periods")
        if self.n_firms < 1:
            raise ConfigError("n_firms must be at least 1", field="n_firms")
        if not self.gammas:
            raise ConfigError("need at least one industry", field="gammas")
        if self.world is None and self.n_countries < 2:
            raise ConfigError("n_countries must be at least 2", field="n_countries")
        if not (self.distance_scale > 0 and self.gdp_scale > 0 and self.gdp_sigma >= 0):
            raise ConfigError("distance_scale and gdp_scale must be positive, gdp_sigma non-negative")
        if self.shock_std < 0:
            raise ConfigError("shock_std must be non-negative", field="shock_std")
        if not self.cost_max > 0:
            raise ConfigError("cost_max must be positive", field="cost_max")
        if not 0 < self.p_bar0 < self.alpha:
            raise ConfigError("p_bar0 must lie in (0, alpha)", field="p_bar0")
        if self.seed_markets < 0:
            raise ConfigError("seed_markets must be non-negative", field="seed_markets")
        if self.n_regions < 1:
            raise ConfigError("n_regions must be at least 1", field="n_regions")
        if self.n_sectors is not None and not 1 <= self.n_sectors <= len(self.gammas):
            raise ConfigError("n_sectors must lie in [1, number of industries]", field="n_sectors")
        # reuse the domain checks of the model types
        try:
            Preferences(self.alpha, self.eta)
            for g in self.gammas:
                self.industry(g)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def n_industries(self):
        return len(self.gammas)

    @property
    def prefs(self):
        return Preferences(self.alpha, self.eta)

    def industry(self, gamma):
        return IndustryParams(gamma, self.sigma, self.info_cost, self.delta, self.f_e, self.s_s)

    def geometry(self):
        if self.world is not None:
            return self.world
        return synthetic_world(self.n_countries, self.seed, self.gdp_sigma, self.distance_scale, self.gdp_scale)

    def sectors(self):
        k = self.n_industries
        n_sec = self.n_sectors or max(1, k // 2)
        return np.arange(k) * n_sec // k


@dataclass
class History:
    config: SimConfig
    geometry: WorldGeometry
    industry: np.ndarray  # (F,)
    cost: np.ndarray  # (F,)
    region: np.ndarray  # (F,)
    entry_period: np.ndarray  # (F, C), -1 where never entered
    entry_channel: np.ndarray  # (F, C), index into CHANNEL_ORDER, -1 for seeded/never
    n_firms: np.ndarray  # (T, K, C)
    avg_price: np.ndarray  # (T, K, C)
    cutoff: np.ndarray  # (T, K, C)
    revenue: np.ndarray  # (T, F, C)
    world_growth: np.ndarray  # (T, C)
    trace: pd.DataFrame | None = None

    @property
    def n_periods(self):
        return self.n_firms.shape[0]

    def active(self, t):
        return (self.entry_period >= 0) & (self.entry_period <= t)

    def markets_per_firm(self, t):
        return self.active(t).sum(axis=1)

    def scale(self, t):
        return np.log1p(self.revenue[t].sum(axis=1))

    def recount(self, t):
        act = self.active(t)
        out = np.zeros(self.n_firms.shape[1:], dtype=int)
        np.add.at(out, self.industry, act.astype(int))
        return out

    def home_flows(self):
        return self.revenue.sum(axis=1)

    def events(self) -> pd.DataFrame:
        f, c = np.nonzero(self.entry_period >= 0)
        ids = np.array(self.geometry.ids)
        ch = self.entry_channel[f, c]
        names = np.array(list(CHANNEL_ORDER) + ["seed"])
        return pd.DataFrame({
            "firm": f,
            "industry": self.industry[f],
            "country": ids[c],
            "period": self.entry_period[f, c],
            "channel": names[np.where(ch < 0, len(CHANNEL_ORDER), ch)],
            "dist_home": self.geometry.dist[self.geometry.home_index, c],
        }).sort_values(["period", "firm", "country"], kind="stable").reset_index(drop=True)


class _Market:
    """Industry-by-country aggregates derived from a portfolio snapshot."""

    def __init__(self, geometry: WorldGeometry, counts):
        d = geometry.dist
        h = geometry.home_index
        gdp = geometry.gdp
        present = counts >= 1
        weight = np.exp(-counts / gdp[None, :] + 1.0)
        self.counts = counts
        self.present = present
        self.d_prime = present @ d
        self.d_rho = (present * weight) @ d
        # nearest industry market to home, excluding the target itself
        dh = np.where(present, d[h][None, :], np.inf)
        order = np.argsort(dh, axis=1, kind="stable")
        first = np.take_along_axis(dh, order[:, :1], axis=1)
        second = np.take_along_axis(dh, order[:, 1:2], axis=1) if dh.shape[1] > 1 else np.full_like(first, np.inf)
        cols = np.arange(d.shape[0])[None, :]
        d0 = np.where(order[:, :1] == cols, second, first)
        self.has_other = np.isfinite(d0)
        self.d_0 = np.where(self.has_other, d0, 0.0)

    @property
    def peer_distance(self):
        return self.d_0 + self.d_prime - self.d_rho


def _cutoffs(cfg: SimConfig, d_home, mkt: _Market, p_bar):
    """Vectorised cutoff_cost over all (industry, country) cells."""
    g = np.asarray(cfg.gammas)[:, None]
    n = mkt.counts
    i3 = cfg.sigma * cfg.info_cost * np.exp(-n + 1.0) * d_home[None, :] + (1.0 - cfg.sigma) * mkt.peer_distance
    i4 = cfg.s_s / (cfg.eta * n + 1.0 / g) * (cfg.alpha / g + cfg.eta * n * p_bar)
    return i3 + i4


def _prices(cfg, industry, cost, active, cutoff_prev, shape):
    """Mean optimal price of active, viable firms per cell; ``p_bar0`` where empty."""
    c_d = cutoff_prev[industry]  # (F, C)
    viable = active & (cost[:, None] <= c_d)
    price = 0.5 * (c_d + cost[:, None])
    tot = np.zeros(shape)
    cnt = np.zeros(shape)
    np.add.at(tot, industry, np.where(viable, price, 0.0))
    np.add.at(cnt, industry, viable.astype(float))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, tot / np.maximum(cnt, 1.0), cfg.p_bar0)


def _revenue(cfg, geometry, industry, cost, active, cutoff):
    c_d = cutoff[industry]
    gap = np.maximum(c_d - cost[:, None], 0.0)
    gam = np.asarray(cfg.gammas)[industry][:, None]
    q = geometry.gdp[None, :] * gam * gap / 2.0
    p = 0.5 * (c_d + cost[:, None])
    return np.where(active, p * q, 0.0)


def _decide(cfg, geometry, t, firms, industry, cost, own, mkt: _Market, cutoff, reservation, want_trace):
    """Channel values and choices for a block of firms against a frozen snapshot."""
    d = geometry.dist
    h = geometry.home_index
    C = geometry.n
    k = industry[firms]
    c = cost[firms][:, None]
    A = own[firms]
    gam = np.asarray(cfg.gammas)[k][:, None]
    c_d = cutoff[k]
    n_s = mkt.counts[k]
    cols = np.arange(C)[None, :]
    j = firms[:, None]
    mu = cfg.shock_std * rng.normal(cfg.seed, "shock", j, cols, t, 0)
    nu = cfg.shock_std * rng.normal(cfg.seed, "shock", j, cols, t, 1)

    candidate = ~A & (cols != h) & (c <= c_d)
    gross = 0.25 * geometry.gdp[None, :] * gam * np.maximum(c_d - c, 0.0) ** 2
    d_s = d[h][None, :]

    # remote search routes through the firm's own market nearest to home
    dh_own = np.where(A, d[h][None, :], np.inf)
    hub = np.argmin(dh_own, axis=1)
    has_own = A.any(axis=1)[:, None]
    d0_own = np.where(has_own, d[h, hub][:, None], 0.0)
    dprime_own = d[hub]

    peer_avail = (mkt.present[k] & ~A).any(axis=1)[:, None] & mkt.has_other[k]

    # the fixed entry cost is paid whichever channel is used
    gross = gross - cfg.f_e
    values = np.empty((len(firms), C, 4))
    values[..., _LOCAL] = gross - cfg.info_cost * d_s + mu
    values[..., _REMOTE] = gross - cfg.info_cost * dprime_own - d0_own + nu
    values[..., _FOLLOW] = gross - cfg.delta * cfg.info_cost * np.exp(-n_s + 1.0) * d_s + mu
    values[..., _PEER] = gross - (cfg.delta * mkt.peer_distance[k] + nu)
    avail = np.empty_like(values, dtype=bool)
    avail[..., _LOCAL] = candidate
    avail[..., _REMOTE] = candidate & has_own
    avail[..., _FOLLOW] = candidate & (n_s >= 1)
    avail[..., _PEER] = candidate & peer_avail

    chosen, best = choose_channels(values.reshape(-1, 4), avail.reshape(-1, 4), reservation)
    chosen = chosen.reshape(len(firms), C)
    trace = None
    if want_trace:
        ff, ss = np.nonzero(candidate)
        trace = pd.DataFrame({"firm": firms[ff], "period": t, "target": ss})
        for col, name in enumerate(CHANNEL_ORDER):
            trace[name] = np.where(avail[ff, ss, col], values[ff, ss, col], np.nan)
        ch = chosen[ff, ss]
        trace["chosen"] = np.where(ch >= 0, np.array(CHANNEL_ORDER, dtype=object)[np.maximum(ch, 0)], "")
        trace["entered"] = (ch >= 0).astype(int)
    return chosen, trace


def _seed_portfolios(cfg, geometry, industry, cost, cutoff0):
    """Initial markets: each firm's best local-search destinations, or an explicit layout."""
    F, C = len(industry), geometry.n
    entry = np.full((F, C), -1, dtype=int)
    if cfg.initial_portfolios is not None:
        for firm, markets in cfg.initial_portfolios.items():
            for m in markets:
                idx = geometry.index(m)
                if idx == geometry.home_index:
                    raise ConfigError(f"firm {firm} cannot export to its home country")
                entry[int(firm), idx] = 0
        return entry
    if cfg.seed_markets == 0:
        return entry
    h = geometry.home_index
    gam = np.asarray(cfg.gammas)[industry][:, None]
    gap = np.maximum(cutoff0[industry] - cost[:, None], 0.0)
    cols = np.arange(C)[None, :]
    mu = cfg.shock_std * rng.normal(cfg.seed, "seed_market", np.arange(F)[:, None], cols)
    score = 0.25 * geometry.gdp[None, :] * gam * gap**2 - cfg.info_cost * geometry.dist[h][None, :] + mu
    score[:, h] = -np.inf
    top = np.argsort(-score, axis=1, kind="stable")[:, : min(cfg.seed_markets, C - 1)]
    np.put_along_axis(entry, top, 0, axis=1)
    return entry


def run_simulation(cfg: SimConfig, threads: int = 1, trace: bool = False) -> History:
    geometry = cfg.geometry()
    C, K, T = geometry.n, cfg.n_industries, cfg.n_periods
    F = K * cfg.n_firms
    h = geometry.home_index
    d_home = geometry.dist[h]
    industry = np.repeat(np.arange(K), cfg.n_firms)
    firm_ids = np.arange(F)
    cost = cfg.cost_max * rng.uniform(cfg.seed, "cost", firm_ids)
    region = (rng.uniform(cfg.seed, "region", firm_ids) * cfg.n_regions).astype(int)
    reservation = 0.0 if cfg.reservation is None else cfg.reservation

    counts = np.zeros((T, K, C))
    prices = np.zeros((T, K, C))
    cutoffs = np.zeros((T, K, C))
    revenue = np.zeros((T, F, C))

    empty = _Market(geometry, np.zeros((K, C)))
    p_empty = np.full((K, C), cfg.p_bar0)
    cut_empty = _cutoffs(cfg, d_home, empty, p_empty)

    entry = _seed_portfolios(cfg, geometry, industry, cost, cut_empty)
    channel = np.full((F, C), -1, dtype=int)
    traces = []

    def settle(t, cut_prev):
        act = (entry >= 0) & (entry <= t)
        cnt = np.zeros((K, C))
        np.add.at(cnt, industry, act.astype(float))
        p_bar = _prices(cfg, industry, cost, act, cut_prev, (K, C))
        mkt = _Market(geometry, cnt)
        cut = _cutoffs(cfg, d_home, mkt, p_bar)
        if not (np.all(np.isfinite(cut)) and np.all(np.isfinite(p_bar))):
            raise NumericAbort(f"non-finite market state in period {t}")
        counts[t], prices[t], cutoffs[t] = cnt, p_bar, cut
        revenue[t] = _revenue(cfg, geometry, industry, cost, act, cut)
        return mkt

    mkt = settle(0, cut_empty)
    chunks = np.array_split(firm_ids, max(1, min(threads, F)))
    for t in range(1, T):
        own = (entry >= 0) & (entry <= t - 1)
        snap_cut = cutoffs[t - 1]

        def work(block, t=t, own=own, mkt=mkt, snap_cut=snap_cut):
            return _decide(cfg, geometry, t, block, industry, cost, own, mkt, snap_cut, reservation, trace)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(work, chunks))
        else:
            results = [work(b) for b in chunks]
        for block, (chosen, tr) in zip(chunks, results):
            rows, cols = np.nonzero(chosen >= 0)
            entry[block[rows], cols] = t
            channel[block[rows], cols] = chosen[rows, cols]
            if tr is not None:
                traces.append(tr)
        mkt = settle(t, snap_cut)

    growth_mean, growth_sd = cfg.world_import_growth
    world_growth = growth_mean + growth_sd * rng.normal(
        cfg.seed, "world_imports", np.arange(T)[:, None], np.arange(C)[None, :]
    )
    tr = None
    if trace:
        tr = pd.concat(traces, ignore_index=True) if traces else pd.DataFrame()
        if len(tr):
            tr["target"] = np.array(geometry.ids)[tr["target"].to_numpy()]
            tr = tr.sort_values(["period", "firm", "target"], kind="stable").reset_index(drop=True)
    return History(cfg, geometry, industry, cost, region, entry, channel, counts, prices, cutoffs,
                   revenue, world_growth, tr)


# -- panel -------------------------------------------------------------------

# distance regressors are logs of thousands of kilometres, whatever the model units
REGRESSOR_UNIT_KM = 1000.0

PANEL_COLUMNS = [
    "firm", "country", "year", "industry", "sector", "region",
    "export", "export_lag", "markets", "firm_dist", "N_sk", "N_sk_now",
    "ind_dist", "dens_dist", "gamma", "gamma_N", "gamma_dens",
    "scale", "gdp", "d_home", "d_world", "imports_home", "imports_world",
]

PANEL_DESCRIPTIONS = {
    "firm": "firm id (cluster variable)",
    "country": "destination country id",
    "year": "period index, 1..T-1",
    "industry": "industry index k",
    "sector": "industry group used for industry fixed effects",
    "region": "home region of the firm",
    "export": "Pr(export)_sj: 1 if the firm serves the country this period",
    "export_lag": "pr(export)_sj,lag",
    "markets": "markets_j: number of markets served last period",
    "firm_dist": "sum over the firm's last-period markets of log distance to the country",
    "N_sk": "firms of the same industry in the country last period",
    "N_sk_now": "firms of the same industry in the country this period",
    "ind_dist": "sum over the industry's last-period markets of log distance to the country",
    "dens_dist": "same sum weighted by exp(1 - N_i / L_i)",
    "gamma": "gamma_k, product heterogeneity",
    "gamma_N": "gamma_k * N_sk",
    "gamma_dens": "gamma_k * dens_dist",
    "scale": "scale_j: log(1 + export revenue) last period",
    "gdp": "GDP_s (market size)",
    "d_home": "log distance from home to the country",
    "d_world": "sum of log distances from the country to every other country",
    "imports_home": "lagged log growth of home exports to the country",
    "imports_world": "log growth of the country's imports from the rest of the world",
}


def _log_growth(flows):
    T, C = flows.shape
    out = np.full((T, C), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.log(flows[1:]) - np.log(flows[:-1])
    ok = (flows[1:] > 0) & (flows[:-1] > 0)
    out[1:] = np.where(ok, g, np.nan)
    return out


def extract_panel(history: History) -> pd.DataFrame:
    """One row per (firm, foreign country, period >= 1) with lagged regressors."""
    geo, cfg = history.geometry, history.config
    T = history.n_periods
    if T < 2:
        raise ValueError("history needs at least two periods")
    h = geo.home_index
    foreign = np.array([c for c in range(geo.n) if c != h])
    logd = geo.log_dist(REGRESSOR_UNIT_KM)
    gdp = geo.gdp
    ids = np.array(geo.ids)
    F = len(history.industry)
    k = history.industry
    gam = np.asarray(cfg.gammas)
    sector = cfg.sectors()
    home_growth = _log_growth(history.home_flows())
    frames = []
    for t in range(1, T):
        prev = history.active(t - 1)
        now = history.active(t)
        cnt_prev = history.n_firms[t - 1]
        present = cnt_prev >= 1
        weight = np.exp(-cnt_prev / gdp[None, :] + 1.0)
        ind = (present @ logd)[k][:, foreign]
        dens = ((present * weight) @ logd)[k][:, foreign]
        firm_d = (prev @ logd)[:, foreign]
        n_prev = cnt_prev[k][:, foreign]
        g = gam[k][:, None]
        shape = (F, len(foreign))
        frames.append(pd.DataFrame({
            "firm": np.repeat(np.arange(F), len(foreign)),
            "country": np.tile(ids[foreign], F),
            "year": t,
            "industry": np.repeat(k, len(foreign)),
            "sector": np.repeat(sector[k], len(foreign)),
            "region": np.repeat(history.region, len(foreign)),
            "export": now[:, foreign].astype(int).ravel(),
            "export_lag": prev[:, foreign].astype(int).ravel(),
            "markets": np.repeat(prev.sum(axis=1), len(foreign)),
            "firm_dist": firm_d.ravel(),
            "N_sk": n_prev.ravel(),
            "N_sk_now": history.n_firms[t][k][:, foreign].ravel(),
            "ind_dist": ind.ravel(),
            "dens_dist": dens.ravel(),
            "gamma": np.broadcast_to(g, shape).ravel(),
            "gamma_N": (g * n_prev).ravel(),
            "gamma_dens": (g * dens).ravel(),
            "scale": np.repeat(history.scale(t - 1), len(foreign)),
            "gdp": np.tile(gdp[foreign], F),
            "d_home": np.tile(logd[h, foreign], F),
            "d_world": np.tile(logd.sum(axis=0)[foreign], F),
            "imports_home": np.tile(home_growth[t - 1, foreign], F),
            "imports_world": np.tile(history.world_growth[t, foreign], F),
        }))
    panel = pd.concat(frames, ignore_index=True)
    for col in ("N_sk", "N_sk_now", "markets"):
        panel[col] = panel[col].astype(int)
    return panel[PANEL_COLUMNS]


# -- stylized facts ----------------------------------------------------------

def stylized_facts(history: History, period: int | None = None) -> dict[str, pd.DataFrame]:
    """Descriptive tables for one period (the last by default).

    ``markets_hist``: firms by number of markets served.
    ``industry_distance``: per industry, importer count against mean importer distance.
    ``industry_markets``: per industry, exporter count against mean markets per exporter.
    ``quantiles``: 20th percentile, median, mean and 95th percentile of markets
    per exporting firm and of N_sk over served (industry, country) cells.
    """
    t = history.n_periods - 1 if period is None else period
    if not 0 <= t < history.n_periods:
        raise ValueError(f"period {t} outside 0..{history.n_periods - 1}")
    geo, cfg = history.geometry, history.config
    act = history.active(t)
    m = act.sum(axis=1)
    vals, freq = np.unique(m, return_counts=True)
    hist = pd.DataFrame({"markets": vals, "firms": freq, "share": freq / len(m)})

    d_home = geo.dist[geo.home_index] * geo.scale
    counts = history.n_firms[t]
    dist_rows, mkt_rows = [], []
    for k, g in enumerate(cfg.gammas):
        served = counts[k] >= 1
        n_imp = int(served.sum())
        mean_d = float(d_home[served].mean()) if n_imp else float("nan")
        dist_rows.append((k, g, n_imp, int(counts[k].sum()), mean_d))
        exporters = m[(history.industry == k) & (m > 0)]
        mean_m = float(exporters.mean()) if len(exporters) else float("nan")
        mkt_rows.append((k, g, len(exporters), mean_m))
    ind_dist = pd.DataFrame(dist_rows, columns=["industry", "gamma", "importers", "firm_country_pairs", "mean_importer_km"])
    ind_mkts = pd.DataFrame(mkt_rows, columns=["industry", "gamma", "exporters", "mean_markets"])

    def summary(name, x):
        x = np.asarray(x, dtype=float)
        if len(x) == 0:
            return (name, 0, *([float("nan")] * 4))
        q20, med, q95 = np.quantile(x, [0.2, 0.5, 0.95])
        return (name, len(x), q20, med, float(x.mean()), q95)

    n_cells = counts[counts >= 1]
    quant = pd.DataFrame(
        [summary("markets", m[m > 0]), summary("N_sk", n_cells)],
        columns=["variable", "n", "q20", "median", "mean", "q95"],
    )
    return {"markets_hist": hist, "industry_distance": ind_dist, "industry_markets": ind_mkts, "quantiles": quant}


# -- files -------------------------------------------------------------------

FLOAT_FORMAT = "%.9g"


def write_table(df: pd.DataFrame, path) -> None:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_panel(path) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"country": str})


def history_summary(history: History) -> pd.DataFrame:
    """Long table of the market state: one row per (period, industry, country)."""
    T, K, C = history.n_firms.shape
    t, k, c = np.meshgrid(np.arange(T), np.arange(K), np.arange(C), indexing="ij")
    return pd.DataFrame({
        "period": t.ravel(),
        "industry": k.ravel(),
        "country": np.array(history.geometry.ids)[c.ravel()],
        "n_firms": history.n_firms.ravel().astype(int),
        "avg_price": history.avg_price.ravel(),
        "cutoff": history.cutoff.ravel(),
    })


_SCALARS = [f.name for f in SimConfig.__dataclass_fields__.values() if f.name not in ("world", "initial_portfolios")]


def save_history(history: History, path) -> None:
    """Write everything :func:`stylized_facts` and :func:`extract_panel` need to one ``.npz`` archive."""
    geo = history.geometry
    cfg = {k: getattr(history.config, k) for k in _SCALARS}
    arrays = dict(
        config=np.array(json.dumps(cfg, sort_keys=True)),
        ids=np.array(geo.ids),
        gdp=geo.gdp,
        home=np.array([c.home for c in geo.countries]),
        dist=geo.dist,
        scale=np.array(geo.scale),
        industry=history.industry,
        cost=history.cost,
        region=history.region,
        entry_period=history.entry_period,
        entry_channel=history.entry_channel,
        n_firms=history.n_firms,
        avg_price=history.avg_price,
        cutoff=history.cutoff,
        revenue=history.revenue,
        world_growth=history.world_growth,
    )
    # np.savez stamps members with the current time; a fixed stamp keeps files byte-identical
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        for name, arr in arrays.items():
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            with zf.open(info, "w") as f:
                np.lib.format.write_array(f, np.asarray(arr), allow_pickle=False)


def load_history(path) -> History:
    with np.load(path, allow_pickle=False) as z:
        try:
            cfg_kw = json.loads(str(z["config"]))
            countries = [Country(str(i), float(g), bool(h)) for i, g, h in zip(z["ids"], z["gdp"], z["home"])]
            geo = WorldGeometry(countries, z["dist"], float(z["scale"]))
            cfg_kw = {k: tuple(v) if isinstance(v, list) else v for k, v in cfg_kw.items()}
            cfg = SimConfig(world=geo, **cfg_kw)
            arrays = {k: z[k] for k in ("industry", "cost", "region", "entry_period", "entry_channel",
                                        "n_firms", "avg_price", "cutoff", "revenue", "world_growth")}
        except KeyError as exc:
            raise ValueError(f"{path}: not a history file (missing {exc})") from exc
    return History(cfg, geo, **arrays)
