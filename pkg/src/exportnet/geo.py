"""Countries, market sizes and the distance aggregates built on them.

Distances are held in *scaled* units (kilometres divided by ``distance_scale``,
1000 by default), so that the entry-cost equations see magnitudes of order
1-10 and the log-distance regressors land on the same scale as the
descriptive statistics they are compared with.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, UnknownCountryError

EARTH_RADIUS_KM = 6371.0088
DEFAULT_DISTANCE_SCALE = 1000.0


@dataclass(frozen=True)
class Country:
    id: str
    gdp: float
    home: bool = False
    lat: float | None = None
    lon: float | None = None

    def __post_init__(self):
        if not self.gdp > 0:
            raise DomainError(f"country {self.id!r}: gdp must be positive, got {self.gdp}")


def great_circle_km(lat1, lon1, lat2, lon2):
    """Haversine distance in kilometres; broadcasts over arrays."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(lon2) - np.radians(lon1)
    h = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


@dataclass(frozen=True)
class WorldGeometry:
    countries: tuple[Country, ...]
    dist: np.ndarray
    # kilometres per distance unit; lets regressors use a fixed unit
    scale: float = DEFAULT_DISTANCE_SCALE
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        countries = tuple(self.countries)
        object.__setattr__(self, "countries", countries)
        n = len(countries)
        ids = [c.id for c in countries]
        if len(set(ids)) != n:
            raise DomainError("duplicate country ids")
        if sum(c.home for c in countries) != 1:
            raise DomainError("exactly one country must carry the home flag")
        d = np.array(self.dist, dtype=float)
        if d.shape != (n, n):
            raise DomainError(f"distance matrix has shape {d.shape}, expected {(n, n)}")
        if not np.all(np.isfinite(d)):
            raise DomainError("distance matrix has non-finite entries")
        if not np.array_equal(d, d.T):
            if not np.allclose(d, d.T, rtol=1e-12, atol=0.0):
                raise DomainError("distance matrix is not symmetric")
            d = 0.5 * (d + d.T)
        if np.any(np.diag(d) != 0.0):
            raise DomainError("distance from a country to itself must be zero")
        off = ~np.eye(n, dtype=bool)
        if np.any(d[off] <= 0.0):
            raise DomainError("distances between distinct countries must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "_index", {cid: k for k, cid in enumerate(ids)})

    @classmethod
    def from_coordinates(cls, countries: Iterable[Country], distance_scale=DEFAULT_DISTANCE_SCALE):
        countries = tuple(countries)
        if any(c.lat is None or c.lon is None for c in countries):
            raise DomainError("every country needs lat/lon for great-circle distances")
        lat = np.array([c.lat for c in countries])
        lon = np.array([c.lon for c in countries])
        km = great_circle_km(lat[:, None], lon[:, None], lat[None, :], lon[None, :])
        np.fill_diagonal(km, 0.0)
        return cls(countries, km / distance_scale, distance_scale)

    @classmethod
    def from_matrix(cls, countries: Iterable[Country], km, distance_scale=DEFAULT_DISTANCE_SCALE):
        return cls(tuple(countries), np.asarray(km, dtype=float) / distance_scale, distance_scale)

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.countries]

    @property
    def n(self) -> int:
        return len(self.countries)

    @property
    def home(self) -> Country:
        return next(c for c in self.countries if c.home)

    @property
    def home_index(self) -> int:
        return self._index[self.home.id]

    @property
    def gdp(self) -> np.ndarray:
        return np.array([c.gdp for c in self.countries])

    def index(self, country_id) -> int:
        try:
            return self._index[country_id]
        except KeyError:
            raise UnknownCountryError(country_id) from None

    def distance(self, a, b) -> float:
        return float(self.dist[self.index(a), self.index(b)])

    def log_dist(self, unit_km=None) -> np.ndarray:
        """Natural log of distances with a zero diagonal (so self-pairs add nothing).

        ``unit_km`` re-expresses distances in that many kilometres first; by
        default the stored units are used.
        """
        factor = 1.0 if unit_km is None else self.scale / unit_km
        out = np.zeros_like(self.dist)
        off = ~np.eye(self.n, dtype=bool)
        out[off] = np.log(self.dist[off] * factor)
        return out


def _checked_indices(target, markets, geometry):
    t = geometry.index(target)
    idx = [geometry.index(m) for m in markets]
    if t in idx:
        raise DomainError(f"target {target!r} is already in the market set")
    return t, idx


def firm_distance_sum(target, firm_markets: Iterable, geometry: WorldGeometry) -> float:
    """Sum of log distances from ``target`` to each market in ``firm_markets``."""
    t, idx = _checked_indices(target, firm_markets, geometry)
    return float(sum(np.log(geometry.dist[i, t]) for i in idx))


def industry_distance_sum(target, industry_markets: Iterable, geometry: WorldGeometry) -> float:
    return firm_distance_sum(target, industry_markets, geometry)


def density_weighted_distance(
    target, industry_markets: Mapping, geometry: WorldGeometry, log: bool = False
) -> float:
    """Sum over markets i of exp(1 - N_i / L_i) * d(i, target).

    ``industry_markets`` maps country id to the number of industry firms
    active there.  With ``log=True`` the distances enter as natural logs
    (the regressor convention); otherwise as scaled distances (theory side).
    """
    t, idx = _checked_indices(target, industry_markets, geometry)
    total = 0.0
    for cid, i in zip(industry_markets, idx):
        size = geometry.countries[i].gdp
        if not size > 0:
            raise DomainError(f"market {cid!r} has non-positive size")
        d = geometry.dist[i, t]
        total += np.exp(-industry_markets[cid] / size + 1.0) * (np.log(d) if log else d)
    return float(total)


# -- file formats -----------------------------------------------------------

def read_countries(path, home=None) -> list[Country]:
    """Read ``id,gdp,lat,lon[,home]`` rows; a header line is optional."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            if rec[0].strip().lower() == "id":
                continue
            rows.append([x.strip() for x in rec])
    out = []
    for rec in rows:
        if len(rec) < 2:
            raise DomainError(f"{path}: country row needs at least id,gdp: {rec}")
        cid = rec[0]
        lat = float(rec[2]) if len(rec) > 2 and rec[2] != "" else None
        lon = float(rec[3]) if len(rec) > 3 and rec[3] != "" else None
        flag = rec[4].lower() in ("1", "true", "yes") if len(rec) > 4 else False
        if home is not None:
            flag = cid == home
        out.append(Country(cid, float(rec[1]), flag, lat, lon))
    return out


def read_distance_matrix(path):
    """Square matrix file: header row of ids, then one row of distances per id.

    A row may optionally start with its own id, which must match the header order.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header = [x.strip() for x in rows[0] if x.strip() != ""]
    body = []
    for k, r in enumerate(rows[1:]):
        r = [x.strip() for x in r]
        if len(r) == len(header) + 1:
            if r[0] != header[k]:
                raise DomainError(f"{path}: row label {r[0]!r} does not match header {header[k]!r}")
            r = r[1:]
        body.append([float(x) for x in r])
    return header, np.array(body, dtype=float)


def load_world(country_path, distance_path=None, home=None, distance_scale=DEFAULT_DISTANCE_SCALE):
    """Build a geometry from files; an explicit distance matrix wins over coordinates."""
    countries = read_countries(country_path, home=home)
    if distance_path is not None:
        ids, km = read_distance_matrix(distance_path)
        order = {cid: k for k, cid in enumerate(ids)}
        missing = [c.id for c in countries if c.id not in order]
        if missing:
            raise UnknownCountryError(missing[0])
        perm = [order[c.id] for c in countries]
        return WorldGeometry.from_matrix(countries, km[np.ix_(perm, perm)], distance_scale)
    return WorldGeometry.from_coordinates(countries, distance_scale)


def write_countries(geometry: WorldGeometry, path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "gdp", "lat", "lon", "home"])
        for c in geometry.countries:
            w.writerow([c.id, f"{c.gdp:.9g}", "" if c.lat is None else f"{c.lat:.9g}",
                        "" if c.lon is None else f"{c.lon:.9g}", int(c.home)])


def synthetic_world(n_countries: int, seed: int, gdp_sigma=1.0, distance_scale=DEFAULT_DISTANCE_SCALE, gdp_scale=1.0):
    """Random world: uniform points on the sphere, log-normal sizes, country 0 is home.

    Uses its own generator so that world layout and firm draws never share a stream.
    """
    if n_countries < 2:
        raise DomainError("a world needs at least two countries")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x5EED])))
    lat = np.degrees(np.arcsin(rng.uniform(-1.0, 1.0, n_countries)))
    lon = rng.uniform(-180.0, 180.0, n_countries)
    gdp = gdp_scale * np.exp(rng.normal(0.0, gdp_sigma, n_countries))
    countries = [
        Country(f"C{k:03d}", float(gdp[k]), k == 0, float(lat[k]), float(lon[k]))
        for k in range(n_countries)
    ]
    return WorldGeometry.from_coordinates(countries, distance_scale)
