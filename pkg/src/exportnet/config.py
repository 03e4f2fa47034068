"""INI-style configuration for simulations and verification sweeps.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` and
``;`` start comments.  Every key belongs to exactly one section.  Lists are
comma separated.  Paths are resolved relative to the config file.

Simulation sections::

    [run]          seed, n_periods, n_firms
    [world]        n_countries, distance_scale, gdp_scale, gdp_sigma, n_regions,
                   countries, distances, home
    [industries]   gammas, n_sectors, sigma, info_cost, delta, f_e, s_s
    [preferences]  alpha, eta, p_bar0
    [firms]        cost_max, seed_markets, shock_std, reservation
    [imports]      world_growth_mean, world_growth_sd

Verification sections::

    [grid]         gammas, n_values, etas, alpha, p_bar, s_s
    [environment]  sigma, info_cost, d_s, d_0s, d_prime_s, d_rho_s, L, sizes, dists
    [tolerance]    tol, h_gamma, h_mixed
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
import re
from pathlib import Path

from .errors import ConfigError
from .sim import SimConfig
from .verify import VerifyGrid

INF = math.inf


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if not v.is_integer():
        raise ValueError(f"expected an integer, got {s!r}")
    return int(v)


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _str(s):
    return s.strip()


# (section, key) -> (target field, parser, lower, upper, lower_open, upper_open)
_SIM_KEYS = {
    ("run", "seed"): ("seed", _int, 0, 2**64 - 1, False, False),
    ("run", "n_periods"): ("n_periods", _int, 2, INF, False, False),
    ("run", "n_firms"): ("n_firms", _int, 1, INF, False, False),
    ("world", "n_countries"): ("n_countries", _int, 2, INF, False, False),
    ("world", "distance_scale"): ("distance_scale", _float, 0, INF, True, False),
    ("world", "gdp_scale"): ("gdp_scale", _float, 0, INF, True, False),
    ("world", "gdp_sigma"): ("gdp_sigma", _float, 0, INF, False, False),
    ("world", "n_regions"): ("n_regions", _int, 1, INF, False, False),
    ("world", "countries"): ("countries", _str, None, None, False, False),
    ("world", "distances"): ("distances", _str, None, None, False, False),
    ("world", "home"): ("home", _str, None, None, False, False),
    ("industries", "gammas"): ("gammas", _floats, 0, INF, True, False),
    ("industries", "n_sectors"): ("n_sectors", _int, 1, INF, False, False),
    ("industries", "sigma"): ("sigma", _float, 0, 1, False, False),
    ("industries", "info_cost"): ("info_cost", _float, 1, INF, True, False),
    ("industries", "delta"): ("delta", _float, 0, INF, True, False),
    ("industries", "f_e"): ("f_e", _float, 0, INF, False, False),
    ("industries", "s_s"): ("s_s", _float, 0, 1, True, False),
    ("preferences", "alpha"): ("alpha", _float, 0, INF, True, False),
    ("preferences", "eta"): ("eta", _float, 0, INF, True, False),
    ("preferences", "p_bar0"): ("p_bar0", _float, 0, INF, True, False),
    ("firms", "cost_max"): ("cost_max", _float, 0, INF, True, False),
    ("firms", "seed_markets"): ("seed_markets", _int, 0, INF, False, False),
    ("firms", "shock_std"): ("shock_std", _float, 0, INF, False, False),
    ("firms", "reservation"): ("reservation", _float, -INF, INF, False, False),
    ("imports", "world_growth_mean"): ("growth_mean", _float, -INF, INF, False, False),
    ("imports", "world_growth_sd"): ("growth_sd", _float, 0, INF, False, False),
}

_GRID_KEYS = {
    ("grid", "gammas"): ("gammas", _floats, 0, INF, True, False),
    ("grid", "n_values"): ("n_values", _floats, 0, INF, False, False),
    ("grid", "etas"): ("etas", _floats, 0, INF, True, False),
    ("grid", "alpha"): ("alpha", _float, 0, INF, True, False),
    ("grid", "p_bar"): ("p_bar", _float, 0, INF, True, False),
    ("grid", "s_s"): ("s_s", _float, 0, 1, True, False),
    ("environment", "sigma"): ("sigma", _float, 0, 1, False, False),
    ("environment", "info_cost"): ("info_cost", _float, 1, INF, True, False),
    ("environment", "d_s"): ("d_s", _float, 0, INF, True, False),
    ("environment", "d_0s"): ("d_0s", _float, 0, INF, True, False),
    ("environment", "d_prime_s"): ("d_prime_s", _float, 0, INF, False, False),
    ("environment", "d_rho_s"): ("d_rho_s", _float, 0, INF, False, False),
    ("environment", "L"): ("L", _float, 0, INF, True, False),
    ("environment", "sizes"): ("sizes", _floats, 0, INF, True, False),
    ("environment", "dists"): ("dists", _floats, 0, INF, True, False),
    ("tolerance", "tol"): ("tol", _float, 0, INF, True, False),
    ("tolerance", "h_gamma"): ("h_gamma", _float, 0, 1, True, True),
    ("tolerance", "h_mixed"): ("h_mixed", _float, 0, 1, True, True),
}

_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_map(text):
    """(section, key) -> 1-based line number, plus section header lines."""
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION.match(line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), no)
            continue
        m = _KEY.match(line)
        if m and section is not None and not line[:1].isspace():
            lines.setdefault((section, m.group(1).strip()), no)
    return lines


def _bound_text(lo, hi, lo_open, hi_open):
    return f"{'(' if lo_open else '['}{lo:g}, {hi:g}{')' if hi_open or hi == INF else ']'}"


def _check_bounds(name, value, lo, hi, lo_open, hi_open, line):
    if lo is None:
        return
    for v in value if isinstance(value, tuple) else (value,):
        bad = not math.isfinite(v) or v < lo or v > hi or (lo_open and v == lo) or (hi_open and v == hi)
        if bad:
            raise ConfigError(f"{name} = {v:g} is outside {_bound_text(lo, hi, lo_open, hi_open)}", line, name)


def _parse(text, keys, source):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(source))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"{source}: {str(exc).splitlines()[0]}", line) from None
    lines = _line_map(text)
    known_sections = {s for s, _ in keys}
    out, where = {}, {}
    for section in cp.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)))
        for key, raw in cp.items(section):
            line = lines.get((section, key))
            if (section, key) not in keys:
                raise ConfigError(f"unknown key {section}.{key}", line, f"{section}.{key}")
            name, parse, lo, hi, lo_open, hi_open = keys[(section, key)]
            full = f"{section}.{key}"
            try:
                value = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{full}: cannot parse {raw!r} ({exc})", line, full) from None
            if isinstance(value, tuple) and not value and parse is _floats:
                raise ConfigError(f"{full} is empty", line, full)
            _check_bounds(full, value, lo, hi, lo_open, hi_open, line)
            out[name] = value
            where[name] = (full, line)
    return out, where


def load_sim_config(path, seed=None) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_sim_config(text, base=path.parent, source=path, seed=seed)


def parse_sim_config(text, base=Path("."), source="<config>", seed=None) -> SimConfig:
    values, where = _parse(text, _SIM_KEYS, source)
    kw = dict(values)
    world_keys = {k: kw.pop(k) for k in ("countries", "distances", "home") if k in kw}
    if world_keys:
        if "countries" not in world_keys:
            full, line = where[next(iter(world_keys))]
            raise ConfigError("world.countries is required when a country file is used", line, "world.countries")
        from .geo import load_world

        scale = kw.get("distance_scale", SimConfig.distance_scale)
        dist_path = world_keys.get("distances")
        try:
            kw["world"] = load_world(
                Path(base) / world_keys["countries"],
                None if dist_path is None else Path(base) / dist_path,
                world_keys.get("home"),
                scale,
            )
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"world files: {exc}", where["countries"][1], "world.countries") from None
    if "growth_mean" in kw or "growth_sd" in kw:
        kw["world_import_growth"] = (
            kw.pop("growth_mean", SimConfig.world_import_growth[0]),
            kw.pop("growth_sd", SimConfig.world_import_growth[1]),
        )
    if seed is not None:
        kw["seed"] = seed
    try:
        return SimConfig(**kw)
    except ConfigError as exc:
        full, line = where.get(exc.field, (exc.field, None))
        msg = str(exc)
        raise ConfigError(msg if full is None else f"{full}: {msg}", line, full) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_verify_grid(path=None, tol=None) -> VerifyGrid:
    kw = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        kw, _ = _parse(text, _GRID_KEYS, path)
    if tol is not None:
        if not tol > 0:
            raise ConfigError(f"tolerance must be positive, got {tol:g}", field="tol")
        kw["tol"] = tol
    return VerifyGrid(**kw)


def canonical(obj) -> dict:
    """Plain, JSON-serialisable view of a config dataclass."""
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if f.name == "world":
            v = None if v is None else {
                "ids": v.ids, "gdp": [float(g) for g in v.gdp], "home": v.home.id,
                "dist_digest": hashlib.sha256(v.dist.tobytes()).hexdigest(), "scale": v.scale,
            }
        elif f.name == "initial_portfolios" and v is not None:
            v = {str(k): sorted(map(str, m)) for k, m in sorted(v.items(), key=lambda kv: str(kv[0]))}
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def digest(obj) -> str:
    text = json.dumps(canonical(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _names(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def load_spec_file(path):
    """Regression spec from a ``[spec]`` section.

    Keys: dependent, regressors, fixed_effects, cluster, family, drop, and
    ``sample`` as comma-separated ``column:value`` equality filters.
    """
    from .econometrics import RegressionSpec
    from .errors import SpecificationError

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {str(exc).splitlines()[0]}", getattr(exc, "lineno", None)) from None
    lines = _line_map(text)
    if cp.sections() != ["spec"]:
        raise ConfigError("a spec file holds exactly one [spec] section", lines.get((cp.sections()[0], None)) if cp.sections() else None)
    known = {"dependent", "regressors", "fixed_effects", "cluster", "family", "drop", "sample"}
    kw = {}
    for key, raw in cp.items("spec"):
        line = lines.get(("spec", key))
        if key not in known:
            raise ConfigError(f"unknown key spec.{key}", line, f"spec.{key}")
        if key in ("dependent", "cluster", "family"):
            kw[key] = raw.strip()
        elif key == "sample":
            pairs = []
            for item in _names(raw):
                col, sep, val = item.partition(":")
                if not sep:
                    raise ConfigError(f"spec.sample entry {item!r} is not column:value", line, "spec.sample")
                try:
                    v = float(val)
                    v = int(v) if v.is_integer() else v
                except ValueError:
                    v = val.strip()
                pairs.append((col.strip(), v))
            kw[key] = tuple(pairs)
        else:
            kw[key] = _names(raw)
    for req in ("dependent", "regressors"):
        if req not in kw:
            raise ConfigError(f"spec.{req} is required", lines.get(("spec", None)), f"spec.{req}")
    try:
        return RegressionSpec(**kw)
    except SpecificationError as exc:
        raise ConfigError(str(exc), lines.get(("spec", None))) from None
