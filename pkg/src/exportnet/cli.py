"""Command-line entry point.

Exit codes: 0 ok, 1 verification failure, 2 input error, 3 numeric abort,
4 non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd
import scipy

from . import __version__
from .config import ConfigError, digest, load_sim_config, load_spec_file, load_verify_grid
from .econometrics import fit, preset
from .errors import DomainError, NumericAbort, RankDeficiencyError, SeparationError, SpecificationError
from .sim import (
    SimConfig,
    extract_panel,
    history_summary,
    load_history,
    read_panel,
    run_simulation,
    save_history,
    stylized_facts,
    write_table,
)
from .verify import limit_check, run_verification

OK, VERIFY_FAIL, INPUT_ERROR, NUMERIC_ABORT, NOT_CONVERGED = 0, 1, 2, 3, 4


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, command, config_digest, seed, outputs, started, extra=None):
    manifest = {
        "command": command,
        "config_digest": config_digest,
        "seed": seed,
        "versions": {
            "exportnet": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
        },
        "outputs": {name: _sha256(out / name) for name in sorted(outputs)},
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(config, out, seed=None, threads=1, trace=False):
    started = time.perf_counter()
    try:
        cfg = load_sim_config(config, seed=seed) if config else SimConfig(**({} if seed is None else {"seed": seed}))
    except ConfigError as exc:
        _err(f"{config}: {exc}" if config else str(exc))
        return INPUT_ERROR
    try:
        history = run_simulation(cfg, threads=threads, trace=trace)
    except NumericAbort as exc:
        _err(f"numeric abort: {exc}")
        return NUMERIC_ABORT
    out = _outdir(out)
    files = {
        "panel.csv": extract_panel(history),
        "history_summary.csv": history_summary(history),
        "events.csv": history.events(),
    }
    if trace:
        files["trace.csv"] = history.trace
    for name, df in files.items():
        write_table(df, out / name)
    save_history(history, out / "history.npz")
    panel = files["panel.csv"]
    write_manifest(out, "simulate", digest(cfg), cfg.seed, [*files, "history.npz"], started, {
        "rows": int(len(panel)),
        "export_mean": float(panel["export"].mean()),
    })
    print(f"wrote {len(panel)} panel rows to {out / 'panel.csv'}")
    return OK


def cmd_verify(config, out, tol=None):
    started = time.perf_counter()
    try:
        grid = load_verify_grid(config, tol)
        report = run_verification(grid)
    except (ConfigError, DomainError) as exc:
        _err(str(exc))
        return INPUT_ERROR
    out = _outdir(out)
    write_table(report.table, out / "verify_report.csv")
    lim = limit_check(grid)
    write_table(lim, out / "limit_check.csv")
    write_manifest(out, "verify", digest(grid), None, ["verify_report.csv", "limit_check.csv"], started, {
        "points": int(len(report.table)),
        "failures": int(len(report.failures)),
        "tol": grid.tol,
    })
    worst = report.worst()
    if not report.ok:
        print(f"FAIL: {len(report.failures)} of {len(report.table)} checks above tol {grid.tol:g}")
        print(f"worst: {worst['quantity']} at gamma={worst['gamma']:g} N={worst['n_s']:g} eta={worst['eta']:g} "
              f"analytic={worst['analytic']:.9g} fd={worst['finite_diff']:.9g} rel_err={worst['rel_err']:.3g}")
        return VERIFY_FAIL
    print(f"ok: {len(report.table)} checks, max rel_err {worst['rel_err']:.3g}")
    return OK


def cmd_estimate(panel_path, out, preset_name=None, spec_path=None, tol=1e-8):
    started = time.perf_counter()
    try:
        if (preset_name is None) == (spec_path is None):
            raise ConfigError("give exactly one of --preset or --spec")
        spec = preset(preset_name) if preset_name else load_spec_file(spec_path)
    except (ConfigError, SpecificationError) as exc:
        _err(str(exc))
        return INPUT_ERROR
    try:
        panel = read_panel(panel_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        _err(f"cannot read panel {panel_path}: {exc}")
        return INPUT_ERROR
    try:
        result = fit(panel, spec, tol=tol)
    except (SpecificationError, SeparationError, RankDeficiencyError) as exc:
        _err(str(exc))
        return INPUT_ERROR
    except FloatingPointError as exc:
        _err(f"numeric abort: {exc}")
        return NUMERIC_ABORT
    out = _outdir(out)
    write_table(result.table(), out / "fit_report.csv")
    spec_text = json.dumps({k: list(v) if isinstance(v, tuple) else v for k, v in vars(spec).items()}, sort_keys=True, default=str)
    cfg_digest = hashlib.sha256((spec_text + _sha256(panel_path)).encode()).hexdigest()
    write_manifest(out, "estimate", cfg_digest, None, ["fit_report.csv"], started, {
        "spec": json.loads(spec_text),
        "preset": preset_name,
        "n_obs": result.n_obs,
        "n_clusters": result.n_clusters,
        "log_likelihood": float(f"{result.log_likelihood:.12g}"),
        "converged": result.converged,
        "iterations": result.iterations,
    })
    print(result.table().to_string(index=False, float_format=lambda v: f"{v:.6g}"))
    if not result.converged:
        _err(f"no convergence after {result.iterations} iterations (gradient norm {result.grad_norm:.3g})")
        return NOT_CONVERGED
    return OK


def cmd_stats(history_path, out, period=None):
    started = time.perf_counter()
    try:
        history = load_history(history_path)
        tables = stylized_facts(history, period)
    except (OSError, ValueError) as exc:
        _err(f"{history_path}: {exc}")
        return INPUT_ERROR
    out = _outdir(out)
    names = []
    for key, df in tables.items():
        name = f"stats_{key}.csv"
        write_table(df, out / name)
        names.append(name)
    write_manifest(out, "stats", _sha256(history_path), history.config.seed, names, started)
    q = tables["quantiles"].set_index("variable")
    print(q.to_string(float_format=lambda v: f"{v:.4g}"))
    return OK


def build_parser():
    p = argparse.ArgumentParser(prog="exportnet", description="Export-network simulation, verification and estimation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a simulation and write the panel")
    s.add_argument("--config", help="INI config; defaults are used when omitted")
    s.add_argument("--out", default="out")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--trace", action="store_true", help="also write the per-decision trace")

    v = sub.add_parser("verify", help="finite-difference check of the comparative statics")
    v.add_argument("--config", help="INI grid config; the documented default grid when omitted")
    v.add_argument("--out", default="out")
    v.add_argument("--tol", type=float)

    e = sub.add_parser("estimate", help="fit a probit or Poisson spec to a panel file")
    e.add_argument("panel")
    e.add_argument("--preset")
    e.add_argument("--spec", help="INI file with a [spec] section")
    e.add_argument("--out", default="out")
    e.add_argument("--tol", type=float, default=1e-8)

    t = sub.add_parser("stats", help="stylized-fact tables from a history file")
    t.add_argument("history")
    t.add_argument("--out", default="out")
    t.add_argument("--period", type=int)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        _err("--threads must be at least 1")
        return INPUT_ERROR
    if args.command == "simulate":
        return cmd_simulate(args.config, args.out, args.seed, args.threads, args.trace)
    if args.command == "verify":
        return cmd_verify(args.config, args.out, args.tol)
    if args.command == "estimate":
        return cmd_estimate(args.panel, args.out, args.preset, args.spec, args.tol)
    return cmd_stats(args.history, args.out, args.period)


if __name__ == "__main__":
    sys.exit(main())
