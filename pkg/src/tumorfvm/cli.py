"""Command line: ``run`` for a single scenario, ``suite`` for a grid-convergence table."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, ValidationError
from .runner import (SCENARIOS, SUITE_COLUMNS, config_from_pairs, fmt, parse_pairs,
                     run_convergence_suite, run_scenario)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_FLAGS = ("scenario", "scheme", "flux_order", "integrator", "n_eta", "cfl", "dt_fixed", "ext_factor",
          "t_end", "stop_radius", "output_dir", "emit_every", "picard_tol", "picard_max_iter",
          "theta_limiter", "courant_rule", "saturation_basis")

_HELP = {
    "scenario": "test1..test4, case_study or pdgf",
    "scheme": "enhanced or conventional",
    "flux_order": "1 (upwind) or 2 (MUSCL)",
    "integrator": "fe, rk2, be or dirk2",
    "n_eta": "number of intervals on [0, 1]",
    "cfl": "Courant number (default 0.8)",
    "dt_fixed": "fixed step; overrides cfl",
    "ext_factor": "attractant mesh extent in tumor radii (default 5)",
    "t_end": "final time",
    "stop_radius": "stop when the radius reaches this value",
    "output_dir": "directory for CSV files",
    "emit_every": "write every k-th step to the time series",
    "picard_tol": "implicit iteration tolerance",
    "picard_max_iter": "implicit iteration cap",
    "theta_limiter": "also limit on the species sum (true/false)",
    "courant_rule": "reference or split (default per scenario)",
    "saturation_basis": "fraction or density for the secretion saturation",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tumorfvm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run one scenario and write CSV files"),
                       ("suite", "run a doubling grid sequence and write a convergence table")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", type=Path, help="file of key=value entries; flags override it")
        for key in _FLAGS:
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar="VALUE", help=_HELP[key],
                            choices=SCENARIOS if key == "scenario" else None)
        if name == "suite":
            sp.add_argument("--grids", default="50,100,200,400", help="comma-separated doubling grids")
    return p


def _pairs(args) -> dict[str, str]:
    pairs: dict[str, str] = {}
    if args.config is not None:
        try:
            pairs.update(parse_pairs(args.config.read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}", "config") from exc
    for key in _FLAGS:
        value = getattr(args, key)
        if value is not None:
            pairs[key] = value
    return pairs


def _run(pairs) -> int:
    config = config_from_pairs(pairs)
    for note in config.warnings:
        print(f"warning: {note}", file=sys.stderr)
    art = run_scenario(config)
    s = art.summary
    print(f"{config.scenario} {config.method().label} n_eta={config.n_eta}: status={s['status']} "
          f"steps={s['steps']} final_tau={s['final_tau']:.10g} final_radius={s['final_radius']:.10g} "
          f"d_theta={s['final_d_theta']:.3e}")
    print(f"wrote {art.timeseries_path}, {art.profile_path}, {art.summary_path}")
    if s["status"] != "ok":
        print(f"solver failure: {s['message']}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _suite(pairs, grids_text: str) -> int:
    try:
        grids = [int(g) for g in grids_text.split(",") if g.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid list {grids_text!r}", "grids") from exc
    pairs = dict(pairs)
    pairs.setdefault("n_eta", str(grids[0]))
    config = config_from_pairs(pairs)
    overrides = dict(ext_factor=config.ext_factor, t_end=config.t_end, stop_radius=config.stop_radius,
                     saturation_basis=config.saturation_basis)
    rows = run_convergence_suite(config.scenario, config.method(), grids, config.output_dir, **overrides)
    print(",".join(SUITE_COLUMNS))
    for row in rows:
        print(",".join("" if getattr(row, c) is None else fmt(getattr(row, c)) for c in SUITE_COLUMNS))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        pairs = _pairs(args)
        if args.command == "run":
            return _run(pairs)
        return _suite(pairs, args.grids)
    except (ConfigError, ValidationError) as exc:
        key = getattr(exc, "key", None)
        where = f" [{key}]" if key else ""
        print(f"configuration error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
