"""Run configuration, the time loop, CSV output and grid-convergence tables."""

from __future__ import annotations

import csv
import math
import shlex
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import timeint
from .diagnostics import convergence_rates, incompressibility_index, l1_error
from .errors import ConfigError, SolverError, ValidationError
from .grid import build_grid
from .method import COURANT_RULES, INTEGRATORS, SCHEMES, MethodConfig
from .model import ModelProblem, manufactured_scenario
from .state import State
from .tumor import tumor_scenario

MODEL_SCENARIOS = ("test1", "test2", "test3", "test4")
TUMOR_SCENARIOS = ("case_study", "pdgf")
SCENARIOS = MODEL_SCENARIOS + TUMOR_SCENARIOS
SATURATION_BASES = ("fraction", "density")
MAX_SIMULATED_TIME = 1.0e4

TIMESERIES_COLUMNS = ("step", "tau", "radius", "radius_rate", "dtau", "d_theta")
SUMMARY_COLUMNS = ("scenario", "scheme", "flux_order", "integrator", "n_eta", "final_tau",
                   "final_radius", "final_d_theta", "steps", "status")
SUITE_COLUMNS = ("n_eta", "status", "steps", "final_tau", "final_radius", "radius_error",
                 "radius_rate", "l1_g", "l1_m", "l1_m_rate", "delta_vs_finest")


def fmt(value) -> str:
    """17 significant digits in scientific notation, or the text of non-floats."""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    ``courant_rule`` and ``saturation_basis`` default per scenario when left
    as ``None``; see :func:`RunConfig.method`.
    """

    scenario: str
    scheme: str = "enhanced"
    flux_order: int = 1
    integrator: str = "fe"
    n_eta: int = 50
    cfl: float = 0.8
    dt_fixed: float | None = None
    ext_factor: float = 5.0
    t_end: float | None = None
    stop_radius: float | None = None
    output_dir: str = "output"
    emit_every: int = 1
    picard_tol: float = 1e-12
    picard_max_iter: int = 200
    theta_limiter: bool = False
    courant_rule: str | None = None
    saturation_basis: str = "fraction"
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}", "scenario")
        if self.t_end is not None and self.stop_radius is not None:
            raise ConfigError("t_end and stop_radius are mutually exclusive", "stop_radius")
        if self.scenario == "pdgf" and self.stop_radius is None:
            raise ConfigError("the pdgf scenario needs stop_radius", "stop_radius")
        if self.t_end is None and self.stop_radius is None:
            object.__setattr__(self, "t_end", 1.0 if self.scenario == "case_study" else 2.0)
        if self.t_end is not None and not self.t_end > 0.0:
            raise ConfigError("t_end must be positive", "t_end")
        if self.stop_radius is not None and not self.stop_radius > 0.0:
            raise ConfigError("stop_radius must be positive", "stop_radius")
        if self.emit_every < 1:
            raise ConfigError("emit_every must be at least 1", "emit_every")
        if not self.ext_factor > 1.0:
            raise ConfigError("ext_factor must exceed 1", "ext_factor")
        if self.saturation_basis not in SATURATION_BASES:
            raise ConfigError(f"unknown saturation_basis {self.saturation_basis!r}", "saturation_basis")
        try:
            self.method()
        except ValidationError as exc:
            raise ConfigError(str(exc), "method") from exc

    @property
    def is_tumor(self) -> bool:
        return self.scenario in TUMOR_SCENARIOS

    def method(self) -> MethodConfig:
        rule = self.courant_rule or ("split" if self.is_tumor else "reference")
        return MethodConfig(self.scheme, self.flux_order, self.integrator, self.cfl, self.dt_fixed,
                            self.theta_limiter, self.picard_tol, self.picard_max_iter, rule)


_KEY_TYPES = {f.name: f.type for f in fields(RunConfig) if f.name != "warnings"}


def _convert(key: str, text: str):
    kind = _KEY_TYPES[key]
    try:
        if kind.startswith("bool"):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            if text.lower() in ("none", ""):
                return None
            return float(text)
        if kind.startswith("str |") and text.lower() == "none":
            return None
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value {text!r} for {key}", key) from exc


def parse_pairs(source: str) -> dict[str, str]:
    """``key=value`` tokens separated by blanks or newlines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for line in source.splitlines():
        line = line.split("#", 1)[0]
        for token in shlex.split(line):
            if "=" not in token:
                raise ConfigError(f"expected key=value, got {token!r}", token)
            key, value = token.split("=", 1)
            key = key.strip()
            if key not in _KEY_TYPES:
                raise ConfigError(f"unknown key {key!r}", key)
            out[key] = value.strip()
    return out


def config_from_pairs(pairs: dict[str, str]) -> RunConfig:
    if "scenario" not in pairs:
        raise ConfigError("scenario is required", "scenario")
    values = {k: _convert(k, v) for k, v in pairs.items()}
    notes = []
    if values.get("dt_fixed") is not None and "cfl" in values:
        notes.append("dt_fixed overrides cfl")
    for key, allowed in (("scheme", SCHEMES), ("integrator", INTEGRATORS),
                         ("courant_rule", COURANT_RULES)):
        if values.get(key) is not None and values[key] not in allowed:
            raise ConfigError(f"unknown {key} {values[key]!r}", key)
    if "flux_order" in values and values["flux_order"] not in (1, 2):
        raise ConfigError("flux_order must be 1 or 2", "flux_order")
    return RunConfig(**values, warnings=tuple(notes))


def parse_config(source: str) -> RunConfig:
    """Validated configuration from ``key=value`` text."""
    return config_from_pairs(parse_pairs(source))


# ---- running -----------------------------------------------------------------

@dataclass(frozen=True)
class Setup:
    problem: object
    grid: object
    state: State
    exact: object = None


def build_setup(config: RunConfig) -> Setup:
    if config.is_tumor:
        sc = tumor_scenario(config.scenario)
        if config.saturation_basis == "density":
            sc = replace(sc, params=replace(sc.params, saturate_on_density=True))
        grid = build_grid(config.n_eta, config.ext_factor)
        return Setup(sc.problem(), grid, sc.initial_state(grid))
    sc = manufactured_scenario(int(config.scenario[-1]))
    grid = build_grid(config.n_eta)
    return Setup(ModelProblem(sc), grid, sc.initial_state(grid), sc.exact)


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    setup: Setup
    state: State
    rows: tuple
    steps: int
    final_tau: float
    status: str
    message: str = ""
    max_d_theta: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def grid(self):
        return self.setup.grid


def d_theta(state: State, grid) -> float:
    return incompressibility_index(state.species, state.r, grid)


def simulate(config: RunConfig) -> RunResult:
    """Integrate to ``t_end`` or until the radius reaches ``stop_radius``.

    Solver failures end the run with status ``failed``; the last finite state
    and the history up to it are kept.
    """
    setup = build_setup(config)
    method = config.method()
    state = setup.state
    d0 = d_theta(state, setup.grid)
    rows = [(0, state.tau, state.r, state.radius.r_prime, 0.0, d0)]
    worst = d0
    horizon = config.t_end if config.t_end is not None else MAX_SIMULATED_TIME
    # blow-ups are reported through the non-finite check, not numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        return _loop(config, setup, method, state, rows, worst, horizon)


def _loop(config, setup, method, state, rows, worst, horizon) -> RunResult:
    problem, grid = setup.problem, setup.grid
    step = 0
    final_tau = state.tau
    try:
        while True:
            remaining = horizon - state.tau
            if remaining <= 1e-12 * max(1.0, horizon):
                if config.stop_radius is not None:
                    raise SolverError(f"radius {state.r:.6g} did not reach {config.stop_radius}")
                break
            dtau = timeint.choose_timestep(problem, state, method, grid, remaining)
            if not (math.isfinite(dtau) and dtau > 0.0):
                raise SolverError(f"no admissible time step at tau={state.tau:.6g}")
            try:
                new = timeint.advance(problem, state, method, grid, dtau)
            except SolverError as exc:
                exc.args = (f"step {step + 1}, tau={state.tau:.6g}: {exc}",) + exc.args[1:]
                raise
            step += 1
            d = d_theta(new, grid)
            worst = max(worst, d)
            if config.stop_radius is not None and new.r >= config.stop_radius:
                frac = (config.stop_radius - state.r) / (new.r - state.r)
                final_tau = state.tau + frac * (new.tau - state.tau)
                state = new
                rows.append((step, new.tau, new.r, new.radius.r_prime, dtau, d))
                break
            state = new
            final_tau = state.tau
            if step % config.emit_every == 0:
                rows.append((step, state.tau, state.r, state.radius.r_prime, dtau, d))
        if rows[-1][0] != step:
            rows.append((step, state.tau, state.r, state.radius.r_prime, dtau, d))
        return RunResult(config, setup, state, tuple(rows), step, final_tau, "ok", "", worst)
    except (SolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return RunResult(config, setup, state, tuple(rows), step, state.tau, "failed", str(exc), worst)


@dataclass(frozen=True)
class RunArtifacts:
    timeseries_path: Path
    profile_path: Path
    summary_path: Path
    summary: dict


def _stem(config: RunConfig) -> str:
    kind = "upwind" if config.flux_order == 1 else "muscl"
    return f"{config.scenario}_{config.scheme}_{kind}_{config.integrator}_n{config.n_eta}"


def profile_rows(result: RunResult):
    state, grid = result.state, result.grid
    tumor = result.config.is_tumor
    header = ["eta_center", "r_center", "G"] + (["N"] if tumor else []) + ["M"] + (["A"] if tumor else []) + ["Theta"]
    body = []
    for j in range(grid.n_eta):
        species = [float(v) for v in state.species[:, j]]
        theta = 0.0
        for v in species:
            theta += v
        row = [float(grid.centers[j]), float(grid.centers[j] * state.r)] + species
        if tumor:
            row.append(float(state.aux[j]))
        row.append(theta)
        body.append(row)
    return header, body


def summary_row(result: RunResult) -> dict:
    c = result.config
    failed = not result.ok
    return {
        "scenario": c.scenario, "scheme": c.scheme, "flux_order": c.flux_order,
        "integrator": c.integrator, "n_eta": c.n_eta,
        "final_tau": math.nan if failed else result.final_tau,
        "final_radius": math.nan if failed else result.state.r,
        "final_d_theta": math.nan if failed else d_theta(result.state, result.grid),
        "steps": result.steps, "status": "ok" if not failed else "FAILED",
    }


def write_result(result: RunResult, output_dir: str | Path | None = None) -> RunArtifacts:
    out = Path(output_dir if output_dir is not None else result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = _stem(result.config)
    ts, prof, summ = out / f"{stem}_timeseries.csv", out / f"{stem}_profile.csv", out / f"{stem}_summary.csv"
    with ts.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMESERIES_COLUMNS)
        for row in result.rows:
            w.writerow([row[0]] + [fmt(float(v)) for v in row[1:]])
        if not result.ok:
            w.writerow(["FAILED", fmt(float(result.state.tau)), "", "", "", result.message])
    header, body = profile_rows(result)
    with prof.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in body:
            w.writerow([fmt(v) for v in row])
        if not result.ok:
            w.writerow(["FAILED"] + [""] * (len(header) - 1))
    srow = summary_row(result)
    with summ.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        w.writerow([fmt(srow[k]) for k in SUMMARY_COLUMNS])
    return RunArtifacts(ts, prof, summ, srow)


def run_scenario(config: RunConfig) -> RunArtifacts:
    """Run, write the time series, final profile and summary CSVs, and report.

    The returned summary adds ``wall_time`` and ``message``; neither is
    written to disk, so repeated runs produce identical files.
    """
    start = time.perf_counter()
    result = simulate(config)
    art = write_result(result)
    art.summary["wall_time"] = time.perf_counter() - start
    art.summary["message"] = result.message
    return art


# ---- convergence suite -----------------------------------------------------------

@dataclass(frozen=True)
class SuiteRow:
    n_eta: int
    status: str
    steps: int
    final_tau: float
    final_radius: float
    radius_error: float
    radius_rate: float | None
    l1_g: float
    l1_m: float
    l1_m_rate: float | None
    delta_vs_finest: float


def _metrics(result: RunResult):
    nan = math.nan
    if not result.ok:
        return nan, nan, nan, nan
    exact = result.setup.exact
    r = result.state.r
    if exact is None:
        return r, nan, nan, nan
    g_ex, m_ex, r_ex = exact(result.state.tau)
    grid = result.grid
    l1g = nan if g_ex is None else l1_error(result.state.g, lambda e: g_ex, grid)
    l1m = nan if m_ex is None else l1_error(result.state.m, lambda e: m_ex, grid)
    return r, r - r_ex, l1g, l1m


def _rates(ns, values):
    pairs = [(n, v) for n, v in zip(ns, values)]
    if len(pairs) < 2:
        return [None] * len(pairs)
    return [row.rate for row in convergence_rates(pairs)]


def run_convergence_suite(scenario: str, method: MethodConfig, grids: Sequence[int] = (50, 100, 200, 400),
                          output_dir: str | Path | None = None, **overrides) -> list[SuiteRow]:
    """Run one method on a doubling grid sequence and tabulate errors and rates.

    Failed runs become rows of NaN with status ``nan`` and the suite carries
    on. Scenarios without a closed form are compared against the finest grid
    through ``delta_vs_finest`` (survival length for runs with a stop radius,
    otherwise final radius).
    """
    base = dict(scenario=scenario, scheme=method.scheme, flux_order=method.flux_order,
                integrator=method.integrator, cfl=method.cfl, dt_fixed=method.dt_fixed,
                theta_limiter=method.theta_limiter, picard_tol=method.picard_tol,
                picard_max_iter=method.picard_max_iter, courant_rule=method.courant_rule)
    base.update(overrides)
    results = [simulate(RunConfig(n_eta=n, **base)) for n in grids]
    metrics = [_metrics(r) for r in results]
    stop_runs = results[0].config.stop_radius is not None
    headline = [r.final_tau if (r.ok and stop_runs) else m[0] for r, m in zip(results, metrics)]
    finest = headline[-1]
    r_rates = _rates(grids, [m[1] for m in metrics])
    m_rates = _rates(grids, [m[3] for m in metrics])
    rows = []
    for i, (res, m) in enumerate(zip(results, metrics)):
        rows.append(SuiteRow(
            n_eta=int(grids[i]), status="ok" if res.ok else "nan", steps=res.steps,
            final_tau=res.final_tau if res.ok else math.nan, final_radius=m[0], radius_error=m[1],
            radius_rate=r_rates[i], l1_g=m[2], l1_m=m[3], l1_m_rate=m_rates[i],
            delta_vs_finest=headline[i] - finest))
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        kind = "upwind" if method.flux_order == 1 else "muscl"
        path = out / f"suite_{scenario}_{method.scheme}_{kind}_{method.integrator}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SUITE_COLUMNS)
            for row in rows:
                w.writerow([fmt(getattr(row, c)) if getattr(row, c) is not None else "" for c in SUITE_COLUMNS])
    return rows
