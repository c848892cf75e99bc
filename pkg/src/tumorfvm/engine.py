"""Assembly of explicit and implicit steps for any problem with infiltration.

A problem supplies the infiltration velocity, the reaction sources, the
boundary value of the infiltrating species and, optionally, an auxiliary field
(the attractant) advanced after the species. Species are stored as fractions of
the total density, so the volume constraint is ``sum(species) == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import fluxes as fx
from .errors import ConvergenceError, DomainCollapseError
from .grid import (GridSpec, RadiusState, advance_radius_conventional, advance_radius_gcl,
                   gcl_rate, solve_implicit_radius)
from .method import MethodConfig
from .state import State
from .velocity import solve_velocity_conventional, solve_velocity_enhanced


class Problem(Protocol):
    tags: tuple[str, ...]

    def nodal_u(self, state: State, grid: GridSpec, tau: float) -> np.ndarray: ...

    def sources(self, species: np.ndarray, r: float, tau: float, grid: GridSpec) -> np.ndarray: ...

    def m_bc(self, tau: float) -> float: ...

    def advance_aux(self, old: State, species: np.ndarray, radius: RadiusState, dtau: float,
                    grid: GridSpec) -> np.ndarray | None: ...


@dataclass(frozen=True)
class Frozen:
    """Velocities, rate and limiters evaluated on one state."""

    u: np.ndarray
    src: np.ndarray
    m_bc: float
    v: np.ndarray
    r_prime: float
    limiters: object


def freeze(problem: Problem, method: MethodConfig, grid: GridSpec, state: State, tau: float) -> Frozen:
    """Evaluate everything the fluxes need, in dependency order."""
    x = state.species
    r = state.r
    u = problem.nodal_u(state, grid, tau)
    src = problem.sources(x, r, tau, grid)
    mbc = problem.m_bc(tau)
    if method.enhanced:
        lim = fx.enhanced_limiters(x, grid, method.flux_order, method.theta_limiter)
        f_u = fx.enhanced_u_flux(x[-1], u, grid, r, method.flux_order, lim, mbc)
        v = solve_velocity_enhanced(grid, r, src.sum(axis=0), f_u)
        rate = gcl_rate(v[-1], grid.delta_eta)
    else:
        lim = fx.conventional_limiters(x, grid, r) if method.flux_order == 2 else None
        v = solve_velocity_conventional(grid, r, src.sum(axis=0), u, x[-1])
        rate = float(v[-1])
    return Frozen(u, src, mbc, v, rate, lim)


def frozen_fluxes(method: MethodConfig, grid: GridSpec, fr: Frozen, x, r: float, row: int,
                  n_rows: int, affine: bool = True) -> np.ndarray:
    """Fluxes of species ``row`` for data ``x`` (any leading batch axes).

    With ``affine=False`` the boundary-value contribution is dropped, which
    gives the linear part used to assemble implicit systems.
    """
    x = np.asarray(x, dtype=float)
    order = method.flux_order
    infiltrating = row == n_rows - 1
    mbc = fr.m_bc if affine else 0.0
    if method.enhanced:
        lim = fr.limiters
        out = fx.enhanced_v_flux(x, fr.v, grid, r, order, lim)
        xbar = grid.centers ** 3 * x
        faces = fx.ppm_face_values(xbar, grid)
        out += fx.rprime_flux(xbar, lim.ppm_phi_minus, lim.ppm_phi_plus, faces, r, fr.r_prime)
        if infiltrating:
            out += fx.enhanced_u_flux(x, fr.u, grid, r, order, lim, mbc)
        return out
    w_native, w_inf = fx.conventional_velocities(fr.v, fr.u, grid, r, fr.r_prime)
    phi = None if fr.limiters is None else fr.limiters[row]
    out = fx.conventional_species_flux(x, w_inf if infiltrating else w_native, grid, r, phi)
    if infiltrating:
        out[..., -1] = fx.conventional_boundary_flux(x[..., -1], fr.u[-1], grid, r, mbc)
    return out


def all_fluxes(method, grid, fr, x, r) -> np.ndarray:
    return np.stack([frozen_fluxes(method, grid, fr, x[s], r, s, x.shape[0]) for s in range(x.shape[0])])


def velocities(problem: Problem, state: State, method: MethodConfig, grid: GridSpec):
    """Nodal ``(V, u, R')`` of a state, as used for the Courant bound."""
    fr = freeze(problem, method, grid, state, state.tau)
    return fr.v, fr.u, fr.r_prime


def explicit_step(problem: Problem, state: State, method: MethodConfig, grid: GridSpec,
                  dtau: float) -> State:
    """One forward-Euler step of the species, the radius and the auxiliary field."""
    x = state.species
    r = state.r
    tau = state.tau
    fr = freeze(problem, method, grid, state, tau)
    if method.enhanced:
        rad = advance_radius_gcl(r, fr.v[-1], dtau, grid.delta_eta, tau)
    else:
        rad = advance_radius_conventional(r, fr.v[-1], dtau, tau)
    f = all_fluxes(method, grid, fr, x, r)
    w = grid.centers ** 2
    q = (w * r * r * x - dtau / grid.delta_eta * (f[:, 1:] - f[:, :-1])
         + dtau * w * (r * r * fr.src - rad.r_prime * r * x))
    new = q / (w * rad.r * rad.r)
    aux = problem.advance_aux(state, new, rad, dtau, grid)
    out = State(new, rad, state.tags, aux)
    out.check_finite()
    return out


# ---- implicit steps ----------------------------------------------------------

def _source_diagonal(problem: Problem, x, r, tau, grid, base, h: float = 1e-7) -> np.ndarray:
    d = np.empty_like(x)
    for s in range(x.shape[0]):
        xp = x.copy()
        xp[s] += h
        d[s] = (problem.sources(xp, r, tau, grid)[s] - base[s]) / h
    return d


def _divergence_matrix(method, grid, fr, r, row, n_rows):
    n = grid.n_eta
    basis = np.eye(n)
    f = frozen_fluxes(method, grid, fr, basis, r, row, n_rows, affine=False)
    offset = frozen_fluxes(method, grid, fr, np.zeros(n), r, row, n_rows, affine=True)
    mat = ((f[:, 1:] - f[:, :-1]) / grid.delta_eta).T
    return mat, (offset[1:] - offset[:-1]) / grid.delta_eta


def _new_radius(method, grid, r_old, fr, dtau):
    if method.enhanced:
        return solve_implicit_radius(r_old, fr.r_prime, dtau)
    r = r_old + dtau * fr.r_prime
    if not r > 0.0:
        raise DomainCollapseError(f"radius {r} is not positive")
    return r


@dataclass(frozen=True)
class ImplicitInfo:
    iterations: int
    change: float
    residual: float


def implicit_residual(problem: Problem, method: MethodConfig, grid: GridSpec, old: State,
                      new: State, dtau: float) -> float:
    """Relative residual of the backward-Euler equations at a candidate state."""
    tau1 = old.tau + dtau
    x = new.species
    r = new.r
    fr = freeze(problem, method, grid, new, tau1)
    f = all_fluxes(method, grid, fr, x, r)
    w = grid.centers ** 2
    q_old = w * old.r ** 2 * old.species
    res = (w * r * r * x - q_old + dtau / grid.delta_eta * (f[:, 1:] - f[:, :-1])
           - dtau * w * (r * r * fr.src - fr.r_prime * r * x))
    scale = max(float(np.max(np.abs(q_old))), np.finfo(float).tiny)
    r_expected = _new_radius(method, grid, old.r, fr, dtau)
    return max(float(np.max(np.abs(res))) / scale, abs(r_expected - r) / r)


def implicit_step(problem: Problem, state: State, method: MethodConfig, grid: GridSpec,
                  dtau: float, tol: float | None = None, max_iter: int | None = None):
    """Backward-Euler step solved by Picard iteration with lagged coefficients.

    Each sweep freezes velocities, radius and limiters at the current iterate
    and solves the resulting linear system for every species; sources are
    linearized along their diagonal. Returns ``(state, ImplicitInfo)``.
    """
    tol = method.picard_tol if tol is None else tol
    max_iter = method.picard_max_iter if max_iter is None else max_iter
    tau1 = state.tau + dtau
    n_rows = state.species.shape[0]
    w = grid.centers ** 2
    q_old = w * state.r ** 2 * state.species
    x = state.species.copy()
    r = state.r
    v_prev = None
    change = np.inf
    for it in range(1, max_iter + 1):
        trial = State(x, RadiusState(r, state.radius.r_prime, tau1), state.tags, state.aux)
        fr = freeze(problem, method, grid, trial, tau1)
        r_new = _new_radius(method, grid, state.r, fr, dtau)
        diag_src = _source_diagonal(problem, x, r, tau1, grid, fr.src)
        x_new = np.empty_like(x)
        for s in range(n_rows):
            mat, off = _divergence_matrix(method, grid, fr, r, s, n_rows)
            a = dtau * mat
            a[np.diag_indices_from(a)] += w * (r_new * r_new + dtau * fr.r_prime * r - dtau * r * r * diag_src[s])
            rhs = q_old[s] + dtau * w * r * r * (fr.src[s] - diag_src[s] * x[s]) - dtau * off
            x_new[s] = np.linalg.solve(a, rhs)
        dx = float(np.max(np.abs(x_new - x))) / max(1.0, float(np.max(np.abs(x))))
        dr = abs(r_new - r) / r
        dv = 0.0 if v_prev is None else float(np.max(np.abs(fr.v - v_prev))) / max(1.0, float(np.max(np.abs(fr.v))))
        change = max(dx, dr, dv)
        x, r, v_prev = x_new, r_new, fr.v
        if not np.all(np.isfinite(x)):
            break
        if change <= tol:
            rate = (r * r - state.r ** 2) / (2.0 * dtau * r)
            rad = RadiusState(r, rate, tau1)
            aux = problem.advance_aux(state, x, rad, dtau, grid)
            out = State(x, rad, state.tags, aux)
            out.check_finite()
            res = implicit_residual(problem, method, grid, state, out, dtau)
            return out, ImplicitInfo(it, change, res)
    raise ConvergenceError(f"implicit iteration stalled after {max_iter} sweeps", change)


def combine(a: State, b: State, c: float, grid: GridSpec, tau: float) -> State:
    """``a + c (b - a)`` in conservative variables (squared radius and weighted densities)."""
    r2 = a.r ** 2 + c * (b.r ** 2 - a.r ** 2)
    if not r2 > 0.0:
        raise DomainCollapseError("combined squared radius is not positive")
    qa = a.r ** 2 * a.species
    qb = b.r ** 2 * b.species
    x = (qa + c * (qb - qa)) / r2
    aux = None
    if a.aux is not None:
        pa = a.r ** 2 * a.aux
        pb = b.r ** 2 * b.aux
        aux = (pa + c * (pb - pa)) / r2
    return State(x, RadiusState(float(np.sqrt(r2)), b.radius.r_prime, tau), a.tags, aux)


def average(a: State, b: State, tau: float) -> State:
    """Arithmetic mean of two states in primitive variables, radius included."""
    aux = None if a.aux is None else 0.5 * (a.aux + b.aux)
    rad = RadiusState(0.5 * (a.r + b.r), 0.5 * (a.radius.r_prime + b.radius.r_prime), tau)
    return State(0.5 * (a.species + b.species), rad, a.tags, aux)
