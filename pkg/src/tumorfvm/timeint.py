"""Time-step control and time integrators wrapped around a step operator."""

from __future__ import annotations

import math
from typing import Callable, TypeVar

import numpy as np

from . import engine
from .grid import GridSpec
from .method import MethodConfig
from .state import State
from .velocity import speed_bound

T = TypeVar("T")

SDIRK_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)


def cfl_timestep(nodal_v, nodal_u, r: float, r_prime: float, grid: GridSpec, cfl: float,
                 fallback: float = math.inf, bulk_weight: float = 1.0) -> float:
    """Courant-limited step over the sum of the split speeds, or ``fallback`` if all are zero."""
    speed = speed_bound(nodal_v, nodal_u, r, r_prime, grid, bulk_weight)
    if speed == 0.0:
        return fallback
    return cfl * grid.delta_eta / speed


def tvd_rk2(step_fn: Callable[[T], T], state: T, average: Callable[[T, T], T]) -> T:
    """Two forward-Euler stages followed by the mean of the start and second stage."""
    first = step_fn(state)
    second = step_fn(first)
    return average(state, second)


def dirk2(stage: Callable[[T, float], T], combine: Callable[[T, T, float], T], state: T,
          dtau: float) -> T:
    """Stiffly accurate two-stage SDIRK with ``gamma = 1 - 1/sqrt(2)``.

    ``stage(y, h)`` must solve ``Y = y + h f(Y)``; ``combine(a, b, c)`` returns
    ``a + c (b - a)``. The second stage starts from the point that carries the
    explicit part of the tableau.
    """
    g = SDIRK_GAMMA
    y1 = stage(state, g * dtau)
    start = combine(state, y1, (1.0 - g) / g)
    return stage(start, g * dtau)


def sdirk2_stability(z: complex) -> complex:
    g = SDIRK_GAMMA
    return (1.0 + (1.0 - 2.0 * g) * z) / (1.0 - g * z) ** 2


def split_amplifier(alpha_plus, alpha_minus, theta_wave):
    """Squared amplification factor of the split upwind scheme for two opposing speeds."""
    ap = np.asarray(alpha_plus, dtype=float)
    am = np.asarray(alpha_minus, dtype=float)
    c = np.cos(np.asarray(theta_wave, dtype=float))
    s = ap + am
    out = 1.0 - (2.0 * s * (1.0 - s) + 4.0 * ap * am * (1.0 + c)) * (1.0 - c)
    return out[()] if np.ndim(out) == 0 else out


def backward_euler_step(state: State, problem, method: MethodConfig, grid: GridSpec, dtau: float,
                        tol: float | None = None, max_iter: int | None = None) -> State:
    return engine.implicit_step(problem, state, method, grid, dtau, tol, max_iter)[0]


def dirk2_step(state: State, problem, method: MethodConfig, grid: GridSpec, dtau: float,
               tol: float | None = None, max_iter: int | None = None) -> State:
    tau0 = state.tau

    def stage(y: State, h: float) -> State:
        return engine.implicit_step(problem, y, method, grid, h, tol, max_iter)[0]

    def comb(a: State, b: State, c: float) -> State:
        return engine.combine(a, b, c, grid, tau0 + (1.0 - SDIRK_GAMMA) * dtau)

    return dirk2(stage, comb, state, dtau)


def advance(problem, state: State, method: MethodConfig, grid: GridSpec, dtau: float) -> State:
    """One step of the configured integrator."""
    if method.integrator == "fe":
        return engine.explicit_step(problem, state, method, grid, dtau)
    if method.integrator == "rk2":
        tau1 = state.tau + dtau
        return tvd_rk2(lambda s: engine.explicit_step(problem, s, method, grid, dtau), state,
                       lambda a, b: engine.average(a, b, tau1))
    if method.integrator == "be":
        return backward_euler_step(state, problem, method, grid, dtau)
    return dirk2_step(state, problem, method, grid, dtau)


def choose_timestep(problem, state: State, method: MethodConfig, grid: GridSpec,
                    remaining: float = math.inf) -> float:
    """Fixed step if configured, otherwise the Courant step; never past ``remaining``."""
    if method.dt_fixed is not None:
        dt = method.dt_fixed
    else:
        v, u, rate = engine.velocities(problem, state, method, grid)
        dt = cfl_timestep(v, u, state.r, rate, grid, method.cfl, fallback=remaining,
                          bulk_weight=method.bulk_weight)
    return min(dt, remaining)
