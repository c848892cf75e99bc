"""Two-species model with a prescribed infiltration velocity and manufactured cases."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import engine
from .errors import ValidationError
from .grid import GridSpec, RadiusState
from .method import MethodConfig
from .state import State
from .velocity import nodal_u_prescribed

Fn = Callable[..., np.ndarray]

GROWTH_SPEED = 0.5


def _zero_source(r, t, g, m):
    return np.zeros_like(np.asarray(g, dtype=float))


@dataclass(frozen=True)
class Scenario:
    """Prescribed data of the two-species problem.

    ``u_fn(r, t)`` is the infiltration velocity, ``f_fn`` and ``h_fn`` the
    sources of the native and infiltrating species as functions of
    ``(r, t, G, M)``, and ``exact`` an optional closed form returning
    ``(G, M, R)`` at time ``t``.
    """

    u_fn: Fn
    m_bc_fn: Callable[[float], float]
    g0_fn: Fn
    m0_fn: Fn
    f_fn: Fn = _zero_source
    h_fn: Fn = _zero_source
    r0: float = 1.0
    t_end: float = 2.0
    exact: Callable[[float], tuple[float | None, float | None, float]] | None = None
    name: str = "custom"

    def initial_state(self, grid: GridSpec) -> State:
        r = grid.centers * self.r0
        g = np.asarray(self.g0_fn(r), dtype=float) * np.ones(grid.n_eta)
        m = np.asarray(self.m0_fn(r), dtype=float) * np.ones(grid.n_eta)
        if np.max(np.abs(g + m - 1.0)) > 1e-12:
            raise ValidationError("initial species must sum to one at every interval")
        if abs(float(self.u_fn(np.zeros(1), 0.0)[0])) > 0.0:
            raise ValidationError("infiltration velocity must vanish at the origin")
        return State(np.vstack([g, m]), RadiusState(self.r0, 0.0, 0.0), ("G", "M"))


class ModelProblem:
    """Adapter exposing a scenario to the step engine."""

    tags = ("G", "M")

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def nodal_u(self, state: State, grid: GridSpec, tau: float) -> np.ndarray:
        return nodal_u_prescribed(self.scenario.u_fn, grid, state.r, tau)

    def sources(self, species, r, tau, grid):
        rc = grid.centers * r
        f = self.scenario.f_fn(rc, tau, species[0], species[1])
        h = self.scenario.h_fn(rc, tau, species[0], species[1])
        return np.vstack([np.broadcast_to(f, rc.shape), np.broadcast_to(h, rc.shape)]).astype(float)

    def m_bc(self, tau: float) -> float:
        return float(self.scenario.m_bc_fn(tau))

    def advance_aux(self, old, species, radius, dtau, grid):
        return None


def fe_step(state: State, scenario: Scenario, method: MethodConfig, grid: GridSpec, dtau: float) -> State:
    """One forward-Euler step with the method's fluxes and radius rule."""
    return engine.explicit_step(ModelProblem(scenario), state, method, grid, dtau)


def _linear_family(g0: float, v0: float = GROWTH_SPEED):
    def m_of_t(t):
        return 1.0 - math.exp(-3.0 * v0 * t) * g0

    def u_fn(r, t):
        return np.asarray(r, dtype=float) * (-v0 / m_of_t(t))

    def exact(t):
        g = math.exp(-3.0 * v0 * t) * g0
        return g, 1.0 - g, math.exp(v0 * t)

    return u_fn, m_of_t, exact


def _const(value):
    return lambda r: np.full(np.shape(r), value, dtype=float)


def manufactured_scenario(case: int, v0: float = GROWTH_SPEED) -> Scenario:
    """The four manufactured test problems on the unit ball over ``t in [0, 2]``."""
    if case in (1, 2):
        g0 = 0.0 if case == 1 else 0.5
        u_fn, m_of_t, exact = _linear_family(g0, v0)
        return Scenario(u_fn=u_fn, m_bc_fn=m_of_t, g0_fn=_const(g0), m0_fn=_const(1.0 - g0),
                        exact=exact, name=f"test{case}")
    if case == 3:
        def u3(r, t):
            return -2.0 * v0 * np.sin(math.pi * np.asarray(r, dtype=float) / (2.0 * (1.0 + v0 * t)))

        return Scenario(u_fn=u3, m_bc_fn=lambda t: 0.5, g0_fn=_const(0.5), m0_fn=_const(0.5),
                        exact=lambda t: (None, None, 1.0 + v0 * t), name="test3")
    if case == 4:
        def u4(r, t):
            return v0 * np.sin(np.asarray(r, dtype=float) * (1.0 + t))

        return Scenario(u_fn=u4, m_bc_fn=lambda t: 0.5, g0_fn=_const(0.5), m0_fn=_const(0.5),
                        name="test4")
    raise ValidationError(f"unknown manufactured case {case!r}")


def exact_solution(scenario: Scenario, t: float):
    """Closed-form ``(G, M, R)`` at time ``t``, or ``None`` when unknown."""
    if scenario.exact is None:
        return None
    return scenario.exact(t)
