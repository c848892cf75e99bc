"""Three-species tumor model with a diffusing chemoattractant."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import engine
from .errors import SolverError, ValidationError
from .grid import GridSpec, RadiusState
from .method import MethodConfig
from .state import State
from .velocity import nodal_u_from_chemo

TAGS = ("G", "N", "M")


@dataclass(frozen=True)
class TumorParameters:
    """Reaction, secretion and transport constants; densities in cells per unit volume."""

    growth: float = 1.0
    necrosis: float = 0.0
    removal: float = 0.0
    immune_death: float = 0.0
    diffusivity: float = 1.0
    secretion: float = 30.0
    saturation: float = 1.0
    decay: float = 0.0
    mobility: float = 1.0
    density: float = 1.0
    saturate_on_density: bool = False

    def __post_init__(self) -> None:
        for name in ("growth", "necrosis", "removal", "immune_death", "secretion",
                     "saturation", "decay", "mobility"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValidationError(f"{name} must be finite and non-negative")
        if not self.density > 0.0 or not self.diffusivity > 0.0:
            raise ValidationError("density and diffusivity must be positive")


def source_terms(g, n, m, params: TumorParameters):
    """Per-fraction reaction rates ``(f, g_src, h)`` of glioma, necrotic and immune cells."""
    g = np.asarray(g, dtype=float)
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    f = (params.growth - params.necrosis) * g
    g_src = params.necrosis * g - params.removal * n
    h = -params.immune_death * m
    return f, g_src, h


def secretion_rate(g_fraction, params: TumorParameters) -> np.ndarray:
    """Saturating attractant production ``m G / (beta + G)``.

    ``G`` is the stored fraction unless ``saturate_on_density`` asks for the
    cell density ``theta * G``.
    """
    g = np.asarray(g_fraction, dtype=float)
    cells = params.density * g if params.saturate_on_density else g
    return params.secretion * cells / (params.saturation + cells)


def chemo_system(a, g, r_old: float, r_new: float, r_prime: float, params: TumorParameters,
                 grid: GridSpec, dtau: float):
    """Banded matrix (``solve_banded`` layout) and right-hand side of one attractant step.

    Mesh-motion advection, diffusion, decay and the geometric source are taken
    at the new radius; only the secretion is explicit. The far end holds
    ``A = 0``.
    """
    a = np.asarray(a, dtype=float)
    total = grid.n_total
    if a.shape != (total,):
        raise ValidationError(f"attractant needs {total} values, got {a.shape}")
    if not dtau > 0.0:
        raise ValidationError("dtau must be positive")
    d = grid.delta_eta
    c = dtau / d
    w = grid.ext_centers ** 2
    nodes = grid.ext_nodes
    vol = w * r_new * r_new

    src = np.zeros(total)
    src[: grid.n_eta] = secretion_rate(g, params)
    rhs = w * r_old * r_old * a + dtau * w * r_old * r_old * src

    diag = vol * (1.0 + dtau * params.decay) + dtau * w * r_prime * r_new
    lower = np.zeros(total)  # coefficient of A[j-1] in row j
    upper = np.zeros(total)  # coefficient of A[j+1] in row j

    # diffusion, with the far face a half interval from the Dirichlet value
    k = params.diffusivity * nodes ** 2 / d
    k[0] = 0.0
    k[-1] *= 2.0
    diag += c * (k[1:] + k[:-1])
    upper[:-1] -= c * k[1:-1]
    lower[1:] -= c * k[1:-1]

    # upwind flux of eta^2 R^2 A with speed -eta R'/R at the right node of each interval;
    # the far node sees the Dirichlet value, so only outflow survives there
    speed = -nodes[1:] * r_prime / r_new
    pos = np.maximum(speed, 0.0)
    neg = np.minimum(speed, 0.0)
    diag += c * pos * vol
    diag[1:] -= c * neg[:-1] * vol[1:]
    upper[:-1] += c * neg[:-1] * vol[1:]
    lower[1:] -= c * pos[:-1] * vol[:-1]

    bands = np.zeros((3, total))
    bands[0, 1:] = upper[:-1]
    bands[1] = diag
    bands[2, :-1] = lower[1:]
    return bands, rhs


def chemo_step(a, g, r_old: float, radius: RadiusState, params: TumorParameters, grid: GridSpec,
               dtau: float) -> np.ndarray:
    """Advance the attractant averages on the extended mesh by one step."""
    bands, rhs = chemo_system(a, g, r_old, radius.r, radius.r_prime, params, grid, dtau)
    try:
        out = solve_banded((1, 1), bands, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"attractant solve failed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise SolverError("attractant solve produced non-finite values")
    return out


class TumorProblem:
    """Adapter exposing the tumor model to the step engine."""

    tags = TAGS

    def __init__(self, params: TumorParameters, m_bc: float):
        self.params = params
        self.boundary_immune = float(m_bc)

    def nodal_u(self, state: State, grid: GridSpec, tau: float) -> np.ndarray:
        return nodal_u_from_chemo(state.aux, grid, state.r, self.params.mobility)

    def sources(self, species, r, tau, grid):
        return np.vstack(source_terms(species[0], species[1], species[2], self.params))

    def m_bc(self, tau: float) -> float:
        return self.boundary_immune

    def advance_aux(self, old: State, species, radius: RadiusState, dtau: float, grid: GridSpec):
        return chemo_step(old.aux, old.species[0], old.r, radius, self.params, grid, dtau)


def tumor_step(state: State, params: TumorParameters, m_bc: float, method: MethodConfig,
               grid: GridSpec, dtau: float) -> State:
    """One forward-Euler step: velocities, radius, species, then the attractant."""
    return engine.explicit_step(TumorProblem(params, m_bc), state, method, grid, dtau)


@dataclass(frozen=True)
class TumorScenario:
    """Parameters, initial data and stopping rule of a tumor run.

    Initial species are fractions of the total density; ``a0_fn`` maps the
    physical radius to the attractant concentration.
    """

    name: str
    params: TumorParameters
    r0: float
    g0: float
    n0: float
    m0: float
    a0_fn: Callable[[np.ndarray], np.ndarray]
    m_bc: float
    t_end: float | None = None
    stop_radius: float | None = None

    def problem(self) -> TumorProblem:
        return TumorProblem(self.params, self.m_bc)

    def initial_state(self, grid: GridSpec) -> State:
        if grid.n_ext < 1:
            raise ValidationError("the tumor model needs an extended mesh for the attractant")
        ones = np.ones(grid.n_eta)
        species = np.vstack([self.g0 * ones, self.n0 * ones, self.m0 * ones])
        if np.max(np.abs(species.sum(axis=0) - 1.0)) > 1e-12:
            raise ValidationError("initial fractions must sum to one at every interval")
        a = np.asarray(self.a0_fn(grid.ext_centers * self.r0), dtype=float)
        return State(species, RadiusState(self.r0, 0.0, 0.0), TAGS, a)


def _case_study_attractant(r):
    r = np.asarray(r, dtype=float)
    return np.where(r <= 1.0, 5.0 / 3.0 - r * r / 6.0, 1.5 * np.exp(-2.0 / 9.0 * (r - 1.0)))


def tumor_scenario(name: str) -> TumorScenario:
    """``case_study``: unit tumor with pure glioma growth; ``pdgf``: glioma growth until 5 mm."""
    if name == "case_study":
        params = TumorParameters(growth=1.0, diffusivity=1.0, secretion=30.0, saturation=1.0,
                                 decay=0.0, mobility=1.0, density=1.0)
        return TumorScenario(name, params, r0=1.0, g0=0.5, n0=0.0, m0=0.5,
                             a0_fn=_case_study_attractant, m_bc=0.5, t_end=1.0)
    if name == "pdgf":
        params = TumorParameters(growth=0.48, necrosis=0.33, removal=0.45, immune_death=0.9,
                                 diffusivity=6.048, secretion=1.5e5, saturation=1.0e5, decay=1.0e2,
                                 mobility=0.6, density=1.0e6)
        return TumorScenario(name, params, r0=0.2, g0=0.84, n0=0.155, m0=0.005,
                             a0_fn=lambda r: 1000.0 * np.exp(-np.asarray(r, dtype=float) ** 2),
                             m_bc=0.005, stop_radius=5.0)
    raise ValidationError(f"unknown tumor scenario {name!r}")
