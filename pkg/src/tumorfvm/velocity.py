"""Nodal velocities: the volume-filling velocity V and the infiltration velocity."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import NonFiniteError, StencilError
from .grid import GridSpec


def compensated_cumsum(values) -> np.ndarray:
    """Running sums accumulated left to right with Neumaier compensation."""
    out = np.empty(len(values))
    total = 0.0
    comp = 0.0
    for i, v in enumerate(np.asarray(values, dtype=float).tolist()):
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out[i] = total + comp
    return out


def solve_velocity_enhanced(grid: GridSpec, r: float, source_sum, f_u, theta: float = 1.0) -> np.ndarray:
    """Velocity whose flux reproduces the summed species update exactly."""
    c = grid.centers
    integral = grid.delta_eta * compensated_cumsum(c * c * r * r * np.asarray(source_sum, dtype=float))
    eta = grid.nodes[1:]
    v = np.zeros(grid.n_eta + 1)
    v[1:] = (integral - np.asarray(f_u, dtype=float)[1:]) / (theta * eta * eta * r)
    return v


def nodal_average(m_field) -> np.ndarray:
    """Node values as the mean of neighbouring intervals; the last node copies its interval."""
    m = np.asarray(m_field, dtype=float)
    out = np.empty(m.size + 1)
    out[0] = m[0]
    out[1:-1] = 0.5 * (m[:-1] + m[1:])
    out[-1] = m[-1]
    return out


def solve_velocity_conventional(grid: GridSpec, r: float, source_sum, nodal_u, m_field,
                                theta: float = 1.0) -> np.ndarray:
    """Velocity from the midpoint quadrature of the integral constraint."""
    c = grid.centers
    integral = grid.delta_eta * compensated_cumsum(c * c * r * np.asarray(source_sum, dtype=float))
    eta = grid.nodes[1:]
    u = np.asarray(nodal_u, dtype=float)
    m_nodes = nodal_average(m_field)
    v = np.zeros(grid.n_eta + 1)
    v[1:] = integral / (theta * eta * eta) - u[1:] * m_nodes[1:] / theta
    return v


def nodal_u_prescribed(u_fn: Callable[[np.ndarray, float], np.ndarray], grid: GridSpec,
                       r: float, t: float) -> np.ndarray:
    """Evaluate a prescribed infiltration velocity at the nodes, pinning the origin to zero."""
    u = np.asarray(u_fn(grid.nodes * r, t), dtype=float) * np.ones(grid.n_eta + 1)
    u[0] = 0.0
    bad = np.flatnonzero(~np.isfinite(u))
    if bad.size:
        raise NonFiniteError(f"infiltration velocity is not finite at node {int(bad[0])}")
    return u


def nodal_u_from_chemo(a_field, grid: GridSpec, r: float, alpha: float) -> np.ndarray:
    """Chemotactic velocity from centered differences of the attractant."""
    a = np.asarray(a_field, dtype=float)
    n = grid.n_eta
    if a.size < n + 1:
        raise StencilError("the attractant must extend at least one interval beyond the boundary")
    u = np.zeros(n + 1)
    u[1:] = alpha * (a[1:n + 1] - a[:n]) / (grid.delta_eta * r)
    return u


def speed_bound(nodal_v, nodal_u, r: float, r_prime: float, grid: GridSpec,
                bulk_weight: float = 1.0) -> float:
    """Largest split speed ``(w |V| + eta |R'| + |u|) / R`` over the nodes."""
    s = (bulk_weight * np.abs(nodal_v) + grid.nodes * abs(r_prime) + np.abs(nodal_u)) / r
    m = float(np.max(s))
    return m if math.isfinite(m) else math.inf
