"""Error metrics, the volume-constraint index and convergence tables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError
from .grid import GridSpec


def incompressibility_index(fields, r: float, grid: GridSpec, theta: float = 1.0) -> float:
    """``(R / N) * sum_j |sum_k X_k - theta|`` over the interior intervals."""
    arr = np.atleast_2d(np.asarray(fields, dtype=float))
    if arr.shape[0] == 0:
        raise ValidationError("at least one field is required")
    total = arr.sum(axis=0)
    return float(r / grid.n_eta * np.sum(np.abs(total - theta)))


def l1_error(field, exact_fn: Callable[[np.ndarray], np.ndarray], grid: GridSpec) -> float:
    """Midpoint L1 distance in the normalized coordinate."""
    x = np.asarray(field, dtype=float)
    ref = np.asarray(exact_fn(grid.centers), dtype=float) * np.ones_like(x)
    return float(grid.delta_eta * np.sum(np.abs(x - ref)))


@dataclass(frozen=True)
class ConvergenceRow:
    n_eta: int
    error: float
    rate: float | None = None


def convergence_rates(errors: Sequence[tuple[int, float]]) -> list[ConvergenceRow]:
    """Observed orders ``log2(|e_prev| / |e|)`` along a doubling grid sequence.

    A zero or non-finite error leaves the affected rate as ``None``.
    """
    rows = list(errors)
    if len(rows) < 2:
        raise ValidationError("at least two grids are needed")
    for (n0, _), (n1, _) in zip(rows, rows[1:]):
        if n1 != 2 * n0:
            raise ValidationError(f"grids must double, got {n0} then {n1}")
    out = [ConvergenceRow(int(rows[0][0]), float(rows[0][1]))]
    for (_, e0), (n1, e1) in zip(rows, rows[1:]):
        rate = None
        if e0 != 0.0 and e1 != 0.0 and math.isfinite(e0) and math.isfinite(e1):
            rate = math.log2(abs(e0) / abs(e1))
        out.append(ConvergenceRow(int(n1), float(e1), rate))
    return out


def growth_consistency(radius_history, rate_history, time_history, u_fn,
                       m_boundary_history) -> np.ndarray:
    """Residual ``R' + u(R, t) * M_b`` of the boundary growth law along a run."""
    r = np.asarray(radius_history, dtype=float)
    rate = np.asarray(rate_history, dtype=float)
    t = np.asarray(time_history, dtype=float)
    mb = np.asarray(m_boundary_history, dtype=float)
    u_b = np.array([float(np.asarray(u_fn(np.array([ri]), ti)).ravel()[0]) for ri, ti in zip(r, t)])
    return rate + u_b * mb
