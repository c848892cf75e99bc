"""Normalized mesh on [0, 1] and radius update rules for the moving domain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainCollapseError, StencilError, ValidationError

MIN_INTERVALS = 4


@dataclass(frozen=True)
class GridSpec:
    """Uniform mesh in the normalized coordinate ``eta = r / R``.

    The interior mesh has ``n_eta`` intervals on ``[0, 1]``. The chemoattractant
    lives on an extended mesh with ``n_ext`` further intervals of the same width.
    """

    n_eta: int
    n_ext: int = 0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    centers: np.ndarray = field(init=False, repr=False, compare=False)
    ext_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    ext_centers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.n_eta, (int, np.integer)) or isinstance(self.n_eta, bool):
            raise ValidationError("n_eta must be an integer")
        if self.n_eta < MIN_INTERVALS:
            raise StencilError(f"n_eta must be at least {MIN_INTERVALS}, got {self.n_eta}")
        if self.n_ext < 0:
            raise ValidationError("n_ext must be non-negative")
        total = self.n_eta + self.n_ext
        d = 1.0 / self.n_eta
        ext_nodes = np.arange(total + 1) * d
        # the boundary node is pinned to exactly one
        ext_nodes[self.n_eta] = 1.0
        ext_centers = (np.arange(total) + 0.5) * d
        for name, arr in (("nodes", ext_nodes[: self.n_eta + 1]), ("centers", ext_centers[: self.n_eta]),
                          ("ext_nodes", ext_nodes), ("ext_centers", ext_centers)):
            arr = np.array(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def delta_eta(self) -> float:
        return 1.0 / self.n_eta

    @property
    def n_total(self) -> int:
        return self.n_eta + self.n_ext

    @property
    def eta_max(self) -> float:
        return self.n_total * self.delta_eta


@dataclass(frozen=True)
class RadiusState:
    """Domain radius ``r``, the rate ``r_prime`` used to reach it, and the time."""

    r: float
    r_prime: float = 0.0
    time: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.r) or self.r <= 0.0:
            raise DomainCollapseError(f"radius must be positive and finite, got {self.r}")


def build_grid(n_eta: int, ext_factor: float = 1.0) -> GridSpec:
    """Build a mesh whose chemoattractant extension reaches ``eta = ext_factor``."""
    if not math.isfinite(ext_factor):
        raise ValidationError("ext_factor must be finite")
    if ext_factor < 1.0:
        raise ValidationError("ext_factor must be at least 1")
    if n_eta < MIN_INTERVALS:
        raise StencilError(f"n_eta must be at least {MIN_INTERVALS}, got {n_eta}")
    # round away float noise before the ceiling, e.g. 4.0 * 50 = 200.00000000000003
    n_ext = math.ceil(round((ext_factor - 1.0) * n_eta, 9))
    return GridSpec(int(n_eta), int(n_ext))


def gcl_rate(v_boundary: float, delta_eta: float) -> float:
    """Radius rate that makes the enhanced boundary fluxes cancel."""
    return v_boundary / (1.0 - 0.25 * delta_eta * delta_eta)


def advance_radius_gcl(r_n: float, v_boundary: float, dtau: float, delta_eta: float,
                       time: float = 0.0) -> RadiusState:
    """Advance the radius so that ``(r**2 - r_n**2) / (2 dtau r_n)`` equals the rate."""
    if r_n <= 0.0 or dtau <= 0.0:
        raise ValidationError("r_n and dtau must be positive")
    rate = gcl_rate(v_boundary, delta_eta)
    r_sq = r_n * r_n + 2.0 * dtau * rate * r_n
    if not r_sq > 0.0:
        raise DomainCollapseError(f"squared radius {r_sq} is not positive")
    return RadiusState(math.sqrt(r_sq), rate, time + dtau)


def advance_radius_conventional(r_n: float, v_boundary: float, dtau: float,
                                time: float = 0.0) -> RadiusState:
    """Forward-Euler radius update ``r = r_n + dtau * V``."""
    if r_n <= 0.0:
        raise ValidationError("r_n must be positive")
    r = r_n + dtau * v_boundary
    if not r > 0.0:
        raise DomainCollapseError(f"radius {r} is not positive")
    return RadiusState(r, v_boundary, time + dtau)


def implicit_radius_relation(r_n: float, r_np1: float, dtau: float) -> float:
    """Rate consistent with an implicit step from ``r_n`` to ``r_np1``."""
    if dtau == 0.0:
        raise ValidationError("dtau must be non-zero")
    if r_np1 <= 0.0:
        raise ValidationError("r_np1 must be positive")
    return (r_np1 * r_np1 - r_n * r_n) / (2.0 * dtau * r_np1)


def solve_implicit_radius(r_n: float, rate: float, dtau: float) -> float:
    """Positive root ``r`` of ``implicit_radius_relation(r_n, r, dtau) == rate``."""
    a = dtau * rate
    return a + math.sqrt(a * a + r_n * r_n)
