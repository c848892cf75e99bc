"""Method selection shared by the steppers and the command line."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

SCHEMES = ("conventional", "enhanced")
INTEGRATORS = ("fe", "rk2", "be", "dirk2")
COURANT_RULES = ("reference", "split")


@dataclass(frozen=True)
class MethodConfig:
    """Spatial scheme, flux order, time integrator and step-size control."""

    scheme: str = "enhanced"
    flux_order: int = 1
    integrator: str = "fe"
    cfl: float = 0.8
    dt_fixed: float | None = None
    theta_limiter: bool = False
    picard_tol: float = 1e-12
    picard_max_iter: int = 200
    courant_rule: str = "reference"

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if self.flux_order not in (1, 2):
            raise ValidationError(f"flux_order must be 1 or 2, got {self.flux_order}")
        if self.integrator not in INTEGRATORS:
            raise ValidationError(f"unknown integrator {self.integrator!r}")
        if not (math.isfinite(self.cfl) and self.cfl > 0.0):
            raise ValidationError("cfl must be positive")
        if self.dt_fixed is not None and not (math.isfinite(self.dt_fixed) and self.dt_fixed > 0.0):
            raise ValidationError("dt_fixed must be positive")
        if self.courant_rule not in COURANT_RULES:
            raise ValidationError(f"unknown courant_rule {self.courant_rule!r}")
        if not self.picard_tol > 0.0 or self.picard_max_iter < 1:
            raise ValidationError("picard_tol and picard_max_iter must be positive")

    @property
    def enhanced(self) -> bool:
        return self.scheme == "enhanced"

    @property
    def implicit(self) -> bool:
        return self.integrator in ("be", "dirk2")

    @property
    def bulk_weight(self) -> float:
        """Weight of the bulk velocity in the Courant speed.

        ``split`` counts every segregated speed in full. ``reference`` is the
        rule that reproduces the published step sizes: the bulk speed is left
        out for single-stage updates and counted at half weight for TVD-RK2.
        """
        if self.courant_rule == "split":
            return 1.0
        return 0.5 if self.integrator == "rk2" else 0.0

    @property
    def label(self) -> str:
        kind = "upwind" if self.flux_order == 1 else "muscl"
        return f"{self.scheme}-{kind}-{self.integrator}"
