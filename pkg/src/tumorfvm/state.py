"""Solver state passed between steps."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NonFiniteError, ValidationError
from .grid import RadiusState


@dataclass(frozen=True)
class State:
    """Species fractions (one row per species), radius, and an optional attractant.

    ``tags`` names the rows, for example ``("G", "M")``; the last row is the
    infiltrating species. ``aux`` holds attractant averages on the extended mesh.
    """

    species: np.ndarray
    radius: RadiusState
    tags: tuple[str, ...] = ("G", "M")
    aux: np.ndarray | None = None

    def __post_init__(self) -> None:
        sp = np.atleast_2d(np.asarray(self.species, dtype=float))
        if sp.shape[0] != len(self.tags):
            raise ValidationError("one species row per tag is required")
        object.__setattr__(self, "species", sp)

    def field(self, tag: str) -> np.ndarray:
        return self.species[self.tags.index(tag)]

    @property
    def g(self) -> np.ndarray:
        return self.field("G")

    @property
    def m(self) -> np.ndarray:
        return self.field("M")

    @property
    def n(self) -> np.ndarray:
        return self.field("N")

    @property
    def a(self) -> np.ndarray | None:
        return self.aux

    @property
    def theta(self) -> np.ndarray:
        return self.species.sum(axis=0)

    @property
    def r(self) -> float:
        return self.radius.r

    @property
    def tau(self) -> float:
        return self.radius.time

    def with_(self, **kw) -> "State":
        return replace(self, **kw)

    def check_finite(self, step: int | None = None) -> None:
        ok = np.all(np.isfinite(self.species)) and (self.aux is None or np.all(np.isfinite(self.aux)))
        if not ok:
            where = "" if step is None else f" at step {step}"
            raise NonFiniteError(f"non-finite species values{where} (tau={self.tau:.6g})")
