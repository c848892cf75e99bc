"""Numerical flux functions.

Interval arrays have shape ``(..., n)`` with index ``i`` standing for the
interval between nodes ``i`` and ``i + 1``; nodal arrays have length ``n + 1``.
Leading axes let several species (or basis vectors) be processed at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import StencilError, ValidationError
from .grid import GridSpec

_TINY = 1e-300
MIN_PPM = 4


@dataclass(frozen=True)
class LimiterSet:
    """Shared limiters: MUSCL slopes and the two PPM edge limiters per interval."""

    muscl_phi: np.ndarray | None = None
    ppm_phi_minus: np.ndarray | None = None
    ppm_phi_plus: np.ndarray | None = None


def upwind_flux(w, x_left, x_right):
    """Upwind flux ``w * x`` taking ``x`` from the side the flow comes from."""
    w = np.asarray(w, dtype=float)
    out = np.where(w >= 0.0, w * x_left, w * x_right)
    return out[()] if out.ndim == 0 else out


def minmod_limiter(dz_prev, dz):
    """Limiter ``phi`` such that ``phi * dz`` is the minmod of the two slopes."""
    dz_prev = np.asarray(dz_prev, dtype=float)
    dz = np.asarray(dz, dtype=float)
    active = dz_prev * dz > 0.0
    safe = np.where(active, dz, 1.0)
    # a huge ratio overflows to inf and is clipped to 1 anyway
    with np.errstate(over="ignore"):
        out = np.where(active, np.minimum(dz_prev / safe, 1.0), 0.0)
    return out[()] if out.ndim == 0 else out


def muscl_flux(w, z_stencil, phi_left, phi_right):
    """MUSCL face flux from the four values around a face."""
    z0, z1, z2, z3 = z_stencil
    left = z1 + 0.5 * phi_left * (z2 - z1)
    right = z2 - 0.5 * phi_right * (z3 - z2)
    return upwind_flux(w, left, right)


def _stack(fields) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(fields, dtype=float))
    if arr.shape[0] == 0 or arr.size == 0:
        raise ValidationError("at least one non-empty field is required")
    return arr


def sync_limiters_muscl(fields: Sequence[np.ndarray]) -> np.ndarray:
    """Minimum over fields of the minmod limiter, interval by interval.

    A field that is exactly flat across an interval's stencil imposes no
    constraint there, since any limiter reproduces it. Intervals where no field
    is active, and the two end intervals, get zero.
    """
    z = _stack(fields)
    n = z.shape[-1]
    phi = np.zeros(n)
    if n < 3:
        return phi
    back = z[:, 1:-1] - z[:, :-2]
    fwd = z[:, 2:] - z[:, 1:-1]
    lim = minmod_limiter(back, fwd)
    active = (back != 0.0) | (fwd != 0.0)
    masked = np.where(active, lim, np.inf)
    inner = masked.min(axis=0)
    phi[1:-1] = np.where(np.isfinite(inner), inner, 0.0)
    return phi


def muscl_face_states(x: np.ndarray, phi: np.ndarray | None):
    """Left and right states at interior nodes ``1..n-1``.

    ``phi`` is the per-interval limiter applied to the forward difference; the
    last interval is never reconstructed.
    """
    x = np.asarray(x, dtype=float)
    if phi is None:
        return x[..., :-1], x[..., 1:]
    slope = np.zeros_like(x)
    slope[..., :-1] = phi[:-1] * (x[..., 1:] - x[..., :-1])
    left = x[..., :-1] + 0.5 * slope[..., :-1]
    right = x[..., 1:] - 0.5 * slope[..., 1:]
    return left, right


def _nodal(shape_lead, n):
    return np.zeros(shape_lead + (n + 1,))


def enhanced_v_flux(field, nodal_v, grid: GridSpec, r: float, order: int = 1,
                    limiters: LimiterSet | None = None) -> np.ndarray:
    """V-consistent flux on primitive values; zero at both ends of the mesh."""
    _check_order(order)
    x = np.asarray(field, dtype=float)
    n = grid.n_eta
    phi = None if order == 1 else _muscl_phi(limiters, n)
    left, right = muscl_face_states(x, phi)
    eta = grid.nodes[1:-1]
    w = np.asarray(nodal_v)[1:-1] / r
    out = _nodal(x.shape[:-1], n)
    out[..., 1:-1] = eta * eta * r * r * upwind_flux(w, left, right)
    return out


def enhanced_u_flux(m_field, nodal_u, grid: GridSpec, r: float, order: int = 1,
                    limiters: LimiterSet | None = None, m_bc: float = 0.0) -> np.ndarray:
    """Infiltration flux; the boundary node takes ``m_bc`` for incoming flow."""
    _check_order(order)
    x = np.asarray(m_field, dtype=float)
    u = np.asarray(nodal_u, dtype=float)
    out = enhanced_v_flux(x, u, grid, r, order, limiters)
    out[..., -1] = r * r * upwind_flux(u[-1] / r, x[..., -1], m_bc)
    return out


def _muscl_phi(limiters, n):
    if limiters is None or limiters.muscl_phi is None:
        raise ValidationError("second-order fluxes need MUSCL limiters")
    phi = np.asarray(limiters.muscl_phi, dtype=float)
    if phi.shape != (n,):
        raise ValidationError("limiter length does not match the mesh")
    return phi


def _check_order(order):
    if order not in (1, 2):
        raise ValidationError(f"flux order must be 1 or 2, got {order}")


def conventional_species_flux(x, nodal_w, grid: GridSpec, r: float, phi=None) -> np.ndarray:
    """Interior fluxes of one species on conservative data ``eta**2 R**2 x``.

    ``nodal_w`` is the combined face velocity; ``phi`` the optional MUSCL
    limiter of the conservative data. Both end nodes are left at zero.
    """
    x = np.asarray(x, dtype=float)
    c = grid.centers
    z = c * c * r * r * x
    left, right = muscl_face_states(z, phi)
    out = _nodal(x.shape[:-1], grid.n_eta)
    out[..., 1:-1] = upwind_flux(np.asarray(nodal_w)[1:-1], left, right)
    return out


def conventional_boundary_flux(x_last, u_boundary: float, grid: GridSpec, r: float, m_bc: float):
    """Infiltration flux through the moving boundary, with a ghost interval holding ``m_bc``."""
    inside = (1.0 - 0.5 * grid.delta_eta) ** 2 * r * r * np.asarray(x_last, dtype=float)
    ghost = (1.0 + 0.5 * grid.delta_eta) ** 2 * r * r * m_bc
    return upwind_flux(u_boundary / r, inside, ghost)


def conventional_velocities(nodal_v, nodal_u, grid: GridSpec, r: float, r_prime: float):
    """Combined face velocities for native and infiltrating species."""
    w = (np.asarray(nodal_v, dtype=float) - grid.nodes * r_prime) / r
    return w, w + np.asarray(nodal_u, dtype=float) / r


def conventional_limiters(species, grid: GridSpec, r: float) -> list[np.ndarray]:
    """Per-species minmod limiters of the conservative data."""
    x = np.atleast_2d(np.asarray(species, dtype=float))
    z = grid.centers ** 2 * r * r * x
    return [sync_limiters_muscl([row]) for row in z]


def conventional_fluxes(species, nodal_v, nodal_u, grid: GridSpec, r: float, r_prime: float,
                        order: int = 1, m_bc: float = 0.0, infiltrating: int = -1) -> np.ndarray:
    """Combined fluxes of the conventional scheme, one row per species.

    Native species move with ``V/R - eta R'/R``; the infiltrating row also
    carries ``u/R``. At the boundary node only the infiltration part remains.
    """
    _check_order(order)
    x = np.atleast_2d(np.asarray(species, dtype=float))
    u = np.asarray(nodal_u, dtype=float)
    w_native, w_inf = conventional_velocities(nodal_v, u, grid, r, r_prime)
    phis = conventional_limiters(x, grid, r) if order == 2 else [None] * x.shape[0]
    inf = infiltrating % x.shape[0]
    out = np.zeros((x.shape[0], grid.n_eta + 1))
    for s in range(x.shape[0]):
        w = w_inf if s == inf else w_native
        out[s] = conventional_species_flux(x[s], w, grid, r, phis[s])
    out[inf, -1] = conventional_boundary_flux(x[inf, -1], u[-1], grid, r, m_bc)
    return out


# ---- cubic-preserving R' flux ------------------------------------------------

def ppm_face_values(xbar, grid: GridSpec | None = None) -> np.ndarray:
    """Face interpolants of the eta-cubed-weighted data, nodes ``0..n``.

    Node 0 is zero, node 1 uses the origin formula, node ``n - 1`` a biased
    stencil and node ``n`` an extrapolation that only feeds the limiter.
    """
    xb = np.asarray(xbar, dtype=float)
    n = xb.shape[-1]
    if n < MIN_PPM or (grid is not None and grid.n_eta != n):
        raise StencilError(f"PPM face values need at least {MIN_PPM} intervals matching the mesh")
    f = np.zeros(xb.shape[:-1] + (n + 1,))
    f[..., 1] = 7.0 / 12.0 * (xb[..., 0] + xb[..., 1]) - (xb[..., 2] - xb[..., 0]) / 12.0
    # interior k = 2..n-2 uses intervals k-2..k+1
    f[..., 2:n - 1] = (7.0 / 12.0 * (xb[..., 1:n - 2] + xb[..., 2:n - 1])
                       - (xb[..., 0:n - 3] + xb[..., 3:n]) / 12.0)
    f[..., n - 1] = (3.0 * xb[..., n - 1] + 13.0 * xb[..., n - 2]
                     - 5.0 * xb[..., n - 3] + xb[..., n - 4]) / 12.0
    f[..., n] = (25.0 * xb[..., n - 1] - 23.0 * xb[..., n - 2]
                 + 13.0 * xb[..., n - 3] - 3.0 * xb[..., n - 4]) / 12.0
    return f



def ppm_limiters_synced(xbar_fields, face_values):
    """Shared PPM edge limiters ``(phi_minus, phi_plus)`` per interval.

    A field that is exactly flat over an interval (both face values equal the
    average) does not take part in the synchronization there. The first entry
    of ``phi_minus`` is unused because the origin edge value is always zero.
    """
    xb = _stack(xbar_fields)
    fv = np.atleast_2d(np.asarray(face_values, dtype=float))
    n = xb.shape[-1]
    phi_m = np.ones(n)
    phi_p = np.ones(n)

    # origin interval
    c0 = xb[:, 0]
    f1 = fv[:, 1]
    act0 = (c0 != 0.0) | (f1 != 0.0)
    if not act0.any():
        phi_p[0] = 0.0
    else:
        c0a, f1a = c0[act0], f1[act0]
        if np.any((c0a * f1a <= 0.0) | (3.0 * np.abs(f1a) <= 8.0 * np.abs(c0a))):
            phi_p[0] = 0.0
        else:
            ratio = f1a / c0a
            phi_p[0] = min(1.0, float(np.min(5.0 / np.maximum(ratio - 1.0, _TINY))))

    # remaining intervals
    c = xb[:, 1:]
    dl = fv[:, 1:n] - c
    dr = fv[:, 2:n + 1] - c
    active = (dl != 0.0) | (dr != 0.0)
    extremum = np.any(active & (dl * dr >= 0.0), axis=0)
    adl = np.abs(dl)
    adr = np.maximum(np.abs(dr), _TINY)
    a1 = np.where(active, 2.0 * adl / adr, np.inf).min(axis=0)
    a2 = np.where(active, adl / (2.0 * adr), -np.inf).max(axis=0)
    none_active = ~active.any(axis=0)
    zero = extremum | none_active | (a2 > a1)
    pm = np.ones(n - 1)
    pp = np.ones(n - 1)
    lo = ~zero & (a1 < 1.0)
    hi = ~zero & ~lo & (a2 > 1.0)
    pp[lo] = a1[lo]
    pm[hi] = 1.0 / a2[hi]
    pm[zero] = 0.0
    pp[zero] = 0.0
    phi_m[1:] = pm
    phi_p[1:] = pp
    return phi_m, phi_p


def ppm_edge_values(xbar, phi_minus, phi_plus, face_values):
    """Limited left and right edge values of every interval."""
    xb = np.asarray(xbar, dtype=float)
    fv = np.asarray(face_values, dtype=float)
    minus = xb + phi_minus * (fv[..., :-1] - xb)
    plus = xb + phi_plus * (fv[..., 1:] - xb)
    minus[..., 0] = 0.0
    return minus, plus


def ppm_profile(xbar, phi_minus, phi_plus, face_values, samples: int = 17) -> np.ndarray:
    """Sample each limited reconstruction at ``samples`` points of its interval.

    Returns shape ``(..., n, samples)``. The origin interval uses the odd-power
    reconstruction that vanishes at ``eta = 0``.
    """
    xb = np.asarray(xbar, dtype=float)
    minus, plus = ppm_edge_values(xb, phi_minus, phi_plus, face_values)
    xi = np.linspace(0.0, 1.0, samples)
    m = minus[..., None]
    p = plus[..., None]
    six = 6.0 * xb[..., None] - 3.0 * (m + p)
    prof = m + xi * (p - m + six * (1.0 - xi))
    c0 = xb[..., 0, None]
    p0 = plus[..., 0, None]
    six0 = 12.0 * c0 - 3.0 * p0
    prof[..., 0, :] = xi ** 3 * (p0 + six0 * (1.0 - xi * xi))
    return prof


def rprime_flux(xbar, phi_minus, phi_plus, face_values, r: float, r_prime: float,
                close_boundary: bool = True) -> np.ndarray:
    """Flux of the mesh-motion term ``-eta R'`` built on PPM edge values.

    With ``close_boundary`` the boundary node is set to zero, which is what the
    time step uses. Otherwise the boundary node carries the flux leaving
    through the last interval's right edge, the value whose cancellation with
    the V flux defines the radius rate.
    """
    minus, plus = ppm_edge_values(xbar, phi_minus, phi_plus, face_values)
    w = -r_prime * r
    out = np.zeros(minus.shape[:-1] + (minus.shape[-1] + 1,))
    out[..., 1:-1] = upwind_flux(w, plus[..., :-1], minus[..., 1:])
    if not close_boundary:
        out[..., -1] = w * plus[..., -1]
    return out


def enhanced_fluxes(species, nodal_v, nodal_u, grid: GridSpec, r: float, r_prime: float,
                    order: int = 1, m_bc: float = 0.0, infiltrating: int = -1,
                    limiters: LimiterSet | None = None) -> np.ndarray:
    """Sum of the V, R' and infiltration fluxes for every species row."""
    x = np.atleast_2d(np.asarray(species, dtype=float))
    if limiters is None:
        limiters = enhanced_limiters(x, grid, order)
    total = enhanced_v_flux(x, nodal_v, grid, r, order, limiters)
    xbar = grid.centers ** 3 * x
    faces = ppm_face_values(xbar, grid)
    total += rprime_flux(xbar, limiters.ppm_phi_minus, limiters.ppm_phi_plus, faces, r, r_prime)
    inf = infiltrating % x.shape[0]
    total[inf] += enhanced_u_flux(x[inf], nodal_u, grid, r, order, limiters, m_bc)
    return total


def enhanced_limiters(species, grid: GridSpec, order: int = 1,
                      theta_limiter: bool = False) -> LimiterSet:
    """Limiters synchronized across all species rows (and optionally their sum)."""
    x = np.atleast_2d(np.asarray(species, dtype=float))
    rows = list(x) + ([x.sum(axis=0)] if theta_limiter else [])
    muscl = sync_limiters_muscl(rows) if order == 2 else None
    xbar = grid.centers ** 3 * np.asarray(rows)
    faces = ppm_face_values(xbar, grid)
    pm, pp = ppm_limiters_synced(xbar, faces)
    return LimiterSet(muscl, pm, pp)
