"""Deterministic structural checks shared by the unit tests and acceptance criterion 9."""

from __future__ import annotations

import math

import numpy as np

from tumorfvm import fluxes as fx
from tumorfvm import timeint
from tumorfvm.engine import implicit_step
from tumorfvm.grid import build_grid
from tumorfvm.method import MethodConfig
from tumorfvm.model import ModelProblem, manufactured_scenario
from tumorfvm.tumor import TumorParameters, chemo_step, chemo_system
from tumorfvm.grid import RadiusState


def _rng(seed=7):
    return np.random.default_rng(seed)


def flux_additivity(n=24, species=3, seed=1) -> bool:
    """V and R' fluxes of the species sum equal the sum of the species fluxes."""
    rng = _rng(seed)
    grid = build_grid(n)
    x = rng.uniform(0.0, 1.0, (species, n))
    v = rng.normal(size=n + 1)
    ok = True
    for order in (1, 2):
        lim = fx.enhanced_limiters(x, grid, order)
        r, rp = 1.7, 0.4
        per = fx.enhanced_v_flux(x, v, grid, r, order, lim)
        xb = grid.centers ** 3 * x
        per += fx.rprime_flux(xb, lim.ppm_phi_minus, lim.ppm_phi_plus, fx.ppm_face_values(xb, grid), r, rp)
        total = x.sum(axis=0)
        tb = grid.centers ** 3 * total
        whole = fx.enhanced_v_flux(total, v, grid, r, order, lim)
        whole += fx.rprime_flux(tb, lim.ppm_phi_minus, lim.ppm_phi_plus, fx.ppm_face_values(tb, grid), r, rp)
        ok &= bool(np.allclose(per.sum(axis=0), whole, rtol=0.0, atol=1e-13))
    return ok


def v_consistency(n=30, seed=2) -> bool:
    """The V flux of the all-ones field is ``eta**2 R V`` at every node."""
    rng = _rng(seed)
    grid = build_grid(n)
    v = rng.normal(size=n + 1)
    r = 2.3
    ones = np.ones(n)
    ok = True
    for order in (1, 2):
        lim = fx.enhanced_limiters(ones, grid, order)
        f = fx.enhanced_v_flux(ones, v, grid, r, order, lim)
        expect = grid.nodes ** 2 * r * v
        ok &= bool(np.allclose(f[1:-1], expect[1:-1], rtol=1e-14, atol=1e-15))
    return ok


def cubic_identity(grids=(4, 5, 7, 10, 25, 50, 100)) -> bool:
    """Divided differences of the R' flux of the ones field equal ``-3 eta_j**2 R' R`` on every interval."""
    ok = True
    for n in grids:
        grid = build_grid(n)
        xb = grid.centers ** 3
        faces = fx.ppm_face_values(xb, grid)
        pm, pp = fx.ppm_limiters_synced([xb], faces)
        for r, rp in ((1.0, 0.5), (3.1, -0.8)):
            f = fx.rprime_flux(xb, pm, pp, faces, r, rp, close_boundary=False)
            div = (f[1:] - f[:-1]) / grid.delta_eta
            ok &= bool(np.max(np.abs(div + 3.0 * grid.centers ** 2 * rp * r)) <= 1e-13 * abs(rp * r))
    return ok


def ppm_monotone(trials=200, n=16, species=3, seed=3) -> bool:
    """Away from the origin, every limited parabola stays between its own two edge values.

    The origin interval uses a separate odd-power reconstruction that is not
    bounded this way, so it is left out.
    """
    rng = _rng(seed)
    grid = build_grid(n)
    ok = True
    for t in range(trials):
        x = rng.uniform(0.0, 1.0, (species, n))
        if t % 2:
            x = np.sort(x, axis=1)
        xb = grid.centers ** 3 * x
        faces = fx.ppm_face_values(xb, grid)
        pm, pp = fx.ppm_limiters_synced(xb, faces)
        prof = fx.ppm_profile(xb, pm, pp, faces, samples=17)
        minus, plus = fx.ppm_edge_values(xb, pm, pp, faces)
        lo = np.minimum(minus, plus)[:, 1:, None]
        hi = np.maximum(minus, plus)[:, 1:, None]
        tol = 1e-12 * float(np.max(np.abs(xb)))
        inner = prof[:, 1:]
        ok &= bool(np.all(inner >= lo - tol) and np.all(inner <= hi + tol))
    return ok


def split_stability_sweep(points=101, angles=720) -> bool:
    """``|a|**2 <= 1`` for every wave number exactly when ``alpha_plus + alpha_minus <= 1``."""
    alpha = np.linspace(0.0, 1.0, points)
    ap, am = np.meshgrid(alpha, alpha, indexing="ij")
    theta = np.linspace(0.0, 2.0 * math.pi, angles, endpoint=False)
    amp = timeint.split_amplifier(ap[..., None], am[..., None], theta)
    stable = np.all(amp <= 1.0 + 1e-12, axis=-1)
    return bool(np.array_equal(stable, ap + am <= 1.0 + 1e-12))


def chemo_dense_oracle(seed=4) -> bool:
    """The banded attractant solve matches a dense solve of the same system."""
    rng = _rng(seed)
    ok = True
    for n, ext in ((4, 1.75), (12, 3.0), (40, 5.0)):
        grid = build_grid(n, ext)
        params = TumorParameters(diffusivity=rng.uniform(0.1, 3.0), decay=rng.uniform(0.0, 2.0),
                                 secretion=rng.uniform(0.0, 20.0))
        a = rng.uniform(0.0, 2.0, grid.n_total)
        g = rng.uniform(0.0, 1.0, n)
        for rp in (0.6, -0.3):
            r_old, dtau = 1.2, 0.01
            r_new = math.sqrt(r_old ** 2 + 2.0 * dtau * rp * r_old)
            bands, rhs = chemo_system(a, g, r_old, r_new, rp, params, grid, dtau)
            dense = np.diag(bands[1]) + np.diag(bands[0, 1:], 1) + np.diag(bands[2, :-1], -1)
            ref = np.linalg.solve(dense, rhs)
            got = chemo_step(a, g, r_old, RadiusState(r_new, rp, dtau), params, grid, dtau)
            ok &= bool(np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, float(np.max(np.abs(ref)))))
    return ok


def implicit_residual_bound(tol=1e-10) -> bool:
    """Converged implicit steps satisfy the discrete equations to ten times the tolerance."""
    ok = True
    for case in (1, 3, 4):
        sc = manufactured_scenario(case)
        grid = build_grid(40)
        problem = ModelProblem(sc)
        methods = [("enhanced", 1), ("conventional", 1)] + ([("enhanced", 2)] if case != 3 else [])
        for scheme, order in methods:
            method = MethodConfig(scheme, order, "be", picard_tol=tol)
            state = sc.initial_state(grid)
            for _ in range(3):
                state, info = implicit_step(problem, state, method, grid, 0.05)
                ok &= info.residual <= 10.0 * tol
    return ok


def sdirk2_stability_match() -> bool:
    """The two-stage scheme applied to ``y' = lam y`` reproduces its stability function."""
    ok = True
    for z in (-0.1, -1.0, -10.0, -250.0, complex(-1.0, 2.0), complex(0.0, 3.0), 0.3):
        h = 1.0
        lam = z

        def stage(y, step):
            return y / (1.0 - step * lam)

        def comb(a, b, c):
            return a + c * (b - a)

        got = timeint.dirk2(stage, comb, 1.0 + 0j, h)
        ok &= abs(got - timeint.sdirk2_stability(z)) <= 1e-13 * max(1.0, abs(got))
    return ok


CHECKS = {
    "flux additivity": flux_additivity,
    "V-consistency": v_consistency,
    "cubic identity on every interval": cubic_identity,
    "monotone PPM reconstruction": ppm_monotone,
    "split-velocity stability boundary": split_stability_sweep,
    "tridiagonal vs dense attractant solve": chemo_dense_oracle,
    "implicit residual within 10 tol": implicit_residual_bound,
    "SDIRK2 stability function": sdirk2_stability_match,
}


def run_all() -> dict[str, bool]:
    return {name: bool(fn()) for name, fn in CHECKS.items()}
