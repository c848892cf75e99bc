import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tumorfvm import engine
from tumorfvm import fluxes as fx
from tumorfvm.errors import ValidationError
from tumorfvm.grid import RadiusState, build_grid
from tumorfvm.method import MethodConfig
from tumorfvm.state import State
from tumorfvm.tumor import (TumorParameters, chemo_step, chemo_system, secretion_rate, source_terms,
                            tumor_scenario, tumor_step)
from tumorfvm.velocity import nodal_u_from_chemo


def test_source_examples():
    f, gs, h = source_terms(0.5, 0.0, 0.5, TumorParameters(growth=1.0))
    assert (f, gs, h) == (0.5, 0.0, 0.0)
    assert source_terms(0.0, 0.0, 0.0, tumor_scenario("pdgf").params) == (0.0, 0.0, 0.0)
    f, _, _ = source_terms(0.84, 0.155, 0.005, tumor_scenario("pdgf").params)
    assert f == pytest.approx(0.126, rel=1e-13)


def test_source_full_rates():
    p = TumorParameters(growth=0.48, necrosis=0.33, removal=0.45, immune_death=0.9)
    f, gs, h = source_terms(0.5, 0.2, 0.3, p)
    assert f == pytest.approx(0.15 * 0.5)
    assert gs == pytest.approx(0.33 * 0.5 - 0.45 * 0.2)
    assert h == pytest.approx(-0.27)


def test_secretion_saturates():
    p = TumorParameters(secretion=30.0, saturation=1.0)
    assert secretion_rate(1.0, p) == 15.0
    assert secretion_rate(0.0, p) == 0.0
    dense = TumorParameters(secretion=1.5e5, saturation=1e5, density=1e6, saturate_on_density=True)
    assert secretion_rate(0.84, dense) == pytest.approx(1.5e5 * 8.4e5 / (1e5 + 8.4e5))


@pytest.mark.parametrize("kwargs", [dict(growth=-1.0), dict(decay=math.nan), dict(density=0.0),
                                    dict(diffusivity=0.0)])
def test_parameter_validation(kwargs):
    with pytest.raises(ValidationError):
        TumorParameters(**kwargs)


def test_chemo_zero_stays_zero():
    g = build_grid(10, 2.0)
    out = chemo_step(np.zeros(20), np.zeros(10), 1.0, RadiusState(1.1, 0.2), TumorParameters(), g, 0.1)
    assert np.all(out == 0.0)


def test_chemo_uniform_decay():
    # with no far-field loss the uniform field only decays; the Dirichlet row is removed
    # by checking the intervals far from the cut-off after one short step
    g = build_grid(40, 5.0)
    p = TumorParameters(secretion=0.0, decay=2.0, diffusivity=1e-12)
    dtau = 0.05
    out = chemo_step(np.ones(g.n_total), np.zeros(40), 1.0, RadiusState(1.0, 0.0), p, g, dtau)
    assert np.allclose(out[:-1], 1.0 / (1.0 + 2.0 * dtau), rtol=1e-10)


def test_chemo_small_instance_dense_oracle():
    g = build_grid(4, 1.75)
    assert g.n_total == 7
    p = TumorParameters(secretion=4.0, decay=0.3, diffusivity=0.7)
    a = np.linspace(1.0, 0.1, 7)
    gfrac = np.array([0.4, 0.7, 0.2, 0.9])
    radius = RadiusState(1.2, 0.5)
    bands, rhs = chemo_system(a, gfrac, 1.0, radius.r, radius.r_prime, p, g, 0.1)
    dense = np.diag(bands[1]) + np.diag(bands[0, 1:], 1) + np.diag(bands[2, :-1], -1)
    expected = np.linalg.solve(dense, rhs)
    assert np.allclose(chemo_step(a, gfrac, 1.0, radius, p, g, 0.1), expected, rtol=1e-12, atol=0.0)


@pytest.mark.parametrize("r_prime", [-0.4, 0.0, 0.7])
def test_chemo_matrix_is_column_dominant_m_matrix(r_prime):
    g = build_grid(30, 3.0)
    bands, _ = chemo_system(np.ones(g.n_total), np.ones(30), 1.0, 1.1, r_prime, TumorParameters(), g, 0.2)
    dense = np.diag(bands[1]) + np.diag(bands[0, 1:], 1) + np.diag(bands[2, :-1], -1)
    off = dense - np.diag(bands[1])
    assert np.all(off <= 0.0)
    assert np.all(bands[1] > np.abs(off).sum(axis=0))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0), st.floats(0.01, 0.5))
def test_chemo_maximum_principle_without_secretion(seed, r_prime, dtau):
    rng = np.random.default_rng(seed)
    g = build_grid(20, 3.0)
    a = rng.uniform(0.0, 5.0, g.n_total)
    p = TumorParameters(secretion=0.0, decay=rng.uniform(0, 1), diffusivity=rng.uniform(0.1, 3))
    r_new = math.sqrt(1.0 + 2.0 * dtau * r_prime)
    out = chemo_step(a, np.ones(20), 1.0, RadiusState(r_new, r_prime), p, g, dtau)
    assert out.max() <= a.max() * (1.0 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1, 2]), st.booleans())
def test_three_species_dtcl(seed, order, theta_limiter):
    rng = np.random.default_rng(seed)
    n = 20
    grid = build_grid(n, 2.0)
    x = rng.uniform(0.05, 0.6, (3, n))
    r, rp, dtau = 1.4, 0.3, 0.001
    method = MethodConfig("enhanced", order, theta_limiter=theta_limiter)
    lim = fx.enhanced_limiters(x, grid, order, theta_limiter)
    u = nodal_u_from_chemo(rng.uniform(0, 2, grid.n_total), grid, r, 1.0)
    v = rng.normal(size=n + 1)
    v[0] = 0.0
    src = rng.normal(size=(3, n))
    fr = engine.Frozen(u, src, 0.005, v, rp, lim)
    w = grid.centers ** 2
    r_new = math.sqrt(r * r + 2 * dtau * rp * r)

    def step(xs, flux, s):
        return (w * r * r * xs - dtau / grid.delta_eta * np.diff(flux, axis=-1) + dtau * w * r * r * s) / (w * r_new ** 2)

    separate = step(x, engine.all_fluxes(method, grid, fr, x, r), src).sum(axis=0)
    total = x.sum(axis=0)
    f_total = engine.frozen_fluxes(method, grid, fr, total, r, 0, 3)
    f_total += fx.enhanced_u_flux(x[2], u, grid, r, order, lim, 0.005)
    together = step(total, f_total, src.sum(axis=0))
    assert np.allclose(separate, together, rtol=1e-12, atol=0.0)


def test_static_tumor_state():
    g = build_grid(20, 2.0)
    params = TumorParameters(growth=0.0, secretion=0.0)
    species = np.vstack([np.full(20, 0.5), np.full(20, 0.2), np.full(20, 0.3)])
    s = State(species, RadiusState(1.0), ("G", "N", "M"), np.zeros(g.n_total))
    for method in (MethodConfig("enhanced", 1), MethodConfig("enhanced", 2), MethodConfig("conventional", 1)):
        out = tumor_step(s, params, 0.3, method, g, 0.01)
        assert out.r == 1.0
        assert np.allclose(out.species, species, atol=1e-15)
        assert np.all(out.aux == 0.0)


@pytest.mark.parametrize("order", [1, 2])
def test_tumor_step_keeps_saturation(order):
    # the incoming immune fraction equals the boundary value here, so no boundary jump enters
    sc = tumor_scenario("case_study")
    g = build_grid(30, 5.0)
    s = sc.initial_state(g)
    for _ in range(20):
        s = tumor_step(s, sc.params, sc.m_bc, MethodConfig("enhanced", order), g, 2e-3)
    assert np.max(np.abs(s.species.sum(axis=0) - 1.0)) <= 1e-13
    assert s.r > sc.r0


def test_scenarios():
    cs = tumor_scenario("case_study")
    assert cs.params.growth == 1.0
    assert (cs.params.necrosis, cs.params.removal, cs.params.immune_death, cs.params.decay) == (0, 0, 0, 0)
    assert cs.a0_fn(np.array([1.0]))[0] == pytest.approx(1.5, rel=1e-15)
    assert cs.a0_fn(np.array([1.0 + 1e-12]))[0] == pytest.approx(1.5, rel=1e-11)
    pd = tumor_scenario("pdgf")
    assert pd.g0 + pd.n0 + pd.m0 == pytest.approx(1.0, abs=1e-15)
    assert (pd.r0, pd.m_bc, pd.stop_radius) == (0.2, 0.005, 5.0)
    with pytest.raises(ValidationError):
        tumor_scenario("glioblastoma")


def test_initial_fraction_validator():
    sc = tumor_scenario("case_study")
    bad = type(sc)(sc.name, sc.params, sc.r0, 0.5, 0.1, 0.5, sc.a0_fn, sc.m_bc, sc.t_end)
    with pytest.raises(ValidationError):
        bad.initial_state(build_grid(10, 2.0))
    with pytest.raises(ValidationError):
        sc.initial_state(build_grid(10))
