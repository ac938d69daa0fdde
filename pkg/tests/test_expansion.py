import numpy as np
import pytest

from channel_islands.errors import GridMismatch
from channel_islands.expansion import (
    compute_remainder,
    extend_phi,
    fixed_point_solve,
    gamma0_trace,
    membership_B0,
    solve_first_order,
    trace_extrema,
    wall_remainders,
)
from channel_islands.geometry import BoundaryShape, FourierSeries, build_grid
from channel_islands.oracles import couette_dyphi, couette_phi, mode_ode_closed_form, mode_ode_solve
from channel_islands.steady import base_state, profile_for_shape, solve_perturbed, solve_shear

from conftest import COUETTE, SINE_F, cos_shape


def _phi(shape, F=COUETTE, N=64):
    p = profile_for_shape(F, shape)
    g = build_grid(shape.base(), N, N + 1)
    return solve_first_order(g, F, base_state(g, p), shape), p


def test_couette_phi_matches_series():
    shape = BoundaryShape.flat(h=FourierSeries.cosine(1), g=FourierSeries.from_modes([(2, 0.0, 0.5)]))
    phi, _ = _phi(shape)
    g = phi.grid
    exact = couette_phi(shape.h, shape.g, g.X, g.Y)
    assert np.max(np.abs(phi.values - exact)) < 1e-3 * np.max(np.abs(exact))
    # Couette wall data: phi = h on top, g on the bottom
    assert np.allclose(phi.top, shape.h(g.x), atol=1e-10)
    assert np.allclose(phi.bottom, shape.g(g.x), atol=1e-10)


def test_phi_is_linear_in_the_perturbation():
    h1, h2 = FourierSeries.cosine(1), FourierSeries.from_modes([(3, 0.2, -0.4)])
    g1 = FourierSeries.cosine(2, 0.7)
    a, _ = _phi(BoundaryShape.flat(h=h1, g=g1), SINE_F, 32)
    b, _ = _phi(BoundaryShape.flat(h=h2), SINE_F, 32)
    ab, _ = _phi(BoundaryShape.flat(h=h1 + h2, g=g1), SINE_F, 32)
    assert np.allclose(ab.values, a.values + b.values, atol=1e-12)


@pytest.mark.parametrize("parity", [1, -1])
def test_phi_parity_on_symmetric_channel(parity):
    h = FourierSeries.cosine(1)
    phi, _ = _phi(BoundaryShape.flat(h=h, g=h.scaled(parity)), SINE_F, 32)
    flipped = phi.values[:, ::-1]
    assert np.allclose(flipped, parity * phi.values, atol=1e-12)


def test_gamma0_trace_couette():
    phi, p = _phi(cos_shape(1))
    tr = gamma0_trace(phi, p)
    assert np.allclose(tr.values, np.cos(tr.x) / (2 * np.cosh(1)), atol=2e-4)
    assert tr.sign == 1 and len(tr.maxima) == 1 and abs(tr.maxima[0]["x"]) < 1e-9


def test_trace_extrema_finds_all_ties():
    x = 2 * np.pi * np.arange(64) / 64
    found = trace_extrema(x, np.cos(2 * x))
    assert np.allclose([m["x"] for m in found], [0.0, np.pi], atol=1e-10)
    assert np.allclose([m["second"] for m in found], -4.0)


def test_membership_B0_and_degenerate_combination():
    shape = cos_shape(1)
    p = profile_for_shape(SINE_F, shape)
    ok, wit = membership_B0(shape, SINE_F, p)
    assert ok and abs(wit["maxima"][0]["x"]) < 1e-9
    # single-mode trace amplitudes, then a combination whose maximum is degenerate
    a1 = gamma0_trace(_phi(cos_shape(1), SINE_F)[0], p).values[0]
    a2 = gamma0_trace(_phi(cos_shape(2), SINE_F)[0], p).values[0]
    h = FourierSeries.from_modes([(1, 1 / a1, 0.0), (2, -1 / (4 * a2), 0.0)])
    bad = BoundaryShape.flat(h=h)
    ok, wit = membership_B0(bad, SINE_F, p)
    assert not ok, wit


def test_mode_ode_oracle():
    for k in (1, 2, 5):
        sol = mode_ode_solve(k, lambda y: 0 * y)
        assert np.max(np.abs(sol.phi - mode_ode_closed_form(k, sol.y))) < 1e-4
    p = solve_shear(SINE_F, 0.0, 0.0)
    for k in range(1, 9):
        sol = mode_ode_solve(k, lambda y: SINE_F.prime(p.evaluate(y)), y0=p.y0)
        assert sol.phi_y0 > 0


def test_couette_wall_remainder_trace():
    eps = 0.05
    shape = cos_shape(1).with_epsilon(eps)
    phi, p = _phi(shape)
    grid = build_grid(shape, 64, 65)
    top, bot = wall_remainders(grid, p, phi)
    h = np.cos(grid.x)
    expected = eps**2 * (h**2 / 2 - h * couette_dyphi(shape.h, shape.g, grid.x, 1.0))
    # agreement up to the O(eps^3) term
    assert np.max(np.abs(top - expected)) < eps**3
    assert np.max(np.abs(bot)) < 1e-12


def test_remainder_is_second_order():
    shape = cos_shape(1)
    phi, p = _phi(shape, SINE_F)
    r = []
    for eps in (0.04, 0.02):
        psi = solve_perturbed(shape.with_epsilon(eps), SINE_F, 64, 65, p)
        r.append(compute_remainder(psi, p, phi).r_max)
    assert 3.4 < r[0] / r[1] < 4.6


def test_extend_phi_rejects_mismatch():
    phi, _ = _phi(cos_shape(1), N=32)
    with pytest.raises(GridMismatch):
        extend_phi(phi, build_grid(cos_shape(1).with_epsilon(0.1), 16, 33))


def test_fixed_point_matches_newton():
    shape = cos_shape(1).with_epsilon(0.02)
    phi, p = _phi(shape, SINE_F)
    psi = solve_perturbed(shape, SINE_F, 64, 65, p)
    fp = fixed_point_solve(psi.grid, SINE_F, p, phi)
    rep = compute_remainder(psi, p, phi)
    assert fp.converged and fp.in_ball and fp.contraction <= 0.5
    assert np.max(np.abs(fp.r_eps.values - rep.r_eps.values)) < 1e-8
    with pytest.raises(ValueError):
        fixed_point_solve(build_grid(shape.with_epsilon(0.3), 64, 65), SINE_F, p, phi)
