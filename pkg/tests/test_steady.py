import numpy as np
import pytest

from channel_islands.errors import MultipleStagnation, NoStagnation, StabilityViolated
from channel_islands.geometry import BoundaryShape, FourierSeries, build_grid
from channel_islands.harness import CRITICAL_F
from channel_islands.nonlinearity import Nonlinearity
from channel_islands.operators import ScalarField
from channel_islands.steady import (
    check_stability,
    profile_for_shape,
    shear_initial_guess,
    solve_perturbed,
    solve_shear,
    solve_steady,
)

from conftest import COUETTE, SINE_F, cos_shape


def test_couette_shear_is_exact():
    p = solve_shear(COUETTE, 0.0, 0.0)
    y = np.linspace(-1, 1, 41)
    assert np.allclose(p.evaluate(y), (1 - y**2) / 2, atol=1e-10)
    assert np.allclose(p.on_nodes(41), (1 - y**2) / 2, atol=1e-10)
    assert abs(p.y0) < 1e-10 and abs(p.c0 - 0.5) < 1e-10 and p.Fc0 == -1.0


def test_sine_shear_fd_agrees_with_shooting():
    p = solve_shear(SINE_F, 0.0, 0.0)
    y = np.linspace(-1, 1, 257)
    assert np.max(np.abs(p.on_nodes(257) - p.evaluate(y))) < 1e-4
    # symmetric data, symmetric profile
    assert abs(p.y0) < 1e-9
    assert np.allclose(p.evaluate(y), p.evaluate(-y), atol=1e-10)
    assert np.allclose(p.evaluate(y, 2), SINE_F(p.evaluate(y)))


def test_extension_matches_discrete_profile_on_nodes():
    p = solve_shear(SINE_F, 0.0, 0.0)
    nodes = np.linspace(-1, 1, 65)
    assert np.allclose(p.extend(nodes, 65), p.on_nodes(65), atol=1e-13)
    outside = np.array([-1.05, 1.05])
    assert np.all(np.isfinite(p.extend(outside, 65)))


def test_unequal_wall_values_shift_stagnation():
    p = solve_shear(COUETTE, 0.0, 0.2)
    # psi = (1 - y^2)/2 + 0.1 (y + 1)
    assert abs(p.y0 - 0.1) < 1e-9


def test_monotone_profile_has_no_stagnation():
    p = solve_shear(COUETTE, 0.0, 5.0)
    with pytest.raises(NoStagnation):
        p.y0


def test_critical_profile_has_three_stagnation_points():
    p = solve_shear(CRITICAL_F, 0.0, 0.0, enforce_stability=False)
    assert np.allclose(sorted(p.stagnation), [-np.pi / 4, 0.0, np.pi / 4], atol=1e-6)
    with pytest.raises(MultipleStagnation):
        p.y0
    with pytest.raises(StabilityViolated):
        solve_shear(CRITICAL_F, 0.0, 0.0)


def test_check_stability_threshold():
    lam = np.pi**2 / 4
    assert check_stability(Nonlinearity.linear(-2.0), (-1, 1), lam)
    assert not check_stability(Nonlinearity.linear(-3.0), (-1, 1), lam)


def test_newton_converges_quadratically():
    shape = BoundaryShape.flat(h=FourierSeries.cosine(1), epsilon=0.1)
    grid = build_grid(shape, 32, 33)
    F = Nonlinearity(poly=(-1.0, 0.0, 0.5))
    sol = solve_steady(grid, F, ScalarField.zeros(grid))
    res = [e["residual"] for e in sol.info["newton"]]
    assert res[-1] <= 1e-9
    full = [r for r, e in zip(res[1:], sol.info["newton"][1:]) if e["step"] == 1.0]
    # quadratic regime, above the roundoff floor
    late = [(a, b) for a, b in zip(res[:-1], res[1:]) if a < 1e-2 and b > 1e-12]
    assert full and all(b <= 10 * a**2 for a, b in late)


def test_perturbed_solution_satisfies_wall_values():
    shape = BoundaryShape.flat(h=FourierSeries.cosine(1), epsilon=0.05, c_H=0.1)
    p = profile_for_shape(SINE_F, shape)
    psi = solve_perturbed(shape, SINE_F, 32, 33, p)
    assert np.allclose(psi.top, 0.1) and np.allclose(psi.bottom, 0.0)
    assert len(psi.info["newton"]) <= 6


def test_translation_equivariance():
    Nx, m = 32, 5
    dx = 2 * np.pi / Nx
    base = cos_shape(1, g=FourierSeries.cosine(2, 0.4)).with_epsilon(0.05)
    moved = BoundaryShape.flat(h=base.h.shifted(m * dx), g=base.g.shifted(m * dx), epsilon=0.05)
    p = profile_for_shape(SINE_F, base)
    a = solve_perturbed(base, SINE_F, Nx, 33, p)
    b = solve_perturbed(moved, SINE_F, Nx, 33, p)
    assert np.allclose(np.roll(a.values, m, axis=0), b.values, atol=1e-10)


def test_initial_guess_is_continued_profile():
    shape = cos_shape(1).with_epsilon(0.1)
    p = profile_for_shape(COUETTE, shape)
    g = build_grid(shape, 16, 17)
    guess = shear_initial_guess(g, p)
    assert np.allclose(guess.values, (1 - g.Y**2) / 2)
