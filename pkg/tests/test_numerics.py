import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from channel_islands.config import ExperimentConfig
from channel_islands.harness import run_appendixA
from channel_islands.nonlinearity import Nonlinearity
from channel_islands.numerics import (
    TrigPolynomial,
    interp_1d,
    lagrange_weights,
    one_sided_derivative,
    periodic_spectral_derivative,
)

small = st.floats(-2.0, 2.0, allow_nan=False)


@given(st.lists(small, min_size=5, max_size=5), st.floats(-3.0, 20.0))
@settings(max_examples=60, deadline=None)
def test_quartic_interpolation_is_exact(coeffs, y):
    nodes = np.linspace(0.0, 2.0, 17)
    p = np.polynomial.Polynomial(coeffs)
    assert abs(interp_1d(nodes, p(nodes), y / 8.0) - p(y / 8.0)) < 1e-8 * max(1.0, abs(p(y / 8.0)))


@given(arrays(float, 7, elements=st.floats(-5, 25)), st.sampled_from([3, 4]))
@settings(max_examples=40, deadline=None)
def test_lagrange_weights_partition_unity(u, degree):
    start, w = lagrange_weights(u, 21, degree)
    assert np.allclose(w.sum(axis=-1), 1.0)
    assert np.all((start >= 0) & (start <= 21 - degree - 1))


def test_one_sided_derivative_fourth_order():
    errs = []
    for n in (16, 32):
        x = np.linspace(0, 1, n + 1)
        h = x[1] - x[0]
        errs.append(abs(one_sided_derivative(np.exp(x), h, "left") - 1.0))
        assert abs(one_sided_derivative(np.exp(x), h, "right") - np.e) < 1e-4
    assert 14 < errs[0] / errs[1] < 18


@given(st.integers(1, 7), small, small)
@settings(max_examples=40, deadline=None)
def test_trig_polynomial_and_spectral_derivative(k, a, b):
    x = 2 * np.pi * np.arange(32) / 32
    f = a * np.cos(k * x) + b * np.sin(k * x)
    df = k * (-a * np.sin(k * x) + b * np.cos(k * x))
    assert np.allclose(periodic_spectral_derivative(f), df, atol=1e-10)
    tp = TrigPolynomial(f)
    z = np.linspace(0, 2 * np.pi, 13)
    assert np.allclose(tp(z), a * np.cos(k * z) + b * np.sin(k * z), atol=1e-10)
    assert np.allclose(tp(z, 2), -(k**2) * (a * np.cos(k * z) + b * np.sin(k * z)), atol=1e-9)


@given(st.lists(small, min_size=1, max_size=4), st.lists(st.tuples(small, st.floats(0.1, 3.0), small), max_size=2))
@settings(max_examples=40, deadline=None)
def test_nonlinearity_derivatives_consistent(poly, sines):
    F = Nonlinearity(poly=tuple(poly), sines=tuple(sines))
    assert F.audit() < 1e-5
    assert Nonlinearity.from_dict(F.to_dict()) == F


def test_critical_shear_produces_islands():
    cfg = ExperimentConfig(Nx=128, Ns=129, epsilons=(0.04, 0.02))
    s = run_appendixA(cfg, None, "islandscritical")["islandscritical"]
    assert s["passed"] and len(s["stagnation"]) == 3
    assert sum(r["n_islands"] >= 1 for r in s["rows"]) >= 2
