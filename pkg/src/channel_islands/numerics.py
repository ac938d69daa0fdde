"""Small 1D helpers shared by the solvers: stencils and column interpolation."""
from __future__ import annotations

import numpy as np

# f'(0) from f(0..4), fourth order
_ONE_SIDED = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


def one_sided_derivative(values: np.ndarray, h: float, side: str) -> np.ndarray:
    """Fourth-order one-sided first derivative along the last axis at one end."""
    v = np.asarray(values)
    if side == "left":
        return v[..., :5] @ _ONE_SIDED / h
    if side == "right":
        return -(v[..., ::-1][..., :5] @ _ONE_SIDED) / h
    raise ValueError(side)


def lagrange_weights(u: np.ndarray, n: int, degree: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Stencil start indices and weights for interpolating at fractional index u.

    Nodes are 0..n-1; targets outside [0, n-1] reuse the end stencil, which
    turns the interpolant into a polynomial extrapolation.
    """
    u = np.asarray(u, dtype=float)
    m = degree + 1
    centre = np.rint(u) if degree % 2 == 0 else np.floor(u)
    start = np.clip(centre.astype(int) - degree // 2, 0, n - m)
    t = u[..., None] - (start[..., None] + np.arange(m))
    w = np.ones(u.shape + (m,))
    for k in range(m):
        for q in range(m):
            if q != k:
                w[..., k] *= t[..., q] / (k - q)
    return start, w


def interp_columns(values: np.ndarray, u: np.ndarray, degree: int = 4) -> np.ndarray:
    """Interpolate each row of ``values`` (shape (Nx, Ns)) at fractional indices u (Nx, M)."""
    values = np.asarray(values)
    n = values.shape[-1]
    start, w = lagrange_weights(u, n, degree)
    idx = start[..., None] + np.arange(degree + 1)
    rows = np.arange(values.shape[0])[:, None, None]
    return np.sum(values[rows, idx] * w, axis=-1)


def interp_1d(nodes_y: np.ndarray, values: np.ndarray, y, degree: int = 4) -> np.ndarray:
    """Piecewise Lagrange interpolation on uniform 1D nodes."""
    y = np.asarray(y, dtype=float)
    h = nodes_y[1] - nodes_y[0]
    u = (y - nodes_y[0]) / h
    start, w = lagrange_weights(u, len(nodes_y), degree)
    idx = start[..., None] + np.arange(degree + 1)
    return np.sum(values[idx] * w, axis=-1)


def periodic_spectral_derivative(samples: np.ndarray, nu: int = 1) -> np.ndarray:
    """nu-th derivative of uniformly sampled 2pi-periodic data via FFT."""
    n = samples.shape[-1]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    c = np.fft.rfft(samples)
    if n % 2 == 0 and nu % 2 == 1:
        c[..., -1] = 0.0
    return np.fft.irfft((1j * k) ** nu * c, n)


class TrigPolynomial:
    """Real trigonometric interpolant of periodic samples, evaluable anywhere."""

    def __init__(self, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        c = np.fft.rfft(samples) / n
        self.k = np.arange(c.size)
        weights = np.full(c.size, 2.0)
        weights[0] = 1.0
        if n % 2 == 0:
            weights[-1] = 1.0
        self.a = weights * c.real
        self.b = -weights * c.imag

    def __call__(self, x, nu: int = 0):
        x = np.asarray(x, dtype=float)
        kx = np.multiply.outer(x, self.k)
        ph = nu * np.pi / 2
        kn = self.k.astype(float) ** nu
        if nu == 0:
            kn = np.ones_like(kn)
        return (np.cos(kx + ph) * (kn * self.a) + np.sin(kx + ph) * (kn * self.b)).sum(axis=-1)
