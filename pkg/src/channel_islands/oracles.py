"""Independent references: closed forms and brute-force scans.

Nothing here calls the grid solvers, so these can serve as test oracles for
them.  Couette formulas use the outward-displacement convention, in which
phi(x, 1) = h(x) and phi(x, -1) = g(x) for psi0 = (1 - y^2)/2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import SingularSystem
from .geometry import TWO_PI, FourierSeries
from .interp import FieldInterpolant
from .operators import ScalarField
from .topology import CriticalPoint


@dataclass(frozen=True)
class FourierData:
    """Complex coefficients c_n of sum_n c_n e^{inx}, conjugate-symmetric for real data."""

    coeffs: dict

    def __post_init__(self):
        for n, c in self.coeffs.items():
            if abs(self.coeffs.get(-n, 0.0) - np.conj(c)) > 1e-12 * max(1.0, abs(c)):
                raise ValueError(f"coefficients at n = {n} and -n are not conjugate")

    @classmethod
    def from_series(cls, f: FourierSeries) -> "FourierData":
        return cls(f.complex_coefficients())

    @classmethod
    def coerce(cls, f) -> "FourierData":
        if isinstance(f, FourierData):
            return f
        if f is None:
            return cls({0: 0j})
        return cls.from_series(f)

    def get(self, n: int) -> complex:
        return complex(self.coeffs.get(n, 0.0))

    @property
    def modes(self) -> list[int]:
        return sorted(self.coeffs)


def _modes(*data: FourierData) -> list[int]:
    return sorted(set().union(*(d.coeffs.keys() for d in data)))


def couette_phi(h, g, x, y):
    """phi for F = -1 from the sinh/cosh series; the n = 0 term is its affine limit."""
    h, g = FourierData.coerce(h), FourierData.coerce(g)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(x.shape, dtype=complex)
    for n in _modes(h, g):
        hn, gn = h.get(n), g.get(n)
        if n == 0:
            out += (hn + gn) / 2 + (hn - gn) * y / 2
        else:
            m = abs(n)
            odd = (hn - gn) / (2 * np.sinh(m)) * np.sinh(m * y)
            even = (hn + gn) / (2 * np.cosh(m)) * np.cosh(m * y)
            out += (odd + even) * np.exp(1j * n * x)
    return out.real


def couette_dyphi(h, g, x, y):
    """d(phi)/dy of :func:`couette_phi`."""
    h, g = FourierData.coerce(h), FourierData.coerce(g)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(x.shape, dtype=complex)
    for n in _modes(h, g):
        hn, gn = h.get(n), g.get(n)
        if n == 0:
            out += (hn - gn) / 2
        else:
            m = abs(n)
            odd = (hn - gn) * m / (2 * np.sinh(m)) * np.cosh(m * y)
            even = (hn + gn) * m / (2 * np.cosh(m)) * np.sinh(m * y)
            out += (odd + even) * np.exp(1j * n * x)
    return out.real


def couette_dyphi_mid(h, x, g=None):
    """d(phi)/dy at y = 0.

    Without ``g`` the bottom data is taken as g = -h (odd phi), for which the
    value is sum_{n != 0} |n| h_n / sinh|n| e^{inx}.  With ``g`` it is the
    derivative of the general series.
    """
    if g is not None:
        return couette_dyphi(h, g, x, 0.0)
    h = FourierData.coerce(h)
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    for n in h.modes:
        if n != 0:
            out += abs(n) * h.get(n) / np.sinh(abs(n)) * np.exp(1j * n * x)
    return out.real


def couette_trace_second_derivative(h, g, x, y0: float = 0.0):
    """d^2/dx^2 of phi(x, y0) for the Couette series."""
    h, g = FourierData.coerce(h), FourierData.coerce(g)
    out = 0j
    for n in _modes(h, g):
        if n == 0:
            continue
        m = abs(n)
        hn, gn = h.get(n), g.get(n)
        c = (hn - gn) / (2 * np.sinh(m)) * np.sinh(m * y0) + (hn + gn) / (2 * np.cosh(m)) * np.cosh(m * y0)
        out += -(n**2) * c * np.exp(1j * n * np.asarray(x, dtype=float))
    return np.real(out)


def flat_lambda1(half_width: float = 1.0) -> float:
    """Principal Dirichlet eigenvalue of the periodic strip |y| < half_width."""
    return (np.pi / (2 * half_width)) ** 2


def helmholtz_unit_profile(y, c: float = 1.0, half_width: float = 1.0):
    """u'' - c u = 1 on |y| < w with u(+-w) = 0, for c > 0."""
    k = np.sqrt(c)
    return (np.cosh(k * np.asarray(y)) / np.cosh(k * half_width) - 1.0) / c


def mode_ode_closed_form(k: float, y):
    """phi'' = k^2 phi, phi(-1) = 0, phi(1) = 1."""
    return np.sinh(k * (np.asarray(y) + 1)) / np.sinh(2 * k)


@dataclass
class ModeSolution:
    y: np.ndarray
    phi: np.ndarray
    y0: float
    phi_y0: float


def mode_ode_solve(k: int, fprime, Ny: int = 257, y0: float = 0.0, y_bottom: float = -1.0,
                   y_top: float = 1.0) -> ModeSolution:
    """Second-order FD solve of phi'' - (k^2 + F'(psi0(y))) phi = 0, phi(bottom) = 0, phi(top) = 1.

    ``fprime`` is a callable of y or an array of samples on the Ny nodes.
    """
    y = np.linspace(y_bottom, y_top, Ny)
    h = y[1] - y[0]
    q = np.asarray(fprime(y) if callable(fprime) else fprime, dtype=float) * np.ones(Ny)
    lam1 = (np.pi / (y_top - y_bottom)) ** 2
    if np.min(k**2 + q) <= -lam1 + 1e-6:
        raise SingularSystem("k^2 + F' violates the stability margin")
    n = Ny - 2
    ab = np.zeros((3, n))
    ab[0, 1:] = 1 / h**2
    ab[1] = -2 / h**2 - (k**2 + q[1:-1])
    ab[2, :-1] = 1 / h**2
    rhs = np.zeros(n)
    rhs[-1] = -1 / h**2
    try:
        inner = sla.solve_banded((1, 1), ab, rhs)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularSystem(str(exc)) from exc
    phi = np.concatenate([[0.0], inner, [1.0]])
    # cubic interpolation at y0
    i = int(np.clip(np.floor((y0 - y_bottom) / h) - 1, 0, Ny - 4))
    val = float(np.polyval(np.polyfit(y[i:i + 4] - y0, phi[i:i + 4], 3), 0.0))
    return ModeSolution(y, phi, y0, val)


def brute_force_extrema(field: ScalarField, refine: int = 4, rel_tol: float = 1e-12) -> list[CriticalPoint]:
    """Strict 8-neighbour extrema and ring-sign saddles of the interpolant on a finer lattice.

    No Newton polishing: locations are lattice points.  Differences below
    ``rel_tol`` times the field range count as ties, so flat directions do
    not produce spurious extrema.
    """
    if refine not in (2, 4, 8):
        raise ValueError("refine must be 2, 4 or 8")
    g = field.grid
    it = FieldInterpolant(field)
    nx, ns = refine * g.Nx, refine * (g.Ns - 1) + 1
    xs = TWO_PI * np.arange(nx) / nx
    ss = np.linspace(0.0, 1.0, ns)
    X, S = np.meshgrid(xs, ss, indexing="ij")
    V = it.value_xs(X, S)
    tol = rel_tol * max(float(np.ptp(V)), 1e-300)

    # ring order: E, NE, N, NW, W, SW, S, SE
    offs = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
    c = V[:, 1:-1]
    diffs = np.stack([np.roll(V, -di, axis=0)[:, 1 + dj:ns - 1 + dj] - c for di, dj in offs])
    sgn = np.where(diffs > tol, 1, np.where(diffs < -tol, -1, 0))
    is_max = np.all(sgn < 0, axis=0)
    is_min = np.all(sgn > 0, axis=0)
    changes = np.zeros(c.shape, dtype=int)
    nz_prev = np.zeros(c.shape, dtype=int)
    for k in range(8):
        nz_prev = np.where(sgn[k] != 0, sgn[k], nz_prev)
    for k in range(8):
        cur = sgn[k]
        flip = (cur != 0) & (nz_prev != 0) & (cur != nz_prev)
        changes += flip
        nz_prev = np.where(cur != 0, cur, nz_prev)
    is_saddle = (changes >= 4) & ~is_max & ~is_min

    gx = (np.roll(V, -1, axis=0) - np.roll(V, 1, axis=0))[:, 1:-1]
    gs = (V[:, 2:] - V[:, :-2])
    gnorm = np.hypot(gx, gs)

    found = []
    for kind, mask in (("max", is_max), ("min", is_min), ("saddle", is_saddle)):
        cand = sorted(zip(*np.nonzero(mask)), key=lambda ij: gnorm[ij])
        kept = []
        for i, j in cand:
            if any(min(abs(i - a), nx - abs(i - a)) <= 2 and abs(j - b) <= 2 for a, b in kept):
                continue
            kept.append((i, j))
        for i, j in kept:
            x, s = xs[i], ss[j + 1]
            y = float(g.physical(x, s))
            found.append(CriticalPoint(float(x), y, float(V[i, j + 1]), kind, np.nan, np.nan, np.nan))
    found.sort(key=lambda p: (p.x, p.y))
    return found
