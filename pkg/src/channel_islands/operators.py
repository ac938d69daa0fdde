"""Finite-difference Laplacian on a mapped channel grid and Dirichlet solves.

In the computational coordinates (x, s) the physical Laplacian reads

    U_xx - 2 a U_xs + (a^2 + 1/T^2) U_ss + (a T'/T - a_x) U_s

which is discretised with centred second differences; the mixed term
uses the four diagonal neighbours, giving a compact 9-point stencil.
Rows at s = 0 and s = 1 are Dirichlet rows (unit diagonal).
"""
from __future__ import annotations

import logging
import weakref
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridMismatch, NoConvergence, SingularSystem
from .geometry import MappedGrid

log = logging.getLogger(__name__)

STABILITY_MARGIN = 1e-6
RESIDUAL_TOL = 1e-10


@dataclass(eq=False)
class ScalarField:
    """Node values ``values[i, j]`` on a MappedGrid (x index i, s index j)."""

    values: np.ndarray
    grid: MappedGrid
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.Nx, self.grid.Ns):
            raise GridMismatch(f"values shape {self.values.shape} != grid ({self.grid.Nx}, {self.grid.Ns})")

    @classmethod
    def from_function(cls, grid: MappedGrid, fn) -> "ScalarField":
        """Sample ``fn(x, y)`` at the physical node positions."""
        return cls(np.broadcast_to(fn(grid.X, grid.Y), (grid.Nx, grid.Ns)).copy(), grid)

    @classmethod
    def zeros(cls, grid: MappedGrid) -> "ScalarField":
        return cls(np.zeros((grid.Nx, grid.Ns)), grid)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @property
    def top(self) -> np.ndarray:
        return self.values[:, -1]

    @property
    def bottom(self) -> np.ndarray:
        return self.values[:, 0]

    def max_norm(self, interior_only: bool = False) -> float:
        v = self.values[:, 1:-1] if interior_only else self.values
        return float(np.max(np.abs(v)))

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same(self.grid, other.grid)
        return ScalarField(self.values - other.values, self.grid)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same(self.grid, other.grid)
        return ScalarField(self.values + other.values, self.grid)

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(c * self.values, self.grid)


def _check_same(g1: MappedGrid, g2: MappedGrid) -> None:
    if g1 is not g2 and not (g1.same_layout(g2) and np.array_equal(g1.Y, g2.Y)):
        raise GridMismatch("fields live on different grids")


@dataclass(eq=False)
class LinearOperator:
    """Sparse operator over all Nx*Ns nodes.

    ``full`` carries the complete stencil in interior rows; ``matrix`` is the
    same operator with boundary columns moved to the right-hand side, which is
    what gets factorised (and is symmetric for flat grids with x-independent
    potential).
    """

    grid: MappedGrid
    full: sp.csr_matrix
    matrix: sp.csc_matrix
    potential: np.ndarray | None = None
    symmetric: bool = False
    _lu: object = field(default=None, repr=False)

    @property
    def interior(self) -> np.ndarray:
        return interior_mask(self.grid)

    def apply(self, u: ScalarField | np.ndarray) -> np.ndarray:
        """Operator applied to node values; boundary rows return the values."""
        v = u.flat() if isinstance(u, ScalarField) else np.asarray(u).reshape(-1)
        return (self.full @ v).reshape(self.grid.Nx, self.grid.Ns)

    def factorize(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix)
            except RuntimeError as exc:
                raise SingularSystem(f"factorisation failed: {exc}") from exc
        return self._lu


@lru_cache(maxsize=64)
def _interior_mask(Nx: int, Ns: int) -> np.ndarray:
    m = np.ones((Nx, Ns), dtype=bool)
    m[:, 0] = m[:, -1] = False
    m.setflags(write=False)
    return m


def interior_mask(grid: MappedGrid) -> np.ndarray:
    return _interior_mask(grid.Nx, grid.Ns)


def stencil_coefficients(grid: MappedGrid) -> dict[str, np.ndarray]:
    """Continuous coefficients of U_xx, U_xs, U_ss, U_s at every node."""
    T = grid.T[:, None]
    T1 = grid.T_x[:, None]
    a = grid.a
    return {
        "xx": np.ones_like(a),
        "xs": -2.0 * a,
        "ss": a**2 + 1.0 / T**2,
        "s": a * T1 / T - grid.a_x,
    }


def assemble_laplacian(grid: MappedGrid) -> LinearOperator:
    return assemble_helmholtz(grid, None)


def assemble_helmholtz(grid: MappedGrid, c: ScalarField | np.ndarray | float | None) -> LinearOperator:
    """Discrete ``Laplacian - diag(c)`` with Dirichlet rows at s = 0, 1."""
    Nx, Ns = grid.Nx, grid.Ns
    dx, ds = grid.dx, grid.ds
    coef = stencil_coefficients(grid)
    if c is None:
        pot = None
    else:
        raw = c.values if isinstance(c, ScalarField) else c
        pot = np.broadcast_to(np.asarray(raw, dtype=float), (Nx, Ns)).copy()

    I, J = np.meshgrid(np.arange(Nx), np.arange(1, Ns - 1), indexing="ij")
    I, J = I.ravel(), J.ravel()
    row = I * Ns + J
    cxx = coef["xx"][I, J] / dx**2
    cxs = coef["xs"][I, J] / (4 * dx * ds)
    css = coef["ss"][I, J] / ds**2
    cs = coef["s"][I, J] / (2 * ds)
    diag = -2 * cxx - 2 * css
    if pot is not None:
        diag = diag - pot[I, J]
    Ip, Im = (I + 1) % Nx, (I - 1) % Nx
    entries = [
        (I, J, diag),
        (Ip, J, cxx),
        (Im, J, cxx),
        (I, J + 1, css + cs),
        (I, J - 1, css - cs),
        (Ip, J + 1, cxs),
        (Ip, J - 1, -cxs),
        (Im, J + 1, -cxs),
        (Im, J - 1, cxs),
    ]
    rows = np.concatenate([row] * len(entries))
    ci = np.concatenate([e[0] for e in entries])
    cj = np.concatenate([e[1] for e in entries])
    vals = np.concatenate([e[2] for e in entries])
    cols = ci * Ns + cj

    bnd = np.concatenate([np.arange(Nx) * Ns, np.arange(Nx) * Ns + Ns - 1])
    n = Nx * Ns
    full = sp.coo_matrix(
        (np.concatenate([vals, np.ones(bnd.size)]), (np.concatenate([rows, bnd]), np.concatenate([cols, bnd]))),
        shape=(n, n),
    ).tocsr()
    full.eliminate_zeros()

    keep = (cj > 0) & (cj < Ns - 1)
    matrix = sp.coo_matrix(
        (
            np.concatenate([vals[keep], np.ones(bnd.size)]),
            (np.concatenate([rows[keep], bnd]), np.concatenate([cols[keep], bnd])),
        ),
        shape=(n, n),
    ).tocsc()
    matrix.eliminate_zeros()

    flat = np.ptp(grid.T) == 0.0 and not np.any(grid.a)
    x_indep = pot is None or np.all(pot == pot[:1, :])
    return LinearOperator(grid, full, matrix, pot, bool(flat and x_indep))


def solve_dirichlet(
    op: LinearOperator,
    rhs: ScalarField | np.ndarray,
    top_values,
    bottom_values,
    check_stability: bool = True,
) -> ScalarField:
    """Solve op u = rhs in the interior with u prescribed at s = 0 and s = 1."""
    grid = op.grid
    Nx, Ns = grid.Nx, grid.Ns
    if isinstance(rhs, ScalarField):
        _check_same(rhs.grid, grid)
        rhs = rhs.values
    rhs = np.broadcast_to(np.asarray(rhs, dtype=float), (Nx, Ns))
    top = np.broadcast_to(np.asarray(top_values, dtype=float), (Nx,))
    bot = np.broadcast_to(np.asarray(bottom_values, dtype=float), (Nx,))
    if not (np.all(np.isfinite(top)) and np.all(np.isfinite(bot)) and np.all(np.isfinite(rhs))):
        raise ValueError("non-finite data passed to solve_dirichlet")
    if check_stability and op.potential is not None and np.min(op.potential) < 0:
        lam1 = smallest_eigenvalue(grid)
        if np.min(op.potential) <= -lam1 + STABILITY_MARGIN:
            raise SingularSystem(
                f"potential min {np.min(op.potential):.4g} <= -lambda1 = {-lam1:.4g}: not elliptically stable"
            )

    ub = np.zeros((Nx, Ns))
    ub[:, 0] = bot
    ub[:, -1] = top
    b = -(op.full @ ub.ravel()).reshape(Nx, Ns) + rhs
    b[:, 0] = bot
    b[:, -1] = top
    b = b.ravel()
    lu = op.factorize()
    u = lu.solve(b)
    if not np.all(np.isfinite(u)):
        raise SingularSystem("solve produced non-finite values")
    res = b - op.matrix @ u
    bn = max(np.linalg.norm(b), 1e-300)
    if np.linalg.norm(res) > RESIDUAL_TOL * bn:
        u = u + lu.solve(res)
        res = b - op.matrix @ u
        if np.linalg.norm(res) > RESIDUAL_TOL * bn:
            raise SingularSystem(f"relative residual {np.linalg.norm(res) / bn:.2e} above tolerance")
    return ScalarField(u.reshape(Nx, Ns), grid)


_EIG_CACHE: "weakref.WeakKeyDictionary[MappedGrid, float]" = weakref.WeakKeyDictionary()


def smallest_eigenvalue(grid: MappedGrid, tol: float = 1e-8, max_iter: int = 2000) -> float:
    """Principal Dirichlet eigenvalue of -Laplacian by inverse power iteration.

    Cached per grid object.
    """
    if grid in _EIG_CACHE:
        return _EIG_CACHE[grid]
    op = assemble_laplacian(grid)
    m = interior_mask(grid).ravel()
    lu = spla.splu((-op.matrix)[m][:, m].tocsc())
    v = np.tile(np.sin(np.pi * grid.s[1:-1]), grid.Nx)
    v /= np.linalg.norm(v)
    lam = np.inf
    for _ in range(max_iter):
        w = lu.solve(v)
        new = 1.0 / float(v @ w)
        v = w / np.linalg.norm(w)
        if abs(new - lam) <= tol * abs(new):
            _EIG_CACHE[grid] = new
            return new
        lam = new
    raise NoConvergence(f"inverse iteration did not converge in {max_iter} steps")
