"""Base shear profiles and fully nonlinear steady states.

The shear profile solves psi'' = F(psi) on [bottom, top] with Dirichlet
values c_G, c_H.  It is computed twice: by finite differences (the discrete
base state used on grids) and by shooting with a high-order ODE integrator,
which also continues the profile smoothly past both walls.  The continuation
provides initial guesses on perturbed domains and the extension of psi0 used
for remainders.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (
    MultipleStagnation,
    NewtonDiverged,
    NoConvergence,
    NoStagnation,
    SingularSystem,
    StabilityViolated,
)
from .geometry import BoundaryShape, MappedGrid, build_grid
from .nonlinearity import Nonlinearity
from .numerics import interp_1d
from .operators import STABILITY_MARGIN, ScalarField, assemble_laplacian, interior_mask, smallest_eigenvalue

log = logging.getLogger(__name__)

SHEAR_TOL = 1e-10
STEADY_TOL = 1e-9
MAX_NEWTON = 50
MIN_STEP = 1.0 / 1024
ARMIJO_C = 1e-4
STAGNATION_XTOL = 1e-12
STAGNATION_SAMPLES = 4001
WALL_SLOPE_MIN = 1e-8
EXTENSION_MARGIN = 1.0
STABILITY_SAMPLES = 1000


def check_stability(F: Nonlinearity, value_range, lambda1: float) -> bool:
    """True iff min F' over a 1000-point sample of the range exceeds -lambda1 + margin."""
    lo, hi = float(min(value_range)), float(max(value_range))
    t = np.linspace(lo, hi, STABILITY_SAMPLES)
    return bool(np.min(F.prime(t)) > -lambda1 + STABILITY_MARGIN)


def _bracket(values, margin: float = 0.1) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    pad = margin * max(hi - lo, abs(hi), abs(lo), 1e-12)
    return lo - pad, hi + pad


def _fd_shear(F: Nonlinearity, c_G: float, c_H: float, yb: float, yt: float, Ny: int, init=None):
    """Finite-difference Newton for psi'' = F(psi); returns (nodes, values, history)."""
    y = np.linspace(yb, yt, Ny)
    h = y[1] - y[0]
    psi = np.linspace(c_G, c_H, Ny) if init is None else np.array(init, dtype=float)
    psi[0], psi[-1] = c_G, c_H

    def residual(p):
        return (p[2:] - 2 * p[1:-1] + p[:-2]) / h**2 - F(p[1:-1])

    R = residual(psi)
    history = [float(np.max(np.abs(R)))]
    for _ in range(MAX_NEWTON):
        if history[-1] <= SHEAR_TOL:
            return y, psi, history
        n = Ny - 2
        ab = np.zeros((3, n))
        ab[0, 1:] = 1 / h**2
        ab[1] = -2 / h**2 - F.prime(psi[1:-1])
        ab[2, :-1] = 1 / h**2
        try:
            d = sla.solve_banded((1, 1), ab, -R)
        except (sla.LinAlgError, ValueError) as exc:
            raise SingularSystem(f"shear Jacobian solve failed: {exc}") from exc
        t = 1.0
        while True:
            trial = psi.copy()
            trial[1:-1] += t * d
            Rt = residual(trial)
            rn = float(np.max(np.abs(Rt)))
            if rn <= (1 - ARMIJO_C * t) * history[-1] or rn <= SHEAR_TOL:
                break
            t *= 0.5
            if t < MIN_STEP:
                raise NewtonDiverged("shear Newton line search failed", history[-1], history)
        psi, R = trial, Rt
        history.append(rn)
    if history[-1] <= SHEAR_TOL:
        return y, psi, history
    raise NewtonDiverged("shear Newton did not converge", history[-1], history)


def _rhs(F):
    def f(y, u):
        return [u[1], F(u[0]), u[3], F.prime(u[0]) * u[2]]

    return f


_IVP = dict(method="DOP853", rtol=1e-12, atol=1e-14)


def _shoot(F, c_G, c_H, yb, yt, p0):
    """Newton on the initial slope so that the ODE hits c_H at yt."""
    p = p0
    for _ in range(30):
        sol = solve_ivp(_rhs(F), (yb, yt), [c_G, p, 0.0, 1.0], **_IVP)
        miss = sol.y[0, -1] - c_H
        if abs(miss) <= 1e-13 * max(1.0, abs(c_H)):
            return p
        dp = miss / sol.y[2, -1]
        p -= dp
        if abs(dp) <= 1e-15 * max(1.0, abs(p)):
            return p
    raise NoConvergence("shooting refinement of the shear profile did not converge")


@dataclass(eq=False)
class ShearProfile:
    """Solved shear psi0(y) with stagnation points and a smooth continuation."""

    F: Nonlinearity
    c_G: float
    c_H: float
    y: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    stagnation: tuple
    y_bottom: float = -1.0
    y_top: float = 1.0
    history: list = field(default_factory=list)
    _dense: tuple = field(default=(), repr=False)
    _discrete: dict = field(default_factory=dict, repr=False)

    def evaluate(self, y, nu: int = 0) -> np.ndarray:
        """psi0^(nu)(y) from the continued ODE solution, nu in 0..3."""
        y = np.asarray(y, dtype=float)
        lower, upper = self._dense
        lo_lim = lower.t_min if lower is not None else self.y_bottom
        if np.any(y < lo_lim - 1e-12) or np.any(y > upper.t_max + 1e-12):
            raise ValueError("evaluation outside the continued shear profile")
        flat = y.reshape(-1)
        state = np.empty((2, flat.size))
        below = flat < self.y_bottom
        if np.any(below):
            state[:, below] = lower(flat[below])[:2]
        if np.any(~below):
            state[:, ~below] = upper(flat[~below])[:2]
        psi, dpsi = state[0].reshape(y.shape), state[1].reshape(y.shape)
        if nu == 0:
            return psi
        if nu == 1:
            return dpsi
        if nu == 2:
            return self.F(psi)
        if nu == 3:
            return self.F.prime(psi) * dpsi
        raise ValueError("nu must be 0..3")

    def on_nodes(self, Ns: int) -> np.ndarray:
        """Discrete finite-difference shear on Ns uniform nodes (cached)."""
        if Ns not in self._discrete:
            y = np.linspace(self.y_bottom, self.y_top, Ns)
            _, v, _ = _fd_shear(self.F, self.c_G, self.c_H, self.y_bottom, self.y_top, Ns, self.evaluate(y))
            self._discrete[Ns] = v
        return self._discrete[Ns]

    def extend(self, y, Ns: int) -> np.ndarray:
        """psi0 consistent with the Ns-node discrete profile, continued past the walls.

        The continued ODE solution is corrected by the (smooth, O(ds^2))
        difference between the discrete and exact profiles, interpolated and
        extrapolated with degree-4 Lagrange stencils.  At the nodes this
        reproduces the discrete profile exactly.
        """
        y = np.asarray(y, dtype=float)
        nodes = np.linspace(self.y_bottom, self.y_top, Ns)
        gap = self.on_nodes(Ns) - self.evaluate(nodes)
        return self.evaluate(y) + interp_1d(nodes, gap, y)

    @property
    def y0(self) -> float:
        if not self.stagnation:
            raise NoStagnation("shear profile has no stagnation point")
        if len(self.stagnation) > 1:
            raise MultipleStagnation(f"{len(self.stagnation)} stagnation points", self.stagnation)
        return self.stagnation[0]

    @property
    def c0(self) -> float:
        return float(self.evaluate(self.y0))

    @property
    def Fc0(self) -> float:
        return float(self.F(self.c0))

    @property
    def lambda1(self) -> float:
        return (np.pi / (self.y_top - self.y_bottom)) ** 2

    def to_dict(self) -> dict:
        return {
            "c_G": self.c_G,
            "c_H": self.c_H,
            "stagnation": list(self.stagnation),
            "wall_slopes": [float(self.derivs[0]), float(self.derivs[-1])],
            "newton_residuals": self.history,
        }


def _find_stagnation(profile_dense, yb: float, yt: float) -> tuple:
    ys = np.linspace(yb, yt, STAGNATION_SAMPLES)
    d = profile_dense(ys)[1]
    fn = lambda t: float(profile_dense(t)[1])
    roots = []
    wall = 1e-9 * (yt - yb)
    for i in range(len(ys) - 1):
        if d[i] == 0.0:
            roots.append(ys[i])
        elif d[i] * d[i + 1] < 0:
            roots.append(brentq(fn, ys[i], ys[i + 1], xtol=STAGNATION_XTOL, rtol=4 * np.finfo(float).eps))
    return tuple(float(r) for r in roots if yb + wall < r < yt - wall)


def solve_shear(
    F: Nonlinearity,
    c_G: float,
    c_H: float,
    Ny: int = 257,
    y_bottom: float = -1.0,
    y_top: float = 1.0,
    enforce_stability: bool = True,
) -> ShearProfile:
    """Shear profile psi0'' = F(psi0), psi0(bottom) = c_G, psi0(top) = c_H."""
    if Ny < 8:
        raise ValueError("Ny must be >= 8")
    lam1 = (np.pi / (y_top - y_bottom)) ** 2
    if enforce_stability and not check_stability(F, _bracket([c_G, c_H]), lam1):
        raise StabilityViolated("F' <= -lambda1 on the boundary value bracket")
    y, v, hist = _fd_shear(F, c_G, c_H, y_bottom, y_top, Ny)
    if enforce_stability and not check_stability(F, _bracket(v), lam1):
        raise StabilityViolated("F' <= -lambda1 on the range of the shear profile")

    p0 = float(np.gradient(v, y, edge_order=2)[0])
    p = _shoot(F, c_G, c_H, y_bottom, y_top, p0)
    m = EXTENSION_MARGIN * (y_top - y_bottom) / 2
    upper = solve_ivp(_rhs(F), (y_bottom, y_top + m), [c_G, p, 0.0, 1.0], dense_output=True, **_IVP).sol
    lower = solve_ivp(_rhs(F), (y_bottom, y_bottom - m), [c_G, p, 0.0, 1.0], dense_output=True, **_IVP).sol

    stag = _find_stagnation(upper, y_bottom, y_top)
    derivs = upper(y)[1]
    if min(abs(derivs[0]), abs(derivs[-1])) < WALL_SLOPE_MIN:
        log.warning("shear profile has a near-zero wall slope (%.2e, %.2e)", derivs[0], derivs[-1])
    if len(stag) > 1:
        log.warning("shear profile has %d stagnation points: %s", len(stag), stag)
    prof = ShearProfile(F, float(c_G), float(c_H), y, v, derivs, stag, y_bottom, y_top, hist, (lower, upper))
    prof._discrete[Ny] = v
    return prof


def profile_for_shape(F: Nonlinearity, shape: BoundaryShape, Ny: int = 257, enforce_stability: bool = True):
    """Shear profile on the flat base channel of ``shape``."""
    if not shape.is_flat_base():
        raise ValueError("shear profiles need a flat base channel (constant G and H)")
    return solve_shear(F, shape.c_G, shape.c_H, Ny, shape.G.cos[0], shape.H.cos[0], enforce_stability)


def shear_initial_guess(grid: MappedGrid, profile: ShearProfile) -> ScalarField:
    """psi0 composed with the vertical map, continued beyond the base walls."""
    return ScalarField(profile.evaluate(grid.Y), grid)


def base_state(grid: MappedGrid, profile: ShearProfile) -> ScalarField:
    """Discrete base state on an unperturbed flat grid (x-independent)."""
    return ScalarField(np.tile(profile.on_nodes(grid.Ns), (grid.Nx, 1)), grid)


def solve_steady(
    grid: MappedGrid,
    F: Nonlinearity,
    init: ScalarField,
    enforce_stability: bool = True,
    tol: float = STEADY_TOL,
    max_iter: int = MAX_NEWTON,
) -> ScalarField:
    """Damped Newton for the discrete Laplacian(psi) = F(psi) with wall values c_G, c_H.

    The convergence log (iteration, residual, step) is stored in
    ``result.info["newton"]``.
    """
    sh = grid.shape
    op = assemble_laplacian(grid)
    inner = interior_mask(grid)
    psi = np.array(init.values, dtype=float)
    psi[:, 0] = sh.c_G
    psi[:, -1] = sh.c_H

    def residual(p):
        R = op.apply(p) - F(p)
        R[~inner] = 0.0
        return R

    lam1 = None
    R = residual(psi)
    rn = float(np.max(np.abs(R)))
    entries = [{"iteration": 0, "residual": rn, "step": 0.0}]
    history = [rn]
    for it in range(1, max_iter + 1):
        if rn <= tol:
            break
        if enforce_stability:
            lo, hi = _bracket(psi)
            if np.min(F.prime(np.linspace(lo, hi, STABILITY_SAMPLES))) < 0:
                lam1 = lam1 if lam1 is not None else smallest_eigenvalue(grid)
                if not check_stability(F, (lo, hi), lam1):
                    raise StabilityViolated(f"inf F' <= -lambda1 = {-lam1:.4g} on the iterate range")
        J = op.matrix - sp.diags((F.prime(psi) * inner).ravel())
        try:
            d = spla.splu(J.tocsc()).solve(-R.ravel()).reshape(psi.shape)
        except RuntimeError as exc:
            raise SingularSystem(f"Newton Jacobian is singular: {exc}") from exc
        t = 1.0
        while True:
            trial = psi + t * d
            Rt = residual(trial)
            rt = float(np.max(np.abs(Rt)))
            if np.isfinite(rt) and (rt <= (1 - ARMIJO_C * t) * rn or rt <= tol):
                break
            t *= 0.5
            if t < MIN_STEP:
                raise NewtonDiverged(f"line search failed at iteration {it}", rn, history)
        psi, R, rn = trial, Rt, rt
        history.append(rn)
        entries.append({"iteration": it, "residual": rn, "step": t})
    if rn > tol:
        raise NewtonDiverged(f"no convergence in {max_iter} iterations", rn, history)
    return ScalarField(psi, grid, {"newton": entries})


def solve_perturbed(
    shape: BoundaryShape,
    F: Nonlinearity,
    Nx: int,
    Ns: int,
    profile: ShearProfile,
    enforce_stability: bool = True,
    max_halvings: int = 6,
) -> ScalarField:
    """Steady state on the perturbed channel, with epsilon continuation on failure.

    A direct Newton solve from the continued shear profile is tried first.
    If it diverges, epsilon is approached through a geometric ladder
    eps * 2^-m, ..., eps, reusing each solution (in (x, s) coordinates) as
    the next initial guess.
    """
    grid = build_grid(shape, Nx, Ns)
    try:
        return solve_steady(grid, F, shear_initial_guess(grid, profile), enforce_stability)
    except NewtonDiverged:
        if shape.epsilon == 0 or max_halvings == 0:
            raise
    ladder = [shape.epsilon * 2.0**-m for m in range(max_halvings, -1, -1)]
    g0 = build_grid(shape.with_epsilon(ladder[0]), Nx, Ns)
    cur = solve_steady(g0, F, shear_initial_guess(g0, profile), enforce_stability)
    for eps in ladder[1:]:
        gk = build_grid(shape.with_epsilon(eps), Nx, Ns)
        cur = solve_steady(gk, F, ScalarField(cur.values, gk), enforce_stability)
    cur.info["ladder"] = ladder
    return cur
