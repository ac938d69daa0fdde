"""First-order boundary-perturbation correction, remainder and its fixed-point form.

Conventions: the walls are ``bottom = G - eps*g`` and ``top = H + eps*h``.
Differentiating the wall conditions in eps gives the Dirichlet data for phi,

    phi(x, H) = -h(x) psi0'(H),      phi(x, G) = +g(x) psi0'(G),

and phi solves (Laplacian - F'(psi0)) phi = 0 on the base channel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, NotContracting
from .geometry import COEF_TOL, BoundaryShape, MappedGrid, build_grid
from .nonlinearity import Nonlinearity
from .numerics import TrigPolynomial, interp_columns, one_sided_derivative
from .operators import ScalarField, assemble_helmholtz, interior_mask, solve_dirichlet
from .steady import ShearProfile, base_state

PICARD_TOL = 1e-12
CONTRACTION_LIMIT = 0.95
NOISE_FLOOR = 1e-13
TRACE_OVERSAMPLE = 16


def wall_slopes(psi0: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """d(psi0)/dy at the bottom and top walls by fourth-order one-sided differences."""
    g = psi0.grid
    ds = g.ds
    bot = one_sided_derivative(psi0.values, ds, "left") / g.T
    top = one_sided_derivative(psi0.values, ds, "right") / g.T
    return bot, top


def first_order_data(shape: BoundaryShape, grid: MappedGrid, psi0: ScalarField):
    """(top, bottom) Dirichlet samples for phi at the x-nodes."""
    bot, top = wall_slopes(psi0)
    return -shape.h(grid.x) * top, shape.g(grid.x) * bot


def solve_first_order(base_grid: MappedGrid, F: Nonlinearity, psi0: ScalarField, shape: BoundaryShape,
                      check_stability: bool = True) -> ScalarField:
    """phi with (Laplacian - F'(psi0)) phi = 0 and the wall data above."""
    if base_grid.shape.epsilon != 0:
        raise ValueError("phi lives on the unperturbed grid")
    op = assemble_helmholtz(base_grid, F.prime(psi0.values))
    top, bot = first_order_data(shape, base_grid, psi0)
    phi = solve_dirichlet(op, 0.0, top, bot, check_stability=check_stability)
    res = op.apply(phi)[interior_mask(base_grid)]
    phi.info["residual"] = float(np.max(np.abs(res))) if res.size else 0.0
    return phi


def extend_phi(phi: ScalarField, grid: MappedGrid) -> np.ndarray:
    """phi at the physical nodes of ``grid`` by degree-4 Lagrange interpolation per column.

    Points beyond the base walls use the end stencils, i.e. polynomial
    extrapolation in y.
    """
    base = phi.grid
    if grid.Nx != base.Nx:
        raise GridMismatch(f"Nx differs: {grid.Nx} vs {base.Nx}")
    dy = base.T[:, None] * base.ds
    u = (grid.Y - base.bottom[:, None]) / dy
    return interp_columns(phi.values, u, degree=4)


def _extended_base(grid: MappedGrid, profile: ShearProfile, Ns_base: int) -> np.ndarray:
    return profile.extend(grid.Y, Ns_base)


def holder_surrogate(r: ScalarField) -> float:
    """Largest first-difference quotient of r (x periodic, s scaled to physical y)."""
    g = r.grid
    v = r.values
    dxq = np.abs(np.roll(v, -1, axis=0) - v) / g.dx
    dsq = np.abs(np.diff(v, axis=1)) / (g.T[:, None] * g.ds)
    return float(max(dxq.max(), dsq.max()))


@dataclass
class Gamma0Trace:
    x: np.ndarray
    values: np.ndarray
    y0: float
    oscillation: float
    maxima: list = field(default_factory=list)
    sign: int = 1

    def to_dict(self) -> dict:
        return {
            "y0": self.y0,
            "oscillation": self.oscillation,
            "sign": self.sign,
            "maxima": [dict(m) for m in self.maxima],
        }


def _clean_spectrum(samples: np.ndarray, tol: float = COEF_TOL) -> np.ndarray:
    c = np.fft.rfft(samples)
    scale = np.max(np.abs(c))
    if scale > 0:
        c[np.abs(c) < tol * scale] = 0.0
    return np.fft.irfft(c, samples.size)


def trace_extrema(x: np.ndarray, values: np.ndarray, sign: int = 1, rel_tol: float = 1e-9) -> list[dict]:
    """Global maxima of sign*trace on the circle, located spectrally and polished by Newton."""
    tp = TrigPolynomial(_clean_spectrum(sign * values))
    n = TRACE_OVERSAMPLE * x.size
    xs = 2 * np.pi * np.arange(n) / n
    fs = tp(xs)
    top = fs.max()
    scale = max(np.max(np.abs(fs)), 1e-300)
    left, right = np.roll(fs, 1), np.roll(fs, -1)
    cand = np.where((fs >= left) & (fs >= right) & (fs >= top - 1e-3 * scale))[0]
    found = []
    for i in cand:
        xc = xs[i]
        for _ in range(60):
            d2 = tp(xc, 2)
            if d2 >= 0:
                break
            step = tp(xc, 1) / d2
            xc -= step
            if abs(step) < 1e-15:
                break
        xc = float(xc % (2 * np.pi))
        if 2 * np.pi - xc < 1e-9:
            xc = 0.0
        found.append((float(tp(xc)), xc))
    best = max(v for v, _ in found)
    out = []
    for v, xc in sorted(found, key=lambda t: t[1]):
        if v < best - rel_tol * scale:
            continue
        if any(min(abs(xc - m["x"]), 2 * np.pi - abs(xc - m["x"])) < 2 * np.pi / n for m in out):
            continue
        out.append({"x": xc, "value": sign * v, "second": sign * float(tp(xc, 2))})
    return out


def gamma0_trace(phi: ScalarField, profile: ShearProfile, sign: int | None = None) -> Gamma0Trace:
    """phi(x_i, y0) by cubic interpolation in s, with oscillation and global extrema.

    ``sign`` picks maxima (+1) or minima (-1); by default the island-centre
    sign -sign(F(c0)) is used.
    """
    y0 = profile.y0
    g = phi.grid
    u = np.broadcast_to(((y0 - g.bottom) / (g.T * g.ds))[:, None], (g.Nx, 1))
    vals = interp_columns(phi.values, u, degree=3)[:, 0]
    if sign is None:
        sign = -1 if profile.Fc0 > 0 else 1
    osc = float(vals.max() - vals.min())
    return Gamma0Trace(g.x.copy(), vals, y0, osc, trace_extrema(g.x, vals, sign), sign)


def membership_B0(shape: BoundaryShape, F: Nonlinearity, profile: ShearProfile, Nx: int = 64, Ns: int = 65,
                  phi: ScalarField | None = None, tol: float = COEF_TOL) -> tuple[bool, dict]:
    """Whether the Gamma0 trace of phi has a nonzero, nondegenerate extremum.

    Returns (member, witness) where the witness lists the located extrema.
    """
    if phi is None:
        grid = build_grid(shape.base(), Nx, Ns)
        phi = solve_first_order(grid, F, base_state(grid, profile), shape)
    tr = gamma0_trace(phi, profile)
    norm = phi.max_norm()
    witness = {"maxima": tr.maxima, "phi_norm": norm, "sign": tr.sign, "oscillation": tr.oscillation}
    if norm == 0.0 or np.max(np.abs(tr.values)) <= tol * norm:
        return False, witness
    ok = all(tr.sign * m["second"] < -tol * norm for m in tr.maxima)
    return bool(ok), witness


@dataclass
class ExpansionReport:
    phi: ScalarField
    r_eps: ScalarField
    epsilon: float
    r_max: float
    r_holder: float
    phi_on_gamma: Gamma0Trace | None = None

    @property
    def norms(self) -> dict:
        return {"max": self.r_max, "holder": self.r_holder}

    def to_dict(self) -> dict:
        d = {"epsilon": self.epsilon, "r_max": self.r_max, "r_holder": self.r_holder}
        if self.phi_on_gamma is not None:
            d["gamma0"] = self.phi_on_gamma.to_dict()
        return d


def compute_remainder(psi_eps: ScalarField, profile: ShearProfile, phi: ScalarField,
                      shape: BoundaryShape | None = None) -> ExpansionReport:
    """r = psi_eps - ext(psi0) - eps * ext(phi) on the perturbed grid."""
    grid = psi_eps.grid
    shape = shape or grid.shape
    if grid.Nx != phi.grid.Nx:
        raise GridMismatch(f"Nx differs: {grid.Nx} vs {phi.grid.Nx}")
    eps = grid.shape.epsilon
    r = psi_eps.values - _extended_base(grid, profile, phi.grid.Ns) - eps * extend_phi(phi, grid)
    rf = ScalarField(r, grid)
    trace = None
    if len(profile.stagnation) == 1:
        trace = gamma0_trace(phi, profile)
    return ExpansionReport(phi, rf, eps, rf.max_norm(), holder_surrogate(rf), trace)


def wall_remainders(grid: MappedGrid, profile: ShearProfile, phi: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """(r_top, r_bottom): wall values minus ext(psi0) + eps * ext(phi) on the perturbed walls."""
    sh = grid.shape
    eps = sh.epsilon
    base = _extended_base(grid, profile, phi.grid.Ns)
    ph = extend_phi(phi, grid)
    top = sh.c_H - base[:, -1] - eps * ph[:, -1]
    bot = sh.c_G - base[:, 0] - eps * ph[:, 0]
    return top, bot


def eta_interpolant(grid: MappedGrid, profile: ShearProfile, phi: ScalarField) -> ScalarField:
    """Linear blend in s of the two wall remainders."""
    top, bot = wall_remainders(grid, profile, phi)
    s = grid.s[None, :]
    return ScalarField(top[:, None] * s + bot[:, None] * (1 - s), grid)


@dataclass
class FixedPointTrace:
    iterate_norms: list
    diff_norms: list
    contraction: float
    converged: bool
    u_eps: ScalarField
    eta_eps: ScalarField
    beta_eps: ScalarField
    epsilon: float

    @property
    def r_eps(self) -> ScalarField:
        return self.u_eps + self.eta_eps

    @property
    def in_ball(self) -> bool:
        return all(n <= self.epsilon + PICARD_TOL for n in self.iterate_norms)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "iterate_norms": self.iterate_norms,
            "diff_norms": self.diff_norms,
            "contraction": self.contraction,
            "converged": self.converged,
            "eta_max": self.eta_eps.max_norm(),
            "u_max": self.u_eps.max_norm(),
        }


def fixed_point_solve(grid: MappedGrid, F: Nonlinearity, profile: ShearProfile, phi: ScalarField,
                      max_iter: int = 200, eps_max: float = 0.2, check_stability: bool = True) -> FixedPointTrace:
    """Picard iteration for the interior remainder u = r - eta.

    With L = Laplacian - F'(psi0) on the perturbed grid, r solves
    L r = N(r), N collecting the quadratic Taylor remainder of F and the
    discrete residuals of psi0 and phi there.  Writing r = u + eta and
    beta = L eta, the iteration is v <- L_D^{-1} (N(v + eta) - beta) with
    zero wall data, started from v = 0.
    """
    eps = grid.shape.epsilon
    if eps > eps_max:
        raise ValueError(f"epsilon {eps} above the configured threshold {eps_max}")
    Ns0 = phi.grid.Ns
    psi0 = _extended_base(grid, profile, Ns0)
    ph = eps * extend_phi(phi, grid)
    fp0 = F.prime(psi0)
    L = assemble_helmholtz(grid, fp0)
    inner = interior_mask(grid)
    eta = eta_interpolant(grid, profile, phi)
    beta = np.where(inner, L.apply(eta), 0.0)
    base_res = F(psi0) - L.apply(psi0) - fp0 * psi0  # F(psi0) - Laplacian psi0
    lin_res = -L.apply(ph)

    def N(v):
        r = v + eta.values
        q = F(psi0 + ph + r) - F(psi0) - fp0 * (ph + r)
        return np.where(inner, q + base_res + lin_res, 0.0)

    v = np.zeros((grid.Nx, grid.Ns))
    norms, diffs = [0.0], []
    converged = False
    for k in range(max_iter):
        new = solve_dirichlet(L, N(v) - beta, 0.0, 0.0, check_stability=check_stability and k == 0).values
        diffs.append(float(np.max(np.abs(new - v))))
        norms.append(float(np.max(np.abs(new))))
        v = new
        if diffs[-1] <= PICARD_TOL:
            converged = True
            break
    ratios = [diffs[i + 1] / diffs[i] for i in range(1, len(diffs) - 1) if diffs[i] > NOISE_FLOOR and diffs[i + 1] > NOISE_FLOOR]
    factor = max(ratios) if ratios else 0.0
    trace = FixedPointTrace(norms, diffs, factor, converged, ScalarField(v, grid), eta, ScalarField(beta, grid), eps)
    if factor > CONTRACTION_LIMIT:
        raise NotContracting(f"empirical contraction factor {factor:.3f} > {CONTRACTION_LIMIT}", factor)
    return trace
