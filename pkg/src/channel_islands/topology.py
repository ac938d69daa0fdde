"""Streamline topology: critical points, level sets, the singular streamline and islands."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .contours import marching_squares, point_in_polygon
from .errors import DegenerateHessian, NoIsland, WindowExit
from .geometry import TWO_PI
from .interp import FieldInterpolant
from .operators import ScalarField
from .steady import ShearProfile

log = logging.getLogger(__name__)

HESS_REL = 1e-6
GRAD_ZERO_REL = 1e-10
POLISH_TOL = 1e-9
DEFAULT_DELTAS = (0.05, 0.1, 0.2, 0.3)
WINDOW_SAMPLES = 161
WINDOW_CAP = 0.5


@dataclass
class CriticalPoint:
    x: float
    y: float
    value: float
    kind: str
    hxx: float
    hxy: float
    hyy: float

    @property
    def det(self) -> float:
        return self.hxx * self.hyy - self.hxy**2

    def to_dict(self) -> dict:
        return {
            "x": self.x, "y": self.y, "value": self.value, "kind": self.kind,
            "hxx": self.hxx, "hxy": self.hxy, "hyy": self.hyy, "det": self.det,
        }


def _interp(f):
    return f if isinstance(f, FieldInterpolant) else FieldInterpolant(f)


def curvature_scale(field: ScalarField | FieldInterpolant) -> float:
    """Largest second derivative of the interpolant over the grid nodes."""
    it = _interp(field)
    g = it.grid
    h = it.hessian(g.X, g.Y)
    return float(max(np.max(np.abs(c)) for c in h))


def classify(hxx: float, hxy: float, hyy: float, kappa: float) -> str:
    """Morse type from the Hessian, with degeneracy threshold tau*kappa, tau = 1e-6*kappa."""
    D = hxx * hyy - hxy**2
    tau = HESS_REL * kappa
    if abs(D) <= tau * kappa:
        return "degenerate"
    if D < 0:
        return "saddle"
    return "max" if hyy < 0 else "min"


def _polish(it: FieldInterpolant, x: float, y: float, gscale: float):
    sh = it.grid.shape
    for _ in range(50):
        gx, gy = it.gradient(x, y)
        if np.hypot(gx, gy) <= POLISH_TOL * gscale:
            return x, y, True
        hxx, hxy, hyy = it.hessian(x, y)
        step = np.linalg.lstsq(np.array([[hxx, hxy], [hxy, hyy]]), -np.array([gx, gy]), rcond=1e-12)[0]
        x, y = x + step[0], y + step[1]
        if not (sh.bottom(x) < y < sh.top(x)):
            return x, y, False
    gx, gy = it.gradient(x, y)
    return x, y, bool(np.hypot(gx, gy) <= POLISH_TOL * gscale)


def find_critical_points(field: ScalarField) -> list[CriticalPoint]:
    """Cells where both partials change sign, polished by Newton and classified."""
    it = FieldInterpolant(field)
    g = field.grid
    gx, gy = it.gradient(g.X, g.Y)
    gscale = float(max(np.max(np.abs(gx)), np.max(np.abs(gy)), 1e-300))
    kappa = curvature_scale(it)

    def changes(a):
        tol = GRAD_ZERO_REL * max(np.max(np.abs(a)), 1e-300)
        corners = np.stack([a[:, :-1], a[:, 1:], np.roll(a, -1, axis=0)[:, :-1], np.roll(a, -1, axis=0)[:, 1:]])
        hi, lo = corners.max(axis=0), corners.min(axis=0)
        return ((hi > tol) & (lo < -tol)) | (np.min(np.abs(corners), axis=0) <= tol)

    cand = np.argwhere(changes(gx) & changes(gy))
    delta = max(g.dx, float(np.max(g.T)) * g.ds)
    pts: list[CriticalPoint] = []
    for i, j in cand:
        x0 = (i + 0.5) * g.dx
        y0 = float(g.physical(x0, (j + 0.5) * g.ds))
        x, y, ok = _polish(it, x0, y0, gscale)
        if not ok:
            continue
        x = float(np.mod(x, TWO_PI))
        if any(np.hypot(min(abs(x - p.x), TWO_PI - abs(x - p.x)), y - p.y) < 2 * delta for p in pts):
            continue
        hxx, hxy, hyy = (float(v) for v in it.hessian(x, y))
        pts.append(CriticalPoint(x, float(y), float(it.value(x, y)), classify(hxx, hxy, hyy, kappa), hxx, hxy, hyy))
    pts.sort(key=lambda p: (p.x, p.y))
    return pts


@dataclass
class Contour:
    """Polyline in physical coordinates; x is unwrapped along the curve."""

    points: np.ndarray
    level: float
    closed: bool
    winding: int

    @property
    def kind(self) -> str:
        if not self.closed:
            return "open"
        return "contractible" if self.winding == 0 else "wrapping"

    @property
    def height(self) -> float:
        return float(np.ptp(self.points[:, 1]))

    @property
    def width(self) -> float:
        return float(np.ptp(self.points[:, 0]))

    def closure_gap(self) -> float:
        d = self.points[-1] - self.points[0]
        d[0] -= self.winding * TWO_PI
        return float(np.hypot(*d))


def trace_level_set(field: ScalarField, level: float) -> list[Contour]:
    """Level set of the nodal field by periodic marching squares on the (x, s) lattice."""
    g = field.grid
    out = []
    for ch in marching_squares(field.values, level, periodic=True):
        ix, js = ch["points"][:, 0], ch["points"][:, 1]
        x = ix * g.dx
        y = g.shape.bottom(x) + js * g.ds * g.shape.thickness(x)
        out.append(Contour(np.column_stack([x, y]), float(level), ch["closed"], ch["winding"]))
    return out


@dataclass
class StreamlineCurve:
    x: np.ndarray
    y: np.ndarray
    dydx: np.ndarray
    y0: float
    window: float
    residual: float

    @property
    def distance(self) -> float:
        return float(np.max(np.abs(self.y - self.y0)))

    @property
    def c1_distance(self) -> float:
        return max(self.distance, float(np.max(np.abs(self.dydx))))

    def to_dict(self) -> dict:
        return {"y0": self.y0, "window": self.window, "distance": self.distance,
                "c1_distance": self.c1_distance, "residual": self.residual}


def stagnation_window(profile: ShearProfile, y0: float, shape=None) -> float:
    """Half-width around y0 where psi0'' keeps its sign and half its magnitude."""
    ref = abs(float(profile.evaluate(y0, 2)))
    ys = np.linspace(profile.y_bottom, profile.y_top, 2001)
    d2 = profile.evaluate(ys, 2)
    good = (np.sign(d2) == np.sign(profile.evaluate(y0, 2))) & (np.abs(d2) >= 0.5 * ref)
    w = WINDOW_CAP
    bad = ys[~good]
    if bad.size:
        w = min(w, float(np.min(np.abs(bad - y0))))
    walls = [profile.y_bottom, profile.y_top]
    if shape is not None:
        xs = np.linspace(0, TWO_PI, 512, endpoint=False)
        walls = [float(np.max(shape.bottom(xs))), float(np.min(shape.top(xs)))]
    w = min(w, y0 - walls[0], walls[1] - y0)
    others = [abs(s - y0) for s in profile.stagnation if abs(s - y0) > 1e-12]
    if others:
        w = min(w, 0.5 * min(others))
    return w


def singular_streamline(field: ScalarField, profile: ShearProfile, y0: float | None = None) -> StreamlineCurve:
    """Per column, the root of d(psi)/dy closest to the base stagnation level."""
    y0 = profile.y0 if y0 is None else y0
    it = FieldInterpolant(field)
    g = field.grid
    w = stagnation_window(profile, y0, g.shape)
    gscale = max(float(np.max(np.abs(it.dy(g.X, g.Y)))), 1e-300)
    ys = np.empty(g.Nx)
    for i, x in enumerate(g.x):
        f = lambda y: float(it.dy(x, y))
        grid_y = np.linspace(y0 - w, y0 + w, 65)
        vals = it.dy(np.full_like(grid_y, x), grid_y)
        roots = []
        for k in range(len(grid_y) - 1):
            if vals[k] == 0.0:
                roots.append(grid_y[k])
            elif vals[k] * vals[k + 1] < 0:
                roots.append(brentq(f, grid_y[k], grid_y[k + 1], xtol=1e-14, rtol=1e-14))
        if not roots:
            raise WindowExit(f"no root of psi_y within |y - y0| < {w:.3g} at x = {x:.4f}")
        ys[i] = min(roots, key=lambda r: abs(r - y0))
    hxx, hxy, hyy = it.hessian(g.x, ys)
    dydx = -hxy / hyy
    res = float(np.max(np.abs(it.dy(g.x, ys)))) / gscale
    return StreamlineCurve(g.x.copy(), ys, dydx, float(y0), float(w), res)


@dataclass
class LevelStats:
    delta: float
    level: float
    contour: Contour
    height: float
    width: float
    C1: float
    C2: float

    def to_dict(self) -> dict:
        return {"delta": self.delta, "level": self.level, "height": self.height, "width": self.width,
                "C1": self.C1, "C2": self.C2, "n_points": int(len(self.contour.points))}


@dataclass
class IslandReport:
    center: CriticalPoint
    reference: float
    reference_kind: str
    epsilon: float
    levels: list = field(default_factory=list)
    separatrix: float | None = None

    @property
    def delta_levels(self) -> list:
        return [lv.delta for lv in self.levels]

    @property
    def max_height(self) -> float:
        return max((lv.height for lv in self.levels), default=0.0)

    def by_delta(self, delta: float) -> LevelStats | None:
        for lv in self.levels:
            if abs(lv.delta - delta) < 1e-12:
                return lv
        return None

    def to_dict(self) -> dict:
        return {
            "center": self.center.to_dict(),
            "reference": self.reference,
            "reference_kind": self.reference_kind,
            "epsilon": self.epsilon,
            "separatrix": self.separatrix,
            "levels": [lv.to_dict() for lv in self.levels],
        }


def _polish_vertices(it: FieldInterpolant, pts: np.ndarray, level: float, steps: int = 4) -> np.ndarray:
    x, y = pts[:, 0].copy(), pts[:, 1].copy()
    for _ in range(steps):
        gx, gy = it.gradient(x, y)
        n2 = gx**2 + gy**2
        r = it.value(x, y) - level
        ok = n2 > 0
        x[ok] -= r[ok] * gx[ok] / n2[ok]
        y[ok] -= r[ok] * gy[ok] / n2[ok]
    return np.column_stack([x, y])


def _window_contour(it: FieldInterpolant, c: CriticalPoint, level: float, wx: float, wy: float):
    """Closed contour around the centre on a local Cartesian sampling, or None / 'open'."""
    sh = it.grid.shape
    xs = np.linspace(c.x - wx, c.x + wx, WINDOW_SAMPLES)
    ys = np.linspace(c.y - wy, c.y + wy, WINDOW_SAMPLES)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = it.value(X, Y)
    found_open = False
    for ch in marching_squares(V, level):
        p = ch["points"]
        phys = np.column_stack([c.x - wx + p[:, 0] * (xs[1] - xs[0]), c.y - wy + p[:, 1] * (ys[1] - ys[0])])
        inside = point_in_polygon(c.x, c.y, phys) if ch["closed"] else False
        if ch["closed"] and inside:
            return phys
        if not ch["closed"]:
            found_open = True
    if not (np.all(sh.bottom(xs) < c.y - wy) and np.all(sh.top(xs) > c.y + wy)):
        return None
    return "open" if found_open else None


def detect_islands(
    field: ScalarField,
    profile: ShearProfile,
    delta_list=DEFAULT_DELTAS,
    y0: float | None = None,
    points: list[CriticalPoint] | None = None,
) -> list[IslandReport]:
    """Islands around nondegenerate extrema near the singular streamline.

    Centres are maxima when F(c0) < 0 and minima when F(c0) > 0.  Each
    delta in ``delta_list`` gives the level ref + (1 - delta)(psi_c - ref)
    with ref = psi0(y0); when psi_c lies on the wrong side of ref the
    nearest saddle value is used as reference instead.
    """
    y0 = profile.y0 if y0 is None else y0
    c0 = float(profile.evaluate(y0))
    Fc0 = float(profile.F(c0))
    if Fc0 == 0.0:
        raise NoIsland("F(c0) = 0: degenerate stagnation level")
    want = "max" if Fc0 < 0 else "min"
    sigma = 1.0 if Fc0 < 0 else -1.0
    g = field.grid
    eps = g.shape.epsilon
    pts = find_critical_points(field) if points is None else points
    w = stagnation_window(profile, y0, g.shape)
    band = [p for p in pts if abs(p.y - y0) < w]
    centers = [p for p in band if p.kind == want]
    saddles = [p for p in band if p.kind == "saddle"]
    if not centers:
        raise NoIsland("no nondegenerate extremum near the stagnation level")
    it = FieldInterpolant(field)
    reports = []
    for c in centers:
        sep = None
        if saddles:
            near = min(saddles, key=lambda s: min(abs(s.x - c.x), TWO_PI - abs(s.x - c.x)))
            sep = near.value
        ref, kind = c0, "base"
        if sigma * (c.value - ref) <= 0:
            if sep is None:
                continue
            ref, kind = sep, "separatrix"
        rep = IslandReport(c, ref, kind, eps, separatrix=sep)
        gap = abs(c.value - ref)
        wall_room = 0.9 * min(c.y - float(np.max(g.shape.bottom(g.x))), float(np.min(g.shape.top(g.x))) - c.y)
        for delta in sorted(delta_list):
            level = ref + (1 - delta) * (c.value - ref)
            dpsi = delta * gap
            wx = min(2.5 * np.sqrt(2 * dpsi / max(abs(c.hxx), 1e-300)), np.pi)
            wy = min(2.5 * np.sqrt(2 * dpsi / max(abs(c.hyy), 1e-300)), wall_room)
            poly = None
            for _ in range(8):
                poly = _window_contour(it, c, level, wx, wy)
                if isinstance(poly, np.ndarray):
                    break
                if wx >= np.pi and wy >= wall_room:
                    poly = None
                    break
                wx, wy = min(1.6 * wx, np.pi), min(1.6 * wy, wall_room)
            if not isinstance(poly, np.ndarray):
                continue
            poly = _polish_vertices(it, poly, level)
            con = Contour(poly, float(level), True, 0)
            q = ((poly[:, 1] - c.y) ** 2 + eps * (poly[:, 0] - c.x) ** 2) / (delta * eps) if eps > 0 else np.array([np.nan])
            rep.levels.append(LevelStats(float(delta), float(level), con, con.height, con.width,
                                         float(np.min(q)), float(np.max(q))))
        if rep.levels:
            reports.append(rep)
    if not reports:
        raise NoIsland("no closed contractible level set around any candidate centre")
    return reports


def max_island_height(reports: list[IslandReport]) -> float:
    return max(r.max_height for r in reports)


def hessian_diagnostic(field: ScalarField, pt: CriticalPoint, epsilon: float) -> dict:
    """Hessian entries at an extremum, scaled by epsilon where they vanish with it."""
    if pt.kind in ("degenerate", "saddle"):
        raise DegenerateHessian(f"point of kind {pt.kind} is not a nondegenerate extremum")
    hxx, hxy, hyy = (float(v) for v in FieldInterpolant(field).hessian(pt.x, pt.y))
    D = hxx * hyy - hxy**2
    return {"H_yy": hyy, "H_xx_over_eps": hxx / epsilon, "H_xy_over_eps": hxy / epsilon,
            "D_over_eps": D / epsilon, "epsilon": epsilon}


def hessian_drift(coarse: dict, fine: dict, limit: float = 0.5) -> tuple[float, bool]:
    """Relative change of D/eps between two epsilon values, and whether it exceeds ``limit``."""
    a, b = coarse["D_over_eps"], fine["D_over_eps"]
    drift = abs(b - a) / max(abs(a), 1e-300)
    return drift, drift > limit
