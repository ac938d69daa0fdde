"""Experiment drivers: epsilon sweeps, genericity sampling and the wall-specific cases."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from . import io
from .config import ExperimentConfig
from .errors import AssertionFailed, ChannelIslandsError, NoIsland, NotContracting
from .expansion import (
    ExpansionReport,
    compute_remainder,
    fixed_point_solve,
    gamma0_trace,
    membership_B0,
    solve_first_order,
    wall_slopes,
)
from .geometry import BoundaryShape, FourierSeries, build_grid, membership_Bprime
from .nonlinearity import Nonlinearity
from .operators import ScalarField
from .steady import ShearProfile, base_state, profile_for_shape, solve_perturbed
from .svg import emit_svg
from .topology import detect_islands, find_critical_points, hessian_diagnostic, max_island_height, singular_streamline, trace_level_set

log = logging.getLogger(__name__)

MIN_FIT_POINTS = 4
CSV_COLUMNS = ["epsilon", "status", "r_max", "r_holder", "height", "y_dist", "D_over_eps", "contraction", "slope_so_far"]


@dataclass
class BaseState:
    """Everything that does not depend on epsilon."""

    shape: BoundaryShape
    F: Nonlinearity
    Nx: int
    Ns: int
    profile: ShearProfile
    psi0: ScalarField
    phi: ScalarField
    enforce_stability: bool = True


def prepare(shape: BoundaryShape, F: Nonlinearity, Nx: int, Ns: int, enforce_stability: bool = True) -> BaseState:
    profile = profile_for_shape(F, shape, Ns, enforce_stability)
    grid = build_grid(shape.base(), Nx, Ns)
    psi0 = base_state(grid, profile)
    phi = solve_first_order(grid, F, psi0, shape, check_stability=enforce_stability)
    return BaseState(shape, F, Nx, Ns, profile, psi0, phi, enforce_stability)


@dataclass
class PointResult:
    record: dict
    psi: ScalarField | None = None
    expansion: ExpansionReport | None = None
    islands: list = field(default_factory=list)
    points: list = field(default_factory=list)


def analyze_epsilon(base: BaseState, eps: float, deltas, fixed_point: bool = False, y0: float | None = None) -> PointResult:
    """Solve, expand and analyse the topology at one epsilon; failures are recorded, not raised."""
    rec = {"epsilon": float(eps), "status": "ok", "stages": {}}
    res = PointResult(rec)
    shape = base.shape.with_epsilon(eps)
    try:
        psi = solve_perturbed(shape, base.F, base.Nx, base.Ns, base.profile, base.enforce_stability)
    except ChannelIslandsError as exc:
        rec["status"] = type(exc).__name__
        rec["stages"]["newton"] = False
        return res
    res.psi = psi
    rec["stages"]["newton"] = True
    rec["newton_iterations"] = len(psi.info["newton"]) - 1
    rep = compute_remainder(psi, base.profile, base.phi, shape)
    res.expansion = rep
    rec["r_max"] = rep.r_max
    rec["r_holder"] = rep.r_holder
    if y0 is None and len(base.profile.stagnation) == 1:
        y0 = base.profile.y0
    if y0 is not None:
        try:
            sl = singular_streamline(psi, base.profile, y0)
            rec["y_dist"] = sl.distance
            rec["y_c1"] = sl.c1_distance
            rec["stages"]["streamline"] = True
        except ChannelIslandsError as exc:
            rec["stages"]["streamline"] = False
            rec["status"] = type(exc).__name__
    if fixed_point:
        try:
            fp = fixed_point_solve(psi.grid, base.F, base.profile, base.phi, check_stability=base.enforce_stability)
            rec["contraction"] = fp.contraction
            rec["fixed_point_gap"] = float(np.max(np.abs(fp.r_eps.values - rep.r_eps.values)))
            rec["stages"]["contraction"] = True
        except (NotContracting, ValueError) as exc:
            rec["contraction"] = getattr(exc, "factor", None)
            rec["stages"]["contraction"] = False
    pts = find_critical_points(psi)
    res.points = pts
    rec["critical_points"] = {k: sum(p.kind == k for p in pts) for k in ("max", "min", "saddle", "degenerate")}
    if y0 is not None:
        try:
            isl = detect_islands(psi, base.profile, deltas, y0=y0, points=pts)
            res.islands = isl
            rec["n_islands"] = len(isl)
            rec["height"] = max_island_height(isl)
            best = max(isl, key=lambda r: r.max_height)
            diag = hessian_diagnostic(psi, best.center, eps)
            rec["D_over_eps"] = diag["D_over_eps"]
            rec["H_yy"] = diag["H_yy"]
            rec["islands"] = [r.to_dict() for r in isl]
        except NoIsland:
            rec["n_islands"] = 0
    return res


def fit_slope(eps, values) -> dict | None:
    """Least-squares slope of log(values) against log(eps) with a 95% t-interval."""
    eps, values = np.asarray(eps, float), np.asarray(values, float)
    ok = np.isfinite(values) & (values > 0)
    if ok.sum() < 2:
        return None
    lr = stats.linregress(np.log(eps[ok]), np.log(values[ok]))
    n = int(ok.sum())
    half = float(stats.t.ppf(0.975, n - 2) * lr.stderr) if n > 2 else float("inf")
    return {"slope": float(lr.slope), "intercept": float(lr.intercept), "ci95": [float(lr.slope) - half, float(lr.slope) + half], "n": n}


@dataclass
class SweepRecord:
    records: list
    height_fit: dict | None
    remainder_fit: dict | None
    eps_star: float | None
    status: str

    @property
    def slope(self) -> float | None:
        return self.height_fit["slope"] if self.height_fit else None

    def to_dict(self) -> dict:
        return {
            "records": self.records,
            "height_fit": self.height_fit,
            "remainder_fit": self.remainder_fit,
            "eps_star": self.eps_star,
            "status": self.status,
        }


def _sweep_point(args):
    cfg, eps = args
    base = prepare(cfg.shape, cfg.F, cfg.Nx, cfg.Ns)
    return analyze_epsilon(base, eps, cfg.deltas, cfg.fixed_point)


def _stage_ok(rec: dict) -> bool:
    st = rec.get("stages", {})
    return bool(st.get("newton")) and st.get("streamline", True) and st.get("contraction", True)


def run_sweep(config: ExperimentConfig, out: str | Path | None = None, base: BaseState | None = None) -> SweepRecord:
    """Epsilon sweep with remainder and island-height scaling fits."""
    out = out if out is not None else config.out
    eps_list = sorted(config.epsilons, reverse=True)
    if config.jobs > 1 and base is None:
        with ProcessPoolExecutor(config.jobs) as pool:
            results = list(pool.map(_sweep_point, [(config, e) for e in eps_list]))
    else:
        base = base or prepare(config.shape, config.F, config.Nx, config.Ns)
        results = [analyze_epsilon(base, e, config.deltas, config.fixed_point) for e in eps_list]
    records = [r.record for r in results]
    good_h = [r for r in records if r.get("height")]
    good_r = [r for r in records if r.get("r_max") is not None]
    hfit = fit_slope([r["epsilon"] for r in good_h], [r["height"] for r in good_h]) if len(good_h) >= MIN_FIT_POINTS else None
    rfit = fit_slope([r["epsilon"] for r in good_r], [r["r_max"] for r in good_r]) if len(good_r) >= MIN_FIT_POINTS else None
    ok_eps = [r["epsilon"] for r in records if _stage_ok(r)]
    eps_star = max(ok_eps) if ok_eps else None
    need = min(MIN_FIT_POINTS, len(eps_list))
    status = "ok" if sum(_stage_ok(r) for r in records) >= need else "failed"
    for k, r in enumerate(records):
        sofar = [q for q in records[: k + 1] if q.get("height")]
        fit = fit_slope([q["epsilon"] for q in sofar], [q["height"] for q in sofar]) if len(sofar) >= 2 else None
        r["slope_so_far"] = fit["slope"] if fit else None
    sweep = SweepRecord(records, hfit, rfit, eps_star, status)
    if out is not None:
        _write_sweep(Path(out), config, sweep, results)
    return sweep


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow(["" if r.get(c) is None else (repr(float(r[c])) if isinstance(r.get(c), (float, np.floating)) else r[c]) for c in columns])


def _write_sweep(out: Path, config: ExperimentConfig, sweep: SweepRecord, results: list[PointResult]) -> None:
    (out / "plots").mkdir(parents=True, exist_ok=True)
    (out / "fields").mkdir(parents=True, exist_ok=True)
    _write_csv(out / "results.csv", sweep.records, CSV_COLUMNS)
    io.write_json({"config": config.to_dict(), "sweep": sweep.to_dict()}, out / "summary.json")
    for k, res in enumerate(results):
        if res.psi is None:
            continue
        tag = f"eps_{k:02d}"
        io.write_field_bin(res.psi, out / "fields" / f"psi_{tag}.bin")
        emit_svg(res.psi, None, res.islands, out / "plots" / f"{tag}.svg", res.points)


def random_series(rng: np.random.Generator, max_mode: int) -> FourierSeries:
    modes = [(k, rng.uniform(-1, 1), rng.uniform(-1, 1)) for k in range(1, max_mode + 1)]
    return FourierSeries.from_modes(modes)


def random_perturbation(rng: np.random.Generator, max_mode: int = 4) -> tuple[FourierSeries, FourierSeries]:
    """(h, g) with modes 1..max_mode, uniform coefficients, scaled so max(|h|, |g|) = 1."""
    h, g = random_series(rng, max_mode), random_series(rng, max_mode)
    scale = max(h.sup_norm(), g.sup_norm())
    return h.scaled(1 / scale), g.scaled(1 / scale)


def run_genericity(config: ExperimentConfig, out: str | Path | None = None, epsilon: float | None = None) -> dict:
    """Random (h, g) samples: class membership, trace oscillation and island detection."""
    out = out if out is not None else config.out
    rng = np.random.default_rng(config.seed)
    eps = float(epsilon if epsilon is not None else config.shape.epsilon or 0.02)
    samples = []
    for n in range(config.samples + config.complement):
        h, g = random_perturbation(rng, config.max_mode)
        complement = n >= config.samples
        if complement:
            g = (-h) + FourierSeries.constant(rng.uniform(-1, 1))
        shape = replace(config.shape, h=h, g=g, epsilon=0.0)
        base = prepare(shape, config.F, config.Nx, config.Ns)
        tr = gamma0_trace(base.phi, base.profile)
        norm = base.phi.max_norm()
        inB0, _ = membership_B0(shape, config.F, base.profile, phi=base.phi)
        rec = {
            "index": n,
            "complement": complement,
            "h": h.to_modes(),
            "g": g.to_modes(),
            "in_Bprime": membership_Bprime(shape),
            "in_B0": inB0,
            "trace_oscillation_rel": tr.oscillation / norm if norm else 0.0,
        }
        if not complement:
            pr = analyze_epsilon(base, eps, config.deltas)
            rec["n_islands"] = pr.record.get("n_islands", 0)
            rec["status"] = pr.record["status"]
        samples.append(rec)
    members = [s for s in samples if s["in_Bprime"] and not s["complement"]]
    comp = [s for s in samples if s["complement"]]
    summary = {
        "epsilon": eps,
        "seed": config.seed,
        "n_samples": config.samples,
        "n_Bprime": len(members),
        "n_B0": sum(s["in_B0"] for s in samples if not s["complement"]),
        "island_fraction_Bprime": (sum(s["n_islands"] > 0 for s in members) / len(members)) if members else None,
        "min_oscillation_Bprime": min((s["trace_oscillation_rel"] for s in members), default=None),
        "max_oscillation_complement": max((s["trace_oscillation_rel"] for s in comp), default=None),
        "samples": samples,
    }
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        io.write_json(summary, Path(out) / "summary.json")
        _write_csv(Path(out) / "results.csv", samples,
                   ["index", "complement", "in_Bprime", "in_B0", "trace_oscillation_rel", "n_islands", "status"])
    return summary


def _all_wrapping(psi: ScalarField, n_levels: int = 9) -> bool:
    lo, hi = float(psi.values.min()), float(psi.values.max())
    for lv in lo + (hi - lo) * np.arange(1, n_levels + 1) / (n_levels + 1):
        for c in trace_level_set(psi, lv):
            if c.kind == "contractible":
                return False
    return True


def _ctn_case(config: ExperimentConfig, out: Path | None) -> dict:
    h = config.shape.h if not config.shape.h.is_constant() else FourierSeries.cosine(1)
    wavy = BoundaryShape.flat(h=h, g=config.shape.g if config.shape.g.is_constant() else FourierSeries(),
                              c_G=config.shape.c_G, c_H=config.shape.c_H)
    flat = BoundaryShape.flat(c_G=config.shape.c_G, c_H=config.shape.c_H)
    rows = []
    for label, shape in (("wavy_top", wavy), ("flat", flat)):
        base = prepare(shape, config.F, config.Nx, config.Ns)
        for k, eps in enumerate(sorted(config.epsilons, reverse=True)):
            pr = analyze_epsilon(base, eps, config.deltas)
            row = {"case": label, "epsilon": eps, "n_islands": pr.record.get("n_islands", 0), "status": pr.record["status"]}
            if pr.psi is not None:
                row["all_wrapping"] = _all_wrapping(pr.psi) if label == "flat" else None
                if label == "wavy_top":
                    bot, _ = wall_slopes(pr.psi)
                    row["bottom_gradient_deviation"] = float(np.ptp(np.abs(bot)) / np.mean(np.abs(bot)))
                if out is not None:
                    emit_svg(pr.psi, None, pr.islands, out / "plots" / f"ctn_{label}_{k:02d}.svg", pr.points)
            rows.append(row)
    wavy_ok = all(r["n_islands"] >= 1 for r in rows if r["case"] == "wavy_top")
    flat_ok = all(r["n_islands"] == 0 and r.get("all_wrapping") for r in rows if r["case"] == "flat")
    return {"rows": rows, "passed": bool(wavy_ok and flat_ok)}


CRITICAL_F = Nonlinearity.linear(-16.0, -1.0)


def _critical_case(config: ExperimentConfig, out: Path | None) -> dict:
    """Shear with three stagnation levels (F(t) = -16 t - 1, outside the stable range) and wavy walls."""
    shape = BoundaryShape.flat(h=FourierSeries.cosine(1), g=FourierSeries.cosine(2, 0.5))
    base = prepare(shape, CRITICAL_F, config.Nx, config.Ns, enforce_stability=False)
    eps = min(config.epsilons)
    rows = []
    psi_shown, isl_shown, pts_shown = None, [], []
    for y0 in base.profile.stagnation:
        pr = analyze_epsilon(base, eps, config.deltas, y0=y0)
        rows.append({"y0": y0, "F_c0": float(CRITICAL_F(base.profile.evaluate(y0))),
                     "n_islands": pr.record.get("n_islands", 0), "status": pr.record["status"],
                     "centers": [r["center"]["kind"] for r in pr.record.get("islands", [])]})
        psi_shown = pr.psi
        isl_shown += pr.islands
        pts_shown = pr.points
    if out is not None and psi_shown is not None:
        emit_svg(psi_shown, None, isl_shown, out / "plots" / "critical.svg", pts_shown)
    return {"epsilon": eps, "stagnation": list(base.profile.stagnation), "rows": rows,
            "passed": len(base.profile.stagnation) >= 2 and any(r["n_islands"] >= 1 for r in rows)}


def run_appendixA(config: ExperimentConfig, out: str | Path | None = None, proposition: str | None = None) -> dict:
    """Wall-specific island propositions; raises AssertionFailed when an expectation fails."""
    out = Path(out) if out is not None else (Path(config.out) if config.out else None)
    if out is not None:
        (out / "plots").mkdir(parents=True, exist_ok=True)
    which = proposition or config.proposition
    cases = ("ctnbottombdry", "islandscritical") if which == "all" else (which,)
    summary = {}
    for case in cases:
        if case == "ctnbottombdry":
            summary[case] = _ctn_case(config, out)
        elif case == "islandscritical":
            summary[case] = _critical_case(config, out)
        else:
            raise ValueError(f"unknown proposition {case!r}")
    if out is not None:
        io.write_json(summary, out / "summary.json")
    failed = [c for c, s in summary.items() if not s["passed"]]
    if failed:
        raise AssertionFailed(f"expected islands not found for {failed}", summary)
    return summary
