"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""
import time

import numpy as np
import pytest

from channel_islands.config import ExperimentConfig
from channel_islands.expansion import membership_B0
from channel_islands.geometry import BoundaryShape, FourierSeries, build_grid
from channel_islands.harness import analyze_epsilon, prepare, run_appendixA, run_genericity, run_sweep
from channel_islands.interp import FieldInterpolant
from channel_islands.operators import smallest_eigenvalue
from channel_islands.oracles import couette_dyphi_mid, couette_phi, flat_lambda1
from channel_islands.steady import solve_perturbed
from channel_islands.topology import singular_streamline

from conftest import ACCEPTANCE, COUETTE, SINE_F
from test_operators import WAVY, manufactured_orders

EPSILONS = (0.04, 0.02, 0.01, 0.005)
N = (128, 129)
STREAMLINE_FLOOR = 1e-3

SHAPES = {
    "cos1": BoundaryShape.flat(h=FourierSeries.cosine(1)),
    "cos2": BoundaryShape.flat(h=FourierSeries.cosine(2)),
    "mix": BoundaryShape.flat(h=FourierSeries.from_modes([(1, 0.6, 0.2)]),
                              g=FourierSeries.from_modes([(2, 0.3, -0.4)])),
}
NONLINEARITIES = {"couette": COUETTE, "sine": SINE_F}


def report(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


@pytest.fixture(scope="module")
def sweeps():
    """Epsilon sweeps for every (F, shape) pair, with timing."""
    t0 = time.perf_counter()
    out = {}
    for fname, F in NONLINEARITIES.items():
        for sname, shape in SHAPES.items():
            cfg = ExperimentConfig(shape=shape, F=F, Nx=N[0], Ns=N[1], epsilons=EPSILONS)
            base = prepare(shape, F, *N)
            out[fname, sname] = (base, run_sweep(cfg, None, base))
    return out, time.perf_counter() - t0


def test_criterion_01_couette_oracle():
    t0 = time.perf_counter()
    shape = SHAPES["cos1"]
    errs = []
    for n in (32, 64, 128):
        base = prepare(shape, COUETTE, n, n + 1)
        g = base.phi.grid
        exact = couette_phi(shape.h, shape.g, g.X, g.Y)
        errs.append(np.max(np.abs(base.phi.values - exact)) / np.max(np.abs(exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    dt = time.perf_counter() - t0
    ok = errs[-1] <= 5e-4 and abs(orders[-1] - 2.0) <= 0.2 and dt <= 10
    report(1, "Couette oracle", ok, f"rel err {errs[-1]:.2e} (<= 5e-4), order {orders[-1]:.3f}, {dt:.1f}s")
    assert ok


@pytest.mark.parametrize("fname", ["couette", "sine"])
def test_criterion_02_remainder_order(fname):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(shape=SHAPES["cos1"], F=NONLINEARITIES[fname], Nx=N[0], Ns=N[1], epsilons=EPSILONS)
    sw = run_sweep(cfg, None)
    slope = sw.remainder_fit["slope"]
    dt = time.perf_counter() - t0
    ok = 1.7 <= slope <= 2.3 and dt <= 120
    report(2, f"remainder order ({fname})", ok, f"slope {slope:.3f} in [1.7, 2.3], {dt:.1f}s")
    assert ok


def test_criterion_03_island_height_scaling(sweeps):
    data, dt = sweeps
    slopes = {}
    members = {}
    for (fname, sname), (base, sw) in data.items():
        slopes[fname, sname] = sw.slope
        members[fname, sname] = membership_B0(base.shape, base.F, base.profile, phi=base.phi)[0]
    ok = all(s is not None and 0.45 <= s <= 0.55 for s in slopes.values()) and all(members.values()) and dt <= 600
    detail = ", ".join(f"{f}/{s} {v:.3f}" for (f, s), v in slopes.items())
    report(3, "island height ~ eps^1/2", ok, f"{detail}; all in B0: {all(members.values())}; {dt:.1f}s")
    assert ok


def _match(prev, islands):
    out = []
    for isl in islands:
        d = lambda r: min(abs(r["center"]["x"] - isl["center"]["x"]), 2 * np.pi - abs(r["center"]["x"] - isl["center"]["x"]))
        out.append((min(prev, key=d), isl))
    return out


def test_criterion_04_ellipse_geometry(sweeps):
    data, _ = sweeps
    c_ratio, growth = [], []
    for _, sw in data.values():
        recs = sorted(sw.records, key=lambda r: -r["epsilon"])
        for rec in recs:
            for isl in rec["islands"]:
                for lv in isl["levels"]:
                    if lv["delta"] in (0.1, 0.2):
                        c_ratio.append(lv["C2"] / lv["C1"])
        for a, b in zip(recs[:-1], recs[1:]):
            for ia, ib in _match(a["islands"], b["islands"]):
                for d in (0.1, 0.2):
                    la = next(lv for lv in ia["levels"] if lv["delta"] == d)
                    lb = next(lv for lv in ib["levels"] if lv["delta"] == d)
                    growth.append((lb["width"] / lb["height"]) / (la["width"] / la["height"]))
    ok = bool(c_ratio) and max(c_ratio) <= 10 and bool(growth) and 1.2 <= min(growth) and max(growth) <= 1.7
    report(4, "ellipse geometry", ok,
           f"max C2/C1 {max(c_ratio):.3f} (<= 10), width/height growth per halving in [{min(growth):.3f}, {max(growth):.3f}]")
    assert ok


def _streamline_ratios(shape):
    base = prepare(shape, COUETTE, *N)
    it = FieldInterpolant(base.phi)
    xs = base.phi.grid.x
    limit = float(np.max(np.abs(it.dy(xs, np.zeros_like(xs)))))
    ratios = []
    for eps in EPSILONS:
        psi = solve_perturbed(shape.with_epsilon(eps), COUETTE, *N, base.profile)
        ratios.append(singular_streamline(psi, base.profile).distance / eps)
    return limit, np.array(ratios)


def test_criterion_05_singular_streamline():
    lines, ok = [], True
    cases = {
        "h=cos x, g=0": (SHAPES["cos1"], 1 / (2 * np.sinh(1))),
        "h=cos x, g=-cos x": (BoundaryShape.flat(h=FourierSeries.cosine(1), g=FourierSeries.cosine(1, -1.0)), 1 / np.sinh(1)),
    }
    for label, (shape, oracle) in cases.items():
        limit, ratios = _streamline_ratios(shape)
        rel = np.abs(ratios / limit - 1)
        # errors shrink under halving until they reach the grid floor
        shrinking = np.all((np.diff(rel) < 0) | (rel[1:] < STREAMLINE_FLOOR))
        case_ok = rel.max() <= 0.10 and shrinking and abs(limit / oracle - 1) <= 1e-3
        ok &= bool(case_ok)
        lines.append(f"{label}: ratio {ratios[-1]:.4f} vs limit {limit:.4f} (closed form {oracle:.4f}), "
                     f"rel err {' '.join(f'{v:.1e}' for v in rel)}")
    assert abs(float(couette_dyphi_mid(FourierSeries.cosine(1), 0.0)) - 1 / np.sinh(1)) < 1e-14
    report(5, "singular streamline", ok, "; ".join(lines))
    assert ok


@pytest.mark.parametrize("fname", ["couette", "sine"])
def test_criterion_06_laminarity_condition(fname):
    cfg = ExperimentConfig(F=NONLINEARITIES[fname], Nx=N[0], Ns=N[1], samples=20, complement=5, seed=2024)
    s = run_genericity(cfg, None, epsilon=0.02)
    ok = (s["n_Bprime"] == 20 and s["min_oscillation_Bprime"] > 1e-3 and s["max_oscillation_complement"] <= 1e-8
          and s["island_fraction_Bprime"] == 1.0)
    report(6, f"laminarity condition ({fname})", ok,
           f"complement osc {s['max_oscillation_complement']:.1e} (<= 1e-8), B' min osc {s['min_oscillation_Bprime']:.3f}, "
           f"islands in {100 * s['island_fraction_Bprime']:.0f}% of {s['n_Bprime']}")
    assert ok


def test_criterion_07_contraction():
    base = prepare(SHAPES["cos1"], SINE_F, *N)
    rec = analyze_epsilon(base, 0.02, (0.1,), fixed_point=True).record
    ok = rec["stages"]["contraction"] and rec["contraction"] <= 0.5 and rec["fixed_point_gap"] <= 1e-8
    report(7, "Picard contraction", ok,
           f"factor {rec['contraction']:.2e} (<= 0.5), gap to Newton remainder {rec['fixed_point_gap']:.1e} (<= 1e-8)")
    assert ok


@pytest.mark.parametrize("fname", ["couette", "sine"])
def test_criterion_08_flat_bottom_wavy_top(fname):
    cfg = ExperimentConfig(F=NONLINEARITIES[fname], Nx=N[0], Ns=N[1], epsilons=(0.05,) + EPSILONS)
    s = run_appendixA(cfg, None, "ctnbottombdry")["ctnbottombdry"]
    wavy = [r["n_islands"] for r in s["rows"] if r["case"] == "wavy_top"]
    flat = [r["n_islands"] for r in s["rows"] if r["case"] == "flat"]
    ok = s["passed"] and min(wavy) >= 1 and max(flat) == 0
    report(8, f"flat bottom / wavy top ({fname})", ok, f"wavy-top islands {wavy}, flat-flat islands {flat}")
    assert ok


def test_criterion_09_operator_validation():
    flat_orders, _ = manufactured_orders(BoundaryShape.flat())
    wavy_orders, _ = manufactured_orders(WAVY)
    lam = smallest_eigenvalue(build_grid(BoundaryShape.flat(), 64, 65))
    ok = abs(flat_orders[-1] - 2) <= 0.2 and abs(wavy_orders[-1] - 2) <= 0.2 and abs(lam / flat_lambda1() - 1) <= 0.01
    report(9, "operator validation", ok,
           f"orders flat {flat_orders[-1]:.3f}, eps=0.1 {wavy_orders[-1]:.3f}; lambda1 {lam:.5f} vs {flat_lambda1():.5f}")
    assert ok


def test_criterion_10_determinism(tmp_path):
    from channel_islands.cli import main

    toml = tmp_path / "exp.toml"
    toml.write_text('seed = 11\n[shape]\nh = [[1, 1.0, 0.0]]\n[grid]\nNx = 64\nNs = 65\n'
                    '[sweep]\nepsilons = [0.04, 0.02, 0.01, 0.005]\nsamples = 4\ncomplement = 1\n')
    runs = {}
    for tag, jobs in (("a", "1"), ("b", "1"), ("c", "2")):
        for cmd in ("sweep", "genericity"):
            out = tmp_path / tag / cmd
            assert main([cmd, "--config", str(toml), "--out", str(out), "--jobs", jobs]) == 0
            runs[tag, cmd] = {p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.suffix in (".csv", ".json")}
    same = all(runs["a", c] == runs[t, c] for c in ("sweep", "genericity") for t in ("b", "c"))
    nfiles = sum(len(v) for k, v in runs.items() if k[0] == "a")
    report(10, "determinism", same, f"{nfiles} CSV/JSON files byte-identical across 3 runs (jobs 1, 1, 2)")
    assert same
