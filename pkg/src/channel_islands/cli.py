"""Command-line entry point: ``channel-islands <command> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig, load_config
from .errors import AssertionFailed, ChannelIslandsError
from .expansion import compute_remainder, fixed_point_solve, gamma0_trace
from .geometry import build_grid
from .harness import _write_csv, prepare, run_appendixA, run_genericity, run_sweep
from .oracles import couette_dyphi_mid, couette_phi, flat_lambda1, mode_ode_solve
from .operators import smallest_eigenvalue
from .steady import solve_perturbed
from .svg import emit_svg
from .topology import find_critical_points

COMMANDS = ("solve", "expand", "sweep", "genericity", "appendix-a", "fixed-point", "oracle")


def _dirs(out: Path) -> Path:
    for sub in ("plots", "fields"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(cfg: ExperimentConfig, out: Path) -> int:
    base = prepare(cfg.shape, cfg.F, cfg.Nx, cfg.Ns)
    psi = solve_perturbed(cfg.shape, cfg.F, cfg.Nx, cfg.Ns, base.profile)
    _dirs(out)
    io.write_field_bin(psi, out / "fields" / "psi.bin")
    _write_csv(out / "results.csv", psi.info["newton"], ["iteration", "residual", "step"])
    pts = find_critical_points(psi)
    emit_svg(psi, None, [], out / "plots" / "solve.svg", pts)
    io.write_json({"config": cfg.to_dict(), "profile": base.profile.to_dict(), "newton": psi.info["newton"],
                   "critical_points": [p.to_dict() for p in pts]}, out / "summary.json")
    return 0


def cmd_expand(cfg: ExperimentConfig, out: Path) -> int:
    base = prepare(cfg.shape, cfg.F, cfg.Nx, cfg.Ns)
    psi = solve_perturbed(cfg.shape, cfg.F, cfg.Nx, cfg.Ns, base.profile)
    rep = compute_remainder(psi, base.profile, base.phi, cfg.shape)
    _dirs(out)
    io.write_field_bin(base.phi, out / "fields" / "phi.bin")
    io.write_field_bin(rep.r_eps, out / "fields" / "remainder.bin")
    if rep.phi_on_gamma is not None:
        io.write_trace_csv(rep.phi_on_gamma.x, rep.phi_on_gamma.values, out / "results.csv")
    emit_svg(base.phi, None, [], out / "plots" / "phi.svg")
    io.write_json({"config": cfg.to_dict(), "expansion": rep.to_dict(), "phi_residual": base.phi.info.get("residual")},
                  out / "summary.json")
    return 0


def cmd_fixed_point(cfg: ExperimentConfig, out: Path) -> int:
    base = prepare(cfg.shape, cfg.F, cfg.Nx, cfg.Ns)
    psi = solve_perturbed(cfg.shape, cfg.F, cfg.Nx, cfg.Ns, base.profile)
    rep = compute_remainder(psi, base.profile, base.phi, cfg.shape)
    fp = fixed_point_solve(psi.grid, cfg.F, base.profile, base.phi)
    _dirs(out)
    rows = [{"iteration": k + 1, "norm": n, "difference": d} for k, (n, d) in enumerate(zip(fp.iterate_norms[1:], fp.diff_norms))]
    _write_csv(out / "results.csv", rows, ["iteration", "norm", "difference"])
    io.write_field_bin(fp.u_eps, out / "fields" / "u.bin")
    io.write_field_bin(fp.eta_eps, out / "fields" / "eta.bin")
    emit_svg(fp.r_eps, None, [], out / "plots" / "remainder.svg")
    summary = fp.to_dict()
    summary["newton_gap"] = float(np.max(np.abs(fp.r_eps.values - rep.r_eps.values)))
    io.write_json({"config": cfg.to_dict(), "fixed_point": summary}, out / "summary.json")
    return 0


def cmd_oracle(cfg: ExperimentConfig, out: Path) -> int:
    h, g = cfg.shape.h, cfg.shape.g
    values = {
        "couette_phi_0_0": float(couette_phi(h, g, 0.0, 0.0)),
        "couette_dyphi_mid_0": float(couette_dyphi_mid(h, 0.0, g)),
        "couette_dyphi_mid_odd_0": float(couette_dyphi_mid(h, 0.0)),
        "mode1_phi_0": mode_ode_solve(1, lambda y: 0 * y).phi_y0,
        "mode2_phi_0": mode_ode_solve(2, lambda y: 0 * y).phi_y0,
        "lambda1_exact": flat_lambda1(),
        "lambda1_grid": smallest_eigenvalue(build_grid(cfg.shape.base(), cfg.Nx, cfg.Ns)),
    }
    if cfg.F.is_linear and cfg.F.poly == (-1.0,) and cfg.shape.c_G == cfg.shape.c_H == 0.0:
        base = prepare(cfg.shape, cfg.F, cfg.Nx, cfg.Ns)
        grid = base.phi.grid
        exact = couette_phi(h, g, grid.X, grid.Y)
        values["phi_rel_error"] = float(np.max(np.abs(base.phi.values - exact)) / max(np.max(np.abs(exact)), 1e-300))
        tr = gamma0_trace(base.phi, base.profile)
        values["trace_oscillation"] = tr.oscillation
    _dirs(out)
    _write_csv(out / "results.csv", [{"name": k, "value": v} for k, v in sorted(values.items())], ["name", "value"])
    io.write_json({"config": cfg.to_dict(), "oracle": values}, out / "summary.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="channel-islands", description="Steady channel flows, expansions and islands.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="TOML experiment file")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int)
        if name == "appendix-a":
            sp.add_argument("--proposition", choices=("ctnbottombdry", "islandscritical", "all"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = cfg.with_overrides(seed=args.seed, jobs=args.jobs)
    out = args.out or Path(cfg.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "expand":
            return cmd_expand(cfg, out)
        if args.command == "fixed-point":
            return cmd_fixed_point(cfg, out)
        if args.command == "oracle":
            return cmd_oracle(cfg, out)
        if args.command == "sweep":
            sw = run_sweep(cfg, out)
            return 0 if sw.status == "ok" else 1
        if args.command == "genericity":
            run_genericity(cfg, out)
            return 0
        if args.command == "appendix-a":
            run_appendixA(cfg, out, args.proposition)
            return 0
    except AssertionFailed as exc:
        io.write_json({"error": str(exc), "dump": exc.dump}, out / "failure.json")
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 1
    except ChannelIslandsError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
