"""Experiment configuration read from TOML files.

Example::

    kind = "sweep"
    seed = 0

    [shape]
    h = [[1, 1.0, 0.0]]      # (mode, cos coefficient, sin coefficient)
    g = []
    epsilon = 0.02
    c_G = 0.0
    c_H = 0.0

    [nonlinearity]
    poly = [-1.0]            # coefficients of 1, t, t^2, ...
    sin = [[0.3, 1.0, 0.0]]  # (amplitude, omega, phase)

    [grid]
    Nx = 128
    Ns = 129

    [sweep]
    epsilons = [0.04, 0.02, 0.01, 0.005]
    deltas = [0.05, 0.1, 0.2, 0.3]
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .geometry import BoundaryShape
from .nonlinearity import Nonlinearity
from .topology import DEFAULT_DELTAS

KINDS = ("solve", "expand", "sweep", "genericity", "appendixA", "fixedpoint")


@dataclass(frozen=True)
class ExperimentConfig:
    shape: BoundaryShape = field(default_factory=BoundaryShape)
    F: Nonlinearity = field(default_factory=lambda: Nonlinearity.constant(-1.0))
    Nx: int = 128
    Ns: int = 129
    resolutions: tuple = ()
    epsilons: tuple = (0.04, 0.02, 0.01, 0.005)
    deltas: tuple = DEFAULT_DELTAS
    seed: int = 0
    samples: int = 50
    complement: int = 5
    max_mode: int = 4
    proposition: str = "ctnbottombdry"
    fixed_point: bool = False
    out: str | None = None
    kind: str = "sweep"
    jobs: int = 1

    def __post_init__(self):
        eps = list(self.epsilons)
        if any(e <= 0 for e in eps):
            raise ValueError("epsilon list must be strictly positive")
        if len(set(eps)) != len(eps) or not (eps == sorted(eps) or eps == sorted(eps, reverse=True)):
            raise ValueError("epsilon list must be strictly sorted")
        res = [tuple(r) for r in self.resolutions]
        if res != sorted(res) or len(set(res)) != len(res):
            raise ValueError("resolutions must be ascending")
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "shape": self.shape.to_dict(),
            "nonlinearity": self.F.to_dict(),
            "grid": {"Nx": self.Nx, "Ns": self.Ns, "resolutions": [list(r) for r in self.resolutions]},
            "sweep": {
                "epsilons": list(self.epsilons),
                "deltas": list(self.deltas),
                "samples": self.samples,
                "complement": self.complement,
                "max_mode": self.max_mode,
                "proposition": self.proposition,
                "fixed_point": self.fixed_point,
            },
            "seed": self.seed,
        }


def config_from_dict(d: dict) -> ExperimentConfig:
    grid = d.get("grid", {})
    sweep = d.get("sweep", {})
    kw = dict(
        shape=BoundaryShape.from_dict(d.get("shape", {})),
        F=Nonlinearity.from_dict(d.get("nonlinearity", {"poly": [-1.0]})),
        Nx=int(grid.get("Nx", 128)),
        Ns=int(grid.get("Ns", 129)),
        resolutions=tuple(tuple(int(v) for v in r) for r in grid.get("resolutions", ())),
        seed=int(d.get("seed", 0)),
        kind=d.get("kind", "sweep"),
        out=d.get("out"),
    )
    if "epsilons" in sweep:
        kw["epsilons"] = tuple(float(e) for e in sweep["epsilons"])
    if "deltas" in sweep:
        kw["deltas"] = tuple(float(e) for e in sweep["deltas"])
    for key in ("samples", "complement", "max_mode"):
        if key in sweep:
            kw[key] = int(sweep[key])
    if "proposition" in sweep:
        kw["proposition"] = str(sweep["proposition"])
    if "fixed_point" in sweep:
        kw["fixed_point"] = bool(sweep["fixed_point"])
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(Path(path), "rb") as fh:
        return config_from_dict(tomllib.load(fh))
