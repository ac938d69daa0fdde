"""Vorticity-streamfunction relations F(t) built from a small term list."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Nonlinearity:
    """F(t) = sum_k poly[k] t^k + sum_j amp_j sin(omega_j t + phase_j)."""

    poly: tuple = (0.0,)
    sines: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly) or (0.0,))
        object.__setattr__(self, "sines", tuple(tuple(float(v) for v in term) for term in self.sines))
        for term in self.sines:
            if len(term) != 3:
                raise ValueError("sine terms are (amplitude, omega, phase)")

    @classmethod
    def constant(cls, value: float) -> "Nonlinearity":
        return cls(poly=(value,))

    @classmethod
    def linear(cls, slope: float, offset: float = 0.0) -> "Nonlinearity":
        return cls(poly=(offset, slope))

    def _poly(self, t, nu):
        c = np.polynomial.polynomial.polyder(np.asarray(self.poly), nu) if nu else np.asarray(self.poly)
        return np.polynomial.polynomial.polyval(t, c)

    def derivative(self, t, nu: int = 0):
        t = np.asarray(t, dtype=float)
        out = self._poly(t, nu) + np.zeros_like(t)
        for amp, om, ph in self.sines:
            out = out + amp * om**nu * np.sin(om * t + ph + nu * np.pi / 2)
        return out

    def __call__(self, t):
        return self.derivative(t, 0)

    def prime(self, t):
        return self.derivative(t, 1)

    def second(self, t):
        return self.derivative(t, 2)

    @property
    def is_linear(self) -> bool:
        return len(self.poly) <= 2 and not self.sines

    def audit(self, lo: float = -2.0, hi: float = 2.0, n: int = 100, seed: int = 0, h: float = 1e-5) -> float:
        """Worst relative mismatch between F', F'' and centred differences."""
        t = np.random.default_rng(seed).uniform(lo, hi, n)
        worst = 0.0
        for nu in (1, 2):
            fd = (self.derivative(t + h, nu - 1) - self.derivative(t - h, nu - 1)) / (2 * h)
            ex = self.derivative(t, nu)
            scale = max(1.0, float(np.max(np.abs(ex))))
            worst = max(worst, float(np.max(np.abs(fd - ex))) / scale)
        return worst

    def to_dict(self) -> dict:
        return {"poly": list(self.poly), "sin": [list(t) for t in self.sines]}

    @classmethod
    def from_dict(cls, d: dict) -> "Nonlinearity":
        return cls(poly=tuple(d.get("poly", (0.0,))), sines=tuple(tuple(t) for t in d.get("sin", ())))
