"""Periodic channel domains and the boundary-fitted mapping.

A channel is the strip ``bottom(x) <= y <= top(x)`` over the circle
``x in [0, 2*pi)``, where

    bottom(x) = G(x) - eps * g(x)
    top(x)    = H(x) + eps * h(x)

so ``g`` and ``h`` are *outward* displacements of the two walls.  Every
boundary function is a truncated real Fourier series, which gives exact
derivatives for the metric terms of the map

    y(x, s) = bottom(x) + s * T(x),    T = top - bottom,   s in [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import BoundaryCrossing, InvalidResolution

TWO_PI = 2.0 * np.pi
COEF_TOL = 1e-10
AUDIT_POINTS = 4096
MIN_NODES = 8


@dataclass(frozen=True)
class FourierSeries:
    """f(x) = sum_k a_k cos(k x) + b_k sin(k x), k = 0..K.

    ``cos`` and ``sin`` are indexed by mode number; ``sin[0]`` is ignored.
    """

    cos: tuple = (0.0,)
    sin: tuple = (0.0,)

    def __post_init__(self):
        c = tuple(float(v) for v in self.cos) or (0.0,)
        s = tuple(float(v) for v in self.sin) or (0.0,)
        n = max(len(c), len(s))
        c = c + (0.0,) * (n - len(c))
        s = s + (0.0,) * (n - len(s))
        s = (0.0,) + s[1:]
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(s))):
            raise ValueError("Fourier coefficients must be finite")
        object.__setattr__(self, "cos", c)
        object.__setattr__(self, "sin", s)

    @classmethod
    def constant(cls, value: float) -> "FourierSeries":
        return cls(cos=(value,))

    @classmethod
    def from_modes(cls, modes: Iterable[Sequence[float]]) -> "FourierSeries":
        """Build from ``(k, cos_coef, sin_coef)`` triples; repeated k accumulate."""
        modes = [(int(k), float(a), float(b)) for k, a, b in modes]
        if any(k < 0 for k, _, _ in modes):
            raise ValueError("mode index must be >= 0")
        K = max((k for k, _, _ in modes), default=0)
        c = np.zeros(K + 1)
        s = np.zeros(K + 1)
        for k, a, b in modes:
            c[k] += a
            s[k] += b
        return cls(cos=tuple(c), sin=tuple(s))

    @classmethod
    def cosine(cls, k: int, amplitude: float = 1.0, shift: float = 0.0) -> "FourierSeries":
        """amplitude * cos(k (x - shift))."""
        return cls.from_modes([(k, amplitude * np.cos(k * shift), amplitude * np.sin(k * shift))])

    @property
    def order(self) -> int:
        return len(self.cos) - 1

    def modes(self) -> list[tuple[int, float, float]]:
        return [(k, a, b) for k, (a, b) in enumerate(zip(self.cos, self.sin)) if a != 0.0 or b != 0.0]

    def __call__(self, x, nu: int = 0):
        """Value of the ``nu``-th derivative at ``x``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k, (a, b) in enumerate(zip(self.cos, self.sin)):
            if a == 0.0 and b == 0.0:
                continue
            if k == 0:
                if nu == 0:
                    out = out + a
                continue
            # d^nu/dx^nu cos(kx) = k^nu cos(kx + nu*pi/2)
            ph = nu * np.pi / 2
            out = out + k**nu * (a * np.cos(k * x + ph) + b * np.sin(k * x + ph))
        return out

    def __add__(self, other: "FourierSeries") -> "FourierSeries":
        n = max(len(self.cos), len(other.cos))
        pad = lambda t: np.pad(np.asarray(t), (0, n - len(t)))
        return FourierSeries(tuple(pad(self.cos) + pad(other.cos)), tuple(pad(self.sin) + pad(other.sin)))

    def __neg__(self) -> "FourierSeries":
        return self.scaled(-1.0)

    def __sub__(self, other: "FourierSeries") -> "FourierSeries":
        return self + (-other)

    def scaled(self, factor: float) -> "FourierSeries":
        return FourierSeries(tuple(factor * v for v in self.cos), tuple(factor * v for v in self.sin))

    def shifted(self, dx: float) -> "FourierSeries":
        """The translate x -> f(x - dx)."""
        c, s = [], []
        for k, (a, b) in enumerate(zip(self.cos, self.sin)):
            ck, sk = np.cos(k * dx), np.sin(k * dx)
            c.append(a * ck - b * sk)
            s.append(a * sk + b * ck)
        return FourierSeries(tuple(c), tuple(s))

    def max_coefficient(self) -> float:
        return float(max(np.max(np.abs(self.cos)), np.max(np.abs(self.sin))))

    def is_constant(self, tol: float = COEF_TOL, scale: float | None = None) -> bool:
        """True when every non-constant mode is below ``tol * scale``.

        ``scale`` defaults to the largest coefficient of the series.
        """
        if scale is None:
            scale = self.max_coefficient()
        if scale == 0.0:
            return True
        nonconst = max((max(abs(a), abs(b)) for a, b in zip(self.cos[1:], self.sin[1:])), default=0.0)
        return nonconst <= tol * scale

    def complex_coefficients(self) -> dict[int, complex]:
        """Coefficients f_n of sum_n f_n e^{inx}, n = -K..K."""
        out = {0: complex(self.cos[0])}
        for k in range(1, len(self.cos)):
            a, b = self.cos[k], self.sin[k]
            out[k] = complex(a, -b) / 2
            out[-k] = complex(a, b) / 2
        return out

    def sup_norm(self) -> float:
        x = np.linspace(0.0, TWO_PI, AUDIT_POINTS, endpoint=False)
        return float(np.max(np.abs(self(x))))

    def to_modes(self) -> list[list[float]]:
        return [[k, a, b] for k, a, b in self.modes()]


@dataclass(frozen=True)
class BoundaryShape:
    """Base walls G, H, outward perturbations g, h, amplitude and wall values."""

    G: FourierSeries = field(default_factory=lambda: FourierSeries.constant(-1.0))
    H: FourierSeries = field(default_factory=lambda: FourierSeries.constant(1.0))
    g: FourierSeries = field(default_factory=FourierSeries)
    h: FourierSeries = field(default_factory=FourierSeries)
    epsilon: float = 0.0
    c_G: float = 0.0
    c_H: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError("epsilon must be finite and >= 0")
        if not (np.isfinite(self.c_G) and np.isfinite(self.c_H)):
            raise ValueError("boundary values must be finite")

    @classmethod
    def flat(cls, h=None, g=None, epsilon=0.0, c_G=0.0, c_H=0.0, width=1.0):
        """Perturbation of the straight channel -width <= y <= width."""
        return cls(
            G=FourierSeries.constant(-width),
            H=FourierSeries.constant(width),
            g=g if g is not None else FourierSeries(),
            h=h if h is not None else FourierSeries(),
            epsilon=epsilon,
            c_G=c_G,
            c_H=c_H,
        )

    def with_epsilon(self, epsilon: float) -> "BoundaryShape":
        return replace(self, epsilon=float(epsilon))

    def base(self) -> "BoundaryShape":
        return self.with_epsilon(0.0)

    def bottom(self, x, nu: int = 0):
        return self.G(x, nu) - self.epsilon * self.g(x, nu)

    def top(self, x, nu: int = 0):
        return self.H(x, nu) + self.epsilon * self.h(x, nu)

    def thickness(self, x, nu: int = 0):
        return self.top(x, nu) - self.bottom(x, nu)

    def is_flat_base(self) -> bool:
        return self.G.is_constant(scale=1.0) and self.H.is_constant(scale=1.0)

    def min_gap(self, n: int = AUDIT_POINTS) -> float:
        x = np.linspace(0.0, TWO_PI, n, endpoint=False)
        return float(np.min(self.thickness(x)))

    def validate(self) -> None:
        gap = self.min_gap()
        if gap <= 0:
            raise BoundaryCrossing(f"walls cross: min(top - bottom) = {gap:.3e}")

    def to_dict(self) -> dict:
        return {
            "G": self.G.to_modes(),
            "H": self.H.to_modes(),
            "g": self.g.to_modes(),
            "h": self.h.to_modes(),
            "epsilon": self.epsilon,
            "c_G": self.c_G,
            "c_H": self.c_H,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryShape":
        def series(key, default):
            modes = d.get(key)
            return FourierSeries.from_modes(modes) if modes else default

        return cls(
            G=series("G", FourierSeries.constant(-1.0)),
            H=series("H", FourierSeries.constant(1.0)),
            g=series("g", FourierSeries()),
            h=series("h", FourierSeries()),
            epsilon=float(d.get("epsilon", 0.0)),
            c_G=float(d.get("c_G", 0.0)),
            c_H=float(d.get("c_H", 0.0)),
        )


@dataclass(frozen=True, eq=False)
class MappedGrid:
    """Tensor grid on [0, 2pi) x [0, 1] with the channel map and metric terms.

    Arrays indexed ``[i, j]`` with i along x (periodic) and j along s.
    ``a = (bottom' + s T') / T`` is minus the x-derivative of s at fixed y;
    ``a_x`` is its x-derivative at fixed s.
    """

    shape: BoundaryShape
    Nx: int
    Ns: int
    x: np.ndarray
    s: np.ndarray
    bottom: np.ndarray
    T: np.ndarray
    T_x: np.ndarray
    Y: np.ndarray
    a: np.ndarray
    a_x: np.ndarray

    @property
    def dx(self) -> float:
        return TWO_PI / self.Nx

    @property
    def ds(self) -> float:
        return 1.0 / (self.Ns - 1)

    @property
    def X(self) -> np.ndarray:
        return np.broadcast_to(self.x[:, None], (self.Nx, self.Ns))

    @property
    def size(self) -> int:
        return self.Nx * self.Ns

    def physical(self, x, s):
        return self.shape.bottom(x) + np.asarray(s) * self.shape.thickness(x)

    def to_s(self, x, y):
        return (np.asarray(y) - self.shape.bottom(x)) / self.shape.thickness(x)

    def metric(self, x, s):
        """(T, T', a, a_x) at arbitrary points, from the Fourier series."""
        sh = self.shape
        b1, b2 = sh.bottom(x, 1), sh.bottom(x, 2)
        T, T1, T2 = sh.thickness(x), sh.thickness(x, 1), sh.thickness(x, 2)
        a = (b1 + s * T1) / T
        a_x = (b2 + s * T2) / T - (b1 + s * T1) * T1 / T**2
        return T, T1, a, a_x

    def same_layout(self, other: "MappedGrid") -> bool:
        return self.Nx == other.Nx and self.Ns == other.Ns


def build_grid(shape: BoundaryShape, Nx: int, Ns: int) -> MappedGrid:
    if Nx < MIN_NODES or Ns < MIN_NODES:
        raise InvalidResolution(f"need Nx, Ns >= {MIN_NODES}, got {Nx}, {Ns}")
    shape.validate()
    x = TWO_PI * np.arange(Nx) / Nx
    s = np.linspace(0.0, 1.0, Ns)
    bottom = shape.bottom(x)
    T = shape.thickness(x)
    T_x = shape.thickness(x, 1)
    S = s[None, :]
    b1 = shape.bottom(x, 1)[:, None]
    b2 = shape.bottom(x, 2)[:, None]
    T2 = shape.thickness(x, 2)[:, None]
    Tc, T1c = T[:, None], T_x[:, None]
    a = (b1 + S * T1c) / Tc
    a_x = (b2 + S * T2) / Tc - (b1 + S * T1c) * T1c / Tc**2
    Y = bottom[:, None] + S * Tc
    return MappedGrid(shape, Nx, Ns, x, s, bottom, T, T_x, Y, a, a_x)


def membership_Bprime(shape: BoundaryShape, tol: float = COEF_TOL) -> bool:
    """Whether h' + g' is not identically zero (islands are forced)."""
    # scale uses non-constant modes only, so adding constants never changes the verdict
    def wave_scale(f: FourierSeries) -> float:
        return max((max(abs(a), abs(b)) for a, b in zip(f.cos[1:], f.sin[1:])), default=0.0)

    scale = max(wave_scale(shape.h), wave_scale(shape.g))
    if scale == 0.0:
        return False
    return not (shape.h + shape.g).is_constant(tol=tol, scale=scale)
