"""C^2 interpolation of grid fields with physical-plane derivatives."""
from __future__ import annotations

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .geometry import TWO_PI
from .operators import ScalarField

PAD = 4


class FieldInterpolant:
    """Bicubic interpolating spline in (x, s), differentiated through the channel map.

    x is periodic: the spline is fitted on a few wrapped columns on either
    side, and query points are reduced to [0, 2pi) first.
    """

    def __init__(self, field: ScalarField):
        self.field = field
        self.grid = g = field.grid
        idx = np.arange(-PAD, g.Nx + PAD)
        xp = idx * g.dx
        vals = field.values[idx % g.Nx]
        self._spl = RectBivariateSpline(xp, g.s, vals, kx=3, ky=3, s=0)

    def _raw(self, x, s, dx, ds):
        return self._spl.ev(x, s, dx=dx, dy=ds)

    def _prep(self, x, y):
        x = np.mod(np.asarray(x, dtype=float), TWO_PI)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        s = self.grid.to_s(x, y)
        return x, y, s

    def value(self, x, y):
        x, _, s = self._prep(x, y)
        return self._raw(x, s, 0, 0)

    def value_xs(self, x, s):
        x = np.mod(np.asarray(x, dtype=float), TWO_PI)
        return self._raw(x, np.asarray(s, dtype=float), 0, 0)

    def gradient(self, x, y):
        x, _, s = self._prep(x, y)
        T, _, a, _ = self.grid.metric(x, s)
        Ux = self._raw(x, s, 1, 0)
        Us = self._raw(x, s, 0, 1)
        return Ux - a * Us, Us / T

    def dy(self, x, y):
        x, _, s = self._prep(x, y)
        T = self.grid.shape.thickness(x)
        return self._raw(x, s, 0, 1) / T

    def hessian(self, x, y):
        """(psi_xx, psi_xy, psi_yy) at physical points."""
        x, _, s = self._prep(x, y)
        T, T1, a, a_x = self.grid.metric(x, s)
        Us = self._raw(x, s, 0, 1)
        Uxx = self._raw(x, s, 2, 0)
        Uxs = self._raw(x, s, 1, 1)
        Uss = self._raw(x, s, 0, 2)
        hxx = Uxx - 2 * a * Uxs + a**2 * Uss + (a * T1 / T - a_x) * Us
        hxy = (Uxs - a * Uss - T1 / T * Us) / T
        hyy = Uss / T**2
        return hxx, hxy, hyy
