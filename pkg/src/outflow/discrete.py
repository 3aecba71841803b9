"""Shared discrete derivative operators and quadrature weights on the grids.

Centered second-order stencils in the interior, one-sided second-order at
the boundaries; the angular direction works on staggered cell centers and
closes its stencils across the poles by parity reflection.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma as _gamma

from .fd import fornberg_weights
from .grids import AngularGrid, RadialGrid

__all__ = ["SymOps", "AxiOps", "trapezoid_weights", "sphere_area"]


def trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return float(2.0 * np.pi ** (n / 2.0) / _gamma(n / 2.0))


def _stencil_table(x: np.ndarray, width: int, order: int):
    """Per-node windows and weights: out[i] = sum_k w[i,k] f(idx[i,k])."""
    n = x.size
    idx = np.empty((n, width), dtype=int)
    wts = np.empty((n, width))
    for i in range(n):
        lo = min(max(i - (width - 1) // 2, 0), n - width)
        idx[i] = np.arange(lo, lo + width)
        wts[i] = fornberg_weights(x[i], x[lo:lo + width], order)[order]
    return idx, wts


class _Deriv:
    def __init__(self, x: np.ndarray, width: int, order: int):
        self.idx, self.wts = _stencil_table(x, width, order)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        g = f[self.idx]  # (n, width[, trailing])
        if g.ndim == 2:
            return np.einsum("ik,ik->i", self.wts, g)
        return np.einsum("ik,ikj->ij", self.wts, g)


class SymOps:
    """Radial collocation derivatives and volume quadrature (dimension n)."""

    def __init__(self, grid: RadialGrid, dim_n: int = 3):
        self.grid = grid
        self.r = grid.nodes
        self.dim_n = dim_n
        self.d1 = _Deriv(self.r, 3, 1)
        self.d2 = _Deriv(self.r, 4, 2)
        area = sphere_area(dim_n)
        self.w_vol = area * self.r ** (dim_n - 1) * trapezoid_weights(self.r)
        self.boundary_area = area  # sphere of radius 1

    def div_radial(self, v: np.ndarray) -> np.ndarray:
        """Divergence of the radial field v(r) r_hat."""
        return self.d1(v) + (self.dim_n - 1) * v / self.r

    def integral(self, f: np.ndarray) -> float:
        return float(np.sum(self.w_vol * f))


class AxiOps:
    """(r, theta) derivatives on radial nodes x staggered angular centers.

    Angular stencils are closed across the poles by reflection: scalar-like
    quantities (rho, u_r) continue evenly, the polar velocity component
    oddly, which encodes u_theta = 0 on the axis without ever evaluating
    at sin(theta) = 0.
    """

    def __init__(self, grid: RadialGrid, agrid: AngularGrid):
        self.grid = grid
        self.agrid = agrid
        self.r = grid.nodes
        self.theta = agrid.centers
        self.dtheta = agrid.dtheta
        self.sin = np.sin(self.theta)
        self.cos = np.cos(self.theta)
        self.d_r = _Deriv(self.r, 3, 1)
        self.d2_r = _Deriv(self.r, 4, 2)
        w_r = trapezoid_weights(self.r)
        # cell volumes 2 pi r^2 sin(theta) dr dtheta
        self.w_vol = (2.0 * np.pi * self.r**2 * w_r)[:, None] * (
            self.sin * self.dtheta)[None, :]
        self.boundary_w = 2.0 * np.pi * self.sin * self.dtheta  # r = 1 ring

    def _pad_theta(self, f: np.ndarray, parity: int) -> np.ndarray:
        return np.concatenate([parity * f[:, :1], f, parity * f[:, -1:]], axis=1)

    def d_theta(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        g = self._pad_theta(f, parity)
        return (g[:, 2:] - g[:, :-2]) / (2.0 * self.dtheta)

    def d2_theta(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        g = self._pad_theta(f, parity)
        return (g[:, 2:] - 2.0 * g[:, 1:-1] + g[:, :-2]) / self.dtheta**2

    def div(self, v_r: np.ndarray, v_theta: np.ndarray) -> np.ndarray:
        r = self.r[:, None]
        s = self.sin[None, :]
        # sin(theta) v_theta is even across the poles (odd times odd)
        return (self.d_r(r**2 * v_r) / r**2
                + self.d_theta(s * v_theta, parity=1) / (r * s))

    def integral(self, f: np.ndarray) -> float:
        return float(np.sum(self.w_vol * f))
