"""Time-dependent state containers and initial-data construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_legendre

from .fd import deriv1
from .grids import AngularGrid, RadialGrid
from .params import FluidParams, dpressure
from .steady import SteadyProfile

__all__ = [
    "SymState",
    "AxiState",
    "smooth_bump",
    "perturb_sym",
    "perturb_axi",
    "compatibility_residual",
]


@dataclass
class SymState:
    """Spherically symmetric fields on the radial grid nodes."""

    t: float
    grid: RadialGrid
    rho: np.ndarray
    u_rad: np.ndarray

    def copy(self) -> "SymState":
        return SymState(self.t, self.grid, self.rho.copy(), self.u_rad.copy())

    def check(self, params: FluidParams) -> None:
        if np.any(self.rho <= 0.0):
            raise ValueError("density must stay positive")
        if self.u_rad[0] != params.u_b:
            raise ValueError("boundary speed u(1) must equal u_b")


@dataclass
class AxiState:
    """Axisymmetric fields on radial nodes x angular cell centers.

    Angular cells are staggered away from the poles; the axis conditions
    u_theta(theta=0, pi) = 0 enter through odd-parity ghost closure, so no
    field is ever evaluated at sin(theta) = 0.
    """

    t: float
    grid: RadialGrid
    agrid: AngularGrid
    rho: np.ndarray
    u_r: np.ndarray
    u_theta: np.ndarray

    def copy(self) -> "AxiState":
        return AxiState(self.t, self.grid, self.agrid,
                        self.rho.copy(), self.u_r.copy(), self.u_theta.copy())

    def check(self, params: FluidParams) -> None:
        if np.any(self.rho <= 0.0):
            raise ValueError("density must stay positive")
        if np.any(self.u_r[0] != params.u_b) or np.any(self.u_theta[0] != 0.0):
            raise ValueError("boundary row must carry (u_r, u_theta) = (u_b, 0)")


def smooth_bump(r, lo: float, hi: float):
    """C-infinity bump supported exactly on [lo, hi], peak value 1 at the midpoint."""
    r = np.asarray(r, dtype=float)
    s = 2.0 * (r - lo) / (hi - lo) - 1.0
    out = np.zeros_like(r)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2))
    return out


def perturb_sym(profile: SteadyProfile, amplitude: float,
                support: tuple[float, float]) -> SymState:
    """Steady profile plus a compact density bump; velocity untouched.

    Compact support strictly inside (1, r_max) keeps the initial data
    boundary-compatible automatically.
    """
    lo, hi = support
    if not (1.0 < lo < hi < profile.grid.r_max):
        raise ValueError("perturbation support must lie strictly inside (1, r_max)")
    rho = profile.rho_t + amplitude * smooth_bump(profile.r, lo, hi)
    return SymState(0.0, profile.grid, rho, profile.u_t.copy())


def perturb_axi(profile: SteadyProfile, agrid: AngularGrid, amplitude: float,
                support: tuple[float, float], ell: int = 1) -> AxiState:
    """Steady profile plus a density bump modulated by a Legendre mode in angle."""
    lo, hi = support
    if not (1.0 < lo < hi < profile.grid.r_max):
        raise ValueError("perturbation support must lie strictly inside (1, r_max)")
    theta = agrid.centers
    radial = amplitude * smooth_bump(profile.r, lo, hi)
    mode = eval_legendre(ell, np.cos(theta))
    rho = profile.rho_t[:, None] + radial[:, None] * mode[None, :]
    u_r = np.repeat(profile.u_t[:, None], theta.size, axis=1)
    u_theta = np.zeros_like(rho)
    return AxiState(0.0, profile.grid, agrid, rho, u_r, u_theta)


def _sym_boundary_momentum(rho, u, r, params: FluidParams) -> float:
    """Radial momentum balance at r = 1 by one-sided differences.

    For a radial field the viscous operator collapses to
    (2 mu + lam) d_r[(r^2 u)_r / r^2].
    """
    k = min(8, r.size)  # one-sided stencils only need the first few nodes
    rr, ru, rrho = r[:k], u[:k], rho[:k]
    g = deriv1(rr**2 * ru, rr) / rr**2
    visc = (2.0 * params.mu + params.lam) * deriv1(g, rr)[0]
    du = deriv1(ru, rr)[0]
    dp = (dpressure(rrho, params) * deriv1(rrho, rr))[0]
    return float(-rrho[0] * ru[0] * du - dp + visc)


def compatibility_residual(state, profile: SteadyProfile,
                           params: FluidParams) -> tuple[float, float]:
    """Boundary compatibility of initial data: velocity match and momentum balance.

    res1 is the worst mismatch of the boundary velocity against u_b; res2 the
    worst one-sided momentum-balance residual on r = 1.  Solvers accept
    incompatible data but flag it; nothing is projected away silently.
    """
    r = state.grid.nodes
    if isinstance(state, SymState):
        res1 = abs(float(state.u_rad[0]) - params.u_b)
        res2 = abs(_sym_boundary_momentum(state.rho, state.u_rad, r, params))
        return res1, res2
    if isinstance(state, AxiState):
        du = np.hypot(state.u_r[0] - params.u_b, state.u_theta[0])
        res1 = float(np.max(du))
        from .evolve_axi import boundary_momentum_residual

        return res1, boundary_momentum_residual(state, params)
    raise TypeError(f"unsupported state type {type(state)!r}")
