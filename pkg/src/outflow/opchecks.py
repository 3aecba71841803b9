"""Property checks for the spherical-operator toolkit.

Covers the unit-vector derivative relations, spherical-vs-Cartesian operator
agreement, the commutator expansions and bounds, the radial-radial
cancellation in r_hat . lap V - d_r div V, and the Hardy inequality with
constant 2n.  Everything is numeric: operators under test difference in the
spherical charts, oracles difference along Cartesian axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import gamma as gamma_fn

from .cutoffs import CutoffFamily, build_cutoffs
from .sphops import (
    cart_grad,
    cart_grad_div,
    cart_lap,
    from_spherical,
    make_sph_div,
    make_sph_grad,
    make_sph_grad_div,
    make_sph_lap,
    make_sph_vec_lap,
    sph_partial,
    to_spherical,
    unit_vectors,
)

__all__ = [
    "OpSample",
    "default_corpus",
    "CheckRow",
    "commutator_check",
    "rr_cancellation",
    "hardy_check",
    "hardy_check_radial",
    "TailNotConverged",
    "run_verify_ops",
]


class TailNotConverged(RuntimeError):
    """Quadrature tail beyond the truncation radius is not negligible."""


@dataclass(frozen=True)
class CheckRow:
    name: str
    value: float
    tol: float
    passed: bool
    note: str = ""


def _row(name, value, tol, note=""):
    return CheckRow(name, float(value), float(tol), bool(value <= tol), note)


# ---------------------------------------------------------------------------
# manufactured corpus


@dataclass(frozen=True)
class OpSample:
    """Manufactured smooth fields plus chart-valid evaluation points.

    Fields are entire away from the origin, so stencil samples slightly
    outside the exterior domain are harmless.  Points keep a margin from the
    chart axes and from r = 1.
    """

    scalar_fields: dict
    vector_fields: dict
    points: dict  # chart -> (n, 3) array


def _corpus_points(rng, chart, n, r_range, margin):
    r = rng.uniform(r_range[0], r_range[1], n)
    theta = rng.uniform(np.pi / 9 + margin, 8 * np.pi / 9 - margin, n)
    phi = rng.uniform(0.0, 2 * np.pi, n)
    return from_spherical(r, theta, phi, chart)


def default_corpus(seed: int = 0, n_points: int = 100,
                   r_range=(1.15, 4.0), margin: float = 0.15) -> OpSample:
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 1.5, 8)
    x0 = np.array([1.2, 0.7, -0.5])

    def r_of(x):
        return np.linalg.norm(x, axis=-1)

    scalars = {
        "radial_exp": lambda x: np.exp(1.0 - r_of(x)),
        "poly": lambda x: x[..., 0] ** 2 * x[..., 1] - x[..., 2] ** 3,
        "dipole": lambda x: x[..., 2] / r_of(x) ** 3,
        "gauss": lambda x: np.exp(-0.5 * np.sum((x - x0) ** 2, axis=-1)),
        "mixed": lambda x: (a[0] * x[..., 0] * x[..., 1]
                            + a[1] * x[..., 1] * x[..., 2]) / r_of(x) ** 3,
    }
    vectors = {
        "identity": lambda x: x + 0.0,
        "swirl": lambda x: np.stack(
            [-x[..., 1], x[..., 0], np.zeros_like(x[..., 0])], axis=-1
        ) * np.exp(1.0 - r_of(x))[..., None],
        "vpoly": lambda x: np.stack(
            [a[2] * x[..., 0] * x[..., 1], a[3] * x[..., 2] ** 2,
             a[4] * x[..., 0] * x[..., 2]], axis=-1
        ) / r_of(x)[..., None] ** 2,
        "vsmooth": lambda x: np.stack(
            [a[5] * x[..., 2], a[6] * x[..., 0], a[7] * x[..., 1]], axis=-1
        ) * np.exp(1.0 - r_of(x))[..., None],
        "radial_quad": lambda x: r_of(x)[..., None] * x,
    }
    points = {c: _corpus_points(rng, c, n_points, r_range, margin) for c in ("V", "H")}
    return OpSample(scalar_fields=scalars, vector_fields=vectors, points=points)


# ---------------------------------------------------------------------------
# closed-form derivatives of the chart frame (from the frame relations)


def _frame(pts, chart):
    r, theta, _ = to_spherical(pts, chart)
    rhat, that, phat = unit_vectors(pts, chart, guard=False)
    return r, np.sin(theta), np.cos(theta), rhat, that, phat


def _d_hat(kind: str, which: str, k: int, pts, chart):
    """k-th scaled derivative of a unit vector field, closed form."""
    r, s, c, rhat, that, phat = _frame(pts, chart)
    zero = np.zeros_like(rhat)
    if k == 0:
        return {"r": rhat, "theta": that, "phi": phat}[kind]
    if which == "r":
        return zero
    s_, c_ = s[..., None], c[..., None]
    if which == "theta":
        table = {
            "r": [that, -rhat, -that],
            "theta": [-rhat, -that, rhat],
            "phi": [zero, zero, zero],
        }
    else:  # phi
        table = {
            "r": [s_ * phat, -s_**2 * rhat - s_ * c_ * that, -s_ * phat],
            "theta": [c_ * phat, -s_ * c_ * rhat - c_**2 * that, -c_ * phat],
            "phi": [-s_ * rhat - c_ * that, -phat, s_ * rhat + c_ * that],
        }
    return table[kind][k - 1]


def _d_theta_over_r(which: str, k: int, pts, chart):
    """k-th scaled derivative of theta_hat / r."""
    r, s, c, rhat, that, phat = _frame(pts, chart)
    if which == "r":
        coeff = (-1.0) ** k * np.prod(np.arange(1, k + 1)) / r ** (k + 1)
        return coeff[..., None] * that
    return _d_hat("theta", which, k, pts, chart) / r[..., None]


def _d_phi_over_rs(which: str, k: int, pts, chart):
    """k-th scaled derivative of phi_hat / (r sin theta)."""
    r, s, c, rhat, that, phat = _frame(pts, chart)
    rs = (r * s)[..., None]
    if k == 0:
        return phat / rs
    if which == "r":
        coeff = (-1.0) ** k * np.prod(np.arange(1, k + 1)) / (r ** (k + 1) * s)
        return coeff[..., None] * phat
    if which == "theta":
        # d_theta phi_hat = 0, so only 1/sin differentiates
        inv_s = [None, -c / s**2, (1 + c**2) / s**3, -c * (5 + c**2) / s**4][k]
        return (inv_s / r)[..., None] * phat
    return _d_hat("phi", "phi", k, pts, chart) / rs


def _d_cot(k: int, pts, chart):
    _, s, c, *_ = _frame(pts, chart)
    return [c / s, -1.0 / s**2, 2 * c / s**3, -(2 + 4 * c**2) / s**4][k]


def _d_inv_sin2(k: int, pts, chart):
    _, s, c, *_ = _frame(pts, chart)
    return [1.0 / s**2, -2 * c / s**3, (2 + 4 * c**2) / s**4,
            -8 * c * (3 - s**2) / s**5][k]


_ORDER_AXIS = {"r": 0, "theta": 1, "phi": 2}


def _orders(which: str, k: int):
    o = [0, 0, 0]
    o[_ORDER_AXIS[which]] = k
    return tuple(o)


def _mixed(which: str, k: int, extra: str, j: int = 1):
    o = list(_orders(which, k))
    o[_ORDER_AXIS[extra]] += j
    return tuple(o)


# ---------------------------------------------------------------------------
# commutators: nested-FD compositions vs closed-form expansions


def _comm_grad(F, pts, chart, N, which, h_deep):
    lhs1 = sph_partial(make_sph_grad(F, chart, h_deep), chart,
                       _orders(which, N), h_deep, vector=True)(pts)
    lhs2 = make_sph_grad(sph_partial(F, chart, _orders(which, N), h_deep),
                         chart, h_deep)(pts)
    lhs = lhs1 - lhs2
    rhs = np.zeros_like(lhs)
    for m in range(N):
        k = N - m
        dr = sph_partial(F, chart, _mixed(which, m, "r"), h_deep)(pts)
        dt = sph_partial(F, chart, _mixed(which, m, "theta"), h_deep)(pts)
        dp = sph_partial(F, chart, _mixed(which, m, "phi"), h_deep)(pts)
        rhs += comb(N, m) * (
            _d_hat("r", which, k, pts, chart) * dr[..., None]
            + _d_theta_over_r(which, k, pts, chart) * dt[..., None]
            + _d_phi_over_rs(which, k, pts, chart) * dp[..., None]
        )
    return lhs, rhs


def _comm_lap(F, pts, chart, N, which, h_deep):
    lhs1 = sph_partial(make_sph_lap(F, chart, h_deep), chart,
                       _orders(which, N), h_deep)(pts)
    lhs2 = make_sph_lap(sph_partial(F, chart, _orders(which, N), h_deep),
                        chart, h_deep)(pts)
    lhs = lhs1 - lhs2
    rhs = np.zeros_like(lhs)
    if which == "theta":
        r = np.linalg.norm(pts, axis=-1)
        for m in range(N):
            k = N - m
            dt = sph_partial(F, chart, _mixed("theta", m, "theta"), h_deep)(pts)
            dpp = sph_partial(F, chart, _mixed("theta", m, "phi", 2), h_deep)(pts)
            rhs += comb(N, m) * (dt * _d_cot(k, pts, chart)
                                 + dpp * _d_inv_sin2(k, pts, chart)) / r**2
    # for which == "phi" every coefficient is axisymmetric: the commutator vanishes
    return lhs, rhs


def _grad_at(F, pts, chart, pre_orders, h):
    """Full gradient of (D^pre F) at points, by single mixed stencils."""
    r, s, c, rhat, that, phat = _frame(pts, chart)
    o = list(pre_orders)

    def bump(axis):
        oo = list(o)
        oo[axis] += 1
        return tuple(oo)

    dr = sph_partial(F, chart, bump(0), h)(pts)
    dt = sph_partial(F, chart, bump(1), h)(pts)
    dp = sph_partial(F, chart, bump(2), h)(pts)
    return (rhat * dr[..., None] + that * (dt / r)[..., None]
            + phat * (dp / (r * s))[..., None])


def _comm_advect(F, V, pts, chart, N, which, h_deep):
    gradF = make_sph_grad(F, chart, h_deep)

    def adv(p):
        return np.sum(V(p) * gradF(p), axis=-1)

    lhs1 = sph_partial(adv, chart, _orders(which, N), h_deep)(pts)
    dNF = sph_partial(F, chart, _orders(which, N), h_deep)
    lhs2 = np.sum(V(pts) * make_sph_grad(dNF, chart, h_deep)(pts), axis=-1)
    lhs = lhs1 - lhs2

    rhs = np.zeros_like(lhs)
    for k in range(N):
        dv = sph_partial(V, chart, _orders(which, N - k), h_deep, vector=True)(pts)
        g = _grad_at(F, pts, chart, _orders(which, k), h_deep)
        rhs += comb(N, k) * np.sum(dv * g, axis=-1)
    for m in range(N):
        for k in range(m + 1, N + 1):
            coeff = comb(N, k) * comb(k, m)
            dv = sph_partial(V, chart, _orders(which, N - k), h_deep, vector=True)(pts)
            dr_m = sph_partial(F, chart, _mixed(which, m, "r"), h_deep)(pts)
            dt_m = sph_partial(F, chart, _mixed(which, m, "theta"), h_deep)(pts)
            dp_m = sph_partial(F, chart, _mixed(which, m, "phi"), h_deep)(pts)
            rhs += coeff * (
                np.sum(dv * _d_hat("r", which, k - m, pts, chart), axis=-1) * dr_m
                + np.sum(dv * _d_theta_over_r(which, k - m, pts, chart), axis=-1) * dt_m
                + np.sum(dv * _d_phi_over_rs(which, k - m, pts, chart), axis=-1) * dp_m
            )
    return lhs, rhs


def graddiv_expansion(V, chart: str, h: float = 0.01):
    """grad div V assembled term-by-term in the chart frame (scalar slots)."""

    def s_slot(idx):
        def f(p):
            hats = unit_vectors(p, chart, guard=False)
            return np.sum(hats[idx] * V(p), axis=-1)

        return f

    s_r, s_t, s_p = s_slot(0), s_slot(1), s_slot(2)

    def g_cot_over_r2(p):
        r, th, _ = to_spherical(p, chart)
        return s_t(p) * np.cos(th) / (r**2 * np.sin(th))

    dp_sp = sph_partial(s_p, chart, (0, 0, 1), h)

    def g_dpsp_over_r2s(p):
        r, th, _ = to_spherical(p, chart)
        return dp_sp(p) / (r**2 * np.sin(th))

    P = lambda f, o: sph_partial(f, chart, o, h)  # noqa: E731

    def expansion(pts):
        r, th, _ = to_spherical(pts, chart)
        s, c = np.sin(th), np.cos(th)
        rhat, that, phat = unit_vectors(pts, chart, guard=False)
        d2V = sph_partial(V, chart, (2, 0, 0), h, vector=True)(pts)
        out = rhat * np.sum(rhat * d2V, axis=-1)[..., None]
        out += that * (P(s_r, (1, 1, 0))(pts) / r)[..., None]
        out += phat * (P(s_r, (1, 0, 1))(pts) / (r * s))[..., None]
        out += 2.0 * rhat * (P(s_r, (1, 0, 0))(pts) / r - s_r(pts) / r**2)[..., None]
        out += that * (2.0 * P(s_r, (0, 1, 0))(pts) / r**2)[..., None]
        out += phat * (2.0 * P(s_r, (0, 0, 1))(pts) / (r**2 * s))[..., None]
        out += rhat * (P(s_t, (1, 1, 0))(pts) / r - P(s_t, (0, 1, 0))(pts) / r**2)[..., None]
        out += that * (P(s_t, (0, 2, 0))(pts) / r**2)[..., None]
        out += phat * (P(s_t, (0, 1, 1))(pts) / (r**2 * s))[..., None]
        out += rhat * ((P(s_t, (1, 0, 0))(pts) * c) / (r * s)
                       - s_t(pts) * c / (r**2 * s))[..., None]
        out += that * P(g_cot_over_r2, (0, 1, 0))(pts)[..., None]
        out += phat * (P(s_t, (0, 0, 1))(pts) * c / (r**2 * s**2))[..., None]
        out += rhat * (P(s_p, (1, 0, 1))(pts) / (r * s)
                       - P(s_p, (0, 0, 1))(pts) / (r**2 * s))[..., None]
        out += that * P(g_dpsp_over_r2s, (0, 1, 0))(pts)[..., None]
        out += phat * (P(s_p, (0, 0, 2))(pts) / (r**2 * s**2))[..., None]
        return out

    return expansion


def _comm_graddiv(V, pts, chart, N, which, h_deep):
    gd = make_sph_grad_div(V, chart, h_deep)
    dN_V = sph_partial(V, chart, _orders(which, N), h_deep, vector=True)
    lhs = (sph_partial(gd, chart, _orders(which, N), h_deep, vector=True)(pts)
           - make_sph_grad_div(dN_V, chart, h_deep)(pts))
    exp_v = graddiv_expansion(V, chart, h_deep)
    exp_dNv = graddiv_expansion(dN_V, chart, h_deep)
    rhs = (sph_partial(exp_v, chart, _orders(which, N), h_deep, vector=True)(pts)
           - exp_dNv(pts))
    return lhs, rhs


_KINDS = ("grad", "lap", "advect", "graddiv")


def _mag(arr):
    if arr.ndim > 1:
        return np.sqrt(np.sum(arr**2, axis=-1))
    return np.abs(arr)


def _string_max(field, pts, chart, length, h, vector=False, radial=True):
    """Max over all mixed derivative strings of a given length.

    radial=False restricts the strings to the two angular derivatives, the
    sense of the plain angular derivative powers in the structural bounds.
    """
    if length == 0:
        return _mag(field(pts))
    best = 0.0
    for o1 in range((length + 1) if radial else 1):
        for o2 in range(length + 1 - o1):
            o3 = length - o1 - o2
            val = sph_partial(field, chart, (o1, o2, o3), h, vector=vector)(pts)
            best = np.maximum(best, _mag(val))
    return best


def commutator_check(kind: str, N: int, sample: OpSample, chart: str = "V",
                     h_deep: float = 0.01, n_points: int = 24,
                     which=("theta", "phi"), rng_seed: int = 0):
    """Equality and bound test for one commutator kind at one order.

    Equality: the commutator evaluated as a difference of operator
    compositions must match its closed-form expansion.  Bound: the
    chi-weighted magnitude is compared against the structural majorant and
    the implied constant is fitted and reported.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    if not 1 <= N <= 3:
        raise ValueError("N must be 1, 2 or 3")
    pts = sample.points[chart][:n_points]
    rng = np.random.default_rng(rng_seed)
    fam = build_cutoffs()
    chi = fam.chi_v(pts) if chart == "V" else fam.chi_h(pts)

    names_s = list(sample.scalar_fields)
    names_v = list(sample.vector_fields)
    max_err = 0.0
    fitted_c = 0.0
    for w in which:
        if kind == "grad":
            F = sample.scalar_fields[names_s[rng.integers(len(names_s))]]
            lhs, rhs = _comm_grad(F, pts, chart, N, w, h_deep)
            bound = sum(_mag(_grad_at(F, pts, chart, _orders(w, m), h_deep))
                        for m in range(N))
        elif kind == "lap":
            F = sample.scalar_fields[names_s[rng.integers(len(names_s))]]
            lhs, rhs = _comm_lap(F, pts, chart, N, w, h_deep)
            r = np.linalg.norm(pts, axis=-1)
            bound = sum(_string_max(F, pts, chart, m, h_deep, radial=False)
                        for m in range(1, N + 2)) / r**2
        elif kind == "advect":
            F = sample.scalar_fields[names_s[rng.integers(len(names_s))]]
            V = sample.vector_fields[names_v[rng.integers(len(names_v))]]
            lhs, rhs = _comm_advect(F, V, pts, chart, N, w, h_deep)
            bound = sum(
                _string_max(F, pts, chart, k, h_deep)
                * sum(_string_max(V, pts, chart, m, h_deep, vector=True)
                      for m in range(N - k + 2))
                for k in range(1, N + 1)
            )
        else:
            V = sample.vector_fields[names_v[rng.integers(len(names_v))]]
            lhs, rhs = _comm_graddiv(V, pts, chart, N, w, h_deep)
            r = np.linalg.norm(pts, axis=-1)
            bound = _mag(V(pts)) / r**2 + sum(
                _string_max(
                    sph_partial(V, chart, _orders(w, m), h_deep, vector=True),
                    pts, chart, 2, h_deep, vector=True)
                for m in range(N)
            )
        max_err = max(max_err, float(np.max(_mag(lhs - rhs))))
        live = (chi > 1e-12) & (bound > 1e-12)
        if np.any(live):
            ratio = (chi * _mag(lhs))[live] / (chi * bound)[live]
            fitted_c = max(fitted_c, float(np.max(ratio)))
    return {"kind": kind, "N": N, "chart": chart, "max_equality_err": max_err,
            "fitted_C": fitted_c}


def rr_cancellation(V, pts, chart: str = "V", h: float = 0.01):
    """Two evaluations of r_hat . lap V - d_r div V, which carry no d_r^2 V.

    Route one composes the spherical Laplacian/divergence operators; route
    two evaluates the explicit difference of their frame expansions, from
    which the second radial derivative cancels identically.
    """
    vec_lap = make_sph_vec_lap(V, chart, h)
    div_v = make_sph_div(V, chart, h)
    rhat, that, phat = unit_vectors(pts, chart, guard=False)
    route1 = (np.sum(rhat * vec_lap(pts), axis=-1)
              - sph_partial(div_v, chart, (1, 0, 0), h)(pts))

    r, th, _ = to_spherical(pts, chart)
    s, c = np.sin(th), np.cos(th)
    D = lambda o: sph_partial(V, chart, o, h, vector=True)(pts)  # noqa: E731
    route2 = (
        2.0 / r * np.sum(rhat * D((1, 0, 0)), axis=-1)
        + c / (s * r**2) * np.sum(rhat * D((0, 1, 0)), axis=-1)
        + np.sum(rhat * D((0, 2, 0)), axis=-1) / r**2
        + np.sum(rhat * D((0, 0, 2)), axis=-1) / (r * s) ** 2
        - np.sum(that * D((1, 1, 0)), axis=-1) / r
        + np.sum(that * D((0, 1, 0)), axis=-1) / r**2
        - np.sum(phat * D((1, 0, 1)), axis=-1) / (r * s)
        + np.sum(phat * D((0, 0, 1)), axis=-1) / (r**2 * s)
    )
    return route1, route2


def rr_insensitivity(V, pts, chart: str = "V", h: float = 0.01):
    """route2 must be blind to adding a pure radial field W(r) r_hat, W = r^3."""

    def augmented(p):
        r = np.linalg.norm(p, axis=-1, keepdims=True)
        return V(p) + r**2 * p  # W(r) r_hat with W = r^3

    _, base = rr_cancellation(V, pts, chart, h)
    _, aug = rr_cancellation(augmented, pts, chart, h)
    return float(np.max(np.abs(base - aug)))


# ---------------------------------------------------------------------------
# Hardy inequality


def _sphere_area(n: int) -> float:
    return 2.0 * np.pi ** (n / 2.0) / gamma_fn(n / 2.0)


def _radial_panels(r_max: float, n_panels: int = 40, n_gauss: int = 12):
    edges = np.geomspace(1.0, r_max, n_panels + 1)
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


def hardy_check_radial(f, df, n: int = 3, r_max: float = 400.0):
    """Hardy inequality for radial profiles in dimension n >= 3."""
    if n < 3:
        raise ValueError("the boundary-weighted Hardy inequality needs n >= 3")
    area = _sphere_area(n)

    def quad(rm):
        r, w = _radial_panels(rm)
        lhs = area * np.sum(w * f(r) ** 2 * r ** (n - 3)) + area * f(1.0) ** 2
        rhs = 2.0 * n * area * np.sum(w * df(r) ** 2 * r ** (n - 1))
        return lhs, rhs

    lhs, rhs = quad(r_max)
    lhs2, rhs2 = quad(2.0 * r_max)
    if abs(lhs2 - lhs) > 0.01 * max(lhs2, 1e-300) or \
       abs(rhs2 - rhs) > 0.01 * max(rhs2, 1e-300):
        raise TailNotConverged("radial quadrature tail beyond r_max exceeds 1%")
    ratio = 0.0 if rhs2 == 0.0 else lhs2 / rhs2
    return lhs2, rhs2, ratio


def hardy_check(u, n: int = 3, r_max: float = 60.0, grad=None, vector=False,
                n_r: int = 160, n_theta: int = 24, n_phi: int = 24):
    """Hardy inequality ∫|u|^2/|x|^2 + ∮_{|x|=1}|u|^2 <= 2n ∫|grad u|^2.

    u is a vectorized Cartesian field (scalar or vector); the gradient falls
    back to Cartesian finite differences when not supplied.  Raises
    TailNotConverged when doubling the truncation radius moves either side
    by more than 1%.
    """
    if n != 3:
        raise ValueError("volume quadrature is implemented for n = 3; "
                         "use hardy_check_radial for general n")

    mu, wmu = np.polynomial.legendre.leggauss(n_theta)
    phi = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    wphi = 2.0 * np.pi / n_phi

    def sq(val):
        return np.sum(val**2, axis=-1) if vector else val**2

    def gradsq(pts):
        if grad is not None:
            g = grad(pts)
            return np.sum(g.reshape(g.shape[0], -1) ** 2, axis=1)
        if vector:
            return sum(
                np.sum(cart_grad(lambda p, j=j: u(p)[..., j], pts, h=2e-4) ** 2,
                       axis=-1)
                for j in range(3)
            )
        return np.sum(cart_grad(u, pts, h=2e-4) ** 2, axis=-1)

    def angular_cloud(r):
        s = np.sqrt(1.0 - mu**2)
        x = np.stack([
            np.outer(s, np.cos(phi)),
            np.outer(s, np.sin(phi)),
            np.repeat(mu[:, None], n_phi, axis=1),
        ], axis=-1)  # (n_theta, n_phi, 3)
        return r * x

    def quad(rm):
        rr, wr = _radial_panels(rm, n_panels=max(20, n_r // 8), n_gauss=8)
        vol_lhs = 0.0
        vol_rhs = 0.0
        for r, w in zip(rr, wr):
            cloud = angular_cloud(r).reshape(-1, 3)
            ang_w = np.repeat(wmu, n_phi) * wphi
            vol_lhs += w * r**2 * np.sum(ang_w * sq(u(cloud)) / r**2)
            vol_rhs += w * r**2 * np.sum(ang_w * gradsq(cloud))
        surf_cloud = angular_cloud(1.0).reshape(-1, 3)
        ang_w = np.repeat(wmu, n_phi) * wphi
        surface = np.sum(ang_w * sq(u(surf_cloud)))
        return vol_lhs + surface, 2.0 * n * vol_rhs

    lhs, rhs = quad(r_max)
    lhs2, rhs2 = quad(2.0 * r_max)
    if abs(lhs2 - lhs) > 0.01 * max(abs(lhs2), 1e-300) or \
       abs(rhs2 - rhs) > 0.01 * max(abs(rhs2), 1e-300):
        raise TailNotConverged("quadrature tail beyond r_max exceeds 1%")
    ratio = 0.0 if rhs2 == 0.0 else lhs2 / rhs2
    return lhs2, rhs2, ratio


# ---------------------------------------------------------------------------
# full verification suite


def _hat_relation_rows(sample, h=0.005):
    rows = []
    for chart in ("V", "H"):
        pts = sample.points[chart][:40]
        rh = lambda x, c=chart: unit_vectors(x, c, guard=False)[0]  # noqa: E731
        th = lambda x, c=chart: unit_vectors(x, c, guard=False)[1]  # noqa: E731
        phv = lambda x, c=chart: unit_vectors(x, c, guard=False)[2]  # noqa: E731
        _, s, c, rhat, that, phat = _frame(pts, chart)
        ss, cc = s[..., None], c[..., None]
        P = lambda f, o: sph_partial(f, chart, o, h, vector=True)(pts)  # noqa: E731
        pairs = {
            "dr_rhat": P(rh, (1, 0, 0)),
            "dtheta_rhat": P(rh, (0, 1, 0)) - that,
            "dphi_rhat": P(rh, (0, 0, 1)) - ss * phat,
            "dr_thetahat": P(th, (1, 0, 0)),
            "dtheta_thetahat": P(th, (0, 1, 0)) + rhat,
            "dphi_thetahat": P(th, (0, 0, 1)) - cc * phat,
            "dr_phihat": P(phv, (1, 0, 0)),
            "dtheta_phihat": P(phv, (0, 1, 0)),
            "dphi_phihat": P(phv, (0, 0, 1)) + ss * rhat + cc * that,
        }
        for name, resid in pairs.items():
            rows.append(_row(f"frame/{chart}/{name}", np.max(np.abs(resid)), 1e-6))
        gram = np.einsum("bic,bjc->bij", np.stack([rhat, that, phat], axis=1),
                         np.stack([rhat, that, phat], axis=1))
        rows.append(_row(f"frame/{chart}/orthonormal",
                         np.max(np.abs(gram - np.eye(3))), 1e-12))
    return rows


def _operator_rows(sample, h=0.005):
    rows = []
    for chart in ("V", "H"):
        pts = sample.points[chart]
        worst_g = worst_d = worst_l = 0.0
        for F in sample.scalar_fields.values():
            g = make_sph_grad(F, chart, h)(pts) - cart_grad(F, pts)
            l = make_sph_lap(F, chart, h)(pts) - cart_lap(F, pts)
            worst_g = max(worst_g, float(np.max(np.abs(g))))
            worst_l = max(worst_l, float(np.max(np.abs(l))))
        for V in sample.vector_fields.values():
            d = make_sph_div(V, chart, h)(pts) - cart_div_oracle(V, pts)
            worst_d = max(worst_d, float(np.max(np.abs(d))))
        rows.append(_row(f"operators/{chart}/grad", worst_g, 1e-5))
        rows.append(_row(f"operators/{chart}/div", worst_d, 1e-5))
        rows.append(_row(f"operators/{chart}/lap", worst_l, 1e-5))
    return rows


def cart_div_oracle(V, pts, h: float = 1e-3):
    from .sphops import cart_div

    return cart_div(V, pts, h)


def _cutoff_rows(fam: CutoffFamily, rng):
    rows = []
    x = rng.normal(size=(4000, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= rng.uniform(1.0, 6.0, (4000, 1))
    cv, ch = fam.chi_v(x), fam.chi_h(x)
    rows.append(_row("cutoff/partition_min", 1.0 - np.min(cv + ch), 1e-10,
                     note="1 - min(chi_V + chi_H)"))
    rows.append(_row("cutoff/range", max(np.max(cv) - 1.0, -np.min(cv),
                                         np.max(ch) - 1.0, -np.min(ch)), 1e-12))
    theta_v = np.arccos(np.clip(x[:, 2] / np.linalg.norm(x, axis=1), -1, 1))
    outside = (theta_v < np.pi / 9) | (theta_v > 8 * np.pi / 9)
    rows.append(_row("cutoff/support_exact_zero",
                     float(np.max(np.abs(cv[outside]))) if outside.any() else 0.0,
                     0.0))
    pts = x[:300]
    for name, chi_fn, grad_fn, chart in (
        ("chi_V", fam.chi_v, fam.grad_chi_v, "V"),
        ("chi_H", fam.chi_h, fam.grad_chi_h, "H"),
    ):
        g = grad_fn(pts)
        rhat = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        rows.append(_row(f"cutoff/{name}_radial_grad",
                         np.max(np.abs(np.sum(rhat * g, axis=1))), 1e-8))
        azim = np.zeros(pts.shape[0])
        sel = chi_fn(pts) > 1e-13  # support lies inside the chart band
        if np.any(sel):
            _, _, phat = unit_vectors(pts[sel], chart, guard=False)
            azim[sel] = np.abs(np.sum(phat * g[sel], axis=1))
        rows.append(_row(f"cutoff/{name}_azimuthal_grad", np.max(azim), 1e-8))
        gfd = cart_grad(chi_fn, pts, h=2e-4)
        rows.append(_row(f"cutoff/{name}_grad_fd", np.max(np.abs(g - gfd)), 1e-5))
        chi = chi_fn(pts)
        mask = chi > 1e-13
        cfit = float(np.max(np.sum(g[mask] ** 2, axis=1) / chi[mask])) if mask.any() else 0.0
        rows.append(CheckRow(f"cutoff/{name}_grad_sq_over_chi", cfit, np.inf, True,
                             note="fitted C in |grad chi|^2 <= C chi"))
    return rows


def run_verify_ops(seed: int = 0, n_points: int = 100,
                   commutator_points: int = 20) -> list[CheckRow]:
    """Full operator verification suite; returns one row per check."""
    sample = default_corpus(seed=seed, n_points=n_points)
    rng = np.random.default_rng(seed + 1)
    rows = []
    rows += _hat_relation_rows(sample)
    rows += _operator_rows(sample)
    rows += _cutoff_rows(build_cutoffs(), rng)

    for kind in _KINDS:
        for N in (1, 2, 3):
            for chart in ("V", "H"):
                which = ("r", "theta", "phi") if kind == "advect" else ("theta", "phi")
                rep = commutator_check(kind, N, sample, chart=chart,
                                       n_points=commutator_points, which=which,
                                       rng_seed=seed + N)
                rows.append(_row(f"commutator/{kind}/N{N}/{chart}",
                                 rep["max_equality_err"], 1e-4,
                                 note=f"fitted C = {rep['fitted_C']:.3g}"))

    # grad div expansion against the Cartesian oracle
    for chart in ("V", "H"):
        pts = sample.points[chart][:30]
        worst = 0.0
        for V in sample.vector_fields.values():
            e = graddiv_expansion(V, chart)(pts) - cart_grad_div(V, pts)
            worst = max(worst, float(np.max(np.abs(e))))
        rows.append(_row(f"graddiv_expansion/{chart}", worst, 1e-4))

    # radial-radial cancellation
    for chart in ("V", "H"):
        pts = sample.points[chart]
        worst = 0.0
        for V in sample.vector_fields.values():
            r1, r2 = rr_cancellation(V, pts, chart)
            worst = max(worst, float(np.max(np.abs(r1 - r2))))
        rows.append(_row(f"rr_cancel/{chart}/two_routes", worst, 1e-4))
        worst_aug = max(
            rr_insensitivity(sample.vector_fields["vsmooth"], pts[:40], chart),
            rr_insensitivity(sample.vector_fields["radial_quad"], pts[:40], chart),
        )
        rows.append(_row(f"rr_cancel/{chart}/radial_blind", worst_aug, 1e-4))

    # Hardy inequality corpus (n = 3, constant 2n = 6)
    r_of = lambda x: np.linalg.norm(x, axis=-1)  # noqa: E731
    hardy_fields = {
        "inv_r2": (lambda x: r_of(x) ** -2.0, False),
        "radial_exp": (lambda x: np.exp(1.0 - r_of(x)), False),
        "dipole": (lambda x: x[..., 2] / r_of(x) ** 3, False),
        "skewed_exp": (lambda x: np.exp(1.0 - r_of(x)) * (1 + x[..., 0] / (2 * r_of(x))), False),
        "swirl_vec": (lambda x: np.stack([-x[..., 1], x[..., 0],
                                          np.zeros_like(x[..., 0])], axis=-1)
                      / r_of(x)[..., None] ** 3, True),
    }
    for name, (u, is_vec) in hardy_fields.items():
        lhs, rhs, ratio = hardy_check(u, vector=is_vec)
        rows.append(_row(f"hardy/{name}", max(0.0, (lhs - rhs) / max(rhs, 1e-300)),
                         0.0, note=f"lhs={lhs:.6g} rhs={rhs:.6g} ratio={ratio:.4f}"))
    lhs, rhs, ratio = hardy_check(lambda x: r_of(x) ** -2.0)
    rows.append(_row("hardy/inv_r2_closed_form_lhs",
                     abs(lhs - 16 * np.pi / 3) / (16 * np.pi / 3), 1e-3))
    rows.append(_row("hardy/inv_r2_closed_form_rhs",
                     abs(rhs - 32 * np.pi) / (32 * np.pi), 1e-3))
    return rows
