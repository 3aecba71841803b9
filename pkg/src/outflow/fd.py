"""Finite-difference helpers on (possibly nonuniform) 1D grids."""

from __future__ import annotations

import numpy as np

__all__ = ["fornberg_weights", "deriv1", "deriv2"]


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Weights of derivatives 0..m at z from the nodes x (Fornberg's algorithm).

    Returns an array w of shape (m+1, len(x)) with sum_j w[k, j] f(x_j)
    approximating the k-th derivative at z.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    w = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    w[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[k, i] = c1 * (k * w[k - 1, i - 1] - c5 * w[k, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for k in range(mn, 0, -1):
                w[k, j] = ((x[i] - z) * w[k, j] - k * w[k - 1, j]) / c3
            w[0, j] = (x[i] - z) * w[0, j] / c3
        c1 = c2
    return w


def _apply_stencils(f: np.ndarray, x: np.ndarray, order: int, width: int) -> np.ndarray:
    n = x.size
    half = width // 2
    out = np.empty_like(np.asarray(f, dtype=float))
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        sl = slice(lo, lo + width)
        w = fornberg_weights(x[i], x[sl], order)[order]
        out[i] = w @ f[sl]
    return out


def deriv1(f: np.ndarray, x: np.ndarray) -> np.ndarray:
    """First derivative, centered 3-point interior, one-sided 3-point at the ends."""
    return _apply_stencils(np.asarray(f, dtype=float), np.asarray(x, dtype=float), 1, 3)


def deriv2(f: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Second derivative from 4-point stencils (second order on smooth grids)."""
    return _apply_stencils(np.asarray(f, dtype=float), np.asarray(x, dtype=float), 2, 4)
