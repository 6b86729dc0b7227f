"""Grids, quadrature, root finding, least squares and smoothed differentiation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.signal

from .bessel import spherical_bessel_j

__all__ = [
    "DEFAULT_GRID_POINTS",
    "Grid",
    "SampledFunction",
    "cumulative_integral",
    "integrate",
    "least_squares_solve",
    "find_real_roots",
    "second_derivative_smoothed",
    "spherical_bessel_j",
]

DEFAULT_GRID_POINTS = 2001


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform, strictly increasing set of sample points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a grid needs at least two points")
        d = np.diff(pts)
        if np.any(d <= 0):
            raise ValueError("grid points must be strictly increasing")
        h = (pts[-1] - pts[0]) / (pts.size - 1)
        if np.max(np.abs(d - h)) > 1e-9 * max(h, abs(pts[-1])):
            raise ValueError("grid must be uniform")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, length, count=DEFAULT_GRID_POINTS):
        """Grid on ``[0, length]``."""
        if not length > 0:
            raise ValueError("length must be positive")
        return cls(np.linspace(0.0, float(length), int(count)))

    @classmethod
    def interval(cls, a, b, count):
        return cls(np.linspace(float(a), float(b), int(count)))

    @property
    def h(self):
        return (self.points[-1] - self.points[0]) / (self.points.size - 1)

    @property
    def start(self):
        return float(self.points[0])

    @property
    def length(self):
        return float(self.points[-1])

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.points.size, float(self.points[0]), float(self.points[-1])))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Real function known through its values on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (len(self.grid),):
            raise ValueError("values and grid lengths differ")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, func, grid):
        return cls(grid, np.broadcast_to(func(grid.points), grid.points.shape))

    @property
    def x(self):
        return self.grid.points

    def reflected(self):
        """``t -> f(L - t)`` on the same grid (grid must start at 0)."""
        return SampledFunction(self.grid, self.values[::-1])

    def __call__(self, x):
        return np.interp(x, self.grid.points, self.values)


@lru_cache(maxsize=None)
def _interval_weights(size):
    """Weights of the Lagrange interpolant through ``size`` equispaced nodes
    integrated over each of the ``size - 1`` unit cells; row p is cell [p, p+1].

    Computed in exact rational arithmetic, then rounded once."""
    w = np.zeros((size - 1, size))
    for j in range(size):
        # coefficients (ascending powers) of prod_{m != j} (x - m) / (j - m)
        poly = [Fraction(1)]
        for m in range(size):
            if m == j:
                continue
            shifted = [Fraction(0)] + poly
            poly = [a - m * b for a, b in zip(shifted, poly + [Fraction(0)])]
            poly = [c / (j - m) for c in poly]
        for p in range(size - 1):
            w[p, j] = float(sum(c * (Fraction(p + 1) ** (d + 1) - Fraction(p) ** (d + 1)) / (d + 1)
                                for d, c in enumerate(poly)))
    return w


def cumulative_integral(f):
    """``F(x) = int_0^x f`` at every grid point, ``F(x_0) = 0``.

    Each cell is integrated with the quintic through the six nearest
    samples (centred where possible), so the global error is O(h^6) for
    smooth integrands.
    """
    vals = f.values if isinstance(f, SampledFunction) else None
    if vals is None:
        raise TypeError("expected a SampledFunction")
    n = vals.size
    if n < 5:
        raise ValueError("cumulative_integral needs at least 5 grid points")
    size = min(6, n)
    w = _interval_weights(size)
    half = size // 2 - 1  # cell [j, j+1] is stencil cell `half` when centred
    cells = np.arange(n - 1)
    first = np.clip(cells - half, 0, n - size)
    pos = cells - first
    idx = first[:, None] + np.arange(size)[None, :]
    cell_int = np.einsum("ij,ij->i", w[pos], vals[idx]) * f.grid.h
    # extended-precision running sum keeps the accumulated rounding at the
    # level of a single cell (where the platform has a long double)
    out = np.concatenate([[0.0], np.cumsum(cell_int.astype(np.longdouble)).astype(float)])
    return SampledFunction(f.grid, out)


def integrate(f):
    """Definite integral over the whole grid."""
    return float(cumulative_integral(f).values[-1])


def least_squares_solve(A, b, return_info=False):
    """Minimum-norm least-squares solution of ``A x ~ b``.

    Uses a complete orthogonal factorization with column pivoting (LAPACK
    ``gelsy``); the effective rank is decided at ``max(m, n) * eps``
    relative to the leading pivot.

    Returns ``x``, or ``(x, info)`` with rank, residual norm and the
    2-norm condition number when ``return_info`` is set.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.shape[:1] != A.shape[:1]:
        raise ValueError(f"dimension mismatch: A {A.shape}, b {b.shape}")
    m, n = A.shape
    cond = max(m, n) * np.finfo(float).eps
    x, _, rank, _ = scipy.linalg.lstsq(A, b, cond=cond, lapack_driver="gelsy")
    if not return_info:
        return x
    sv = np.linalg.svd(A, compute_uv=False)
    info = {
        "rank": int(rank),
        "residual": float(np.linalg.norm(A @ x - b)),
        "condition": float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf,
    }
    return x, info


def find_real_roots(f: Callable[[np.ndarray], np.ndarray], lo, hi, scan_step, xtol=1e-12):
    """All sign-change roots of ``f`` in ``[lo, hi]``, ascending.

    ``f`` must accept a 1-d array.  The interval is scanned with step
    ``scan_step`` and every bracket refined with Brent's method down to a
    width of ``xtol * max(1, |root|)``.  Roots of even multiplicity (no sign
    change) are not reported.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if not scan_step > 0:
        raise ValueError("scan_step must be positive")
    count = int(math.ceil((hi - lo) / scan_step)) + 1
    xs = np.linspace(lo, hi, count)
    fs = np.asarray(f(xs), dtype=float)

    def scalar(x):
        return float(np.asarray(f(np.array([x])), dtype=float)[0])

    roots = list(xs[fs == 0.0])
    s = np.sign(fs)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        a, b = xs[i], xs[i + 1]
        tol = xtol * max(1.0, abs(a), abs(b))
        roots.append(scipy.optimize.brentq(scalar, a, b, xtol=tol, rtol=4 * np.finfo(float).eps))
    return np.array(sorted(roots))


def second_derivative_smoothed(f, window):
    """Second derivative from a sliding degree-4 least-squares fit.

    Near the ends the first/last full window is fitted and its polynomial
    differentiated (one-sided windows).
    """
    n = len(f.grid)
    if window % 2 == 0 or window < 5 or window > n // 4:
        raise ValueError(f"invalid window {window} for {n} points (odd, 5 <= w <= n/4)")
    d2 = scipy.signal.savgol_filter(f.values, window, 4, deriv=2, delta=f.grid.h, mode="interp")
    return SampledFunction(f.grid, d2)
