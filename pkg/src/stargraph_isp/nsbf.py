"""Neumann series of Bessel functions (NSBF) for Sturm-Liouville solutions.

For ``-y'' + q(x) y = rho^2 y`` on ``[0, L]`` the solutions ``phi``
(``phi(0)=1, phi'(0)=0``) and ``S`` (``S(0)=0, S'(0)=1``) are expanded as

    phi(rho, x) = cos(rho x) + sum_n (-1)^n g_n(x) j_2n(rho x)
    S(rho, x)   = sin(rho x)/rho + (1/rho) sum_n (-1)^n s_n(x) j_2n+1(rho x)

with companion expansions for the x-derivatives (coefficients ``gamma_n``
and ``sigma_n``).  Writing ``beta_k`` for the Fourier-Legendre coefficients
of the transmutation kernel (``g_n = 2 beta_2n``, ``s_n = 2 beta_2n+1``),
the coefficients obey the two-step recurrence

    x^k beta_k = (2k+1)/(2k-3) * (x^k beta_k-2 + 2(2k-1) f theta_k)
    eta_k   = int_0^x (t f' + (k-1) f) t^(k-2) beta_k-2 dt
    theta_k = int_0^x (eta_k - t^(k-1) f beta_k-2) / f^2 dt

where ``f = phi(0, .)``.  The recurrence follows from the Goursat problem
for the kernel expanded in Legendre polynomials of ``t/x``; each step is
two cumulative integrals, so no formal powers (and none of their
cancellation) appear.  ``f`` must not vanish on ``[0, L]``.

Negative spectral parameters enter as ``rho = i tau``; every evaluation
routine takes the *signed root* ``t`` (``lam = t |t|``) internally and
switches to the modified functions for ``t < 0``, keeping all values real.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bessel import spherical_in_table, spherical_jn_table
from .numerics import Grid, SampledFunction, cumulative_integral, second_derivative_smoothed
from .oracle import lam_of, shoot, signed_root

__all__ = [
    "NsbfCoefficientTable",
    "PsiCoefficientTable",
    "compute_coefficients",
    "compute_psi_coefficients",
    "eval_S_N",
    "eval_S_prime_N",
    "eval_phi_N",
    "eval_phi_prime_N",
    "eval_psi_N",
    "odd_basis",
    "even_basis",
    "endpoint_S",
    "endpoint_S_prime",
    "recover_q_from_s0",
    "recover_q_from_g0",
    "recover_q_from_tau0",
    "RecoveryWarning",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NsbfCoefficientTable:
    """Coefficients ``g, s, gamma, sigma`` (rows n = 0..N) on a grid.

    ``omega_x`` holds ``1/2 int_0^x q``; ``omega`` is its value at ``L``.
    """

    grid: Grid
    N: int
    g: np.ndarray
    s: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    omega_x: np.ndarray

    @property
    def length(self):
        return self.grid.length

    @property
    def omega(self):
        return float(self.omega_x[-1])

    @property
    def s_end(self):
        return self.s[:, -1].copy()

    @property
    def sigma_end(self):
        return self.sigma[:, -1].copy()


@dataclass(frozen=True, eq=False)
class PsiCoefficientTable:
    """Coefficients ``tau`` (rows n = 0..N) of the solution normalized at ``x = L``."""

    grid: Grid
    N: int
    tau: np.ndarray

    @property
    def length(self):
        return self.grid.length


def _as_t(rho):
    """Signed root of rho^2 for real or purely imaginary rho."""
    rho_arr = np.asarray(rho)
    if np.iscomplexobj(rho_arr):
        return signed_root(lam_of(rho_arr))
    return rho_arr.astype(float)


def _grid_index(grid, x):
    x = np.asarray(x, dtype=float)
    pos = (x - grid.start) / grid.h
    idx = np.rint(pos).astype(int)
    if np.any(idx < 0) or np.any(idx >= len(grid)) or np.any(
        np.abs(grid.points[np.clip(idx, 0, len(grid) - 1)] - x) > 1e-10 * max(1.0, grid.length)
    ):
        raise ValueError("x is not a grid point")
    return idx


def _bessel_tables(kmax, t, x):
    """Tables of j_k(|t| x) (t >= 0) or i_k(|t| x) (t < 0), plus the z = |t| x array."""
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    z = np.abs(t) * x
    neg = t < 0
    tab = np.empty(z.shape + (kmax + 1,))
    if np.any(~neg):
        tab[~neg] = spherical_jn_table(kmax, z[~neg])
    if np.any(neg):
        tab[neg] = spherical_in_table(kmax, z[neg])
    return t, x, z, neg, tab


def odd_basis(t, x, N):
    """``sin(rho x)/rho`` and the columns ``(-1)^n j_2n+1(rho x)/rho``, n = 0..N.

    For ``t < 0`` (``rho = i|t|``) the real continuations
    ``sinh(tau x)/tau`` and ``i_2n+1(tau x)/tau`` are returned.
    """
    t, x, z, neg, tab = _bessel_tables(2 * N + 1, t, x)
    at = np.abs(t)
    zero = z == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        over = tab / np.where(zero, 1.0, z)[..., None]
        lead = np.where(neg, np.sinh(z), np.sin(z)) / np.where(zero, 1.0, at)
    lead = np.where(zero, x, lead)
    cols = over[..., 1::2] * x[..., None]
    if np.any(zero):
        lim = np.zeros(N + 1)
        lim[0] = 1.0 / 3.0
        cols[zero] = lim * x[zero][..., None]
    sign = (-1.0) ** np.arange(N + 1)
    cols = np.where(neg[..., None], cols, cols * sign)
    return lead, cols


def even_basis(t, x, N):
    """``cos(rho x)`` and the columns ``(-1)^n j_2n(rho x)``, n = 0..N (cosh / i_2n for t < 0)."""
    t, x, z, neg, tab = _bessel_tables(2 * N, t, x)
    lead = np.where(neg, np.cosh(z), np.cos(z))
    cols = tab[..., 0::2]
    sign = (-1.0) ** np.arange(N + 1)
    cols = np.where(neg[..., None], cols, cols * sign)
    return lead, cols


def endpoint_S(s_end, L, t):
    """``S_N(rho, L)`` from endpoint coefficients, vectorized over signed roots ``t``."""
    s_end = np.asarray(s_end, dtype=float)
    lead, cols = odd_basis(t, L, s_end.size - 1)
    return lead + cols @ s_end


def endpoint_S_prime(sigma_end, omega, L, t):
    """``S'_N(rho, L) = cos + (omega/rho) sin + sum`` from endpoint coefficients."""
    sigma_end = np.asarray(sigma_end, dtype=float)
    lead_s, cols = odd_basis(t, L, sigma_end.size - 1)
    lead_c, _ = even_basis(t, L, 0)
    return lead_c + omega * lead_s + cols @ sigma_end


# ---------------------------------------------------------------------------
# coefficient construction


def _check_potential(q, N):
    if N < 0:
        raise ValueError("N must be nonnegative")
    if not isinstance(q, SampledFunction):
        raise TypeError("q must be a SampledFunction")
    if not np.all(np.isfinite(q.values)):
        raise ValueError("potential has non-finite samples")
    if q.grid.start != 0.0:
        raise ValueError("potential grid must start at 0")


def _beta_chain(q, kmax):
    """beta_k and beta_k' for k = 0..kmax on the grid of q."""
    x = q.grid.points
    grid = q.grid
    phi0 = shoot(q, 0.0, init="neumann", trace=True)
    S0 = shoot(q, 0.0, init="dirichlet", trace=True)
    f, df = phi0.trace, phi0.dtrace
    if np.any(f <= 0):
        raise ValueError("phi(0, x) vanishes on the edge; the series construction needs f > 0")

    npts = x.size
    beta = np.zeros((kmax + 1, npts))
    dbeta = np.zeros((kmax + 1, npts))
    beta[0] = 0.5 * (f - 1.0)
    dbeta[0] = 0.5 * df
    xi = x[1:]
    if kmax >= 1:
        beta[1, 1:] = 1.5 * (S0.trace[1:] / xi - 1.0)
        dbeta[1, 1:] = 1.5 * (S0.dtrace[1:] * xi - S0.trace[1:]) / xi**2

    fi, dfi = f[1:], df[1:]
    for k in range(2, kmax + 1):
        b, db = beta[k - 2], dbeta[k - 2]
        xk2 = x ** (k - 2)
        eta = cumulative_integral(SampledFunction(grid, (x * df + (k - 1) * f) * xk2 * b)).values
        inner = eta - x * xk2 * f * b
        theta = cumulative_integral(SampledFunction(grid, inner / (f * f))).values
        c = (2 * k + 1) / (2 * k - 3)
        xk = xi**k
        th = theta[1:]
        beta[k, 1:] = c * (b[1:] + 2 * (2 * k - 1) * fi * th / xk)
        dbeta[k, 1:] = c * (
            db[1:]
            + 2 * (2 * k - 1) * (dfi * th / xk + inner[1:] / (fi * xk) - k * fi * th / (xk * xi))
        )
    return beta, dbeta


def compute_coefficients(q, N):
    """NSBF coefficient table of order ``N`` for the sampled potential ``q``.

    Raises
    ------
    ValueError
        For non-finite samples, ``N < 0`` or a potential for which
        ``phi(0, x)`` has a zero on the edge.
    """
    _check_potential(q, N)
    x = q.grid.points
    beta, dbeta = _beta_chain(q, 2 * N + 1)
    g, dg = 2 * beta[0::2], 2 * dbeta[0::2]
    s, ds = 2 * beta[1::2], 2 * dbeta[1::2]
    omega_x = 0.5 * cumulative_integral(q).values

    xi = x[1:]
    gamma = np.zeros_like(g)
    sigma = np.zeros_like(s)
    g_cum = np.cumsum(g[:, 1:], axis=0)
    s_cum = np.cumsum(s[:, 1:], axis=0)
    w = omega_x[1:]
    for k in range(N + 1):
        tail_g = g_cum[k - 1] / xi - w if k > 0 else -w
        gamma[k, 1:] = dg[k, 1:] + 2 * k * g[k, 1:] / xi + (4 * k + 1) * tail_g
        tail_s = s_cum[k] / xi - w
        sigma[k, 1:] = ds[k, 1:] - (2 * k + 2) * s[k, 1:] / xi + (4 * k + 3) * tail_s
    return NsbfCoefficientTable(q.grid, N, g, s, gamma, sigma, omega_x)


def compute_psi_coefficients(q, N):
    """Coefficients ``tau_n`` of ``psi`` (``psi(L)=1, psi'(L)=0``).

    ``psi`` for ``q`` is the ``phi`` solution of the reflected potential
    evaluated at ``L - x``, so ``tau_n(x) = g~_n(L - x)``.
    """
    _check_potential(q, N)
    beta, _ = _beta_chain(q.reflected(), 2 * N)
    return PsiCoefficientTable(q.grid, N, 2 * beta[0::2, ::-1].copy())


# ---------------------------------------------------------------------------
# evaluation of truncated series


def _columns(table_rows, grid, x):
    idx = _grid_index(grid, x)
    return table_rows[:, idx], grid.points[idx]


def eval_S_N(table, rho, x):
    """Truncated series for ``S(rho, x)``; ``x`` must be grid point(s)."""
    coef, xs = _columns(table.s, table.grid, x)
    lead, cols = odd_basis(_as_t(rho), xs, table.N)
    return lead + np.einsum("...n,n...->...", cols, coef)


def eval_S_prime_N(table, rho, x):
    """Truncated series for ``S'(rho, x)`` with ``omega(x) = 1/2 int_0^x q``."""
    coef, xs = _columns(table.sigma, table.grid, x)
    om = table.omega_x[_grid_index(table.grid, x)]
    t = _as_t(rho)
    lead_s, cols = odd_basis(t, xs, table.N)
    lead_c, _ = even_basis(t, xs, 0)
    return lead_c + om * lead_s + np.einsum("...n,n...->...", cols, coef)


def eval_phi_N(table, rho, x):
    """Truncated series for ``phi(rho, x)``."""
    coef, xs = _columns(table.g, table.grid, x)
    lead, cols = even_basis(_as_t(rho), xs, table.N)
    return lead + np.einsum("...n,n...->...", cols, coef)


def eval_phi_prime_N(table, rho, x):
    """Truncated series for ``phi'(rho, x) = -rho sin + omega cos + sum``."""
    coef, xs = _columns(table.gamma, table.grid, x)
    om = table.omega_x[_grid_index(table.grid, x)]
    t = _as_t(rho)
    lead_c, cols = even_basis(t, xs, table.N)
    lead_s, _ = odd_basis(t, xs, 0)
    lam = t * np.abs(t)
    return -lam * lead_s + om * lead_c + np.einsum("...n,n...->...", cols, coef)


def eval_psi_N(psi_table, rho, x):
    """Truncated series for ``psi(rho, x)`` (expansion in ``L - x``)."""
    coef, xs = _columns(psi_table.tau, psi_table.grid, x)
    lead, cols = even_basis(_as_t(rho), psi_table.length - xs, psi_table.N)
    return lead + np.einsum("...n,n...->...", cols, coef)


# ---------------------------------------------------------------------------
# potential recovery


class RecoveryWarning(UserWarning):
    """A recovery formula hit a (near-)vanishing denominator."""


def _default_window(n):
    w = max(5, min(n // 4, 2 * (n // 40) + 1))
    return w if w % 2 else w - 1


def _ratio(num, den, x, scale, grid):
    """num/den with singular points replaced by interpolation from neighbours."""
    bad = np.abs(den) <= 1e-6 * scale
    out = np.empty_like(num)
    good = ~bad
    out[good] = num[good] / den[good]
    if np.any(bad):
        interior_bad = bad & (x > grid.points[0])
        if np.any(interior_bad):
            warnings.warn(
                f"{int(interior_bad.sum())} singular recovery point(s); interpolated",
                RecoveryWarning,
                stacklevel=3,
            )
        if good.sum() >= 5:
            # polynomial extrapolation / interpolation through the nearest good points
            for i in np.nonzero(bad)[0]:
                near = np.argsort(np.abs(np.nonzero(good)[0] - i))[:5]
                gi = np.nonzero(good)[0][near]
                coef = np.polyfit(x[gi] - x[i], out[gi], 3)
                out[i] = coef[-1]
        else:
            out[bad] = 0.0
    return out


def recover_q_from_s0(s0, window=None):
    """``q = (x s0)'' / (x s0 + 3x)``, the second derivative from a smoothed fit."""
    x = s0.grid.points
    w = window or _default_window(x.size)
    num = second_derivative_smoothed(SampledFunction(s0.grid, x * s0.values), w).values
    den = x * (s0.values + 3.0)
    return SampledFunction(s0.grid, _ratio(num, den, x, np.abs(x), s0.grid))


def recover_q_from_g0(g0, window=None):
    """``q = g0'' / (g0 + 1)``."""
    w = window or _default_window(len(g0.grid))
    num = second_derivative_smoothed(g0, w).values
    den = g0.values + 1.0
    return SampledFunction(g0.grid, _ratio(num, den, g0.grid.points, 1.0, g0.grid))


def recover_q_from_tau0(tau0, window=None):
    """``q = tau0'' / (tau0 + 1)``; accepts a sampled ``tau0`` or a :class:`PsiCoefficientTable`."""
    if isinstance(tau0, PsiCoefficientTable):
        tau0 = SampledFunction(tau0.grid, tau0.tau[0])
    return recover_q_from_g0(tau0, window)
