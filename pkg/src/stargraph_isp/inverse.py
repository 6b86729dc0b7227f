"""Recovery of the edge potentials from Dirichlet spectral data.

Stages, in order:

1. ``s_{i,n}(L_i)`` from the continuity equations at every eigenvalue
   (one least-squares system coupling all edges);
2. per edge, the Dirichlet-Dirichlet roots ``mu`` of ``S_{i,N}(rho, L_i)``
   and ``omega_i`` from their asymptotics;
3. ``sigma_{i,n}(L_i)`` from the Kirchhoff equation (again all edges);
4. per edge, the Dirichlet-Neumann roots ``nu`` of ``S'_{i,N}(rho, L_i)``;
5. multipliers ``beta_k = S_{i,N}(nu_k, L_i)``;
6. at interior points ``x_m`` the coefficients ``s_n(x_m)``, ``tau_n(x_m)``
   from ``S(nu_k, x) = beta_k psi(nu_k, x)``;
7. ``q`` from ``s_0`` and from ``tau_0``, averaged.

``c_i(rho_k) = alpha_{k,i} |rho_k|`` throughout; every system is linear
and homogeneous in ``c`` row by row, so the sign (and for negative
eigenvalues the phase) of the norming vectors is irrelevant.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import SpectralDataSet, TwoSpectra, apply_sign_convention
from .nsbf import (
    endpoint_S,
    endpoint_S_prime,
    even_basis,
    odd_basis,
    recover_q_from_s0,
    recover_q_from_tau0,
)
from .numerics import Grid, SampledFunction, least_squares_solve
from .oracle import spectrum_roots

__all__ = [
    "InverseConfig",
    "EndpointCoefficients",
    "InteriorSolution",
    "RecoveredPotential",
    "InverseResult",
    "solve_endpoint_s",
    "compute_dd_spectrum",
    "estimate_omega",
    "solve_endpoint_sigma",
    "compute_dn_spectrum",
    "compute_multipliers",
    "solve_interior",
    "interior_points",
    "run_inverse_pipeline",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InverseConfig:
    """Pipeline parameters.

    ``xm`` interior points per edge, uniformly spaced on
    ``[margin L, (1 - margin) L]``; ``window`` is the width of the local
    quartic fit used for second derivatives (5: plain interpolation, which
    suits the smooth output of the interior systems).
    """

    N: int = 10
    Nc: int = 12
    KD: int = 201
    KN: int = 201
    xm: int = 200
    margin: float = 0.02
    window: int = 5
    workers: int = 1

    def __post_init__(self):
        for name in ("N", "Nc", "KD", "KN", "xm", "workers"):
            if getattr(self, name) < (0 if name in ("N", "Nc") else 1):
                raise ValueError(f"{name} must be positive")
        if self.KD < 4:
            raise ValueError("KD must be at least 4")
        if not 0 < self.margin < 0.5:
            raise ValueError("margin must lie in (0, 1/2)")
        if self.KN < 2 * (self.Nc + 1):
            raise ValueError(f"KN={self.KN} < 2(Nc+1)={2 * (self.Nc + 1)}")


@dataclass
class EndpointCoefficients:
    s_end: np.ndarray  # (M, N+1)
    sigma_end: np.ndarray | None = None
    omega: np.ndarray | None = None
    info: dict = field(default_factory=dict)


@dataclass
class InteriorSolution:
    x: np.ndarray
    s0: SampledFunction
    tau0: SampledFunction
    s_rows: np.ndarray  # (Nc+1, xm)
    tau_rows: np.ndarray
    residuals: np.ndarray


@dataclass
class RecoveredPotential:
    q: SampledFunction
    q_from_s0: SampledFunction
    q_from_tau0: SampledFunction

    @property
    def disagreement(self):
        """Max difference of the two recoveries, a rough error estimate."""
        return float(np.max(np.abs(self.q_from_s0.values - self.q_from_tau0.values)))

    def error(self, q_true):
        """``|q_hat - q_true|`` at the recovery points; ``q_true`` is a callable or sampled."""
        x = self.q.grid.points
        return np.abs(self.q.values - np.asarray(q_true(x), dtype=float))


@dataclass
class InverseResult:
    potentials: list
    spectra: list
    endpoint: EndpointCoefficients
    interior: list
    diagnostics: dict


def _c_values(data):
    """Rows ``c_i(rho_k) = alpha_{k,i} |rho_k|`` with a canonical sign per k."""
    alpha = np.array([apply_sign_convention(a) for a in data.alpha])
    return alpha * np.abs(data.t)[:, None]


def _check_sizes(data, lengths, N):
    if data.M != len(lengths):
        raise ValueError(f"data have M={data.M} components but {len(lengths)} lengths given")
    if data.K <= N:
        raise ValueError(f"need more spectral data than coefficients (K={data.K} <= N={N})")


def _lstsq_with_info(A, b, what):
    x, info = least_squares_solve(A, b, return_info=True)
    if info["rank"] < A.shape[1]:
        log.warning("%s: rank %d < %d (condition %.3g)", what, info["rank"], A.shape[1],
                    info["condition"])
    info["shape"] = list(A.shape)
    return x, info


def solve_endpoint_s(data: SpectralDataSet, lengths, N=10):
    """Endpoint values ``s_{i,n}(L_i)``, shape (M, N+1), and system info."""
    lengths = np.asarray(lengths, dtype=float)
    _check_sizes(data, lengths, N)
    M, K, t = data.M, data.K, data.t
    c = _c_values(data)
    at = np.abs(t)
    leads, cols = zip(*(odd_basis(t, L, N) for L in lengths))
    # rho * odd basis: sin(rho L) and (-1)^n j_2n+1(rho L) (hyperbolic for rho = i tau)
    leads = [at * l for l in leads]
    cols = [at[:, None] * cl for cl in cols]
    A = np.zeros((K, M - 1, M * (N + 1)))
    b = np.zeros((K, M - 1))
    for i in range(M - 1):
        A[:, i, i * (N + 1):(i + 1) * (N + 1)] = c[:, i, None] * cols[i]
        A[:, i, (i + 1) * (N + 1):(i + 2) * (N + 1)] = -c[:, i + 1, None] * cols[i + 1]
        b[:, i] = -c[:, i] * leads[i] + c[:, i + 1] * leads[i + 1]
    x, info = _lstsq_with_info(A.reshape(K * (M - 1), -1), b.reshape(-1), "endpoint s system")
    return x.reshape(M, N + 1), info


def compute_dd_spectrum(s_end, L, KD, scan_step=None):
    """First ``KD`` nonnegative zeros of ``S_N(rho, L)``."""
    step = scan_step or math.pi / (8.0 * L)
    return spectrum_roots(lambda t: endpoint_S(s_end, L, t), 0.0, KD, L, step)


def estimate_omega(mu, L):
    """Least-squares fit of ``k (mu_k - pi k / L) ~ omega / pi`` over ``k >= floor(KD/2)``."""
    mu = np.asarray(mu, dtype=float)
    KD = mu.size
    if KD < 4:
        raise ValueError("need at least 4 Dirichlet-Dirichlet roots")
    k = np.arange(1, KD + 1)
    K0 = KD // 2
    sel = k >= K0
    return float(math.pi * np.mean(k[sel] * (mu[sel] - math.pi * k[sel] / L)))


def solve_endpoint_sigma(data: SpectralDataSet, lengths, omegas, N=10):
    """Endpoint values ``sigma_{i,n}(L_i)``, shape (M, N+1), and system info."""
    lengths = np.asarray(lengths, dtype=float)
    _check_sizes(data, lengths, N)
    M, K, t = data.M, data.K, data.t
    c = _c_values(data)
    at = np.abs(t)
    A = np.zeros((K, M * (N + 1)))
    b = np.zeros(K)
    for i, L in enumerate(lengths):
        lead_s, cols = odd_basis(t, L, N)
        lead_c, _ = even_basis(t, L, 0)
        A[:, i * (N + 1):(i + 1) * (N + 1)] = c[:, i, None] * at[:, None] * cols
        b -= c[:, i] * (at * lead_c + omegas[i] * at * lead_s)
    x, info = _lstsq_with_info(A, b, "endpoint sigma system")
    return x.reshape(M, N + 1), info


def compute_dn_spectrum(sigma_end, omega, L, KN, scan_step=None):
    """First ``KN`` nonnegative zeros of ``S'_N(rho, L)``."""
    step = scan_step or math.pi / (8.0 * L)
    return spectrum_roots(lambda t: endpoint_S_prime(sigma_end, omega, L, t), 0.0, KN, L, step)


def compute_multipliers(s_end, nu, L):
    """``beta_k = S_N(nu_k, L)``."""
    beta = endpoint_S(s_end, L, np.asarray(nu, dtype=float))
    small = np.abs(beta) < 1e-10
    if np.any(small):
        warnings.warn(f"{int(small.sum())} multiplier(s) below 1e-10", RuntimeWarning, stacklevel=2)
    return beta


def interior_points(L, count=100, margin=0.02):
    """Uniform recovery grid on ``[margin L, (1 - margin) L]``."""
    return Grid.interval(margin * L, (1.0 - margin) * L, count)


def solve_interior(nu, beta, L, Nc, x_points):
    """Least-squares ``s_n(x_m)`` and ``tau_n(x_m)`` from ``S(nu_k, x) = beta_k psi(nu_k, x)``."""
    nu = np.asarray(nu, dtype=float)
    beta = np.asarray(beta, dtype=float)
    grid = x_points if isinstance(x_points, Grid) else Grid(np.asarray(x_points, dtype=float))
    x = grid.points
    if np.any(x <= 0) or np.any(x >= L):
        raise ValueError("interior points must lie strictly inside (0, L)")
    if nu.size < 2 * (Nc + 1):
        raise ValueError(f"need at least {2 * (Nc + 1)} Dirichlet-Neumann roots, got {nu.size}")
    n = Nc + 1
    s_rows = np.full((n, x.size), np.nan)
    tau_rows = np.full((n, x.size), np.nan)
    resid = np.full(x.size, np.nan)
    for m, xm in enumerate(x):
        lead_s, cols_s = odd_basis(nu, xm, Nc)
        lead_c, cols_c = even_basis(nu, L - xm, Nc)
        A = np.hstack([cols_s, -beta[:, None] * cols_c])
        b = -lead_s + beta * lead_c
        sol, info = least_squares_solve(A, b, return_info=True)
        if info["rank"] < 2 * n:
            # expected close to the ends, where whole column families vanish
            log.debug("interior system at x=%.6g is rank deficient (%d)", xm, info["rank"])
        s_rows[:, m], tau_rows[:, m] = sol[:n], sol[n:]
        resid[m] = info["residual"]
    ok = np.isfinite(resid)
    if not np.all(ok):
        warnings.warn(f"{int((~ok).sum())} interior point(s) dropped", RuntimeWarning, stacklevel=2)
    return InteriorSolution(
        x, SampledFunction(grid, s_rows[0]), SampledFunction(grid, tau_rows[0]),
        s_rows, tau_rows, resid,
    )


def _recover(interior, window=5):
    qs = recover_q_from_s0(interior.s0, window)
    qt = recover_q_from_tau0(interior.tau0, window)
    q = SampledFunction(qs.grid, 0.5 * (qs.values + qt.values))
    return RecoveredPotential(q, qs, qt)


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def run_inverse_pipeline(data: SpectralDataSet, lengths, config: InverseConfig | None = None):
    """All stages for every edge.

    A failure on one edge is recorded in ``diagnostics["errors"]``; the
    other edges are still processed (their entries in ``potentials`` are
    ``None`` for failed edges).
    """
    cfg = config or InverseConfig()
    lengths = np.asarray(lengths, dtype=float)
    M = lengths.size
    # the worker count is left out so that outputs do not depend on it
    config = {k: v for k, v in cfg.__dict__.items() if k != "workers"}
    diag = {"config": config, "errors": {}}

    s_end, info_s = solve_endpoint_s(data, lengths, cfg.N)
    diag["stage1"] = info_s

    def dd(i):
        mu = compute_dd_spectrum(s_end[i], lengths[i], cfg.KD)
        return mu, estimate_omega(mu, lengths[i])

    dd_res = _map(dd, range(M), cfg.workers)
    mu = [r[0] for r in dd_res]
    omega = np.array([r[1] for r in dd_res])

    sigma_end, info_sig = solve_endpoint_sigma(data, lengths, omega, cfg.N)
    diag["stage3"] = info_sig
    endpoint = EndpointCoefficients(s_end, sigma_end, omega, {"s": info_s, "sigma": info_sig})

    def edge(i):
        L = lengths[i]
        nu = compute_dn_spectrum(sigma_end[i], omega[i], L, cfg.KN)
        beta = compute_multipliers(s_end[i], nu, L)
        interior = solve_interior(nu, beta, L, cfg.Nc, interior_points(L, cfg.xm, cfg.margin))
        return TwoSpectra(mu[i], nu, omega[i], beta), interior, _recover(interior, cfg.window)

    def guarded(i):
        try:
            return edge(i)
        except (ValueError, RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
            log.error("edge %d failed: %s", i + 1, exc)
            return exc

    results = _map(guarded, range(M), cfg.workers)
    spectra, interiors, potentials = [], [], []
    edges_diag = []
    for i, r in enumerate(results):
        if isinstance(r, Exception):
            diag["errors"][str(i + 1)] = str(r)
            spectra.append(TwoSpectra(mu[i], np.empty(0), omega[i]))
            interiors.append(None)
            potentials.append(None)
            continue
        ts, interior, rec = r
        spectra.append(ts)
        interiors.append(interior)
        potentials.append(rec)
        edges_diag.append({
            "edge": i + 1,
            **ts.to_dict(),
            "s_end": s_end[i].tolist(),
            "sigma_end": sigma_end[i].tolist(),
            "interior_residual_max": float(np.nanmax(interior.residuals)),
            "s0_tau0_disagreement": rec.disagreement,
        })
    diag["edges"] = edges_diag
    return InverseResult(potentials, spectra, endpoint, interiors, diag)
