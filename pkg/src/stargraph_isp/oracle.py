"""Reference solutions by direct integration of ``-y'' + q y = rho^2 y``.

This is the independent check for everything computed from the Bessel
series.  Integration runs on the sample grid of the potential with a
fourth-order Magnus step (Simpson nodes, midpoint value of ``q`` from a
cubic through the four nearest samples).  The step is exact for constant
potentials and its error does not deteriorate for large ``rho``, which the
high-index eigenvalues require.  A classical RK4 stepper is kept for
convergence studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import SampledFunction, find_real_roots

__all__ = [
    "IvpResult",
    "shoot",
    "oracle_spectrum",
    "oracle_graph_spectrum",
    "oracle_edge_values",
    "oracle_norming_vectors",
    "signed_root",
    "lam_of",
]

_CHUNK = 256


@dataclass(frozen=True)
class IvpResult:
    """Solution values at the far end (and optionally on the whole grid).

    For ``init="terminal"`` the far end is ``x = 0``.  With an array of
    ``rho`` every field gains a leading axis.
    """

    y: np.ndarray | float
    dy: np.ndarray | float
    trace: np.ndarray | None = None
    dtrace: np.ndarray | None = None


def lam_of(rho):
    """Spectral parameter ``rho^2`` as a real array (``rho`` real or imaginary)."""
    rho = np.asarray(rho)
    if np.iscomplexobj(rho):
        if np.any((rho.real != 0) & (rho.imag != 0)):
            raise ValueError("rho must be real or purely imaginary")
        return np.where(rho.imag != 0, -rho.imag**2, rho.real**2).astype(float)
    return rho.astype(float) ** 2


def signed_root(lam):
    """``sign(lam) * sqrt(|lam|)``: real ``rho`` for lam >= 0, ``-Im rho`` below."""
    lam = np.asarray(lam, dtype=float)
    return np.sign(lam) * np.sqrt(np.abs(lam))


def _midpoints(q):
    n = q.size
    mid = np.empty(n - 1)
    if n >= 4:
        mid[1:-1] = (-q[:-3] + 9.0 * q[1:-2] + 9.0 * q[2:-1] - q[3:]) / 16.0
        mid[0] = (5.0 * q[0] + 15.0 * q[1] - 5.0 * q[2] + q[3]) / 16.0
        mid[-1] = (5.0 * q[-1] + 15.0 * q[-2] - 5.0 * q[-3] + q[-4]) / 16.0
    else:
        mid[:] = 0.5 * (q[:-1] + q[1:])
    return mid


def _magnus_steps(q, h, lam):
    """Step matrices, shape (nsteps, nlam, 2, 2)."""
    q0, q1 = q[:-1, None], q[1:, None]
    qbar = (q0 + 4.0 * _midpoints(q)[:, None] + q1) / 6.0
    abar = qbar - lam[None, :]
    c = np.broadcast_to(h * h * (q0 - q1) / 12.0, abar.shape)
    k2 = c * c + h * h * abar
    theta = np.sqrt(np.abs(k2))
    small = theta < 1e-4
    with np.errstate(over="ignore", invalid="ignore"):
        cs = np.where(k2 < 0, np.cos(theta), np.cosh(theta))
        sn = np.where(k2 < 0, np.sin(theta), np.sinh(theta)) / np.where(small, 1.0, theta)
    sn = np.where(small, 1.0 + k2 / 6.0, sn)
    E = np.empty(abar.shape + (2, 2))
    E[..., 0, 0] = cs + sn * c
    E[..., 0, 1] = sn * h
    E[..., 1, 0] = sn * h * abar
    E[..., 1, 1] = cs - sn * c
    return E


def _product(E):
    # ordered product E[-1] @ ... @ E[0] by pairwise reduction
    while E.shape[0] > 1:
        if E.shape[0] % 2:
            E = np.concatenate([E[1:-1:2] @ E[0:-1:2], E[-1:]], axis=0)
        else:
            E = E[1::2] @ E[0::2]
    return E[0]


def _rk4_trace(q, h, lam, y0):
    qm = _midpoints(q)
    n = q.size
    Y = np.empty((n, lam.size, 2))
    Y[0] = y0
    y = np.broadcast_to(y0, (lam.size, 2)).astype(float)
    for j in range(n - 1):
        a0, am, a1 = q[j] - lam, qm[j] - lam, q[j + 1] - lam
        k1 = np.stack([y[:, 1], a0 * y[:, 0]], axis=-1)
        t = y + 0.5 * h * k1
        k2 = np.stack([t[:, 1], am * t[:, 0]], axis=-1)
        t = y + 0.5 * h * k2
        k3 = np.stack([t[:, 1], am * t[:, 0]], axis=-1)
        t = y + h * k3
        k4 = np.stack([t[:, 1], a1 * t[:, 0]], axis=-1)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        Y[j + 1] = y
    return Y


_INITS = {"dirichlet": (0.0, 1.0), "neumann": (1.0, 0.0), "terminal": (1.0, 0.0)}


def shoot(q, rho=0.0, init="dirichlet", trace=False, method="magnus", lam=None):
    """Integrate ``-y'' + q y = rho^2 y`` across the grid of ``q``.

    Parameters
    ----------
    q : SampledFunction
        Potential sampled on ``[0, L]``.
    rho : float, complex or array
        Real or purely imaginary square root of the spectral parameter.
        Ignored when ``lam`` is given.
    init : {"dirichlet", "neumann", "terminal"}
        ``y(0)=0, y'(0)=1`` (the solution S), ``y(0)=1, y'(0)=0`` (phi) or
        ``y(L)=1, y'(L)=0`` integrated backwards (psi).
    trace : bool
        Also return ``y`` and ``y'`` at every grid point.
    method : {"magnus", "rk4"}

    Raises
    ------
    FloatingPointError
        If the integration produced non-finite values.
    """
    if init not in _INITS:
        raise ValueError(f"unknown init {init!r}")
    scalar = np.ndim(rho if lam is None else lam) == 0
    lam_arr = np.atleast_1d(lam_of(rho) if lam is None else np.asarray(lam, dtype=float))
    qv = q.values
    h = q.grid.h
    backward = init == "terminal"
    if backward:
        qv = qv[::-1]
    y0 = np.array(_INITS[init])

    if method == "rk4":
        Y = _rk4_trace(qv, h if not backward else -h, lam_arr, y0)
        if backward:
            Y = Y[::-1]
            y_end, dy_end = Y[0, :, 0], Y[0, :, 1]
        else:
            y_end, dy_end = Y[-1, :, 0], Y[-1, :, 1]
        tr = (Y[..., 0].T, Y[..., 1].T) if trace else (None, None)
    elif method == "magnus":
        hh = -h if backward else h
        if trace:
            E = _magnus_steps(qv, hh, lam_arr)
            Y = np.empty((qv.size, lam_arr.size, 2))
            Y[0] = y0
            for j in range(qv.size - 1):
                Y[j + 1] = np.einsum("lij,lj->li", E[j], Y[j])
            if backward:
                Y = Y[::-1]
                y_end, dy_end = Y[0, :, 0], Y[0, :, 1]
            else:
                y_end, dy_end = Y[-1, :, 0], Y[-1, :, 1]
            tr = (Y[..., 0].T, Y[..., 1].T)
        else:
            y_end = np.empty(lam_arr.size)
            dy_end = np.empty(lam_arr.size)
            for s in range(0, lam_arr.size, _CHUNK):
                P = _product(_magnus_steps(qv, hh, lam_arr[s:s + _CHUNK]))
                v = P @ y0
                y_end[s:s + _CHUNK], dy_end[s:s + _CHUNK] = v[:, 0], v[:, 1]
            tr = (None, None)
    else:
        raise ValueError(f"unknown method {method!r}")

    if not (np.all(np.isfinite(y_end)) and np.all(np.isfinite(dy_end))):
        raise FloatingPointError("integration became non-finite")
    if scalar:
        return IvpResult(float(y_end[0]), float(dy_end[0]),
                         None if tr[0] is None else tr[0][0],
                         None if tr[1] is None else tr[1][0])
    return IvpResult(y_end, dy_end, tr[0], tr[1])


def oracle_edge_values(q):
    """Evaluator ``t -> (S(L), S'(L))`` for signed roots ``t`` (``lam = t|t|``)."""

    def values(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        res = shoot(q, lam=t * np.abs(t), init="dirichlet")
        return res.y, res.dy

    return values


def lower_bound_t(potentials):
    """A signed root safely below every Dirichlet eigenvalue."""
    qmin = min(float(np.min(p.values)) for p in potentials)
    return float(signed_root(qmin - 1.0))


def oracle_spectrum(q, kind="DD", count=10, scan_step=None):
    """First ``count`` square roots of the DD or DN eigenvalues of one edge.

    Negative eigenvalues are returned as negative numbers ``-tau`` with
    ``lam = -tau^2`` (signed-root convention).
    """
    if kind not in ("DD", "DN"):
        raise ValueError("kind must be 'DD' or 'DN'")
    L = q.grid.length
    step = scan_step or math.pi / (8.0 * L)
    idx = 0 if kind == "DD" else 1

    def f(t):
        res = shoot(q, lam=t * np.abs(t), init="dirichlet")
        return res.y if idx == 0 else res.dy

    return spectrum_roots(f, lower_bound_t([q]), count, L, step)


def spectrum_roots(f, t_lo, count, length, step):
    """First ``count`` sign-change roots of ``f`` above ``t_lo``, extending the scan."""
    hi = max(t_lo, 0.0) + math.pi * (count + 2) / length
    lo = t_lo
    roots = np.empty(0)
    for _ in range(30):
        new = find_real_roots(f, lo, hi, step)
        roots = np.concatenate([roots, new])
        if roots.size >= count:
            return roots[:count]
        lo, hi = hi, hi + math.pi * (count - roots.size + 2) / length
    raise RuntimeError(f"found only {roots.size} of {count} roots")


def oracle_graph_spectrum(graph, count, scan_step=None):
    """Square roots of the first ``count`` graph eigenvalues from shot edge values."""
    from .direct import graph_spectrum_from_edges

    evals = [oracle_edge_values(e.potential) for e in graph.edges]
    t, _ = graph_spectrum_from_edges(evals, graph.lengths, count,
                                  lower_bound_t([e.potential for e in graph.edges]),
                                  scan_step)
    return t


def oracle_norming_vectors(graph, t_values):
    """Norming vectors from shot eigenfunctions (simple eigenvalues only)."""
    from .direct import characteristic_matrix, nullspace_vector, apply_sign_convention
    from .numerics import integrate

    out = []
    for t in np.atleast_1d(t_values):
        lam = t * abs(t)
        S, Sp, w = [], [], []
        for e in graph.edges:
            r = shoot(e.potential, lam=lam, init="dirichlet", trace=True)
            S.append(r.y)
            Sp.append(r.dy)
            w.append(integrate(SampledFunction(e.potential.grid, r.trace**2)))
        c = nullspace_vector(characteristic_matrix(np.array(S), np.array(Sp)), t)
        c = c / math.sqrt(np.sum(c * c * np.array(w)))
        out.append(apply_sign_convention(c / math.sqrt(abs(lam))))
    return np.array(out)
