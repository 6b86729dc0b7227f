"""Forward problem: eigenvalues and norming vectors of the star graph.

With ``w_i = c_i S_i(rho, x)`` on every edge, continuity and the Kirchhoff
condition at the centre give the M x M system ``S(rho) c = 0``.  Instead of
scanning ``det S`` for sign changes (which misses the even-multiplicity
zeros produced by coinciding Dirichlet spectra of several edges) the
spectrum is bracketed by the Dirichlet-Dirichlet roots ("poles") of the
edges: between consecutive poles

    F(lam) = sum_i S_i'(L_i) / S_i(L_i)

decreases strictly from +inf to -inf and has exactly one zero, which is an
eigenvalue.  A pole shared by m edges is an eigenvalue of multiplicity
m - 1.  Every spectral parameter is handled as a signed root ``t``
(``lam = t |t|``), so negative eigenvalues need no complex arithmetic.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.optimize

from .graph import SpectralDataSet, apply_sign_convention
from .nsbf import compute_coefficients, endpoint_S, endpoint_S_prime, eval_S_N
from .numerics import SampledFunction, find_real_roots, integrate
from .oracle import lower_bound_t

__all__ = [
    "DIRECT_N",
    "characteristic_matrix",
    "characteristic_det",
    "graph_tables",
    "graph_spectrum_from_edges",
    "compute_spectrum",
    "compute_norming_vector",
    "generate_spectral_data",
    "nullspace_vector",
    "apply_sign_convention",
]

log = logging.getLogger(__name__)

# Truncation used for forward computations.  The inverse problem works with
# N = 10, but the kinked edge of Example 1 needs more terms before the
# eigenvalues agree with direct integration to 1e-8.
DIRECT_N = 30

_POLE_TOL = 1e-9
_MAX_EXTENSIONS = 40


def characteristic_matrix(S, Sp):
    """The M x M matrix of continuity rows and the Kirchhoff row.

    ``S`` and ``Sp`` hold ``S_i(rho, L_i)`` and ``S_i'(rho, L_i)``.
    """
    S = np.asarray(S, dtype=float)
    Sp = np.asarray(Sp, dtype=float)
    M = S.size
    A = np.zeros((M, M))
    i = np.arange(M - 1)
    A[i, i] = S[:-1]
    A[i, i + 1] = -S[1:]
    A[-1] = Sp
    return A


class GraphTables(list):
    """Edge tables, built for ``q + shift`` when ``phi(0, x)`` of ``q`` vanishes.

    ``S(rho, x; q) = S(rho~, x; q + c)`` with ``rho~^2 = rho^2 + c``, so a
    shifted table serves ``q`` once the spectral parameter is shifted too.
    """

    def __init__(self, tables, shift=0.0):
        super().__init__(tables)
        self.shift = float(shift)


def _series_t(tables, t):
    """Signed root at which the (possibly shifted) tables are evaluated."""
    shift = getattr(tables, "shift", 0.0)
    if shift == 0.0:
        return t
    lam = np.asarray(t, dtype=float) * np.abs(t) + shift
    return np.sign(lam) * np.sqrt(np.abs(lam))


def _edge_values(tables, t):
    t = _series_t(tables, t)
    S = np.array([endpoint_S(tb.s_end, tb.length, t) for tb in tables])
    Sp = np.array([endpoint_S_prime(tb.sigma_end, tb.omega, tb.length, t) for tb in tables])
    return S, Sp


def _row_scales(A, t):
    # unit max per row, floored at the natural size of the entries
    # (S ~ 1/|rho|, S' ~ 1) so that a row that vanishes to rounding is not
    # blown up into noise
    natural = np.full(A.shape[0], 1.0 / max(1.0, abs(t)))
    natural[-1] = 1.0
    return np.maximum(np.max(np.abs(A), axis=1), natural)


def characteristic_det(tables, rho):
    """``det S(rho)`` with rows scaled to unit max norm (LU, partial pivoting)."""
    t = float(np.real(rho)) if np.isreal(rho) else -float(np.imag(rho))
    S, Sp = _edge_values(tables, t)
    A = characteristic_matrix(S.ravel(), Sp.ravel())
    return float(np.linalg.det(A / _row_scales(A, t)[:, None]))


def nullspace_vector(A, t=0.0):
    """Right singular vector of the smallest singular value, unit 2-norm.

    ``t`` (the signed root at which ``A`` was built) sets the row scaling.
    """
    A = np.asarray(A, dtype=float)
    _, _, vt = np.linalg.svd(A / _row_scales(A, t)[:, None])
    return vt[-1]


def graph_tables(graph, N=DIRECT_N):
    """NSBF coefficient tables for every edge.

    The coefficient construction needs ``phi(0, x) > 0``; if that fails on
    some edge, all tables are built for ``q - min q`` (see :class:`GraphTables`).
    """
    try:
        return GraphTables([compute_coefficients(e.potential, N) for e in graph.edges])
    except ValueError:
        qmin = min(float(np.min(p.values)) for p in graph.potentials)
        if qmin >= 0:
            raise
    shift = -qmin
    log.info("tables built for the potentials shifted by %.6g", shift)
    return GraphTables(
        [compute_coefficients(SampledFunction(e.potential.grid, e.potential.values + shift), N)
         for e in graph.edges],
        shift,
    )


def _table_evaluator(tb, tables=None):
    s_end, sigma_end, om, L = tb.s_end, tb.sigma_end, tb.omega, tb.length

    def values(t):
        t = _series_t(tables, np.atleast_1d(np.asarray(t, dtype=float)))
        return endpoint_S(s_end, L, t), endpoint_S_prime(sigma_end, om, L, t)

    return values


def _group_poles(poles, owners):
    order = np.argsort(poles, kind="stable")
    poles, owners = poles[order], owners[order]
    groups = []
    for p, o in zip(poles, owners):
        if groups and abs(p - groups[-1][0]) <= _POLE_TOL * max(1.0, abs(p)):
            groups[-1][1].append(int(o))
        else:
            groups.append([float(p), [int(o)]])
    return groups


def graph_spectrum_from_edges(evaluators, lengths, count, t_lo, scan_step=None):
    """First ``count`` eigenvalues of the star graph as signed roots.

    Parameters
    ----------
    evaluators : list of callables
        ``t -> (S_i(L_i), S_i'(L_i))`` for arrays of signed roots.
    lengths : array
    count : int
    t_lo : float
        Signed root below every eigenvalue (e.g. ``sqrt`` of ``min q - 1``).

    Returns
    -------
    t : ndarray
        Ascending signed roots, multiple eigenvalues repeated.
    multiplicity_groups : list of (t, edge indices)
        Poles shared by two or more edges (each an eigenvalue of
        multiplicity ``len(edges) - 1``).
    """
    lengths = np.asarray(lengths, dtype=float)
    step = scan_step or math.pi / (8.0 * lengths.max())

    def F(t):
        tot = 0.0
        for ev in evaluators:
            S, Sp = ev(np.array([t]))
            tot += Sp[0] / S[0]
        return tot

    # Weyl: about sum(L) t / pi eigenvalues below t
    t_hi = max(t_lo, 0.0) + math.pi * (count + 3) / lengths.sum()
    for _ in range(_MAX_EXTENSIONS):
        poles, owners = [], []
        for i, ev in enumerate(evaluators):
            r = find_real_roots(lambda t, ev=ev: ev(t)[0], t_lo, t_hi, step)
            poles.append(r)
            owners.append(np.full(r.size, i))
        groups = _group_poles(np.concatenate(poles), np.concatenate(owners))

        roots, shared = [], []
        edges = [t_lo] + [g[0] for g in groups]
        for a, b in zip(edges[:-1], edges[1:]):
            roots.append(_bracketed_root(F, a, b, a == t_lo))
        last = edges[-1]
        if F(t_hi) < 0:
            roots.append(_bracketed_root(F, last, t_hi, last == t_lo, right_open=False))
        for p, own in groups:
            if len(own) > 1:
                roots.extend([p] * (len(own) - 1))
                shared.append((p, own))
        roots = sorted(roots)
        if len(roots) >= count:
            return np.array(roots[:count]), [s for s in shared if s[0] <= roots[count - 1]]
        t_hi = t_hi + math.pi * (count - len(roots) + 3) / lengths.sum()
    raise RuntimeError(f"found only {len(roots)} of {count} eigenvalues")


def _bracketed_root(F, a, b, left_closed, right_open=True):
    """Zero of the decreasing function F in (a, b); poles at open ends."""
    width = b - a
    lo = a if left_closed else a + min(_POLE_TOL * max(1.0, abs(a)), 1e-3 * width)
    hi = b - min(_POLE_TOL * max(1.0, abs(b)), 1e-3 * width) if right_open else b
    flo, fhi = F(lo), F(hi)
    # move inwards until the pole singularities have the expected signs
    shrink = 0
    while (not flo > 0 or not fhi < 0) and shrink < 60:
        if not flo > 0:
            if left_closed:
                break
            lo = a + 10.0 * (lo - a)
            flo = F(lo)
        if not fhi < 0:
            hi = b - 10.0 * (b - hi)
            fhi = F(hi)
        shrink += 1
    if not (flo > 0 > fhi):
        raise RuntimeError(f"could not bracket an eigenvalue in ({a}, {b})")
    return scipy.optimize.brentq(F, lo, hi, xtol=1e-15 * max(1.0, abs(b)),
                                 rtol=4 * np.finfo(float).eps)


def compute_spectrum(graph, K, N=DIRECT_N, tables=None, return_groups=False):
    """First ``K`` eigenvalues as signed roots ``t`` (``lam = t |t|``).

    For ``lam >= 0`` the signed root is ``rho`` itself; a negative value
    ``-tau`` stands for ``rho = i tau``.
    """
    if K < 1:
        raise ValueError("K must be positive")
    tables = tables or graph_tables(graph, N)
    evals = [_table_evaluator(tb, tables) for tb in tables]
    t, groups = graph_spectrum_from_edges(evals, graph.lengths, K, lower_bound_t(graph.potentials))
    return (t, groups) if return_groups else t


def _S_squared_integrals(tables, t):
    ts = float(_series_t(tables, t))
    out = []
    for tb in tables:
        S = eval_S_N(tb, _rho(ts), tb.grid.points)
        out.append(integrate(SampledFunction(tb.grid, S * S)))
    return np.array(out)


def _rho(t):
    return t if t >= 0 else 1j * abs(t)


def compute_norming_vector(tables, t):
    """Norming vector ``alpha_k`` of a simple eigenvalue with signed root ``t``.

    ``alpha_i = c_i / (|rho| sqrt(sum c_i^2 int S_i^2))``; for negative
    eigenvalues ``|rho|`` replaces ``rho`` so the vector stays real.

    Raises
    ------
    ValueError
        If the characteristic matrix has a nullspace of dimension > 1.
    """
    S, Sp = _edge_values(tables, t)
    A = characteristic_matrix(S.ravel(), Sp.ravel())
    sv = np.linalg.svd(A / _row_scales(A, t)[:, None], compute_uv=False)
    if sv[-2] < 1e-8 * sv[0]:
        raise ValueError(f"eigenvalue at t={t} is multiple; use the degenerate path")
    c = nullspace_vector(A, t)
    w = _S_squared_integrals(tables, t)
    return apply_sign_convention(c / (abs(t) * math.sqrt(np.sum(c * c * w))))


def _degenerate_vectors(tables, t, edges):
    """Orthonormal norming vectors at a pole shared by ``edges``."""
    M = len(tables)
    _, Sp = _edge_values(tables, t)
    Sp = Sp.ravel()
    w = _S_squared_integrals(tables, t)
    e = np.asarray(edges)
    # basis of {c supported on e : sum c_j S_j' = 0}, orthonormal for the weights w
    d = np.sqrt(w[e])
    a = Sp[e] / d
    _, _, vt = np.linalg.svd(a[None, :])
    basis = vt[1:] / d[None, :]
    out = []
    for b in basis:
        c = np.zeros(M)
        c[e] = b
        out.append(apply_sign_convention(c / abs(t)))
    return out


def generate_spectral_data(graph, K, N=DIRECT_N, workers=1):
    """Eigenvalues and norming vectors of the first ``K`` eigenvalues."""
    tables = graph_tables(graph, N)
    t, groups = compute_spectrum(graph, K, N, tables=tables, return_groups=True)
    alpha = np.empty((K, graph.M))
    done = np.zeros(K, dtype=bool)
    for p, edges in groups:
        idx = np.flatnonzero(t == p)
        vecs = _degenerate_vectors(tables, p, edges)
        for j, v in zip(idx, vecs):
            alpha[j] = v
            done[j] = True
    todo = np.flatnonzero(~done)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vecs = list(ex.map(lambda k: compute_norming_vector(tables, t[k]), todo))
    else:
        vecs = [compute_norming_vector(tables, t[k]) for k in todo]
    for k, v in zip(todo, vecs):
        alpha[k] = v
    if groups:
        log.warning("spectrum contains %d multiple eigenvalue(s); data flagged degenerate", len(groups))
    return SpectralDataSet(t * np.abs(t), alpha, degenerate=bool(groups))
