"""Spherical Bessel functions of the first kind, ordinary and modified.

Tables for all orders ``0..kmax`` are produced at once, since the series
representations always need the full set.  Orders below the argument are
reached by upward recurrence (stable there); orders above it by the
continued-fraction form of Miller's downward recurrence, which never
overflows for small arguments.  ``scipy.special.spherical_jn`` gives the
same values but is called one order at a time, which dominated the run
time of the root searches.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import spherical_jn

__all__ = [
    "spherical_bessel_j",
    "spherical_jn_table",
    "spherical_in_table",
]

_EXTRA_ORDERS = 40
_TAYLOR_Z = 1e-3


def _start_order(kmax, zmax):
    return int(kmax + _EXTRA_ORDERS + math.ceil(zmax))


def _taylor_table(kmax, z, modified=False):
    """Ascending series, accurate for ``|z| <= _TAYLOR_Z`` (three terms)."""
    sign = 1.0 if modified else -1.0
    out = np.empty(z.shape + (kmax + 1,))
    z2 = 0.5 * z * z
    lead = np.ones_like(z)
    for k in range(kmax + 1):
        if k > 0:
            lead = lead * z / (2 * k + 1)
        t1 = sign * z2 / (2 * k + 3)
        t2 = t1 * sign * z2 / (2 * (2 * k + 5))
        out[..., k] = lead * (1.0 + t1 + t2)
    return out


def spherical_jn_table(kmax, z):
    """Return ``j_k(z)`` for ``k = 0..kmax`` as an array of shape ``z.shape + (kmax+1,)``."""
    z = np.asarray(z, dtype=float)
    az = np.abs(z)
    out = np.zeros(az.shape + (kmax + 1,))

    small = az <= _TAYLOR_Z
    if np.any(small):
        out[small] = _taylor_table(kmax, az[small])

    big = ~small
    if np.any(big):
        x = az[big]
        res = np.empty(x.shape + (kmax + 1,))
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            s, c = np.sin(x), np.cos(x)
            up = np.empty_like(res)
            up[..., 0] = s / x
            if kmax >= 1:
                up[..., 1] = s / (x * x) - c / x
            for k in range(1, kmax):
                up[..., k + 1] = (2 * k + 1) / x * up[..., k] - up[..., k - 1]

            # ratios r_k = j_k / j_{k-1} from the continued fraction
            n_start = _start_order(kmax, x.max())
            r = np.zeros_like(x)
            ratios = np.empty_like(res)
            for k in range(n_start, 0, -1):
                r = 1.0 / ((2 * k + 1) / x - r)
                if k <= kmax:
                    ratios[..., k] = r

        n0 = np.minimum(np.floor(x), kmax).astype(int)
        res[..., 0] = up[..., 0]
        for k in range(1, kmax + 1):
            res[..., k] = np.where(k <= n0, up[..., k], res[..., k - 1] * ratios[..., k])
        out[big] = res

    neg = z < 0
    if np.any(neg):
        parity = (-1.0) ** np.arange(kmax + 1)
        out[neg] = out[neg] * parity
    return out


def spherical_in_table(kmax, z):
    """Return modified spherical Bessel ``i_k(z)`` for ``k = 0..kmax``.

    ``i_k(z) = (-i)^k j_k(i z)``; all orders are built upward from ``i_0``
    with ratios from the (always stable) downward continued fraction.
    """
    z = np.asarray(z, dtype=float)
    az = np.abs(z)
    out = np.zeros(az.shape + (kmax + 1,))

    small = az <= _TAYLOR_Z
    if np.any(small):
        out[small] = _taylor_table(kmax, az[small], modified=True)

    big = ~small
    if np.any(big):
        x = az[big]
        res = np.empty(x.shape + (kmax + 1,))
        res[..., 0] = np.sinh(x) / x
        n_start = _start_order(kmax, x.max())
        r = np.zeros_like(x)
        ratios = np.empty_like(res)
        for k in range(n_start, 0, -1):
            r = 1.0 / ((2 * k + 1) / x + r)
            if k <= kmax:
                ratios[..., k] = r
        for k in range(1, kmax + 1):
            res[..., k] = res[..., k - 1] * ratios[..., k]
        out[big] = res

    neg = z < 0
    if np.any(neg):
        parity = (-1.0) ** np.arange(kmax + 1)
        out[neg] = out[neg] * parity
    return out


def spherical_bessel_j(k, z):
    """Spherical Bessel function ``j_k(z)`` for integer ``k >= 0`` and real ``z``.

    >>> spherical_bessel_j(0, 0.0)
    1.0
    """
    if k < 0:
        raise ValueError("order must be nonnegative")
    return float(spherical_jn(int(k), float(z)))
