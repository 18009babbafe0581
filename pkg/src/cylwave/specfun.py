"""Real-argument Bessel functions of integer order, written from scratch.

Regimes
-------
* ``J``: Miller backward recurrence normalized by ``J0 + 2 sum J_2k = 1`` for
  ``x < 25``; above that, Hankel asymptotic expansions give ``J0, J1`` and the
  higher orders follow by forward recurrence (or by Miller, normalized on the
  asymptotic values, when ``m > x``).
* ``Y``: Neumann series built from the Miller ``J`` table for ``x < 25``,
  Hankel asymptotics above; forward recurrence in order.
* ``K``: trapezoid rule on ``int exp(-x (cosh t - 1)) cosh(nu t) dt`` for
  orders 0 and 1 (exponentially convergent), forward recurrence in order.
* ``I``: Miller recurrence normalized by ``exp(-x)(I0 + 2 sum I_k) = 1``.

All routines are vectorized over ``x`` and work with exponentially scaled
values internally, so ``scaled=True`` results never over- or underflow.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "BesselValue",
    "BesselRangeError",
    "bessel_j",
    "bessel_y",
    "bessel_i",
    "bessel_k",
    "jy_table",
    "ik_table",
]

_EULER = 0.57721566490153286061
_X_ASYM = 25.0
_RESCALE = 1e250
_MAX_ORDER = 2000


class BesselValue(NamedTuple):
    """Function value and ``d/dx`` at the same point.

    ``underflow`` is True where the unscaled value underflowed to exactly zero.
    """

    value: object
    derivative: object
    underflow: object = False


class BesselRangeError(OverflowError):
    """Order/argument combination whose value is not representable."""


def _as_array(x):
    xa = np.asarray(x, dtype=float)
    return np.atleast_1d(xa).ravel(), xa.shape


def _check_order(m):
    m = int(m)
    if m < 0:
        raise ValueError("order must be >= 0; use C_{-m} = (-1)^m C_m for J, Y")
    if m > _MAX_ORDER:
        raise BesselRangeError(f"order {m} exceeds supported maximum {_MAX_ORDER}")
    return m


# ---------------------------------------------------------------- Hankel asymptotics
def _hankel_pq(nu: int, x):
    """Asymptotic ``P, Q`` for order ``nu``; valid to full precision for x >= 25."""
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 200):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if k % 2:
            q = q + (term if (k // 2) % 2 == 0 else -term)
        else:
            p = p + (-term if (k // 2) % 2 else term)
        if np.all(np.abs(term) < 1e-17):
            break
    return p, q


def _asym_jy01(x):
    out = []
    for nu in (0, 1):
        p, q = _hankel_pq(nu, x)
        # expand cos(x - phi) so the large argument is reduced exactly
        phi = (0.5 * nu + 0.25) * math.pi
        cx, sx = np.cos(x), np.sin(x)
        c = cx * math.cos(phi) + sx * math.sin(phi)
        s = sx * math.cos(phi) - cx * math.sin(phi)
        amp = np.sqrt(2.0 / (math.pi * x))
        out.append((amp * (p * c - q * s), amp * (p * s + q * c)))
    (j0, y0), (j1, y1) = out
    return j0, j1, y0, y1


# ---------------------------------------------------------------- Miller recurrence for J
def _miller_j(nmax: int, x, start: int, want_neumann: bool):
    """Backward recurrence for ``J_0..J_nmax`` (unnormalized) plus the sums needed
    for normalization and the Neumann series of ``Y0, Y1``."""
    nx = x.size
    tab = np.zeros((nmax + 1, nx))
    jp1 = np.zeros(nx)
    jn = np.full(nx, 1e-300)
    norm = np.zeros(nx)  # J0 + 2 sum J_2k
    s0 = np.zeros(nx)  # sum_{k>=1} (-1)^k J_2k / k
    s1 = np.zeros(nx)  # sum_{k>=1} (-1)^k (J_{2k-1} - J_{2k+1}) / k
    inv_x = 1.0 / x
    for n in range(start, 0, -1):
        jm1 = (2.0 * n) * inv_x * jn - jp1
        # jm1 is J_{n-1}; jn is J_n, jp1 is J_{n+1}
        if n <= nmax:
            tab[n] = jn
        if n % 2 == 0:
            norm += 2.0 * jn
            if want_neumann:
                kk = n // 2
                sgn = -1.0 if kk % 2 else 1.0
                s0 += sgn * jn / kk
                s1 += sgn * (jm1 - jp1) / kk
        jp1, jn = jn, jm1
        big = np.abs(jn) > _RESCALE
        if big.any():
            f = np.where(big, 1.0 / _RESCALE, 1.0)
            jn *= f
            jp1 *= f
            norm *= f
            s0 *= f
            s1 *= f
            tab[n - 1 :] *= f
    tab[0] = jn
    norm += jn
    return tab, norm, s0, s1


def _start_index(nmax: int, xmax: float) -> int:
    top = max(nmax, xmax)
    n = int(top + 30 + 4.0 * math.sqrt(top + 1.0))
    return n + (n % 2)


def jy_table(nmax: int, x, want_y: bool = True):
    """Tables ``J[n], Y[n]`` for ``n = 0..nmax`` (shape ``(nmax+1,) + x.shape``).

    ``x`` must be positive when ``want_y``; ``x = 0`` is accepted for ``J``.
    """
    nmax = _check_order(nmax)
    xs, shape = _as_array(x)
    if np.any(xs < 0) or not np.all(np.isfinite(xs)):
        raise ValueError("argument must be finite and >= 0")
    if want_y and np.any(xs == 0):
        raise ValueError("Y_m is singular at x = 0")
    J = np.zeros((nmax + 1, xs.size))
    Y = np.zeros((nmax + 1, xs.size)) if want_y else None

    zero = xs == 0
    small = (xs > 0) & (xs < _X_ASYM)
    large = xs >= _X_ASYM
    if zero.any():
        J[0, zero] = 1.0

    if small.any():
        xv = xs[small]
        start = _start_index(max(nmax, 1), float(xv.max()))
        tab, norm, s0, s1 = _miller_j(max(nmax, 1), xv, start, want_y)
        tab = tab / norm
        J[:, small] = tab[: nmax + 1]
        if want_y:
            s0 /= norm
            s1 /= norm
            lg = np.log(0.5 * xv) + _EULER
            j0, j1 = tab[0], tab[1]
            y0 = (2.0 / math.pi) * (lg * j0 - 2.0 * s0)
            y1 = -(2.0 / math.pi) * (j0 / xv - lg * j1 - s1)
            Y[:, small] = _forward_y(nmax, xv, y0, y1)

    if large.any():
        xv = xs[large]
        j0, j1, y0, y1 = _asym_jy01(xv)
        Jl = np.zeros((nmax + 1, xv.size))
        Jl[0] = j0
        if nmax >= 1:
            Jl[1] = j1
        fwd = nmax <= xv  # forward recurrence is stable while n < x
        if np.all(fwd):
            for n in range(1, nmax):
                Jl[n + 1] = (2.0 * n / xv) * Jl[n] - Jl[n - 1]
        else:
            start = _start_index(nmax, float(xv.max()))
            tab, _, _, _ = _miller_j(max(nmax, 1), xv, start, False)
            use1 = np.abs(j1) > np.abs(j0)
            scale = np.where(use1, j1 / tab[1], j0 / tab[0])
            Jm = tab[: nmax + 1] * scale
            Jf = Jl.copy()
            for n in range(1, nmax):
                Jf[n + 1] = (2.0 * n / xv) * Jf[n] - Jf[n - 1]
            Jl = np.where(fwd, Jf, Jm)
        J[:, large] = Jl
        if want_y:
            Y[:, large] = _forward_y(nmax, xv, y0, y1)

    J = J.reshape((nmax + 1,) + shape)
    if want_y:
        if not np.all(np.isfinite(Y)):
            raise BesselRangeError("Y_m overflow: order too large for the argument")
        Y = Y.reshape((nmax + 1,) + shape)
    return J, Y


def _forward_y(nmax, x, y0, y1):
    Y = np.zeros((nmax + 1, x.size))
    Y[0] = y0
    if nmax >= 1:
        Y[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, nmax):
            Y[n + 1] = (2.0 * n / x) * Y[n] - Y[n - 1]
    return Y


# ---------------------------------------------------------------- modified family
def _k01_scaled(x):
    """``exp(x) K0(x)`` and ``exp(x) K1(x)`` by the trapezoid rule in ``t``."""
    h = np.minimum(0.2, 0.6 / np.sqrt(x))
    # truncate where x (cosh t - 1) - t exceeds ~46
    tmax = np.arccosh(1.0 + (46.0 + 10.0 * np.log1p(1.0 / x)) / x) + 1.0
    nmax = int(np.max(np.ceil(tmax / h))) + 1
    j = np.arange(nmax + 1)[:, None]
    t = j * h[None, :]
    e = np.exp(-2.0 * x[None, :] * np.sinh(0.5 * t) ** 2)  # cosh t - 1 without cancellation
    w = np.where(j == 0, 0.5, 1.0) * h[None, :]
    mask = t <= tmax[None, :]
    k0 = np.sum(np.where(mask, w * e, 0.0), axis=0)
    k1 = np.sum(np.where(mask, w * e * np.cosh(t), 0.0), axis=0)
    return k0, k1


def ik_table(nmax: int, x, want_i: bool = True, want_k: bool = True):
    """Exponentially scaled tables ``exp(-x) I_n(x)`` and ``exp(x) K_n(x)``, ``n = 0..nmax``."""
    nmax = _check_order(nmax)
    xs, shape = _as_array(x)
    if np.any(xs <= 0) or not np.all(np.isfinite(xs)):
        raise ValueError("modified Bessel functions need finite x > 0")
    Is = Ks = None
    if want_k:
        k0, k1 = _k01_scaled(xs)
        Ks = np.zeros((nmax + 1, xs.size))
        Ks[0] = k0
        if nmax >= 1:
            Ks[1] = k1
        with np.errstate(over="ignore", invalid="ignore"):
            for n in range(1, nmax):
                Ks[n + 1] = Ks[n - 1] + (2.0 * n / xs) * Ks[n]
        if not np.all(np.isfinite(Ks)):
            raise BesselRangeError("K_m overflow: order too large for the argument")
        Ks = Ks.reshape((nmax + 1,) + shape)
    if want_i:
        Is = _miller_i(nmax, xs).reshape((nmax + 1,) + shape)
    return Is, Ks


def _miller_i(nmax, x):
    top = max(nmax, 1)
    start = int(top + 30 + math.sqrt(80.0 * float(x.max())) + 4.0 * math.sqrt(top))
    nx = x.size
    tab = np.zeros((top + 1, nx))
    ip1 = np.zeros(nx)
    i_n = np.full(nx, 1e-300)
    norm = np.zeros(nx)
    inv_x = 1.0 / x
    for n in range(start, 0, -1):
        im1 = (2.0 * n) * inv_x * i_n + ip1
        if n <= top:
            tab[n] = i_n
        norm += 2.0 * i_n
        ip1, i_n = i_n, im1
        big = np.abs(i_n) > _RESCALE
        if big.any():
            f = np.where(big, 1.0 / _RESCALE, 1.0)
            i_n *= f
            ip1 *= f
            norm *= f
            tab[n - 1 :] *= f
    tab[0] = i_n
    norm += i_n
    return tab[: nmax + 1] / norm


# ---------------------------------------------------------------- public API
def _j_deriv(m, Jm, Jm1, Jp1, x):
    if m == 0:
        return -Jp1
    return 0.5 * (Jm1 - Jp1)


def bessel_j(m: int, x) -> BesselValue:
    """``J_m(x)`` and ``J_m'(x)`` for integer ``m >= 0`` and ``x >= 0``."""
    m = _check_order(m)
    J, _ = jy_table(m + 1, x, want_y=False)
    Jm1 = J[m - 1] if m >= 1 else -J[1]
    d = 0.5 * (Jm1 - J[m + 1])
    return BesselValue(_scalar(J[m]), _scalar(d))


def bessel_y(m: int, x) -> BesselValue:
    """``Y_m(x)`` and ``Y_m'(x)`` for ``x > 0``."""
    m = _check_order(m)
    _, Y = jy_table(m + 1, x)
    Ym1 = Y[m - 1] if m >= 1 else -Y[1]
    d = 0.5 * (Ym1 - Y[m + 1])
    return BesselValue(_scalar(Y[m]), _scalar(d))


def bessel_i(m: int, x, scaled: bool = False) -> BesselValue:
    """``I_m(x)``, ``I_m'(x)``; with ``scaled`` both are multiplied by ``exp(-x)``."""
    m = _check_order(m)
    I, _ = ik_table(m + 1, x, want_k=False)
    Im1 = I[m - 1] if m >= 1 else I[1]
    d = 0.5 * (Im1 + I[m + 1])
    v = I[m]
    if not scaled:
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(np.asarray(x, dtype=float))
            v, d = v * e, d * e
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(d))):
            raise BesselRangeError("I_m overflow; use scaled=True")
    return BesselValue(_scalar(v), _scalar(d))


def bessel_k(m: int, x, scaled: bool = False) -> BesselValue:
    """``K_m(x)``, ``K_m'(x)``; with ``scaled`` both are multiplied by ``exp(x)``.

    Unscaled values that underflow come back as exact zeros with
    ``underflow`` set.
    """
    m = _check_order(m)
    _, K = ik_table(m + 1, x, want_i=False)
    Km1 = K[m - 1] if m >= 1 else K[1]
    d = -0.5 * (Km1 + K[m + 1])
    v = K[m]
    uf = False
    if not scaled:
        e = np.exp(-np.asarray(x, dtype=float))
        v, d = v * e, d * e
        uf = _scalar(v == 0.0)
    return BesselValue(_scalar(v), _scalar(d), uf)


def _scalar(a):
    a = np.asarray(a)
    return a.item() if a.ndim == 0 else a
