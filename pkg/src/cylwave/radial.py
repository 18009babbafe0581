"""Regular radial solution ``j_m(r, lam)`` and its cladding continuation.

``j_m`` solves ``w'' + (lam - q(r) - (m^2 - 1/4)/r^2) w = 0`` with
``w ~ r^(m+1/2)`` at the origin.  Inside ``[0, R]`` it comes from the ODE kernel
(see :mod:`cylwave._radial_py`); for ``r >= R`` it is continued with Bessel
closed forms:

* ``lam > d2``:  ``c a_m + d b_m`` with ``a_m = sqrt(r) J_m(u r)``,
  ``b_m = sqrt(r) Y_m(u r)``, ``u = sqrt(lam - d2)``;
* ``lam < d2``:  a combination of ``sqrt(r) I_m(z r)`` and ``k_m = sqrt(r) K_m(z r)``,
  or the pure ``kappa k_m`` branch for guided modes;
* ``lam = d2``:  powers ``r^(1/2 -+ m)`` (``sqrt(r)``, ``sqrt(r) ln r`` for m = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _backend
from .specfun import ik_table, jy_table
from .waveguide import WaveguideSpec

__all__ = [
    "RTOL",
    "ATOL",
    "RadialError",
    "RadialSolution",
    "CladdingMatch",
    "solve_regular",
    "handoff_radius",
    "boundary_values",
    "regular_values",
    "cladding_k",
    "cladding_ab",
    "match_cladding",
    "lagrange_identity_check",
]

RTOL = 1e-10
ATOL = 1e-13


class RadialError(ArithmeticError):
    """Integration failure; carries ``m``, ``lam`` and the radius where it happened."""

    def __init__(self, msg, m=None, lam=None, r_fail=None):
        super().__init__(msg)
        self.m, self.lam, self.r_fail = m, lam, r_fail


@dataclass(frozen=True)
class RadialSolution:
    """Samples of ``j_m(., lam)`` on ``grid``.

    ``cum_l2[i]`` is ``int_0^grid[i] j_m^2 dr``; ``core_l2`` the same up to ``R``.
    """

    spec: WaveguideSpec
    m: int
    lam: float
    grid: np.ndarray
    w: np.ndarray
    w_prime: np.ndarray
    cum_l2: np.ndarray
    boundary: tuple
    core_l2: float
    r_handoff: float


@dataclass(frozen=True)
class CladdingMatch:
    """How ``j_m`` continues past ``R``.

    ``kind`` is ``"continuum"`` (``c, d`` set), ``"evanescent"`` (``kappa``
    for the guided branch and ``alpha, beta`` for the general
    ``alpha sqrt(r) I_m + beta sqrt(r) K_m`` form, both with the exponential
    factors taken out relative to ``R``) or ``"threshold"`` (``power_coeff``
    multiplies ``r^(1/2 - m)``; ``alpha, beta`` give the full combination).
    """

    kind: str
    c: float = math.nan
    d: float = math.nan
    kappa: float = math.nan
    power_coeff: float = math.nan
    alpha: float = math.nan
    beta: float = math.nan


def _kernel(spec, m, lams, r_eval, r_end, rtol=RTOL, atol=ATOL):
    try:
        return _backend.solve_many(spec.breaks, spec.coefs, spec.q_inf, m, lams,
                                   r_eval, r_end, rtol, atol)
    except _backend.KernelError as exc:
        raise RadialError(str(exc), exc.m, exc.lam, exc.r) from exc


def handoff_radius(spec: WaveguideSpec, m: int, lam: float) -> float:
    """Radius below which ``j_m`` is taken from the truncated series."""
    m = abs(int(m))
    A = spec.q_inf + abs(lam)
    r = math.sqrt(2.0 * (2 * m + 2) * 1e-6 / A) if A > 0 else math.inf
    if len(spec.breaks) > 1:
        r = min(r, spec.breaks[1])
    return r


def solve_regular(spec: WaveguideSpec, m: int, lam: float, grid=None, *, n_grid: int = 200,
                  rtol: float = RTOL, atol: float = ATOL) -> RadialSolution:
    """Integrate the regular solution on ``grid`` (default: ``n_grid`` points in ``(0, R]``).

    The grid may extend past ``R``; the ODE is then continued with ``q = d2``.
    """
    m = abs(int(m))
    lam = float(lam)
    R = spec.R
    if grid is None:
        grid = np.linspace(R / n_grid, R, n_grid)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] <= 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a non-empty increasing array of positive radii")
    r_end = max(R, float(grid[-1]))
    pos = int(np.searchsorted(grid, R))
    has_R = pos < grid.size and grid[pos] == R
    r_eval = grid if has_R else np.insert(grid, pos, R)
    W, DW, II, ends, _ = _kernel(spec, m, [lam], r_eval, r_end, rtol, atol)
    w, dw, cum = W[0], DW[0], II[0]
    bnd = (float(w[pos]), float(dw[pos]))
    core = float(cum[pos])
    if not has_R:
        w, dw, cum = (np.delete(a, pos) for a in (w, dw, cum))
    return RadialSolution(spec, m, lam, grid, w, dw, cum, bnd, core,
                          min(handoff_radius(spec, m, lam), r_end))


def boundary_values(spec: WaveguideSpec, m: int, lams, rtol: float = RTOL, atol: float = ATOL):
    """``(j(R), j'(R), int_0^R j^2)`` for every ``lam`` (arrays)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    _, _, _, ends, _ = _kernel(spec, abs(int(m)), lams, np.empty(0), spec.R, rtol, atol)
    return ends[:, 0].copy(), ends[:, 1].copy(), ends[:, 2].copy()


# ----------------------------------------------------------------- cladding closed forms
def _ab(m, u, r):
    """``a, a', b, b'`` for broadcastable ``u > 0`` and ``r > 0``."""
    u, r = np.broadcast_arrays(np.asarray(u, float), np.asarray(r, float))
    J, Y = jy_table(m + 1, u * r)
    Jm1 = J[m - 1] if m else -J[1]
    Ym1 = Y[m - 1] if m else -Y[1]
    dJ = 0.5 * (Jm1 - J[m + 1])
    dY = 0.5 * (Ym1 - Y[m + 1])
    sr = np.sqrt(r)
    a = sr * J[m]
    b = sr * Y[m]
    da = J[m] / (2 * sr) + sr * u * dJ
    db = Y[m] / (2 * sr) + sr * u * dY
    return a, da, b, db


def _ik_scaled(m, z, r):
    """``sqrt(r) e^{-zr} I_m(zr)``, ``sqrt(r) e^{zr} K_m(zr)`` and their derivatives
    taken before the scaling (then scaled by the same factor)."""
    z, r = np.broadcast_arrays(np.asarray(z, float), np.asarray(r, float))
    I, K = ik_table(m + 1, z * r)
    Im1 = I[m - 1] if m else I[1]
    Km1 = K[m - 1] if m else K[1]
    dI = 0.5 * (Im1 + I[m + 1])
    dK = -0.5 * (Km1 + K[m + 1])
    sr = np.sqrt(r)
    i_ = sr * I[m]
    k_ = sr * K[m]
    di = I[m] / (2 * sr) + sr * z * dI
    dk = K[m] / (2 * sr) + sr * z * dK
    return i_, di, k_, dk


def cladding_k(spec: WaveguideSpec, m: int, lam: float, r):
    """``(k_m, k_m')`` with ``k_m(r) = sqrt(r) K_m(sqrt(d2 - lam) r)``; needs ``lam < d2``."""
    if not lam < spec.d2:
        raise ValueError(f"k_m needs lam < d2 = {spec.d2}, got {lam}")
    z = math.sqrt(spec.d2 - lam)
    r = np.asarray(r, dtype=float)
    _, _, k_, dk = _ik_scaled(abs(int(m)), z, r)
    e = np.exp(-z * r)
    k_, dk = k_ * e, dk * e
    if k_.ndim == 0:
        return float(k_), float(dk)
    return k_, dk


def cladding_ab(spec: WaveguideSpec, m: int, lam: float, r):
    """``(a_m, a_m', b_m, b_m')`` at ``r``; needs ``lam > d2``."""
    if not lam > spec.d2:
        raise ValueError(f"a_m, b_m need lam > d2 = {spec.d2}, got {lam}")
    out = _ab(abs(int(m)), math.sqrt(lam - spec.d2), np.asarray(r, dtype=float))
    if np.ndim(out[0]) == 0:
        return tuple(float(x) for x in out)
    return out


def _match_arrays(spec, m, lams, jR, djR):
    """Vectorized matching data; see :class:`CladdingMatch` for meaning."""
    R, d2 = spec.R, spec.d2
    n = lams.size
    c = np.full(n, np.nan)
    d = np.full(n, np.nan)
    kappa = np.full(n, np.nan)
    alpha = np.full(n, np.nan)
    beta = np.full(n, np.nan)
    power = np.full(n, np.nan)
    hi = lams > d2
    lo = lams < d2
    th = lams == d2
    if hi.any():
        a, da, b, db = _ab(m, np.sqrt(lams[hi] - d2), R)
        c[hi] = 0.5 * math.pi * (db * jR[hi] - djR[hi] * b)
        d[hi] = -0.5 * math.pi * (da * jR[hi] - djR[hi] * a)
    if lo.any():
        i_, di, k_, dk = _ik_scaled(m, np.sqrt(d2 - lams[lo]), R)
        kappa[lo] = jR[lo] / k_  # relative to the scaled k at R
        alpha[lo] = djR[lo] * k_ - jR[lo] * dk
        beta[lo] = di * jR[lo] - i_ * djR[lo]
    if th.any():
        if m == 0:
            p, dp = math.sqrt(R), 0.5 / math.sqrt(R)
            s, ds = math.sqrt(R) * math.log(R), (0.5 * math.log(R) + 1.0) / math.sqrt(R)
            wr = 1.0
        else:
            p, dp = R ** (0.5 - m), (0.5 - m) * R ** (-0.5 - m)
            s, ds = R ** (0.5 + m), (0.5 + m) * R ** (m - 0.5)
            wr = 2.0 * m
        alpha[th] = (jR[th] * ds - djR[th] * s) / wr
        beta[th] = (p * djR[th] - dp * jR[th]) / wr
        power[th] = jR[th] / R ** (0.5 - m)
    return c, d, kappa, alpha, beta, power


def match_cladding(spec: WaveguideSpec, m: int, lam: float, sol: RadialSolution | None = None) -> CladdingMatch:
    """Cladding coefficients from the boundary data of ``sol`` (solved here if omitted)."""
    m = abs(int(m))
    if sol is None:
        jR, djR, _ = boundary_values(spec, m, [lam])
        jR, djR = jR[0], djR[0]
    else:
        if sol.m != m or sol.lam != lam:
            raise ValueError("solution was computed for a different (m, lam)")
        jR, djR = sol.boundary
    c, d, kappa, alpha, beta, power = (float(x[0]) for x in
                                       _match_arrays(spec, m, np.array([float(lam)]),
                                                     np.array([jR]), np.array([djR])))
    if lam > spec.d2:
        return CladdingMatch("continuum", c=c, d=d)
    if lam < spec.d2:
        z = math.sqrt(spec.d2 - lam)
        # undo the exp(zR) scaling: kappa multiplies the unscaled k_m
        return CladdingMatch("evanescent", kappa=kappa * math.exp(z * spec.R) if z * spec.R < 700 else math.inf,
                             alpha=alpha, beta=beta)
    return CladdingMatch("threshold", power_coeff=power, alpha=alpha, beta=beta)


def _continue(spec, m, lams, jR, djR, r, decaying):
    """Values of ``j_m`` and ``j_m'`` at ``r > R`` (arrays shaped ``(len(lams), len(r))``)."""
    R, d2 = spec.R, spec.d2
    nl, nr = lams.size, r.size
    W = np.zeros((nl, nr))
    DW = np.zeros((nl, nr))
    if nr == 0 or nl == 0:
        return W, DW
    c, d, kappa, alpha, beta, power = _match_arrays(spec, m, lams, jR, djR)
    hi = lams > d2
    if hi.any():
        u = np.sqrt(lams[hi] - d2)[:, None]
        a, da, b, db = _ab(m, u, r[None, :])
        W[hi] = c[hi, None] * a + d[hi, None] * b
        DW[hi] = c[hi, None] * da + d[hi, None] * db
    lo = lams < d2
    if lo.any():
        z = np.sqrt(d2 - lams[lo])[:, None]
        i_, di, k_, dk = _ik_scaled(m, z, r[None, :])
        decay = np.exp(-z * (r[None, :] - R))
        dec = decaying[lo][:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            grow = np.exp(z * (r[None, :] - R))
            g_w = alpha[lo, None] * grow * i_ + beta[lo, None] * decay * k_
            g_dw = alpha[lo, None] * grow * di + beta[lo, None] * decay * dk
        e_w = kappa[lo, None] * decay * k_
        e_dw = kappa[lo, None] * decay * dk
        W[lo] = np.where(dec, e_w, g_w)
        DW[lo] = np.where(dec, e_dw, g_dw)
    th = lams == d2
    if th.any():
        if m == 0:
            p, dp = np.sqrt(r), 0.5 / np.sqrt(r)
            s, ds = np.sqrt(r) * np.log(r), (0.5 * np.log(r) + 1.0) / np.sqrt(r)
        else:
            p, dp = r ** (0.5 - m), (0.5 - m) * r ** (-0.5 - m)
            s, ds = r ** (0.5 + m), (0.5 + m) * r ** (m - 0.5)
        dec = decaying[th][:, None]
        W[th] = np.where(dec, power[th, None] * p, alpha[th, None] * p + beta[th, None] * s)
        DW[th] = np.where(dec, power[th, None] * dp, alpha[th, None] * dp + beta[th, None] * ds)
    return W, DW


def regular_values(spec: WaveguideSpec, m: int, lams, r, decaying=False, *,
                   rtol: float = RTOL, atol: float = ATOL, boundary=None):
    """``j_m(r, lam)`` and ``j_m'(r, lam)`` for all ``lams`` x ``r`` (``r > 0``).

    Points inside the core come from the ODE, points outside from the closed forms.
    ``decaying`` (scalar or per-``lam``) selects the pure ``k_m`` branch for
    ``lam <= d2``, which is what a guided mode uses.

    Returns ``(W, DW, jR, djR, core_l2)``.
    """
    m = abs(int(m))
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    order = np.argsort(r, kind="stable")
    rs = r[order]
    inside = rs <= spec.R
    W = np.empty((lams.size, r.size))
    DW = np.empty((lams.size, r.size))
    Wi, DWi, _, ends, _ = _kernel(spec, m, lams, rs[inside], spec.R, rtol, atol)
    jR, djR, core = ends[:, 0].copy(), ends[:, 1].copy(), ends[:, 2].copy()
    if boundary is not None:
        jR, djR = boundary
    dec = np.broadcast_to(np.asarray(decaying, dtype=bool), lams.shape)
    Wo, DWo = _continue(spec, m, lams, jR, djR, rs[~inside], dec)
    Ws = np.concatenate([Wi, Wo], axis=1)
    DWs = np.concatenate([DWi, DWo], axis=1)
    W[:, order] = Ws
    DW[:, order] = DWs
    return W, DW, jR, djR, core


# ----------------------------------------------------------------- Lagrange identity
def _gl_nodes(a, b, breaks, width, order=20):
    cuts = [a] + [x for x in breaks if a < x < b] + [b]
    xg, wg = leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(math.ceil((hi - lo) / width)))
        edges = np.linspace(lo, hi, n + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            half = 0.5 * (e1 - e0)
            nodes.append(e0 + half * (xg + 1.0))
            weights.append(half * wg)
    return np.concatenate(nodes), np.concatenate(weights)


def lagrange_identity_check(sol1: RadialSolution, sol2: RadialSolution, c: float, d: float) -> float:
    """Relative mismatch between ``int_c^d w1 w2 dr`` (quadrature) and the
    endpoint Wronskian expression ``-[w1' w2 - w1 w2']_c^d / (lam1 - lam2)``."""
    if sol1.spec is not sol2.spec and sol1.spec != sol2.spec:
        raise ValueError("solutions belong to different waveguides")
    if sol1.m != sol2.m:
        raise ValueError("solutions have different azimuthal orders")
    if sol1.lam == sol2.lam:
        raise ValueError("the identity needs lam1 != lam2")
    if not 0 < c < d:
        raise ValueError("need 0 < c < d")
    lo = min(sol1.grid[0], sol2.grid[0])
    hi = min(sol1.grid[-1], sol2.grid[-1])
    if c < lo * (1 - 1e-12) or d > hi * (1 + 1e-12):
        raise ValueError("[c, d] must lie inside both solution grids")
    spec, m = sol1.spec, sol1.m
    lmax = max(abs(sol1.lam), abs(sol2.lam), spec.q_inf, 1.0)
    width = min(0.25, 2.0 / math.sqrt(lmax))
    x, wq = _gl_nodes(c, d, spec.breaks, width)
    ends = np.array([c, d])
    vals = []
    for s in (sol1, sol2):
        pts = np.concatenate([x, ends])
        o = np.argsort(pts)
        W, DW, *_ = _kernel(spec, m, [s.lam], pts[o], max(spec.R, d))
        w = np.empty_like(pts)
        dw = np.empty_like(pts)
        w[o], dw[o] = W[0], DW[0]
        vals.append((w, dw))
    (w1, dw1), (w2, dw2) = vals
    n = x.size
    lhs = float(np.sum(wq * w1[:n] * w2[:n]))
    bracket = (dw1 * w2 - w1 * dw2)[n:]
    rhs = -(bracket[1] - bracket[0]) / (sol1.lam - sol2.lam)
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)
