"""Guided modes, jump weights, the continuous density and the assembled measure.

For each azimuthal order ``m`` the measure ``chi_m`` has jumps ``pi / ||j_m||^2``
at guided eigenvalues in ``(0, d2]`` and density
``rho_m = (pi/2) / (c_m^2 + d_m^2)`` on ``(d2, inf)``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import radial
from ._backend import map_threads
from .radial import _ik_scaled, _match_arrays, boundary_values
from .waveguide import WaveguideSpec, beta_from_lambda

__all__ = [
    "Decay",
    "GuidedMode",
    "ModeList",
    "SpectralMeasure",
    "dispersion_residual",
    "find_guided_modes",
    "mode_jump",
    "exponential_tail",
    "continuous_density",
    "assemble_measure",
    "sweep_modes",
    "positivity_certificate",
    "default_lambda_max",
]

THRESHOLD_TOL = 1e-8


class Decay(str, enum.Enum):
    EXPONENTIAL = "exponential"
    POWER_LAW = "power_law"


@dataclass(frozen=True)
class GuidedMode:
    """A jump of ``chi_m``.

    ``l2_norm_sq = core_l2 + tail_l2`` is ``int_0^inf j_m^2``; ``jump`` is
    ``pi / l2_norm_sq``.
    """

    m: int
    lam: float
    jump: float
    boundary: tuple
    l2_norm_sq: float
    decay: Decay
    core_l2: float
    tail_l2: float
    beta: float

    @property
    def boundary_data(self):
        return self.boundary


class ModeList(list):
    """Modes from :func:`sweep_modes` plus termination diagnostics.

    ``m_stop`` is the first order without modes, ``capped`` is set when the
    sweep hit its cap, and ``certified`` records whether ``j_m(R, .)`` and
    ``j_m'(R, .)`` were positive over the whole search grid at ``m_stop``.
    """

    def __init__(self, modes=(), m_stop=0, capped=False, certified=False):
        super().__init__(modes)
        self.m_stop = m_stop
        self.capped = capped
        self.certified = certified

    @property
    def total_signed(self) -> int:
        """Mode count with ``m`` and ``-m`` counted separately."""
        return sum(1 if md.m == 0 else 2 for md in self)


def default_lambda_max(spec: WaveguideSpec) -> float:
    return 4.0 * spec.k2n02


# ------------------------------------------------------------------ dispersion
def _normalized_residual(spec, m, lams):
    """Scale-free dispersion determinant and the raw boundary data."""
    lams = np.asarray(lams, dtype=float)
    jR, djR, core = boundary_values(spec, m, lams)
    z = np.sqrt(spec.d2 - lams)
    _, _, k_, dk = _ik_scaled(m, z, spec.R)
    D = djR * k_ - jR * dk
    scale = np.hypot(jR, djR) * np.hypot(k_, dk)
    return D / scale, jR, djR, core


def dispersion_residual(spec: WaveguideSpec, m: int, lam: float) -> float:
    """``D_m = j_m'(R) k_m(R) - j_m(R) k_m'(R)``; zero exactly at guided eigenvalues.

    Only defined on ``(0, d2)``: below zero it cannot vanish, and the cladding
    function ``k_m`` does not exist above ``d2``.
    """
    if not 0.0 < lam < spec.d2:
        raise ValueError(f"dispersion residual is defined on (0, d2) = (0, {spec.d2}); got {lam}")
    m = abs(int(m))
    jR, djR, _ = boundary_values(spec, m, [lam])
    k_, dk = radial.cladding_k(spec, m, lam, spec.R)
    return float(djR[0] * k_ - jR[0] * dk)


def _threshold_gap(spec, m, jR, djR):
    """``j'/j + (m - 1/2)/R`` at ``lam = d2``: zero iff ``j_m`` matches ``r^(1/2-m)``."""
    return djR / jR + (m - 0.5) / spec.R


def _search_grid(spec, n):
    return spec.d2 * np.arange(1, n + 1) / (n + 1)


def find_guided_modes(spec: WaveguideSpec, m: int, lambda_grid_size: int = 400,
                      root_tol: float | None = None, _grid_data=None) -> list:
    """All guided eigenvalues of order ``m`` with their jump weights, ascending in ``lam``."""
    m = abs(int(m))
    d2 = spec.d2
    if d2 <= 0:
        return []
    if root_tol is None:
        root_tol = 1e-12 * d2
    grid = _search_grid(spec, lambda_grid_size)
    if _grid_data is None:
        _grid_data = _normalized_residual(spec, m, grid)
    Dg = _grid_data[0]
    # sign just above zero and just below threshold close the bracket list
    D0 = _normalized_residual(spec, m, [1e-12 * d2])[0][0]
    lam_top = d2 * (1.0 - 1e-13)
    Dtop = _normalized_residual(spec, m, [lam_top])[0][0]
    pts = np.concatenate([[1e-12 * d2], grid, [lam_top]])
    vals = np.concatenate([[D0], Dg, [Dtop]])

    def f(lam):
        return _normalized_residual(spec, m, [lam])[0][0]

    roots = []
    for i in range(pts.size - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(pts[i])
        elif a * b < 0:
            roots.append(brentq(f, pts[i], pts[i + 1], xtol=root_tol, rtol=4 * np.finfo(float).eps,
                                maxiter=500))
    modes = [_make_mode(spec, m, lam, Decay.EXPONENTIAL) for lam in roots]
    if m >= 2:
        jR, djR, _ = boundary_values(spec, m, [d2])
        if abs(_threshold_gap(spec, m, jR[0], djR[0])) < THRESHOLD_TOL:
            modes.append(_make_mode(spec, m, d2, Decay.POWER_LAW))
    return modes


def exponential_tail(spec: WaveguideSpec, m: int, lam: float, jR: float) -> float:
    """``int_R^inf (j(R) k_m(r)/k_m(R))^2 dr`` by adaptive quadrature."""
    z = math.sqrt(spec.d2 - lam)
    R = spec.R
    _, _, kR, _ = _ik_scaled(m, z, R)
    kR = float(kR)

    def integrand(r):
        _, _, kr, _ = _ik_scaled(m, z, r)
        return (jR * float(kr) / kR) ** 2 * math.exp(-2.0 * z * (r - R))

    peak = integrand(R)
    step = 1.0 / z
    r_stop = R + step
    while True:
        v = integrand(r_stop)
        peak = max(peak, v)
        if v < 1e-16 * peak:
            break
        r_stop += step
    pts = R + (r_stop - R) * np.array([0.05, 0.15, 0.35, 0.6])
    val, _ = quad(integrand, R, r_stop, points=pts, epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def _make_mode(spec, m, lam, decay):
    jR, djR, core = boundary_values(spec, m, [lam])
    jR, djR, core = float(jR[0]), float(djR[0]), float(core[0])
    if decay is Decay.EXPONENTIAL:
        tail = exponential_tail(spec, m, lam, jR)
    else:
        if m < 2:
            raise ValueError("a threshold mode needs |m| >= 2 for a square-integrable tail")
        tail = jR * jR * spec.R / (2.0 * m - 2.0)
    l2 = core + tail
    return GuidedMode(m, float(lam), math.pi / l2, (jR, djR), l2, decay, core, tail,
                      float(beta_from_lambda(spec, lam)))


def mode_jump(spec: WaveguideSpec, mode: GuidedMode) -> float:
    """Recompute ``pi / int_0^inf j_m^2`` for ``mode`` from scratch."""
    m = mode.m
    if mode.decay is Decay.POWER_LAW and m < 2:
        raise ValueError("power-law tail is not integrable for |m| < 2")
    return _make_mode(spec, m, mode.lam, mode.decay).jump


# ------------------------------------------------------------------ continuum
def continuous_density(spec: WaveguideSpec, m: int, lam):
    """``rho_m(lam) = (pi/2) / (c_m^2 + d_m^2)`` for ``lam > d2`` (scalar or array)."""
    lam_a = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam_a <= spec.d2):
        raise ValueError(f"density is defined for lam > d2 = {spec.d2}")
    m = abs(int(m))
    jR, djR, _ = boundary_values(spec, m, lam_a)
    c, d, *_ = _match_arrays(spec, m, lam_a, jR, djR)
    rho = 0.5 * math.pi / (c * c + d * d)
    return float(rho[0]) if np.ndim(lam) == 0 else rho


@dataclass(frozen=True)
class SpectralMeasure:
    """``chi_m`` as jumps plus a tabulated density with quadrature weights.

    ``nodes``/``weights`` form a quadrature rule in ``lam`` on ``(d2, lam_max]``;
    ``density`` holds ``rho_m`` at the nodes.  By default the nodes are the
    uniform ``u``-grid ``lam = d2 + u^2`` with trapezoid weights ``2 u du``.
    """

    spec: WaveguideSpec
    m: int
    jumps: tuple
    lam_max: float
    nodes: np.ndarray
    weights: np.ndarray
    density: np.ndarray
    boundary: tuple = field(repr=False)
    c: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    u: np.ndarray | None = field(default=None, repr=False)

    @property
    def support(self) -> np.ndarray:
        """All points carrying mass: jump locations first, then the continuum nodes."""
        return np.concatenate([[md.lam for md in self.jumps], self.nodes])

    @property
    def support_weights(self) -> np.ndarray:
        """Masses matching :attr:`support` (jump sizes, then ``weight * rho``)."""
        return np.concatenate([[md.jump for md in self.jumps], self.weights * self.density])

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    def integrate(self, func) -> complex | float:
        """``int func(lam) dchi_m(lam)`` with ``func`` vectorized over ``lam``."""
        vals = np.asarray(func(self.support))
        return np.sum(self.support_weights * vals)

    def chi(self, lam: float) -> float:
        """Cumulative measure ``chi_m(lam)`` with ``chi_m = 0`` on ``(-inf, 0]``."""
        if lam <= 0:
            return 0.0
        total = sum(md.jump for md in self.jumps if md.lam <= lam)
        if lam > self.spec.d2:
            mass = self.weights * self.density
            cum = np.concatenate([[0.0], np.cumsum(mass)])
            x = np.concatenate([[self.spec.d2], self.nodes])
            total += float(np.interp(min(lam, self.lam_max), x, cum))
        return float(total)

    def mass(self, a: float, b: float) -> float:
        """``chi_m(b) - chi_m(a)``, the mass of ``(a, b]``."""
        return self.chi(b) - self.chi(a)


def _u_rule(spec, lam_max, n_u):
    u_max = math.sqrt(lam_max - spec.d2)
    du = u_max / n_u
    u = du * np.arange(1, n_u + 1)
    w = 2.0 * u * du
    w[-1] *= 0.5
    return spec.d2 + u * u, w, u


def assemble_measure(spec: WaveguideSpec, m: int, lam_max: float | None = None, n_u: int = 512, *,
                     modes=None, nodes=None, lambda_grid_size: int = 400) -> SpectralMeasure:
    """Jumps from :func:`find_guided_modes` and the density on a quadrature grid.

    ``nodes`` may be given as ``(lam, dlam_weights)`` to replace the default
    uniform ``u``-grid (used by the field solver's graded rule).
    """
    m = abs(int(m))
    if lam_max is None:
        lam_max = default_lambda_max(spec)
    if not lam_max > spec.d2:
        raise ValueError(f"lam_max = {lam_max} must exceed d2 = {spec.d2}")
    if modes is None:
        modes = find_guided_modes(spec, m, lambda_grid_size) if spec.d2 > 0 else []
    u = None
    if nodes is None:
        lam, w, u = _u_rule(spec, lam_max, n_u)
    else:
        lam, w = (np.asarray(a, dtype=float) for a in nodes)
        if np.any(lam <= spec.d2):
            raise ValueError("continuum nodes must lie above d2")
    jR, djR, _ = boundary_values(spec, m, lam)
    c, d, *_ = _match_arrays(spec, m, lam, jR, djR)
    rho = 0.5 * math.pi / (c * c + d * d)
    return SpectralMeasure(spec, m, tuple(modes), float(lam_max), lam, w, rho, (jR, djR), c, d, u)


# ------------------------------------------------------------------ sweep over m
def _positive_on_grid(jR, djR):
    return bool(np.all(jR > 0) and np.all(djR > 0))


def positivity_certificate(spec: WaveguideSpec, m_from: int = 0, m_max_cap: int = 64,
                           lambda_grid_size: int = 400):
    """Smallest ``m >= m_from`` with ``j_m(R, lam) > 0`` and ``j_m'(R, lam) > 0`` across
    ``[0, d2]`` on the search grid, or ``None`` below the cap."""
    grid = np.concatenate([[0.0], _search_grid(spec, lambda_grid_size), [spec.d2]])
    for m in range(m_from, m_max_cap + 1):
        jR, djR, _ = boundary_values(spec, m, grid)
        if _positive_on_grid(jR, djR):
            return m
    return None


def sweep_modes(spec: WaveguideSpec, m_max_cap: int = 64, lambda_grid_size: int = 400,
                threads: int | None = None) -> ModeList:
    """Guided modes for ``m = 0, 1, 2, ...`` up to the first order with none.

    The mode count cannot increase with ``|m|`` (the centrifugal term grows
    with ``m``), so the first empty order ends the sweep.  Orders are evaluated
    in batches of ``threads`` so a worker pool stays busy.
    """
    if spec.d2 <= 0:
        return ModeList([], m_stop=0, certified=True)
    grid = _search_grid(spec, lambda_grid_size)

    def one(m):
        data = _normalized_residual(spec, m, grid)
        modes = find_guided_modes(spec, m, lambda_grid_size, _grid_data=data)
        return modes, data

    from ._backend import thread_count

    batch = max(1, thread_count(threads))
    out = []
    m = 0
    while m <= m_max_cap:
        ms = list(range(m, min(m + batch, m_max_cap + 1)))
        for mm, (modes, data) in zip(ms, map_threads(one, ms, threads)):
            if not modes:
                return ModeList(out, m_stop=mm, certified=_positive_on_grid(data[1], data[2]))
            out.extend(modes)
        m = ms[-1] + 1
    warnings.warn(f"mode sweep reached the cap m = {m_max_cap} without an empty order",
                  RuntimeWarning, stacklevel=2)
    return ModeList(out, m_stop=m_max_cap, capped=True)
