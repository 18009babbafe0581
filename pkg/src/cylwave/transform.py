"""Forward/inverse modal transform against an assembled measure, and Parseval.

``G(lam) = int_0^inf j_m(r, lam) g(r) dr`` and
``g(r) = (1/pi) int j_m(r, lam) G(lam) dchi_m(lam)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .radial import regular_values
from .spectrum import SpectralMeasure
from .waveguide import WaveguideSpec

__all__ = [
    "ModalCoefficients",
    "forward",
    "forward_nodes",
    "inverse",
    "parseval_gap",
    "tail_estimate",
    "radial_rule",
    "support_values",
]

_GL_ORDER = 16


@dataclass(frozen=True)
class ModalCoefficients:
    """``G_m`` at the measure's jump locations and continuum nodes (same order)."""

    m: int
    jump_lams: np.ndarray
    jump_values: np.ndarray
    nodes: np.ndarray
    values: np.ndarray

    @property
    def at_jumps(self):
        return list(zip(self.jump_lams.tolist(), self.jump_values.tolist()))

    @property
    def on_continuum(self):
        return np.column_stack([self.nodes, self.values])

    @property
    def all_values(self):
        return np.concatenate([self.jump_values, self.values], axis=0)


def radial_rule(a: float, b: float, width: float, breaks=(), order: int = _GL_ORDER):
    """Composite Gauss-Legendre nodes/weights on ``[a, b]`` with panel edges at ``breaks``."""
    cuts = np.unique(np.concatenate([[a, b], [x for x in breaks if a < x < b]]))
    xg, wg = leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(math.ceil((hi - lo) / width - 1e-9)))
        edges = np.linspace(lo, hi, n + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes.append((mid[:, None] + half[:, None] * xg[None, :]).ravel())
        weights.append((half[:, None] * wg[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _as_callable(g):
    if callable(g):
        return g, ()
    r_s, g_s = (np.asarray(a) for a in g)
    if r_s.ndim != 1 or r_s.shape[0] != g_s.shape[0] or np.any(np.diff(r_s) <= 0):
        raise ValueError("sampled input needs increasing sample radii matching the values")

    def interp(r):
        if np.iscomplexobj(g_s):
            return (np.interp(r, r_s, g_s.real, left=0, right=0)
                    + 1j * np.interp(r, r_s, g_s.imag, left=0, right=0))
        return np.interp(r, r_s, g_s, left=0.0, right=0.0)

    kinks = r_s if r_s.size <= 4000 else ()
    return interp, kinks


def _support_bounds(r_support):
    if np.ndim(r_support) == 0:
        return 0.0, float(r_support)
    lo, hi = (float(x) for x in r_support)
    if not 0 <= lo < hi:
        raise ValueError("radial support must satisfy 0 <= r_lo < r_hi")
    return lo, hi


def support_values(measure: SpectralMeasure, r):
    """``j_m(r, lam)`` for every support point of ``measure`` (rows) and radius ``r`` (columns)."""
    lams = measure.support
    decaying = np.arange(lams.size) < measure.n_jumps
    W, *_ = regular_values(measure.spec, measure.m, lams, r, decaying)
    return W


def forward_nodes(measure: SpectralMeasure, r_nodes, r_weights, g_values) -> np.ndarray:
    """Quadrature ``sum_q w_q j(r_q, lam) g(r_q, ...)`` at every support point.

    ``g_values`` has shape ``(len(r_nodes),) + extra``; the result has
    ``(n_support,) + extra``.
    """
    J = support_values(measure, r_nodes)
    gv = np.asarray(g_values)
    flat = gv.reshape(gv.shape[0], -1) * np.asarray(r_weights)[:, None]
    out = J @ flat
    return out.reshape((J.shape[0],) + gv.shape[1:])


def _split(measure, vals, m):
    nj = measure.n_jumps
    return ModalCoefficients(m, np.array([md.lam for md in measure.jumps]), vals[:nj],
                             measure.nodes.copy(), vals[nj:])


def forward(measure: SpectralMeasure, spec: WaveguideSpec, m: int, g, r_support,
            rtol: float = 1e-10, max_levels: int = 6) -> ModalCoefficients:
    """Transform ``g`` (callable or ``(r_samples, g_samples)``) supported in ``r_support``.

    The radial quadrature is refined by panel doubling until successive results
    agree to ``rtol`` relative to their maximum.
    """
    m = abs(int(m))
    if measure.m != m or measure.spec != spec:
        raise ValueError("measure does not belong to this (spec, m)")
    fn, kinks = _as_callable(g)
    lo, hi = _support_bounds(r_support)
    lam_top = float(np.max(np.abs(measure.support))) if measure.support.size else 1.0
    width = min(0.5 * (hi - lo), 2.0 / math.sqrt(max(lam_top, 1.0)), 1.0)
    breaks = np.concatenate([spec.breaks, kinks])
    prev = None
    for _ in range(max_levels):
        x, w = radial_rule(lo, hi, width, breaks)
        x = np.where(x == 0, np.finfo(float).tiny, x)
        vals = forward_nodes(measure, x, w, fn(x))
        if prev is not None:
            scale = max(float(np.max(np.abs(vals))), 1e-300)
            if float(np.max(np.abs(vals - prev))) <= rtol * scale:
                break
        prev = vals
        width *= 0.5
    return _split(measure, vals, m)


def inverse(measure: SpectralMeasure, spec: WaveguideSpec, m: int, coeffs: ModalCoefficients, r):
    """``(1/pi) [sum_k r_k j(r, lam_k) G(lam_k) + int j(r, lam) G(lam) rho dlam]`` at ``r``."""
    m = abs(int(m))
    if coeffs.m != m or measure.m != m:
        raise ValueError("azimuthal order mismatch")
    jl = np.array([md.lam for md in measure.jumps])
    if (coeffs.nodes.shape != measure.nodes.shape or not np.array_equal(coeffs.nodes, measure.nodes)
            or not np.array_equal(coeffs.jump_lams, jl)):
        raise ValueError("coefficients are not aligned with the measure grid")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros(r.shape, dtype=np.result_type(coeffs.values, float))
    pos = r > 0
    if pos.any():
        J = support_values(measure, r[pos])
        wts = measure.support_weights * coeffs.all_values
        out[pos] = (wts @ J) / math.pi
    return out


def parseval_gap(measure: SpectralMeasure, spec: WaveguideSpec, m: int, g, r_support,
                 coeffs: ModalCoefficients | None = None) -> float:
    """``|int |g|^2 dr - (1/pi) int |G|^2 dchi| / int |g|^2 dr``."""
    fn, kinks = _as_callable(g)
    lo, hi = _support_bounds(r_support)
    lhs, prev = None, None
    width = min(0.25 * (hi - lo), 0.5)
    for _ in range(8):
        x, w = radial_rule(lo, hi, width, np.concatenate([spec.breaks, kinks]))
        lhs = float(np.sum(w * np.abs(fn(x)) ** 2))
        if prev is not None and abs(lhs - prev) <= 1e-14 * max(abs(lhs), 1e-300):
            break
        prev = lhs
        width *= 0.5
    if lhs == 0.0:
        return 0.0
    if coeffs is None:
        coeffs = forward(measure, spec, m, g, r_support)
    rhs = float(np.sum(measure.support_weights * np.abs(coeffs.all_values) ** 2)) / math.pi
    return abs(lhs - rhs) / lhs


def tail_estimate(measure: SpectralMeasure, coeffs: ModalCoefficients) -> float:
    """Heuristic size of the Parseval mass beyond ``lam_max``:
    ``|G(lam_max)|^2 rho(lam_max) lam_max / pi``."""
    if measure.nodes.size == 0:
        return 0.0
    g_last = abs(coeffs.values[-1]) ** 2
    return float(g_last * measure.density[-1] * measure.lam_max / math.pi)
