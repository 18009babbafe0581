"""Green's function and field synthesis.

Per azimuthal order the field is built from the transform pair:
``F_m(lam, zeta)`` is the forward transform of ``sqrt(rho) f_m``, the axial
kernel ``e^{i|z-zeta| s}/(2 i s)`` with ``s = sqrt(k^2 n0^2 - lam)`` propagates
it along ``z``, and the inverse transform (divided by ``sqrt(r)``) returns
``u_m(r, z)``.

The ``lam``-integral uses its own quadrature rule (:class:`FieldRule`):

* ``lam = d2 + u^2`` with Gauss-Legendre panels in ``u`` from the threshold up
  to the edge of a window around the branch point ``k^2 n0^2``;
* ``lam = k^2 n0^2 -+ t^2`` with Gauss-Legendre panels in ``t`` inside the
  window and across the whole evanescent band.  ``dlam = 2 t dt`` cancels the
  ``1/s`` singularity, so the integrand is smooth in ``t``.

``s`` is stored per node rather than recomputed from ``lam``, which would lose
all relative accuracy next to the branch point.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from ._backend import map_threads
from .radial import regular_values
from .spectrum import SpectralMeasure, assemble_measure, find_guided_modes
from .transform import radial_rule
from .waveguide import WaveguideSpec, eval_q

__all__ = [
    "AxialKernelValue",
    "SourceSpec",
    "SourceComponents",
    "FieldRule",
    "FieldMeasures",
    "FieldGrid",
    "axial_kernel",
    "field_rule",
    "decompose_source",
    "greens_kernel",
    "solve_field",
    "helmholtz_residual",
    "ring_source",
]

BRANCH_EPS = 1e-10
WINDOW = 0.05
DECAY_DIGITS = math.log(1e10) * 1.001  # exp(-t dz_min) just under 1e-10
T_CAP = 400.0


class AxialKernelValue(NamedTuple):
    value: complex
    near_singular: bool = False


def _kernel_from_s(s, dz):
    """``exp(i dz s) / (2 i s)`` for complex ``s`` (``s = i t`` above the branch point)."""
    return np.exp(1j * dz * s) / (2j * s)


def axial_kernel(spec: WaveguideSpec, lam: float, dz: float) -> AxialKernelValue:
    """Outgoing/decaying solution of ``U'' + (k^2 n0^2 - lam) U = delta``, evaluated at ``|dz|``."""
    if dz < 0:
        raise ValueError("dz must be >= 0 (pass |z - zeta|)")
    gap = spec.k2n02 - lam
    near = abs(gap) < BRANCH_EPS * max(spec.k2n02, 1.0)
    s = math.sqrt(gap) if gap >= 0 else 1j * math.sqrt(-gap)
    if s == 0:
        return AxialKernelValue(complex(np.inf), True)
    return AxialKernelValue(complex(_kernel_from_s(s, dz)), near)


# ------------------------------------------------------------------ lambda rule
@dataclass(frozen=True)
class FieldRule:
    """Quadrature in ``lam`` on ``(d2, lam_max]`` with exact ``s`` at every node."""

    lam: np.ndarray
    weights: np.ndarray
    s: np.ndarray
    lam_max: float
    t_max: float
    dz_min: float
    capped: bool

    @property
    def size(self) -> int:
        return self.lam.size


def _panels(a, b, width, order):
    n = max(1, int(math.ceil((b - a) / width - 1e-9)))
    edges = np.linspace(a, b, n + 1)
    xg, wg = leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return (mid[:, None] + half[:, None] * xg).ravel(), (half[:, None] * wg).ravel()


def field_rule(spec: WaveguideSpec, dz_min: float, dz_max: float, r_max: float, *,
               density: float = 1.0, order: int = 16, t_cap: float = T_CAP) -> FieldRule:
    """Build the graded rule for receivers/sources at axial separations in
    ``[dz_min, dz_max]`` and radii up to ``r_max``.

    ``lam_max`` is chosen so that ``exp(-dz_min sqrt(lam - k^2 n0^2)) < 1e-10``,
    capped at ``t_cap`` (flagged in ``capped``) when ``dz_min`` is tiny.
    ``density`` scales the number of panels.
    """
    lb, d2, R = spec.k2n02, spec.d2, spec.R
    delta = min(WINDOW * lb, 0.5 * (lb - d2))
    dz_max = max(dz_max, dz_min, 0.0)
    if dz_min > 0:
        t_max = DECAY_DIGITS / dz_min
    else:
        t_max = math.inf
    capped = t_max > t_cap
    t_max = min(t_max, t_cap)
    base = 2.0 * r_max + 2.0 * R + 2.0

    # radiative band below the window, variable u
    u_a = math.sqrt(lb - delta - d2)
    om_a = base + dz_max * u_a / math.sqrt(delta)
    ua, wa = _panels(0.0, u_a, 2 * math.pi / om_a / density, order)
    lam_a = d2 + ua * ua
    s_a = np.sqrt((lb - d2 - ua * ua).astype(complex))
    w_a = 2.0 * ua * wa

    # window below the branch point, variable t = sqrt(lb - lam)
    t_b_max = math.sqrt(delta)
    om_b = dz_max + base * t_b_max / math.sqrt(lb) + 2.0
    tb, wb = _panels(0.0, t_b_max, min(t_b_max, 2 * math.pi / om_b / density), order)
    lam_b = lb - tb * tb
    s_b = tb.astype(complex)
    w_b = 2.0 * tb * wb

    # evanescent band, variable t = sqrt(lam - lb)
    om_c = base + (dz_min if dz_min > 0 else 0.0)
    tc, wc = _panels(0.0, t_max, 2 * math.pi / om_c / density, order)
    lam_c = lb + tc * tc
    s_c = 1j * tc
    w_c = 2.0 * tc * wc

    lam = np.concatenate([lam_a, lam_b[::-1], lam_c])
    w = np.concatenate([w_a, w_b[::-1], w_c])
    s = np.concatenate([s_a, s_b[::-1], s_c])
    return FieldRule(lam, w, s, float(lb + t_max * t_max), float(t_max), float(dz_min), capped)


class FieldMeasures:
    """Per-order guided modes (cached) and a shared :class:`FieldRule`."""

    def __init__(self, spec: WaveguideSpec, rule: FieldRule, lambda_grid_size: int = 400):
        self.spec = spec
        self.rule = rule
        self.lambda_grid_size = lambda_grid_size
        self._modes: dict[int, list] = {}

    def modes(self, m: int) -> list:
        m = abs(int(m))
        if m not in self._modes:
            self._modes[m] = (find_guided_modes(self.spec, m, self.lambda_grid_size)
                              if self.spec.d2 > 0 else [])
        return self._modes[m]

    def measure(self, m: int) -> SpectralMeasure:
        """The order-``m`` measure on this rule's nodes."""
        r = self.rule
        return assemble_measure(self.spec, m, r.lam_max, modes=self.modes(m),
                                nodes=(r.lam, r.weights))

    def channel(self, m: int, radii):
        """Masses, ``s`` values, guided flags and ``j_m`` at ``radii`` for every support point."""
        m = abs(int(m))
        spec, rule = self.spec, self.rule
        modes = self.modes(m)
        lam_j = np.array([md.lam for md in modes])
        lams = np.concatenate([lam_j, rule.lam])
        dec = np.arange(lams.size) < lam_j.size
        W, _, jR, djR, _ = regular_values(spec, m, lams, radii, dec)
        # density from the same boundary data (continuum part only)
        from .radial import _match_arrays

        jc, djc = jR[lam_j.size:], djR[lam_j.size:]
        c, d, *_ = _match_arrays(spec, m, rule.lam, jc, djc)
        # c_m overflows only at high order near threshold, where rho_m is below the double range
        with np.errstate(over="ignore"):
            rho = 0.5 * math.pi / (c * c + d * d)
        mass = np.concatenate([[md.jump for md in modes], rule.weights * rho])
        s = np.concatenate([np.sqrt(spec.k2n02 - lam_j).astype(complex), rule.s])
        return mass, s, dec, W


def _measures_for(spec, measures, dz_min, dz_max, r_max, density, order=16):
    if measures is not None:
        return measures
    return FieldMeasures(spec, field_rule(spec, dz_min, dz_max, r_max, density=density, order=order))


# ------------------------------------------------------------------ Green's function
def greens_kernel(spec: WaveguideSpec, measures: FieldMeasures | None, r, rho, dtheta, dz,
                  m_max: int | None = None, *, tol: float = 1e-8, density: float = 1.0,
                  threads: int | None = None):
    """``G(r, rho; dtheta; dz)`` for broadcastable query arrays.

    With ``m_max=None`` orders are added until three consecutive terms fall
    below ``tol`` relative to the running sum.  Returns a complex scalar or array.
    """
    r, rho, dtheta, dz = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r, rho, dtheta, dz)))
    shape = r.shape
    r, rho, dtheta, dz = (a.ravel() for a in (r, rho, dtheta, dz))
    if np.any(r <= 0) or np.any(rho <= 0):
        raise ValueError("r and rho must be > 0; the axis limit is not evaluated")
    dz = np.abs(dz)
    measures = _measures_for(spec, measures, float(dz.min()), float(dz.max()),
                             float(max(r.max(), rho.max())), density)
    radii, inv = np.unique(np.concatenate([r, rho]), return_inverse=True)
    ir, irho = inv[: r.size], inv[r.size:]

    def term(m):
        mass, s, _, W = measures.channel(m, radii)
        K = _kernel_from_s(s[:, None], dz[None, :])
        return np.einsum("i,iq,iq,iq->q", mass, K, W[:, ir], W[:, irho])

    total = np.zeros(r.size, dtype=complex)
    cap = m_max if m_max is not None else 256
    small = 0
    m = 0
    batch = 1 if m_max is None else cap + 1
    from ._backend import thread_count

    batch = max(batch if m_max is not None else thread_count(threads), 1)
    while m <= cap:
        ms = list(range(m, min(m + batch, cap + 1)))
        for mm, t in zip(ms, map_threads(term, ms, threads)):
            contrib = t if mm == 0 else 2.0 * np.cos(mm * dtheta) * t
            total += contrib
            if m_max is None:
                if np.max(np.abs(t)) <= tol * max(np.max(np.abs(total)), 1e-300):
                    small += 1
                else:
                    small = 0
        m = ms[-1] + 1
        if m_max is None and small >= 3:
            break
    out = total / (2.0 * math.pi**2 * np.sqrt(r * rho))
    return complex(out[0]) if shape == () else out.reshape(shape)


# ------------------------------------------------------------------ sources
@dataclass(frozen=True)
class SourceSpec:
    """Compactly supported source.

    Give either ``func(r, theta, z)`` (vectorized) or ``components``, a mapping
    ``m -> f_m(r, z)``.  ``r_support`` and ``z_support`` bound the support;
    ``r_resolution``/``z_resolution`` set the quadrature panel width (pick
    something like the smallest feature size).
    """

    r_support: tuple
    z_support: tuple
    func: Callable | None = None
    components: dict | None = None
    n_theta: int = 64
    r_resolution: float | None = None
    z_resolution: float | None = None
    order: int = 8

    def __post_init__(self):
        if (self.func is None) == (self.components is None):
            raise ValueError("give exactly one of func or components")
        r0, r1 = self.r_support
        z0, z1 = self.z_support
        if not (0 <= r0 < r1 and z0 < z1):
            raise ValueError("support boxes need 0 <= r_lo < r_hi and z_lo < z_hi")


@dataclass(frozen=True)
class SourceComponents:
    """``f_m`` tabulated on tensor quadrature nodes ``(r_nodes x z_nodes)``."""

    r_nodes: np.ndarray
    r_weights: np.ndarray
    z_nodes: np.ndarray
    z_weights: np.ndarray
    tables: dict
    peak: float

    @property
    def m_range(self):
        return sorted(self.tables)


def _source_nodes(src):
    r0, r1 = src.r_support
    z0, z1 = src.z_support
    wr = src.r_resolution or (r1 - r0) / 8
    wz = src.z_resolution or (z1 - z0) / 8
    rn, rw = radial_rule(r0, r1, wr, order=src.order)
    zn, zw = radial_rule(z0, z1, wz, order=src.order)
    return rn, rw, zn, zw


def decompose_source(src: SourceSpec, m_tol: float = 1e-10, guard: int = 0) -> SourceComponents:
    """Azimuthal components ``f_m(r, z) = (1/2pi) int f e^{-i m theta} dtheta``.

    The ``theta`` integral is the discrete Fourier sum on ``n_theta`` uniform
    points, exact for band-limited ``theta`` dependence.  Orders with
    ``max |f_m| <= m_tol * max |f|`` are dropped, except that ``guard`` extra
    orders beyond the detected band are kept.
    """
    rn, rw, zn, zw = _source_nodes(src)
    tables = {}
    if src.func is not None:
        n = src.n_theta
        th = 2 * math.pi * np.arange(n) / n
        R, T, Z = np.meshgrid(rn, th, zn, indexing="ij")
        vals = np.asarray(src.func(R, T, Z), dtype=complex)
        peak = float(np.max(np.abs(vals))) if vals.size else 0.0
        coef = np.fft.fft(vals, axis=1) / n
        ms = np.fft.fftfreq(n, 1.0 / n).astype(int)
        for j, m in enumerate(ms):
            tables[int(m)] = coef[:, j, :]
    else:
        Rg, Zg = np.meshgrid(rn, zn, indexing="ij")
        for m, fm in src.components.items():
            tables[int(m)] = np.asarray(fm(Rg, Zg), dtype=complex) * np.ones_like(Rg)
        peak = max((float(np.max(np.abs(t))) for t in tables.values()), default=0.0)
    keep = {m: t for m, t in tables.items() if peak > 0 and np.max(np.abs(t)) > m_tol * peak}
    if keep and guard:
        top = max(abs(m) for m in keep)
        for m in range(-top - guard, top + guard + 1):
            if m not in keep and m in tables:
                keep[m] = tables[m]
    return SourceComponents(rn, rw, zn, zw, dict(sorted(keep.items())), peak)


def ring_source(rho0: float, z0: float, width: float, amplitude: float = 1.0) -> SourceSpec:
    """Axisymmetric Gaussian ring ``A phi(rho - rho0) phi(z - z0)``, each ``phi`` of unit mass."""
    half = 6.0 * width

    def f(r, z):
        g = np.exp(-0.5 * ((r - rho0) / width) ** 2 - 0.5 * ((z - z0) / width) ** 2)
        return amplitude * g / (2 * math.pi * width * width)

    return SourceSpec((max(rho0 - half, 0.0), rho0 + half), (z0 - half, z0 + half),
                      components={0: f}, r_resolution=width, z_resolution=width)


# ------------------------------------------------------------------ field grid
@dataclass
class FieldGrid:
    """Complex field on a cylindrical tensor grid, ``values[i_r, i_theta, i_z]``.

    ``guided`` and ``radiation`` (if present) split ``values`` into the jump
    and continuum parts of the measure.  ``modal[m]`` is ``(lams, a)`` with
    ``a[k, i_z] = jump_k U_m(lam_k, z) / pi``, so the guided part of ``u_m`` is
    ``sum_k a_k j_m(r, lam_k) / sqrt(r)``.
    """

    r: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    guided: np.ndarray | None = None
    radiation: np.ndarray | None = None
    components: dict = field(default_factory=dict, repr=False)
    modal: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        shape = (self.r.size, self.theta.size, self.z.size)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} does not match axes {shape}")

    MAGIC = b"CYLWFLD1"

    def write_bin(self, path) -> None:
        """Binary layout: magic, dims (3 x float64), axes (float64), then
        interleaved re/im float64 with ``r`` varying fastest.  A JSON sidecar
        ``<path>.json`` holds the metadata."""
        with open(path, "wb") as fh:
            fh.write(self.MAGIC)
            fh.write(struct.pack("<3d", self.r.size, self.theta.size, self.z.size))
            for ax in (self.r, self.theta, self.z):
                fh.write(np.asarray(ax, dtype="<f8").tobytes())
            payload = np.empty(self.values.shape + (2,), dtype="<f8")
            payload[..., 0] = self.values.real
            payload[..., 1] = self.values.imag
            # r fastest: (z, theta, r, 2) in C order
            fh.write(np.ascontiguousarray(payload.transpose(2, 1, 0, 3)).tobytes())
        with open(f"{path}.json", "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True, default=_json_default)

    @classmethod
    def read_bin(cls, path) -> "FieldGrid":
        with open(path, "rb") as fh:
            if fh.read(8) != cls.MAGIC:
                raise ValueError("not a field grid file")
            nr, nt, nz = (int(x) for x in struct.unpack("<3d", fh.read(24)))
            r = np.frombuffer(fh.read(8 * nr), "<f8").copy()
            th = np.frombuffer(fh.read(8 * nt), "<f8").copy()
            z = np.frombuffer(fh.read(8 * nz), "<f8").copy()
            raw = np.frombuffer(fh.read(16 * nr * nt * nz), "<f8").reshape(nz, nt, nr, 2)
        vals = (raw[..., 0] + 1j * raw[..., 1]).transpose(2, 1, 0).copy()
        try:
            with open(f"{path}.json") as fh:
                meta = json.load(fh)
        except FileNotFoundError:
            meta = {}
        return cls(r, th, z, vals, meta)

    def slice_rows(self, theta_index: int | None = None, z_index: int | None = None):
        """Rows ``(r, theta, z, re, im)`` of a fixed-``theta`` or fixed-``z`` slice."""
        if (theta_index is None) == (z_index is None):
            raise ValueError("fix exactly one of theta_index, z_index")
        rows = []
        if theta_index is not None:
            t = self.theta[theta_index]
            for iz, z in enumerate(self.z):
                for ir, r in enumerate(self.r):
                    v = self.values[ir, theta_index, iz]
                    rows.append((r, t, z, v.real, v.imag))
        else:
            z = self.z[z_index]
            for it, t in enumerate(self.theta):
                for ir, r in enumerate(self.r):
                    v = self.values[ir, it, z_index]
                    rows.append((r, t, z, v.real, v.imag))
        return rows


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


# ------------------------------------------------------------------ synthesis
def solve_field(spec: WaveguideSpec, measures: FieldMeasures | None, src: SourceSpec, grid, *,
                m_tol: float = 1e-10, guard: int = 2, density: float = 1.0, order: int = 16,
                m_max: int | None = None, threads: int | None = None) -> FieldGrid:
    """Field ``u(r, theta, z)`` radiated by ``src`` on the tensor grid ``(r, theta, z)``.

    Without explicit ``measures`` a :func:`field_rule` is built from the
    geometry with the given ``density`` and Gauss-Legendre ``order``.
    ``m_max`` truncates the azimuthal sum to ``|m| <= m_max``.
    """
    r_out, th_out, z_out = (np.atleast_1d(np.asarray(a, dtype=float)) for a in grid)
    if np.any(r_out <= 0):
        raise ValueError("output radii must be > 0")
    comps = decompose_source(src, m_tol, guard)
    if m_max is not None:
        comps = SourceComponents(comps.r_nodes, comps.r_weights, comps.z_nodes, comps.z_weights,
                                 {m: t for m, t in comps.tables.items() if abs(m) <= m_max}, comps.peak)
    shape = (r_out.size, th_out.size, z_out.size)
    meta = {"spec_digest": spec.digest, "m_range": comps.m_range, "m_tol": m_tol, "m_max": m_max}
    if not comps.tables:
        zero = np.zeros(shape, dtype=complex)
        meta.update(lambda_max=None, on_plane=False)
        return FieldGrid(r_out, th_out, z_out, zero, meta, zero.copy(), zero.copy())
    dzs = np.abs(z_out[:, None] - comps.z_nodes[None, :])
    dz_min, dz_max = float(dzs.min()), float(dzs.max())
    r_max = float(max(r_out.max(), comps.r_nodes.max()))
    measures = _measures_for(spec, measures, dz_min, dz_max, r_max, density, order)
    rule = measures.rule
    radii = np.concatenate([comps.r_nodes, r_out])
    nq = comps.r_nodes.size
    by_order = {}
    for m in comps.tables:
        by_order.setdefault(abs(m), []).append(m)

    def channel(am):
        mass, s, dec, W = measures.channel(am, radii)
        lam_j = np.array([md.lam for md in measures.modes(am)])
        Jq, Jo = W[:, :nq], W[:, nq:]
        out = {}
        for m in by_order[am]:
            fm = comps.tables[m]
            F = Jq @ (np.sqrt(comps.r_nodes)[:, None] * comps.r_weights[:, None] * fm)
            U = np.zeros((s.size, z_out.size), dtype=complex)
            for q, (zeta, wz) in enumerate(zip(comps.z_nodes, comps.z_weights)):
                U += wz * _kernel_from_s(s[:, None], np.abs(z_out - zeta)[None, :]) * F[:, q:q + 1]
            MU = mass[:, None] * U
            scale = 1.0 / (math.pi * np.sqrt(r_out))[:, None]
            g = (Jo[dec].T @ MU[dec]) * scale
            c = (Jo[~dec].T @ MU[~dec]) * scale
            out[m] = (g, c, lam_j, MU[dec] / math.pi)
        return out

    guided = np.zeros(shape, dtype=complex)
    radiation = np.zeros(shape, dtype=complex)
    components, modal = {}, {}
    for res in map_threads(channel, sorted(by_order), threads):
        for m, (g, c, lam_j, amp) in res.items():
            phase = np.exp(1j * m * th_out)[None, :, None]
            guided += g[:, None, :] * phase
            radiation += c[:, None, :] * phase
            components[m] = g + c
            modal[m] = (lam_j, amp)
    meta.update(lambda_max=rule.lam_max, t_max=rule.t_max, dz_min=dz_min,
                on_plane=bool(rule.capped), n_lambda_nodes=int(rule.size),
                error_bar="wide (on-plane, algebraic lambda tail)" if rule.capped else "nominal")
    return FieldGrid(r_out, th_out, z_out, guided + radiation, meta, guided, radiation, components, modal)


# ------------------------------------------------------------------ verification operator
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _stencil(a, axis, coeffs, h):
    n = a.shape[axis]
    out = 0
    for j, c in enumerate(coeffs):
        sl = [slice(None)] * a.ndim
        sl[axis] = slice(j, n - 4 + j)
        out = out + c * a[tuple(sl)]
    return out / h


def helmholtz_residual(spec: WaveguideSpec, fg: FieldGrid, src: SourceSpec | None = None,
                       exclude: float = 0.0) -> float:
    """Relative residual of ``u_zz + (1/r)(r u_r)_r + u_tt/r^2 + k^2 n^2 u - f``.

    Fourth-order central differences on a uniform ``(r, z)`` grid; ``theta``
    must be a full uniform period (periodic differences).  The residual is the
    max over interior points of ``|L u - f|`` divided by the max of the summed
    magnitudes of the operator's terms.  Points closer than ``exclude`` to the
    source's support box are skipped, as are points whose radial stencil
    crosses a profile breakpoint.
    """
    r, th, z, u = fg.r, fg.theta, fg.z, fg.values
    if min(r.size, th.size, z.size) < 5:
        raise ValueError("need at least 5 points per axis")
    hr, hz = np.diff(r), np.diff(z)
    if not (np.allclose(hr, hr[0], rtol=1e-9) and np.allclose(hz, hz[0], rtol=1e-9)):
        raise ValueError("r and z axes must be uniform")
    ht = 2 * math.pi / th.size
    if not np.allclose(np.diff(th), ht, rtol=1e-9):
        raise ValueError("theta must cover a full period uniformly")
    hr, hz = hr[0], hz[0]
    core = u[2:-2, :, 2:-2]
    u_zz = _stencil(u[2:-2], 2, _D2, hz * hz)
    u_rr = _stencil(u[:, :, 2:-2], 0, _D2, hr * hr)
    u_r = _stencil(u[:, :, 2:-2], 0, _D1, hr)
    rr = r[2:-2][:, None, None]
    ext = np.concatenate([core[:, -2:], core, core[:, :2]], axis=1)
    u_tt = _stencil(ext, 1, _D2, ht * ht)
    n2k2 = spec.k2n02 - eval_q(spec, r[2:-2])
    kn = n2k2[:, None, None] * core
    radial_part = u_rr + u_r / rr
    Lu = u_zz + radial_part + u_tt / (rr * rr) + kn
    R3, T3, Z3 = np.meshgrid(r[2:-2], th, z[2:-2], indexing="ij")
    f = np.zeros_like(Lu)
    mask = np.ones(Lu.shape, dtype=bool)
    if src is not None:
        if src.func is not None:
            f = np.asarray(src.func(R3, T3, Z3), dtype=complex)
        else:
            for m, fm in src.components.items():
                f = f + np.exp(1j * m * T3) * fm(R3, Z3)
        if exclude > 0:
            (r0, r1), (z0, z1) = src.r_support, src.z_support
            dr = np.maximum(np.maximum(r0 - R3, R3 - r1), 0.0)
            dzz = np.maximum(np.maximum(z0 - Z3, Z3 - z1), 0.0)
            mask = np.hypot(dr, dzz) >= exclude
    # second derivatives jump across index discontinuities; stencils straddling one are not 4th order
    for b in list(spec.breaks[1:]) + [spec.R]:
        mask &= np.abs(R3 - b) >= 2 * hr * (1 + 1e-9)
    if not mask.any():
        raise ValueError("no interior points left after excluding the source neighbourhood")
    scale = (np.abs(u_zz) + np.abs(radial_part) + np.abs(u_tt / (rr * rr)) + np.abs(kn))[mask].max()
    if scale == 0:
        return 0.0
    return float(np.abs(Lu - f)[mask].max() / scale)
