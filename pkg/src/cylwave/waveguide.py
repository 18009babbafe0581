"""Waveguide description: index profiles, the potential ``q(r)`` and validation.

Every downstream module takes ``q`` from here.  Internally the core profile is
stored as a piecewise polynomial in the local variable ``r - b_i`` so that the
radial integrator can restart cleanly at every discontinuity of ``q`` or of its
derivatives.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import PchipInterpolator

__all__ = [
    "Step",
    "Parabolic",
    "Coaxial",
    "Tabulated",
    "CoreProfile",
    "WaveguideSpec",
    "SpecError",
    "make_spec",
    "eval_q",
    "beta_from_lambda",
    "lambda_from_beta",
]

_TOL = 1e-12


class SpecError(ValueError):
    """Raised for physically inconsistent waveguide parameters."""


@dataclass(frozen=True)
class Step:
    """Constant core index ``n_core`` on ``[0, R)``."""

    n_core: float

    def n2_pieces(self, R: float, n_cl: float):
        return [0.0], [np.array([self.n_core**2])]

    def bounds(self, R: float, n_cl: float):
        return self.n_core, self.n_core


@dataclass(frozen=True)
class Parabolic:
    """Graded core, ``n(r)^2 = n_axis^2 - (n_axis^2 - n_cl^2)(r/R)^2``."""

    n_axis: float

    def n2_pieces(self, R: float, n_cl: float):
        a = self.n_axis**2
        return [0.0], [np.array([a, 0.0, -(a - n_cl**2) / R**2])]

    def bounds(self, R: float, n_cl: float):
        return n_cl, self.n_axis


@dataclass(frozen=True)
class Coaxial:
    """Ring of index ``n_ring`` on ``[r_inner, r_outer)``; cladding index elsewhere."""

    n_ring: float
    r_inner: float
    r_outer: float

    def n2_pieces(self, R: float, n_cl: float):
        if not 0.0 <= self.r_inner < self.r_outer <= R:
            raise SpecError(
                f"coaxial ring needs 0 <= r_inner < r_outer <= R, got "
                f"[{self.r_inner}, {self.r_outer}] with R={R}"
            )
        breaks, polys = [], []
        if self.r_inner > 0:
            breaks.append(0.0)
            polys.append(np.array([n_cl**2]))
        breaks.append(float(self.r_inner))
        polys.append(np.array([self.n_ring**2]))
        if self.r_outer < R:
            breaks.append(float(self.r_outer))
            polys.append(np.array([n_cl**2]))
        return breaks, polys

    def bounds(self, R: float, n_cl: float):
        lo = self.n_ring if (self.r_inner == 0 and self.r_outer == R) else min(n_cl, self.n_ring)
        return lo, max(self.n_ring, n_cl)


@dataclass(frozen=True)
class Tabulated:
    """Sampled profile ``(r_i, n_i)`` with monotone cubic (PCHIP) interpolation.

    ``r`` must start at 0, increase strictly and reach at least ``R``.
    """

    r: tuple
    n: tuple

    def __init__(self, samples: Sequence[Sequence[float]]):
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise SpecError("tabulated profile needs at least two (r, n) pairs")
        object.__setattr__(self, "r", tuple(arr[:, 0]))
        object.__setattr__(self, "n", tuple(arr[:, 1]))

    def _check_grid(self, R: float):
        r = np.asarray(self.r)
        if np.any(np.diff(r) <= 0):
            raise SpecError("tabulated r samples must be strictly increasing")
        if r[0] != 0.0:
            raise SpecError("tabulated r samples must start at r = 0")
        if r[-1] < R * (1 - _TOL):
            raise SpecError(f"tabulated r samples end at {r[-1]}, before R = {R}")

    def n2_pieces(self, R: float, n_cl: float):
        self._check_grid(R)
        pp = PchipInterpolator(np.asarray(self.r), np.asarray(self.n))
        breaks, polys = [], []
        for i, b in enumerate(pp.x[:-1]):
            if b >= R:
                break
            c = pp.c[::-1, i]  # ascending powers of (r - b)
            polys.append(P.polymul(c, c))
            breaks.append(float(b))
        return breaks, polys

    def bounds(self, R: float, n_cl: float):
        self._check_grid(R)
        pp = PchipInterpolator(np.asarray(self.r), np.asarray(self.n))
        rr = np.linspace(0.0, R, 4001)
        vals = np.concatenate([pp(rr), np.asarray(self.n)[np.asarray(self.r) <= R]])
        return float(vals.min()), float(vals.max())


CoreProfile = Union[Step, Parabolic, Coaxial, Tabulated]


@dataclass(frozen=True)
class WaveguideSpec:
    """Validated waveguide; build it with :func:`make_spec`.

    Attributes
    ----------
    k, n0, n_cl, R : float
        Wavenumber, reference (maximum) index, cladding index, core radius.
    profile : CoreProfile
    d2 : float
        ``k^2 (n0^2 - n_cl^2)``, the value of ``q`` in the cladding.
    q_inf : float
        Supremum of ``q``.
    breaks : ndarray
        Left ends of the polynomial pieces of ``q``; the last one is ``R``.
    coefs : ndarray
        ``coefs[i, j]`` multiplies ``(r - breaks[i])**j`` on piece ``i``.
    """

    k: float
    n0: float
    n_cl: float
    R: float
    profile: CoreProfile
    d2: float = field(init=False)
    q_inf: float = field(init=False)
    breaks: np.ndarray = field(init=False, repr=False, compare=False)
    coefs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k, n0, n_cl, R = self.k, self.n0, self.n_cl, self.R
        for name, v in (("k", k), ("n0", n0), ("n_cl", n_cl), ("R", R)):
            if not (math.isfinite(v) and v > 0):
                raise SpecError(f"{name} must be finite and > 0, got {v}")
        if n_cl > n0:
            raise SpecError(f"n_cl > n0 is not allowed (n_cl={n_cl}, n0={n0})")
        lo, hi = self.profile.bounds(R, n_cl)
        if hi > n0 * (1 + _TOL) or lo < n_cl * (1 - _TOL):
            raise SpecError(
                f"core index must stay within [n_cl, n0] = [{n_cl}, {n0}]; "
                f"profile spans [{lo}, {hi}]"
            )
        kk = k * k
        breaks, polys = self.profile.n2_pieces(R, n_cl)
        deg = max(len(p) for p in polys)
        coefs = np.zeros((len(polys) + 1, deg))
        for i, p in enumerate(polys):
            coefs[i, : len(p)] = -kk * np.asarray(p)
            coefs[i, 0] += kk * n0 * n0
        d2 = kk * (n0 * n0 - n_cl * n_cl)
        coefs[-1, 0] = d2
        set_ = object.__setattr__
        set_(self, "d2", d2)
        set_(self, "breaks", np.array(breaks + [float(R)]))
        set_(self, "coefs", coefs)
        rr = np.linspace(0.0, R, 2001)
        qmax = max(d2, float(np.max(eval_q(self, rr))))
        set_(self, "q_inf", max(0.0, qmax))

    @property
    def k2n02(self) -> float:
        """Squared core wavenumber ``k^2 n0^2``; the axial branch point."""
        return self.k * self.k * self.n0 * self.n0

    @property
    def V(self) -> float:
        """Normalized frequency ``R sqrt(d2)``."""
        return self.R * math.sqrt(self.d2)

    def to_dict(self) -> dict:
        prof = self.profile
        kind = type(prof).__name__.lower()
        if isinstance(prof, Tabulated):
            params = {"samples": [[a, b] for a, b in zip(prof.r, prof.n)]}
        else:
            params = {k: getattr(prof, k) for k in prof.__dataclass_fields__}
        return {
            "k": self.k,
            "n0": self.n0,
            "n_cl": self.n_cl,
            "R": self.R,
            "profile": {"kind": kind, **params},
        }

    @property
    def digest(self) -> str:
        """Stable SHA-256 of the physical parameters."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def make_spec(k: float, n0: float, n_cl: float, R: float, profile: CoreProfile) -> WaveguideSpec:
    """Validate parameters and precompute ``d2``, ``q_inf`` and the piecewise form of ``q``."""
    return WaveguideSpec(float(k), float(n0), float(n_cl), float(R), profile)


def eval_q(spec: WaveguideSpec, r):
    """``q(r) = k^2 (n0^2 - n(r)^2)``; exactly ``d2`` for ``r >= R``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("q is defined for r >= 0 only")
    idx = np.searchsorted(spec.breaks, r, side="right") - 1
    idx = np.clip(idx, 0, len(spec.breaks) - 1)
    x = r - spec.breaks[idx]
    c = spec.coefs[idx]
    out = np.zeros_like(r)
    for j in range(c.shape[-1] - 1, -1, -1):
        out = out * x + c[..., j]
    out = np.where(r >= spec.R, spec.d2, out)
    return out if out.ndim else float(out)


def beta_from_lambda(spec: WaveguideSpec, lam):
    """Normalized propagation constant ``beta = sqrt(n0^2 - lam/k^2)`` (NaN above the branch point)."""
    val = spec.n0**2 - np.asarray(lam, dtype=float) / spec.k**2
    with np.errstate(invalid="ignore"):
        out = np.sqrt(val)
    return out if np.ndim(out) else float(out)


def lambda_from_beta(spec: WaveguideSpec, beta):
    return spec.k**2 * (spec.n0**2 - np.asarray(beta, dtype=float) ** 2)
