"""Command-line front end.

``cylwave <command> --config run.toml [--output DIR] [--format csv|json|bin]
[--m M] [--threads N]``, with commands ``modes``, ``density``, ``selftest`` and
``field``.  Exit codes: 0 success, 2 configuration error, 3 numerical failure.

The configuration is TOML; the schema is documented in ``README.md``.  Every
output file records the library version and the SHA-256 of the configuration
file, and is byte-for-byte reproducible for identical inputs.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import struct
import sys

import numpy as np

from . import __version__
from ._backend import set_threads
from .field import FieldMeasures, SourceSpec, field_rule, greens_kernel, ring_source, solve_field
from .radial import RadialError, cladding_ab, regular_values, solve_regular, lagrange_identity_check
from .spectrum import assemble_measure, find_guided_modes, sweep_modes
from .transform import forward, inverse, parseval_gap, tail_estimate
from .waveguide import Coaxial, Parabolic, SpecError, Step, Tabulated, make_spec

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCHEMA_VERSION = 1
FORMATS = ("csv", "json", "bin")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    """Invalid or inconsistent configuration (exit code 2)."""


# ------------------------------------------------------------------ configuration
def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        cfg = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None
    ver = cfg.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {ver!r}")
    return cfg, hashlib.sha256(raw).hexdigest()


def _section(cfg, name):
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _num(sec, key, default=None, *, positive=False, integer=False, where=""):
    val = sec.get(key, default)
    if val is None:
        if default is None and key in sec:
            raise ConfigError(f"{where}{key} must be set")
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}{key} must be a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(f"{where}{key} must be an integer, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(f"{where}{key} must be finite")
    if positive and val <= 0:
        raise ConfigError(f"{where}{key} must be > 0, got {val!r}")
    return int(val) if integer else float(val)


def _require(sec, key, where, **kw):
    if key not in sec:
        raise ConfigError(f"missing {where}{key}")
    return _num(sec, key, **kw, where=where)


def build_spec(cfg):
    wg = _section(cfg, "waveguide")
    where = "waveguide."
    k = _require(wg, "k", where)
    n0 = _require(wg, "n0", where)
    n_cl = _require(wg, "n_cl", where)
    R = _require(wg, "R", where)
    prof = wg.get("profile")
    if not isinstance(prof, dict) or "kind" not in prof:
        raise ConfigError("waveguide.profile must be a table with a 'kind' key")
    kind = prof["kind"]
    pw = "waveguide.profile."
    if kind == "step":
        profile = Step(_num(prof, "n_core", n0, where=pw))
    elif kind == "parabolic":
        profile = Parabolic(_num(prof, "n_axis", n0, where=pw))
    elif kind == "coaxial":
        profile = Coaxial(_num(prof, "n_ring", n0, where=pw), _require(prof, "r_inner", pw),
                          _require(prof, "r_outer", pw))
    elif kind == "tabulated":
        samples = prof.get("samples")
        if not isinstance(samples, list):
            raise ConfigError("waveguide.profile.samples must be an array of [r, n] pairs")
        try:
            profile = Tabulated(samples)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"waveguide.profile.samples: {exc}") from None
    else:
        raise ConfigError(f"unknown profile kind {kind!r} (step, parabolic, coaxial, tabulated)")
    try:
        return make_spec(k, n0, n_cl, R, profile)
    except SpecError as exc:
        raise ConfigError(f"invalid waveguide: {exc}") from None


class Settings:
    """Effective settings after applying command-line overrides."""

    def __init__(self, cfg, args):
        out = _section(cfg, "output")
        num = _section(cfg, "numerics")
        self.out_dir = args.output or out.get("dir", ".")
        self.format = args.format or out.get("format", "csv")
        if self.format not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}, got {self.format!r}")
        thr = args.threads if args.threads is not None else out.get("threads")
        if thr is not None:
            if isinstance(thr, bool) or not isinstance(thr, int) or thr < 0:
                raise ConfigError(f"threads must be a non-negative integer, got {thr!r}")
        self.threads = thr
        w = "numerics."
        self.lambda_grid_size = _num(num, "lambda_grid_size", 400, positive=True, integer=True, where=w)
        self.m_max_cap = _num(num, "m_max_cap", 64, positive=True, integer=True, where=w)
        self.n_u = _num(num, "n_u", 512, positive=True, integer=True, where=w)
        self.lambda_max = _num(num, "lambda_max", None, positive=True, where=w)
        self.field_density = _num(num, "field_density", 1.0, positive=True, where=w)
        self.m_tol = _num(num, "m_tol", 1e-10, positive=True, where=w)
        self.m = args.m


# ------------------------------------------------------------------ output helpers
def _fmt(x):
    if isinstance(x, (bool, str)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _meta(digest, command, extra=None):
    m = {"library": "cylwave", "version": __version__, "config_sha256": digest, "command": command}
    if extra:
        m.update(extra)
    return m


def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    return o


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_table(settings, stem, columns, rows, meta):
    """Write a numeric table in the selected format; returns the main file path."""
    os.makedirs(settings.out_dir, exist_ok=True)
    base = os.path.join(settings.out_dir, stem)
    if settings.format == "csv":
        path = base + ".csv"
        buf = io.StringIO()
        for key in sorted(meta):
            buf.write(f"# {key}: {json.dumps(_clean(meta[key]), sort_keys=True)}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    elif settings.format == "json":
        path = base + ".json"
        _write_json(path, {"meta": meta, "columns": list(columns),
                           "rows": [list(r) for r in rows]})
    else:
        path = base + ".bin"
        numeric = [[float(v) if not isinstance(v, str) else float("nan") for v in r] for r in rows]
        with open(path, "wb") as fh:
            fh.write(struct.pack("<2d", len(rows), len(columns)))
            fh.write(np.asarray(numeric, dtype="<f8").reshape(len(rows), len(columns)).tobytes())
        _write_json(path + ".json", {"meta": meta, "columns": list(columns),
                                     "layout": "header <2 x f64: rows, cols>, then row-major f64"})
    return path


# ------------------------------------------------------------------ commands
def cmd_modes(cfg, digest, settings):
    spec = build_spec(cfg)
    if settings.m is not None:
        modes = find_guided_modes(spec, settings.m, settings.lambda_grid_size) if spec.d2 > 0 else []
        extra = {"m": abs(settings.m)}
    else:
        modes = sweep_modes(spec, settings.m_max_cap, settings.lambda_grid_size, settings.threads)
        extra = {"m_stop": modes.m_stop, "capped": modes.capped, "certified": modes.certified}
    rows = [(md.m, md.lam, md.beta, md.jump, md.decay.value, md.boundary[0], md.boundary[1])
            for md in modes]
    meta = _meta(digest, "modes", {"spec": spec.to_dict(), **extra,
                                   "lambda_grid_size": settings.lambda_grid_size})
    path = write_table(settings, "modes", ("m", "lambda", "beta", "jump", "decay", "j_R", "dj_R"), rows, meta)
    for md in modes:
        print(f"m={md.m:<3d} lambda={md.lam:.12g} beta={md.beta:.12g} jump={md.jump:.6g} ({md.decay.value})")
    print(f"{len(rows)} total guided modes")
    print(f"wrote {path}")
    return EXIT_OK


def _m_list(cfg, settings, section):
    if settings.m is not None:
        return [abs(settings.m)]
    ms = _section(cfg, section).get("m", 0)
    ms = ms if isinstance(ms, list) else [ms]
    if not ms or any(isinstance(x, bool) or not isinstance(x, int) for x in ms):
        raise ConfigError(f"{section}.m must be an integer or a list of integers")
    return [abs(x) for x in ms]


def cmd_density(cfg, digest, settings):
    spec = build_spec(cfg)
    ms = _m_list(cfg, settings, "density")
    lam_max = settings.lambda_max
    if lam_max is not None and lam_max <= spec.d2:
        raise ConfigError(f"numerics.lambda_max = {lam_max} must exceed d2 = {spec.d2}")
    rows = []
    for m in ms:
        meas = assemble_measure(spec, m, lam_max, settings.n_u,
                                lambda_grid_size=settings.lambda_grid_size)
        if not (np.all(np.isfinite(meas.density)) and np.all(meas.density > 0)):
            raise FloatingPointError(f"density for m={m} is not finite and positive")
        rows.extend((m, lam, rho) for lam, rho in zip(meas.nodes, meas.density))
        print(f"m={m}: {meas.nodes.size} nodes on ({spec.d2:.6g}, {meas.lam_max:.6g}], "
              f"rho in [{meas.density.min():.6g}, {meas.density.max():.6g}], {meas.n_jumps} jumps")
    meta = _meta(digest, "density", {"spec": spec.to_dict(), "m": ms, "n_u": settings.n_u,
                                     "lambda_max": lam_max})
    path = write_table(settings, "density", ("m", "lambda", "rho"), rows, meta)
    print(f"wrote {path}")
    return EXIT_OK


def _parseval_threshold(n_u):
    return 1e-3 * max(1.0, (512.0 / n_u) ** 2)


def cmd_selftest(cfg, digest, settings):
    spec = build_spec(cfg)
    st = _section(cfg, "selftest")
    seed = _num(st, "seed", 0, integer=True, where="selftest.")
    n_pts = _num(st, "n_points", 100, positive=True, integer=True, where="selftest.")
    m = settings.m if settings.m is not None else _num(st, "m", 0, integer=True, where="selftest.")
    m = abs(m)
    rng = np.random.default_rng(seed)
    checks = []

    # Wronskian of the cladding pair at r = R
    lam_hi = 4.0 * spec.k2n02
    worst = 0.0
    for _ in range(n_pts):
        mm = int(rng.integers(0, 11))
        lam = spec.d2 + (lam_hi - spec.d2) * (1.0 - rng.random())
        a, da, b, db = cladding_ab(spec, mm, lam, spec.R)
        worst = max(worst, abs(db * a - da * b - 2 / math.pi) / (2 / math.pi))
    checks.append(("wronskian", worst, 1e-10))

    # Lagrange identity on the core
    worst = 0.0
    for _ in range(5):
        l1, l2 = np.sort(rng.uniform(0.05, 1.0, 2) * lam_hi)
        s1 = solve_regular(spec, m, float(l1))
        s2 = solve_regular(spec, m, float(l2))
        worst = max(worst, lagrange_identity_check(s1, s2, 0.1 * spec.R, spec.R))
    checks.append(("lagrange", worst, 1e-6))

    # Parseval and round trip for a smooth test function
    lam_max = settings.lambda_max
    if lam_max is not None and lam_max <= spec.d2:
        raise ConfigError(f"numerics.lambda_max = {lam_max} must exceed d2 = {spec.d2}")
    scale = spec.R
    support = 6.0 * scale

    def g(r):
        return np.sqrt(r) * (r / scale) ** m * np.exp(-(r / scale) ** 2)

    meas = assemble_measure(spec, m, lam_max, settings.n_u, lambda_grid_size=settings.lambda_grid_size)
    coeffs = forward(meas, spec, m, g, support)
    gap = parseval_gap(meas, spec, m, g, support, coeffs)
    thr = _parseval_threshold(settings.n_u)
    checks.append(("parseval", gap, thr))
    rr = np.linspace(0.02, 3.0, 150) * scale
    back = inverse(meas, spec, m, coeffs, rr)
    err = float(np.sqrt(np.sum((back - g(rr)) ** 2) / np.sum(g(rr) ** 2)))
    # squared L2 reconstruction error equals the missing spectral energy
    checks.append(("round_trip", err, math.sqrt(thr)))

    ok = True
    for name, val, tol in checks:
        good = bool(val <= tol)
        ok &= good
        print(f"{'PASS' if good else 'FAIL'} {name:<10s} residual={val:.3e} threshold={tol:.3e}")
    print(f"lambda_max={meas.lam_max:.6g} n_u={settings.n_u} "
          f"tail_estimate={tail_estimate(meas, coeffs):.3e}")
    if settings.n_u < 512:
        print(f"coarse grid: relaxed Parseval threshold {thr:.3e}")
    if settings.out_dir and settings.out_dir != ".":
        meta = _meta(digest, "selftest", {"spec": spec.to_dict(), "n_u": settings.n_u, "m": m})
        write_table(settings, "selftest", ("check", "residual", "threshold", "pass"),
                    [(n, v, t, bool(v <= t)) for n, v, t in checks], meta)
    return EXIT_OK if ok else EXIT_NUMERIC


def _axis(sec, key, default):
    val = sec.get(key, default)
    if isinstance(val, dict):
        try:
            start, stop, num = float(val["start"]), float(val["stop"]), int(val["num"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"field.{key} needs start, stop and num") from None
        if num < 1:
            raise ConfigError(f"field.{key}.num must be >= 1")
        return np.linspace(start, stop, num)
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return np.array([float(val)])
    if isinstance(val, list) and val and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val):
        return np.array(val, dtype=float)
    raise ConfigError(f"field.{key} must be a number, a list or {{start, stop, num}}")


def _build_source(spec, sec, settings):
    kind = sec.get("kind", "zero")
    w = "field.source."
    if kind == "zero":
        return SourceSpec((0.0, spec.R), (-1.0, 1.0), components={0: lambda r, z: 0.0 * r})
    if kind == "ring":
        return ring_source(_require(sec, "rho0", w, positive=True), _num(sec, "z0", 0.0, where=w),
                           _require(sec, "width", w, positive=True), _num(sec, "amplitude", 1.0, where=w))
    if kind == "gaussian":
        rho0 = _require(sec, "rho0", w, positive=True)
        z0 = _num(sec, "z0", 0.0, where=w)
        width = _require(sec, "width", w, positive=True)
        m = _num(sec, "m", 0, integer=True, where=w)
        amp = _num(sec, "amplitude", 1.0, where=w)
        half = 6 * width

        def f(r, z):
            return amp * np.exp(-0.5 * ((r - rho0) / width) ** 2 - 0.5 * ((z - z0) / width) ** 2)

        return SourceSpec((max(rho0 - half, 0.0), rho0 + half), (z0 - half, z0 + half),
                          components={m: f}, r_resolution=width, z_resolution=width)
    if kind == "mode":
        m = _num(sec, "m", 0, integer=True, where=w)
        idx = _num(sec, "index", 1, positive=True, integer=True, where=w)
        z_half = _require(sec, "z_half", w, positive=True)
        z0 = _num(sec, "z0", 0.0, where=w)
        amp = _num(sec, "amplitude", 1.0, where=w)
        modes = find_guided_modes(spec, m, settings.lambda_grid_size) if spec.d2 > 0 else []
        if idx > len(modes):
            raise ConfigError(f"field.source.index = {idx} but m={m} has {len(modes)} guided modes")
        lam = modes[idx - 1].lam
        decay = math.sqrt(max(spec.d2 - lam, 0.0))
        r_max = _num(sec, "r_max", spec.R + (25.0 / decay if decay > 0 else 10 * spec.R),
                     positive=True, where=w)

        def fm(r, z):
            r = np.asarray(r, dtype=float)
            W, *_ = regular_values(spec, m, [lam], np.maximum(r.ravel(), 1e-300), True)
            prof = (W[0] / np.sqrt(np.maximum(r.ravel(), 1e-300))).reshape(r.shape)
            zz = (np.asarray(z) - z0) / z_half
            return amp * prof * np.where(np.abs(zz) < 1, np.cos(0.5 * math.pi * zz) ** 2, 0.0)

        return SourceSpec((0.0, r_max), (z0 - z_half, z0 + z_half), components={m: fm},
                          r_resolution=min(0.1 * spec.R, 0.5 / math.sqrt(spec.k2n02)),
                          z_resolution=z_half / 8)
    raise ConfigError(f"unknown source kind {kind!r} (zero, ring, gaussian, mode)")


def cmd_field(cfg, digest, settings):
    spec = build_spec(cfg)
    sec = _section(cfg, "field")
    mode = sec.get("mode", "field")
    if mode == "greens":
        return _cmd_greens(spec, sec, digest, settings)
    if mode != "field":
        raise ConfigError(f"field.mode must be 'field' or 'greens', got {mode!r}")
    src_sec = sec.get("source", {"kind": "zero"})
    if not isinstance(src_sec, dict):
        raise ConfigError("[field.source] must be a table")
    r = _axis(sec, "r", None) if "r" in sec else None
    z = _axis(sec, "z", None) if "z" in sec else None
    if r is None or z is None:
        raise ConfigError("field.r and field.z are required")
    theta = _axis(sec, "theta", 0.0)
    if np.any(r <= 0):
        raise ConfigError("field.r values must be > 0")
    src = _build_source(spec, src_sec, settings)
    fg = solve_field(spec, None, src, (r, theta, z), m_tol=settings.m_tol,
                     density=settings.field_density, threads=settings.threads)
    meta = _meta(digest, "field", {"spec": spec.to_dict(), "source": src_sec, **fg.metadata})
    # modal content at the plane farthest from the source centre
    zc = 0.5 * sum(src.z_support)
    iz = int(np.argmax(np.abs(z - zc)))
    summary = []
    for m in sorted(fg.modal):
        lams, amp = fg.modal[m]
        for k, lam in enumerate(lams):
            summary.append({"m": m, "mode": k + 1, "lambda": float(lam),
                            "amplitude_re": float(amp[k, iz].real), "amplitude_im": float(amp[k, iz].imag),
                            "abs": float(abs(amp[k, iz]))})
    g_pl = float(np.linalg.norm(fg.guided[:, :, iz]))
    c_pl = float(np.linalg.norm(fg.radiation[:, :, iz]))
    frac = g_pl / (g_pl + c_pl) if g_pl + c_pl > 0 else 0.0
    meta.update(modal_projection={"z": float(z[iz]), "coefficients": summary,
                                  "guided_norm": g_pl, "radiation_norm": c_pl})
    path = _write_field(settings, fg, meta)
    print(f"field on {r.size} x {theta.size} x {z.size} grid, orders {fg.metadata['m_range']}")
    print(f"at z={z[iz]:.6g}: guided norm {g_pl:.6e}, radiation norm {c_pl:.6e}, guided fraction {frac:.6f}")
    for row in summary:
        print(f"  m={row['m']} mode {row['mode']} lambda={row['lambda']:.10g} |a|={row['abs']:.6e}")
    if fg.metadata.get("on_plane"):
        print("note: grid touches the source plane; lambda tail truncated at a floor (wider error bar)")
    print(f"wrote {path}")
    return EXIT_OK


def _write_field(settings, fg, meta):
    os.makedirs(settings.out_dir, exist_ok=True)
    base = os.path.join(settings.out_dir, "field")
    fg.metadata = meta
    if settings.format == "bin":
        path = base + ".bin"
        fg.write_bin(path)
        _write_json(path + ".json", meta)  # normalized formatting
        return path
    rows = []
    for it, t in enumerate(fg.theta):
        rows.extend(fg.slice_rows(theta_index=it))
    return write_table(settings, "field", ("r", "theta", "z", "re", "im"), rows, meta)


def _cmd_greens(spec, sec, digest, settings):
    gsec = sec.get("greens", {})
    pts = gsec.get("points") if isinstance(gsec, dict) else None
    if not isinstance(pts, list) or not pts:
        raise ConfigError("field.greens.points must be a non-empty array of [r, rho, dtheta, dz]")
    try:
        arr = np.array(pts, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("field.greens.points must hold numbers") from None
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ConfigError("each field.greens.points entry must be [r, rho, dtheta, dz]")
    if np.any(arr[:, :2] <= 0):
        raise ConfigError("greens points need r > 0 and rho > 0 (axis values are not evaluated)")
    m_max = settings.m if settings.m is not None else gsec.get("m_max")
    if m_max is not None and (isinstance(m_max, bool) or not isinstance(m_max, int) or m_max < 0):
        raise ConfigError("field.greens.m_max must be a non-negative integer")
    r, rho, dth, dz = arr.T
    dz = np.abs(dz)
    rule = field_rule(spec, float(dz.min()), float(dz.max()), float(max(r.max(), rho.max())),
                      density=settings.field_density)
    meas = FieldMeasures(spec, rule, settings.lambda_grid_size)
    G = np.atleast_1d(greens_kernel(spec, meas, r, rho, dth, dz, m_max, threads=settings.threads))
    rows = [(a, b, c, d, v.real, v.imag) for a, b, c, d, v in zip(r, rho, dth, dz, G)]
    meta = _meta(digest, "greens", {"spec": spec.to_dict(), "m_max": m_max,
                                    "lambda_max": rule.lam_max, "on_plane": rule.capped})
    fmt = settings.format
    if fmt == "bin":
        settings.format = "json"  # point lists are small; keep them textual
    path = write_table(settings, "greens", ("r", "rho", "dtheta", "dz", "re", "im"), rows, meta)
    settings.format = fmt
    for row in rows:
        print("G(" + ", ".join(f"{v:.6g}" for v in row[:4]) + f") = {row[4]:.10e} {row[5]:+.10e}i")
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"modes": cmd_modes, "density": cmd_density, "selftest": cmd_selftest, "field": cmd_field}


def build_parser():
    p = argparse.ArgumentParser(prog="cylwave", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"cylwave {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    help_ = {
        "modes": "guided modes of every azimuthal order",
        "density": "continuous spectral density rho_m(lambda)",
        "selftest": "Wronskian, Lagrange, Parseval and round-trip checks",
        "field": "field of a source, or Green's function values (field.mode = 'greens')",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=help_[name])
        sp.add_argument("--config", required=True, help="TOML configuration file")
        sp.add_argument("--output", help="output directory (overrides output.dir)")
        sp.add_argument("--format", choices=FORMATS, help="output format (overrides output.format)")
        sp.add_argument("--m", type=int, help="azimuthal order (where applicable)")
        sp.add_argument("--threads", type=int, help="worker threads, 0 = one per CPU")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, digest = load_config(args.config)
        settings = Settings(cfg, args)
        set_threads(settings.threads)
        return COMMANDS[args.command](cfg, digest, settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RadialError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        set_threads(None)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
