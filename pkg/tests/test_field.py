import math

import numpy as np
import pytest

from cylwave.field import (
    FieldGrid,
    SourceSpec,
    axial_kernel,
    decompose_source,
    field_rule,
    greens_kernel,
    helmholtz_residual,
    ring_source,
    solve_field,
)
from cylwave.radial import regular_values
from cylwave.spectrum import find_guided_modes


def free_space_green(D, kn):
    return -np.exp(1j * kn * D) / (4 * math.pi * D)


# ------------------------------------------------------------------ axial kernel
def test_axial_kernel_examples(step5):
    K = step5.k2n02
    assert axial_kernel(step5, K - 1, 0.0).value == pytest.approx(1 / 2j, rel=1e-15)
    assert axial_kernel(step5, K + 4, 1.0).value == pytest.approx(-math.exp(-2) / 4, rel=1e-14)


def test_axial_kernel_branch_flag(step5):
    K = step5.k2n02
    assert axial_kernel(step5, K * (1 + 1e-12), 0.3).near_singular
    assert not axial_kernel(step5, K - 1, 0.3).near_singular
    with pytest.raises(ValueError):
        axial_kernel(step5, K - 1, -0.1)


@pytest.mark.parametrize("shift", [-3.0, -0.2, 0.5, 6.0])
def test_axial_kernel_solves_ode(step5, shift):
    lam = step5.k2n02 + shift
    s2 = -shift
    h = 1e-3

    def U(z):
        return axial_kernel(step5, lam, abs(z)).value

    for z in (-1.3, -0.4, 0.25, 0.9):
        d2 = (U(z - h) - 2 * U(z) + U(z + h)) / h**2
        res = abs(d2 + s2 * U(z))
        assert res <= 1e-6 * max(abs(s2 * U(z)), abs(d2), 1e-300)
    # unit jump of the derivative at the source plane
    e = 1e-6
    up = (U(2 * e) - U(e)) / e
    dn = (U(-e) - U(-2 * e)) / e
    assert abs((up - dn) - 1) < 1e-5


def test_axial_kernel_decreasing_above_branch(step5):
    lam = step5.k2n02 + 2.0
    vals = [abs(axial_kernel(step5, lam, dz).value) for dz in np.linspace(0, 5, 50)]
    assert np.all(np.diff(vals) < 0)


def test_axial_kernel_constant_modulus_below_branch(step5):
    lam = step5.k2n02 - 2.0
    vals = [abs(axial_kernel(step5, lam, dz).value) for dz in np.linspace(0, 5, 20)]
    assert np.allclose(vals, vals[0], rtol=1e-14)


# ------------------------------------------------------------------ lambda rule
def test_field_rule_truncation(step5):
    rule = field_rule(step5, 0.5, 2.0, 2.0)
    assert not rule.capped
    # evanescent factor at the truncation point is below 1e-10
    assert math.exp(-0.5 * rule.t_max) < 1e-10
    assert rule.lam_max == pytest.approx(step5.k2n02 + rule.t_max**2, rel=1e-12)
    assert np.all(rule.lam > step5.d2) and np.all(rule.weights > 0)
    on_plane = field_rule(step5, 0.0, 2.0, 2.0)
    assert on_plane.capped


# ------------------------------------------------------------------ sources
def _grid_src(func, n_theta=64):
    return SourceSpec((0.0, 1.0), (-1.0, 1.0), func=func, n_theta=n_theta)


def test_decompose_cos():
    g = lambda r, z: np.exp(-r * r - z * z)  # noqa: E731
    comps = decompose_source(_grid_src(lambda r, t, z: g(r, z) * np.cos(t)))
    assert comps.m_range == [-1, 1]
    R, Z = np.meshgrid(comps.r_nodes, comps.z_nodes, indexing="ij")
    for m in (-1, 1):
        assert np.allclose(comps.tables[m], g(R, Z) / 2, rtol=1e-14, atol=1e-16)


def test_decompose_axisymmetric():
    g = lambda r, z: (1 + r) * np.cos(z)  # noqa: E731
    comps = decompose_source(_grid_src(lambda r, t, z: g(r, z) + 0 * t))
    assert comps.m_range == [0]
    R, Z = np.meshgrid(comps.r_nodes, comps.z_nodes, indexing="ij")
    assert np.allclose(comps.tables[0], g(R, Z), rtol=1e-14)


def test_decompose_single_harmonic():
    comps = decompose_source(_grid_src(lambda r, t, z: np.exp(-r - z * z) * np.exp(3j * t)), m_tol=1e-12)
    assert comps.m_range == [3]


def test_decompose_guard_orders():
    comps = decompose_source(_grid_src(lambda r, t, z: np.exp(-r) * np.cos(2 * t) + 0 * z), guard=2)
    assert comps.m_range == [-4, -3, -2, -1, 0, 1, 2, 3, 4]


def test_decompose_zero():
    comps = decompose_source(_grid_src(lambda r, t, z: 0 * r))
    assert comps.tables == {} and comps.peak == 0.0


def test_source_validation():
    with pytest.raises(ValueError):
        SourceSpec((0, 1), (-1, 1))
    with pytest.raises(ValueError):
        SourceSpec((0, 1), (-1, 1), func=lambda r, t, z: r, components={0: lambda r, z: r})
    with pytest.raises(ValueError):
        SourceSpec((1, 0.5), (-1, 1), func=lambda r, t, z: r)


def test_ring_source_unit_mass():
    src = ring_source(0.5, 0.2, 0.03, amplitude=2.0)
    comps = decompose_source(src)
    mass = np.einsum("i,j,ij->", comps.r_weights, comps.z_weights, comps.tables[0].real)
    # each Gaussian factor has unit mass, so int int f dr dz = A
    assert mass == pytest.approx(2.0, rel=1e-8)


# ------------------------------------------------------------------ Green's function
def test_greens_free_space_closed_form(free_space, rng):
    n = 20
    r = rng.uniform(0.3, 1.5, n)
    rho = rng.uniform(0.3, 1.5, n)
    th = rng.uniform(0, math.pi, n)
    dz = rng.uniform(0.5, 1.5, n)
    D = np.sqrt(r**2 + rho**2 - 2 * r * rho * np.cos(th) + dz**2)
    G = greens_kernel(free_space, None, r, rho, th, dz)
    ref = free_space_green(D, 1.0)
    assert np.max(np.abs(G - ref) / np.abs(ref)) <= 2e-2


def test_greens_symmetry_and_reciprocity(step5):
    r = np.array([0.4, 1.3, 0.7])
    rho = np.array([1.1, 0.6, 0.7])
    th = np.array([0.3, -1.2, 2.0])
    dz = np.array([0.8, 1.5, 0.6])
    a = greens_kernel(step5, None, r, rho, th, dz, m_max=12)
    b = greens_kernel(step5, None, rho, r, -th, dz, m_max=12)
    c = greens_kernel(step5, None, rho, r, th, dz, m_max=12)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))
    assert np.max(np.abs(a - c)) <= 1e-12 * np.max(np.abs(a))
    d = greens_kernel(step5, None, r, rho, th, -dz, m_max=12)
    assert np.max(np.abs(a - d)) <= 1e-12 * np.max(np.abs(a))


def test_greens_scalar_and_shape(free_space):
    g = greens_kernel(free_space, None, 0.5, 0.7, 0.0, 1.0, m_max=4)
    assert isinstance(g, complex)
    arr = greens_kernel(free_space, None, np.full((2, 3), 0.5), 0.7, 0.0, 1.0, m_max=4)
    assert arr.shape == (2, 3) and np.allclose(arr, g, rtol=1e-13)


def test_greens_rejects_axis(step5):
    with pytest.raises(ValueError):
        greens_kernel(step5, None, 0.0, 0.5, 0.0, 1.0)
    with pytest.raises(ValueError):
        greens_kernel(step5, None, 0.5, 0.0, 0.0, 1.0)


def test_greens_threads_identical(step5):
    args = (np.array([0.4, 0.9]), 0.6, np.array([0.0, 1.0]), 1.2)
    a = greens_kernel(step5, None, *args, m_max=6, threads=1)
    b = greens_kernel(step5, None, *args, m_max=6, threads=4)
    assert np.array_equal(a, b)


# ------------------------------------------------------------------ synthesis
def test_zero_source(step5):
    src = SourceSpec((0.0, 1.0), (-0.5, 0.5), func=lambda r, t, z: 0 * r)
    fg = solve_field(step5, None, src, ([0.5, 1.0], [0.0, 1.0], [0.0, 2.0]))
    assert np.all(fg.values == 0) and fg.values.shape == (2, 2, 2)


def test_rejects_axis_receivers(step5):
    with pytest.raises(ValueError):
        solve_field(step5, None, ring_source(0.5, 0, 0.05), ([0.0, 0.5], [0.0], [1.0]))


def test_ring_matches_greens(step5):
    rho0, w = 0.5, 0.01
    src = ring_source(rho0, 0.0, w)
    rr = np.array([0.3, 0.6, 0.9, 1.2, 1.6])
    zz = np.array([0.6, 1.0])
    fg = solve_field(step5, None, src, (rr, [0.0], zz))
    R, Z = np.meshgrid(rr, zz, indexing="ij")
    ref = 2 * math.pi * rho0 * greens_kernel(step5, None, R, rho0, 0.0, Z, m_max=0)
    assert np.max(np.abs(fg.values[:, 0, :] - ref) / np.abs(ref)) <= 2e-2
    assert fg.metadata["spec_digest"] == step5.digest
    assert fg.metadata["m_range"] == [0]


def _lp01_run(step5):
    md = find_guided_modes(step5, 0)[0]
    z_sup = 0.5

    def fm(r, z):
        W, *_ = regular_values(step5, 0, [md.lam], np.ravel(r), True)
        prof = (W[0] / np.sqrt(np.ravel(r))).reshape(np.shape(r))
        return prof * np.where(np.abs(z) < z_sup, np.cos(0.5 * math.pi * z / z_sup) ** 2, 0.0)

    src = SourceSpec((1e-6, 2.5), (-z_sup, z_sup), components={0: fm}, r_resolution=0.1,
                     z_resolution=0.05)
    z_far = z_sup + 20 / math.sqrt(step5.d2 - md.lam)
    r = np.linspace(0.05, 2.0, 40)
    fg = solve_field(step5, None, src, (r, [0.0], [z_far]))
    W, *_ = regular_values(step5, 0, [md.lam], r, True)
    return fg, W[0] / np.sqrt(r)


def test_lp01_filtering(step5):
    fg, ref = _lp01_run(step5)
    u = fg.values[:, 0, 0]
    corr = abs(np.vdot(ref, u)) / (np.linalg.norm(ref) * np.linalg.norm(u))
    assert corr > 0.999
    g, c = fg.guided[:, 0, 0], fg.radiation[:, 0, 0]
    assert np.linalg.norm(c) <= 1e-2 * np.linalg.norm(g)
    lams, amp = fg.modal[0]
    assert abs(amp[0, 0]) > 100 * abs(amp[1, 0])


def test_axis_behaviour_nonzero_m(step5):
    """sqrt(r) u_m vanishes like r^{m + 1/2} towards the axis."""
    src = SourceSpec((0.0, 1.0), (-0.3, 0.3),
                     func=lambda r, t, z: np.exp(-((r - 0.5) / 0.1) ** 2 - (z / 0.1) ** 2) * np.cos(t),
                     r_resolution=0.05, z_resolution=0.05)
    r = np.array([1e-3, 1e-2, 1e-1, 0.5])
    fg = solve_field(step5, None, src, (r, [0.0], [1.0]))
    v = np.abs(np.sqrt(r) * fg.components[1][:, 0])
    assert v[0] < 1e-3 * v[-1] and v[0] < v[1] < v[2]


def test_threads_identical(step5):
    src = ring_source(0.5, 0.0, 0.05)
    grid = ([0.4, 0.8], [0.0], [1.0])
    a = solve_field(step5, None, src, grid, threads=1)
    b = solve_field(step5, None, src, grid, threads=3)
    assert np.array_equal(a.values, b.values)


# ------------------------------------------------------------------ Helmholtz residual
def test_helmholtz_free_space_ring(free_space):
    src = ring_source(0.5, 0.0, 0.02)
    n = 64
    r = np.linspace(0.2, 1.7, n)
    z = np.linspace(0.62, 2.12, n)
    th = 2 * math.pi * np.arange(8) / 8
    fg = solve_field(free_space, None, src, (r, th, z))
    assert helmholtz_residual(free_space, fg, src, exclude=0.5) <= 2e-2


def test_helmholtz_step_away_from_source(step5):
    src = ring_source(0.5, 0.0, 0.02)
    r = np.linspace(0.2, 1.7, 61)
    z = np.linspace(0.5, 2.0, 61)
    th = 2 * math.pi * np.arange(8) / 8
    fg = solve_field(step5, None, src, (r, th, z))
    assert helmholtz_residual(step5, fg, src) <= 2e-2


def test_helmholtz_zero_field(step5):
    ax = np.linspace(0.5, 1.0, 6)
    th = 2 * math.pi * np.arange(6) / 6
    fg = FieldGrid(ax, th, ax, np.zeros((6, 6, 6), dtype=complex))
    assert helmholtz_residual(step5, fg) == 0.0


def test_helmholtz_validation(step5):
    ax = np.linspace(0.5, 1.0, 4)
    th = 2 * math.pi * np.arange(6) / 6
    with pytest.raises(ValueError):
        helmholtz_residual(step5, FieldGrid(ax, th, ax, np.zeros((4, 6, 4), dtype=complex)))
    bad = np.array([0.5, 0.6, 0.8, 0.9, 1.0, 1.1])
    with pytest.raises(ValueError):
        helmholtz_residual(step5, FieldGrid(bad, th, bad, np.zeros((6, 6, 6), dtype=complex)))


def test_helmholtz_detects_wrong_field(free_space):
    """A field that does not solve the equation must score far above the solver."""
    r = np.linspace(0.5, 1.5, 21)
    z = np.linspace(1.0, 2.0, 21)
    th = 2 * math.pi * np.arange(8) / 8
    R, T, Z = np.meshgrid(r, th, z, indexing="ij")
    fg = FieldGrid(r, th, z, np.exp(1j * 2.0 * Z) / R)
    assert helmholtz_residual(free_space, fg) > 0.1


# ------------------------------------------------------------------ serialization
def test_bin_round_trip(tmp_path, rng):
    r = np.linspace(0.1, 1, 3)
    th = np.array([0.0, 1.0])
    z = np.linspace(-1, 1, 4)
    vals = rng.normal(size=(3, 2, 4)) + 1j * rng.normal(size=(3, 2, 4))
    fg = FieldGrid(r, th, z, vals, {"spec_digest": "abc", "n": np.int64(3)})
    p = tmp_path / "u.bin"
    fg.write_bin(p)
    back = FieldGrid.read_bin(p)
    assert np.array_equal(back.values, vals) and np.array_equal(back.z, z)
    assert back.metadata == {"spec_digest": "abc", "n": 3}
    raw = p.read_bytes()
    assert raw[:8] == b"CYLWFLD1"
    off = 8 + 24 + 8 * (3 + 2 + 4)
    first = np.frombuffer(raw[off:off + 32], "<f8")
    # r varies fastest, re/im interleaved
    assert first.tolist() == [vals[0, 0, 0].real, vals[0, 0, 0].imag, vals[1, 0, 0].real, vals[1, 0, 0].imag]


def test_bin_rejects_foreign(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"NOTAFIELD" * 4)
    with pytest.raises(ValueError):
        FieldGrid.read_bin(p)


def test_slice_rows():
    r = np.array([0.5, 1.0])
    th = np.array([0.0, 1.0, 2.0])
    z = np.array([0.0, 1.0])
    vals = np.arange(12).reshape(2, 3, 2) * (1 + 1j)
    fg = FieldGrid(r, th, z, vals)
    rows = fg.slice_rows(z_index=1)
    assert len(rows) == 6 and rows[1] == (1.0, 0.0, 1.0, vals[1, 0, 1].real, vals[1, 0, 1].imag)
    assert len(fg.slice_rows(theta_index=2)) == 4
    with pytest.raises(ValueError):
        fg.slice_rows()


def test_fieldgrid_shape_check():
    with pytest.raises(ValueError):
        FieldGrid(np.ones(2), np.ones(3), np.ones(4), np.zeros((2, 3, 5)))
