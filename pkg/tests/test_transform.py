import math

import numpy as np
import pytest

from cylwave.radial import regular_values
from cylwave.spectrum import assemble_measure, find_guided_modes
from cylwave.transform import (
    ModalCoefficients,
    forward,
    inverse,
    parseval_gap,
    radial_rule,
    tail_estimate,
)

# e^{-lam/2} spectral energy of the Gaussian below is ~2e-9 past this point
LAM_MAX = 40.0
SUPPORT = 6.0


def gauss(r):
    return np.sqrt(r) * np.exp(-r * r)


def l2_rel(a, b, r):
    return math.sqrt(np.trapezoid(np.abs(a - b) ** 2, r) / np.trapezoid(np.abs(b) ** 2, r))


@pytest.fixture(scope="module")
def fs_measure(free_space):
    return assemble_measure(free_space, 0, LAM_MAX)


@pytest.fixture(scope="module")
def fs_coeffs(free_space, fs_measure):
    return forward(fs_measure, free_space, 0, gauss, SUPPORT)


@pytest.fixture(scope="module")
def v5_m0(step5):
    return assemble_measure(step5, 0)


def guided_profile(spec, md):
    z = math.sqrt(spec.d2 - md.lam)
    r_max = spec.R + 45.0 / z  # (k(r)/k(R))^2 < 1e-16 past here

    def g(r):
        return regular_values(spec, md.m, [md.lam], np.atleast_1d(r), True)[0][0]

    return g, r_max


def test_hankel_pair(fs_measure, fs_coeffs):
    lam = fs_coeffs.nodes
    sel = (lam >= 0.1) & (lam <= 10)
    assert sel.sum() > 50
    assert np.max(np.abs(fs_coeffs.values[sel] - 0.5 * np.exp(-lam[sel] / 4))) <= 1e-4
    assert fs_coeffs.jump_values.size == 0


def test_round_trip(free_space, fs_measure, fs_coeffs):
    r = np.linspace(1e-4, SUPPORT, 6001)
    back = inverse(fs_measure, free_space, 0, fs_coeffs, r)
    assert l2_rel(back, gauss(r), r) <= 1e-3


def test_round_trip_converges(free_space):
    r = np.linspace(1e-4, SUPPORT, 3001)
    errs = []
    for n_u in (128, 256):
        meas = assemble_measure(free_space, 0, LAM_MAX, n_u)
        c = forward(meas, free_space, 0, gauss, SUPPORT)
        errs.append(l2_rel(inverse(meas, free_space, 0, c, r), gauss(r), r))
    assert errs[1] < 0.5 * errs[0]


def test_parseval_default_and_doubled(free_space, fs_measure, fs_coeffs):
    gap = parseval_gap(fs_measure, free_space, 0, gauss, SUPPORT, fs_coeffs)
    assert gap <= 1e-3
    fine = assemble_measure(free_space, 0, LAM_MAX, 1024)
    gap2 = parseval_gap(fine, free_space, 0, gauss, SUPPORT)
    assert gap2 <= 1e-4 and gap2 < gap


def test_parseval_lhs_closed_form(free_space, fs_measure, fs_coeffs):
    # int r e^{-2 r^2} dr = 1/4
    rhs = float(np.sum(fs_measure.support_weights * fs_coeffs.all_values**2)) / math.pi
    assert rhs == pytest.approx(0.25, rel=1e-3)


def test_parseval_scale_invariant(free_space, fs_measure, fs_coeffs):
    g3 = lambda r: 3 * gauss(r)  # noqa: E731
    c3 = ModalCoefficients(0, fs_coeffs.jump_lams, 3 * fs_coeffs.jump_values, fs_coeffs.nodes,
                           3 * fs_coeffs.values)
    a = parseval_gap(fs_measure, free_space, 0, gauss, SUPPORT, fs_coeffs)
    b = parseval_gap(fs_measure, free_space, 0, g3, SUPPORT, c3)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-15)


def test_zero_input(free_space, fs_measure):
    zero = lambda r: np.zeros_like(r)  # noqa: E731
    c = forward(fs_measure, free_space, 0, zero, SUPPORT)
    assert np.all(c.all_values == 0)
    assert parseval_gap(fs_measure, free_space, 0, zero, SUPPORT) == 0.0
    assert np.all(inverse(fs_measure, free_space, 0, c, [0.5, 1.0]) == 0)


def test_linearity(step5, v5_m0, rng):
    g1 = lambda r: np.sqrt(r) * np.exp(-((r - 0.7) ** 2) / 0.1)  # noqa: E731
    g2 = lambda r: r**1.5 * np.exp(-r)  # noqa: E731
    a, b = 1.7, -0.4
    c1 = forward(v5_m0, step5, 0, g1, 8.0)
    c2 = forward(v5_m0, step5, 0, g2, 8.0)
    cs = forward(v5_m0, step5, 0, lambda r: a * g1(r) + b * g2(r), 8.0)
    ref = a * c1.all_values + b * c2.all_values
    assert np.max(np.abs(cs.all_values - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_complex_input(step5, v5_m0):
    g = lambda r: np.sqrt(r) * np.exp(-r * r) * (1 + 2j)  # noqa: E731
    c = forward(v5_m0, step5, 0, g, SUPPORT)
    cr = forward(v5_m0, step5, 0, lambda r: np.sqrt(r) * np.exp(-r * r), SUPPORT)
    ref = (1 + 2j) * cr.all_values
    # both runs stop refining at rtol 1e-10 of their maximum
    assert np.max(np.abs(c.all_values - ref)) <= 1e-9 * np.max(np.abs(ref))


def test_guided_mode_orthogonality_and_jump(step5, v5_m0):
    modes = find_guided_modes(step5, 0)
    for k, md in enumerate(modes):
        g, r_max = guided_profile(step5, md)
        c = forward(v5_m0, step5, 0, g, r_max)
        norm = math.sqrt(md.l2_norm_sq)
        assert c.jump_values[k] == pytest.approx(md.l2_norm_sq, rel=1e-8)
        for j in range(len(modes)):
            if j != k:
                assert abs(c.jump_values[j]) <= 1e-6 * norm
        assert np.max(np.abs(c.values)) <= 1e-6 * norm


def test_guided_mode_parseval_and_reconstruction(step5, v5_m0):
    md = find_guided_modes(step5, 0)[0]
    g, r_max = guided_profile(step5, md)
    c = forward(v5_m0, step5, 0, g, r_max)
    assert parseval_gap(v5_m0, step5, 0, g, r_max, c) <= 1e-6
    r = np.linspace(1e-3, r_max, 2001)
    assert l2_rel(inverse(v5_m0, step5, 0, c, r), g(r), r) <= 1e-6


def test_sampled_input(free_space, fs_measure, fs_coeffs):
    rs = np.linspace(0, SUPPORT, 6001)
    c = forward(fs_measure, free_space, 0, (rs, gauss(rs)), SUPPORT, rtol=1e-7)
    # linear interpolation error is O(h^2) with h = 1e-3
    assert np.max(np.abs(c.values - fs_coeffs.values)) <= 1e-5


def test_sampled_input_validation(free_space, fs_measure):
    with pytest.raises(ValueError):
        forward(fs_measure, free_space, 0, (np.array([0.0, 2.0, 1.0]), np.zeros(3)), 2.0)
    with pytest.raises(ValueError):
        forward(fs_measure, free_space, 0, (np.linspace(0, 1, 4), np.zeros(5)), 1.0)


def test_bad_support(free_space, fs_measure):
    with pytest.raises(ValueError):
        forward(fs_measure, free_space, 0, gauss, (2.0, 1.0))


def test_wrong_measure(free_space, step5, fs_measure):
    with pytest.raises(ValueError):
        forward(fs_measure, step5, 0, gauss, SUPPORT)
    with pytest.raises(ValueError):
        forward(fs_measure, free_space, 1, gauss, SUPPORT)


def test_misaligned_coefficients(free_space, fs_coeffs):
    other = assemble_measure(free_space, 0, LAM_MAX, 256)
    with pytest.raises(ValueError):
        inverse(other, free_space, 0, fs_coeffs, [1.0])


def test_inverse_at_origin(free_space, fs_measure, fs_coeffs):
    assert inverse(fs_measure, free_space, 0, fs_coeffs, [0.0])[0] == 0.0


def test_coefficient_views(fs_coeffs):
    tab = fs_coeffs.on_continuum
    assert tab.shape == (fs_coeffs.nodes.size, 2)
    assert fs_coeffs.at_jumps == []
    assert np.all(np.isfinite(fs_coeffs.all_values))


def test_tail_estimate(free_space, fs_measure, fs_coeffs):
    short = assemble_measure(free_space, 0, 4.0)
    c = forward(short, free_space, 0, gauss, SUPPORT)
    # true missing fraction e^{-2}/4 vs e^{-20}/4: estimate must order them correctly
    assert tail_estimate(short, c) > 1e3 * tail_estimate(fs_measure, fs_coeffs)


def test_radial_rule_integrates_polynomials():
    x, w = radial_rule(0.0, 2.0, 0.3, breaks=(0.5, 1.7))
    assert np.sum(w) == pytest.approx(2.0, rel=1e-14)
    assert np.sum(w * x**7) == pytest.approx(2.0**8 / 8, rel=1e-13)
    # exact only if a panel edge sits on the kink at 0.5
    assert np.sum(w * np.abs(x - 0.5)) == pytest.approx(1.25, rel=1e-14)
