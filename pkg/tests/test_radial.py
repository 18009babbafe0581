import math

import numpy as np
import pytest
from scipy.special import jv, kv

from cylwave import _radial_py
from cylwave._backend import BACKEND
from cylwave.radial import (
    RadialError,
    _kernel,
    boundary_values,
    cladding_ab,
    cladding_k,
    handoff_radius,
    lagrange_identity_check,
    match_cladding,
    regular_values,
    solve_regular,
)
from cylwave.spectrum import find_guided_modes
from cylwave.waveguide import Coaxial, make_spec

from conftest import step_v


def test_free_space_m0_is_bessel(free_space):
    r = np.linspace(0.1, 2.0, 60)
    sol = solve_regular(free_space, 0, 1.0, r)
    ref = np.sqrt(r) * jv(0, r)
    env = np.sqrt(r) * np.hypot(jv(0, r), jv(1, r))
    assert np.max(np.abs(sol.w - ref) / env) < 1e-8


def test_origin_normalization(step5):
    sol = solve_regular(step5, 3, 0.5, np.geomspace(1e-4, 1e-2, 20))
    ratio = sol.w / sol.grid**3.5
    assert abs(ratio[0] - 1) < 1e-8
    assert np.all(np.abs(ratio - 1) < 1e-4)


def test_negative_lambda_lower_bound(step5):
    sol = solve_regular(step5, 0, -2.0)
    assert np.all(sol.w >= np.sqrt(sol.grid) * (1 - 1e-12))


@pytest.mark.parametrize("m", [0, 1, 4])
@pytest.mark.parametrize("lam", [0.0, -0.5, -5.0])
def test_nonpositive_lambda_monotone(step5, parabolic5, m, lam):
    for spec in (step5, parabolic5):
        sol = solve_regular(spec, m, lam)
        # equality holds when q = lam = 0, so allow integrator-level slack
        assert np.all(sol.w >= sol.grid ** (m + 0.5) * (1 - 1e-9))
        assert np.all(sol.w_prime > 0)


def test_handoff_normalization(rng, step5, parabolic5):
    for _ in range(10):
        spec = step5 if rng.random() < 0.5 else parabolic5
        m = int(rng.integers(0, 6))
        lam = float(rng.uniform(-1.0, spec.d2 + 5.0))
        r_eps = handoff_radius(spec, m, lam)
        sol = solve_regular(spec, m, lam, [r_eps])
        assert abs(sol.w[0] / r_eps ** (m + 0.5) - 1) <= 1e-6


def test_large_m_positivity():
    """Past some order the boundary data is positive across [0, d2]."""
    for V in (2.0, 5.0, 8.0):
        spec = step_v(V)
        lams = np.linspace(0, spec.d2, 200)
        m_star = None
        for m in range(0, 40):
            jR, djR, _ = boundary_values(spec, m, lams)
            if np.all(jR > 0) and np.all(djR > 0):
                m_star = m
                break
        assert m_star is not None and m_star <= 25
        for m in range(m_star, m_star + 5):
            jR, djR, _ = boundary_values(spec, m, lams)
            assert np.all(jR > 0) and np.all(djR > 0)


def test_ode_residual(parabolic5):
    spec = parabolic5
    m, lam = 2, 7.5
    h = 1e-3
    r0 = np.linspace(0.1, 0.9, 17)
    pts = np.sort(np.concatenate([r0 - h, r0, r0 + h]))
    sol = solve_regular(spec, m, lam, pts)
    w = sol.w.reshape(-1, 3)
    d2w = (w[:, 0] - 2 * w[:, 1] + w[:, 2]) / h**2
    from cylwave.waveguide import eval_q

    rhs = (eval_q(spec, r0) - lam + (m * m - 0.25) / r0**2) * w[:, 1]
    assert np.max(np.abs(d2w - rhs) / (np.abs(d2w) + np.abs(rhs))) < 1e-5


def test_deterministic(step5):
    a = solve_regular(step5, 1, 12.3)
    b = solve_regular(step5, 1, 12.3)
    assert np.array_equal(a.w, b.w) and np.array_equal(a.w_prime, b.w_prime)


def test_overflow_is_reported(step5):
    with pytest.raises(RadialError) as err:
        solve_regular(step5, 0, -1e6)
    assert err.value.m == 0 and err.value.lam == -1e6 and 0 < err.value.r_fail <= step5.R


def test_bad_grid(step5):
    with pytest.raises(ValueError):
        solve_regular(step5, 0, 1.0, [0.0, 0.5])
    with pytest.raises(ValueError):
        solve_regular(step5, 0, 1.0, [0.5, 0.4])


def test_negative_m_uses_abs(step5):
    assert np.array_equal(solve_regular(step5, -2, 3.0).w, solve_regular(step5, 2, 3.0).w)


def test_core_l2_matches_quadrature(step5):
    sol = solve_regular(step5, 1, 9.0, np.linspace(1e-3, 1.0, 4001))
    trap = np.trapezoid(sol.w**2, sol.grid)
    assert sol.core_l2 == pytest.approx(trap, rel=1e-5)
    assert sol.cum_l2[-1] == pytest.approx(sol.core_l2, rel=1e-12)


# ------------------------------------------------------------------ cladding forms
def test_cladding_k_examples(step5):
    lam = step5.d2 - 1
    k, dk = cladding_k(step5, 0, lam, step5.R)
    assert k == pytest.approx(kv(0, 1.0), rel=1e-13)
    r = 20 / math.sqrt(step5.d2 - lam)
    assert cladding_k(step5, 0, lam, r)[1] < 0
    s = 40.0  # z = 1, so k_0(s) = sqrt(s) K_0(s); next asymptotic term is 1/(8s)
    ks, _ = cladding_k(step5, 0, lam, s)
    assert ks * math.exp(s) == pytest.approx(math.sqrt(math.pi / 2), rel=5e-3)


def test_cladding_k_domain(step5):
    with pytest.raises(ValueError):
        cladding_k(step5, 0, step5.d2, 1.0)


def test_cladding_ab_wronskian(step5, rng):
    a, da, b, db = cladding_ab(step5, 0, step5.d2 + 1, step5.R)
    assert db * a - da * b == pytest.approx(2 / math.pi, rel=1e-12)
    for _ in range(20):
        m = int(rng.integers(0, 11))
        lam = step5.d2 + rng.uniform(1e-3, 80)
        r = rng.uniform(1, 10)
        a, da, b, db = cladding_ab(step5, m, lam, r)
        assert abs(db * a - da * b - 2 / math.pi) < 1e-10


def test_cladding_ab_bound_and_continuity(step5):
    lam = step5.d2 + 4
    r = np.linspace(5, 50, 200)  # sqrt(lam - d2) r >= 10
    a = cladding_ab(step5, 0, lam, r)[0]
    assert np.all(np.abs(a) * math.sqrt(math.sqrt(lam - step5.d2)) <= 1.3)
    lams = step5.d2 + np.linspace(1e-6, 30, 400)
    vals = np.array([cladding_ab(step5, 2, L, step5.R) for L in lams])
    assert np.all(np.isfinite(vals))


def test_cladding_ab_domain(step5):
    with pytest.raises(ValueError):
        cladding_ab(step5, 0, step5.d2, 1.0)


def test_free_space_match(free_space):
    for lam in (0.3, 1.0, 7.0):
        mt = match_cladding(free_space, 0, lam)
        assert mt.kind == "continuum"
        assert mt.c == pytest.approx(1.0, abs=1e-9) and abs(mt.d) < 1e-9
    mt = match_cladding(free_space, 2, 1.0)
    assert mt.c == pytest.approx(8.0, rel=1e-9)


def test_continuum_match_reproduces_extension(step5):
    lam = step5.d2 * (1 + 1e-3)
    mt = match_cladding(step5, 0, lam)
    for r in (2.0, 5.0):
        W, *_ = _kernel(step5, 0, [lam], [r], r)
        a, _, b, _ = cladding_ab(step5, 0, lam, r)
        assert abs(mt.c * a + mt.d * b - W[0, 0]) <= 1e-8 * max(abs(W[0, 0]), abs(mt.c * a), 1.0)


def test_guided_match_decays(step5):
    mode = find_guided_modes(step5, 0)[0]
    mt = match_cladding(step5, 0, mode.lam)
    assert mt.kind == "evanescent"
    W, *_ = _kernel(step5, 0, [mode.lam], [2.0], 2.0)
    k2, _ = cladding_k(step5, 0, mode.lam, 2.0)
    assert abs(W[0, 0] - mt.kappa * k2) / abs(W[0, 0]) <= 1e-6


def test_threshold_match(step5):
    mt = match_cladding(step5, 3, step5.d2)
    assert mt.kind == "threshold" and math.isfinite(mt.power_coeff)


def test_regular_values_continuation(step5):
    lam = step5.d2 + 3.0
    r = np.array([0.4, 1.5, 3.0])
    W, DW, *_ = regular_values(step5, 1, [lam], r)
    Wk, DWk, *_ = _kernel(step5, 1, [lam], r, 3.0)
    assert np.allclose(W, Wk, rtol=1e-8, atol=1e-10)
    assert np.allclose(DW, DWk, rtol=1e-8, atol=1e-10)


# ------------------------------------------------------------------ Lagrange identity
def test_lagrange_step(step5):
    s1 = solve_regular(step5, 0, 0.3)
    s2 = solve_regular(step5, 0, 0.7)
    assert lagrange_identity_check(s1, s2, 0.1, step5.R) <= 1e-6


def test_lagrange_free_space(free_space):
    s1 = solve_regular(free_space, 1, 1.0)
    s2 = solve_regular(free_space, 1, 4.0)
    assert lagrange_identity_check(s1, s2, 0.1, 1.0) <= 1e-6


def test_lagrange_coaxial():
    spec = make_spec(1, 3.0, 1.0, 1.0, Coaxial(3.0, 0.3, 0.7))
    s1 = solve_regular(spec, 2, 2.0)
    s2 = solve_regular(spec, 2, 11.0)
    assert lagrange_identity_check(s1, s2, 0.05, 1.0) <= 1e-6


def test_lagrange_equal_lambda_rejected(step5):
    s = solve_regular(step5, 0, 0.3)
    with pytest.raises(ValueError):
        lagrange_identity_check(s, s, 0.1, 1.0)


# ------------------------------------------------------------------ backends
def test_backends_agree(parabolic5):
    spec = parabolic5
    lams = np.array([-3.0, 0.5, 10.0, 40.0, 150.0])
    r = np.linspace(0.05, 1.0, 30)
    args = (spec.breaks, spec.coefs, spec.q_inf, 2, lams, r, spec.R, 1e-10, 1e-13)
    ref = _radial_py.solve_many(*args)
    got = _kernel(spec, 2, lams, r, spec.R)
    for a, b in zip(ref[:4], got[:4]):
        assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_compiled_backend_selected():
    assert BACKEND in ("compiled", "python")
