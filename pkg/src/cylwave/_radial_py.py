"""Pure-Python radial kernel (fallback for the compiled ``_radial_core``).

Integrates ``w'' = (q(r) - lam + (m^2 - 1/4)/r^2) w`` for the solution regular
at the origin, normalized by ``w ~ r^(m+1/2)``, together with ``I = int_0^r w^2``.

Layout of the computation:

1. ``[0, r_eps]``: truncated successive-approximation series for
   ``sigma = w / r^(m+1/2)``, evaluated as an exact polynomial.
2. ``[r_eps, r_sw]``: Dormand-Prince 5(4) on the ``sigma`` form
   ``sigma'' + (k/r) sigma' + (lam - q) sigma = 0`` with ``k = 2m + 1``, and the
   scaled integral ``I / r^(2m+2)``.  This avoids the power-law growth that makes
   relative error control of ``w`` expensive near the origin.
3. ``[r_sw, r_end]``: Dormand-Prince on ``(w, w', I)`` directly.

Every polynomial piece of ``q`` is integrated separately so the error estimator
never straddles a discontinuity.

The compiled module implements exactly the same algorithm; keep them in sync.
"""
import math

import numpy as np

# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# dense output
_D1, _D3, _D4 = -12715105075 / 11282082432, 87487479700 / 32700410799, -10690763975 / 1880347072
_D5, _D6, _D7 = 701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423

PICARD_TERMS = 3
SERIES_TOL = 1e-6
OVERFLOW = 1e100
MAX_STEPS = 2_000_000

OK, ERR_UNDERFLOW, ERR_OVERFLOW, ERR_MAXSTEPS = 0, 1, 2, 3


class KernelError(ArithmeticError):
    def __init__(self, code, m, lam, r):
        self.code, self.m, self.lam, self.r = code, m, lam, r
        what = {ERR_UNDERFLOW: "step size underflow", ERR_OVERFLOW: "solution overflow",
                ERR_MAXSTEPS: "step budget exhausted"}[code]
        super().__init__(f"radial integration failed ({what}) at m={m}, lam={lam!r}, r={r!r}")


def _picard_series(a, k):
    """Coefficients (ascending powers of r) of sum_{n<=N} T^n 1."""
    terms = [[1.0]]
    for _ in range(PICARD_TERMS):
        p = terms[-1]
        out = [0.0] * (len(p) + len(a) + 1)
        for i, ai in enumerate(a):
            if ai == 0.0:
                continue
            for j, pj in enumerate(p):
                if pj == 0.0:
                    continue
                n = i + j + 2
                out[n] += ai * pj / (n * (k + n - 1))
        terms.append(out)
    size = max(len(t) for t in terms)
    sig = [0.0] * size
    for t in terms:
        for j, v in enumerate(t):
            sig[j] += v
    while len(sig) > 1 and sig[-1] == 0.0:
        sig.pop()
    return sig


def _poly(c, x):
    v = 0.0
    for a in reversed(c):
        v = v * x + a
    return v


def _dpoly(c, x):
    v = 0.0
    for j in range(len(c) - 1, 0, -1):
        v = v * x + j * c[j]
    return v


def solve_many(breaks, coefs, qmax, m, lams, r_eval, r_end, rtol, atol):
    """Regular solution at every ``lam`` in ``lams``.

    Returns ``(W, DW, I, ends, nsteps)`` with ``W[i, j] = w(r_eval[j]; lams[i])``
    and ``ends[i] = (w, w', I)`` at ``r_end``.  ``r_eval`` must be increasing,
    positive and not beyond ``r_end``.
    """
    breaks = [float(b) for b in np.asarray(breaks, dtype=float)]
    coefs = [list(map(float, row)) for row in np.asarray(coefs, dtype=float)]
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    r_eval = np.asarray(r_eval, dtype=float)
    n_l, n_r = lams.size, r_eval.size
    W = np.empty((n_l, n_r))
    DW = np.empty((n_l, n_r))
    II = np.empty((n_l, n_r))
    ends = np.empty((n_l, 3))
    steps = np.empty(n_l, dtype=np.int64)
    rl = r_eval.tolist()
    for i in range(n_l):
        w_row, dw_row, i_row = [0.0] * n_r, [0.0] * n_r, [0.0] * n_r
        res = _solve_one(breaks, coefs, float(qmax), int(m), float(lams[i]), rl,
                         float(r_end), float(rtol), float(atol), w_row, dw_row, i_row)
        W[i], DW[i], II[i] = w_row, dw_row, i_row
        ends[i] = res[:3]
        steps[i] = res[3]
    return W, DW, II, ends, steps


def _solve_one(breaks, coefs, qmax, m, lam, r_eval, r_end, rtol, atol, ow, odw, oi):
    k = 2 * m + 1
    nu = m + 0.5
    mu = m * m - 0.25
    p2 = 2 * m + 2
    A = qmax + abs(lam)
    npieces = len(breaks)
    n_eval = len(r_eval)

    # ---- series region
    a = list(coefs[0])
    a[0] -= lam
    sig = _picard_series(a, k)
    sq = [0.0] * (2 * len(sig) - 1)
    for i, u in enumerate(sig):
        for j, v in enumerate(sig):
            sq[i + j] += u * v
    itil = [c / (j + p2) for j, c in enumerate(sq)]
    r_eps = math.sqrt(2.0 * (k + 1) * SERIES_TOL / A) if A > 0 else math.inf
    if npieces > 1:
        r_eps = min(r_eps, breaks[1])
    r_eps = min(r_eps, r_end)

    idx = 0
    while idx < n_eval and r_eval[idx] <= r_eps:
        r = r_eval[idx]
        s, sp, it = _poly(sig, r), _dpoly(sig, r), _poly(itil, r)
        rp = r**nu
        ow[idx] = rp * s
        odw[idx] = rp * (sp + nu * s / r)
        oi[idx] = r ** p2 * it
        idx += 1

    r = r_eps
    y0, y1, y2 = _poly(sig, r), _dpoly(sig, r), _poly(itil, r)
    sigma_form = True
    r_sw = max(r_eps, (m + 1.0) / math.sqrt(A)) if A > 0 else math.inf
    env0, env1, env2 = abs(y0), abs(y1), abs(y2)
    nsteps = 0
    h = 0.1 * r_eps

    # segment boundaries
    cuts = [b for b in breaks if r_eps < b < r_end]
    if r_eps < r_sw < r_end:
        cuts.append(r_sw)
    cuts.append(r_end)
    cuts = sorted(set(cuts))

    piece = 0
    for seg_end in cuts:
        if r >= r_end:
            break
        while piece + 1 < npieces and breaks[piece + 1] <= r:
            piece += 1
        c = coefs[piece]
        b0 = breaks[piece]
        use_sigma = seg_end <= r_sw
        if sigma_form and not use_sigma:
            rp = r**nu
            y0, y1, y2 = rp * y0, rp * (y1 + nu * y0 / r), r ** p2 * y2
            env0, env1, env2 = abs(y0), abs(y1), abs(y2)
            sigma_form = False
        h = min(h, seg_end - r)
        # one adaptive DP5 sweep over [r, seg_end]
        f0, f1, f2 = _rhs(sigma_form, c, b0, lam, k, mu, p2, r, y0, y1, y2)
        while r < seg_end:
            last = False
            if r + h >= seg_end * (1 - 1e-15):
                h = seg_end - r
                last = True
            # stages
            k1 = (f0, f1, f2)
            t = (y0 + h * _A21 * k1[0], y1 + h * _A21 * k1[1], y2 + h * _A21 * k1[2])
            k2 = _rhs(sigma_form, c, b0, lam, k, mu, p2, r + _C2 * h, *t)
            t = (y0 + h * (_A31 * k1[0] + _A32 * k2[0]),
                 y1 + h * (_A31 * k1[1] + _A32 * k2[1]),
                 y2 + h * (_A31 * k1[2] + _A32 * k2[2]))
            k3 = _rhs(sigma_form, c, b0, lam, k, mu, p2, r + _C3 * h, *t)
            t = tuple(yy + h * (_A41 * a1 + _A42 * a2 + _A43 * a3)
                      for yy, a1, a2, a3 in zip((y0, y1, y2), k1, k2, k3))
            k4 = _rhs(sigma_form, c, b0, lam, k, mu, p2, r + _C4 * h, *t)
            t = tuple(yy + h * (_A51 * a1 + _A52 * a2 + _A53 * a3 + _A54 * a4)
                      for yy, a1, a2, a3, a4 in zip((y0, y1, y2), k1, k2, k3, k4))
            k5 = _rhs(sigma_form, c, b0, lam, k, mu, p2, r + _C5 * h, *t)
            t = tuple(yy + h * (_A61 * a1 + _A62 * a2 + _A63 * a3 + _A64 * a4 + _A65 * a5)
                      for yy, a1, a2, a3, a4, a5 in zip((y0, y1, y2), k1, k2, k3, k4, k5))
            r_new = seg_end if last else r + h
            k6 = _rhs(sigma_form, c, b0, lam, k, mu, p2, r_new, *t)
            yn = tuple(yy + h * (_A71 * a1 + _A73 * a3 + _A74 * a4 + _A75 * a5 + _A76 * a6)
                       for yy, a1, a3, a4, a5, a6 in zip((y0, y1, y2), k1, k3, k4, k5, k6))
            k7 = _rhs(sigma_form, c, b0, lam, k, mu, p2, r_new, *yn)
            # error norm
            if sigma_form:
                dscale = env0 * (math.sqrt(A) + 1.0 / r)
            else:
                dscale = env0 * math.sqrt(A + (nu / r) ** 2)
            scales = (atol * env0, atol * max(env1, dscale), atol * env2)
            err = 0.0
            yold = (y0, y1, y2)
            for comp in range(3):
                e = h * (_E1 * k1[comp] + _E3 * k3[comp] + _E4 * k4[comp] + _E5 * k5[comp]
                         + _E6 * k6[comp] + _E7 * k7[comp])
                sc = scales[comp] + rtol * max(abs(yold[comp]), abs(yn[comp])) + 1e-300
                err = max(err, abs(e) / sc)
            nsteps += 1
            if nsteps > MAX_STEPS:
                raise KernelError(ERR_MAXSTEPS, m, lam, r)
            if err <= 1.0:
                # dense output for evaluation points in (r, r_new]
                while idx < n_eval and r_eval[idx] <= r_new:
                    th = (r_eval[idx] - r) / h
                    th1 = 1.0 - th
                    vals = []
                    for comp in range(3):
                        ydiff = yn[comp] - yold[comp]
                        bspl = h * k1[comp] - ydiff
                        r5 = h * (_D1 * k1[comp] + _D3 * k3[comp] + _D4 * k4[comp]
                                  + _D5 * k5[comp] + _D6 * k6[comp] + _D7 * k7[comp])
                        vals.append(yold[comp] + th * (ydiff + th1 * (bspl + th * (ydiff - h * k7[comp] - bspl + th1 * r5))))
                    re = r_eval[idx]
                    if sigma_form:
                        # derivative from the dense polynomial of sigma' is not needed:
                        # sigma' is itself a state component
                        rp = re**nu
                        ow[idx] = rp * vals[0]
                        odw[idx] = rp * (vals[1] + nu * vals[0] / re)
                        oi[idx] = re ** p2 * vals[2]
                    else:
                        ow[idx], odw[idx], oi[idx] = vals
                    idx += 1
                r = r_new
                y0, y1, y2 = yn
                f0, f1, f2 = k7
                env0 = max(env0, abs(y0))
                env1 = max(env1, abs(y1))
                env2 = max(env2, abs(y2))
                wmag = abs(y0) * r**nu if sigma_form else abs(y0)
                if not wmag < OVERFLOW:
                    raise KernelError(ERR_OVERFLOW, m, lam, r)
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                if last:
                    h = h * fac
                    break
            else:
                fac = max(0.2, 0.9 * err ** -0.2)
            h = h * fac
            if h < 1e-14 * max(r, 1e-300):
                raise KernelError(ERR_UNDERFLOW, m, lam, r)

    if sigma_form:
        rp = r**nu
        y0, y1, y2 = rp * y0, rp * (y1 + nu * y0 / r), r ** p2 * y2
    return y0, y1, y2, nsteps


def _rhs(sigma_form, c, b0, lam, k, mu, p2, r, y0, y1, y2):
    q = _poly(c, r - b0)
    if sigma_form:
        return y1, -(k / r) * y1 + (q - lam) * y0, (y0 * y0 - p2 * y2) / r
    return y1, (q - lam + mu / (r * r)) * y0, y0 * y0
