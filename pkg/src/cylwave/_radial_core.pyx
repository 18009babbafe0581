# cython: language_level=3
"""Compiled radial kernel.  Same algorithm and interface as ``_radial_py``;
the integration loop runs without the GIL so callers may thread over batches."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow, INFINITY

from cylwave._radial_py import KernelError

cnp.import_array()

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double D1 = -12715105075.0 / 11282082432, D3 = 87487479700.0 / 32700410799, D4 = -10690763975.0 / 1880347072
cdef double D5 = 701980252875.0 / 199316789632, D6 = -1453857185.0 / 822651844, D7 = 69997945.0 / 29380423

cdef enum:
    MAXC = 16       # max coefficients per piece of q
    MAXS = 128      # max series coefficients
    PICARD_TERMS = 3
cdef double SERIES_TOL = 1e-6
cdef double OVERFLOW = 1e100
cdef long MAX_STEPS = 2000000


cdef struct Ctx:
    int sigma
    int k
    double lam
    double mu
    double p2
    double b0
    int nc
    double c[MAXC]


cdef inline double poly(const double* c, int n, double x) noexcept nogil:
    cdef double v = 0.0
    cdef int j
    for j in range(n - 1, -1, -1):
        v = v * x + c[j]
    return v


cdef inline double dpoly(const double* c, int n, double x) noexcept nogil:
    cdef double v = 0.0
    cdef int j
    for j in range(n - 1, 0, -1):
        v = v * x + j * c[j]
    return v


cdef inline void rhs(Ctx* cx, double r, double* y, double* f) noexcept nogil:
    cdef double q = poly(cx.c, cx.nc, r - cx.b0)
    f[0] = y[1]
    if cx.sigma:
        f[1] = -(cx.k / r) * y[1] + (q - cx.lam) * y[0]
        f[2] = (y[0] * y[0] - cx.p2 * y[2]) / r
    else:
        f[1] = (q - cx.lam + cx.mu / (r * r)) * y[0]
        f[2] = y[0] * y[0]


cdef int picard_series(const double* a, int na, int k, double* sig) noexcept nogil:
    """Fill ``sig`` with sum_{n<=N} T^n 1; return its length (or -1 if too long)."""
    cdef double cur[MAXS]
    cdef double nxt[MAXS]
    cdef int ncur = 1, nnext, i, j, n, it
    for j in range(MAXS):
        sig[j] = 0.0
        cur[j] = 0.0
    cur[0] = 1.0
    sig[0] = 1.0
    cdef int nsig = 1
    for it in range(PICARD_TERMS):
        nnext = ncur + na + 1
        if nnext > MAXS:
            return -1
        for j in range(nnext):
            nxt[j] = 0.0
        for i in range(na):
            if a[i] == 0.0:
                continue
            for j in range(ncur):
                if cur[j] == 0.0:
                    continue
                n = i + j + 2
                nxt[n] += a[i] * cur[j] / (n * (k + n - 1.0))
        for j in range(nnext):
            cur[j] = nxt[j]
            sig[j] += nxt[j]
        ncur = nnext
        if nnext > nsig:
            nsig = nnext
    while nsig > 1 and sig[nsig - 1] == 0.0:
        nsig -= 1
    return nsig


cdef int solve_one(const double* breaks, int npieces, const double* coefs, int ncoef,
                   double qmax, int m, double lam, const double* r_eval, int n_eval,
                   double r_end, double rtol, double atol,
                   double* ow, double* odw, double* oi, double* yend,
                   long* nsteps_out, double* r_fail) noexcept nogil:
    cdef int k = 2 * m + 1
    cdef double nu = m + 0.5
    cdef double mu = m * m - 0.25
    cdef double p2 = 2 * m + 2
    cdef double A = qmax + fabs(lam)
    cdef double a[MAXC]
    cdef double sig[MAXS]
    cdef double sq[2 * MAXS]
    cdef double itil[2 * MAXS]
    cdef int i, j, nsig, nsq, idx, comp, piece, nc
    cdef double r, rp, s, sp, r_eps, r_sw, h, seg_end, r_new, th, th1, err, e, sc, fac
    cdef double dscale, ydiff, bspl, r5, re, wmag
    cdef double y[3]
    cdef double yn[3]
    cdef double yt[3]
    cdef double vals[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double k5[3]
    cdef double k6[3]
    cdef double k7[3]
    cdef double env[3]
    cdef double scales[3]
    cdef double cuts[256]
    cdef int ncuts, ci, last
    cdef long nsteps = 0
    cdef Ctx cx

    nc = ncoef if ncoef < MAXC else MAXC
    for j in range(nc):
        a[j] = coefs[j]
    a[0] -= lam
    nsig = picard_series(a, nc, k, sig)
    if nsig < 0:
        r_fail[0] = 0.0
        return 4
    nsq = 2 * nsig - 1
    for j in range(nsq):
        sq[j] = 0.0
    for i in range(nsig):
        for j in range(nsig):
            sq[i + j] += sig[i] * sig[j]
    for j in range(nsq):
        itil[j] = sq[j] / (j + p2)

    if A > 0:
        r_eps = sqrt(2.0 * (k + 1) * SERIES_TOL / A)
    else:
        r_eps = INFINITY
    if npieces > 1 and breaks[1] < r_eps:
        r_eps = breaks[1]
    if r_end < r_eps:
        r_eps = r_end

    idx = 0
    while idx < n_eval and r_eval[idx] <= r_eps:
        r = r_eval[idx]
        s = poly(sig, nsig, r)
        sp = dpoly(sig, nsig, r)
        rp = pow(r, nu)
        ow[idx] = rp * s
        odw[idx] = rp * (sp + nu * s / r)
        oi[idx] = pow(r, p2) * poly(itil, nsq, r)
        idx += 1

    r = r_eps
    y[0] = poly(sig, nsig, r)
    y[1] = dpoly(sig, nsig, r)
    y[2] = poly(itil, nsq, r)
    cx.sigma = 1
    cx.k = k
    cx.lam = lam
    cx.mu = mu
    cx.p2 = p2
    if A > 0:
        r_sw = (m + 1.0) / sqrt(A)
        if r_sw < r_eps:
            r_sw = r_eps
    else:
        r_sw = INFINITY
    for comp in range(3):
        env[comp] = fabs(y[comp])
    h = 0.1 * r_eps

    # segment boundaries: interior breaks, the form switch, and r_end; sorted, unique
    ncuts = 0
    for i in range(npieces):
        if breaks[i] > r_eps and breaks[i] < r_end and ncuts < 250:
            cuts[ncuts] = breaks[i]
            ncuts += 1
    if r_sw > r_eps and r_sw < r_end:
        cuts[ncuts] = r_sw
        ncuts += 1
    cuts[ncuts] = r_end
    ncuts += 1
    for i in range(1, ncuts):
        j = i
        while j > 0 and cuts[j - 1] > cuts[j]:
            cuts[j - 1], cuts[j] = cuts[j], cuts[j - 1]
            j -= 1

    piece = 0
    for ci in range(ncuts):
        seg_end = cuts[ci]
        if r >= r_end:
            break
        if seg_end <= r:
            continue
        while piece + 1 < npieces and breaks[piece + 1] <= r:
            piece += 1
        cx.b0 = breaks[piece]
        cx.nc = nc
        for j in range(nc):
            cx.c[j] = coefs[piece * ncoef + j]
        if cx.sigma and not (seg_end <= r_sw):
            rp = pow(r, nu)
            y[1] = rp * (y[1] + nu * y[0] / r)
            y[0] = rp * y[0]
            y[2] = pow(r, p2) * y[2]
            for comp in range(3):
                env[comp] = fabs(y[comp])
            cx.sigma = 0
        if seg_end - r < h:
            h = seg_end - r
        rhs(&cx, r, y, k1)
        while r < seg_end:
            last = 0
            if r + h >= seg_end * (1 - 1e-15):
                h = seg_end - r
                last = 1
            for comp in range(3):
                yt[comp] = y[comp] + h * A21 * k1[comp]
            rhs(&cx, r + C2 * h, yt, k2)
            for comp in range(3):
                yt[comp] = y[comp] + h * (A31 * k1[comp] + A32 * k2[comp])
            rhs(&cx, r + C3 * h, yt, k3)
            for comp in range(3):
                yt[comp] = y[comp] + h * (A41 * k1[comp] + A42 * k2[comp] + A43 * k3[comp])
            rhs(&cx, r + C4 * h, yt, k4)
            for comp in range(3):
                yt[comp] = y[comp] + h * (A51 * k1[comp] + A52 * k2[comp] + A53 * k3[comp] + A54 * k4[comp])
            rhs(&cx, r + C5 * h, yt, k5)
            for comp in range(3):
                yt[comp] = y[comp] + h * (A61 * k1[comp] + A62 * k2[comp] + A63 * k3[comp]
                                          + A64 * k4[comp] + A65 * k5[comp])
            if last:
                r_new = seg_end
            else:
                r_new = r + h
            rhs(&cx, r_new, yt, k6)
            for comp in range(3):
                yn[comp] = y[comp] + h * (A71 * k1[comp] + A73 * k3[comp] + A74 * k4[comp]
                                          + A75 * k5[comp] + A76 * k6[comp])
            rhs(&cx, r_new, yn, k7)
            if cx.sigma:
                dscale = env[0] * (sqrt(A) + 1.0 / r)
            else:
                dscale = env[0] * sqrt(A + (nu / r) * (nu / r))
            scales[0] = atol * env[0]
            scales[1] = atol * (env[1] if env[1] > dscale else dscale)
            scales[2] = atol * env[2]
            err = 0.0
            for comp in range(3):
                e = h * (E1 * k1[comp] + E3 * k3[comp] + E4 * k4[comp] + E5 * k5[comp]
                         + E6 * k6[comp] + E7 * k7[comp])
                sc = fabs(y[comp])
                if fabs(yn[comp]) > sc:
                    sc = fabs(yn[comp])
                sc = scales[comp] + rtol * sc + 1e-300
                if fabs(e) / sc > err:
                    err = fabs(e) / sc
            nsteps += 1
            if nsteps > MAX_STEPS:
                r_fail[0] = r
                nsteps_out[0] = nsteps
                return 3
            if err <= 1.0:
                while idx < n_eval and r_eval[idx] <= r_new:
                    th = (r_eval[idx] - r) / h
                    th1 = 1.0 - th
                    for comp in range(3):
                        ydiff = yn[comp] - y[comp]
                        bspl = h * k1[comp] - ydiff
                        r5 = h * (D1 * k1[comp] + D3 * k3[comp] + D4 * k4[comp]
                                  + D5 * k5[comp] + D6 * k6[comp] + D7 * k7[comp])
                        vals[comp] = y[comp] + th * (ydiff + th1 * (bspl + th * (ydiff - h * k7[comp] - bspl + th1 * r5)))
                    re = r_eval[idx]
                    if cx.sigma:
                        rp = pow(re, nu)
                        ow[idx] = rp * vals[0]
                        odw[idx] = rp * (vals[1] + nu * vals[0] / re)
                        oi[idx] = pow(re, p2) * vals[2]
                    else:
                        ow[idx] = vals[0]
                        odw[idx] = vals[1]
                        oi[idx] = vals[2]
                    idx += 1
                r = r_new
                for comp in range(3):
                    y[comp] = yn[comp]
                    k1[comp] = k7[comp]
                    if fabs(y[comp]) > env[comp]:
                        env[comp] = fabs(y[comp])
                if cx.sigma:
                    wmag = fabs(y[0]) * pow(r, nu)
                else:
                    wmag = fabs(y[0])
                if not (wmag < OVERFLOW):
                    r_fail[0] = r
                    nsteps_out[0] = nsteps
                    return 2
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * pow(err, -0.2)
                    if fac > 5.0:
                        fac = 5.0
                    if fac < 0.2:
                        fac = 0.2
                if last:
                    h = h * fac
                    break
            else:
                fac = 0.9 * pow(err, -0.2)
                if fac < 0.2:
                    fac = 0.2
            h = h * fac
            if h < 1e-14 * r:
                r_fail[0] = r
                nsteps_out[0] = nsteps
                return 1

    if cx.sigma:
        rp = pow(r, nu)
        y[1] = rp * (y[1] + nu * y[0] / r)
        y[0] = rp * y[0]
        y[2] = pow(r, p2) * y[2]
    for comp in range(3):
        yend[comp] = y[comp]
    nsteps_out[0] = nsteps
    return 0


def solve_many(breaks, coefs, double qmax, int m, lams, r_eval, double r_end,
               double rtol, double atol):
    """See ``_radial_py.solve_many``."""
    cdef double[::1] b = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef double[::1] lv = np.ascontiguousarray(np.atleast_1d(lams), dtype=np.float64)
    cdef double[::1] re = np.ascontiguousarray(r_eval, dtype=np.float64)
    cdef Py_ssize_t n_l = lv.shape[0], n_r = re.shape[0]
    W_a = np.empty((n_l, n_r))
    DW_a = np.empty((n_l, n_r))
    I_a = np.empty((n_l, n_r))
    ends_a = np.empty((n_l, 3))
    steps_a = np.empty(n_l, dtype=np.int64)
    cdef double[:, ::1] W = W_a
    cdef double[:, ::1] DW = DW_a
    cdef double[:, ::1] II = I_a
    cdef double[:, ::1] ends = ends_a
    cdef long[::1] steps = steps_a
    cdef int npieces = b.shape[0], ncoef = c.shape[1]
    if ncoef > MAXC:
        raise ValueError(f"q pieces with more than {MAXC} coefficients are not supported")
    if npieces > 250:
        raise ValueError("too many profile pieces for the compiled kernel")
    cdef Py_ssize_t i
    cdef int status = 0
    cdef double r_fail = 0.0
    cdef long ns = 0
    cdef double* rptr = &re[0] if n_r > 0 else NULL
    with nogil:
        for i in range(n_l):
            status = solve_one(&b[0], npieces, &c[0, 0], ncoef, qmax, m, lv[i],
                               rptr, <int>n_r, r_end, rtol, atol,
                               &W[i, 0] if n_r > 0 else NULL,
                               &DW[i, 0] if n_r > 0 else NULL,
                               &II[i, 0] if n_r > 0 else NULL,
                               &ends[i, 0], &ns, &r_fail)
            steps[i] = ns
            if status != 0:
                break
    if status == 4:
        raise ValueError("series workspace exceeded: profile polynomial degree too high")
    if status != 0:
        raise KernelError(status, m, float(lv[i]), r_fail)
    return W_a, DW_a, I_a, ends_a, steps_a
