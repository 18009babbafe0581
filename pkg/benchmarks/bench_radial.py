"""Compare the compiled radial kernel with the pure-Python fallback.

    python benchmarks/bench_radial.py [--n-lam 64] [--repeat 3]

Both kernels integrate the same batch of regular solutions on a step-index
and a parabolic core; the script checks that they agree and reports the time
per solve and the speedup.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from cylwave import _radial_py
from cylwave.radial import ATOL, RTOL
from cylwave.waveguide import Parabolic, Step, make_spec

try:
    from cylwave import _radial_core
except ImportError:  # pragma: no cover
    _radial_core = None


def _run(kernel, spec, m, lams, r_eval, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernel.solve_many(spec.breaks, spec.coefs, spec.q_inf, m, lams, r_eval, spec.R, RTOL, ATOL)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n-lam", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _radial_core is None:
        print("compiled kernel not built; nothing to compare")
        return 1
    n0 = math.sqrt(26.0)
    cases = {
        "step V=5": make_spec(1.0, n0, 1.0, 1.0, Step(n0)),
        "parabolic V=5": make_spec(1.0, n0, 1.0, 1.0, Parabolic(n0)),
    }
    r_eval = np.linspace(0.05, 1.0, 50)
    print(f"{'case':<16s}{'m':>3s}{'python [ms/solve]':>20s}{'compiled [ms/solve]':>22s}{'speedup':>10s}{'max |diff|':>12s}")
    for name, spec in cases.items():
        lams = np.linspace(0.01, 4 * spec.k2n02, args.n_lam)
        for m in (0, 3):
            tp, op = _run(_radial_py, spec, m, lams, r_eval, args.repeat)
            tc, oc = _run(_radial_core, spec, m, lams, r_eval, args.repeat)
            diff = float(np.max(np.abs(op[0] - oc[0])))
            print(f"{name:<16s}{m:>3d}{1e3 * tp / lams.size:>20.3f}{1e3 * tc / lams.size:>22.4f}"
                  f"{tp / tc:>10.1f}{diff:>12.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
