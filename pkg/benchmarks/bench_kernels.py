"""Time the fused sphere kernel: compiled extension vs numpy fallback vs generic steppers.

    python3 benchmarks/bench_kernels.py --n 100 --iters 5000 --repeat 3
"""

import argparse
import math
import time

import numpy as np

from projvi import _kernels_py, kernels
from projvi import integrators as it
from projvi import manifold as mf
from projvi import problems as pr
from projvi.integrators import BregmanParams, Method, StopCriteria

CODES = {
    Method.EL_I: kernels.EL_I,
    Method.EL_II: kernels.EL_II,
    Method.HTVI_ADAPTIVE: kernels.HTVI,
    Method.RGD: kernels.RGD,
}


def raw_run(impl, method, A, x0, params, iters):
    k0 = 1 if method.is_el else 0
    t0 = params.q_frak_0 if method.is_htvi else 0.0
    return impl.sphere_rayleigh_run(
        A, x0, np.zeros_like(x0), CODES[method], k0, t0, params.p, params.p_ring, params.C,
        params.zeta, params.lam, params.h, params.c_max, False, True, iters, iters, math.nan,
        math.nan, math.nan,
    )


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[20, 100, 400])
    ap.add_argument("--iters", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    compiled = None
    if kernels.compiled_available():
        from projvi import _kernels as compiled

    print(f"selected backend: {kernels.BACKEND}; {args.iters} iterations, best of {args.repeat}")
    print(f"{'method':<14} {'n':>5} {'compiled':>10} {'fallback':>10} {'generic':>10} {'fb/comp':>8} {'gen/comp':>9}")
    for n in args.n:
        A = np.ascontiguousarray(pr.gen_symmetric(n, pr.log_spectrum(n), seed=0))
        P = pr.Rayleigh(A)
        M = mf.Sphere(n)
        x0 = mf.random_point(M, 1)
        for method in CODES:
            params = BregmanParams(p=4.0, p_ring=2.0 if method is Method.HTVI_ADAPTIVE else None, h=0.01)
            x = np.ascontiguousarray(x0[:, 0])
            t_fb = best_of(lambda: raw_run(_kernels_py, method, A, x, params, args.iters), args.repeat)
            t_gen = best_of(lambda: it.run(method, P, M, params, x0, StopCriteria(args.iters),
                                           record_every=args.iters, backend="generic"), args.repeat)
            if compiled is not None:
                t_c = best_of(lambda: raw_run(compiled, method, A, x, params, args.iters), args.repeat)
                ratios = f"{t_fb / t_c:8.1f}x {t_gen / t_c:8.1f}x"
                tc = f"{t_c:10.4f}"
            else:
                ratios, tc = f"{'-':>8} {'-':>9}", f"{'n/a':>10}"
            print(f"{method.value:<14} {n:>5} {tc} {t_fb:10.4f} {t_gen:10.4f} {ratios}")


if __name__ == "__main__":
    main()
