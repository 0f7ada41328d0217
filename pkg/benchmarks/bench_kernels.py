"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py            # per-kernel timings
    python benchmarks/bench_kernels.py --solve    # plus one full DIRK Brusselator run per backend

The full-run comparison starts a subprocess with ONESTEP_DISABLE_NUMBA=1 so the
whole library, not just the kernel module, runs on the fallback path.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from onestep import _kernels


def _cases(npts, seed=0):
    rng = np.random.default_rng(seed)
    n = 3 * npts
    y = 1.0 + 0.1 * rng.standard_normal(n)
    out = np.empty(n)
    w = 1.0 / (1e-4 * np.abs(y) + 1e-9)

    ml = mu = 4
    band = np.zeros((2 * ml + mu + 1, n))
    band[ml:] = rng.standard_normal((ml + mu + 1, n))
    band[ml + mu] += 10.0
    piv = np.zeros(n, dtype=np.int64)

    dn = 64
    dense = rng.standard_normal((dn, dn)) + dn * np.eye(dn)
    dpiv = np.zeros(dn, dtype=np.int64)

    cols = np.arange(0, n, ml + mu + 1, dtype=np.int64)
    df = rng.standard_normal(n)
    inc = np.full(n, 1e-8)
    jac = np.zeros((ml + mu + 1, n))

    def band_factor(impl):
        ab = band.copy()
        impl.band_lu_factor(ab, n, ml, mu, piv)
        return ab

    def band_solve(impl, ab=[None]):
        if ab[0] is None:
            ab[0] = band_factor(impl)
        b = y.copy()
        impl.band_lu_solve(ab[0], n, ml, mu, piv, b)

    def dense_factor(impl):
        a = dense.copy()
        impl.dense_lu_factor(a, dpiv)

    return {
        "wrms_norm": lambda impl: impl.wrms_norm(y, w),
        "adr_advection": lambda impl: impl.adr_advection(y, out, npts, 1e-3, 1.0 / (npts - 1)),
        "adr_diffusion": lambda impl: impl.adr_diffusion(y, out, npts, 1e-2, 1.0 / (npts - 1),
                                                         False),
        "adr_reaction": lambda impl: impl.adr_reaction(y, out, npts, 0.6, 2.0, 0.01),
        "band_scatter": lambda impl: impl.band_scatter(jac, df, inc, cols, n, ml, mu),
        "band_lu_factor": band_factor,
        "band_lu_solve": band_solve,
        "dense_lu_factor(64)": dense_factor,
    }


def _time(fn, repeat=5):
    fn()  # warm-up / compile
    number, _ = timeit.Timer(fn).autorange()
    best = min(timeit.Timer(fn).repeat(repeat=repeat, number=number))
    return best / number


def kernel_table(npts):
    impls = [("numpy", _kernels.numpy_impl)]
    if _kernels.numba_impl is not None:
        impls.append(("numba", _kernels.numba_impl))
    cases = _cases(npts)
    print(f"grid points: {npts} (state length {3 * npts})")
    header = f"{'kernel':<22}" + "".join(f"{name:>14}" for name, _ in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, make in cases.items():
        times = []
        for _, impl in impls:
            times.append(_time(lambda: make(impl)))
        row = f"{label:<22}" + "".join(f"{t * 1e6:>11.2f} us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


SOLVE = (
    "import time; from onestep.bench.harness import run_case; "
    "from onestep.bench.brusselator import Brusselator; from onestep import BACKEND; "
    "p = Brusselator(); run_case(Brusselator(npts=16, tf=0.1), 'dirk'); "
    "t = time.perf_counter(); r = run_case(p, 'dirk'); "
    "print(f'{BACKEND:>6}: {1000 * (time.perf_counter() - t):8.1f} ms, {r.steps} steps')"
)


def full_solves():
    print("\nfull DIRK run, 512 points, [0, 10]:", flush=True)
    for flag in ("0", "1"):
        env = dict(os.environ, ONESTEP_DISABLE_NUMBA=flag)
        subprocess.run([sys.executable, "-c", SOLVE], env=env, check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--npts", type=int, default=512)
    ap.add_argument("--solve", action="store_true", help="also time a complete integration")
    args = ap.parse_args()
    kernel_table(args.npts)
    if args.solve:
        full_solves()


if __name__ == "__main__":
    main()
