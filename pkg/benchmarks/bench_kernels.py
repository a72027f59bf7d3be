"""Compare the numba and pure-numpy kernels on the workloads inversion produces.

Usage: python3 benchmarks/bench_kernels.py [--n 3] [--batch 2048] [--repeat 5]
"""
import argparse
import time

import numpy as np

from pseudoexit import _kernels
from pseudoexit.core import ProcessParams, compute_roots
from pseudoexit.laplace_domain import transform_batch


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def talbot_nodes(count, t=0.05, M=32):
    th = np.linspace(np.pi / M, np.pi * (1 - 1 / M), count)
    r = 2 * M / 5
    return (r / t) * th * (1 / np.tan(th) + 1j)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3, help="order N")
    ap.add_argument("--batch", type=int, default=2048, help="matrices / lambdas per call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    dim = args.n + 1
    mats = rng.standard_normal((args.batch, dim, dim)) + 1j * rng.standard_normal((args.batch, dim, dim))
    powers = np.arange(args.n, 2 * args.n)[None, :] - np.arange(dim)[:, None]
    u = 3.0 * (rng.standard_normal((args.batch, dim)) + 1j * rng.standard_normal((args.batch, dim)))
    params = ProcessParams(args.n, 0.0, 1.0)
    roots = compute_roots(params)
    lams = talbot_nodes(args.batch)

    cases = {
        "lu_logdet": (lambda: _kernels.lu_logdet_numpy(mats),
                      lambda: _kernels.lu_logdet_numba(mats) if _kernels.HAS_NUMBA else None),
        "hyperbolic_basis": (lambda: _kernels.hyperbolic_basis_numpy(powers, u, args.n),
                             lambda: _kernels.hyperbolic_basis_numba(powers, u, args.n)
                             if _kernels.HAS_NUMBA else None),
    }
    print(f"backend available: {_kernels.backend()}  N={args.n}  batch={args.batch}")
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max diff':>12}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np, out_np = best_of(np_fn, args.repeat)
        if _kernels.HAS_NUMBA:
            nb_fn()  # compile outside the timing
            t_nb, out_nb = best_of(nb_fn, args.repeat)
            if isinstance(out_np, tuple):
                diff = np.max(np.abs(out_np[0] * np.exp(out_np[1] - out_nb[1]) - out_nb[0]))
            else:
                diff = np.max(np.abs(out_np - out_nb) / np.maximum(np.abs(out_np), 1e-300))
            print(f"{name:<20}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.1e}")
        else:
            print(f"{name:<20}{t_np * 1e3:>12.2f}{'-':>12}{'-':>10}{'-':>12}")

    # end to end: every transform evaluation of one Talbot time block
    saved = _kernels.HAS_NUMBA
    try:
        _kernels.HAS_NUMBA = False
        t_np, v_np = best_of(lambda: transform_batch(params, roots, lams, 0.3, "density"), args.repeat)
        line = f"{'transform_batch':<20}{t_np * 1e3:>12.2f}"
        if saved:
            _kernels.HAS_NUMBA = True
            transform_batch(params, roots, lams, 0.3, "density")
            t_nb, v_nb = best_of(lambda: transform_batch(params, roots, lams, 0.3, "density"), args.repeat)
            diff = np.max(np.abs(v_np - v_nb) / np.abs(v_nb))
            line += f"{t_nb * 1e3:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.1e}"
        print(line)
    finally:
        _kernels.HAS_NUMBA = saved


if __name__ == "__main__":
    main()
