#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three batched assembly primitives on synthetic data shaped like a
refined production mesh, plus a full assemble-and-solve of the reference
convergence case.  When run without arguments the script measures the
current backend and then re-runs itself in a subprocess with
``PDWG2D_DISABLE_NUMBA=1`` to collect the fallback numbers side by side.

    python3 benchmarks/bench_kernels.py [--elements N] [--repeats R]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def time_call(fn, repeats):
    fn()  # warm-up (also triggers jit compilation on the fast path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_timings(elements, repeats):
    from pdwg2d import _kernels

    rng = np.random.default_rng(0)
    nq, nd = 16, 12  # interior quadrature points and local multiplier dofs
    vals = rng.standard_normal((elements, nq, nd))
    other = rng.standard_normal((elements, nq, 3))
    wts = rng.uniform(0.1, 1.0, size=(elements, nq))
    m = rng.standard_normal((elements, 3, 3)) + 4.0 * np.eye(3)
    r = rng.standard_normal((elements, 3, 1))

    return {
        "backend": _kernels.backend(),
        "weighted_gram": time_call(lambda: _kernels.weighted_gram(vals, wts), repeats),
        "weighted_pair": time_call(
            lambda: _kernels.weighted_pair(other, vals, wts), repeats
        ),
        "batch_solve": time_call(lambda: _kernels.batch_solve(m, r), repeats),
        "end_to_end": time_call(run_reference_case, max(1, repeats // 2)),
    }


def run_reference_case():
    from pdwg2d.harness import RunConfig, run_convergence

    run_convergence(RunConfig(case_id="table1", s=1, levels=5))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--elements", type=int, default=8192)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument(
        "--json", action="store_true", help="print raw timings as JSON and exit"
    )
    args = parser.parse_args(argv)

    mine = kernel_timings(args.elements, args.repeats)
    if args.json:
        print(json.dumps(mine))
        return 0

    rows = [mine]
    if mine["backend"] == "numba":
        env = dict(os.environ)
        env["PDWG2D_DISABLE_NUMBA"] = "1"
        out = subprocess.run(
            [sys.executable, __file__, "--json", "--elements", str(args.elements),
             "--repeats", str(args.repeats)],
            capture_output=True, text=True, env=env, check=True,
        )
        rows.append(json.loads(out.stdout))
    else:
        print("note: numba unavailable or disabled; timing the fallback only\n")

    names = ["weighted_gram", "weighted_pair", "batch_solve", "end_to_end"]
    header = f"{'kernel':<16}" + "".join(f"{r['backend']:>12}" for r in rows)
    if len(rows) == 2:
        header += f"{'speedup':>10}"
    print(f"batched primitives on {args.elements} elements (best of {args.repeats}):\n")
    print(header)
    for name in names:
        line = f"{name:<16}" + "".join(f"{r[name] * 1e3:>10.2f}ms" for r in rows)
        if len(rows) == 2:
            line += f"{rows[1][name] / rows[0][name]:>9.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
