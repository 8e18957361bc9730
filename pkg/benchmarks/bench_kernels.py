"""Compare the numba and numpy kernel backends.

Each backend runs in its own interpreter (the backend is chosen at import
time from LATINTERP_BACKEND). Prints best-of-N timings per kernel, the
speedup, and the largest relative difference between the two backends'
outputs.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def _cases():
    from latinterp import _kernels as K
    from latinterp.interp import InterpCouple, SolverParams, interp_norm
    from latinterp.lattice import dual, lp
    from latinterp.spaces import InjectiveTensor, LatticeSpace, VectorValued

    rng = np.random.default_rng(0)
    spec = VectorValued(lp(8, 4 / 3), LatticeSpace(lp(4, 1.0))).mixed_spec
    V = rng.standard_normal((4096, 32)) + 1j * rng.standard_normal((4096, 32))
    l1, l2 = LatticeSpace(lp(4, 1.0)), LatticeSpace(lp(4, 2.5))
    Z = rng.standard_normal((48, 4, 4)) + 1j * rng.standard_normal((48, 4, 4))
    Y0 = rng.standard_normal((48, 3, 4)) + 0j  # 3 restarts per tensor, unit vectors of the dual
    Y0 /= dual(lp(4, 2.5))(Y0.reshape(-1, 4)).reshape(48, 3, 1)
    fam = rng.standard_normal((14, 8)) + 1j * rng.standard_normal((14, 8))
    rspec = LatticeSpace(lp(8, 1.0)).mixed_spec

    a, b = LatticeSpace(lp(2, 1.0)), LatticeSpace(lp(2, 2.0))
    couple = InterpCouple(InjectiveTensor(a, a), InjectiveTensor(b, b))
    params = SolverParams(degree=2, grid=24, restarts=1, temperatures=(1e-2, 1e-3), smoothing=(0, 0),
                          maxiter=30, eval_refine=4)
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)

    def interp():
        b = interp_norm(couple, x, 0.5, params, oracle=False)
        return np.array([b.lower, b.upper])

    return {
        "mixed_norm 4096x(l4/3^8(l1^4))": lambda: K.mixed_norm(V, spec),
        "mixed_norm_grad 4096 rows": lambda: K.mixed_norm_grad(V, spec)[1],
        "injective_altmax 48x(l1^4 x l2.5^4)": lambda: K.injective_altmax(Z, l1.mixed_spec, l2.mixed_spec, Y0, 30)[0],
        "rademacher_sums k=14 in l1^8": lambda: K.rademacher_sums(fam, rspec),
        "interp_norm l1^2 (x)eps l1^2 couple": interp,
    }, K.BACKEND


def worker(repeat: int) -> None:
    cases, backend = _cases()
    out = {"backend": backend, "cases": {}}
    for name, fn in cases.items():
        value = np.asarray(fn())  # warm-up, includes JIT compilation
        best = min(timeit.repeat(fn, number=1, repeat=repeat))
        out["cases"][name] = {"seconds": best, "value": value.ravel().tolist() if value.size < 64 else
                              [float(np.sum(np.abs(value)))]}
    print(json.dumps(out))


def run(backend: str, repeat: int) -> dict:
    env = dict(os.environ, LATINTERP_BACKEND=backend)
    res = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.repeat)
        return
    fast, slow = run("numba", args.repeat), run("numpy", args.repeat)
    print(f"{'kernel':40s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, a in fast["cases"].items():
        b = slow["cases"][name]
        va, vb = np.asarray(a["value"]), np.asarray(b["value"])
        diff = float(np.max(np.abs(va - vb) / np.maximum(np.abs(vb), 1e-300)))
        print(f"{name:40s} {1e3 * a['seconds']:11.3f} {1e3 * b['seconds']:11.3f} "
              f"{b['seconds'] / a['seconds']:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
