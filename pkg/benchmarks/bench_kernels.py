"""Time the numba kernels against the numpy fallback.

Each backend runs in its own interpreter because the choice is made at import
time from ``CDCPATH_DISABLE_NUMBA``.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
import numpy as np
from cdcpath import _kernels
from cdcpath.cdc import is_pairwise_ib_representable, oracle_mismatches
from cdcpath.formulation import FootstepParams, footstep_model
from cdcpath.pipeline import prepare
from cdcpath.scenarios import gen_env
from cdcpath.solver import solve_milp

repeat = int(sys.argv[1])
k = _kernels.ACTIVE
out = {"backend": k.name}

def best(fn):
    fn()  # warm-up (includes JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)

rng = np.random.default_rng(0)
T0 = rng.normal(size=(400, 900))
def pivots():
    T = T0.copy()
    for i in range(50):
        k.pivot(T, i, 400 + i)
out["pivot x50 (400x900)"] = best(pivots)

d = rng.normal(size=5000)
status = rng.integers(0, 4, size=5000).astype(np.int64)
col, xb = rng.normal(size=2000), rng.random(2000)
lb, ub, basis = np.zeros(2000), np.ones(2000), np.arange(2000, dtype=np.int64)
def ratios():
    for _ in range(200):
        k.price(d, status, 1e-9, False)
        k.primal_ratio(col, xb, lb, ub, basis, 1.0, 1e-9)
        k.dual_ratio(d, np.abs(d), status, True, 1e-9)
out["price+ratio x200"] = best(ratios)

art = prepare(gen_env(3, 3))
small = prepare(gen_env(1, 1))
cdc = art.partition.cdc()
out["triplet scan"] = best(lambda: is_pairwise_ib_representable(cdc))
out["oracle scan |T|<=3"] = best(lambda: oracle_mismatches(cdc, art.cover_merged))

m = footstep_model(small.env, small.partition, FootstepParams(n_steps=6, method="bigm"))
out["milp bigm N=6, 1 obstacle"] = best(lambda: solve_milp(m))
print(json.dumps(out))
"""


def run(flag: str, repeat: int) -> dict:
    env = dict(os.environ, CDCPATH_DISABLE_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    numpy_times = run("1", args.repeat)
    numba_times = run("0", args.repeat)
    if numba_times.pop("backend") != "numba":
        print("numba is not importable; only the numpy timings are meaningful", file=sys.stderr)
    numpy_times.pop("backend")
    width = max(len(k) for k in numpy_times)
    print(f"{'kernel':<{width}}  {'numpy s':>10}  {'numba s':>10}  {'speedup':>8}")
    for key, t_np in numpy_times.items():
        t_nb = numba_times[key]
        print(f"{key:<{width}}  {t_np:>10.4f}  {t_nb:>10.4f}  {t_np / t_nb:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
