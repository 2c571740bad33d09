"""Gram-matrix timings with and without numba.

    python benchmarks/bench_gram.py [--sizes 250 500 1000] [--repeat 5]

Each backend runs in its own interpreter because the switch is read at import.
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, timeit
import numpy as np
from idkit import KernelSpec, gram_matrix
from idkit._accel import backend
sizes, repeat = json.loads(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
out = {"backend": backend(), "times": {}}
for fam in ("gaussian", "laplacian"):
    spec = KernelSpec(fam, sigma=1.0)
    for n in sizes:
        X = rng.standard_normal((n, 3))
        gram_matrix(spec, X)  # compile / warm up
        best = min(timeit.repeat(lambda: gram_matrix(spec, X), number=1, repeat=repeat))
        out["times"][f"{fam}/{n}"] = best
print(json.dumps(out))
"""


def run(disable, sizes, repeat):
    env = dict(os.environ, IDKIT_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", CHILD, json.dumps(sizes), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run(False, args.sizes, args.repeat), run(True, args.sizes, args.repeat)
    print(f"{'case':<16}{fast['backend'] + ' [ms]':>14}{slow['backend'] + ' [ms]':>14}{'speedup':>10}")
    for case, t in fast["times"].items():
        s = slow["times"][case]
        print(f"{case:<16}{1e3 * t:>14.2f}{1e3 * s:>14.2f}{s / t:>9.1f}x")


if __name__ == "__main__":
    main()
