"""Compare the numba kernels with the pure-Python fallback.

Each mode runs in its own interpreter because the backend is chosen at
import time from DRIFTBENCH_DISABLE_NUMBA.

    python benchmarks/bench_kernels.py --lengths 1000,10000,100000
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from driftbench import HAVE_NUMBA
from driftbench.envs import make_sweep_spec
from driftbench.policies import run_policy, warmup

lengths = json.loads(sys.argv[1])
repeats = int(sys.argv[2])
warmup()
out = {"numba": HAVE_NUMBA, "rows": []}
for T in lengths:
    rewards = make_sweep_spec("seglen", T // 2).sample(np.random.default_rng(0))
    for kind in ("ftl", "ftbi", "anh"):
        best = min(run_policy(kind, rewards, seed=1).wall_time for _ in range(repeats))
        out["rows"].append({"T": T, "policy": kind, "seconds": best})
print(json.dumps(out))
"""


def run_mode(disable, lengths, repeats):
    env = dict(os.environ)
    env.pop("DRIFTBENCH_DISABLE_NUMBA", None)
    if disable:
        env["DRIFTBENCH_DISABLE_NUMBA"] = "1"
    res = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps(lengths), str(repeats)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lengths", default="1000,10000,100000")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    lengths = [int(x) for x in args.lengths.split(",")]

    jit = run_mode(False, lengths, args.repeats)
    py = run_mode(True, lengths, args.repeats)
    if not jit["numba"]:
        print("numba not available; both columns use the Python fallback")

    print(f"{'T':>8} {'policy':>6} {'numba_s':>10} {'python_s':>10} {'speedup':>8} {'us/round(numba)':>16}")
    for a, b in zip(jit["rows"], py["rows"]):
        print(
            f"{a['T']:>8} {a['policy']:>6} {a['seconds']:>10.4f} {b['seconds']:>10.4f} "
            f"{b['seconds'] / a['seconds']:>7.1f}x {1e6 * a['seconds'] / a['T']:>16.3f}"
        )


if __name__ == "__main__":
    main()
