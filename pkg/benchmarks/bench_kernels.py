"""Time the hot kernels on the numba path and on the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at import
time by PINSKY_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys

PROBE = r"""
import json, sys, timeit
import numpy as np
from pinsky import _jit, level as lv
from pinsky.agents import MctsBudget, PolicyNet, evaluate_policy, mcts_episode
from pinsky.game import RewardKind
from pinsky.kernels import de

repeat = int(sys.argv[1])
level = lv.load(lv.bundled("multidoor"))
net = PolicyNet.for_level(level)
params = net.init_params(0)
rng = np.random.default_rng(0)
vecs = [rng.standard_normal(params.size).astype(np.float32) for _ in range(4)]
out = np.empty_like(vecs[0])

cases = {
    "policy episode (200 steps max)": lambda: evaluate_policy(level, params, net, RewardKind.ALIGNED, 200),
    f"DE trial ({params.size} params)": lambda: de.make_trial(*vecs, 0.5, 0.7, 3, 42, out),
    "MCTS episode (budget 50, 30 steps)": lambda: mcts_episode(level, MctsBudget(amount=50), 0, 30),
}
res = {}
for name, fn in cases.items():
    fn()  # compile / warm up
    n = max(1, repeat // (20 if "MCTS" in name else 1))
    res[name] = min(timeit.repeat(fn, number=n, repeat=3)) / n
print(json.dumps({"backend": _jit.backend(), "timings": res}))
"""


def measure(disable: bool, repeat: int) -> dict:
    env = {**os.environ, "PINSKY_DISABLE_NUMBA": "1" if disable else "0"}
    proc = subprocess.run([sys.executable, "-c", PROBE, str(repeat)], env=env, capture_output=True,
                          text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=40, help="calls per timing sample")
    args = ap.parse_args(argv)
    fast, slow = measure(False, args.repeat), measure(True, args.repeat)
    print(f"{'kernel':<38}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, t_fast in fast["timings"].items():
        t_slow = slow["timings"][name]
        print(f"{name:<38}{t_fast * 1e3:>10.3f}ms{t_slow * 1e3:>10.3f}ms{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
