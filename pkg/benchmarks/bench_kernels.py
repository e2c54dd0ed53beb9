"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--scenario]

Times each hot kernel on full-scale inputs (N = 2000 samples) under both
backends, checks the outputs agree, and optionally times a desk-scale
centralized scenario end to end with each backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from otexplore import kernels


def make_inputs(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1800, size=(n, 2))
    w = rng.uniform(0, 1, size=n)
    w[rng.random(n) < 0.3] = 0.0
    w /= w.sum()
    return pts, w


def cases(be, pts, w):
    x, y = 900.0, 800.0
    hpts = np.ascontiguousarray(pts[:6])
    hw = np.full(6, 1.0 / 6)
    return {
        "distances": lambda: be.distances(pts, x, y),
        "nearest_positive(h=3)": lambda: be.nearest_positive(pts, w, x, y, 3),
        "best_order(h=3)": lambda: be.best_order(x, y, hpts[:3], hw[:3]),
        "best_order(h=6)": lambda: be.best_order(x, y, hpts, hw),
        "greedy_deposit": lambda: be.greedy_deposit(pts, w.copy(), x, y, 1e-3, kernels.ZERO_TOL),
        "weighted_distance_sum": lambda: be.weighted_distance_sum(pts, w, x, y),
        "within_range(300x5)": lambda: be.within_range(pts[:300], pts[-5:], 15.0),
    }


def bench(repeat):
    pts, w = make_inputs()
    backends = {"python": kernels.get_backend("python")}
    try:
        backends["cython"] = kernels.get_backend("cython")
    except ImportError:
        print("compiled backend unavailable; timing python only")
    rows = {}
    for name, be in backends.items():
        for label, fn in cases(be, pts, w).items():
            t = timeit.Timer(fn)
            n, _ = t.autorange()
            best = min(t.repeat(repeat, n)) / n
            rows.setdefault(label, {})[name] = best
    print(f"{'kernel':<24}{'python (us)':>14}{'cython (us)':>14}{'speedup':>10}")
    for label, r in rows.items():
        py = r["python"] * 1e6
        cy = r.get("cython")
        if cy is None:
            print(f"{label:<24}{py:>14.1f}{'-':>14}{'-':>10}")
        else:
            print(f"{label:<24}{py:>14.1f}{cy * 1e6:>14.1f}{py / (cy * 1e6):>9.1f}x")
    if "cython" in backends:
        check(backends["python"], backends["cython"], pts, w)


def check(py, cy, pts, w):
    a = cases(py, pts, w)
    b = cases(cy, pts, w)
    for label in a:
        ra, rb = a[label](), b[label]()
        ra = ra if isinstance(ra, tuple) else (ra,)
        rb = rb if isinstance(rb, tuple) else (rb,)
        same = all(np.array_equal(np.asarray(p), np.asarray(q)) for p, q in zip(ra, rb))
        if not same:
            raise SystemExit(f"backends disagree on {label}")
    print("outputs identical across backends")


SCENARIO = """
import time
from otexplore import config, kernels
from otexplore.sim import run_scenario
cfg = config.preset("centralized").replace(N=400, t_e=200, M=1000)
t = time.perf_counter()
_, m = run_scenario(cfg, keep_snapshots=False)
print(kernels.BACKEND, round(time.perf_counter() - t, 3), m.final_wub)
"""


def bench_scenario():
    print("desk-scale centralized run (N=400, t_e=200):")
    for force in ("0", "1"):
        env = dict(os.environ, OTEXPLORE_PURE_PYTHON=force)
        out = subprocess.run([sys.executable, "-c", SCENARIO], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        print(f"  {out[0]:<8} {float(out[1]):8.3f} s   final W_UB {out[2]}")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--scenario", action="store_true", help="also time a whole run")
    args = p.parse_args(argv)
    bench(args.repeat)
    if args.scenario:
        bench_scenario()


if __name__ == "__main__":
    main()
