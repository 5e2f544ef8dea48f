"""Compiled vs numpy shooting kernel.

Usage: python3 benchmarks/bench_shoot.py [--lams 400] [--repeat 5]

Times both kernels on the same batch, checks they agree, and prints the
per-shot cost and the speed-up.
"""
import argparse
import time

import numpy as np

from latticedn import _shoot_py
from latticedn.edge_ode import SymmetricPotential, steps_for

try:
    from latticedn._shoot import shoot_batch as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lams", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    q = SymmetricPotential.from_coefficients([1.0, 0.5, -0.3])
    lams = np.linspace(0.3, 60.0, args.lams)
    n = steps_for(lams.max())
    nodes = q.nodes(n)
    t_py, ref = best_of(lambda: _shoot_py.shoot_batch(nodes, lams), args.repeat)
    print(f"steps={n}  batch={lams.size}")
    print(f"python  {t_py:8.4f} s   {1e6 * t_py / lams.size:8.1f} us/shot")
    if compiled is None:
        print("cython  extension not built")
        return
    t_cy, out = best_of(lambda: compiled(nodes, lams), args.repeat)
    print(f"cython  {t_cy:8.4f} s   {1e6 * t_cy / lams.size:8.1f} us/shot")
    print(f"speed-up {t_py / t_cy:.1f}x   max |diff| {np.max(np.abs(out - ref)):.1e}")
    # single-lambda shots dominate eigenvalue refinement; vectorisation does not help there
    t_py1, _ = best_of(lambda: [_shoot_py.shoot_batch(nodes, lams[i : i + 1]) for i in range(20)], args.repeat)
    t_cy1, _ = best_of(lambda: [compiled(nodes, lams[i : i + 1]) for i in range(20)], args.repeat)
    print(f"single shots: python {1e6 * t_py1 / 20:.0f} us, cython {1e6 * t_cy1 / 20:.0f} us ({t_py1 / t_cy1:.0f}x)")


if __name__ == "__main__":
    main()
