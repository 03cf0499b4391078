"""Compare the compiled integration kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times a single RK4 step, a 1000-step constant-control rollout and one
lookahead sweep over the 125-action grid, and checks that both backends
agree on the results.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from quadftc import _purepy
from quadftc.dp_agent import ActionGrid
from quadftc.params import QuadParams

try:
    from quadftc import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(impl):
    p = QuadParams()
    pv = p.as_vector()
    s = np.zeros(12)
    s[11] = -100.0
    s[5] = -3.0
    om = np.array([500.0, 520.0, 540.0, 0.0])
    grid = ActionGrid().actions * p.omega_max
    return {
        "rk4_step": lambda: impl.rk4_step(s, om, pv, 4, True, 0.01),
        "rollout_1000": lambda: impl.rk4_rollout(s, om, pv, 4, True, 0.01, 1000),
        "grid_125x10": lambda: impl.rk4_batch(s, grid, pv, 4, True, 0.01, 10),
    }


def best_time(fn, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not available; nothing to compare")
        return
    py, cy = cases(_purepy), cases(_kernels)
    print(f"{'case':<14}{'python (s)':>14}{'compiled (s)':>14}{'speedup':>10}")
    for name in py:
        a, b = py[name](), cy[name]()
        assert np.allclose(a[0], b[0], rtol=1e-9, atol=1e-9), name
        tp, tc = best_time(py[name], args.repeat), best_time(cy[name], args.repeat)
        print(f"{name:<14}{tp:>14.3e}{tc:>14.3e}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
