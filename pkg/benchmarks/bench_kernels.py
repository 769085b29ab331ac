"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical inputs under both backends; results are
checked for agreement before timing. Prints one row per kernel.
"""
import argparse
import sys
import timeit

import numpy as np

from ndrsim import _kernels


def workloads(rng):
    # answer kernel: one iteration with 2000 open questions
    n = 2000
    truth = rng.integers(0, 4, n).tolist()
    parent = rng.integers(-1, 2, n).tolist()
    u = rng.random((n, 4))
    yield "answer_codes (n=2000)", lambda k: list(k.answer_codes(truth, parent, u, 0.7, 0.2, 0.5))

    # joint queries: 4^6 outcomes, as in a six-question exact joint
    masks = rng.integers(0, 2 ** 62, 4096, dtype=np.uint64)
    weights = rng.random(4096)
    query = int(masks[7]) & 0x0F0F
    yield "contains_sum (4096 outcomes)", lambda k: k.contains_sum(masks, weights, query)
    yield "contains_count (4096 outcomes)", lambda k: k.contains_count(masks, query)

    # sweep right across a 5000-cell input, then back to the left edge and halt
    ns = np.array([[0, 1, 1], [1, 1, 2], [2, 2, 2]], dtype=np.int32)
    wr = np.array([[0, 1, 2], [0, 1, 2], [0, 1, 2]], dtype=np.int32)
    mv = np.array([[1, 1, -1], [-1, -1, 0], [0, 0, 0]], dtype=np.int32)
    tape = [0] * 5000

    def sweep(k):
        return tuple(int(x) for x in k.tm_run(ns, wr, mv, 0, 2, 2, tape, 50_000)[:5])
    yield "tm_run (10^4 steps)", sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    found = _kernels.backends()
    if "cython" not in found:
        print("compiled kernels are not built; only the Python backend is available", file=sys.stderr)
    rng = np.random.default_rng(0)
    print(f"{'kernel':32} " + " ".join(f"{name + ' ms':>12}" for name in found) + f" {'speedup':>9}")
    for label, fn in workloads(rng):
        outs = {name: fn(mod) for name, mod in found.items()}
        if len({repr(o) for o in outs.values()}) != 1:
            raise SystemExit(f"backends disagree on {label}")
        times = {}
        for name, mod in found.items():
            number = 3
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
            times[name] = best * 1e3
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:32} " + " ".join(f"{t:12.3f}" for t in times.values()) + f" {speed:8.1f}x")


if __name__ == "__main__":
    main()
