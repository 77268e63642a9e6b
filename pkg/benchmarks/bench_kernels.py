"""Compare the compiled kernels against the NumPy fallback.

Run with ``python benchmarks/bench_kernels.py``. Each row shows the best of
several repeats for both backends and the resulting speed-up, plus a check
that both backends returned the same answer.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from modeshape import _pykernels

try:
    from modeshape import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _best(fn, repeat: int, number: int) -> float:
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, atol=1e-12)


def cases(rng):
    t = np.arange(5000) / 50.0
    ringdown = np.exp(-0.2 * t) * np.cos(2 * np.pi * 0.7 * t) + 0.01 * rng.standard_normal(t.size)
    yield "local_extrema N=500", "local_extrema", (np.ascontiguousarray(ringdown[:500]),)
    yield "local_extrema N=5000", "local_extrema", (ringdown,)

    pts = rng.standard_normal((2000, 10))
    cents = rng.standard_normal((8, 10))
    yield "assign_labels Q=2000 k=8 D=10", "assign_labels", (pts, cents)

    for q in (200, 1000):
        p = rng.standard_normal((q, 10))
        labels = rng.integers(0, 4, q).astype(np.int64)
        yield f"silhouette_samples Q={q} k=4 D=10", "silhouette_samples", (p, labels, 4)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled kernels are not built; only the NumPy fallback is available")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'kernel':<36} {'cython [us]':>12} {'numpy [us]':>12} {'speed-up':>9}  same")
    for label, name, fargs in cases(rng):
        c_fn, p_fn = getattr(_ckernels, name), getattr(_pykernels, name)
        tc = _best(lambda: c_fn(*fargs), args.repeat, args.number)
        tp = _best(lambda: p_fn(*fargs), args.repeat, args.number)
        same = _same(c_fn(*fargs), p_fn(*fargs))
        print(f"{label:<36} {tc * 1e6:>12.1f} {tp * 1e6:>12.1f} {tp / tc:>8.1f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
