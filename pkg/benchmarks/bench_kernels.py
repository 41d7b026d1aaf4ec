"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per (kernel, size) with the best-of-N time of each backend
and the speedup.  Both backends are checked to agree before timing.
"""

import argparse
import timeit

import numpy as np

from nptmark import _fallback

try:
    from nptmark import _kernels
except ImportError:
    _kernels = None


def _cases(rng):
    for n, m, stride in [(128, 16, 1), (256, 32, 4), (256, 32, 1), (512, 64, 4)]:
        host = rng.random((n, n))
        block = rng.random((m, m))
        yield f"block_sq_distances N={n} m={m} stride={stride}", "block_sq_distances", (host, block, stride)
    for n in (64, 256, 512):
        mask = np.zeros((n, n), dtype=np.uint8)
        mask[n // 3 :, : n // 2] = 1
        mask[rng.random((n, n)) < 0.02] = 0
        yield f"largest_true_rectangle N={n}", "largest_true_rectangle", (mask,)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if _kernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")

    rng = np.random.default_rng(args.seed)
    print(f"{'case':<44} {'cython ms':>10} {'python ms':>10} {'speedup':>8}")
    for label, name, call_args in _cases(rng):
        fast, slow = getattr(_kernels, name), getattr(_fallback, name)
        a, b = fast(*call_args), slow(*call_args)
        if isinstance(a, tuple):
            assert a == b, (label, a, b)
        else:
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9)
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        print(f"{label:<44} {1e3 * t_fast:>10.2f} {1e3 * t_slow:>10.2f} {t_slow / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
