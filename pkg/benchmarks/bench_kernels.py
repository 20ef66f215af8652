"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rows 1000] [--attrs 10] [--repeat 3]

Both backends get identical inputs and their outputs are compared before
any timing is reported.
"""

import argparse
import time

import numpy as np

from synth_privaudit import _kernel_py

try:
    from synth_privaudit import _kernel_c
except ImportError:
    _kernel_c = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rows, attrs, card, seed):
    rng = np.random.default_rng(seed)
    a = np.ascontiguousarray(rng.integers(0, card, (rows, attrs)).astype(np.int32))
    s = np.ascontiguousarray(rng.integers(0, card, (rows, attrs)).astype(np.int32))
    labels = rng.random(rows) < 0.2
    n_sub = 2 ** attrs - 1
    masks = ((np.arange(1, n_sub + 1)[:, None] >> np.arange(attrs)) & 1).astype(np.uint8)
    cols = np.arange(attrs)
    return {
        "match_flags exact": lambda k: k.match_flags(a, s, cols, 0),
        "match_flags hamming<=2": lambda k: k.match_flags(a, s, cols, 2),
        f"subset_tp_fp exact ({n_sub} subsets)": lambda k: k.subset_tp_fp(a, labels, s, masks, 0),
        "min_hamming": lambda k: k.min_hamming(a, s, cols, False),
        "min_hamming exclude_self": lambda k: k.min_hamming(a, a, cols, True),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--attrs", type=int, default=10)
    p.add_argument("--card", type=int, default=4)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if _kernel_c is None:
        print("compiled extension not built; only the numpy fallback is available")
    print(f"rows={args.rows} attrs={args.attrs} card={args.card} best of {args.repeat}")
    print(f"{'kernel':<36}{'numpy s':>10}{'cython s':>10}{'speedup':>9}")
    for name, run in cases(args.rows, args.attrs, args.card, args.seed).items():
        t_py, out_py = best_of(lambda: run(_kernel_py), args.repeat)
        if _kernel_c is None:
            print(f"{name:<36}{t_py:>10.4f}{'-':>10}{'-':>9}")
            continue
        t_c, out_c = best_of(lambda: run(_kernel_c), args.repeat)
        if not np.array_equal(out_py, out_c):
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<36}{t_py:>10.4f}{t_c:>10.4f}{t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
