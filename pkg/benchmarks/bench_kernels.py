"""Time the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is called once before timing so JIT compilation is excluded.
"""

import argparse
import timeit

import numpy as np

from factsum import kernels
from factsum.hierseq import build_sequence


def csr(rng, n_units, max_len, alpha):
    lens = rng.integers(3, max_len, size=n_units)
    ids = rng.integers(0, alpha, size=lens.sum()).astype(np.int64)
    return ids, np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)


def cases(rng):
    a = rng.integers(0, 40, size=120).astype(np.int64)
    b = rng.integers(0, 40, size=100).astype(np.int64)
    s_ids, s_off = csr(rng, 4, 20, 300)
    f_ids, f_off = csr(rng, 40, 30, 300)
    # a ~500-token hierarchical sequence
    doc = [[["w"] * int(rng.integers(5, 12)) for _ in range(int(rng.integers(1, 3)))]
           for _ in range(30)]
    seq = build_sequence(doc)
    sent = np.array([t.sentence for t in seq.tokens], dtype=np.int64)
    fact = np.array([t.fact for t in seq.tokens], dtype=np.int64)
    return {
        "lcs_length (120 x 100)": ("lcs_length", (a, b)),
        "clipped_overlap (120 x 100)": ("clipped_overlap", (a, b)),
        "rouge12_matrix (4 x 40 units)": ("rouge12_matrix", (s_ids, s_off, f_ids, f_off, 301)),
        f"hier_mask ({len(seq)} tokens)": ("hier_mask", (seq.levels, sent, fact, False)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if not kernels.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for label, (name, call_args) in cases(rng).items():
        f_np = getattr(kernels, name + "_np")
        f_nb = getattr(kernels, name + "_nb")
        ref = f_np(*call_args)
        np.testing.assert_array_equal(f_nb(*call_args), ref)
        t_np = min(timeit.repeat(lambda: f_np(*call_args), number=args.repeat, repeat=3))
        t_nb = min(timeit.repeat(lambda: f_nb(*call_args), number=args.repeat, repeat=3))
        us_np, us_nb = 1e6 * t_np / args.repeat, 1e6 * t_nb / args.repeat
        print(f"{label:34s} {us_np:10.1f} {us_nb:10.1f} {us_np / us_nb:7.1f}x")


if __name__ == "__main__":
    main()
