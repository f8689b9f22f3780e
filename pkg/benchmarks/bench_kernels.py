"""Time the compiled kernels against the numpy fallback.

Generates CSR-shaped inputs at a requested scale, runs each kernel on
both backends, checks they agree, and prints a speedup table.

    python3 benchmarks/bench_kernels.py --rows 2000 --vocab 20000

The pairwise kernels iterate sparse rows directly, so they shine when
the vocabulary is large relative to row size; with a tiny dense
vocabulary (--vocab 400) BLAS matmul in the fallback wins instead.
jacobi_eigh beats the fallback at every size.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from propagator import _pykernels

try:
    from propagator import _native
except ImportError:
    _native = None


def random_sets(rng, rows, vocab, max_size):
    ids = []
    indptr = [0]
    for _ in range(rows):
        size = int(rng.integers(1, max_size + 1))
        ids.extend(sorted(rng.choice(vocab, size=size, replace=False).tolist()))
        indptr.append(len(ids))
    return np.asarray(indptr, dtype=np.int64), np.asarray(ids, dtype=np.int32)


def random_docs(rng, rows, vocab, max_terms):
    idx = []
    data = []
    indptr = [0]
    for _ in range(rows):
        size = int(rng.integers(1, max_terms + 1))
        idx.extend(sorted(rng.choice(vocab, size=size, replace=False).tolist()))
        data.extend(rng.uniform(0.1, 2.0, size=size).tolist())
        indptr.append(len(idx))
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(idx, dtype=np.int32),
        np.asarray(data, dtype=np.float64),
    )


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def row(label, size, py_s, nat_s):
    speedup = f"{py_s / nat_s:6.2f}x" if nat_s else "      -"
    nat = f"{nat_s * 1e3:10.2f}" if nat_s else "         -"
    print(f"{label:<18} {size:<14} {py_s * 1e3:10.2f} {nat:>10} {speedup}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=2000, help="streams per side")
    parser.add_argument("--vocab", type=int, default=20000)
    parser.add_argument("--set-size", type=int, default=8, help="max tokens per keyword set")
    parser.add_argument("--doc-terms", type=int, default=12, help="max weighted terms per doc")
    parser.add_argument("--eigh-n", type=int, default=200, help="matrix side for jacobi_eigh")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    if _native is None:
        print("compiled extension not importable; timing the fallback only\n")
    rng = np.random.default_rng(args.seed)

    a_indptr, a_ids = random_sets(rng, args.rows, args.vocab, args.set_size)
    b_indptr, b_ids = random_sets(rng, args.rows, args.vocab, args.set_size)
    docs_a = random_docs(rng, args.rows, args.vocab, args.doc_terms)
    docs_b = random_docs(rng, args.rows, args.vocab, args.doc_terms)
    half = rng.uniform(0.0, 1.0, size=(args.eigh_n, args.eigh_n))
    sym = (half + half.T) / 2
    np.fill_diagonal(sym, 1.0)

    print(f"{'kernel':<18} {'size':<14} {'python ms':>10} {'native ms':>10} speedup")

    py_s, py_out = best_of(
        lambda: _pykernels.jaccard_pairwise(a_indptr, a_ids, b_indptr, b_ids),
        args.repeat,
    )
    nat_s = None
    if _native is not None:
        nat_s, nat_out = best_of(
            lambda: _native.jaccard_pairwise(a_indptr, a_ids, b_indptr, b_ids),
            args.repeat,
        )
        assert np.max(np.abs(np.asarray(nat_out) - py_out)) < 1e-9
    row("jaccard_pairwise", f"{args.rows}x{args.rows}", py_s, nat_s)

    py_s, py_out = best_of(
        lambda: _pykernels.cosine_pairwise(*docs_a, *docs_b, args.vocab), args.repeat
    )
    nat_s = None
    if _native is not None:
        nat_s, nat_out = best_of(
            lambda: _native.cosine_pairwise(*docs_a, *docs_b, args.vocab), args.repeat
        )
        assert np.max(np.abs(np.asarray(nat_out) - py_out)) < 1e-9
    row("cosine_pairwise", f"{args.rows}x{args.rows}", py_s, nat_s)

    py_s, (py_vals, _) = best_of(lambda: _pykernels.jacobi_eigh(sym), args.repeat)
    nat_s = None
    if _native is not None:
        nat_s, (nat_vals, _) = best_of(lambda: _native.jacobi_eigh(sym), args.repeat)
        assert np.max(np.abs(np.sort(np.asarray(nat_vals)) - np.sort(py_vals))) < 1e-8
    row("jacobi_eigh", f"{args.eigh_n}x{args.eigh_n}", py_s, nat_s)


if __name__ == "__main__":
    main()
