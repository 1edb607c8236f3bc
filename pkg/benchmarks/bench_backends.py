#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot paths, cyclic-class tuple-trace enumeration and shadow
assembly, at pipeline-realistic sizes, checks the backends agree
numerically, and prints the speedups. Select the backend used by the
package at import time with VNSAC_BACKEND={numba,numpy,auto}.
"""

import time

import numpy as np

from vnsac import _kernels_np
from vnsac.shadows import CLIFFORDS

try:
    from vnsac import _kernels_nb

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    print("numba unavailable; nothing to compare")
    raise SystemExit(0)


def random_batches(rng, n_batches, d):
    out = np.empty((n_batches, d, d), dtype=complex)
    for i in range(n_batches):
        M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        M = M + M.conj().T + d * np.eye(d)
        out[i] = M / np.trace(M).real
    return np.ascontiguousarray(out)


def timeit(fn, *args, repeats=3):
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_tuple_traces(rng):
    print("\n== tuple-trace sums (jackknife hot loop) ==")
    print(f"{'config':>24} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for n_batches, d, k in [(10, 16, 4), (10, 16, 6), (12, 16, 5), (10, 32, 6)]:
        batches = random_batches(rng, n_batches, d)
        t_np, (tot_np, per_np) = timeit(_kernels_np.tuple_trace_sums, batches, k)
        t_nb, (tot_nb, per_nb) = timeit(_kernels_nb.tuple_trace_sums, batches, k)
        assert abs(tot_np - tot_nb) < 1e-9 * max(1.0, abs(tot_np))
        np.testing.assert_allclose(per_np, per_nb, rtol=1e-9)
        label = f"N_B={n_batches} d={d} k={k}"
        print(f"{label:>24} {t_np:>9.4f}s {t_nb:>9.4f}s {t_np / t_nb:>7.1f}x")


def bench_shadow_assembly(rng):
    print("\n== shadow probabilities + assembly (sampling hot loop) ==")
    print(f"{'config':>24} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for n_rounds, L, n_shots in [(500, 4, 150), (500, 5, 150), (200, 6, 100)]:
        d = 2**L
        rho = random_batches(rng, 1, d)[0]
        idx = rng.integers(0, 24, size=(n_rounds, L))
        counts = rng.multinomial(n_shots, np.full(d, 1.0 / d), size=n_rounds).astype(np.int64)

        def np_path():
            probs = _kernels_np.round_probs(rho, CLIFFORDS, idx)
            return probs, _kernels_np.assemble_shadows(CLIFFORDS, idx, counts, n_shots)

        def nb_path():
            probs = _kernels_nb.round_probs(rho, CLIFFORDS, idx)
            return probs, _kernels_nb.assemble_shadows(CLIFFORDS, idx, counts, n_shots)

        t_np, (p_np, s_np) = timeit(np_path)
        t_nb, (p_nb, s_nb) = timeit(nb_path)
        np.testing.assert_allclose(p_np, p_nb, atol=1e-12)
        np.testing.assert_allclose(s_np, s_nb, atol=1e-12)
        label = f"N_u={n_rounds} L={L}"
        print(f"{label:>24} {t_np:>9.4f}s {t_nb:>9.4f}s {t_np / t_nb:>7.1f}x")


def main():
    rng = np.random.default_rng(0)
    # trigger JIT compilation outside the timed region
    warm = random_batches(rng, 4, 4)
    _kernels_nb.tuple_trace_sums(warm, 2)
    idx = rng.integers(0, 24, size=(2, 2))
    counts = np.full((2, 4), 1, dtype=np.int64)
    _kernels_nb.round_probs(warm[0], CLIFFORDS, idx)
    _kernels_nb.assemble_shadows(CLIFFORDS, idx, counts, 4)

    bench_tuple_traces(rng)
    bench_shadow_assembly(rng)


if __name__ == "__main__":
    main()
