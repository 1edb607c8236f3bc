"""Numba-compiled hot kernels.

Same contracts as ``_kernels_np``; loop-level implementations that avoid
temporary allocation in the tuple-enumeration inner loop. Selected by
default when numba imports (see ``_backend``).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _fill_kron(cliffords, idx, out):
    """out[r, c] = prod_i cliffords[idx[i]][bit_i(r), bit_i(c)]."""
    L = idx.shape[0]
    d = out.shape[0]
    for r in range(d):
        for c in range(d):
            val = 1.0 + 0.0j
            for i in range(L):
                shift = L - 1 - i
                val *= cliffords[idx[i], (r >> shift) & 1, (c >> shift) & 1]
            out[r, c] = val


@njit(cache=True)
def round_probs(rho, cliffords, cliff_idx):
    n_rounds, L = cliff_idx.shape
    d = rho.shape[0]
    out = np.empty((n_rounds, d))
    U = np.empty((d, d), np.complex128)
    for m in range(n_rounds):
        _fill_kron(cliffords, cliff_idx[m], U)
        T = U @ rho
        for r in range(d):
            acc = 0.0
            for c in range(d):
                acc += (T[r, c] * np.conj(U[r, c])).real
            out[m, r] = acc
    return out


@njit(cache=True)
def assemble_shadows(cliffords, cliff_idx, counts, n_shots):
    n_rounds, L = cliff_idx.shape
    d = counts.shape[1]
    out = np.zeros((n_rounds, d, d), np.complex128)
    factors = np.empty((L, 2, 2, 2), np.complex128)
    for m in range(n_rounds):
        for i in range(L):
            U = cliffords[cliff_idx[m, i]]
            for b in range(2):
                for r in range(2):
                    for c in range(2):
                        val = 3.0 * np.conj(U[b, r]) * U[b, c]
                        if r == c:
                            val -= 1.0
                        factors[i, b, r, c] = val
        for b in range(d):
            cnt = counts[m, b]
            if cnt == 0:
                continue
            wgt = cnt / n_shots
            for r in range(d):
                for c in range(d):
                    val = 1.0 + 0.0j
                    for i in range(L):
                        shift = L - 1 - i
                        val *= factors[i, (b >> shift) & 1, (r >> shift) & 1, (c >> shift) & 1]
                    out[m, r, c] += wgt * val
    return out


@njit(cache=True)
def _trace_dot(a, b):
    """Re Tr(a @ b)."""
    d = a.shape[0]
    acc = 0.0
    for r in range(d):
        for c in range(d):
            acc += (a[r, c] * b[c, r]).real
    return acc


@njit(cache=True)
def tuple_trace_sums(batches, k):
    n_batches, d, _ = batches.shape
    total = 0.0
    per_batch = np.zeros(n_batches)

    comb = np.empty(k, np.int64)
    for i in range(k):
        comb[i] = i
    t = k - 1
    tail = np.empty(t, np.int64)
    used = np.zeros(t, np.bool_)
    choice = np.empty(t, np.int64)
    # prods[j] holds the product of the first j+1 factors of the current branch.
    prods = np.empty((k, d, d), np.complex128)

    while True:
        for i in range(t):
            tail[i] = comb[i + 1]
            used[i] = False
        prods[0] = batches[comb[0]]
        subtotal = 0.0

        # Depth-first enumeration of tail orderings with shared prefix products.
        depth = 0
        choice[0] = -1
        while depth >= 0:
            nxt = -1
            for pos in range(choice[depth] + 1, t):
                if not used[pos]:
                    nxt = pos
                    break
            if nxt == -1:
                choice[depth] = -1
                depth -= 1
                if depth >= 0:
                    used[choice[depth]] = False
                continue
            choice[depth] = nxt
            e = tail[nxt]
            if depth == t - 1:
                subtotal += _trace_dot(prods[depth], batches[e])
            else:
                used[nxt] = True
                prods[depth + 1] = np.dot(prods[depth], batches[e])
                depth += 1
                choice[depth] = -1

        total += subtotal
        for i in range(k):
            per_batch[comb[i]] += subtotal

        # next combination in lexicographic order
        i = k - 1
        while i >= 0 and comb[i] == n_batches - k + i:
            i -= 1
        if i < 0:
            break
        comb[i] += 1
        for j in range(i + 1, k):
            comb[j] = comb[j - 1] + 1

    return total, per_batch
