"""Pure-numpy reference implementations of the hot kernels.

Semantically identical to the numba versions in ``_kernels_nb``; kept as
the fallback backend (``VNSAC_BACKEND=numpy``) and as the comparison
target for the backend benchmark.
"""

from __future__ import annotations

from itertools import combinations, permutations

import numpy as np


def build_local_kron(factors: np.ndarray) -> np.ndarray:
    """Kronecker product of a stack of 2x2 matrices, qubit 0 most significant."""
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def round_probs(rho: np.ndarray, cliffords: np.ndarray, cliff_idx: np.ndarray) -> np.ndarray:
    """Outcome probabilities diag(U rho U^dag) for each measurement round."""
    n_rounds, L = cliff_idx.shape
    d = rho.shape[0]
    out = np.empty((n_rounds, d))
    for m in range(n_rounds):
        U = build_local_kron(cliffords[cliff_idx[m]])
        out[m] = np.einsum("ij,jk,ik->i", U, rho, U.conj()).real
    return out


def assemble_shadows(
    cliffords: np.ndarray, cliff_idx: np.ndarray, counts: np.ndarray, n_shots: int
) -> np.ndarray:
    """Shot-averaged inverse-channel shadows for each round.

    Each observed bitstring b contributes the product state of per-qubit
    factors 3 U_i^dag |b_i><b_i| U_i - I, weighted by its count.
    """
    n_rounds, L = cliff_idx.shape
    d = counts.shape[1]
    eye2 = np.eye(2)
    out = np.zeros((n_rounds, d, d), dtype=complex)
    for m in range(n_rounds):
        factors = np.empty((L, 2, 2, 2), dtype=complex)  # [qubit, bit, :, :]
        for i in range(L):
            U = cliffords[cliff_idx[m, i]]
            for b in range(2):
                v = U[b].conj()
                factors[i, b] = 3.0 * np.outer(v, v.conj()) - eye2
        for b in range(d):
            if counts[m, b] == 0:
                continue
            bits = [(b >> (L - 1 - i)) & 1 for i in range(L)]
            local = np.array([factors[i, bits[i]] for i in range(L)])
            out[m] += (counts[m, b] / n_shots) * build_local_kron(local)
    return out


def tuple_trace_sums(batches: np.ndarray, k: int) -> tuple[float, np.ndarray]:
    """Cyclic-class trace sums over distinct k-tuples of batch matrices.

    Enumerates one representative per cyclic class (smallest index first,
    all orderings of the rest) and accumulates the real part of
    Tr(B_{c0} B_{p1} ... B_{p_{k-1}}). Returns the grand total and, for
    each batch, the total over classes containing it, which is what a
    leave-one-out replicate needs, so each tuple trace is computed once
    and shared across all jackknife subsets.
    """
    n_batches, d, _ = batches.shape
    if not 2 <= k <= n_batches:
        raise ValueError("need 2 <= k <= number of batches")
    total = 0.0
    per_batch = np.zeros(n_batches)
    for comb in combinations(range(n_batches), k):
        first = batches[comb[0]]
        subtotal = 0.0
        for perm in permutations(comb[1:]):
            prod = first
            for e in perm[:-1]:
                prod = prod @ batches[e]
            # Tr(prod @ B_last) without forming the product.
            subtotal += float(np.sum(prod * batches[perm[-1]].T).real)
        total += subtotal
        for member in comb:
            per_batch[member] += subtotal
    return total, per_batch
