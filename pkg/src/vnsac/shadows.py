"""Randomized-measurement simulation and moment estimation.

Simulates the local-unitary measurement protocol on exact subsystem
states: per round, independent single-qubit Cliffords (an exact unitary
3-design) rotate the reduced state, bitstrings are drawn from the exact
outcome distribution, and the inverse measurement channel turns the
observed counts into an unbiased shadow of the state. Trace moments come
from U-statistics over batch-averaged shadows; jackknife resampling over
batches provides bias-corrected Renyi entropies and their covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .dataset import RenyiDataset
from .quantum import DensityMatrix, PureState, partial_trace

# Fraction of dropped jackknife replicates above which a dataset is
# flagged unreliable.
_REPLICATE_DROP_LIMIT = 0.2


def _clifford_group() -> np.ndarray:
    """The 24 single-qubit Cliffords, closed under multiplication modulo phase."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.array([[1, 0], [0, 1j]], dtype=complex)

    def canonical(m: np.ndarray) -> tuple:
        flat = m.ravel()
        pivot = flat[np.argmax(np.abs(flat) > 1e-9)]
        m = m * (abs(pivot) / pivot)
        return tuple(np.round(m.ravel(), 9))

    group: dict[tuple, np.ndarray] = {}
    frontier = [np.eye(2, dtype=complex)]
    while frontier:
        m = frontier.pop()
        key = canonical(m)
        if key in group:
            continue
        group[key] = m
        frontier.extend([m @ h, m @ s])
    mats = np.array(sorted(group.values(), key=canonical))
    if mats.shape[0] != 24:  # pragma: no cover - construction sanity
        raise RuntimeError(f"Clifford closure produced {mats.shape[0]} elements")
    return mats


CLIFFORDS = _clifford_group()


@dataclass(frozen=True)
class ShadowRecord:
    """One measurement round: chosen Cliffords and observed bitstring counts."""

    unitary_indices: tuple[int, ...]
    counts: np.ndarray
    n_shots: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.sum() != self.n_shots:
            raise ValueError("bitstring counts must sum to the shot count")


@dataclass(frozen=True)
class BatchShadowSet:
    """Batch-averaged shadows over a subsystem of ``n_sites`` qubits."""

    batches: np.ndarray  # (n_batches, d, d) complex
    n_sites: int

    def __post_init__(self):
        batches = np.asarray(self.batches, dtype=complex)
        object.__setattr__(self, "batches", batches)
        d = 2**self.n_sites
        if batches.ndim != 3 or batches.shape[1:] != (d, d):
            raise ValueError("batch stack shape does not match subsystem size")
        herm = np.max(np.abs(batches - batches.conj().transpose(0, 2, 1)))
        if herm > 1e-10:
            raise ValueError(f"batch shadows deviate from Hermitian by {herm:.3e}")
        traces = np.trace(batches, axis1=1, axis2=2)
        if np.max(np.abs(traces - 1.0)) > 1e-8:
            raise ValueError("batch shadows must have unit trace")

    @property
    def n_batches(self) -> int:
        return self.batches.shape[0]


@dataclass(frozen=True)
class MomentEstimates:
    """Estimated trace moments p_k keyed by order."""

    moments: dict[int, float]


def sample_shadows(
    state: PureState | DensityMatrix,
    subsystem: list[int] | None,
    n_unitaries: int,
    n_shots: int,
    seed: int,
    return_records: bool = False,
):
    """Per-round shot-averaged shadows of the reduced state.

    ``state`` may be a pure state (with ``subsystem`` giving the measured
    sites) or a subsystem density matrix directly (``subsystem=None``).
    Deterministic under ``seed``; the unitary draws and the multinomial
    bitstring sampling share one generator stream regardless of backend.
    """
    if isinstance(state, PureState):
        if subsystem is None:
            raise ValueError("subsystem required when sampling from a pure state")
        rho = partial_trace(state, subsystem)
    else:
        if subsystem is not None:
            raise ValueError("subsystem must be None when a density matrix is given")
        rho = state
    L = rho.n_sites
    if L > 6:
        raise ValueError("subsystem size must be <= 6 for dense shadows")
    if n_unitaries < 1 or n_shots < 1:
        raise ValueError("need at least one unitary and one shot")

    rng = np.random.default_rng(seed)
    cliff_idx = rng.integers(0, 24, size=(n_unitaries, L))
    probs = kernels.round_probs(np.ascontiguousarray(rho.matrix), CLIFFORDS, cliff_idx)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    d = 2**L
    counts = np.empty((n_unitaries, d), dtype=np.int64)
    for m in range(n_unitaries):
        counts[m] = rng.multinomial(n_shots, probs[m])
    shadows = kernels.assemble_shadows(CLIFFORDS, cliff_idx, counts, n_shots)
    if not return_records:
        return shadows
    records = [
        ShadowRecord(
            unitary_indices=tuple(int(i) for i in cliff_idx[m]),
            counts=counts[m],
            n_shots=n_shots,
        )
        for m in range(n_unitaries)
    ]
    return shadows, records


def batch_shadows(shadows: np.ndarray, n_batches: int) -> BatchShadowSet:
    """Contiguous equal-size batch means; a non-dividing remainder is dropped."""
    shadows = np.asarray(shadows, dtype=complex)
    n_shadows = shadows.shape[0]
    if n_batches > n_shadows:
        raise ValueError("cannot form more batches than shadows")
    if n_batches < 1:
        raise ValueError("need at least one batch")
    size = n_shadows // n_batches
    trimmed = shadows[: n_batches * size]
    batches = trimmed.reshape(n_batches, size, *shadows.shape[1:]).mean(axis=1)
    L = int(round(math.log2(shadows.shape[1])))
    return BatchShadowSet(batches=batches, n_sites=L)


def _falling_factorial(n: int, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= n - j
    return out


def u_statistic_moment(batch_set: BatchShadowSet, k: int) -> float:
    """U-statistic estimate of Tr(rho^k) over distinct batch tuples.

    Averages Tr(B_{m1} ... B_{mk}) over ordered tuples of distinct batch
    indices; cyclic invariance of the trace reduces the enumeration to one
    representative per cyclic class, weighted by k. The real part is kept:
    the moment is real and the imaginary residue is pure sampling noise.
    """
    n_b = batch_set.n_batches
    if not 2 <= k <= n_b:
        raise ValueError("need 2 <= k <= number of batches")
    total, _ = kernels.tuple_trace_sums(np.ascontiguousarray(batch_set.batches), k)
    return k * total / _falling_factorial(n_b, k)


def compute_moments(batch_set: BatchShadowSet, k_max: int) -> MomentEstimates:
    """Moments for all orders 2..k_max."""
    return MomentEstimates(
        moments={k: u_statistic_moment(batch_set, k) for k in range(2, k_max + 1)}
    )


def renyi_from_moments(moments: MomentEstimates) -> tuple[dict[int, float], list[int]]:
    """S_k = log2(p_k)/(1-k); orders with non-positive moments are dropped.

    Returns the entropy table and the list of dropped orders. Orders above
    the first dropped one survive if their own moment is positive; the
    caller decides how far to trust the tail.
    """
    table: dict[int, float] = {}
    dropped: list[int] = []
    for k, p in sorted(moments.moments.items()):
        if p <= 0:
            dropped.append(k)
            continue
        table[k] = float(np.log2(p) / (1 - k))
    return table, dropped


def jackknife(batch_set: BatchShadowSet, k_max: int) -> RenyiDataset:
    """Leave-one-batch-out Renyi means and covariance.

    Each tuple trace is computed once over the full batch set, accumulated
    both globally and per contained batch, so every leave-one-out replicate
    is a cheap difference rather than a recomputation. Replicates with a
    non-positive moment at a retained order are dropped and flagged; more
    than 20% drops flags the whole dataset unreliable.
    """
    n_b = batch_set.n_batches
    if n_b < k_max + 1:
        raise ValueError("jackknife needs at least k_max + 1 batches")
    orders = list(range(2, k_max + 1))
    batches = np.ascontiguousarray(batch_set.batches)

    totals: dict[int, float] = {}
    per_batch: dict[int, np.ndarray] = {}
    for k in orders:
        totals[k], per_batch[k] = kernels.tuple_trace_sums(batches, k)

    flags: list[str] = []
    full_moments = {k: k * totals[k] / _falling_factorial(n_b, k) for k in orders}
    full_table, dropped_orders = renyi_from_moments(MomentEstimates(full_moments))
    if dropped_orders:
        flags.append(f"orders_dropped:{','.join(map(str, dropped_orders))}")
    retained = [k for k in orders if k in full_table]
    if not retained or retained[0] != 2:
        raise ValueError(
            f"no usable orders after drops (retained {retained}); dataset unusable"
        )

    replicates = []
    n_dropped = 0
    for b in range(n_b):
        rep = {}
        ok = True
        for k in retained:
            p = k * (totals[k] - per_batch[k][b]) / _falling_factorial(n_b - 1, k)
            if p <= 0:
                ok = False
                break
            rep[k] = float(np.log2(p) / (1 - k))
        if ok:
            replicates.append([rep[k] for k in retained])
        else:
            n_dropped += 1
    if n_dropped:
        flags.append(f"jackknife_replicates_dropped:{n_dropped}")
    if n_dropped > _REPLICATE_DROP_LIMIT * n_b:
        flags.append("unreliable")
    reps = np.asarray(replicates)
    n_rep = reps.shape[0]
    if n_rep < 2:
        raise ValueError("fewer than two usable jackknife replicates")

    full = np.array([full_table[k] for k in retained])
    rep_mean = reps.mean(axis=0)
    mean = n_rep * full - (n_rep - 1) * rep_mean
    centered = reps - rep_mean
    cov = (n_rep - 1) / n_rep * (centered.T @ centered)

    return RenyiDataset(
        orders=tuple(retained),
        values=mean,
        covariance=cov,
        metadata={"flags": flags, "n_batches": n_b},
    )
