"""Exact state generation and exact entropy computation.

Dense, desk-scale quantum mechanics: product states, spin-chain ground
states and quenches, partial traces and spectral entropies. Everything here
is the ground truth that the estimation pipeline is benchmarked against.

Conventions: qubit 0 is the most significant bit of the computational-basis
index, sigma_z |0> = +|0>, and all entropies are in bits (log base 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ZeroStateError

# Spectrum floor for entropy computations: Hermitian eigensolvers produce
# O(machine eps * dim) noise, including tiny negative eigenvalues.
EIG_FLOOR = 1e-14

_PAULI_Z = np.diag([1.0, -1.0])
_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]])  # sigma+ |1> = |0>


@dataclass(frozen=True)
class PureState:
    """Normalized pure state of ``n`` qubits as a length 2**n amplitude vector."""

    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if self.n < 1:
            raise ValueError("qubit count must be >= 1")
        if amps.shape != (2**self.n,):
            raise ValueError(
                f"amplitude vector has length {amps.shape}, expected ({2**self.n},)"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm!r} deviates from 1 by more than 1e-12")

    @property
    def dim(self) -> int:
        return 2**self.n


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix over ``n_sites`` qubits."""

    matrix: np.ndarray
    n_sites: int

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        d = 2**self.n_sites
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match {self.n_sites} qubits")
        herm_dev = np.max(np.abs(mat - mat.conj().T))
        if herm_dev > 1e-12:
            raise ValueError(f"matrix deviates from Hermitian by {herm_dev:.3e}")
        tr_dev = abs(np.trace(mat).real - 1.0) + abs(np.trace(mat).imag)
        if tr_dev > 1e-12:
            raise ValueError(f"trace deviates from 1 by {tr_dev:.3e}")
        evals = np.linalg.eigvalsh(mat)
        if evals.min() < -1e-10:
            raise ValueError(f"matrix has eigenvalue {evals.min():.3e} < -1e-10")

    @property
    def dim(self) -> int:
        return 2**self.n_sites

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class SpinHamiltonian:
    """Long-range XY coupling table plus a uniform field, all in 1/s.

    ``couplings[i, j]`` multiplies the flip-flop term between sites i and j;
    ``field`` multiplies the sum of sigma_z.
    """

    n: int
    couplings: np.ndarray
    field: float
    decay_exponent: float

    def __post_init__(self):
        J = np.asarray(self.couplings, dtype=float)
        object.__setattr__(self, "couplings", J)
        if J.shape != (self.n, self.n):
            raise ValueError("couplings table shape does not match site count")
        if np.max(np.abs(J - J.T)) > 1e-12 or np.max(np.abs(np.diag(J))) > 0:
            raise ValueError("couplings must be symmetric with zero diagonal")

    @classmethod
    def power_law(cls, n: int, J: float, field: float, exponent: float) -> "SpinHamiltonian":
        """Couplings J_ij = J / |i-j|**exponent on an open chain."""
        table = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                table[i, j] = table[j, i] = J / abs(i - j) ** exponent
        return cls(n=n, couplings=table, field=field, decay_exponent=exponent)

    def matrix(self) -> np.ndarray:
        """Dense real-symmetric matrix of sum_{i<j} J_ij (s+ s- + s- s+) + B sum sz."""
        d = 2**self.n
        H = np.zeros((d, d))
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.couplings[i, j] == 0.0:
                    continue
                hop = _two_site_op(_SIGMA_PLUS, _SIGMA_PLUS.T, i, j, self.n)
                H += self.couplings[i, j] * (hop + hop.T)
        if self.field != 0.0:
            diag = np.zeros(d)
            for i in range(self.n):
                diag += self.field * _site_diag(_PAULI_Z.diagonal(), i, self.n)
            H += np.diag(diag)
        return H


@dataclass(frozen=True)
class GroundStateResult:
    """Ground state of an exact diagonalization, with degeneracy diagnostics."""

    state: PureState
    energy: float
    gap: float
    degenerate: bool


def _site_diag(local_diag: np.ndarray, site: int, n: int) -> np.ndarray:
    """Diagonal of a single-site diagonal operator embedded at ``site``."""
    d = 2**n
    idx = np.arange(d)
    bits = (idx >> (n - 1 - site)) & 1
    return np.asarray(local_diag)[bits]

def _two_site_op(a: np.ndarray, b: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    """Dense a_i b_j on n qubits (identity elsewhere)."""
    mats = [np.eye(2)] * n
    mats[i] = a
    mats[j] = b
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def neel_state(n: int) -> PureState:
    """Alternating computational-basis product state |0101...>."""
    if n < 1:
        raise ValueError("qubit count must be >= 1")
    index = 0
    for i in range(n):
        if i % 2 == 1:
            index |= 1 << (n - 1 - i)
    amps = np.zeros(2**n, dtype=complex)
    amps[index] = 1.0
    return PureState(amplitudes=amps, n=n)


def tfim_ground_state(n: int, J: float, h: float) -> GroundStateResult:
    """Ground state of the open-chain transverse-field Ising model.

    H = -J sum_i sz_i sz_{i+1} - h sum_i sx_i, assembled dense and solved
    with a LAPACK subset eigensolver. A gap below 1e-10 sets the
    ``degenerate`` flag; no tie-break is attempted.
    """
    if not 1 <= n <= 14:
        raise ValueError("site count must be within [1, 14] for dense diagonalization")
    H = _tfim_dense(n, J, h)
    if n == 1:
        evals, evecs = np.linalg.eigh(H)
        w, v = evals[:2], evecs[:, :2]
    else:
        w, v = sla.eigh(H, subset_by_index=[0, 1])
    gap = float(w[1] - w[0]) if len(w) > 1 else np.inf
    vec = v[:, 0].astype(complex)
    vec /= np.linalg.norm(vec)
    return GroundStateResult(
        state=PureState(amplitudes=vec, n=n),
        energy=float(w[0]),
        gap=gap,
        degenerate=gap < 1e-10,
    )


def _tfim_dense(n: int, J: float, h: float) -> np.ndarray:
    d = 2**n
    H = np.zeros((d, d))
    diag = np.zeros(d)
    for i in range(n - 1):
        diag -= J * _site_diag(_PAULI_Z.diagonal(), i, n) * _site_diag(
            _PAULI_Z.diagonal(), i + 1, n
        )
    H += np.diag(diag)
    # -h sx_i flips bit i: fill the off-diagonals directly.
    idx = np.arange(d)
    for i in range(n):
        flipped = idx ^ (1 << (n - 1 - i))
        H[idx, flipped] -= h
    return H


def tfim_sparse(n: int, J: float, h: float) -> sp.csr_matrix:
    """Sparse TFIM matrix, used as an independent cross-check path."""
    d = 2**n
    rows, cols, vals = [], [], []
    idx = np.arange(d)
    diag = np.zeros(d)
    for i in range(n - 1):
        diag -= J * _site_diag(_PAULI_Z.diagonal(), i, n) * _site_diag(
            _PAULI_Z.diagonal(), i + 1, n
        )
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    for i in range(n):
        rows.append(idx)
        cols.append(idx ^ (1 << (n - 1 - i)))
        vals.append(np.full(d, -h))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(d, d),
    )


class XYEvolver:
    """Eigendecomposition-based evolver for the long-range XY Hamiltonian.

    Diagonalizes once, then evaluates exp(-iHt)|Neel> for any t. Exactness
    is preferred over speed at these sizes (n <= 12).
    """

    def __init__(self, n: int, J: float, B: float, exponent: float):
        if n > 12:
            raise ValueError("quench evolution supports at most 12 qubits")
        self.hamiltonian = SpinHamiltonian.power_law(n, J, B, exponent)
        self.n = n
        H = self.hamiltonian.matrix()
        self._evals, self._evecs = np.linalg.eigh(H)
        self._initial = neel_state(n)
        self._coeffs = self._evecs.T @ self._initial.amplitudes

    def state_at(self, t: float) -> PureState:
        if t < 0:
            raise ValueError("time must be >= 0")
        phases = np.exp(-1j * self._evals * t)
        amps = self._evecs @ (phases * self._coeffs)
        amps /= np.linalg.norm(amps)
        return PureState(amplitudes=amps, n=self.n)

    def energy(self, state: PureState) -> float:
        Hpsi = self._evecs @ (self._evals * (self._evecs.T @ state.amplitudes))
        return float(np.real(np.vdot(state.amplitudes, Hpsi)))


def xy_quench(n: int, J: float, B: float, exponent: float, t: float) -> PureState:
    """Neel state evolved for ``t`` seconds under the power-law XY chain."""
    return XYEvolver(n, J, B, exponent).state_at(t)


def partial_trace(state: PureState, subsystem: list[int]) -> DensityMatrix:
    """Reduced density matrix of ``state`` over the listed sites (in that order)."""
    sites = list(subsystem)
    if len(sites) == 0:
        raise ValueError("subsystem must be non-empty")
    if len(set(sites)) != len(sites):
        raise ValueError("subsystem sites must be distinct")
    if any(s < 0 or s >= state.n for s in sites):
        raise ValueError("subsystem sites must lie within [0, n)")
    rest = [q for q in range(state.n) if q not in sites]
    psi = state.amplitudes.reshape((2,) * state.n)
    psi = np.transpose(psi, axes=sites + rest)
    dA = 2 ** len(sites)
    mat = psi.reshape(dA, -1)
    rho = mat @ mat.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(matrix=rho, n_sites=len(sites))


def _spectrum(rho: DensityMatrix) -> np.ndarray:
    evals = rho.eigenvalues()
    evals = evals[evals > EIG_FLOOR]
    if evals.size == 0:
        raise ZeroStateError("all eigenvalues fell below the spectral floor")
    return evals


def renyi_entropy(rho: DensityMatrix, k: float) -> float:
    """Order-k Renyi entropy log2(Tr rho^k) / (1 - k), in bits."""
    if k <= 0 or k == 1:
        raise ValueError("Renyi order must be positive and != 1")
    evals = _spectrum(rho)
    return float(np.log2(np.sum(evals**k)) / (1.0 - k))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-Tr(rho log2 rho) in bits, with 0 log 0 = 0."""
    evals = _spectrum(rho)
    return float(-np.sum(evals * np.log2(evals)))


def random_density_matrix(dim: int, rank: int, seed: int) -> DensityMatrix:
    """Wishart-style random state: G G^dag / Tr, G a dim x rank complex Gaussian."""
    if not 1 <= rank <= dim:
        raise ValueError("rank must satisfy 1 <= rank <= dim")
    n_sites = int(np.log2(dim))
    if 2**n_sites != dim:
        raise ValueError("dimension must be a power of 2")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = G @ G.conj().T
    rho /= np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(matrix=rho, n_sites=n_sites)


def depolarize(rho: DensityMatrix, p: float) -> DensityMatrix:
    """Global depolarizing mix rho -> (1-p) rho + p I/d; the one mixedness knob."""
    if not 0 <= p <= 1:
        raise ValueError("depolarizing strength must lie in [0, 1]")
    d = rho.dim
    mixed = (1.0 - p) * rho.matrix + p * np.eye(d) / d
    return DensityMatrix(matrix=mixed, n_sites=rho.n_sites)


def exact_renyi_table(rho: DensityMatrix, orders: list[int]) -> dict[int, float]:
    """Exact S_k for each requested integer order."""
    return {k: renyi_entropy(rho, k) for k in orders}
