from itertools import permutations

import numpy as np
import pytest

from vnsac import _kernels_np
from vnsac._backend import kernels
from vnsac.quantum import partial_trace, random_density_matrix, renyi_entropy, xy_quench
from vnsac.shadows import (
    CLIFFORDS,
    BatchShadowSet,
    MomentEstimates,
    batch_shadows,
    compute_moments,
    jackknife,
    renyi_from_moments,
    sample_shadows,
    u_statistic_moment,
)


def hermitian_unit_trace(rng, d):
    M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    M = M + M.conj().T
    M += d * np.eye(d)  # keep traces well away from zero
    return M / np.trace(M).real


def batch_set_from(mats):
    mats = np.asarray(mats, dtype=complex)
    L = int(np.log2(mats.shape[1]))
    return BatchShadowSet(batches=mats, n_sites=L)


def naive_u_statistic(batches, k):
    """Full ordered-tuple enumeration, no cyclic reduction."""
    n_b = len(batches)
    total = 0.0
    for tup in permutations(range(n_b), k):
        prod = batches[tup[0]]
        for e in tup[1:]:
            prod = prod @ batches[e]
        total += np.trace(prod).real
    norm = 1.0
    for j in range(k):
        norm *= n_b - j
    return total / norm


class TestCliffordGroup:
    def test_has_24_elements(self):
        assert CLIFFORDS.shape == (24, 2, 2)

    def test_all_unitary(self):
        for U in CLIFFORDS:
            np.testing.assert_allclose(U @ U.conj().T, np.eye(2), atol=1e-12)

    def test_closed_under_multiplication_mod_phase(self):
        def canon(m):
            flat = m.ravel()
            pivot = flat[np.argmax(np.abs(flat) > 1e-9)]
            return tuple(np.round((m * abs(pivot) / pivot).ravel(), 6))

        keys = {canon(U) for U in CLIFFORDS}
        assert len(keys) == 24
        for U in CLIFFORDS[:6]:
            for V in CLIFFORDS:
                assert canon(U @ V) in keys

    def test_exact_3_design_frame_potential(self):
        # Haar values on U(2): E|Tr(U^dag V)|^{2t} = Catalan(t) -> 2, 5.
        overlaps = np.abs(np.einsum("aij,bij->ab", CLIFFORDS.conj(), CLIFFORDS)) ** 2
        f2 = np.mean(overlaps**2)
        f3 = np.mean(overlaps**3)
        assert f2 == pytest.approx(2.0, abs=1e-10)
        assert f3 == pytest.approx(5.0, abs=1e-10)


class TestSampleShadows:
    def test_unit_trace_and_hermitian(self):
        state = xy_quench(6, 420.0, 4200.0, 1.2, 0.004)
        shadows = sample_shadows(state, [0, 1, 2], n_unitaries=50, n_shots=7, seed=3)
        traces = np.trace(shadows, axis1=1, axis2=2)
        np.testing.assert_allclose(traces, 1.0, atol=1e-12)
        np.testing.assert_allclose(
            shadows, shadows.conj().transpose(0, 2, 1), atol=1e-12
        )

    def test_deterministic_under_seed(self):
        rho = random_density_matrix(8, 4, seed=21)
        a = sample_shadows(rho, None, n_unitaries=20, n_shots=5, seed=77)
        b = sample_shadows(rho, None, n_unitaries=20, n_shots=5, seed=77)
        np.testing.assert_array_equal(a, b)

    def test_records_carry_counts(self):
        rho = random_density_matrix(4, 2, seed=5)
        shadows, records = sample_shadows(
            rho, None, n_unitaries=10, n_shots=9, seed=1, return_records=True
        )
        assert len(records) == 10
        for rec in records:
            assert rec.counts.sum() == 9
            assert len(rec.unitary_indices) == 2

    def test_unbiased_against_exact_state(self):
        # Statistical: elementwise |mean shadow - rho| < 5 standard errors.
        state = xy_quench(6, 420.0, 4200.0, 1.2, 0.005)
        rho = partial_trace(state, [0, 1, 2]).matrix
        shadows = sample_shadows(state, [0, 1, 2], n_unitaries=20000, n_shots=4, seed=11)
        mean = shadows.mean(axis=0)
        for part in (np.real, np.imag):
            se = part(shadows).std(axis=0, ddof=1) / np.sqrt(shadows.shape[0])
            dev = np.abs(part(mean) - part(rho))
            assert np.all(dev < 5.0 * np.maximum(se, 1e-12))

    def test_subsystem_size_limit(self):
        rho = random_density_matrix(2, 1, seed=0)
        with pytest.raises(ValueError):
            sample_shadows(rho, [0], n_unitaries=5, n_shots=5, seed=0)


class TestBatchShadows:
    def test_identity_when_one_batch_per_shadow(self, rng):
        mats = np.array([hermitian_unit_trace(rng, 4) for _ in range(6)])
        bs = batch_shadows(mats, 6)
        np.testing.assert_allclose(bs.batches, mats, atol=1e-14)

    def test_single_batch_is_global_mean(self, rng):
        mats = np.array([hermitian_unit_trace(rng, 4) for _ in range(6)])
        bs = batch_shadows(mats, 1)
        np.testing.assert_allclose(bs.batches[0], mats.mean(axis=0), atol=1e-14)
        with pytest.raises(ValueError):
            u_statistic_moment(bs, 2)  # k=2 needs at least 2 batches

    def test_batch_means_reaverage_to_global_mean(self, rng):
        mats = np.array([hermitian_unit_trace(rng, 4) for _ in range(12)])
        bs = batch_shadows(mats, 4)
        np.testing.assert_allclose(bs.batches.mean(axis=0), mats.mean(axis=0), atol=1e-12)

    def test_remainder_truncated(self, rng):
        mats = np.array([hermitian_unit_trace(rng, 2) for _ in range(7)])
        bs = batch_shadows(mats, 3)
        np.testing.assert_allclose(bs.batches[0], mats[:2].mean(axis=0))
        np.testing.assert_allclose(bs.batches[2], mats[4:6].mean(axis=0))

    def test_too_many_batches_rejected(self, rng):
        mats = np.array([hermitian_unit_trace(rng, 2) for _ in range(3)])
        with pytest.raises(ValueError):
            batch_shadows(mats, 4)


class TestUStatistic:
    def test_identical_batches_give_power_trace(self, rng):
        sigma = hermitian_unit_trace(rng, 4)
        bs = batch_set_from([sigma] * 6)
        for k in (2, 3, 4):
            expected = np.trace(np.linalg.matrix_power(sigma, k)).real
            assert u_statistic_moment(bs, k) == pytest.approx(expected, rel=1e-12)

    def test_hand_enumerated_three_batches(self, rng):
        mats = [hermitian_unit_trace(rng, 4) for _ in range(3)]
        bs = batch_set_from(mats)
        pairs = [(i, j) for i in range(3) for j in range(3) if i != j]
        expected = np.mean([np.trace(mats[i] @ mats[j]).real for i, j in pairs])
        assert u_statistic_moment(bs, 2) == pytest.approx(expected, rel=1e-12)

    def test_matches_naive_enumeration(self, rng):
        mats = np.array([hermitian_unit_trace(rng, 4) for _ in range(8)])
        bs = batch_set_from(mats)
        for k in (2, 3, 4, 5):
            assert u_statistic_moment(bs, k) == pytest.approx(
                naive_u_statistic(mats, k), rel=1e-11
            )

    def test_k_out_of_range(self, rng):
        bs = batch_set_from([hermitian_unit_trace(rng, 2) for _ in range(3)])
        with pytest.raises(ValueError):
            u_statistic_moment(bs, 4)
        with pytest.raises(ValueError):
            u_statistic_moment(bs, 1)

    def test_moment_ordering_for_identical_batches(self, rng):
        sigma = hermitian_unit_trace(rng, 8)
        bs = batch_set_from([sigma] * 7)
        moments = compute_moments(bs, 6).moments
        for k in range(2, 6):
            assert moments[k + 1] <= moments[k] + 1e-12

    def test_backends_agree(self, rng):
        mats = np.ascontiguousarray(
            np.array([hermitian_unit_trace(rng, 8) for _ in range(7)])
        )
        for k in (2, 3, 5):
            t_sel, pb_sel = kernels.tuple_trace_sums(mats, k)
            t_np, pb_np = _kernels_np.tuple_trace_sums(mats, k)
            assert t_sel == pytest.approx(t_np, rel=1e-11)
            np.testing.assert_allclose(pb_sel, pb_np, rtol=1e-11)


class TestRenyiFromMoments:
    def test_trivial_values(self):
        table, dropped = renyi_from_moments(MomentEstimates({2: 1.0}))
        assert table[2] == pytest.approx(0.0)
        table, _ = renyi_from_moments(MomentEstimates({2: 0.25}))
        assert table[2] == pytest.approx(2.0)
        table, _ = renyi_from_moments(MomentEstimates({3: 0.1}))
        assert table[3] == pytest.approx(np.log2(0.1) / -2)

    def test_nonpositive_moments_dropped(self):
        table, dropped = renyi_from_moments(MomentEstimates({2: 0.5, 3: -0.01, 4: 0.1}))
        assert dropped == [3]
        assert set(table) == {2, 4}

    def test_exact_batches_reproduce_renyi(self, rng):
        rho = random_density_matrix(8, 5, seed=31)
        bs = batch_set_from([rho.matrix] * 7)
        table, dropped = renyi_from_moments(compute_moments(bs, 6))
        assert not dropped
        for k in range(2, 7):
            assert table[k] == pytest.approx(renyi_entropy(rho, k), abs=1e-10)


class TestJackknife:
    def test_identical_batches_zero_covariance(self, rng):
        sigma = hermitian_unit_trace(rng, 4)
        bs = batch_set_from([sigma] * 8)
        ds = jackknife(bs, k_max=4)
        np.testing.assert_allclose(ds.covariance, 0.0, atol=1e-18)

    def test_replicates_match_direct_recompute(self, rng):
        mats = np.array([hermitian_unit_trace(rng, 4) for _ in range(4)])
        n_b = 4
        totals, per_batch = kernels.tuple_trace_sums(np.ascontiguousarray(mats), 2)
        for b in range(n_b):
            subset = batch_set_from(np.delete(mats, b, axis=0))
            direct = u_statistic_moment(subset, 2)
            fast = 2 * (totals - per_batch[b]) / ((n_b - 1) * (n_b - 2))
            assert fast == pytest.approx(direct, rel=1e-12)

    def test_covariance_symmetric_psd(self):
        state = xy_quench(6, 420.0, 4200.0, 1.2, 0.004)
        shadows = sample_shadows(state, [0, 1, 2], n_unitaries=120, n_shots=20, seed=8)
        ds = jackknife(batch_shadows(shadows, 8), k_max=5)
        C = ds.covariance
        assert np.max(np.abs(C - C.T)) < 1e-14
        assert np.linalg.eigvalsh(C).min() > -1e-14

    def test_requires_enough_batches(self, rng):
        bs = batch_set_from([hermitian_unit_trace(rng, 2) for _ in range(4)])
        with pytest.raises(ValueError):
            jackknife(bs, k_max=4)

    def test_mean_close_to_exact_for_exact_batches(self, rng):
        rho = random_density_matrix(8, 4, seed=77)
        bs = batch_set_from([rho.matrix] * 8)
        ds = jackknife(bs, k_max=5)
        for i, k in enumerate(ds.orders):
            assert ds.values[i] == pytest.approx(renyi_entropy(rho, k), abs=1e-9)
