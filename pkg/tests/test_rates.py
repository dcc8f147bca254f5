import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import make_clean_state, make_state
from vmimo.linalg import mmse_sinr
from vmimo.rates import (Cluster, aggregate_capacity, augmented_channel,
                         capacity, cluster_channel_matrix, effective_sinr_db,
                         energy_per_bit, harmonic_mean, phase1_covariance,
                         phase2_covariance, rate_from_effective_sinr_db,
                         source_relay_rate, unassisted_rate, vmimo_covariance,
                         vmimo_rate)


def outer(h):
    return np.outer(h, h.conj())


def attach_cluster(state, source, relays, weights=None):
    w = np.ones(len(relays) + 1, dtype=complex) if weights is None else weights
    c = Cluster(source=source, relays=tuple(relays), weights=w)
    state.clusters.append(c)
    state.unassisted.remove(source)
    return c


class TestPhase1Covariance:
    def test_single_source_is_noise_only(self):
        st = make_clean_state(3, gamma=2.0, noise=0.7)
        assert_allclose(phase1_covariance(st, 0, 0), 0.7 * np.eye(3),
                        atol=1e-15)

    def test_matches_direct_summation(self):
        st = make_state(n_src=3, n_agg=2, seed=11)
        k = phase1_covariance(st, victim=1, dest=0)
        oracle = st.noise_power * np.eye(st.n_rx, dtype=complex)
        for j in (0, 2):
            oracle += st.power[j] * outer(st.ue_ap[j, 0])
        for a in range(2):
            oracle += st.agg_power[a] * outer(st.agg_ap[a, 0])
        assert_allclose(k, oracle, rtol=1e-12)

    def test_aggressor_increases_diagonal(self):
        quiet = make_state(n_src=2, n_agg=0, seed=12)
        loud = make_state(n_src=2, n_agg=1, seed=12)
        k0 = phase1_covariance(quiet, 0, 0)
        k1 = phase1_covariance(loud, 0, 0)
        assert np.all(np.diag(k1).real >= np.diag(k0).real)
        assert np.any(np.diag(k1).real > np.diag(k0).real)


class TestPhase2Covariance:
    def test_no_clusters_equals_phase1(self):
        st = make_state(n_src=3, n_agg=1, seed=13)
        assert_allclose(phase2_covariance(st, 1, 0),
                        phase1_covariance(st, 1, 0), rtol=1e-14)

    def test_cluster_term_is_rank_one(self):
        st = make_state(n_src=2, n_ue=6, seed=14, noise=1e-9)
        attach_cluster(st, 0, (3, 4))
        k = phase2_covariance(st, victim=1, dest=1)
        # victim 1 unassisted: only the cluster contributes above the noise
        sv = np.linalg.svd(k - 1e-9 * np.eye(st.n_rx), compute_uv=False)
        assert sv[0] > 1e-6
        assert sv[1] < 1e-12

    def test_matches_outer_product_oracle(self):
        st = make_state(n_src=3, n_ue=8, n_agg=2, seed=15)
        c = attach_cluster(st, 0, (4, 5),
                           weights=np.array([1.0, 1j, -1.0], dtype=complex))
        k = phase2_covariance(st, victim=2, dest=0)
        beam = cluster_channel_matrix(st, c, 0) @ c.weights
        oracle = st.noise_power * np.eye(st.n_rx, dtype=complex) + outer(beam)
        oracle += st.power[1] * outer(st.ue_ap[1, 0])
        for a in range(2):
            oracle += st.agg_power[a] * outer(st.agg_ap[a, 0])
        assert_allclose(k, oracle, rtol=1e-12)


class TestUnassistedRate:
    def test_interference_free_symmetric_phases(self):
        st = make_clean_state(4, gamma=3.0)
        assert_allclose(unassisted_rate(st, 0, 0), capacity(3.0), rtol=1e-12)

    def test_zero_channel(self):
        st = make_clean_state(2, gamma=1.0)
        st.ue_ap[0, 0] = 0.0
        assert unassisted_rate(st, 0, 0) == 0.0

    def test_matches_explicit_inverse(self):
        st = make_state(n_src=2, seed=16)
        h = np.sqrt(st.power[0]) * st.ue_ap[0, 0]
        k1 = phase1_covariance(st, 0, 0)
        k2 = phase2_covariance(st, 0, 0)
        oracle = 0.5 * (capacity(np.real(h.conj() @ np.linalg.inv(k1) @ h))
                        + capacity(np.real(h.conj() @ np.linalg.inv(k2) @ h)))
        assert_allclose(unassisted_rate(st, 0, 0), oracle, rtol=1e-9)


class TestAugmentedChannel:
    def test_lone_source_repeats(self):
        st = make_clean_state(3, gamma=2.0)
        c = Cluster(source=0, relays=(), weights=np.ones(1))
        h = augmented_channel(st, c, 0)
        top = np.sqrt(st.power[0]) * st.ue_ap[0, 0]
        assert_allclose(h[:3], top, rtol=1e-14)
        assert_allclose(h[3:], top, rtol=1e-14)

    def test_coherent_sum_scalar(self):
        # one receive antenna, unit channels and powers, two helpers,
        # all-ones weights: the slot-two entry is 3
        st = make_state(n_rx=1, n_ue=3, n_src=1, seed=17)
        st.ue_ap[:, 0, 0] = 1.0
        st.power[:] = 1.0
        c = attach_cluster(st, 0, (1, 2))
        h = augmented_channel(st, c, 0)
        assert_allclose(h[1], 3.0 + 0j, rtol=1e-14)

    def test_matches_direct_product(self):
        st = make_state(n_src=1, n_ue=5, seed=18)
        w = np.exp(2j * np.pi * np.array([0, 1, 3]) / 4)
        w[0] = 1.0
        c = attach_cluster(st, 0, (2, 4), weights=w)
        h = augmented_channel(st, c, 0)
        hm = cluster_channel_matrix(st, c, 0)
        assert_allclose(h[st.n_rx:], hm @ w, rtol=1e-13)

    def test_dimension_mismatch(self):
        st = make_state(seed=19)
        with pytest.raises(ValueError):
            Cluster(source=0, relays=(2,), weights=np.ones(3))


class TestVmimoCovariance:
    def test_lone_cluster_noise_only(self):
        st = make_clean_state(2, gamma=1.0, noise=0.3)
        c = Cluster(source=0, relays=(), weights=np.ones(1))
        assert_allclose(vmimo_covariance(st, c, 0), 0.3 * np.eye(4),
                        atol=1e-15)

    def test_unassisted_interferer_block_diagonal(self):
        st = make_state(n_src=2, seed=20)
        c = attach_cluster(st, 0, (3,))
        k = vmimo_covariance(st, c, 0)
        n = st.n_rx
        assert np.all(k[:n, n:] == 0)
        assert np.all(k[n:, :n] == 0)

    def test_full_term_by_term_oracle(self):
        st = make_state(n_src=3, n_ue=9, n_agg=2, seed=21)
        c0 = attach_cluster(st, 0, (4, 5))
        c1 = attach_cluster(st, 1, (6,),
                            weights=np.array([1.0, -1j], dtype=complex))
        n = st.n_rx
        k = vmimo_covariance(st, c0, 0)
        oracle = st.noise_power * np.eye(2 * n, dtype=complex)
        oracle += outer(augmented_channel(st, c1, 0))
        blk = st.power[2] * outer(st.ue_ap[2, 0])
        oracle[:n, :n] += blk
        oracle[n:, n:] += blk
        for a in range(2):
            ab = st.agg_power[a] * outer(st.agg_ap[a, 0])
            oracle[:n, :n] += ab
            oracle[n:, n:] += ab
        assert_allclose(k, oracle, rtol=1e-12)


class TestAggregateCapacity:
    def test_repetition_combining_doubles_sinr(self):
        st = make_clean_state(4, gamma=2.5)
        c = Cluster(source=0, relays=(), weights=np.ones(1))
        assert_allclose(aggregate_capacity(st, c, 0), capacity(5.0),
                        rtol=1e-12)

    def test_aligned_helpers_reach_coherent_gain(self):
        # one antenna, k helpers with aligned phases and equal received SNR
        # gamma: combined SINR is gamma + gamma (k+1)^2
        gamma, k = 0.8, 3
        st = make_state(n_rx=1, n_ue=k + 1, n_src=1, seed=22, noise=1.0)
        st.power[:] = 1.0
        st.ue_ap[:, 0, 0] = np.sqrt(gamma)
        c = attach_cluster(st, 0, tuple(range(1, k + 1)))
        assert_allclose(aggregate_capacity(st, c, 0),
                        capacity(gamma + gamma * (k + 1) ** 2), rtol=1e-12)

    def test_matches_explicit_inverse(self):
        st = make_state(n_src=2, n_ue=7, n_agg=1, seed=23)
        c = attach_cluster(st, 0, (3, 5))
        h = augmented_channel(st, c, 0)
        k = vmimo_covariance(st, c, 0)
        oracle = capacity(np.real(h.conj() @ np.linalg.inv(k) @ h))
        assert_allclose(aggregate_capacity(st, c, 0), oracle, rtol=1e-9)


class TestSourceRelayRate:
    def test_interference_free(self):
        st = make_state(n_src=1, n_ue=4, seed=24)
        expected = capacity(st.power[0] * abs(st.src_ue[0][2]) ** 2
                            / st.noise_power)
        assert_allclose(source_relay_rate(st, 0, 2), expected, rtol=1e-12)

    def test_zero_channel(self):
        st = make_state(n_src=1, n_ue=4, seed=25)
        st.src_ue[0][3] = 0.0
        assert source_relay_rate(st, 0, 3) == 0.0

    def test_two_source_scalar_oracle(self):
        st = make_state(n_src=2, n_ue=5, n_agg=1, seed=26)
        num = st.power[0] * abs(st.src_ue[0][4]) ** 2
        den = (st.noise_power + st.power[1] * abs(st.src_ue[1][4]) ** 2
               + st.agg_power[0] * abs(st.agg_ue[0, 4]) ** 2)
        assert_allclose(source_relay_rate(st, 0, 4),
                        math.log2(1 + num / den), rtol=1e-12)


class TestVmimoRate:
    def test_decode_constraint_binds(self):
        st = make_state(n_src=1, n_ue=3, seed=27)
        c = attach_cluster(st, 0, (1, 2))
        st.src_ue[0][1] = 0.05        # weak decode link
        r_min = min(source_relay_rate(st, 0, 1), source_relay_rate(st, 0, 2))
        assert r_min < aggregate_capacity(st, c, 0)
        assert_allclose(vmimo_rate(st, c, 0), 0.5 * r_min, rtol=1e-12)

    def test_capacity_binds_when_links_strong(self):
        st = make_state(n_src=1, n_ue=3, seed=28)
        st.src_ue[0][1:] = 100.0
        c = attach_cluster(st, 0, (1, 2))
        assert_allclose(vmimo_rate(st, c, 0),
                        0.5 * aggregate_capacity(st, c, 0), rtol=1e-12)

    def test_min_over_enumerated_terms(self):
        st = make_state(n_src=2, n_ue=8, n_agg=1, seed=29)
        c = attach_cluster(st, 0, (3, 4, 6))
        terms = [aggregate_capacity(st, c, 0)] + [
            source_relay_rate(st, 0, l) for l in (3, 4, 6)]
        assert_allclose(vmimo_rate(st, c, 0), 0.5 * min(terms), rtol=1e-12)

    def test_never_exceeds_half_capacity(self):
        for seed in range(5):
            st = make_state(n_src=2, n_ue=8, seed=seed)
            c = attach_cluster(st, 0, (4, 5))
            assert vmimo_rate(st, c, 0) <= 0.5 * aggregate_capacity(st, c, 0) + 1e-12


class TestEffectiveSinr:
    def test_unit_rate_is_zero_db(self):
        assert_allclose(effective_sinr_db(1.0), 0.0, atol=1e-12)

    def test_ten_db(self):
        assert_allclose(effective_sinr_db(math.log2(11.0)), 10.0, atol=1e-12)

    def test_roundtrip(self):
        for r in np.linspace(0.01, 20, 50):
            back = rate_from_effective_sinr_db(effective_sinr_db(r))
            assert_allclose(back, r, rtol=1e-12)

    def test_zero_rate_sentinel(self):
        assert effective_sinr_db(0.0) == -math.inf
        assert rate_from_effective_sinr_db(-math.inf) == 0.0


class TestHarmonicMean:
    def test_idempotent_on_equal_rates(self):
        assert_allclose(harmonic_mean([1.7, 1.7, 1.7]), 1.7, rtol=1e-14)

    def test_floor_domination(self):
        floor = capacity(0.1)
        hm = harmonic_mean([1.0, 1.0, 1e-9], floor=floor)
        assert hm <= 3 * floor + 1e-12
        assert hm > 0

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            r = rng.uniform(0.2, 5.0, rng.integers(1, 8))
            assert_allclose(harmonic_mean(r), len(r) / np.sum(1.0 / r),
                            rtol=1e-12)

    def test_exclusion_mode(self):
        floor = 0.5
        hm = harmonic_mean([1.0, 2.0, 0.1], floor=floor, exclude_below=True)
        assert_allclose(hm, 2 / (1.0 + 0.5), rtol=1e-12)

    def test_bounded_by_m_times_min(self):
        rng = np.random.default_rng(31)
        r = rng.uniform(0.1, 4.0, 6)
        assert harmonic_mean(r) <= len(r) * r.min() + 1e-12


class TestEnergyPerBit:
    def test_single_source_definition(self):
        # two slots of power, two slots of bits
        e = energy_per_bit([0.1], [], [2.0], slot_duration_s=1e-3,
                           bandwidth_hz=1.0)
        assert_allclose(e, 0.1 / 2.0, rtol=1e-14)

    def test_zero_gain_relay_strictly_increases(self):
        base = energy_per_bit([0.1], [], [2.0])
        with_relay = energy_per_bit([0.1], [0.05], [2.0])
        assert with_relay > base

    def test_all_zero_rates_undefined(self):
        with pytest.raises(ValueError):
            energy_per_bit([0.1], [], [0.0])

    def test_bandwidth_scaling(self):
        assert_allclose(energy_per_bit([0.2], [], [1.0], bandwidth_hz=2.0),
                        0.5 * energy_per_bit([0.2], [], [1.0]), rtol=1e-14)


class TestStructuralInvariants:
    def test_empty_cluster_doubles_sinr_of_each_phase(self):
        # interference-free: stacking two identical slots doubles the
        # combined SINR relative to one slot
        st = make_clean_state(3, gamma=1.9)
        c = Cluster(source=0, relays=(), weights=np.ones(1))
        h1 = np.sqrt(st.power[0]) * st.ue_ap[0, 0]
        s1 = mmse_sinr(h1, phase1_covariance(st, 0, 0))
        s2 = mmse_sinr(augmented_channel(st, c, 0), vmimo_covariance(st, c, 0))
        assert_allclose(s2, 2 * s1, rtol=1e-12)

    def test_phase2_dominates_noise(self):
        st = make_state(n_src=2, n_ue=7, n_agg=1, seed=32)
        attach_cluster(st, 0, (3,))
        k = phase2_covariance(st, 1, 0)
        diff = k - st.noise_power * np.eye(st.n_rx)
        # PSD check via eigenvalues of the Hermitian difference
        assert np.linalg.eigvalsh(diff).min() >= -1e-12

    def test_weight_rotation_then_renormalization_is_identity(self):
        st = make_state(n_src=1, n_ue=4, seed=33)
        w = np.exp(2j * np.pi * np.array([0, 1, 2]) / 4)
        w[0] = 1.0
        c = attach_cluster(st, 0, (1, 2), weights=w)
        r0 = vmimo_rate(st, c, 0)
        for k in range(4):
            rot = np.exp(2j * np.pi * k / 4) * w
            rot = rot * np.conj(rot[0])
            rot[0] = 1.0
            c2 = Cluster(source=0, relays=(1, 2), weights=rot)
            st.clusters[0] = c2
            assert_allclose(vmimo_rate(st, c2, 0), r0, rtol=1e-12)
