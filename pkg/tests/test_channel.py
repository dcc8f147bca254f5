import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmimo.channel import (LinkChannel, PowerControlPolicy, PropagationParams,
                           build_link, path_gain, power_control,
                           sample_rayleigh, sample_shadowing)

PARAMS = PropagationParams()
POLICY = PowerControlPolicy()


class TestPathGain:
    def test_one_km_reference(self):
        # 103.4 dB loss at 1 km
        assert_allclose(path_gain(1000.0, PARAMS), 10 ** (-10.34), rtol=1e-12)

    def test_decade_slope(self):
        # one decade of distance adds 24.2 dB
        g10 = path_gain(10_000.0, PARAMS)
        assert_allclose(10 * np.log10(g10), -127.6, atol=1e-10)

    def test_log_domain_oracle_50m(self):
        loss_db = 103.4 + 24.2 * np.log10(50.0 / 1000.0)
        assert_allclose(path_gain(50.0, PARAMS), 10 ** (-loss_db / 10),
                        rtol=1e-12)

    def test_clamped_below_floor(self):
        assert path_gain(0.0, PARAMS) == path_gain(PARAMS.distance_floor_m, PARAMS)

    def test_strictly_decreasing(self):
        d = np.linspace(1, 500, 200)
        g = path_gain(d, PARAMS)
        assert np.all(np.diff(g) < 0)

    def test_gain_const_consistency(self):
        # G * d^-alpha form agrees with the dB law (d in meters)
        d = 73.0
        assert_allclose(PARAMS.gain_const * d ** (-PARAMS.alpha),
                        path_gain(d, PARAMS), rtol=1e-12)


class TestShadowing:
    def test_degenerate(self):
        assert sample_shadowing(0.0, np.random.default_rng(0)) == 1.0

    def test_db_mean_near_zero(self):
        rng = np.random.default_rng(1)
        s = sample_shadowing(8.0, rng, size=10_000)
        db = 10 * np.log10(s)
        assert abs(db.mean()) < 0.25

    def test_linear_mean_exceeds_one(self):
        # lognormal mean exceeds the median
        rng = np.random.default_rng(2)
        s = sample_shadowing(8.0, rng, size=10_000)
        assert s.mean() > 1.0


class TestRayleigh:
    def test_unit_power(self):
        rng = np.random.default_rng(3)
        f = sample_rayleigh(4, rng, size=2500)
        power = np.mean(np.abs(f) ** 2)
        assert abs(power - 1.0) < 0.05

    def test_shape(self):
        f = sample_rayleigh(4, np.random.default_rng(4))
        assert f.shape == (4,)

    def test_components_uncorrelated(self):
        rng = np.random.default_rng(5)
        f = sample_rayleigh(1, rng, size=20_000).ravel()
        corr = np.mean(f.real * f.imag)
        assert abs(corr) < 0.02


class TestPowerControl:
    def test_exactly_at_cap(self):
        p, sat = power_control(1e-10, POLICY)
        assert_allclose(p, 0.1, rtol=1e-12)   # 20 dBm
        assert not sat

    def test_capped(self):
        p, sat = power_control(1e-12, POLICY)
        assert p == POLICY.p_max_w
        assert sat

    def test_db_domain_oracle(self):
        p, sat = power_control(1e-8, POLICY)
        assert_allclose(p, 1e-3, rtol=1e-12)
        assert not sat

    def test_received_power_hits_target_when_not_saturated(self):
        rng = np.random.default_rng(6)
        gains = 10 ** rng.uniform(-10, -6, 100)
        p, sat = power_control(gains, POLICY)
        received = p * gains
        ok = ~sat
        assert ok.all()
        assert_allclose(received[ok], POLICY.target_rx_power_w, rtol=1e-9)


class TestBuildLink:
    def test_degenerate_fading_recovers_path_gain(self):
        params = PropagationParams(sigma_db=0.0)
        link = build_link((0, 0), (100, 0), 2, params, POLICY,
                          np.random.default_rng(0),
                          fading=np.ones(2, dtype=complex))
        assert_allclose(np.abs(link.gain_vector) ** 2,
                        path_gain(100.0, params), rtol=1e-12)

    def test_mean_gain_moment(self):
        params = PropagationParams(sigma_db=0.0)
        rng = np.random.default_rng(1)
        links = [build_link((0, 0), (60, 0), 1, params, POLICY, rng)
                 for _ in range(4000)]
        mg = links[0].mean_gain
        emp = np.mean([np.abs(l.gain_vector[0]) ** 2 for l in links])
        assert abs(emp / mg - 1.0) < 0.03

    def test_shadowing_shared_across_antennas(self):
        rng = np.random.default_rng(2)
        link = build_link((0, 0), (80, 0), 4, PARAMS, POLICY, rng,
                          fading=np.ones(4, dtype=complex))
        # identical per-antenna scaling: one shadowing draw for the pair
        assert_allclose(np.abs(link.gain_vector), np.abs(link.gain_vector[0]),
                        rtol=1e-12)

    def test_power_from_serving_gain(self):
        rng = np.random.default_rng(3)
        link = build_link((0, 0), (200, 0), 1, PARAMS, POLICY, rng,
                          serving_mean_gain=1e-8)
        assert_allclose(link.tx_power, 1e-3, rtol=1e-12)
        assert isinstance(link, LinkChannel)


def test_shadowing_rejects_negative_spread():
    with pytest.raises(ValueError):
        sample_shadowing(-1.0, np.random.default_rng(0))
