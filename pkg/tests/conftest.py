"""Shared builders for small hand-checkable network states."""

import numpy as np
import pytest

from vmimo.rates import NetworkState


def make_state(n_rx=2, n_ue=6, n_src=2, n_ap=2, n_agg=0, noise=1.0, seed=0,
               channel_scale=1.0):
    """Random toy network: the first n_src devices are the sources, the rest
    are idle. Channel amplitudes are O(channel_scale), powers O(1)."""
    rng = np.random.default_rng(seed)
    ue_ap = channel_scale * (rng.standard_normal((n_ue, n_ap, n_rx))
                             + 1j * rng.standard_normal((n_ue, n_ap, n_rx))) / np.sqrt(2)
    power = rng.uniform(0.5, 2.0, n_ue)
    sources = tuple(range(n_src))
    dest = {s: s % n_ap for s in sources}
    src_ue = {}
    for s in sources:
        row = channel_scale * (rng.standard_normal(n_ue)
                               + 1j * rng.standard_normal(n_ue)) / np.sqrt(2)
        row[s] = 0.0
        src_ue[s] = row
    if n_agg:
        agg_ap = channel_scale * (rng.standard_normal((n_agg, n_ap, n_rx))
                                  + 1j * rng.standard_normal((n_agg, n_ap, n_rx))) / np.sqrt(2)
        agg_power = rng.uniform(0.2, 1.0, n_agg)
        agg_ue = channel_scale * (rng.standard_normal((n_agg, n_ue))
                                  + 1j * rng.standard_normal((n_agg, n_ue))) / np.sqrt(2)
    else:
        agg_ap = agg_power = agg_ue = None
    return NetworkState(n_rx=n_rx, noise_power=noise, ue_ap=ue_ap,
                        power=power, sources=sources, dest=dest,
                        src_ue=src_ue, agg_ap=agg_ap, agg_power=agg_power,
                        agg_ue=agg_ue)


def make_clean_state(n_rx, gamma, power=1.0, noise=1.0):
    """Single source, no interference, channel scaled so that
    power * ||h||^2 / noise = gamma exactly."""
    h = np.ones(n_rx, dtype=complex) * np.sqrt(gamma * noise / power / n_rx)
    ue_ap = h.reshape(1, 1, n_rx)
    return NetworkState(n_rx=n_rx, noise_power=noise, ue_ap=ue_ap,
                        power=np.array([power]), sources=(0,), dest={0: 0},
                        src_ue={0: np.zeros(1, dtype=complex)})


@pytest.fixture
def toy_state():
    return make_state()
