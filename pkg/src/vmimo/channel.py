"""Propagation and power control.

The channel stack has three multiplicative pieces: a log-distance path loss
(103.4 + 24.2 log10(d_km) dB at 2 GHz by default), log-normal shadowing with
a configurable dB-spread, and unit-power Rayleigh fast fading per receive
antenna. Transmit powers come from a power-control rule that inverts the
mean gain (path loss x shadowing only) toward a target received power,
capped at a maximum.

All sampling helpers broadcast over numpy arrays so a whole link table can
be built in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PropagationParams",
    "PowerControlPolicy",
    "LinkChannel",
    "dbm_to_watts",
    "watts_to_dbm",
    "path_gain",
    "sample_shadowing",
    "sample_rayleigh",
    "power_control",
    "build_link",
]


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(watts: float) -> float:
    return 10.0 * np.log10(watts / 1e-3)


@dataclass(frozen=True)
class PropagationParams:
    """Path loss law and noise floor.

    pl_intercept_db is the loss at 1 km; pl_slope_db the loss added per
    decade of distance, so the implied path-loss exponent is slope / 10.
    Distances below distance_floor_m are clamped before the (divergent)
    power law is applied.
    """

    pl_intercept_db: float = 103.4
    pl_slope_db: float = 24.2
    sigma_db: float = 8.0
    noise_power_dbm: float = -101.0
    distance_floor_m: float = 0.5

    @property
    def alpha(self) -> float:
        """Path-loss exponent implied by the dB/decade slope."""
        return self.pl_slope_db / 10.0

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watts(self.noise_power_dbm)

    @property
    def gain_const(self) -> float:
        """Linear gain G such that path gain = G * d_m^(-alpha), d in meters."""
        return 10.0 ** (-(self.pl_intercept_db - 3.0 * self.pl_slope_db) / 10.0)


@dataclass(frozen=True)
class PowerControlPolicy:
    target_rx_power_dbm: float = -80.0
    p_max_dbm: float = 20.0

    @property
    def target_rx_power_w(self) -> float:
        return dbm_to_watts(self.target_rx_power_dbm)

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.p_max_dbm)


@dataclass
class LinkChannel:
    """One transmitter-to-receiver link.

    gain_vector holds one complex amplitude per receive antenna and already
    includes sqrt(mean_gain); mean_gain is path loss x shadowing (fast
    fading excluded); tx_power is the transmitter's power-controlled level.
    """

    gain_vector: np.ndarray
    mean_gain: float
    tx_power: float
    saturated: bool = False


def path_gain(d_m, params: PropagationParams):
    """Linear power gain of the path-loss law at distance d_m meters.

    Scalar in, scalar out; arrays broadcast. Distances are clamped at the
    configured floor first.
    """
    d = np.maximum(np.asarray(d_m, dtype=float), params.distance_floor_m)
    loss_db = params.pl_intercept_db + params.pl_slope_db * np.log10(d / 1000.0)
    out = 10.0 ** (-loss_db / 10.0)
    return float(out) if np.ndim(d_m) == 0 else out


def sample_shadowing(sigma_db: float, rng: np.random.Generator, size=None):
    """Log-normal shadowing as a linear gain, 10^(sigma_db * V / 10)."""
    if sigma_db < 0:
        raise ValueError("sigma_db must be >= 0")
    if sigma_db == 0.0:
        return 1.0 if size is None else np.ones(size)
    v = rng.standard_normal(size)
    return 10.0 ** (sigma_db * v / 10.0)


def sample_rayleigh(n_rx: int, rng: np.random.Generator, size=None):
    """Circularly-symmetric complex Gaussian fading, E[|entry|^2] = 1.

    Returns shape (n_rx,) by default, or size + (n_rx,) when size is given.
    """
    if n_rx < 1:
        raise ValueError("n_rx must be >= 1")
    shape = (n_rx,) if size is None else tuple(np.atleast_1d(size)) + (n_rx,)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def power_control(mean_gain, policy: PowerControlPolicy):
    """Transmit power (watts) inverting mean_gain toward the target receive
    power, capped at p_max. Returns (power_w, saturated); broadcasts.
    """
    required = policy.target_rx_power_w / np.asarray(mean_gain, dtype=float)
    power = np.minimum(policy.p_max_w, required)
    saturated = required > policy.p_max_w
    if np.ndim(mean_gain) == 0:
        return float(power), bool(saturated)
    return power, saturated


def build_link(tx, rx, n_rx: int, params: PropagationParams,
               policy: PowerControlPolicy, rng: np.random.Generator,
               serving_mean_gain: float | None = None,
               shadowing: float | None = None,
               fading: np.ndarray | None = None) -> LinkChannel:
    """Assemble a LinkChannel from endpoints.

    Shadowing is drawn once per (tx, rx) pair and shared across that pair's
    receive antennas. The transmit power is power-controlled against
    ``serving_mean_gain`` (the transmitter's link to its serving AP); when
    omitted, this link's own mean gain is used, i.e. rx is the serving AP.
    ``shadowing``/``fading`` override the random draws (used by tests and by
    the vectorized table builders to share draws across directions).
    """
    from .geometry import distance as _dist

    d = _dist(tx, rx)
    pg = path_gain(d, params)
    if shadowing is None:
        shadowing = sample_shadowing(params.sigma_db, rng)
    mean_gain = pg * shadowing
    if fading is None:
        fading = sample_rayleigh(n_rx, rng)
    gain_vector = np.sqrt(mean_gain) * np.asarray(fading, dtype=complex)
    ref_gain = mean_gain if serving_mean_gain is None else serving_mean_gain
    tx_power, saturated = power_control(ref_gain, policy)
    return LinkChannel(gain_vector=gain_vector, mean_gain=float(mean_gain),
                       tx_power=tx_power, saturated=saturated)
