"""Two-phase uplink rate engine.

A scheduled source either transmits alone in both slots, or is assisted by a
cluster of idle devices: in slot one the source broadcasts and the cluster
decodes, in slot two source and cluster repeat the codeword with per-device
unit-modulus weights. The access point MMSE-combines both slots.

This module assembles the interference covariances seen by each victim,
evaluates the resulting spectral efficiencies, and provides the scalar
metrics used in reporting (effective SINR, floored harmonic mean, energy
per delivered bit).

Conventions: channel vectors exclude transmit power; powers multiply in as
sqrt(P) when signals are stacked. Unassisted transmitters send independent
symbols in the two slots, so their two-slot covariance contribution is
block-diagonal, while an assisted cluster repeats one symbol and
contributes a full rank-one outer product across slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import hermitian_factor, factor_solve, mmse_sinr

__all__ = [
    "Cluster",
    "NetworkState",
    "SourceReport",
    "RateReport",
    "capacity",
    "phase1_covariance",
    "phase2_covariance",
    "unassisted_rate",
    "cluster_channel_matrix",
    "augmented_channel",
    "vmimo_covariance",
    "aggregate_capacity",
    "source_relay_rate",
    "vmimo_rate",
    "effective_sinr_db",
    "rate_from_effective_sinr_db",
    "harmonic_mean",
    "energy_per_bit",
]


def capacity(sinr) -> float:
    """Shannon spectral efficiency log2(1 + sinr), bps/Hz."""
    return float(np.log2(1.0 + sinr))


@dataclass(frozen=True)
class Cluster:
    """One assisted source: its helper set and slot-two weight vector.

    ``weights`` has one entry per slot-two transmitter, ordered
    [source, relays...]; the source's entry is pinned to exactly 1 (the
    codeword phase reference), so only relay entries carry information.
    """

    source: int
    relays: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex)
        object.__setattr__(self, "weights", w)
        if len(w) != len(self.relays) + 1:
            raise ValueError("need one weight per slot-two transmitter")
        if w[0] != 1.0 + 0.0j:
            raise ValueError("source weight must be exactly 1")

    @property
    def members(self) -> tuple[int, ...]:
        return (self.source, *self.relays)


@dataclass
class NetworkState:
    """Everything the rate engine needs about one realized network.

    Channel amplitudes exclude transmit power. ``ue_ap[u, a]`` is the
    (n_rx,) vector from device u to access point a; ``src_ue[s]`` maps a
    scheduled source's UE index to its (n_ue,) scalar channel row toward
    every device (relays have one antenna). Aggressors are uncontrolled
    co-channel transmitters active in both slots.
    """

    n_rx: int
    noise_power: float
    ue_ap: np.ndarray                 # (n_ue, n_ap, n_rx) complex
    power: np.ndarray                 # (n_ue,) watts toward the serving AP
    sources: tuple[int, ...]          # scheduled UE indices
    dest: dict[int, int]              # source UE -> AP index
    src_ue: dict[int, np.ndarray] = field(default_factory=dict)
    agg_ap: np.ndarray | None = None  # (n_agg, n_ap, n_rx) complex
    agg_power: np.ndarray | None = None
    agg_ue: np.ndarray | None = None  # (n_agg, n_ue) complex
    relay_feasible: np.ndarray | None = None  # (n_ue, n_ap) bool: device may
                                              # serve as helper toward that AP
                                              # (None: anyone may help anyone)
    clusters: list[Cluster] = field(default_factory=list)
    unassisted: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.unassisted and not self.clusters:
            self.unassisted = list(self.sources)

    @property
    def n_agg(self) -> int:
        return 0 if self.agg_ap is None else len(self.agg_ap)

    def channel(self, ue: int, ap: int) -> np.ndarray:
        return self.ue_ap[ue, ap]

    def cluster_of(self, source: int) -> Cluster | None:
        for c in self.clusters:
            if c.source == source:
                return c
        return None


def _noise_eye(n: int, noise_power: float) -> np.ndarray:
    return noise_power * np.eye(n, dtype=complex)


def _aggressor_ap_terms(state: NetworkState, dest: int) -> np.ndarray:
    k = np.zeros((state.n_rx, state.n_rx), dtype=complex)
    if state.n_agg:
        for a in range(state.n_agg):
            h = state.agg_ap[a, dest]
            k += state.agg_power[a] * np.outer(h, h.conj())
    return k


def phase1_covariance(state: NetworkState, victim: int, dest: int) -> np.ndarray:
    """Slot-one interference-plus-noise covariance at AP ``dest`` for a
    victim source: every other scheduled source plus aggressors plus noise.
    """
    k = _noise_eye(state.n_rx, state.noise_power)
    for j in state.sources:
        if j == victim:
            continue
        h = state.channel(j, dest)
        k += state.power[j] * np.outer(h, h.conj())
    k += _aggressor_ap_terms(state, dest)
    return k


def phase2_covariance(state: NetworkState, victim: int, dest: int) -> np.ndarray:
    """Slot-two covariance for an unassisted victim: each cluster lands as a
    single rank-one beam, remaining unassisted sources and aggressors as
    independent transmitters, plus noise.
    """
    k = _noise_eye(state.n_rx, state.noise_power)
    for c in state.clusters:
        if c.source == victim:
            continue
        beam = cluster_channel_matrix(state, c, dest) @ c.weights
        k += np.outer(beam, beam.conj())
    for j in state.unassisted:
        if j == victim:
            continue
        h = state.channel(j, dest)
        k += state.power[j] * np.outer(h, h.conj())
    k += _aggressor_ap_terms(state, dest)
    return k


def unassisted_rate(state: NetworkState, s: int, dest: int) -> float:
    """Two-slot average rate of a source transmitting without helpers."""
    h = np.sqrt(state.power[s]) * state.channel(s, dest)
    r1 = capacity(mmse_sinr(h, phase1_covariance(state, s, dest)))
    r2 = capacity(mmse_sinr(h, phase2_covariance(state, s, dest)))
    return 0.5 * (r1 + r2)


def cluster_channel_matrix(state: NetworkState, cluster: Cluster,
                           dest: int) -> np.ndarray:
    """(n_rx, m+1) slot-two channel matrix: one sqrt(P)-scaled column per
    cluster member, source first.
    """
    cols = [np.sqrt(state.power[u]) * state.channel(u, dest)
            for u in cluster.members]
    return np.column_stack(cols)


def augmented_channel(state: NetworkState, cluster: Cluster,
                      dest: int) -> np.ndarray:
    """Stacked two-slot signal vector (2 n_rx,) of an assisted source:
    slot-one direct channel on top, weighted cluster beam below.
    """
    w = np.asarray(cluster.weights, dtype=complex)
    h_mat = cluster_channel_matrix(state, cluster, dest)
    if h_mat.shape[1] != len(w):
        raise ValueError("weight length does not match cluster size")
    top = np.sqrt(state.power[cluster.source]) * state.channel(cluster.source, dest)
    return np.concatenate([top, h_mat @ w])


def vmimo_covariance(state: NetworkState, victim: Cluster, dest: int) -> np.ndarray:
    """Two-slot stacked covariance for an assisted victim.

    Other clusters repeat one symbol across slots, so they contribute full
    outer products of their stacked vectors; unassisted sources and
    aggressors send independent symbols per slot and stay block-diagonal.
    """
    n = state.n_rx
    k = _noise_eye(2 * n, state.noise_power)
    for c in state.clusters:
        if c.source == victim.source:
            continue
        hj = augmented_channel(state, c, dest)
        k += np.outer(hj, hj.conj())
    for j in state.unassisted:
        if j == victim.source:
            continue
        h = state.channel(j, dest)
        blk = state.power[j] * np.outer(h, h.conj())
        k[:n, :n] += blk
        k[n:, n:] += blk
    if state.n_agg:
        agg = _aggressor_ap_terms(state, dest)
        k[:n, :n] += agg
        k[n:, n:] += agg
    return k


def aggregate_capacity(state: NetworkState, cluster: Cluster, dest: int) -> float:
    """Combined two-slot capacity of an assisted source (before the decode
    constraint and the repetition half)."""
    h = augmented_channel(state, cluster, dest)
    k = vmimo_covariance(state, cluster, dest)
    return capacity(mmse_sinr(h, k))


def source_relay_rate(state: NetworkState, s: int, l: int) -> float:
    """Slot-one decode rate at single-antenna device l listening to source
    s, with all other sources and aggressors as interference."""
    row = state.src_ue[s]
    num = state.power[s] * abs(row[l]) ** 2
    den = state.noise_power
    for j in state.sources:
        if j == s:
            continue
        den += state.power[j] * abs(state.src_ue[j][l]) ** 2
    if state.n_agg:
        den += float(np.sum(state.agg_power * np.abs(state.agg_ue[:, l]) ** 2))
    return capacity(num / den)


def vmimo_rate(state: NetworkState, cluster: Cluster, dest: int) -> float:
    """Achieved rate of an assisted source: half the minimum of the combined
    capacity and every helper's decode rate."""
    if not cluster.relays:
        raise ValueError("assisted rate needs a non-empty relay set")
    c = aggregate_capacity(state, cluster, dest)
    r_min = min(source_relay_rate(state, cluster.source, l)
                for l in cluster.relays)
    return 0.5 * min(c, r_min)


def effective_sinr_db(rate: float) -> float:
    """SINR (dB) a one-shot AWGN channel would need for this rate.

    rate = 0 maps to -inf.
    """
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if rate == 0.0:
        return -math.inf
    return 10.0 * math.log10(2.0 ** rate - 1.0)


def rate_from_effective_sinr_db(sinr_db: float) -> float:
    """Inverse of :func:`effective_sinr_db`."""
    if sinr_db == -math.inf:
        return 0.0
    return math.log2(1.0 + 10.0 ** (sinr_db / 10.0))


def harmonic_mean(rates, floor: float = 0.0, exclude_below: bool = False) -> float:
    """Harmonic mean of per-source rates, the fairness figure of merit.

    Entries below ``floor`` are either raised to it (default: a coverage
    threshold keeps one dead user from nulling the metric) or excluded
    entirely when ``exclude_below`` is set.
    """
    r = np.asarray(list(rates), dtype=float)
    if r.size == 0:
        raise ValueError("need at least one rate")
    if exclude_below:
        r = r[r >= floor]
        if r.size == 0:
            return 0.0
    else:
        r = np.maximum(r, floor)
    if np.any(r <= 0):
        return 0.0
    return float(len(r) / np.sum(1.0 / r))


def energy_per_bit(source_powers, relay_powers, rates,
                   slot_duration_s: float = 1e-3,
                   bandwidth_hz: float = 1.0) -> float:
    """Transmit energy per delivered bit for one trial, J/b.

    Sources burn power in both slots; relays in slot two only. Delivered
    bits are rate x two slots x bandwidth per source. Raises ValueError when
    no bits are delivered (caller excludes and counts such trials).
    """
    source_powers = np.asarray(list(source_powers), dtype=float)
    relay_powers = np.asarray(list(relay_powers), dtype=float)
    rates = np.asarray(list(rates), dtype=float)
    t = slot_duration_s
    energy = 2.0 * t * source_powers.sum() + t * relay_powers.sum()
    bits = 2.0 * t * bandwidth_hz * rates.sum()
    if bits <= 0:
        raise ValueError("no bits delivered; energy per bit undefined")
    return float(energy / bits)


@dataclass
class SourceReport:
    """Per-source outcome of one trial."""

    source: int
    dest: int
    baseline_rate: float
    rate: float
    assisted: bool
    n_relays: int
    feedback_bits: float
    tx_power_w: float
    relay_power_w: float

    @property
    def baseline_sinr_eff_db(self) -> float:
        return effective_sinr_db(self.baseline_rate)

    @property
    def sinr_eff_db(self) -> float:
        return effective_sinr_db(self.rate)


@dataclass
class RateReport:
    """Trial-level rate summary: per-source outcomes plus aggregates.

    energy entries are None when a trial delivered no bits on that side
    (callers count such exclusions).
    """

    per_source: list[SourceReport]
    harmonic_mean_bps_hz: float
    baseline_harmonic_mean_bps_hz: float
    energy_per_bit: float | None
    baseline_energy_per_bit: float | None

    @classmethod
    def build(cls, per_source: list[SourceReport], floor: float,
              exclude_below: bool = False, slot_duration_s: float = 1e-3,
              bandwidth_hz: float = 1.0) -> "RateReport":
        def _energy(rates, with_relays):
            try:
                return energy_per_bit(
                    [o.tx_power_w for o in per_source],
                    [o.relay_power_w for o in per_source] if with_relays else [],
                    rates, slot_duration_s=slot_duration_s,
                    bandwidth_hz=bandwidth_hz)
            except ValueError:
                return None

        return cls(
            per_source=per_source,
            harmonic_mean_bps_hz=harmonic_mean(
                [o.rate for o in per_source], floor, exclude_below),
            baseline_harmonic_mean_bps_hz=harmonic_mean(
                [o.baseline_rate for o in per_source], floor, exclude_below),
            energy_per_bit=_energy([o.rate for o in per_source], True),
            baseline_energy_per_bit=_energy(
                [o.baseline_rate for o in per_source], False),
        )


class CovarianceCache:
    """Cholesky-factored interference covariance reused across one sweep.

    The interference seen by a victim does not depend on its own tentative
    cluster, so candidate evaluations share one factorization.
    """

    def __init__(self, state: NetworkState, victim: Cluster | int, dest: int):
        source = victim if isinstance(victim, int) else victim.source
        probe = Cluster(source=source, relays=(), weights=np.ones(1))
        self.matrix = vmimo_covariance(state, probe, dest)
        self.factor = hermitian_factor(self.matrix)

    def solve(self, b):
        return factor_solve(self.factor, b)
