"""Relay clustering: greedy per-source sweep, multi-source pass, and an
exhaustive-search baseline.

The greedy sweep for one source discovers candidates whose decode rate
exceeds twice the source's current unassisted rate (anything slower would
bottleneck the two-slot repetition), sorts them by decode rate, and adds
them one at a time, keeping an addition only if the achieved rate strictly
improves. If the sweep never beats the unassisted rate the source keeps
transmitting alone.

The multi-source pass sorts sources by ascending unassisted rate (the
harmonic-mean utility is dominated by its weakest term, so underprivileged
sources pick helpers first), runs the sweep per source against a shrinking
idle pool, and never revisits earlier decisions: one round, no backhaul
coordination between access points.

The exhaustive baseline scores every assignment of idle devices to sources
under the same evaluation protocol, which makes it a certified upper
reference for the greedy pass on small instances.

Rate computations are delegated to an oracle object so the same sweep
drives both the scalar single-source study (equal AP-side SNRs, phases
only) and the full multi-antenna interference engine.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass

import numpy as np

from .precoding import (Codebook, PrecodingSolution, assemble_q,
                        solve_precoding)
from .rates import (Cluster, CovarianceCache, NetworkState, capacity,
                    harmonic_mean, unassisted_rate, vmimo_rate)

__all__ = [
    "ClusteringConfig",
    "SweepStep",
    "ClusterDecision",
    "ClusteringResult",
    "ScalarClusterOracle",
    "NetworkClusterOracle",
    "greedy_cluster",
    "cluster_sources",
    "exhaustive_cluster",
    "validate_trace",
]


@dataclass(frozen=True)
class ClusteringConfig:
    codebook: Codebook
    candidate_factor: float = 2.0     # decode rate must exceed this x baseline
    enum_threshold: int = 4096        # search-space size up to which brute force runs
    enum_cap: int = 2 ** 20
    exhaustive_cap: int = 10 ** 6
    rate_floor: float = 0.0           # coverage floor for the harmonic mean

    def __post_init__(self):
        if self.candidate_factor <= 0:
            raise ValueError("candidate_factor must be positive")


@dataclass(frozen=True)
class SweepStep:
    """One tentative relay addition during the greedy sweep."""

    relay: int
    relay_rate: float
    r_min: float
    ap_sinr: float
    rate: float
    accepted: bool


@dataclass
class ClusterDecision:
    """Outcome of the greedy sweep for one source."""

    source: int
    cluster: Cluster | None           # None: source stays unassisted
    rate: float                       # rate the sweep settled on
    baseline_rate: float              # unassisted rate used for eligibility
    trace: list[SweepStep]
    feedback_bits: float = 0.0
    method: str = ""

    @property
    def assisted(self) -> bool:
        return self.cluster is not None

    def trace_as_dicts(self) -> list[dict]:
        return [dataclasses.asdict(s) for s in self.trace]


@dataclass
class ClusteringResult:
    decisions: dict[int, ClusterDecision]
    rates_before: dict[int, float]
    rates_after: dict[int, float]
    objective: float                  # floored harmonic mean after clustering
    baseline_objective: float

    @property
    def clusters(self) -> list[Cluster]:
        return [d.cluster for d in self.decisions.values() if d.cluster]


class ScalarClusterOracle:
    """Single-source, single-antenna rate oracle.

    Every device is power-controlled to the same AP-side SNR ``gamma``, so
    the combined two-slot SINR with k coherent helpers is
    gamma * (1 + |sum of unit phasors|^2). ``relay_rates[l]`` is the decode
    rate from the source to idle device l and ``ap_phases[l]`` the phase of
    device l's channel to the AP (index 0 is the source itself).
    """

    scalar_mode = True

    def __init__(self, gamma: float, relay_rates: np.ndarray,
                 ap_phases: np.ndarray, codebook: Codebook):
        self.gamma = float(gamma)
        self.relay_rates = np.asarray(relay_rates, dtype=float)
        self.ap_phases = np.asarray(ap_phases, dtype=float)
        self.codebook = codebook
        self.sources = (0,)
        self._committed: Cluster | None = None

    def fork(self) -> "ScalarClusterOracle":
        return ScalarClusterOracle(self.gamma, self.relay_rates,
                                   self.ap_phases, self.codebook)

    def baseline_rate(self, s: int) -> float:
        # Without helpers the source falls back to one-slot transmission.
        return capacity(self.gamma)

    def relay_rate(self, s: int, l: int) -> float:
        return float(self.relay_rates[l])

    def usable(self, s: int, l: int) -> bool:
        return True

    def evaluate(self, s: int, relays: tuple[int, ...]) -> PrecodingSolution:
        cb = self.codebook
        theta = self.ap_phases[list(relays)]
        theta_s = self.ap_phases[0]
        if cb.is_continuous:
            k = len(relays)
            weights = np.concatenate(
                [[1.0], np.exp(1j * (theta_s - theta))])
            sinr = self.gamma * (1.0 + (k + 1) ** 2)
            method = "continuous"
        elif cb.n_w == 1:
            weights = np.ones(len(relays) + 1, dtype=complex)
            s_sum = np.exp(1j * theta_s) + np.sum(np.exp(1j * theta))
            sinr = self.gamma * (1.0 + abs(s_sum) ** 2)
            method = "enumeration"
        else:
            # Per-relay nearest-phase match against the source's phase:
            # O(1) per relay, the scalar-channel shortcut.
            idx = cb.quantize_phase(np.mod(theta_s - theta, 2.0 * np.pi))
            w_rel = np.exp(2j * np.pi * idx / cb.n_w)
            weights = np.concatenate([[1.0], w_rel])
            s_sum = np.exp(1j * theta_s) + np.sum(w_rel * np.exp(1j * theta))
            sinr = self.gamma * (1.0 + abs(s_sum) ** 2)
            method = "phase-quantized"
        return PrecodingSolution(weights=weights, objective=float(sinr),
                                 method=method)

    def commit(self, cluster: Cluster):
        self._committed = cluster

    def final_rates(self) -> dict[int, float]:
        c = self._committed
        if c is None or not c.relays:
            return {0: self.baseline_rate(0)}
        relays = list(c.relays)
        theta = self.ap_phases[relays]
        s_sum = np.exp(1j * self.ap_phases[0]) + np.sum(
            c.weights[1:] * np.exp(1j * theta))
        sinr = self.gamma * (1.0 + abs(s_sum) ** 2)
        r_min = float(np.min(self.relay_rates[relays]))
        return {0: 0.5 * min(capacity(sinr), r_min)}


class NetworkClusterOracle:
    """Full multi-source oracle over a :class:`NetworkState`.

    Committed clusters change the interference seen by everyone evaluated
    afterwards; the oracle is deliberately oblivious to how its own commits
    degrade earlier decisions (single-pass semantics).
    """

    scalar_mode = False

    def __init__(self, state: NetworkState, config: ClusteringConfig):
        self.state = state
        self.config = config
        self._relay_rate_rows: dict[int, np.ndarray] = {}
        self._cov_cache: dict = {}
        self._epoch = 0

    @property
    def sources(self) -> tuple[int, ...]:
        return tuple(self.state.sources)

    def fork(self) -> "NetworkClusterOracle":
        state = dataclasses.replace(
            self.state, clusters=[], unassisted=list(self.state.sources))
        other = NetworkClusterOracle(state, self.config)
        # decode rates depend only on the link tables, never on clustering
        other._relay_rate_rows = self._relay_rate_rows
        return other

    def baseline_rate(self, s: int) -> float:
        return unassisted_rate(self.state, s, self.state.dest[s])

    def relay_rate(self, s: int, l: int) -> float:
        return float(self.relay_rate_row(s)[l])

    def usable(self, s: int, l: int) -> bool:
        """Scope filter: the state may restrict which devices can assist
        toward a given AP (e.g. helpers drawn from the destination's own
        associated devices, which keeps coordination AP-local)."""
        feas = self.state.relay_feasible
        if feas is None:
            return True
        return bool(feas[l, self.state.dest[s]])

    def relay_rate_row(self, s: int) -> np.ndarray:
        row = self._relay_rate_rows.get(s)
        if row is None:
            st = self.state
            num = st.power[s] * np.abs(st.src_ue[s]) ** 2
            den = np.full(num.shape, st.noise_power)
            for j in st.sources:
                if j != s:
                    den += st.power[j] * np.abs(st.src_ue[j]) ** 2
            if st.n_agg:
                den += (st.agg_power[:, None] * np.abs(st.agg_ue) ** 2).sum(axis=0)
            row = np.log2(1.0 + num / den)
            self._relay_rate_rows[s] = row
        return row

    def _cov(self, s: int) -> CovarianceCache:
        key = (s, self._epoch)
        cache = self._cov_cache.get(key)
        if cache is None:
            cache = CovarianceCache(self.state, s, self.state.dest[s])
            self._cov_cache = {key: cache}
        return cache

    def evaluate(self, s: int, relays: tuple[int, ...]) -> PrecodingSolution:
        probe = Cluster(source=s, relays=relays,
                        weights=np.ones(len(relays) + 1, dtype=complex))
        problem = assemble_q(self.state, probe, self.state.dest[s],
                             self.config.codebook, cov_solve=self._cov(s).solve)
        return solve_precoding(problem,
                               enum_threshold=self.config.enum_threshold,
                               enum_cap=self.config.enum_cap)

    def commit(self, cluster: Cluster):
        self.state.clusters.append(cluster)
        self.state.unassisted.remove(cluster.source)
        self._epoch += 1

    def final_rates(self) -> dict[int, float]:
        out = {}
        for s in self.state.sources:
            c = self.state.cluster_of(s)
            if c is None:
                out[s] = unassisted_rate(self.state, s, self.state.dest[s])
            else:
                out[s] = vmimo_rate(self.state, c, self.state.dest[s])
        return out


def greedy_cluster(source: int, idle, oracle,
                   config: ClusteringConfig) -> ClusterDecision:
    """Greedy helper selection for one source against an idle pool."""
    r_base = oracle.baseline_rate(source)
    rates = {l: oracle.relay_rate(source, l) for l in idle}
    eligible = sorted(
        (l for l in idle
         if rates[l] > config.candidate_factor * r_base
         and oracle.usable(source, l)),
        key=lambda l: (-rates[l], l))

    chosen: list[int] = []
    best: PrecodingSolution | None = None
    r_old = 0.0
    trace: list[SweepStep] = []
    for l in eligible:
        tentative = (*chosen, l)
        r_min = min(rates[k] for k in tentative)
        sol = oracle.evaluate(source, tentative)
        r_new = 0.5 * min(capacity(sol.objective), r_min)
        accepted = r_new > r_old
        trace.append(SweepStep(relay=l, relay_rate=rates[l], r_min=r_min,
                               ap_sinr=sol.objective, rate=r_new,
                               accepted=accepted))
        if accepted:
            chosen.append(l)
            r_old = r_new
            best = sol

    if not chosen or r_old < r_base:
        return ClusterDecision(source=source, cluster=None, rate=r_base,
                               baseline_rate=r_base, trace=trace)
    cluster = Cluster(source=source, relays=tuple(chosen), weights=best.weights)
    bits = len(chosen) * config.codebook.bits_per_weight
    return ClusterDecision(source=source, cluster=cluster, rate=r_old,
                           baseline_rate=r_base, trace=trace,
                           feedback_bits=bits, method=best.method)


def cluster_sources(idle, oracle, config: ClusteringConfig) -> ClusteringResult:
    """One-pass multi-source clustering.

    Sources are served in ascending order of their pre-clustering
    unassisted rates; each consumes helpers from the shared idle pool.
    """
    rates_before = {s: oracle.baseline_rate(s) for s in oracle.sources}
    order = sorted(oracle.sources, key=lambda s: (rates_before[s], s))
    pool = sorted(idle)

    decisions: dict[int, ClusterDecision] = {}
    for s in order:
        dec = greedy_cluster(s, pool, oracle, config)
        decisions[s] = dec
        if dec.cluster is not None:
            oracle.commit(dec.cluster)
            taken = set(dec.cluster.relays)
            pool = [l for l in pool if l not in taken]

    rates_after = oracle.final_rates()
    return ClusteringResult(
        decisions=decisions,
        rates_before=rates_before,
        rates_after=rates_after,
        objective=harmonic_mean(rates_after.values(), floor=config.rate_floor),
        baseline_objective=harmonic_mean(rates_before.values(),
                                         floor=config.rate_floor),
    )


def exhaustive_cluster(idle, oracle, config: ClusteringConfig) -> ClusteringResult:
    """Score every assignment of idle devices to sources (or to none).

    Each assignment is evaluated with the same sequential protocol as the
    greedy pass (sources in ascending baseline order, weights optimized
    against the partial network, final rates under the full network), so
    the greedy result is always inside the search space when its relays are
    in the pool.
    """
    sources = tuple(oracle.sources)
    idle = sorted(idle)
    n_assign = (len(sources) + 1) ** len(idle)
    if n_assign > config.exhaustive_cap:
        raise ValueError("exhaustive search infeasible")

    rates_before = {s: oracle.baseline_rate(s) for s in sources}
    order = sorted(sources, key=lambda s: (rates_before[s], s))
    decode = {s: {l: oracle.relay_rate(s, l) for l in idle} for s in sources}

    best: ClusteringResult | None = None
    for assignment in itertools.product(range(len(sources) + 1),
                                        repeat=len(idle)):
        o = oracle.fork()
        decisions: dict[int, ClusterDecision] = {}
        for s in order:
            relays = [l for l, a in zip(idle, assignment)
                      if a != 0 and sources[a - 1] == s]
            if not relays:
                decisions[s] = ClusterDecision(
                    source=s, cluster=None, rate=rates_before[s],
                    baseline_rate=rates_before[s], trace=[])
                continue
            # Order helpers like the greedy sweep would: strongest first.
            relays = tuple(sorted(relays, key=lambda l: (-decode[s][l], l)))
            sol = o.evaluate(s, relays)
            cluster = Cluster(source=s, relays=relays, weights=sol.weights)
            o.commit(cluster)
            r_min = min(decode[s][l] for l in relays)
            decisions[s] = ClusterDecision(
                source=s, cluster=cluster,
                rate=0.5 * min(capacity(sol.objective), r_min),
                baseline_rate=rates_before[s], trace=[],
                feedback_bits=len(relays) * config.codebook.bits_per_weight,
                method=sol.method)
        rates_after = o.final_rates()
        obj = harmonic_mean(rates_after.values(), floor=config.rate_floor)
        if best is None or obj > best.objective:
            best = ClusteringResult(
                decisions=decisions,
                rates_before=rates_before,
                rates_after=rates_after,
                objective=obj,
                baseline_objective=harmonic_mean(
                    rates_before.values(), floor=config.rate_floor),
            )
    return best


def validate_trace(decision: ClusterDecision, scalar_continuous: bool) -> list[str]:
    """Check the structural invariants of one greedy sweep.

    Accepted rates must strictly increase; in the scalar continuous-phase
    mode the decode bottleneck is non-increasing and the combined AP SINR
    non-decreasing along the sweep; the settled rate never falls below the
    unassisted baseline.
    """
    problems = []
    last_accepted = 0.0
    for step in decision.trace:
        if step.accepted:
            if not step.rate > last_accepted:
                problems.append(
                    f"accepted rate not strictly increasing at relay {step.relay}")
            last_accepted = step.rate
    if scalar_continuous:
        r_mins = [s.r_min for s in decision.trace]
        if any(b > a + 1e-12 for a, b in zip(r_mins, r_mins[1:])):
            problems.append("decode bottleneck increased along the sweep")
        sinrs = [s.ap_sinr for s in decision.trace]
        if any(b < a - 1e-9 for a, b in zip(sinrs, sinrs[1:])):
            problems.append("combined AP SINR decreased along the sweep")
    if decision.rate < decision.baseline_rate - 1e-12:
        problems.append("settled rate fell below the unassisted baseline")
    return problems
