"""Discrete unit-modulus weight selection for one cluster.

The combined two-slot SINR of an assisted source is a Hermitian quadratic
form q(w) = w^H Q w in the slot-two weight vector w (source entry pinned to
1, relay entries drawn from the roots-of-unity codebook). Maximizing q over
the codebook is NP-hard in general, so the solver ladder is:

* exact enumeration when the search space is small (the common case: a few
  relays, small codebook),
* a semidefinite relaxation (maximize tr(QW), W PSD with unit diagonal)
  solved by block-coordinate ascent on a Gram factor, followed by rank-one
  rounding and phase quantization,
* plain per-entry phase matching when the codebook is continuous and Q is
  rank-one (scalar channels).

The relaxation value upper-bounds the discrete optimum, and the rounded
value lower-bounds it, which the tests exploit as a built-in sandwich
check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import PowerIterationError, dominant_eigenvector, quadratic_form
from .rates import NetworkState, Cluster, cluster_channel_matrix, vmimo_covariance
from .linalg import hermitian_factor, factor_solve

__all__ = [
    "Codebook",
    "PrecodingProblem",
    "PrecodingSolution",
    "SdrResult",
    "assemble_q",
    "enumerate_optimum",
    "sdr_solve",
    "round_solution",
    "continuous_phase_match",
    "solve_precoding",
]

_SDR_SEED = 0xB0A7


def _top_direction(q) -> np.ndarray:
    """Best-effort dominant eigenvector. A (near-)degenerate top eigenspace
    stalls the residual test, but any vector in that space serves equally
    well as a rounding direction, so the carried iterate is used."""
    try:
        _, vec = dominant_eigenvector(q)
    except PowerIterationError as err:
        vec = err.vector
    return vec


@dataclass(frozen=True)
class Codebook:
    """Roots-of-unity phase codebook.

    n_w = 1 means no precoding (all weights 1); math.inf means continuous
    phases. Feedback for one weight index costs log2(n_w) bits.
    """

    n_w: float

    def __post_init__(self):
        if self.n_w != math.inf:
            if int(self.n_w) != self.n_w or self.n_w < 1:
                raise ValueError("codebook size must be a positive integer or inf")
            object.__setattr__(self, "n_w", int(self.n_w))

    @property
    def is_continuous(self) -> bool:
        return self.n_w == math.inf

    @property
    def bits_per_weight(self) -> float:
        return math.inf if self.is_continuous else math.log2(self.n_w)

    @property
    def elements(self) -> np.ndarray:
        if self.is_continuous:
            raise ValueError("continuous codebook has no finite element list")
        k = np.arange(self.n_w)
        return np.exp(2j * np.pi * k / self.n_w)

    def quantize_phase(self, theta) -> np.ndarray:
        """Nearest codebook index for each phase; ties go to the smaller
        index. Returns integer indices mod n_w."""
        if self.is_continuous:
            raise ValueError("continuous codebook does not quantize")
        x = np.asarray(theta, dtype=float) * self.n_w / (2.0 * np.pi)
        k = np.ceil(x - 0.5).astype(int)
        return np.mod(k, self.n_w)


@dataclass
class PrecodingProblem:
    """Quadratic form coefficients plus the codebook to search over.

    q has dimension m+1 for m relays; index 0 is the pinned source entry.
    """

    q: np.ndarray
    codebook: Codebook

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=complex)
        if self.q.ndim != 2 or self.q.shape[0] != self.q.shape[1]:
            raise ValueError("q must be square")

    @property
    def dim(self) -> int:
        return self.q.shape[0]


@dataclass
class PrecodingSolution:
    weights: np.ndarray          # first entry exactly 1
    objective: float             # w^H Q w, the combined-slot SINR
    method: str                  # "enumeration" | "sdr-rounded" | "continuous"
    relaxation_value: float | None = None
    converged: bool = True


@dataclass
class SdrResult:
    w: np.ndarray                # PSD, unit diagonal
    value: float                 # tr(Q W), upper bound on the discrete optimum
    converged: bool
    sweeps: int


def assemble_q(state: NetworkState, cluster: Cluster, dest: int,
               codebook: Codebook,
               cov_solve=None) -> PrecodingProblem:
    """Build the weight-search quadratic form for one cluster.

    With D the linear map from weights to the stacked two-slot signal
    (slot-one direct channel rides on the source's weight, which is pinned
    to 1), Q = D^H K^{-1} D, so w^H Q w equals the combined-slot MMSE SINR
    the rate engine would report for those weights. ``cov_solve`` lets a
    sweep reuse one covariance factorization across candidate sets.
    """
    n = state.n_rx
    h_mat = cluster_channel_matrix(state, cluster, dest)  # (n, m+1)
    m1 = h_mat.shape[1]
    d = np.zeros((2 * n, m1), dtype=complex)
    d[:n, 0] = np.sqrt(state.power[cluster.source]) * state.channel(cluster.source, dest)
    d[n:, :] = h_mat
    if cov_solve is None:
        k = vmimo_covariance(state, cluster, dest)
        x = factor_solve(hermitian_factor(k), d)
    else:
        x = cov_solve(d)
    q = d.conj().T @ x
    q = 0.5 * (q + q.conj().T)
    return PrecodingProblem(q=q, codebook=codebook)


def _codebook_batches(n_w: int, m: int, block: int = 65536):
    """Yield (count, index_matrix) blocks covering all n_w^m index tuples in
    lexicographic order."""
    total = n_w ** m
    start = 0
    radix = n_w ** np.arange(m - 1, -1, -1, dtype=np.int64) if m else np.ones(0, np.int64)
    while start < total:
        stop = min(start + block, total)
        flat = np.arange(start, stop, dtype=np.int64)
        idx = (flat[:, None] // radix[None, :]) % n_w if m else np.zeros((stop - start, 0), np.int64)
        yield idx
        start = stop


def enumerate_optimum(problem: PrecodingProblem,
                      cap: int = 2 ** 20) -> PrecodingSolution:
    """Exact discrete optimum by brute force over the codebook.

    The objective is invariant under a global codebook rotation and the
    codebook is a cyclic group, so searching with the first entry fixed at
    1 covers every solution class. Ties break toward the lexicographically
    first index tuple.
    """
    cb = problem.codebook
    if cb.is_continuous:
        raise ValueError("cannot enumerate a continuous codebook")
    m = problem.dim - 1
    if cb.n_w ** m > cap:
        raise ValueError("instance too large for enumeration")
    q = problem.q
    best_val = -math.inf
    best_w = np.ones(problem.dim, dtype=complex)
    for idx in _codebook_batches(cb.n_w, m):
        w = np.ones((idx.shape[0], problem.dim), dtype=complex)
        if m:
            w[:, 1:] = np.exp(2j * np.pi * idx / cb.n_w)
        vals = np.real(np.einsum("ni,ij,nj->n", w.conj(), q, w))
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            best_w = w[j]
    return PrecodingSolution(weights=best_w, objective=best_val,
                             method="enumeration")


def sdr_solve(problem: PrecodingProblem, tol: float = 1e-9,
              max_sweeps: int = 500, n_starts: int = 3,
              seed: int = _SDR_SEED) -> SdrResult:
    """Semidefinite relaxation max tr(QW), W PSD, diag(W) = 1.

    Solved on the Gram factor W = V^H V with unit-norm columns: each column
    update v_i <- g_i / ||g_i|| (g_i the Q-weighted sum of the others) is a
    closed-form ascent step. Several starts guard against bad stationary
    points. If no start meets the relative-improvement tolerance within the
    sweep cap, the best iterate is returned with converged=False.
    """
    q = problem.q
    n = problem.dim
    if n == 1:
        return SdrResult(w=np.ones((1, 1), dtype=complex),
                         value=float(np.real(q[0, 0])), converged=True, sweeps=0)
    rng = np.random.default_rng(seed)

    def ascend(v):
        prev = -math.inf
        for sweep in range(1, max_sweeps + 1):
            for i in range(n):
                g = v @ q[:, i] - v[:, i] * q[i, i]
                norm = np.linalg.norm(g)
                if norm > 0:
                    v[:, i] = g / norm
            w = v.conj().T @ v
            val = float(np.real(np.trace(q @ w)))
            if val - prev <= tol * max(abs(val), 1.0):
                return v, val, True, sweep
            prev = val
        return v, prev, False, max_sweeps

    starts = []
    # Phase-aligned start: rank-one from the dominant eigenvector's phases.
    vec = _top_direction(0.5 * (q + q.conj().T) + 1e-12 * np.eye(n))
    phased = np.zeros((n, n), dtype=complex)
    phased[0, :] = np.exp(1j * np.angle(np.where(vec == 0, 1.0, vec)))
    starts.append(phased)
    for _ in range(max(0, n_starts - 1)):
        v = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        v /= np.linalg.norm(v, axis=0, keepdims=True)
        starts.append(v)

    best = None
    for v0 in starts:
        v, val, ok, sweeps = ascend(v0.copy())
        if best is None or val > best[1]:
            best = (v, val, ok, sweeps)
    v, val, ok, sweeps = best
    v = v / np.linalg.norm(v, axis=0, keepdims=True)
    w = v.conj().T @ v
    np.fill_diagonal(w, 1.0)
    w = 0.5 * (w + w.conj().T)
    return SdrResult(w=w, value=float(np.real(np.trace(q @ w))),
                     converged=ok, sweeps=sweeps)


def round_solution(problem: PrecodingProblem, w_or_vector,
                   relaxation_value: float | None = None,
                   converged: bool = True) -> PrecodingSolution:
    """Rank-one rounding of a relaxation solution onto the codebook.

    Takes either the PSD matrix W (its dominant eigenvector is extracted)
    or a vector directly. Phases are quantized to the nearest codebook
    point, then the whole vector is rotated by the conjugate of its (already
    quantized) first entry; group closure keeps every entry in the codebook
    and makes the first entry exactly 1. The objective is recomputed
    exactly from Q.
    """
    w_or_vector = np.asarray(w_or_vector, dtype=complex)
    if w_or_vector.ndim == 2:
        vec = _top_direction(w_or_vector)
    else:
        vec = w_or_vector
    cb = problem.codebook
    safe = np.where(vec == 0, 1.0, vec)
    if cb.is_continuous:
        phases = np.angle(safe)
        weights = np.exp(1j * (phases - phases[0]))
        weights[0] = 1.0
        method = "continuous"
    elif cb.n_w == 1:
        weights = np.ones(problem.dim, dtype=complex)
        method = "sdr-rounded"
    else:
        idx = cb.quantize_phase(np.mod(np.angle(safe), 2.0 * np.pi))
        idx = np.mod(idx - idx[0], cb.n_w)
        weights = np.exp(2j * np.pi * idx / cb.n_w)
        weights[0] = 1.0
        method = "sdr-rounded"
    return PrecodingSolution(weights=weights,
                             objective=quadratic_form(problem.q, weights),
                             method=method,
                             relaxation_value=relaxation_value,
                             converged=converged)


def continuous_phase_match(h) -> np.ndarray:
    """Ideal continuous weights for scalar channels: undo each entry's
    phase so the weighted sum adds coherently, then normalize the first
    entry to 1. Zero channels get weight 1."""
    h = np.asarray(h, dtype=complex)
    w = np.exp(-1j * np.angle(np.where(h == 0, 1.0, h)))
    w = w * np.conj(w[0])
    w[0] = 1.0
    return w


def solve_precoding(problem: PrecodingProblem,
                    enum_threshold: int = 4096,
                    enum_cap: int = 2 ** 20) -> PrecodingSolution:
    """Pick the solver: exact enumeration when the discrete space is small,
    SDR plus rounding otherwise, SDR plus continuous rounding for the
    infinite codebook."""
    cb = problem.codebook
    if problem.dim == 1:
        return PrecodingSolution(weights=np.ones(1, dtype=complex),
                                 objective=float(np.real(problem.q[0, 0])),
                                 method="enumeration")
    if not cb.is_continuous:
        if cb.n_w == 1:
            w = np.ones(problem.dim, dtype=complex)
            return PrecodingSolution(weights=w,
                                     objective=quadratic_form(problem.q, w),
                                     method="enumeration")
        if cb.n_w ** (problem.dim - 1) <= enum_threshold:
            return enumerate_optimum(problem, cap=enum_cap)
    relax = sdr_solve(problem)
    return round_solution(problem, relax.w, relaxation_value=relax.value,
                          converged=relax.converged)
