"""Analytic upper bounds on the mean spectral efficiency of one
relay-assisted source under a Poisson field of idle devices.

Without shadowing, a helper can decode at twice the target rate exactly when
it sits inside a disk around the source whose area shrinks with the rate;
the number of such helpers is Poisson, and integrating the tail probability
of having enough coherently-combining helpers over the rate axis yields the
bound. With log-normal shadowing, distances get random log-normal shrink
factors: the disk is discretized into thin rings, occupancy per ring becomes
a small probability mixing neighbouring rings, and the helper count follows
a Poisson-binomial law evaluated by the classic alternating recursion.

Both bounds reduce to the one-slot baseline log2(1 + gamma) at zero density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammainc

from .linalg import erf
from .rates import capacity

__all__ = [
    "BoundParams",
    "BoundResult",
    "RelayBudget",
    "QuadratureError",
    "relays_required",
    "decode_radius",
    "decode_disk_area",
    "poisson_tail",
    "adaptive_simpson",
    "mean_rate_bound_pathloss",
    "shadow_log_sigma",
    "ring_shift_probability",
    "ring_occupancy_probability",
    "ring_occupancy_probabilities",
    "poisson_binomial_pmf",
    "poisson_binomial_tail",
    "mean_rate_bound_shadowing",
    "relay_budget",
]


class QuadratureError(RuntimeError):
    """The bound integral failed to converge; message carries diagnostics."""


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the single-source bounds.

    gamma: linear power-controlled SNR at the access point (same for every
    device). src_snr: the source's transmit SNR times the path-gain
    constant, G * P_s / noise, with distances in the same units as
    ``density`` (meters here). sigma_db: shadowing dB-spread (0 disables
    it); d_max and delta are the helper-disk radius and ring width used by
    the shadowing bound.
    """

    gamma: float
    density: float
    src_snr: float
    alpha: float = 2.42
    sigma_db: float = 0.0
    d_max: float = 25.0
    delta: float = 0.05

    def __post_init__(self):
        if self.gamma <= 0 or self.src_snr <= 0:
            raise ValueError("gamma and src_snr must be positive")
        if self.density < 0:
            raise ValueError("density must be >= 0")
        if not 0 < self.delta < self.d_max:
            raise ValueError("need 0 < delta < d_max")


@dataclass
class BoundResult:
    value: float                 # bound on the mean rate, bps/Hz
    baseline: float              # one-slot rate without helpers
    tail_bound: float            # estimate of the truncated integral tail
    r_max: float                 # rate at which integration stopped
    segments: int                # integration segments evaluated


@dataclass
class RelayBudget:
    """Helpers needed to reach the bound value, and how far they can sit."""

    n_relays: int
    radius_m: float
    bound: BoundResult


def relays_required(rate: float, gamma: float) -> int:
    """Minimum number of coherently-combining helpers for combined rate
    2*rate at per-device AP-side SNR gamma. Zero when the one-slot link
    already suffices."""
    excess = (2.0 ** (2.0 * rate) - 1.0 - gamma) / gamma
    if excess <= 0:
        return 0
    return max(0, math.ceil(math.sqrt(excess) - 1.0))


def decode_radius(rate: float, src_snr: float, alpha: float) -> float:
    """Distance out to which a device decodes the source at rate 2*rate
    under pure path loss."""
    return (src_snr / (2.0 ** (2.0 * rate) - 1.0)) ** (1.0 / alpha)


def decode_disk_area(rate: float, src_snr: float, alpha: float) -> float:
    """Area of the decode disk; strictly decreasing in the rate."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    return math.pi * (src_snr / (2.0 ** (2.0 * rate) - 1.0)) ** (2.0 / alpha)


def poisson_tail(k: int, mu) -> float:
    """Pr{Poisson(mu) >= k}; k = 0 gives 1. Regularized incomplete gamma."""
    if k <= 0:
        return np.ones_like(np.asarray(mu, dtype=float)) if np.ndim(mu) else 1.0
    return gammainc(k, mu)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-12,
                     max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature with absolute tolerance."""
    if b <= a:
        return 0.0

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, tol, depth):
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl = f(xl)
        fr = f(xr)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        if depth >= max_depth:
            return left + right
        if abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(x0, xm, f0, fl, f1, left, tol / 2.0, depth + 1)
                + recurse(xm, x2, f1, fr, f2, right, tol / 2.0, depth + 1))

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    return recurse(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 0)


def _k_jump_rate(gamma: float, m: int) -> float:
    """Rate above which m helpers stop sufficing: boundary of the segment
    on which the required helper count equals m."""
    return 0.5 * math.log2(1.0 + gamma + gamma * (m + 1) ** 2)


def mean_rate_bound_pathloss(params: BoundParams) -> BoundResult:
    """Mean-rate upper bound under pure path loss (no shadowing).

    baseline + integral over r of Pr{Poisson(density * decode area(r)) >=
    required helpers(r)}. The required-helper count is a ceiling, so the
    integrand is piecewise smooth; integration proceeds segment by segment
    between its jump rates and truncates once a whole segment's integrand
    falls below 1e-10.
    """
    if params.sigma_db != 0.0:
        raise ValueError("path-loss bound is defined for sigma_db = 0")
    gamma = params.gamma
    base = capacity(gamma)
    if params.density == 0.0:
        return BoundResult(value=base, baseline=base, tail_bound=0.0,
                           r_max=base, segments=0)

    lam = params.density

    def mu(r):
        return lam * decode_disk_area(r, params.src_snr, params.alpha)

    total = base
    m = max(1, relays_required(base * (1.0 + 1e-12), gamma))
    a = base
    segments = 0
    while True:
        b = max(_k_jump_rate(gamma, m), a)
        f_left = float(poisson_tail(m, mu(a))) if b > a else 1.0
        if b > a:
            total += adaptive_simpson(lambda r: float(poisson_tail(m, mu(r))),
                                      a, b, tol=1e-13)
            segments += 1
        a = b
        m += 1
        if f_left < 1e-10:
            break
        if segments > 50_000:
            raise QuadratureError(
                f"bound integral did not truncate (r = {a:.3f}, "
                f"helpers = {m}, integrand = {f_left:.3e})")

    # What the truncation leaves behind, summed over forthcoming segments.
    tail = 0.0
    for _ in range(1000):
        b = _k_jump_rate(gamma, m)
        term = (b - a) * float(poisson_tail(m, mu(a)))
        tail += term
        a = b
        m += 1
        if term < 1e-18:
            break
    return BoundResult(value=total, baseline=base, tail_bound=tail,
                       r_max=a, segments=segments)


def shadow_log_sigma(sigma_db: float, alpha: float) -> float:
    """Standard deviation of the log-domain distance shrink factor induced
    by shadowing with the given dB-spread."""
    return 0.1 * math.log(10.0) * sigma_db / alpha


def ring_shift_probability(j: int, i: int, sigma: float):
    """Probability that a device truly in ring j appears in ring i once its
    distance is scaled by the log-normal shadowing factor (log std sigma).

    Rings have unit width in ring index. For sigma = 0 this degenerates to
    the indicator of i == j.
    """
    if i < 1 or j < 1:
        raise ValueError("ring indices start at 1")
    if sigma == 0.0:
        return 1.0 if i == j else 0.0
    z = 1.0 / (math.sqrt(2.0) * sigma)
    hi = erf(z * math.log(i / j))
    lo = -1.0 if i == 1 else erf(z * math.log((i - 1) / j))
    return 0.5 * (hi - lo)


@lru_cache(maxsize=16)
def _ring_geometry(sigma: float, n_max: int) -> np.ndarray:
    """Density-independent ring factor g_i = sum_j j * p(j -> i); the ring
    occupancy probability is 2 pi lambda delta^2 g_i."""
    idx = np.arange(1, n_max + 1, dtype=float)
    if sigma == 0.0:
        g = idx.copy()
    else:
        z = 1.0 / (math.sqrt(2.0) * sigma)
        log_i = np.log(idx)
        hi = erf(z * (log_i[:, None] - log_i[None, :]))          # [i, j]
        lo = np.empty_like(hi)
        lo[0, :] = -1.0
        lo[1:, :] = erf(z * (np.log(idx[:-1])[:, None] - log_i[None, :]))
        g = (0.5 * (hi - lo) * idx[None, :]).sum(axis=1)
    g.setflags(write=False)
    return g


def ring_occupancy_probabilities(params: BoundParams) -> np.ndarray:
    """Occupancy probability of each shadow-shrunk ring, i = 1..n_max."""
    n_max = int(math.floor(params.d_max / params.delta))
    sigma = shadow_log_sigma(params.sigma_db, params.alpha)
    g = _ring_geometry(sigma, n_max)
    p = 2.0 * math.pi * params.density * params.delta ** 2 * g
    if np.any(p >= 1.0):
        raise ValueError("delta too coarse for density")
    return p


def ring_occupancy_probability(i: int, params: BoundParams) -> float:
    p = ring_occupancy_probabilities(params)
    if not 1 <= i <= len(p):
        raise ValueError("ring index out of range")
    return float(p[i - 1])


def poisson_binomial_pmf(p, k: int) -> float:
    """Pr{exactly k successes} for independent non-identical Bernoulli
    trials, via the alternating power-sum recursion."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p >= 1)):
        raise ValueError("probabilities must lie in [0, 1)")
    if k < 0:
        raise ValueError("k must be >= 0")
    n = len(p)
    if k > n:
        return 0.0
    pmf = _poisson_binomial_table(p, k)
    return float(pmf[k])


def _poisson_binomial_table(p: np.ndarray, k_max: int) -> np.ndarray:
    """pmf values 0..k_max by the recursion
    pi_k = (1/k) sum_{j=1..k} (-1)^(j-1) pi_{k-j} T_j, T_j = sum (p/(1-p))^j.
    """
    odds = p / (1.0 - p)
    pmf = np.empty(k_max + 1)
    pmf[0] = float(np.prod(1.0 - p))
    if k_max == 0:
        return pmf
    t = np.empty(k_max + 1)
    power = odds.copy()
    for j in range(1, k_max + 1):
        t[j] = float(power.sum())
        power *= odds
    u = t.copy()
    u[2::2] *= -1.0              # (-1)^(j-1) sign pattern
    for k in range(1, k_max + 1):
        pmf[k] = np.dot(u[1:k + 1], pmf[k - 1::-1]) / k
    return pmf


def poisson_binomial_tail(p, k: int) -> float:
    """Pr{at least k successes}, as one minus the pmf head."""
    p = np.asarray(p, dtype=float)
    n = len(p)
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    pmf = _poisson_binomial_table(p, k - 1)
    head = float(np.clip(pmf, 0.0, 1.0).sum())
    return min(max(1.0 - head, 0.0), 1.0)


def mean_rate_bound_shadowing(params: BoundParams) -> BoundResult:
    """Mean-rate upper bound with log-normal shadowing.

    Helpers live on a disk of radius d_max discretized into rings of width
    delta. Between the rates where the decode radius crosses a ring edge or
    the required helper count jumps, the integrand (a Poisson-binomial tail
    probability) is constant, so the integral is an exact finite sum of
    segment widths times tail values.
    """
    gamma = params.gamma
    base = capacity(gamma)
    if params.density == 0.0:
        return BoundResult(value=base, baseline=base, tail_bound=0.0,
                           r_max=base, segments=0)
    p = ring_occupancy_probabilities(params)
    n_max = len(p)

    def rate_at_radius(d: float) -> float:
        return 0.5 * math.log2(1.0 + params.src_snr / d ** params.alpha)

    ring_rates = [rate_at_radius(i * params.delta) for i in range(1, n_max + 1)]
    r_end = max((r for r in ring_rates if r > base), default=base)
    points = {base, r_end}
    points.update(r for r in ring_rates if base < r < r_end)
    m = 1
    while True:
        r_m = _k_jump_rate(gamma, m)
        if r_m >= r_end or m > n_max + 1:
            break
        if r_m > base:
            points.add(r_m)
        m += 1
    grid = sorted(points)

    total = base
    segments = 0
    for a, b in zip(grid[:-1], grid[1:]):
        mid = 0.5 * (a + b)
        n = min(int(math.floor(
            decode_radius(mid, params.src_snr, params.alpha) / params.delta)),
            n_max)
        k = relays_required(mid, gamma)
        if n < 1 or k > n:
            continue
        tail = poisson_binomial_tail(p[:n], k)
        total += (b - a) * tail
        segments += 1
    return BoundResult(value=total, baseline=base, tail_bound=0.0,
                       r_max=r_end, segments=segments)


def mean_rate_bound(params: BoundParams) -> BoundResult:
    """Dispatch on sigma_db: exact-Poisson bound without shadowing, the
    ring construction with."""
    if params.sigma_db == 0.0:
        return mean_rate_bound_pathloss(params)
    return mean_rate_bound_shadowing(params)


def relay_budget(params: BoundParams) -> RelayBudget:
    """Helpers needed to reach the bound's mean rate and the radius of the
    disk they must sit in (pure path loss)."""
    res = mean_rate_bound_pathloss(params)
    k = relays_required(res.value, params.gamma)
    radius = decode_radius(res.value, params.src_snr, params.alpha)
    return RelayBudget(n_relays=k, radius_m=radius, bound=res)
