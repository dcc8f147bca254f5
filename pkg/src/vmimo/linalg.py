"""Dense complex-Hermitian kernels for small matrices.

Everything the rate engine and precoding search need numerically lives here:
Cholesky solves of interference covariances, MMSE quadratic forms, a power
iteration for rank-one rounding, and an erf good to 1e-12 used by the
shadowing bound. Matrices are tiny (dimension <= ~16), so plain dense
routines are the right tool.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "SingularCovarianceError",
    "PowerIterationError",
    "hermitian_solve",
    "hermitian_factor",
    "factor_solve",
    "mmse_sinr",
    "quadratic_form",
    "dominant_eigenvector",
    "erf",
]

_POWER_ITERATION_SEED = 0x51A7


class SingularCovarianceError(ValueError):
    """A matrix expected to be Hermitian positive-definite was not."""


class PowerIterationError(RuntimeError):
    """Power iteration hit its iteration cap. Carries the best iterate."""

    def __init__(self, eigenvalue: float, vector: np.ndarray, residual: float):
        super().__init__(
            f"power iteration did not converge (residual {residual:.3e})"
        )
        self.eigenvalue = eigenvalue
        self.vector = vector
        self.residual = residual


def hermitian_factor(a):
    """Cholesky-factor a Hermitian positive-definite matrix.

    Returns an opaque factor for :func:`factor_solve`. Raises
    SingularCovarianceError when the matrix is not positive-definite, which
    is how a singular covariance is detected throughout the package.
    """
    a = np.ascontiguousarray(a, dtype=complex)
    try:
        return cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError("singular covariance") from exc


def factor_solve(factor, b):
    """Solve A x = b given a factor from :func:`hermitian_factor`."""
    return cho_solve(factor, np.asarray(b, dtype=complex), check_finite=False)


def hermitian_solve(a, b):
    """Solve A x = b for Hermitian positive-definite A via Cholesky."""
    return factor_solve(hermitian_factor(a), b)


def quadratic_form(q, w) -> float:
    """Real value of w^H Q w for Hermitian Q (imaginary residue dropped)."""
    w = np.asarray(w, dtype=complex)
    return float(np.real(np.vdot(w, np.asarray(q, dtype=complex) @ w)))


def mmse_sinr(h, k) -> float:
    """MMSE output SINR h^H K^{-1} h for signal vector h and noise-plus-
    interference covariance K (Hermitian positive-definite).

    The result is real up to roundoff; the imaginary residue is discarded
    and the value clipped at zero.
    """
    h = np.asarray(h, dtype=complex)
    x = hermitian_solve(k, h)
    return max(float(np.real(np.vdot(h, x))), 0.0)


def dominant_eigenvector(q, tol: float = 1e-10, max_iter: int = 10_000,
                         seed: int = _POWER_ITERATION_SEED):
    """Top eigenpair of a Hermitian PSD matrix by power iteration.

    Returns (eigenvalue, unit vector) with ||Q v - lam v|| <= tol * |lam|.
    The start vector is drawn from a fixed-seed RNG so results are
    reproducible run to run. Raises PowerIterationError (carrying the best
    iterate) if the residual test is not met within ``max_iter`` steps.
    """
    q = np.asarray(q, dtype=complex)
    n = q.shape[0]
    if n == 1:
        lam = float(np.real(q[0, 0]))
        return lam, np.ones(1, dtype=complex)

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)

    lam = 0.0
    best = (0.0, v, np.inf)
    for _ in range(max_iter):
        y = q @ v
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            # v is in the nullspace; for PSD Q this means eigenvalue 0
            # unless a fresh direction says otherwise.
            v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            v /= np.linalg.norm(v)
            y = q @ v
            norm_y = np.linalg.norm(y)
            if norm_y == 0.0:
                return 0.0, v
        lam = float(np.real(np.vdot(v, y)))
        v = y / norm_y
        residual = float(np.linalg.norm(q @ v - lam * v))
        if residual < best[2]:
            best = (lam, v, residual)
        if residual <= tol * max(abs(lam), np.finfo(float).tiny):
            return lam, v
    raise PowerIterationError(*best)


def _erf_series(x):
    # Maclaurin series, adequate to ~1e-14 absolute for |x| <= 3.2.
    term = x.astype(float).copy()
    acc = term.copy()
    x2 = x * x
    for k in range(1, 60):
        term *= -x2 / k
        acc += term / (2 * k + 1)
    return acc * (2.0 / np.sqrt(np.pi))


def _erfc_cf(x):
    # Continued fraction for erfc, x >= ~3, by Lentz's method:
    # erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    tiny = 1e-300
    f = x.astype(float).copy()
    c = f.copy()
    d = np.zeros_like(f)
    for n in range(1, 120):
        a_n = n / 2.0
        d = x + a_n * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = x + a_n / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        f = f * (c * d)
    return np.exp(-x * x) / np.sqrt(np.pi) / f


def erf(x):
    """Error function, accurate to 1e-12 absolute, scalar or ndarray.

    Maclaurin series below |x| = 3, Lentz continued fraction for the
    complementary function above. Odd in x; values in (-1, 1) for finite x.
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)

    sign = np.sign(arr)
    ax = np.abs(arr)

    small = ax < 3.0
    if np.any(small):
        out[small] = _erf_series(ax[small])
    big = ~small
    if np.any(big):
        capped = ax[big]
        vals = np.ones_like(capped)
        live = capped < 7.0  # erfc(7) < 1e-22: saturated in double precision
        if np.any(live):
            vals[live] = 1.0 - _erfc_cf(capped[live])
        out[big] = vals
    out *= sign
    out[np.isnan(arr)] = np.nan
    return float(out[0]) if scalar else out.reshape(np.shape(x))
