import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vmimo.linalg import (PowerIterationError, SingularCovarianceError,
                          dominant_eigenvector, erf, hermitian_solve,
                          mmse_sinr, quadratic_form)


def random_pd(rng, n, shift=None):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    k = a @ a.conj().T
    return k + (n if shift is None else shift) * np.eye(n)


def random_vec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


class TestHermitianSolve:
    def test_identity(self):
        rng = np.random.default_rng(0)
        b = random_vec(rng, 4)
        assert_allclose(hermitian_solve(np.eye(4), b), b, rtol=1e-14)

    def test_diagonal_scaling(self):
        x = hermitian_solve(2.0 * np.eye(2), np.array([1.0 + 0j, 0.0]))
        assert_allclose(x, [0.5, 0.0], atol=1e-15)

    def test_multiply_back_random_pd(self):
        rng = np.random.default_rng(1)
        for n in (2, 3, 6, 9, 16):
            a = random_pd(rng, n)
            b = random_vec(rng, n)
            x = hermitian_solve(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_rejects_indefinite(self):
        with pytest.raises(SingularCovarianceError, match="singular covariance"):
            hermitian_solve(np.diag([1.0, -1.0]), np.ones(2))


class TestMmseSinr:
    def test_white_noise_matched_filter(self):
        rng = np.random.default_rng(2)
        h = random_vec(rng, 5)
        sigma2 = 0.7
        assert_allclose(mmse_sinr(h, sigma2 * np.eye(5)),
                        np.linalg.norm(h) ** 2 / sigma2, rtol=1e-12)

    def test_diagonal_case(self):
        assert_allclose(mmse_sinr(np.array([1.0, 0.0]), np.diag([2.0, 5.0])),
                        0.5, rtol=1e-14)

    def test_matches_explicit_inverse(self):
        rng = np.random.default_rng(3)
        h = random_vec(rng, 8)
        k = random_pd(rng, 8)
        oracle = np.real(h.conj() @ np.linalg.inv(k) @ h)
        assert_allclose(mmse_sinr(h, k), oracle, rtol=1e-9)

    def test_nonnegative_and_noise_monotone(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            h = random_vec(rng, 4)
            k = random_pd(rng, 4)
            s0 = mmse_sinr(h, k)
            assert s0 >= 0.0
            assert mmse_sinr(h, k + 0.5 * np.eye(4)) <= s0 + 1e-12

    def test_phase_invariant(self):
        rng = np.random.default_rng(5)
        h = random_vec(rng, 4)
        k = random_pd(rng, 4)
        for phi in (0.3, 1.7, -2.2):
            assert_allclose(mmse_sinr(np.exp(1j * phi) * h, k),
                            mmse_sinr(h, k), rtol=1e-12)


class TestDominantEigenvector:
    def test_diagonal(self):
        lam, v = dominant_eigenvector(np.diag([3.0, 1.0]))
        assert_allclose(lam, 3.0, rtol=1e-10)
        assert_allclose(np.abs(v), [1.0, 0.0], atol=1e-8)

    def test_rank_one(self):
        rng = np.random.default_rng(6)
        u = random_vec(rng, 4)
        lam, v = dominant_eigenvector(np.outer(u, u.conj()))
        assert_allclose(lam, np.linalg.norm(u) ** 2, rtol=1e-9)
        # aligned up to a global phase
        assert_allclose(abs(np.vdot(v, u / np.linalg.norm(u))), 1.0, atol=1e-8)

    def test_matches_dense_eigensolver(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        q = a @ a.conj().T
        lam, v = dominant_eigenvector(q, tol=1e-12)
        w, vecs = np.linalg.eigh(q)
        assert_allclose(lam, w[-1], rtol=1e-8)
        assert_allclose(abs(np.vdot(v, vecs[:, -1])), 1.0, atol=1e-6)

    def test_rayleigh_quotient_maximality(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        q = a @ a.conj().T
        lam, _ = dominant_eigenvector(q)
        for _ in range(100):
            z = random_vec(rng, 6)
            z /= np.linalg.norm(z)
            assert quadratic_form(q, z) <= lam * (1 + 1e-9)

    def test_nonconvergence_carries_best_iterate(self):
        # two equal-ish top eigenvalues separated by ~0 make progress slow
        q = np.diag([1.0, 1.0 - 1e-16, 0.5])
        with pytest.raises(PowerIterationError) as info:
            dominant_eigenvector(q, tol=0.0, max_iter=5)
        assert info.value.vector.shape == (3,)
        assert info.value.eigenvalue > 0


class TestErf:
    def test_zero(self):
        assert erf(0.0) == 0.0

    def test_odd_symmetry(self):
        for x in (0.13, 0.9, 2.4, 3.7, 5.5):
            assert_allclose(erf(-x), -erf(x), rtol=0, atol=1e-15)

    def test_reference_value(self):
        assert abs(erf(1.0) - 0.8427007929497149) <= 1e-12

    def test_against_stdlib_grid(self):
        xs = np.linspace(-8.0, 8.0, 2001)
        ours = erf(xs)
        ref = np.array([math.erf(float(v)) for v in xs])
        assert np.max(np.abs(ours - ref)) <= 1e-12

    def test_open_range(self):
        xs = np.array([-30.0, -4.0, 0.0, 4.0, 30.0])
        v = erf(xs)
        assert np.all(v >= -1.0) and np.all(v <= 1.0)
        assert abs(erf(0.5)) < 1.0
