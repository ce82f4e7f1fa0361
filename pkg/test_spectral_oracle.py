#!/usr/bin/env python3
"""
Tests for the closed-form and dense reference exponentials
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy import linalg

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from common.errors import InvalidArgumentError, NumericOverflowError
from exponentials.spectral_oracle import (eigen_sym_tridiag, expm_dense_small,
                                          expm_sym_tridiag_exact, expm_tridiag_exact,
                                          similarity_scale)
from structures.matrices import TridiagSpec


def _inf_norm(m):
    return float(np.max(np.sum(np.abs(m), axis=1)))


def test_eigenvalues_small_cases():
    np.testing.assert_allclose(eigen_sym_tridiag(1, 0, 2).lambdas, [1, -1], atol=1e-15)
    expected = [-2 + math.sqrt(2), -2, -2 - math.sqrt(2)]
    np.testing.assert_allclose(eigen_sym_tridiag(1, -2, 3).lambdas, expected, atol=1e-15)


def test_eigenpairs_satisfy_the_eigen_equation():
    rng = np.random.default_rng(5)
    for n in range(1, 9):
        z = complex(rng.standard_normal(), rng.standard_normal())
        b = complex(rng.standard_normal(), rng.standard_normal())
        spectral = eigen_sym_tridiag(z, b, n)
        t = TridiagSpec(z, b, z, n).to_dense()
        p = spectral.eigenvectors()
        np.testing.assert_allclose(t @ p, p * spectral.lambdas, atol=1e-13)
        assert spectral.eigenvector_entry(1, n) == pytest.approx(p[0, n - 1], abs=1e-15)


def test_eigenvectors_are_orthonormal():
    for n in (1, 2, 7, 40):
        p = eigen_sym_tridiag(1, 0, n).eigenvectors()
        np.testing.assert_allclose(p.T @ p, np.eye(n), atol=1e-13)


def test_eigenvalues_pair_around_the_diagonal():
    spectral = eigen_sym_tridiag(0.8, -1.5, 11)
    np.testing.assert_allclose(spectral.lambdas + spectral.lambdas[::-1], -3.0, atol=1e-14)


def test_sym_exact_small_cases():
    np.testing.assert_allclose(expm_sym_tridiag_exact(0, 0.3, 4), math.exp(0.3) * np.eye(4), atol=1e-14)
    exact = np.array([[math.cosh(1), math.sinh(1)], [math.sinh(1), math.cosh(1)]])
    np.testing.assert_allclose(expm_sym_tridiag_exact(1, 0, 2), exact, rtol=1e-14)


def test_sym_exact_matches_scipy():
    for z, b, n in [(1, -2, 12), (0.5 + 0.5j, 1j, 9), (-2, 0.1, 6)]:
        dense = TridiagSpec(z, b, z, n).to_dense()
        np.testing.assert_allclose(expm_sym_tridiag_exact(z, b, n), linalg.expm(dense), atol=1e-12 * _inf_norm(linalg.expm(dense)))


def test_sym_exact_structure():
    m = expm_sym_tridiag_exact(1, -2, 50)
    np.testing.assert_allclose(m, m.T, atol=1e-14)
    np.testing.assert_allclose(m, m[::-1, ::-1], atol=1e-14)
    near = np.abs(np.subtract.outer(np.arange(50), np.arange(50))) <= 10
    assert np.all(m.real[near] > 0)


def test_sym_exact_overflow():
    with pytest.raises(NumericOverflowError):
        expm_sym_tridiag_exact(400, 0, 5)


def test_dense_small_basic_cases():
    np.testing.assert_array_equal(expm_dense_small(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(expm_dense_small(np.diag([1.0, -2.0, 0.5j])),
                               np.diag(np.exp([1.0, -2.0, 0.5j])), rtol=1e-14)
    nilpotent = np.array([[0, 1], [0, 0]], dtype=float)
    np.testing.assert_allclose(expm_dense_small(nilpotent), [[1, 1], [0, 1]], atol=1e-15)


def test_dense_small_matches_taylor_series():
    rng = np.random.default_rng(6)
    m = rng.standard_normal((4, 4))
    m *= 2.0 / _inf_norm(m)
    series = np.eye(4)
    term = np.eye(4)
    for k in range(1, 60):
        term = term @ m / k
        series = series + term
    np.testing.assert_allclose(expm_dense_small(m), series, rtol=1e-11, atol=1e-13)


def test_dense_small_matches_scipy_after_squaring():
    rng = np.random.default_rng(7)
    m = 2.0 * (rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
    expected = linalg.expm(m)
    np.testing.assert_allclose(expm_dense_small(m), expected, atol=1e-10 * _inf_norm(expected))


@pytest.mark.parametrize("m", [np.ones((2, 3)), np.ones(4), np.array([[1.0, np.nan], [0.0, 1.0]])])
def test_dense_small_rejects_bad_input(m):
    with pytest.raises(InvalidArgumentError):
        expm_dense_small(m)


def test_exact_diagonal_and_one_sided_cases():
    np.testing.assert_allclose(expm_tridiag_exact(TridiagSpec(0, 1, 0, 3)), math.e * np.eye(3), rtol=1e-15)
    for spec in [TridiagSpec(0, -0.5, 2, 6), TridiagSpec(1.5j, 0.2, 0, 6)]:
        np.testing.assert_allclose(expm_tridiag_exact(spec), linalg.expm(spec.to_dense()), rtol=1e-12, atol=1e-14)


def test_exact_nonsymmetric_small():
    spec = TridiagSpec(4, 0, 1, 3)
    expected = expm_dense_small(spec.to_dense())
    np.testing.assert_allclose(expm_tridiag_exact(spec), expected, atol=1e-12 * _inf_norm(expected))


def test_exact_branch_choice_is_irrelevant():
    spec = TridiagSpec(-3 + 1j, 0.4, 1 - 2j, 8)
    plus = expm_tridiag_exact(spec, root_sign=1)
    minus = expm_tridiag_exact(spec, root_sign=-1)
    np.testing.assert_allclose(plus, minus, atol=1e-12 * _inf_norm(plus))
    with pytest.raises(InvalidArgumentError):
        expm_tridiag_exact(spec, root_sign=2)


def test_exact_matches_dense_oracle_on_random_specs():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(1, 13))
        # off-diagonal moduli in [0.5, 2] keep |sqrt(a/c)| <= 2
        a, c = [rng.uniform(0.5, 2) * np.exp(2j * np.pi * rng.uniform()) for _ in range(2)]
        b = complex(rng.standard_normal(), rng.standard_normal())
        spec = TridiagSpec(a, b, c, n)
        expected = expm_dense_small(spec.to_dense())
        np.testing.assert_allclose(expm_tridiag_exact(spec), expected, atol=1e-9 * _inf_norm(expected))


def test_similarity_scale():
    scale = similarity_scale(2.0, 3)
    np.testing.assert_allclose(scale, [[1, 0.5, 0.25], [2, 1, 0.5], [4, 2, 1]], rtol=1e-15)
    with pytest.raises(NumericOverflowError):
        similarity_scale(1e10, 100)
