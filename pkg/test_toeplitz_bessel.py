#!/usr/bin/env python3
"""
Test script for the Bessel-based tridiagonal Toeplitz exponential:
generators, error bounds, bandwidth selection, anti-tridiagonal matrices
and the method dispatcher.
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy import linalg, special

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from common.errors import InvalidArgumentError
from exponentials.spectral_oracle import expm_dense_small, expm_sym_tridiag_exact, expm_tridiag_exact
from exponentials.toeplitz_bessel import (anti_tridiag_dense, approx_error_bound, band_error_bound,
                                          coshm_sinhm_tridiag, expm_anti_tridiag, expm_tridiag,
                                          expm_toeplitz_bessel, select_bandwidth,
                                          similarity_parameters)
from structures.matrices import BandMatrix, TridiagSpec, identity, materialize

EPS = np.finfo(float).eps


def _inf_norm(m):
    return float(np.max(np.sum(np.abs(m), axis=1)))


def test_generators_of_symmetric_matrix():
    rep = expm_toeplitz_bessel(TridiagSpec(1, 0, 1, 4))
    orders = special.iv(np.arange(6), 2.0)
    np.testing.assert_allclose(rep.u, orders[:4], rtol=1e-13)
    np.testing.assert_allclose(rep.v, orders[[5, 4, 3, 2]], rtol=1e-13)
    assert rep.ratio == 1
    assert rep.diag_factor == 1


def test_similarity_parameters():
    z, ratio = similarity_parameters(TridiagSpec(4, 0, 1, 3))
    assert ratio == pytest.approx(2)
    assert z == pytest.approx(2)
    with pytest.raises(InvalidArgumentError):
        similarity_parameters(TridiagSpec(0, 1, 1, 3))
    with pytest.raises(InvalidArgumentError):
        expm_toeplitz_bessel(TridiagSpec(1, 1, 0, 3))


def test_large_symmetric_matrix_matches_eigen_sum():
    spec = TridiagSpec(1, -2, 1, 200)
    approx = materialize(expm_toeplitz_bessel(spec))
    exact = expm_sym_tridiag_exact(1, -2, 200)
    assert _inf_norm(approx - exact) <= 1e-13 * _inf_norm(exact)


def test_nonsymmetric_real_matrix():
    spec = TridiagSpec(4, 0, 1, 20)
    approx = materialize(expm_toeplitz_bessel(spec))
    exact = expm_tridiag_exact(spec)
    assert _inf_norm(approx - exact) <= 1e-9 * _inf_norm(exact)


@pytest.mark.parametrize("n", [5, 10, 20, 50, 100, 200])
@pytest.mark.parametrize("z, b", [(1, -2), (1, 0), (0.5, 1j)])
def test_error_within_approximation_bound(n, z, b):
    spec = TridiagSpec(z, b, z, n)
    reference = linalg.expm(spec.to_dense())
    error = _inf_norm(materialize(expm_toeplitz_bessel(spec)) - reference)
    # the dense reference carries roundoff growing with n
    floor = (64 + n) * EPS * max(1.0, _inf_norm(reference))
    assert error <= max(approx_error_bound(b, z, n), floor)


@pytest.mark.parametrize("n", [20, 30])
def test_complex_nonsymmetric_matrix(n):
    spec = TridiagSpec(4 - 3j, 1j, -2 + 1j, n).scaled(0.5)
    exact = expm_dense_small(spec.to_dense())
    error = _inf_norm(materialize(expm_toeplitz_bessel(spec)) - exact)
    z, ratio = similarity_parameters(spec)
    delta = max(abs(ratio), 1 / abs(ratio))
    assert error <= max(approx_error_bound(spec.b, z, n) * delta ** (n - 1), 1e-9 * _inf_norm(exact))


def test_approx_error_bound_values():
    assert approx_error_bound(0, 0, 1) == pytest.approx(0.03125)
    assert approx_error_bound(-2, 1, 10) == pytest.approx(4.15e-7, rel=1e-2)
    assert approx_error_bound(1000, 1, 3) == math.inf


def test_approx_error_bound_decays():
    bounds = [approx_error_bound(-2, 1, n) for n in (10, 20, 40, 80)]
    assert all(later < earlier for earlier, later in zip(bounds, bounds[1:]))
    # geometric once 2n + 2 exceeds exp(2 Re z)
    z = 2.0
    start = math.ceil(math.exp(2 * z) / 2)
    for n in range(start, start + 10):
        assert approx_error_bound(0, z, n + 1) < approx_error_bound(0, z, n)


def test_band_error_bound_formula():
    spec = TridiagSpec(1, -2, 1, 30)
    for d in (0, 3, 10):
        expected = 2 * 1 ** d / math.factorial(d) * math.exp(-2 + 3)
        assert band_error_bound(spec, d) == pytest.approx(expected, rel=1e-12)
    assert band_error_bound(TridiagSpec(0, 0.5, 0, 4), 0) == pytest.approx(2 * math.exp(0.5))
    assert band_error_bound(TridiagSpec(0, 0.5, 0, 4), 2) == 0
    with pytest.raises(InvalidArgumentError):
        band_error_bound(spec, 30)


def test_select_bandwidth():
    budget = select_bandwidth(TridiagSpec(1, -2, 1, 100), 1e-8)
    assert budget.selected_d == 13
    assert budget.satisfiable
    assert budget.band_bound <= 1e-8
    assert band_error_bound(TridiagSpec(1, -2, 1, 100), 12) > 1e-8

    assert select_bandwidth(TridiagSpec(1, -2, 1, 100), 10.0).selected_d == 0


def test_select_bandwidth_unsatisfiable(caplog):
    # delta = 1e6 makes the band bound exceed 1e40 for every d
    spec = TridiagSpec(1e6, 0, 1e-6, 10)
    with caplog.at_level("WARNING"):
        budget = select_bandwidth(spec, 1e-10)
    assert not budget.satisfiable
    assert budget.selected_d == 9
    assert budget.band_bound > 1e40
    assert "No half-bandwidth" in caplog.text


def test_band_bound_of_bidiagonal_matrix():
    for spec in (TridiagSpec(0, 1, 1.5, 30), TridiagSpec(-1.5j, 1, 0, 30)):
        exact = expm_tridiag_exact(spec)
        for d in (2, 6, 12):
            error = _inf_norm(exact - BandMatrix.from_dense(exact, d).to_dense())
            assert error <= band_error_bound(spec, d)
        budget = select_bandwidth(spec, 1e-8)
        assert budget.satisfiable
        assert budget.approx_bound == 0.0
        assert budget.band_bound <= 1e-8


@pytest.mark.parametrize("tol", [0, -1e-3, float("nan"), float("inf")])
def test_select_bandwidth_rejects_bad_tolerance(tol):
    with pytest.raises(InvalidArgumentError):
        select_bandwidth(TridiagSpec(1, -2, 1, 10), tol)


def test_band_truncation_error_decays():
    spec = TridiagSpec(1, -2, 1, 500)
    rep = expm_toeplitz_bessel(spec)
    dense = materialize(rep)
    errors = []
    for d in range(2, 11):
        error = _inf_norm(dense - materialize(rep, mode="band", d=d).to_dense())
        assert error <= band_error_bound(spec, d)
        errors.append(error)
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))


def test_positivity_of_heat_like_exponential():
    for n in (5, 20, 50, 120, 200):
        m = materialize(expm_toeplitz_bessel(TridiagSpec(1, -2, 1, n)))
        assert np.all(m.real >= 0)
    m = materialize(expm_toeplitz_bessel(TridiagSpec(1, -2, 1, 50)))
    assert np.all(m.real > 0)


def test_anti_tridiag_layout():
    z = anti_tridiag_dense(2, 5, 4)
    expected = np.array([[0, 0, 2, 5], [0, 2, 5, 2], [2, 5, 2, 0], [5, 2, 0, 0]], dtype=complex)
    np.testing.assert_array_equal(z, expected)


def test_anti_exponential_closed_forms():
    np.testing.assert_allclose(expm_anti_tridiag(0, 0.7, 1), [[math.exp(0.7)]], rtol=1e-14)
    expected = math.cosh(0.7) * np.eye(5) + math.sinh(0.7) * np.eye(5)[::-1]
    np.testing.assert_allclose(expm_anti_tridiag(0, 0.7, 5), expected, rtol=1e-14, atol=1e-15)


def test_anti_exponential_matches_dense_oracle():
    z = anti_tridiag_dense(1, 0, 14)
    assert _inf_norm(expm_anti_tridiag(1, 0, 14) - expm_dense_small(z)) <= 1e-10


@pytest.mark.parametrize("n", [2, 3, 5, 8, 10])
def test_anti_exponential_small_orders(n):
    a, b = 1.0, 0.0
    error = _inf_norm(expm_anti_tridiag(a, b, n) - expm_dense_small(anti_tridiag_dense(a, b, n)))
    # cosh and sinh each carry the approximation error of one exponential
    assert error <= 2 * approx_error_bound(b, a, n) + 1e-12


@pytest.mark.parametrize("a, b, n", [(0.5, 0.0, 10), (1.0, 0.0, 14), (0.5, 0.3, 12)])
def test_anti_exponential_inverse(a, b, n):
    product = expm_anti_tridiag(a, b, n) @ expm_anti_tridiag(-a, -b, n)
    assert _inf_norm(product - identity(n)) <= 1e-9


def test_cosh_sinh_match_scipy():
    spec = TridiagSpec(1, 0.3, 1, 16)
    cosh, sinh = coshm_sinhm_tridiag(spec)
    dense = spec.to_dense()
    np.testing.assert_allclose(cosh, linalg.coshm(dense), atol=1e-9)
    np.testing.assert_allclose(sinh, linalg.sinhm(dense), atol=1e-9)
    assert _inf_norm(cosh @ cosh - sinh @ sinh - identity(16)) <= 1e-9


def test_dispatcher_modes_agree():
    spec = TridiagSpec(1, -2, 1, 30)
    bessel = expm_tridiag(spec, "bessel")
    exact = expm_tridiag(spec, "exact")
    oracle = expm_tridiag(spec, "dense-oracle")
    assert _inf_norm(bessel - exact) <= 1e-12
    assert _inf_norm(oracle - exact) <= 1e-12

    band = expm_tridiag(spec, "bessel", d=5)
    assert isinstance(band, BandMatrix)
    assert band.d == 5
    assert isinstance(expm_tridiag(spec, "exact", d=5), BandMatrix)


def test_dispatcher_degenerate_cases():
    np.testing.assert_allclose(expm_tridiag(TridiagSpec(0, 1, 0, 3)), math.e * np.eye(3), rtol=1e-15)
    one_sided = TridiagSpec(0, -0.5, 2, 6)
    np.testing.assert_allclose(expm_tridiag(one_sided), expm_tridiag_exact(one_sided), rtol=1e-15)
    np.testing.assert_allclose(expm_tridiag(TridiagSpec(3, 0.25, 7, 1)), [[math.exp(0.25)]], rtol=1e-14)


def test_dispatcher_rejects_bad_arguments():
    spec = TridiagSpec(1, -2, 1, 10)
    with pytest.raises(InvalidArgumentError):
        expm_tridiag(spec, "pade")
    with pytest.raises(InvalidArgumentError):
        expm_tridiag(spec, "bessel", d=10)
