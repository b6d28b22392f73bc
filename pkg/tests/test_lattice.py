"""Basis handling, QR, LLL, complex embedding, and the brute-force oracles."""

import math

import numpy as np
import pytest

from latdec import (
    DimensionTooLargeError,
    LatticeBasis,
    QrFactors,
    SingularBasisError,
    UnimodularTransform,
    brute_force_cvp,
    complex_to_real,
    enumerate_in_radius_naive,
    fincke_pohst,
    lll_reduce,
    min_diag,
    qr_decompose,
)
from latdec.lattice import gram_schmidt_coefficients, is_lll_reduced


def test_qr_identity():
    f = qr_decompose(LatticeBasis(np.eye(2)))
    assert np.allclose(f.q, np.eye(2))
    assert np.allclose(f.r, np.eye(2))


def test_qr_diagonal_already_triangular():
    f = qr_decompose(LatticeBasis(np.diag([2.0, 3.0])))
    assert np.allclose(f.q, np.eye(2))
    assert np.allclose(f.r, np.diag([2.0, 3.0]))


def test_qr_random_reconstruction_and_sign_convention():
    rng = np.random.default_rng(0)
    for _ in range(20):
        b = rng.standard_normal((4, 4))
        f = qr_decompose(LatticeBasis(b))
        assert np.abs(b - f.q @ f.r).max() <= 1e-9
        assert np.abs(f.q.T @ f.q - np.eye(4)).max() <= 1e-9
        assert (np.diag(f.r) > 0).all()


def test_qr_singular_basis_rejected():
    b = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularBasisError):
        qr_decompose(LatticeBasis(b))


def test_lll_identity_unchanged():
    red, u = lll_reduce(LatticeBasis(np.eye(2)))
    assert np.allclose(red.matrix, np.eye(2))
    assert np.array_equal(u.matrix, np.eye(2, dtype=np.int64))


def test_lll_size_reduction_example():
    # column 2 = (10, 1) reduces by 10x column 1 = (1, 0) to (0, 1)
    red, u = lll_reduce(LatticeBasis(np.array([[1.0, 10.0], [0.0, 1.0]])))
    assert is_lll_reduced(red.matrix)
    cols = {tuple(red.matrix[:, j]) for j in range(2)}
    assert cols == {(1.0, 0.0), (0.0, 1.0)}


def test_lll_random_predicates_and_transform():
    rng = np.random.default_rng(1)
    for _ in range(25):
        b = rng.standard_normal((8, 8))
        red, u = lll_reduce(LatticeBasis(b))
        _, mu = gram_schmidt_coefficients(red.matrix)
        for i in range(8):
            for j in range(i):
                assert abs(mu[i, j]) <= 0.5 + 1e-9
        assert is_lll_reduced(red.matrix)
        # exact relation output = input @ U and lattice preservation
        assert np.allclose(red.matrix, b @ u.matrix)
        u_inv = np.rint(np.linalg.inv(u.matrix)).astype(np.int64)
        assert np.array_equal(u.matrix @ u_inv, np.eye(8, dtype=np.int64))


def test_lll_min_diag_never_decreases():
    rng = np.random.default_rng(2)
    for _ in range(25):
        b = LatticeBasis(rng.standard_normal((6, 6)))
        red, _ = lll_reduce(b)
        before = min_diag(qr_decompose(b))
        after = min_diag(qr_decompose(red))
        assert after >= before - 1e-9


def test_unimodular_validation():
    UnimodularTransform(np.array([[1, 5], [0, -1]]))
    with pytest.raises(ValueError):
        UnimodularTransform(np.array([[2, 0], [0, 1]]))  # det 2


def test_complex_to_real_identity_channel():
    basis, y = complex_to_real(np.array([[1.0 + 0.0j]]), np.array([0.5 + 0.25j]))
    assert np.allclose(basis.matrix, np.eye(2))
    assert np.allclose(y, [0.5, 0.25])


def test_complex_to_real_rotation():
    basis, _ = complex_to_real(np.array([[1.0j]]), np.array([0.0j]))
    assert np.allclose(basis.matrix, np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_complex_to_real_zero_noise_round_trip():
    rng = np.random.default_rng(3)
    from latdec import babai_sic

    for _ in range(20):
        h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        x = rng.integers(-4, 5, 2) + 1j * rng.integers(-4, 5, 2)
        basis, y = complex_to_real(h, h @ x)
        f = qr_decompose(basis)
        got = babai_sic(f, f.q.T @ y)
        want = np.concatenate([x.real, x.imag]).astype(np.int64)
        assert np.array_equal(got, want)


def test_min_diag_values():
    assert min_diag(qr_decompose(LatticeBasis(np.eye(4)))) == 1.0
    f = QrFactors(q=np.eye(3), r=np.diag([2.0, 0.5, 3.0]))
    assert min_diag(f) == 0.5


def test_brute_force_cvp_simple():
    f = qr_decompose(LatticeBasis(np.eye(2)))
    x, d = brute_force_cvp(f, np.array([0.2, -0.3]))
    assert np.array_equal(x, [0, 0])
    assert abs(d - math.sqrt(0.13)) <= 1e-12


def test_brute_force_cvp_on_lattice_point():
    f = qr_decompose(LatticeBasis(np.eye(2)))
    x, d = brute_force_cvp(f, np.array([1.0, 2.0]))
    assert np.array_equal(x, [1, 2])
    assert d == 0.0


def test_brute_force_cvp_matches_enumeration():
    f = qr_decompose(LatticeBasis(np.array([[1.0, 0.5], [0.0, 0.5]])))
    y = np.array([0.0, 0.4])
    x, d = brute_force_cvp(f, y)
    got = fincke_pohst(f, y, d)
    assert any(np.array_equal(v, x) for v, _ in got.candidates)
    assert abs(got.best_dist - d) <= 1e-12


def test_brute_force_cvp_dimension_guard():
    f = qr_decompose(LatticeBasis(np.eye(11)))
    with pytest.raises(DimensionTooLargeError):
        brute_force_cvp(f, np.zeros(11))


def test_enumerate_in_radius_small():
    f = qr_decompose(LatticeBasis(np.eye(2)))
    y = np.array([0.2, -0.3])
    # (0,0) is at distance 0.36056; the runner-up (0,-1) at 0.72801
    assert enumerate_in_radius_naive(f, y, 0.5) == {(0, 0)}


def test_enumerate_in_radius_zero_on_lattice():
    f = qr_decompose(LatticeBasis(np.eye(2)))
    assert enumerate_in_radius_naive(f, np.array([2.0, -1.0]), 0.0) == {(2, -1)}


def test_enumerate_in_radius_saturates_box():
    f = qr_decompose(LatticeBasis(np.eye(2)))
    got = enumerate_in_radius_naive(f, np.zeros(2), 100.0, box_halfwidth=3)
    assert len(got) == 49


def test_oracle_consistency():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        f = qr_decompose(LatticeBasis(rng.standard_normal((n, n))))
        y = rng.standard_normal(n)
        x, d = brute_force_cvp(f, y)
        points = enumerate_in_radius_naive(f, y, d)
        dists = [np.linalg.norm(f.r @ np.array(p) - y) for p in points]
        assert min(dists) <= d + 1e-12


def test_basis_validation():
    with pytest.raises(ValueError):
        LatticeBasis(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        LatticeBasis(np.array([[np.nan, 0.0], [0.0, 1.0]]))
