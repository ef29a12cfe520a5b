import numpy as np
import pytest

from iqseq.linalg import (
    NotHermitianError,
    NotPositiveError,
    PAULI_Z,
    complete_basis,
    kernel_basis,
    matrix_power,
    pauli_power,
    rank,
    spectral_decomposition,
    sqrtm_psd,
    support_projector,
    svd,
)
from iqseq.random_objects import ginibre, random_psd


def proj(d, *idx):
    p = np.zeros((d, d), complex)
    for i in idx:
        p[i, i] = 1
    return p


def test_spectrum_of_identity():
    spec = spectral_decomposition(np.eye(3))
    assert np.allclose(spec.eigenvalues, [1, 1, 1])
    assert spec.rank == 3


def test_spectrum_flags_zero_eigenvalues():
    b1 = 0.5 * proj(4, 2) + proj(4, 3)
    spec = spectral_decomposition(b1)
    assert np.allclose(spec.eigenvalues, [1, 0.5, 0, 0])
    assert spec.zero.tolist() == [False, False, True, True]


def test_spectrum_reconstructs(rng):
    g = ginibre(rng, 4, 4)
    h = g + g.conj().T
    spec = spectral_decomposition(h)
    assert np.linalg.norm(spec.reconstruct() - h) < 1e-10 * np.linalg.norm(h)
    v = spec.eigenvectors
    assert np.allclose(v.conj().T @ v, np.eye(4), atol=1e-12)


def test_eigenvector_phase_is_fixed(rng):
    g = ginibre(rng, 3, 3)
    spec = spectral_decomposition(g + g.conj().T)
    for col in spec.eigenvectors.T:
        pivot = col[np.argmax(np.abs(col))]
        assert abs(pivot.imag) < 1e-14 and pivot.real > 0


def test_spectral_decomposition_rejects_bad_input():
    with pytest.raises(NotHermitianError):
        spectral_decomposition(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        spectral_decomposition(np.ones((2, 3)))


def test_inverse_square_root_of_printed_root():
    p0, p1, p2 = proj(3, 0), proj(3, 1), proj(3, 2)
    root = p0 / np.sqrt(2) + p1 + p2 / np.sqrt(2)
    b0 = root @ root
    assert np.allclose(matrix_power(b0, -0.5), np.sqrt(2) * p0 + p1 + np.sqrt(2) * p2, atol=1e-12)


def test_identity_powers():
    for gamma in (-1.5, -0.5, 0.0, 0.5, 2.0):
        assert np.allclose(matrix_power(np.eye(3), gamma), np.eye(3))


def test_square_root_squares_back(rng):
    h = random_psd(rng, 4)
    r = sqrtm_psd(h)
    assert np.linalg.norm(r @ r - h) < 1e-10 * np.linalg.norm(h)


def test_negative_power_is_pseudo_inverse(rng):
    h = random_psd(rng, 4, rank=2)
    inv = matrix_power(h, -1.0)
    assert np.allclose(h @ inv @ h, h, atol=1e-10)
    assert np.allclose(inv @ h @ inv, inv, atol=1e-8)


def test_matrix_power_rejects_negative_matrix():
    with pytest.raises(NotPositiveError):
        matrix_power(-np.eye(2), 0.5)


def test_pauli_power_projector():
    h = 0.5 * np.eye(2) + 0.5 * PAULI_Z
    assert np.allclose(pauli_power(h, 0.5), proj(2, 0), atol=1e-15)


def test_pauli_power_matches_general_path(rng):
    for _ in range(50):
        h = random_psd(rng, 2)
        for gamma in (-0.5, 0.5, 1.5):
            assert np.allclose(pauli_power(h, gamma), matrix_power(h, gamma), atol=1e-12, rtol=0)


def test_pauli_power_rejects_other_dimensions():
    with pytest.raises(ValueError):
        pauli_power(np.eye(3), 0.5)


def test_support_projector_examples():
    assert np.allclose(support_projector(np.eye(3)), np.eye(3))
    b1 = 0.5 * (proj(3, 2) + proj(3, 0))
    assert np.allclose(support_projector(b1), proj(3, 0, 2))


def test_support_projector_idempotent(rng):
    h = random_psd(rng, 5, rank=3)
    p = support_projector(h)
    assert np.allclose(p @ p, p, atol=1e-12)
    assert np.allclose(p @ h, h, atol=1e-10)
    assert rank(h) == 3
    assert kernel_basis(h).shape == (5, 2)


def test_svd_examples():
    dec = svd(proj(2, 0))
    assert np.allclose(dec.values, [1])
    k2 = np.zeros((2, 4), complex)
    k2[0, 1] = k2[1, 2] = 1 / np.sqrt(2)
    dec = svd(k2)
    assert np.allclose(dec.values, [1 / np.sqrt(2)] * 2)


def test_svd_reconstructs(rng):
    t = ginibre(rng, 3, 5)
    assert np.linalg.norm(svd(t).reconstruct() - t) < 1e-10


def test_complete_basis_is_orthonormal(rng):
    q = np.linalg.qr(ginibre(rng, 5, 2))[0]
    full = complete_basis(q, 5)
    assert np.allclose(full.conj().T @ full, np.eye(5), atol=1e-12)
    assert np.allclose(full[:, :2], q)
    assert complete_basis(np.zeros((3, 0)), 3, 2).shape == (3, 2)


def test_extreme_scales_are_rescaled():
    h = np.diag([4.0, 1.0]) * 2.0**-1060
    out = matrix_power(h, -0.5)
    assert np.allclose(out * 2.0**-530, np.diag([0.5, 1.0]), rtol=1e-14)
    assert np.allclose(pauli_power(h, -0.5), out, rtol=1e-14)
    big = np.eye(2) * 2.0**600
    assert np.allclose(matrix_power(big, 0.5), np.eye(2) * 2.0**300)


def test_unrepresentable_power_raises():
    h = np.eye(2) * 2.0**-1060
    with pytest.raises(OverflowError):
        matrix_power(h, -1.0)
    with pytest.raises(OverflowError):
        pauli_power(h, -1.0)
