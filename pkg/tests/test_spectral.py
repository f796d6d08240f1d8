import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nevaikit import spectral as sp
from nevaikit.errors import DomainError
from nevaikit.models import make_anderson, make_fibonacci, make_free, make_szwarc


def catalan_moment(k):
    """Number of Dyck paths of length k (0 for odd k)."""
    if k % 2:
        return 0
    h = k // 2
    return math.comb(2 * h, h) // (h + 1)


def test_matrix_validation():
    with pytest.raises(DomainError):
        sp.TridiagonalMatrix(np.zeros(3), np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        sp.TridiagonalMatrix(np.zeros(3), np.ones(3))


@settings(max_examples=25, deadline=None)
@given(m=st.integers(1, 80), seed=st.integers(0, 2**32 - 1))
def test_eigen_against_lapack(m, seed):
    M = sp.truncate(make_anderson(seed), m)
    eig = sp.eigen_tridiag(M)
    ref = np.linalg.eigvalsh(M.dense())
    assert np.allclose(eig.values, ref, atol=1e-12)
    V = eig.vectors
    assert np.allclose(V.T @ V, np.eye(m), atol=1e-9)
    assert np.all(V[0] >= 0)


def test_sturm_count_brackets():
    M = sp.truncate(make_szwarc(0.3), 40)
    lam = np.linalg.eigvalsh(M.dense())
    mids = 0.5 * (lam[1:] + lam[:-1])
    assert sp.sturm_count(M, mids).tolist() == list(range(1, 40))


def test_close_eigenvalues_stay_orthogonal():
    # Wilkinson-like matrix with nearly degenerate pairs
    m = 41
    d = np.abs(np.arange(m) - m // 2).astype(float)
    M = sp.TridiagonalMatrix(d, np.ones(m - 1))
    eig = sp.eigen_tridiag(M)
    assert np.allclose(eig.vectors.T @ eig.vectors, np.eye(m), atol=1e-8)


def test_free_truncation_eigenvalues():
    m = 30
    vals = sp.eigvals_bisect(sp.truncate(make_free(), m))
    expected = 2 * np.cos(np.pi * np.arange(m, 0, -1) / (m + 1))
    assert np.allclose(vals, expected, atol=1e-13)


def test_zeros_of_p_are_roots():
    from nevaikit.recurrence import ortho_stream

    seq = make_anderson(12)
    z = sp.zeros_of_p(seq, 15)
    for x in z:
        st_ = ortho_stream(seq, x, 15)
        assert abs(st_.p[15]) <= 1e-9 * math.sqrt(st_.K[15])


@pytest.mark.parametrize("m", [6, 9, 25])
def test_catalan_moments(m):
    mu = sp.spectral_measure_at(sp.truncate(make_free(), m), 1)
    for k in range(9):
        assert abs(mu.moment(k) - catalan_moment(k)) < 1e-10
        assert sp.operator_moment(make_free(), k) == catalan_moment(k)
    assert sp.moment_distance(mu, make_free(), 8) < 1e-10


def test_small_truncation_misses_high_moments():
    mu = sp.spectral_measure_at(sp.truncate(make_free(), 3), 1)
    assert abs(mu.moment(8) - 14) > 0.5


def test_measure_validation():
    with pytest.raises(DomainError):
        sp.FiniteSpectralMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.4]))
    with pytest.raises(DomainError):
        sp.FiniteSpectralMeasure(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    assert sp.FiniteSpectralMeasure.point_mass(0.3).moment(2) == pytest.approx(0.09)


def test_recurrence_weights_match_eigenvectors():
    seq = make_fibonacci(0.4)
    n = 30
    eig = sp.eigen_tridiag(sp.truncate(seq, n + 1))
    w = eig.components(n + 1) ** 2
    assert np.max(np.abs(sp.recurrence_weights(seq, eig.values, n, dps=40) - w)) < 1e-8
    # the float route is fine for delocalized eigenvectors
    free = make_free()
    eig = sp.eigen_tridiag(sp.truncate(free, n + 1))
    w = eig.components(n + 1) ** 2
    assert np.max(np.abs(sp.recurrence_weights(free, eig.values, n) - w)) < 1e-10


def test_regularity_sequence():
    r = sp.regularity_sequence(make_free(), 100)
    assert np.all(r == 1.0)
    with pytest.raises(DomainError):
        sp.regularity_sequence(make_free(), 0)
