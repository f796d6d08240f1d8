import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nevaikit.errors import DomainError
from nevaikit.models import make_anderson, make_constant, make_free, make_szwarc
from nevaikit.recurrence import (cd_kernel_direct, cd_kernel_formula, christoffel,
                                 christoffel_via_moments, eta_moment_k, eta_moments, final_state,
                                 nevai_ratio_stream, ortho_stream)


def chebyshev_u(n, x):
    """Orthonormal polynomials of the free model: U_n(x/2)."""
    t = np.arccos(np.clip(x / 2.0, -1, 1))
    return np.sin((n + 1) * t) / np.sin(t)


def test_free_polynomials_are_chebyshev_u():
    x0 = 0.73
    p = ortho_stream(make_free(), x0, 60).true_p()
    n = np.arange(61)
    assert np.allclose(p, chebyshev_u(n, x0), atol=1e-12)


def test_rescaling_is_invisible():
    seq = make_anderson(11)
    x0 = 1.3
    a = ortho_stream(seq, x0, 300, rescale=True)
    b = ortho_stream(seq, x0, 300, rescale=False)
    assert np.allclose(a.log_K, b.log_K, rtol=1e-12)
    assert np.allclose(a.ratio, b.ratio, rtol=1e-10)


def test_no_overflow_for_long_growing_runs():
    st_ = ortho_stream(make_constant(1.0, 0.0), 2.5, 200_000)
    assert np.all(np.isfinite(st_.log_K))
    # p_n grows like 2^n at x0 = 5/2
    assert abs(st_.log_abs_p[-1] / 200_000 - math.log(2)) < 1e-4


def test_final_state_matches_stream():
    seq = make_szwarc(0.3)
    st_ = ortho_stream(seq, -0.4, 500)
    fs = final_state(seq, -0.4, 500)
    assert math.isclose(fs.ratio, st_.ratio[-1], rel_tol=1e-12)
    assert math.isclose(fs.log_K, st_.log_K[-1], rel_tol=1e-12)


def test_ratio_is_between_zero_and_one():
    r = nevai_ratio_stream(make_anderson(2), 0.3, 5000)
    assert r[0] == 1.0
    assert np.all((r >= 0) & (r <= 1))


def test_free_nevai_ratio_closed_form_at_zero():
    # at x0 = 0 odd polynomials vanish and even ones are +-1, so r_{2m} = 1/(m+1)
    r = nevai_ratio_stream(make_free(), 0.0, 100)
    m = np.arange(51)
    assert np.allclose(r[::2], 1.0 / (m + 1))
    assert np.allclose(r[1::2], 0.0)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-2.4, 2.4), y=st.floats(-2.4, 2.4), n=st.integers(0, 150))
def test_cd_formula_matches_sum(x, y, n):
    if abs(x - y) < 1e-2:
        return
    seq = make_anderson(9)
    d = cd_kernel_direct(seq, x, y, n)
    f = cd_kernel_formula(seq, x, y, n)
    scale = math.sqrt(cd_kernel_direct(seq, x, x, n) * cd_kernel_direct(seq, y, y, n))
    assert abs(d - f) <= 1e-9 * scale


def test_christoffel_is_reciprocal_kernel():
    seq = make_free()
    for n in (0, 3, 17):
        assert math.isclose(christoffel(seq, 0.4, n) * cd_kernel_direct(seq, 0.4, 0.4, n), 1.0,
                            rel_tol=1e-13)


def test_christoffel_via_moments_free():
    for x0 in (0.0, 0.5, 1.5):
        for n in range(0, 11):
            assert math.isclose(christoffel_via_moments(make_free(), x0, n),
                                christoffel(make_free(), x0, n), rel_tol=1e-8)


def test_christoffel_via_moments_rejects_large_n():
    with pytest.raises(DomainError):
        christoffel_via_moments(make_free(), 0.0, 40)


@settings(max_examples=40, deadline=None)
@given(x0=st.floats(-2.5, 2.5), n=st.integers(0, 400))
def test_eta_moments_against_power_moments(x0, n):
    seq = make_anderson(4)
    e = eta_moments(seq, x0, n)
    m1, m2 = eta_moment_k(seq, x0, n, 1), eta_moment_k(seq, x0, n, 2)
    assert eta_moment_k(seq, x0, n, 0) == 1.0
    assert abs((m1 - x0) - e.first) < 1e-10
    assert abs((m2 - 2 * x0 * m1 + x0 * x0) - e.second) < 1e-10


def test_eta_moment_domain():
    with pytest.raises(DomainError):
        eta_moment_k(make_free(), 0.0, 5, 31)
    with pytest.raises(DomainError):
        eta_moments(make_free(), 0.0, -1)
