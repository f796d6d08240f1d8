import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nevaikit.errors import DomainError
from nevaikit.models import make_anderson, make_block41, make_constant, make_fibonacci, make_szwarc
from nevaikit.recurrence import ortho_stream
from nevaikit.transfer import (Mat2Log, block_slope, fibonacci_trace_escape, growth_test,
                               hyperbolic_rate, log_norm_profile, lyapunov_estimate, step_matrix,
                               transfer_product)

# log ||T_2000(5/2)||_F / 2000 for the Szwarc model with beta = 0, computed
# with exact rational products (see exact_szwarc_rate below) and frozen.
SZWARC_EXACT_RATE_2000 = 0.006939608094184677


def exact_szwarc_rate(N):
    b = make_szwarc(0.0).arrays(1, N + 1)[1]
    x = Fraction(5, 2)
    m = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]
    for bj in b:
        c = x - Fraction(bj)
        m = [[c * m[0][0] - m[1][0], c * m[0][1] - m[1][1]], [m[0][0], m[0][1]]]
    s = sum(e * e for row in m for e in row)
    return 0.5 * (math.log(s.numerator) - math.log(s.denominator)) / N


@settings(max_examples=50, deadline=None)
@given(x0=st.floats(-3, 3), n=st.integers(1, 300))
def test_unimodular_and_first_column(x0, n):
    seq = make_anderson(8)
    T = transfer_product(seq, x0, n)
    # det = 1 in normalized units, where cancellation costs about n ulps
    d = T.m11 * T.m22 - T.m12 * T.m21
    assert abs(d - math.exp(-2.0 * T.log_scale)) <= 1e-13 * n
    p = ortho_stream(seq, x0, n)
    u, v, s = T.first_column()
    a_n = seq.params_at(n)[0]
    p_n = p.p[n] * math.exp(p.log_scale[n])
    p_prev = p.p[n - 1] * math.exp(p.log_scale[n - 1])
    scale = math.exp(s)
    assert math.isclose(u * scale, p_n, rel_tol=1e-8, abs_tol=1e-8 * scale)
    assert math.isclose(v * scale, a_n * p_prev, rel_tol=1e-8, abs_tol=1e-8 * scale)


def test_mat2log_product_matches_dense():
    A = step_matrix(0.8, 0.1, 1.3)
    B = step_matrix(1.2, -0.4, 1.3)
    assert np.allclose((A @ B).matrix(), A.matrix() @ B.matrix())
    with pytest.raises(DomainError):
        Mat2Log.normalized(0.0, 0.0, 0.0, 0.0)


def test_profile_endpoints():
    seq = make_constant(1.0, 0.0)
    prof = log_norm_profile(seq, 2.5, 50)
    assert math.isclose(prof[0], 0.5 * math.log(2))
    assert math.isclose(prof[50], transfer_product(seq, 2.5, 50).log_norm, rel_tol=1e-13)


def test_constant_model_rate_is_log2():
    est = lyapunov_estimate(make_constant(1.0, 0.0), 2.5, 10_000, windows=4)
    assert abs(est.gamma_hat - math.log(2)) < 1e-3
    assert all(abs(s - math.log(2)) < 1e-3 for s in est.window_slopes)


def test_exact_szwarc_oracle_is_frozen():
    assert math.isclose(exact_szwarc_rate(2000), SZWARC_EXACT_RATE_2000, rel_tol=1e-12)
    # exact arithmetic shows no exponential growth at 5/2
    assert SZWARC_EXACT_RATE_2000 < 0.05


def test_lyapunov_requires_long_runs():
    with pytest.raises(DomainError):
        lyapunov_estimate(make_constant(1.0, 0.0), 2.5, 999)
    with pytest.raises(DomainError):
        growth_test(make_constant(1.0, 0.0), 2.5, 10)


def test_growth_test_tracks_exponent():
    g = growth_test(make_constant(1.0, 0.0), 2.5, 4000)
    assert abs(math.log(g) / 2 - math.log(2)) < 2e-3
    # inside the spectrum growth is at most polynomial
    assert growth_test(make_constant(1.0, 0.0), 0.3, 4000) < 1.01


def test_block41_slope_on_c3():
    seq = make_block41()
    lo, hi = seq.block("C", 3)
    prof = log_norm_profile(seq, 1.5, hi)
    eta = hyperbolic_rate(1.5)[1]
    assert abs(block_slope(prof, lo, hi) - eta) / eta < 0.15
    with pytest.raises(DomainError):
        block_slope(prof, 10, 5)


def test_hyperbolic_rate():
    theta, eta = hyperbolic_rate(1.0)
    assert math.isclose(theta, math.pi / 3) and eta == 0.0
    assert hyperbolic_rate(2.5)[0] is None
    assert hyperbolic_rate(0.5)[1] is None


def test_fibonacci_trace_map_matches_direct_traces():
    seq = make_fibonacci(0.0)
    fib = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    for x0 in (-0.7, 0.2, 1.9):
        direct = []
        for n in fib:
            T = transfer_product(seq, x0, n)
            direct.append(0.5 * (T.m11 + T.m22) * math.exp(T.log_scale))
        for k in range(3, len(fib)):
            assert math.isclose(direct[k], 2 * direct[k - 1] * direct[k - 2] - direct[k - 3],
                                rel_tol=1e-9, abs_tol=1e-9)


def test_fibonacci_trace_escape():
    seq = make_fibonacci(0.0)
    # far outside the spectrum the orbit leaves at once
    assert fibonacci_trace_escape(seq, 4.0) is not None
    with pytest.raises(DomainError):
        fibonacci_trace_escape(make_fibonacci(0.3), 0.0)
    with pytest.raises(DomainError):
        fibonacci_trace_escape(make_constant(1.0, 0.0), 0.0)
