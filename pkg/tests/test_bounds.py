import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nevaikit import bounds as bd
from nevaikit.errors import DegenerateInputError, DomainError

SLACK = 1e-12

angles = st.floats(-2 * math.pi, 2 * math.pi)
radii = st.floats(1e-3, 1e3)


@settings(max_examples=300, deadline=None)
@given(r=radii, theta=angles, phi=angles, L=st.integers(1, 300))
def test_ntz_scalar(r, theta, phi, L):
    lhs, rhs = bd.ntz_check(r, theta, phi, L)
    assert lhs >= rhs - SLACK * (1 + r) ** 2


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 120), vx=st.floats(-3, 3),
       vy=st.floats(-3, 3))
def test_matrix_power_scalar(seed, L, vx, vy):
    A = bd.random_elliptic(1, np.random.default_rng(seed))[0]
    lhs, rhs = bd.matrix_power_check(A, (vx, vy), L)
    assert lhs <= rhs + SLACK * max(rhs, 1.0) * L


@settings(max_examples=300, deadline=None)
@given(r=radii, phi=angles, eta=st.floats(-math.pi, math.pi))
def test_lemma64_scalar(r, phi, eta):
    assume(abs(phi) / 2 <= abs(eta))
    try:
        ratio = bd.lemma64_check(r, phi, eta)
    except DegenerateInputError:
        return
    assert ratio >= 0.5 * (1 - SLACK)


def test_lemma64_domain():
    with pytest.raises(DomainError):
        bd.lemma64_check(1.0, 2.0, 0.5)
    with pytest.raises(DegenerateInputError):
        bd.lemma64_check(1.0, 0.0, 0.0)


def test_elliptic_validation():
    with pytest.raises(DomainError):
        bd.UnimodularElliptic(2.0, 0.0, 0.0, 0.5)   # trace 2.5
    with pytest.raises(DomainError):
        bd.UnimodularElliptic(1.0, 1.0, 1.0, 1.0)   # det 0
    bd.UnimodularElliptic(1.0, 5.0, 0.0, 1.0)       # parabolic is admissible


def test_random_elliptic_is_admissible():
    A = bd.random_elliptic(2000, np.random.default_rng(0))
    det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    assert np.max(np.abs(det - 1)) < 1e-12
    assert np.max(np.abs(A[:, 0, 0] + A[:, 1, 1])) <= 2 + 1e-12


@pytest.mark.parametrize("name", sorted(bd.FUZZERS))
def test_fuzzers_small_run(name):
    rep = bd.FUZZERS[name](20_000, np.random.default_rng(5))
    assert rep.check == name
    assert rep.samples == 20_000
    assert rep.violations == 0
    assert rep.min_slack >= -SLACK
    assert len(rep.row()) == 6


def test_fuzzers_are_reproducible():
    a = bd.fuzz_ntz(5000, np.random.default_rng(9))
    b = bd.fuzz_ntz(5000, np.random.default_rng(9))
    assert a == b

