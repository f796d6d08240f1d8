"""Inequality checkers for averaged circle sums and powers of elliptic matrices.

Each check exists twice: a scalar function that evaluates one instance, and a
vectorized fuzzer that draws many random instances with numpy and reports
violations together with the tightest observed slack. Complex numbers are
written out as (cos, sin) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DegenerateInputError, DomainError

REL_SLACK = 1e-12
TWO_PI = 2.0 * math.pi


def _abs2_one_minus(r, ang):
    """``|1 - r e^{i ang}|^2``."""
    c, s = np.cos(ang), np.sin(ang)
    return (1.0 - r * c) ** 2 + (r * s) ** 2


# ---------------------------------------------------------------------------
# averaged circle sum


def ntz_check(r: float, theta: float, phi: float, L: int) -> Tuple[float, float]:
    """``lhs = (12/L) sum_{j<L} |1 - r e^{i(j theta + phi)}|^2`` and ``rhs = |1 - r e^{i phi}|^2``.

    The claim is ``lhs >= rhs``.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if L < 1:
        raise DomainError(f"L must be >= 1, got {L}")
    terms = [float(_abs2_one_minus(r, j * theta + phi)) for j in range(L)]
    return 12.0 / L * math.fsum(terms), float(_abs2_one_minus(r, phi))


# ---------------------------------------------------------------------------
# powers of unimodular elliptic matrices


@dataclass(frozen=True)
class UnimodularElliptic:
    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        det = self.a11 * self.a22 - self.a12 * self.a21
        if abs(det - 1.0) > 1e-12:
            raise DomainError(f"determinant {det!r} differs from 1 by more than 1e-12")
        if abs(self.a11 + self.a22) > 2.0 + 1e-12:
            raise DomainError(f"|trace| = {abs(self.a11 + self.a22)!r} exceeds 2")

    @classmethod
    def from_array(cls, A) -> "UnimodularElliptic":
        A = np.asarray(A, dtype=float)
        return cls(float(A[0, 0]), float(A[0, 1]), float(A[1, 0]), float(A[1, 1]))


def matrix_power_check(A: UnimodularElliptic, v, L: int) -> Tuple[float, float]:
    """``lhs = |(A^{L-1} v)_1|^2`` and ``rhs = (12/L) sum_{j<L} |(A^j v)_1|^2``; claim ``lhs <= rhs``."""
    if not isinstance(A, UnimodularElliptic):
        A = UnimodularElliptic.from_array(A)
    if L < 1:
        raise DomainError(f"L must be >= 1, got {L}")
    x, y = float(v[0]), float(v[1])
    firsts = []
    for _ in range(L):
        firsts.append(x * x)
        x, y = A.a11 * x + A.a12 * y, A.a21 * x + A.a22 * y
    return firsts[-1], 12.0 / L * math.fsum(firsts)


# ---------------------------------------------------------------------------
# ratio lower bound


def lemma64_check(r: float, phi: float, eta: float) -> float:
    """``|1 - r e^{i eta}| / |1 - r e^{i phi}|``, claimed ``>= 1/2`` when ``|phi|/2 <= |eta| <= pi``."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if not abs(phi) / 2.0 <= abs(eta) <= math.pi:
        raise DomainError(f"need |phi|/2 <= |eta| <= pi, got phi={phi}, eta={eta}")
    den = math.sqrt(float(_abs2_one_minus(r, phi)))
    if den < 1e-15:
        raise DegenerateInputError("|1 - r e^{i phi}| below 1e-15")
    return math.sqrt(float(_abs2_one_minus(r, eta))) / den


# ---------------------------------------------------------------------------
# fuzzers


@dataclass(frozen=True)
class FuzzReport:
    check: str
    samples: int
    violations: int
    min_slack: float   # min over samples of (bound side - claimed side) / scale
    min_ratio: float   # tightest observed ratio (check specific, see fuzzer docs)
    skipped: int = 0   # degenerate draws excluded from the count

    def row(self):
        return (self.check, self.samples, self.violations, self.min_slack, self.min_ratio, self.skipped)


def _sum_by_length(lengths, term):
    """``sum_{j < lengths[i]} term(j, active)`` with samples sorted by decreasing length.

    ``term(j, n)`` returns the j-th term for the first ``n`` (sorted) samples.
    """
    n = lengths.size
    total = np.zeros(n)
    Lmax = int(lengths[0]) if n else 0
    # number of samples with length > j, for each j
    counts = np.searchsorted(-lengths, -np.arange(Lmax), side="left")
    for j in range(Lmax):
        m = counts[j]
        total[:m] += term(j, m)
    return total


def fuzz_ntz(samples: int, rng: np.random.Generator, r_max: float = 10.0, L_max: int = 1000,
             chunk: int = 250_000) -> FuzzReport:
    """``min_ratio`` is the smallest observed ``lhs/rhs``."""
    viol, min_slack, min_ratio = 0, math.inf, math.inf
    for start in range(0, samples, chunk):
        n = min(chunk, samples - start)
        r = rng.uniform(0.0, r_max, n)
        r[r == 0] = r_max / 2
        theta = rng.uniform(0.0, TWO_PI, n)
        phi = rng.uniform(0.0, TWO_PI, n)
        L = rng.integers(1, L_max + 1, n)
        order = np.argsort(-L, kind="stable")
        r, theta, phi, L = r[order], theta[order], phi[order], L[order]
        # sum_j cos(j theta + phi) by rotating the pair (cos, sin) one step at a time;
        # |1 - r e^{ia}|^2 = 1 + r^2 - 2 r cos(a)
        ct, st = np.cos(theta), np.sin(theta)
        c, s_ = np.cos(phi), np.sin(phi)
        counts = np.searchsorted(-L, -np.arange(int(L[0])), side="left")
        csum = np.zeros(n)
        for j in range(int(L[0])):
            m = counts[j]
            csum[:m] += c[:m]
            c[:m], s_[:m] = c[:m] * ct[:m] - s_[:m] * st[:m], s_[:m] * ct[:m] + c[:m] * st[:m]
        lhs = 12.0 / L * (L * (1.0 + r * r) - 2.0 * r * csum)
        rhs = _abs2_one_minus(r, phi)
        scale = np.maximum(lhs, rhs) + np.finfo(float).tiny
        slack = (lhs - rhs) / scale
        viol += int(np.count_nonzero(slack < -REL_SLACK))
        min_slack = min(min_slack, float(slack.min()))
        pos = rhs > 0
        if np.any(pos):
            min_ratio = min(min_ratio, float(np.min(lhs[pos] / rhs[pos])))
    return FuzzReport("ntz", samples, viol, min_slack, min_ratio)


def random_elliptic(n: int, rng: np.random.Generator, s_max: float = 4.0,
                    parabolic_fraction: float = 0.05) -> np.ndarray:
    """``n`` random admissible matrices of shape ``(n, 2, 2)``.

    Most are ``S Rot(w) S^{-1}`` with ``S = R(alpha) diag(s, 1/s) R(-alpha)``;
    a fraction are ``+-`` unipotent shears (trace exactly ``+-2``).
    """
    alpha = rng.uniform(0.0, math.pi, n)
    s = np.exp(rng.uniform(0.0, math.log(s_max), n))
    w = rng.uniform(0.0, TWO_PI, n)
    ca, sa = np.cos(alpha), np.sin(alpha)
    R = np.stack([np.stack([ca, -sa], -1), np.stack([sa, ca], -1)], -2)
    Rt = np.swapaxes(R, -1, -2)
    D = np.zeros((n, 2, 2))
    D[:, 0, 0], D[:, 1, 1] = s, 1.0 / s
    Dinv = np.zeros((n, 2, 2))
    Dinv[:, 0, 0], Dinv[:, 1, 1] = 1.0 / s, s
    cw, sw = np.cos(w), np.sin(w)
    Rot = np.stack([np.stack([cw, -sw], -1), np.stack([sw, cw], -1)], -2)
    A = R @ D @ Rt @ Rot @ R @ Dinv @ Rt
    par = rng.uniform(size=n) < parabolic_fraction
    k = int(par.sum())
    if k:
        t = rng.uniform(-3.0, 3.0, k)
        sign = np.where(rng.uniform(size=k) < 0.5, -1.0, 1.0)
        P = np.zeros((k, 2, 2))
        P[:, 0, 0], P[:, 0, 1], P[:, 1, 1] = 1.0, t, 1.0
        P *= sign[:, None, None]
        A[par] = R[par] @ P @ Rt[par]
    return A


def fuzz_matrix_power(samples: int, rng: np.random.Generator, L_max: int = 200,
                      chunk: int = 250_000) -> FuzzReport:
    """``min_ratio`` is the smallest observed ``rhs/lhs`` (over samples with ``lhs > 0``)."""
    viol, min_slack, min_ratio = 0, math.inf, math.inf
    for start in range(0, samples, chunk):
        n = min(chunk, samples - start)
        A = random_elliptic(n, rng)
        det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
        tr = A[:, 0, 0] + A[:, 1, 1]
        if np.any(np.abs(det - 1) > 1e-12) or np.any(np.abs(tr) > 2 + 1e-12):
            raise DomainError("generated matrix violates det = 1 or |trace| <= 2")
        ang = rng.uniform(0.0, TWO_PI, n)
        v = np.stack([np.cos(ang), np.sin(ang)], -1)
        L = rng.integers(1, L_max + 1, n)
        order = np.argsort(-L, kind="stable")
        A, v, L = A[order], v[order], L[order]
        Lmax = int(L[0])
        counts = np.searchsorted(-L, -np.arange(Lmax), side="left")
        acc = np.zeros(n)
        last = np.zeros(n)
        x, y = v[:, 0].copy(), v[:, 1].copy()
        for j in range(Lmax):
            m = counts[j]
            f = x[:m] * x[:m]
            acc[:m] += f
            ends = L[:m] == j + 1
            last[:m][ends] = f[ends]
            x[:m], y[:m] = (A[:m, 0, 0] * x[:m] + A[:m, 0, 1] * y[:m],
                            A[:m, 1, 0] * x[:m] + A[:m, 1, 1] * y[:m])
        rhs = 12.0 / L * acc
        scale = np.maximum(rhs, last) + np.finfo(float).tiny
        slack = (rhs - last) / scale
        viol += int(np.count_nonzero(slack < -REL_SLACK))
        min_slack = min(min_slack, float(slack.min()))
        pos = last > 0
        if np.any(pos):
            min_ratio = min(min_ratio, float(np.min(rhs[pos] / last[pos])))
    return FuzzReport("matrix_power", samples, viol, min_slack, min_ratio)


def fuzz_lemma64(samples: int, rng: np.random.Generator, chunk: int = 1_000_000) -> FuzzReport:
    """``r`` is log-uniform on ``[1e-3, 1e3]`` with extra mass near 1; ``min_ratio`` is the
    smallest observed ratio (claimed ``>= 1/2``)."""
    viol, min_slack, min_ratio, skipped = 0, math.inf, math.inf, 0
    for start in range(0, samples, chunk):
        n = min(chunk, samples - start)
        r = np.exp(rng.uniform(-math.log(1e3), math.log(1e3), n))
        near = rng.uniform(size=n) < 0.3
        r[near] = 1.0 + rng.normal(0.0, 1e-3, int(near.sum()))
        phi = rng.uniform(-TWO_PI, TWO_PI, n)
        mag = rng.uniform(np.abs(phi) / 2.0, math.pi)
        eta = np.where(rng.uniform(size=n) < 0.5, -mag, mag)
        den2 = _abs2_one_minus(r, phi)
        ok = den2 >= 1e-30
        skipped += int(n - ok.sum())
        ratio = np.sqrt(_abs2_one_minus(r[ok], eta[ok]) / den2[ok])
        slack = (ratio - 0.5) / np.maximum(ratio, 0.5)
        viol += int(np.count_nonzero(slack < -REL_SLACK))
        min_slack = min(min_slack, float(slack.min()))
        min_ratio = min(min_ratio, float(ratio.min()))
    return FuzzReport("lemma64", samples, viol, min_slack, min_ratio, skipped)


def fuzz_cosine_sum(samples: int, rng: np.random.Generator, M_max: int = 1000,
                    chunk: int = 250_000) -> FuzzReport:
    """``min_ratio`` is the smallest observed ``bound / |sum|``."""
    viol, min_slack, min_ratio = 0, math.inf, math.inf
    for start in range(0, samples, chunk):
        n = min(chunk, samples - start)
        q = rng.uniform(0.0, TWO_PI, n)
        q[q == 0] = math.pi
        theta = rng.uniform(0.0, TWO_PI, n)
        M = rng.integers(1, M_max + 1, n)
        order = np.argsort(-M, kind="stable")
        q, theta, M = q[order], theta[order], M[order]
        s = _sum_by_length(M, lambda j, m: np.cos(q[:m] * (j + 1) + theta[:m]))
        bound = 1.0 / np.sin(q / 2.0)
        a = np.abs(s)
        slack = (bound - a) / bound
        viol += int(np.count_nonzero(slack < -REL_SLACK))
        min_slack = min(min_slack, float(slack.min()))
        pos = a > 0
        min_ratio = min(min_ratio, float(np.min(bound[pos] / a[pos])))
    return FuzzReport("cosine_sum", samples, viol, min_slack, min_ratio)


FUZZERS = {
    "ntz": fuzz_ntz,
    "matrix_power": fuzz_matrix_power,
    "lemma64": fuzz_lemma64,
    "cosine_sum": fuzz_cosine_sum,
}
