"""Transfer matrices, Lyapunov exponents and growth-rate tests.

One-step matrix at index j:

    A_j(x0) = (1/a_j) [[x0 - b_j, -1], [a_j^2, 0]],   det A_j = 1,

and ``T_n = A_n ... A_1`` maps ``(1, 0)`` to ``(p_n(x0), a_n p_{n-1}(x0))``.
Products are kept as a normalized matrix times ``exp(log_scale)``; the
normalization divides by a power of two so that the stored entries stay
exact relative to each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError
from .models import JacobiSequence
from .recurrence import ortho_stream

LN2 = math.log(2.0)


@dataclass(frozen=True)
class Mat2Log:
    """Real 2x2 matrix ``exp(log_scale) * [[m11, m12], [m21, m22]]``."""

    m11: float
    m12: float
    m21: float
    m22: float
    log_scale: float = 0.0

    @classmethod
    def normalized(cls, m11, m12, m21, m22, log_scale=0.0) -> "Mat2Log":
        big = max(abs(m11), abs(m12), abs(m21), abs(m22))
        if big == 0.0:
            raise DomainError("zero matrix cannot be normalized")
        _, e = math.frexp(big)  # big = f * 2**e with f in [1/2, 1)
        return cls(math.ldexp(m11, -e), math.ldexp(m12, -e), math.ldexp(m21, -e),
                   math.ldexp(m22, -e), log_scale + e * LN2)

    @property
    def entries(self) -> np.ndarray:
        """Normalized entries as a 2x2 array."""
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    def matrix(self) -> np.ndarray:
        """True matrix (may overflow)."""
        return self.entries * math.exp(self.log_scale)

    @property
    def det(self) -> float:
        """Determinant of the true matrix, computed as ``det(M) * exp(2 s)``."""
        d = self.m11 * self.m22 - self.m12 * self.m21
        return d * math.exp(2.0 * self.log_scale)

    @property
    def log_det(self) -> float:
        d = self.m11 * self.m22 - self.m12 * self.m21
        return math.log(abs(d)) + 2.0 * self.log_scale

    @property
    def log_norm(self) -> float:
        """``log`` of the Frobenius norm."""
        return 0.5 * math.log(self.m11 ** 2 + self.m12 ** 2 + self.m21 ** 2
                              + self.m22 ** 2) + self.log_scale

    def __matmul__(self, other: "Mat2Log") -> "Mat2Log":
        return Mat2Log.normalized(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
            self.log_scale + other.log_scale,
        )

    def first_column(self) -> Tuple[float, float, float]:
        """``(u, v, s)`` with ``T (1, 0)^T = exp(s) (u, v)``."""
        return self.m11, self.m21, self.log_scale


def step_matrix(a_j: float, b_j: float, x0: float) -> Mat2Log:
    if not a_j > 0:
        raise DomainError(f"a_j must be positive, got {a_j}")
    return Mat2Log.normalized((x0 - b_j) / a_j, -1.0 / a_j, a_j, 0.0)


def _product(a, b, x0, record=False):
    """Left-multiply the one-step matrices; optionally record ``log ||T_n||_F``."""
    m11, m12, m21, m22, s = 1.0, 0.0, 0.0, 1.0, 0.0
    prof = np.empty(len(a) + 1) if record else None
    if record:
        prof[0] = 0.5 * math.log(2.0)
    frexp, ldexp, log, sqrt = math.frexp, math.ldexp, math.log, math.sqrt
    for i in range(len(a)):
        aj = a[i]
        c = (x0 - b[i]) / aj
        d = -1.0 / aj
        # [[c, d], [aj, 0]] @ [[m11, m12], [m21, m22]]
        n11 = c * m11 + d * m21
        n12 = c * m12 + d * m22
        m21 = aj * m11
        m22 = aj * m12
        m11, m12 = n11, n12
        big = max(abs(m11), abs(m12), abs(m21), abs(m22))
        if big > 2.0 or big < 0.5:
            e = frexp(big)[1]
            m11, m12, m21, m22 = ldexp(m11, -e), ldexp(m12, -e), ldexp(m21, -e), ldexp(m22, -e)
            s += e * LN2
        if record:
            prof[i + 1] = 0.5 * log(m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22) + s
    return (m11, m12, m21, m22, s), prof


def transfer_product(seq: JacobiSequence, x0: float, n: int) -> Mat2Log:
    """``T_n(x0) = A_n(x0) ... A_1(x0)``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    a, b = seq.arrays(1, n + 1)
    (m11, m12, m21, m22, s), _ = _product(a.tolist(), b.tolist(), float(x0))
    return Mat2Log(m11, m12, m21, m22, s)


def log_norm_profile(seq: JacobiSequence, x0: float, N: int) -> np.ndarray:
    """``log ||T_n(x0)||_F`` for ``n = 0..N`` (``T_0 = I``)."""
    if N < 0:
        raise DomainError(f"N must be >= 0, got {N}")
    if N == 0:
        return np.array([0.5 * math.log(2.0)])
    a, b = seq.arrays(1, N + 1)
    return _product(a.tolist(), b.tolist(), float(x0), record=True)[1]


def block_slope(profile: np.ndarray, start: int, stop: int) -> float:
    """Average growth of ``log ||T_n||`` across the indices ``[start, stop)``."""
    if not 1 <= start < stop < len(profile) + 1:
        raise DomainError(f"block [{start}, {stop}) outside the profile")
    return float((profile[stop - 1] - profile[start - 1]) / (stop - start))


@dataclass(frozen=True)
class LyapunovEstimate:
    x0: float
    N: int
    gamma_hat: float
    last_window_slope: float
    window_slopes: Optional[Tuple[float, ...]] = None


def lyapunov_estimate(seq: JacobiSequence, x0: float, N: int, windows: int = 0) -> LyapunovEstimate:
    """``gamma_hat = log ||T_N||_F / N`` plus convergence diagnostics.

    ``last_window_slope`` is the growth rate over ``(N/2, N]``; ``windows > 0``
    also reports the rate over that many equal consecutive windows.
    """
    if N < 1000:
        raise DomainError(f"lyapunov_estimate needs N >= 1000, got {N}")
    prof = log_norm_profile(seq, x0, N)
    half = N // 2
    last = float((prof[N] - prof[half]) / (N - half))
    slopes = None
    if windows > 0:
        edges = np.linspace(0, N, windows + 1).astype(int)
        slopes = tuple(float((prof[e1] - prof[e0]) / (e1 - e0))
                       for e0, e1 in zip(edges[:-1], edges[1:]))
    return LyapunovEstimate(float(x0), N, float(prof[N] / N), last, slopes)


def growth_test(seq: JacobiSequence, x0: float, N: int) -> float:
    """``min`` over ``n in [N/2, N]`` of ``(p_n^2 + p_{n+1}^2)^{1/n}``, in log space.

    A value clearly above 1 means the growth condition for Nevai failure is
    met along the run. For ``p_n ~ exp(gamma n)`` the value tends to
    ``exp(2 gamma)``.
    """
    if N < 1000:
        raise DomainError(f"growth_test needs N >= 1000, got {N}")
    st = ortho_stream(seq, x0, N + 1)
    n = np.arange(max(1, N // 2), N + 1)
    p0 = st.p[n]
    p1 = st.p[n + 1] * np.exp(st.log_scale[n + 1] - st.log_scale[n])
    logsum = np.log(p0 * p0 + p1 * p1) + 2.0 * st.log_scale[n]
    return float(np.exp(np.min(logsum / n)))


def hyperbolic_rate(x0: float) -> Tuple[Optional[float], Optional[float]]:
    """``(theta, eta)`` with ``2 cos(theta) = x0`` (|x0| <= 2) and ``cosh(eta) = |x0|`` (|x0| >= 1)."""
    theta = math.acos(x0 / 2.0) if abs(x0) <= 2.0 else None
    eta = math.acosh(abs(x0)) if abs(x0) >= 1.0 else None
    return theta, eta


def fibonacci_trace_escape(seq, x0: float, levels: int = 26) -> Optional[int]:
    """First Fibonacci level at which the trace orbit of ``x0`` provably escapes, else ``None``.

    For the ``theta = 0`` Fibonacci model the half-line prefixes of lengths
    1, 2, 3, 5, 8, ... are the standard words, so the half traces
    ``x_k = tr T_{F_k}(x0) / 2`` obey ``x_{k+1} = 2 x_k x_{k-1} - x_{k-2}``.
    A point lies in the spectrum exactly when this orbit stays bounded; the
    orbit escapes once ``|x_k|, |x_{k-1}| > 1`` and ``|x_k x_{k-1}| > |x_{k-2}|``.
    ``None`` therefore means "not excluded up to level ``levels``".
    """
    if getattr(seq, "kind", None) != "fibonacci" or seq.theta != 0.0:
        raise DomainError("the trace map test needs the theta = 0 Fibonacci model")
    xs = []
    for n in (1, 2, 3):
        T = transfer_product(seq, x0, n)
        xs.append(0.5 * (T.m11 + T.m22) * math.exp(T.log_scale))
    for k in range(3, levels + 1):
        xs.append(2.0 * xs[-1] * xs[-2] - xs[-3])
        if abs(xs[-1]) > 1 and abs(xs[-2]) > 1 and abs(xs[-1] * xs[-2]) > abs(xs[-3]):
            return k
    return None
