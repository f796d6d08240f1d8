"""Orthonormal polynomials, CD kernels, Christoffel functions and eta-measure moments.

Conventions: ``p_{-1} = 0``, ``p_0 = 1`` and

    x p_n(x) = a_{n+1} p_{n+1}(x) + b_{n+1} p_n(x) + a_n p_{n-1}(x).

Long runs are kept in range by log-rescaling: a stored value ``p`` with log
scale ``s`` represents ``p * exp(s)``; stored kernel diagonals carry the
factor ``exp(2 s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Union

import mpmath
import numpy as np

from .errors import ConditioningError, DegenerateInputError, DomainError
from .models import JacobiSequence

RESCALE_LOW = 1e-6
RESCALE_HIGH = 1e6
EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class OrthoEval:
    """Recurrence state at index ``n``.

    ``p_prev`` and ``p`` hold ``p_{n-1}(x0)`` and ``p_n(x0)``, ``K`` holds
    ``K_n(x0, x0)``, all divided by ``exp(log_scale)`` (``exp(2*log_scale)``
    for ``K``).
    """

    n: int = 0
    p_prev: float = 0.0
    p: float = 1.0
    K: float = 1.0
    log_scale: float = 0.0
    rescale: bool = True

    @property
    def log_K(self) -> float:
        return math.log(self.K) + 2.0 * self.log_scale

    @property
    def ratio(self) -> float:
        """``p_n^2 / K_n``; independent of the scale."""
        return self.p * self.p / self.K


def advance(state: OrthoEval, a_n: float, a_next: float, b_next: float, x0: float) -> OrthoEval:
    """One recurrence step ``n -> n + 1``. ``a_n`` is ignored when ``n = 0``."""
    if not a_next > 0:
        raise DomainError(f"a_{state.n + 1} must be positive, got {a_next}")
    an = a_n if state.n > 0 else 0.0
    p_next = ((x0 - b_next) * state.p - an * state.p_prev) / a_next
    p_prev, p = state.p, p_next
    K = state.K + p * p
    s = state.log_scale
    if state.rescale:
        nrm = p * p + p_prev * p_prev
        if nrm > RESCALE_HIGH or nrm < RESCALE_LOW:
            f = 1.0 / math.sqrt(nrm)
            p, p_prev, K = p * f, p_prev * f, K * f * f
            s += 0.5 * math.log(nrm)
    return replace(state, n=state.n + 1, p_prev=p_prev, p=p, K=K, log_scale=s)


@dataclass
class OrthoStream:
    """Arrays indexed by ``n = 0..N`` from one streaming pass."""

    x0: float
    p: np.ndarray          # scaled p_n
    log_scale: np.ndarray
    K: np.ndarray          # scaled K_n

    @property
    def N(self) -> int:
        return len(self.p) - 1

    @property
    def ratio(self) -> np.ndarray:
        return self.p ** 2 / self.K

    @property
    def log_K(self) -> np.ndarray:
        return np.log(self.K) + 2.0 * self.log_scale

    @property
    def log_abs_p(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.p)) + self.log_scale

    def true_p(self) -> np.ndarray:
        """Unscaled values; may overflow for long exponentially growing runs."""
        return self.p * np.exp(self.log_scale)


def ortho_stream(seq: JacobiSequence, x0: float, N: int, rescale: bool = True) -> OrthoStream:
    """Evaluate ``p_n(x0)`` and ``K_n(x0, x0)`` for ``n = 0..N``."""
    if N < 0:
        raise DomainError(f"N must be >= 0, got {N}")
    x0 = float(x0)
    P = np.empty(N + 1)
    S = np.empty(N + 1)
    Kout = np.empty(N + 1)
    P[0], S[0], Kout[0] = 1.0, 0.0, 1.0
    if N == 0:
        return OrthoStream(x0, P, S, Kout)
    a_arr, b_arr = seq.arrays(1, N + 1)
    a = a_arr.tolist()
    b = b_arr.tolist()
    p_prev, p, K, s = 0.0, 1.0, 1.0, 0.0
    a_n = 0.0
    sqrt, log = math.sqrt, math.log
    for i in range(N):
        p_next = ((x0 - b[i]) * p - a_n * p_prev) / a[i]
        a_n = a[i]
        p_prev, p = p, p_next
        K += p * p
        if rescale:
            nrm = p * p + p_prev * p_prev
            if nrm > RESCALE_HIGH or nrm < RESCALE_LOW:
                f = 1.0 / sqrt(nrm)
                p *= f
                p_prev *= f
                K *= f * f
                s += 0.5 * log(nrm)
        P[i + 1] = p
        S[i + 1] = s
        Kout[i + 1] = K
    return OrthoStream(x0, P, S, Kout)


def final_state(seq: JacobiSequence, x0: float, n: int, rescale: bool = True) -> OrthoEval:
    """The :class:`OrthoEval` at index ``n`` (``p_{n-1}`` and ``p_n`` share a scale)."""
    st = OrthoEval(rescale=rescale)
    if n == 0:
        return st
    a, b = seq.arrays(1, n + 1)
    a = a.tolist()
    b = b.tolist()
    for i in range(n):
        st = advance(st, a[i - 1] if i > 0 else 0.0, a[i], b[i], x0)
    return st


def cd_kernel_direct(seq: JacobiSequence, x: float, y: float, n: int) -> float:
    """``K_n(x, y) = sum_{j<=n} p_j(x) p_j(y)`` by two synchronized streams."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    sx = ortho_stream(seq, x, n)
    sy = ortho_stream(seq, y, n)
    logs = sx.log_scale + sy.log_scale
    ref = float(logs.max())
    return math.fsum((sx.p * sy.p * np.exp(logs - ref)).tolist()) * math.exp(ref)


def cd_kernel_formula(seq: JacobiSequence, x: float, y: float, n: int) -> float:
    """``K_n(x, y)`` from the closed CD formula.

    Raises :class:`DegenerateInputError` when ``|x - y|`` is below
    ``1e-12 * max(1, |x|, |y|)``; use :func:`cd_kernel_direct` there.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if abs(x - y) < 1e-12 * max(1.0, abs(x), abs(y)):
        raise DegenerateInputError(f"x={x!r} and y={y!r} are too close for the CD formula")
    stx = final_state(seq, x, n + 1)
    sty = final_state(seq, y, n + 1)
    a_next = seq.params_at(n + 1)[0]
    num = stx.p * sty.p_prev - stx.p_prev * sty.p
    return a_next * num / (x - y) * math.exp(stx.log_scale + sty.log_scale)


def christoffel(seq: JacobiSequence, x0: float, n: int) -> float:
    """``lambda_n(x0) = 1 / K_n(x0, x0)``."""
    st = ortho_stream(seq, x0, n)
    return math.exp(-float(st.log_K[-1]))


def _moments_about(seq: JacobiSequence, x0: float, scale: float, kmax: int) -> np.ndarray:
    """``<delta_1, ((J - x0)/scale)^k delta_1>`` for ``k = 0..kmax``."""
    m = kmax + 2
    a, b = seq.arrays(1, m + 1)
    off = a[: m - 1] / scale
    diag = (b[:m] - x0) / scale
    v = np.zeros(m)
    v[0] = 1.0
    out = np.empty(kmax + 1)
    out[0] = 1.0
    for k in range(1, kmax + 1):
        w = diag * v
        w[:-1] += off * v[1:]
        w[1:] += off * v[:-1]
        v = w
        out[k] = v[0]
    return out


def christoffel_via_moments(seq: JacobiSequence, x0: float, n: int,
                            max_digits_lost: float = 6.0) -> float:
    """Christoffel function from the variational principle over moments.

    With ``t = x / scale`` and ``H`` the Hankel matrix of the moments of
    ``t`` (taken from a finite truncation of J), the minimum of ``c^T H c``
    subject to ``sum_i c_i t0^i = 1`` is ``1 / (v^T H^{-1} v)``, ``v_i = t0^i``.

    The digits lost by the solve are measured by repeating it at 40 digits;
    beyond ``max_digits_lost`` a :class:`ConditioningError` is raised.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    if n > 12:
        raise DomainError("christoffel_via_moments supports n <= 12")
    if n == 0:
        return 1.0
    scale = 2.0 * seq.a_plus + seq.b_plus
    mom = _moments_about(seq, 0.0, scale, 2 * n)
    idx = np.arange(n + 1)
    H = mom[idx[:, None] + idx[None, :]]
    # diagonal equilibration leaves the minimum unchanged
    d = 1.0 / np.sqrt(np.diag(H))
    Hs = H * d[:, None] * d[None, :]
    v = (x0 / scale) ** idx * d
    try:
        L = np.linalg.cholesky(Hs)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"moment matrix is not numerically positive definite at n={n}") from exc
    y = np.linalg.solve(L, v)
    q = float(y @ y)
    with mpmath.workdps(40):
        Hm = mpmath.matrix(Hs.tolist())
        vm = mpmath.matrix(v.tolist())
        q_ref = float((vm.T * mpmath.lu_solve(Hm, vm))[0])
    rel = abs(q - q_ref) / abs(q_ref)
    digits = math.log10(max(rel, EPS) / EPS)
    if digits > max_digits_lost:
        raise ConditioningError(
            f"moment matrix solve lost {digits:.1f} digits (> {max_digits_lost}) at n={n}")
    return 1.0 / q


@dataclass(frozen=True)
class EtaMoments:
    """First and second moments of ``eta_n^{(x0)}`` about ``x0``."""

    n: int
    x0: float
    first: float
    second: float


def eta_moments(seq: JacobiSequence, x0: float, n: int) -> EtaMoments:
    """Moments about ``x0`` from ``p_n``, ``p_{n+1}`` and ``K_n``.

    second = a_{n+1}^2 (p_n^2 + p_{n+1}^2) / K_n
    first  = -a_{n+1} p_n p_{n+1} / K_n
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    st = ortho_stream(seq, x0, n + 1)
    a_next = seq.params_at(n + 1)[0]
    # p_n and p_{n+1} brought to the scale of K_n
    s_n = st.log_scale[n]
    pn = st.p[n]
    pn1 = st.p[n + 1] * math.exp(st.log_scale[n + 1] - s_n)
    K = st.K[n]
    return EtaMoments(n, float(x0), float(-a_next * pn * pn1 / K),
                      float(a_next * a_next * (pn * pn + pn1 * pn1) / K))


def eta_moment_k(seq: JacobiSequence, x0: float, n: int, k: int) -> float:
    """``int x^k d eta_n^{(x0)}`` as ``<v, J^k v>`` with ``v_j = p_j(x0)/sqrt(K_n)``."""
    if n < 0 or k < 0:
        raise DomainError("n and k must be nonnegative")
    if k > 30:
        raise DomainError("eta_moment_k supports k <= 30")
    if k == 0:
        return 1.0
    st = ortho_stream(seq, x0, n)
    half_logK = 0.5 * float(st.log_K[n])
    v = st.p * np.exp(st.log_scale - half_logK)
    m = n + k + 1
    a, b = seq.arrays(1, m + 1)
    off = a[: m - 1]
    diag = b[:m]
    u = np.zeros(m)
    u[: n + 1] = v
    for _ in range(k):
        w = diag * u
        w[:-1] += off * u[1:]
        w[1:] += off * u[:-1]
        u = w
    return float(np.dot(v, u[: n + 1]))


def nevai_ratio_stream(seq: JacobiSequence, x0: float, N: int) -> np.ndarray:
    """``r_n = p_n(x0)^2 / K_n(x0, x0)`` for ``n = 0..N`` (overflow-safe)."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    return ortho_stream(seq, x0, N).ratio


def domination_constant(seq: JacobiSequence, x0: float) -> float:
    """``A_minus^{-1} (A_plus + |x0| + B_plus)``: bounds ``|p_n|`` by ``|p_{n-2}| + |p_{n-1}|``."""
    return (seq.a_plus + abs(x0) + seq.b_plus) / seq.a_minus


# ---------------------------------------------------------------------------
# sequence diagnostics


@dataclass
class RatioPanel:
    """Five diagnostics of a nonnegative sequence, indexed by ``n = 1..N``.

    ``c_over_s``: c_n/S_n; ``s_over_snext``: S_n/S_{n+1};
    ``cnext_over_s``: c_{n+1}/S_n; ``pair_next``: (c_n + c_{n+1})/S_n;
    ``pair_prev``: (c_{n-1} + c_n)/S_n.
    """

    n: np.ndarray
    c_over_s: np.ndarray
    s_over_snext: np.ndarray
    cnext_over_s: np.ndarray
    pair_next: np.ndarray
    pair_prev: np.ndarray

    LIMITS = (0.0, 1.0, 0.0, 0.0, 0.0)

    def rows(self):
        return (self.c_over_s, self.s_over_snext, self.cnext_over_s,
                self.pair_next, self.pair_prev)


SequenceLike = Union[Sequence[float], np.ndarray, Callable[[int], float]]


def _materialize(c: SequenceLike, length: int) -> np.ndarray:
    if callable(c):
        return np.array([float(c(i)) for i in range(length)])
    arr = np.asarray(c, dtype=float)
    if len(arr) < length:
        raise DomainError(f"sequence needs at least {length} terms, got {len(arr)}")
    return arr[:length]


def seq_ratio_panel(c: SequenceLike, N: int, log: bool = False) -> RatioPanel:
    """The equivalent subexponential-growth diagnostics for ``c_0, c_1, ...``.

    With ``log=True`` the input holds ``log c_n`` (use ``-inf`` for zeros),
    which allows super-exponential test sequences such as ``exp(n^2)``.
    """
    vals = _materialize(c, N + 2)
    if log:
        logc = vals
    else:
        if np.any(vals < 0):
            raise DomainError("sequence entries must be nonnegative")
        with np.errstate(divide="ignore"):
            logc = np.log(vals)
    if not np.isfinite(logc[0]):
        raise DomainError("c_0 must be positive")
    if not np.any(np.isfinite(logc)):
        raise DomainError("sequence is identically zero")
    logS = np.logaddexp.accumulate(logc)
    n = np.arange(1, N + 1)
    first = np.exp(logc[n] - logS[n])
    nxt = np.exp(logc[n + 1] - logS[n])
    return RatioPanel(
        n=n,
        c_over_s=first,
        s_over_snext=np.exp(logS[n] - logS[n + 1]),
        cnext_over_s=nxt,
        pair_next=first + nxt,
        pair_prev=np.exp(logc[n - 1] - logS[n]) + first,
    )


def cesaro_ratio(a: SequenceLike, N: int) -> np.ndarray:
    """``a_n / (n C_n)`` for ``n = 1..N`` with ``C_n`` the Cesaro mean of ``a_1..a_n``.

    ``a`` is indexed from 1: for arrays ``a[0]`` is ``a_1``; callables are
    called with ``n``. Raises ``ZeroDivisionError`` at the first ``C_n = 0``.
    """
    if callable(a):
        vals = np.array([float(a(i)) for i in range(1, N + 1)])
    else:
        vals = _materialize(a, N)
    n = np.arange(1, N + 1)
    partial = np.cumsum(vals)
    zero = np.flatnonzero(partial == 0.0)
    if zero.size:
        raise ZeroDivisionError(f"Cesaro mean C_n vanishes at n={int(n[zero[0]])}")
    return vals / partial
