"""Prüfer (EFGP) variables for recurrences with ``b_n = 0``.

For a solution of ``x0 u_n = a_n u_{n+1} + a_{n-1} u_{n-1}`` define

    R_n sin(theta_n) = a_n u_n sin(k_n),
    R_n cos(theta_n) = a_n (u_{n+1} - u_n cos(k_n)),    2 cos(k_n) = x0 / a_n.

One step is exactly

    R_{n+1} cos(theta_{n+1}) = R_n cos(phi),
    R_{n+1} sin(theta_{n+1}) = rho_n R_n sin(phi),

with ``phi = theta_n + k_n`` and ``rho_n = a_{n+1} sin(k_{n+1}) / (a_n sin(k_n)) > 0``.
Because ``rho_n > 0`` the new angle lies in the quadrant of ``phi``, so the
continuous branch is ``theta_{n+1} = phi + atan2((rho - 1) sin cos, rho sin^2 + cos^2)``
and the increment over ``phi`` never exceeds ``pi/2``. The orthonormal
polynomials correspond to ``u_n = p_{n-1}``, i.e. ``u_0 = 0, u_1 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError
from .models import JacobiSequence

ELLIPTIC_MARGIN = 1e-9
E0_DEFAULT = 3.0


def wavenumber(a_n: float, x0: float) -> float:
    """``k`` in ``(0, pi)`` with ``2 cos k = x0 / a_n``; requires ``|x0/a_n| <= 2 - 1e-9``."""
    if not a_n > 0:
        raise DomainError(f"a_n must be positive, got {a_n}")
    t = x0 / a_n
    if not abs(t) <= 2.0 - ELLIPTIC_MARGIN:
        raise DomainError(f"|x0/a_n| = {abs(t):.12g} is outside the elliptic regime")
    return math.acos(t / 2.0)


@dataclass(frozen=True)
class PruferState:
    n: int
    R: float
    theta: float
    k: float
    a: float  # a_n, needed to step and to reconstruct u

    def solution(self) -> Tuple[float, float]:
        """``(u_n, u_{n+1})`` reconstructed from the polar data."""
        s, c = math.sin(self.theta), math.cos(self.theta)
        u = self.R * s / (self.a * math.sin(self.k))
        return u, self.R * c / self.a + u * math.cos(self.k)


def to_prufer(u_n: float, u_next: float, a_n: float, x0: float, n: int = 1) -> PruferState:
    """Polar data of ``(u_n, u_{n+1})``; the angle is taken in ``(-pi, pi]``."""
    if u_n == 0 and u_next == 0:
        raise DomainError("the zero solution has no Prüfer angle")
    k = wavenumber(a_n, x0)
    S = a_n * u_n * math.sin(k)
    C = a_n * (u_next - u_n * math.cos(k))
    return PruferState(n, math.hypot(S, C), math.atan2(S, C), k, float(a_n))


def prufer_step(state: PruferState, a_next: float, x0: float) -> PruferState:
    """Advance one index along the continuous angle branch."""
    k1 = wavenumber(a_next, x0)
    s0 = math.sin(state.k)
    rho = a_next * math.sin(k1) / (state.a * s0)
    phi = state.theta + state.k
    sp, cp = math.sin(phi), math.cos(phi)
    ratio2 = 1.0 + (a_next * a_next - state.a * state.a) * sp * sp / (state.a * state.a * s0 * s0)
    theta = phi + math.atan2((rho - 1.0) * sp * cp, rho * sp * sp + cp * cp)
    return PruferState(state.n + 1, state.R * math.sqrt(ratio2), theta, k1, float(a_next))


@dataclass(frozen=True, eq=False)
class PruferRun:
    """Arrays over ``n = 1..N`` (entry ``n-1``)."""

    x0: float
    R: np.ndarray
    theta: np.ndarray
    k: np.ndarray
    X: np.ndarray        # X_n for n = 1..N (uses a_{N+1})
    u: np.ndarray        # u_n reconstructed from (R_n, theta_n)

    @property
    def N(self) -> int:
        return self.R.size

    @property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.X)

    def E(self, E0: float = E0_DEFAULT) -> float:
        """``E0 * max_n 1 / sin^2(k_n)`` along the run."""
        return float(E0 / np.min(np.sin(self.k)) ** 2)


def _require_zero_b(seq: JacobiSequence, N: int) -> Tuple[np.ndarray, np.ndarray]:
    a, b = seq.arrays(1, N + 2)
    if np.any(b != 0):
        raise DomainError("Prüfer variables are implemented for b_n = 0 only")
    return a, b


def prufer_run(seq: JacobiSequence, x0: float, N: int,
               initial: Tuple[float, float] = (0.0, 1.0)) -> PruferRun:
    """Evolve the Prüfer variables for ``n = 1..N`` from ``(u_1, u_2)`` given
    by the recurrence with ``(u_0, u_1) = initial``."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    a, _ = _require_zero_b(seq, N)
    x0 = float(x0)
    u0, u1 = (float(v) for v in initial)
    # a_0 multiplies u_0; with u_0 = 0 its value is irrelevant, use 1
    u2 = (x0 * u1 - u0) / a[0]
    st = to_prufer(u1, u2, a[0], x0, 1)
    al = a.tolist()
    ks = [wavenumber(v, x0) for v in al]
    sk = [math.sin(v) for v in ks]
    R = np.empty(N)
    th = np.empty(N)
    X = np.empty(N)
    Rn, t = st.R, st.theta
    sin, cos, atan2, sqrt = math.sin, math.cos, math.atan2, math.sqrt
    for i in range(N):
        R[i], th[i] = Rn, t
        an, an1 = al[i], al[i + 1]
        phi = t + ks[i]
        sp, cp = sin(phi), cos(phi)
        x = (an1 * an1 - an * an) * sp * sp / (an * an * sk[i] * sk[i])
        X[i] = x
        rho = an1 * sk[i + 1] / (an * sk[i])
        Rn *= sqrt(1.0 + x)
        t = phi + atan2((rho - 1.0) * sp * cp, rho * sp * sp + cp * cp)
    k = np.array(ks[:N])
    u = R * np.sin(th) / (a[:N] * np.sin(k))
    return PruferRun(x0, R, th, k, X, u)


def x_sequence(seq: JacobiSequence, x0: float, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """``(X_n, sum_{j<=n} X_j)`` for ``n = 1..N``."""
    run = prufer_run(seq, x0, N)
    return run.X, run.partial_sums


def block_x_maxima(run: PruferRun, model, E0: float = E0_DEFAULT):
    """Per interpolation block ``j`` of a block51 model: ``(j, max |X_n|, E j^{-6})``.

    Each B and D block is widened by the index just before it, where the
    first ratio of the interpolation enters ``X_n``.
    """
    E = run.E(E0)
    out = []
    j = 1
    while True:
        lo_b, hi_b = model.block("B", j)
        if lo_b - 1 > run.N:
            break
        lo_d, hi_d = model.block("D", j)
        idx = np.r_[lo_b - 1:hi_b, lo_d - 1:hi_d]
        idx = idx[(idx >= 1) & (idx <= run.N)]
        if idx.size:
            out.append((j, float(np.max(np.abs(run.X[idx - 1]))), E * j ** -6.0))
        j += 1
    return out


def radius_sup_ratio(run: PruferRun, split: Optional[int] = None) -> float:
    """``sup R`` over ``(split, N]`` divided by ``sup R`` over ``[1, split]``."""
    split = run.N // 2 if split is None else split
    if not 1 <= split < run.N:
        raise DomainError(f"split {split} outside 1..{run.N - 1}")
    return float(np.max(run.R[split:]) / np.max(run.R[:split]))


def cosine_sum_bound_check(q: float, theta: float, M: int) -> Tuple[float, float]:
    """``(sum_{l=1}^M cos(q l + theta), 1 / sin(q/2))``."""
    if not 0.0 < q < 2.0 * math.pi:
        raise DomainError(f"q must lie in (0, 2 pi), got {q}")
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    s = math.fsum(math.cos(q * l + theta) for l in range(1, M + 1))
    return s, 1.0 / math.sin(q / 2.0)
