"""Green's functions G_nm(z) = <delta_n, (J - z)^{-1} delta_m> and related identities.

Two independent numerical routes are provided:

* :func:`resolvent_column` solves ``(J_N - z) x = delta_m`` by tridiagonal
  elimination on the size-N truncation;
* :func:`green_first_row` computes ``G_1n`` from the backward continued
  fraction of the solution that vanishes past the truncation edge, using
  O(n) memory per spectral parameter so it batches over large x-grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, NearSingularError
from .models import JacobiSequence

PIVOT_FLOOR = 1e-300


def tridiag_solve(off: np.ndarray, diag: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric-structure tridiagonal system without pivoting.

    ``diag`` and ``rhs`` have shape ``(N,)`` or ``(N, B)``; ``off`` has shape
    ``(N-1,)`` and is used for both off-diagonals. Raises
    :class:`NearSingularError` if a pivot falls below ``1e-300``.
    """
    diag = np.asarray(diag)
    rhs = np.asarray(rhs)
    N = diag.shape[0]
    if diag.ndim < rhs.ndim:
        diag = diag.reshape(diag.shape + (1,) * (rhs.ndim - diag.ndim))
    shape = np.broadcast_shapes(diag.shape, rhs.shape)
    dtype = np.result_type(diag, rhs, off, np.complex128 if np.iscomplexobj(diag) else float)
    cp = np.empty((N - 1,) + shape[1:], dtype=dtype)
    dp = np.empty(shape, dtype=dtype)
    piv = diag[0] * np.ones(shape[1:], dtype=dtype)
    _check_pivot(piv, 0)
    if N > 1:
        cp[0] = off[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, N):
        piv = diag[i] - off[i - 1] * cp[i - 1]
        _check_pivot(piv, i)
        if i < N - 1:
            cp[i] = off[i] / piv
        dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / piv
    x = np.empty(shape, dtype=dtype)
    x[N - 1] = dp[N - 1]
    for i in range(N - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def _check_pivot(piv, i):
    if np.any(np.abs(piv) < PIVOT_FLOOR):
        raise NearSingularError(f"pivot below {PIVOT_FLOOR:g} at row {i + 1}")


def _truncation(seq: JacobiSequence, N: int) -> Tuple[np.ndarray, np.ndarray]:
    if N < 1:
        raise DomainError(f"truncation size must be >= 1, got {N}")
    a, b = seq.arrays(1, N + 1)
    return a[: N - 1], b


def resolvent_column(seq: JacobiSequence, N: int, z, m: int) -> np.ndarray:
    """``G_{nm}(z)`` for ``n = 1..N`` (row ``n-1`` of the result); ``z`` may be an array."""
    if not 1 <= m <= N:
        raise DomainError(f"index m={m} outside 1..{N}")
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise DomainError("green functions need Im z > 0")
    off, b = _truncation(seq, N)
    diag = b.reshape((N,) + (1,) * z.ndim) - z
    rhs = np.zeros((N,) + z.shape, dtype=complex)
    rhs[m - 1] = 1.0
    return tridiag_solve(off, diag, rhs)


def green_numeric(seq: JacobiSequence, N: int, z, n: int, m: int):
    """``G_{nm}(z)`` on the size-N truncation by one tridiagonal solve against ``delta_m``."""
    if not 1 <= n <= N:
        raise DomainError(f"index n={n} outside 1..{N}")
    col = resolvent_column(seq, N, z, m)
    val = col[n - 1]
    return complex(val) if np.ndim(val) == 0 else val


def green_first_row(seq: JacobiSequence, N: int, z, n_max: int) -> np.ndarray:
    """``G_{1k}(z)`` for ``k = 1..n_max`` via the backward continued fraction.

    With ``psi`` the solution vanishing at ``N+1`` and ``q_k = psi_{k+1}/psi_k``,

        q_k = -a_k / (a_{k+1} q_{k+1} + b_{k+1} - z),   q_N = 0,  a_0 = 1,

    and ``G_{1k} = -q_0 q_1 ... q_{k-1}``. Returns shape ``(n_max,) + z.shape``.
    """
    if not 1 <= n_max <= N:
        raise DomainError(f"n_max={n_max} outside 1..{N}")
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise DomainError("green functions need Im z > 0")
    a, b = seq.arrays(1, N + 1)
    a_full = np.concatenate(([1.0], a))  # a_0 .. a_N
    if z.size <= 8:
        # a plain Python loop per parameter beats numpy dispatch for small batches
        out = np.empty((n_max,) + z.shape, dtype=complex)
        al, bl = a_full.tolist(), b.tolist()
        for idx in np.ndindex(z.shape):
            out[(slice(None),) + idx] = _first_row_scalar(al, bl, complex(z[idx]), N, n_max)
        return out
    q = np.zeros(z.shape, dtype=complex)
    keep = np.empty((n_max,) + z.shape, dtype=complex)
    for k in range(N - 1, -1, -1):
        den = a_full[k + 1] * q + b[k] - z
        _check_pivot(den, k)
        q = -a_full[k] / den
        if k < n_max:
            keep[k] = q
    return -np.cumprod(keep, axis=0)


def _first_row_scalar(a_full, b, z, N, n_max):
    q = 0j
    keep = [0j] * n_max
    for k in range(N - 1, -1, -1):
        den = a_full[k + 1] * q + b[k] - z
        if abs(den) < PIVOT_FLOOR:
            raise NearSingularError(f"pivot below {PIVOT_FLOOR:g} at row {k + 1}")
        q = -a_full[k] / den
        if k < n_max:
            keep[k] = q
    return -np.cumprod(keep)


def free_green_1n(z, n: int):
    """Closed form for ``a = 1, b = 0``: ``G_1n(z) = -r^n`` with ``r + 1/r = z``, ``|r| < 1``."""
    z = np.asarray(z, dtype=complex)
    s = np.sqrt(z * z - 4.0)
    r1 = (z - s) / 2.0
    r2 = (z + s) / 2.0
    r = np.where(np.abs(r1) < np.abs(r2), r1, r2)
    out = -(r ** n)
    return complex(out) if out.ndim == 0 else out


def free_m_function(z):
    """``m(z) = (-z + sqrt(z^2 - 4))/2`` on the branch with ``|m| < 1``."""
    return free_green_1n(z, 1)


# ---------------------------------------------------------------------------
# Weyl solution and decoupling


def _poly_complex(seq: JacobiSequence, z: complex, n: int) -> np.ndarray:
    """``p_{-1}(z), p_0(z), ..., p_n(z)`` (length n + 2)."""
    a, b = seq.arrays(1, n + 1) if n > 0 else (np.empty(0), np.empty(0))
    p = np.empty(n + 2, dtype=complex)
    p[0], p[1] = 0.0, 1.0
    a_prev = 0.0
    for i in range(n):
        p[i + 2] = ((z - b[i]) * p[i + 1] - a_prev * p[i]) / a[i]
        a_prev = a[i]
    return p


def weyl_wronskian_residual(seq: JacobiSequence, N: int, z: complex, n: int) -> float:
    """``|a_n (u_{n+1} p_{n-1} - u_n p_n) - 1|`` with ``u_k = G_1k(z)``, ``u_0 = -1``, ``a_0 = 1``."""
    if not 0 <= n < N:
        raise DomainError(f"need 0 <= n < N, got n={n}, N={N}")
    col = resolvent_column(seq, N, z, 1)
    u = np.concatenate(([-1.0 + 0j], col))
    p = _poly_complex(seq, complex(z), max(n, 0))
    a_n = 1.0 if n == 0 else seq.params_at(n)[0]
    # p[j + 1] holds p_j
    w = a_n * (u[n + 1] * p[n] - u[n] * p[n + 1])
    return float(abs(w - 1.0))


def decoupling_terms(seq: JacobiSequence, N: int, z: complex, k: int, l: int, n: int):
    """``(G_1n, -a_k G_1k Gt_{k+1,n} - a_l G_{1,l+1} Gt_{l,n})`` where ``Gt`` is the
    resolvent with ``a_k`` and ``a_l`` set to zero."""
    if not (1 <= k and k + 1 <= n <= l < N):
        raise DomainError(f"need 1 <= k, k+1 <= n <= l < N; got k={k}, n={n}, l={l}, N={N}")
    col = resolvent_column(seq, N, z, 1)
    a, b = seq.arrays(1, N + 1)
    # middle block k+1..l; its resolvent column at n
    mid_off = a[k: l - 1]
    mid_diag = b[k: l] - complex(z)
    rhs = np.zeros(l - k, dtype=complex)
    rhs[n - k - 1] = 1.0
    gt = tridiag_solve(mid_off, mid_diag, rhs)
    lhs = col[n - 1]
    rhs_val = -a[k - 1] * col[k - 1] * gt[0] - a[l - 1] * col[l] * gt[-1]
    return complex(lhs), complex(rhs_val)


def decoupling_residual(seq: JacobiSequence, N: int, z: complex, k: int, l: int, n: int) -> float:
    lhs, rhs = decoupling_terms(seq, N, z, k, l, n)
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)


# ---------------------------------------------------------------------------
# closed-form middle-block resolvent


def solve_w(x0: float) -> float:
    """Root of ``w + 1/w = 2 x0`` with ``|w| > 1``; requires ``|x0| > 1``."""
    if abs(x0) <= 1.0:
        raise DomainError(f"solve_w needs |x0| > 1, got {x0}")
    return x0 + math.copysign(math.sqrt(x0 * x0 - 1.0), x0)


def middle_green(k: int, m: int, n: int, x0: float, convention: str = "resolvent") -> float:
    """Entry ``(m, n)`` of ``(J^(k) - x0)^{-1}``, ``J^(k)`` the k x k matrix with zero
    diagonal and 1/2 off-diagonals.

    Evaluated as ``2 w^{m-n-1} (1 - w^{-2m})(1 - w^{-2(k+1-n)}) / ((1 - w^{-2})(1 - w^{-2(k+1)}))``
    (for ``m <= n``), which never overflows. That expression equals the
    product formula written with ``(w^{-m} - w^m)`` factors; it is the
    resolvent with the opposite sign, so ``convention="resolvent"`` (default)
    negates it and ``convention="literal"`` returns it unchanged.
    """
    if not (1 <= m <= k and 1 <= n <= k):
        raise DomainError(f"indices must lie in 1..{k}")
    if convention not in ("resolvent", "literal"):
        raise DomainError(f"unknown convention {convention!r}")
    if m > n:
        m, n = n, m
    w = solve_w(x0)
    inv2 = 1.0 / (w * w)
    val = (2.0 * w ** (m - n - 1) * (1.0 - inv2 ** m) * (1.0 - inv2 ** (k + 1 - n))
           / ((1.0 - inv2) * (1.0 - inv2 ** (k + 1))))
    return -val if convention == "resolvent" else val


def middle_green_direct(k: int, x0: float) -> np.ndarray:
    """Oracle: ``(J^(k) - x0)^{-1}`` column by column via :func:`tridiag_solve`."""
    off = np.full(k - 1, 0.5)
    diag = np.full(k, -float(x0))
    return tridiag_solve(off, diag[:, None] * np.ones((1, k)), np.eye(k))


# ---------------------------------------------------------------------------
# boundary values and tail statistics


@dataclass(frozen=True)
class ProbeResult:
    eps: Tuple[float, ...]
    values: Tuple[complex, ...]
    stabilized: Optional[bool]  # None: fewer than two probes, not assessed

    @property
    def relative_changes(self) -> Tuple[float, ...]:
        v = self.values
        return tuple(abs(v[i] - v[i - 1]) / max(abs(v[i]), 1e-300) for i in range(1, len(v)))


def boundary_value_probe(seq: JacobiSequence, N: int, x0: float, n: int,
                         eps_schedule: Sequence[float], tol: float = 1e-2) -> ProbeResult:
    """``G_1n(x0 + i eps)`` along a decreasing schedule, with a stabilization flag.

    The flag is set when the last relative change is below ``tol``; this is a
    heuristic for the existence of the boundary value, not a proof.
    """
    eps = [float(e) for e in eps_schedule]
    if not eps:
        raise DomainError("empty eps schedule")
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise DomainError("eps schedule must be strictly decreasing")
    if eps[-1] < 1e-6:
        raise DomainError("smallest eps must be >= 1e-6")
    z = x0 + 1j * np.array(eps)
    vals = green_first_row(seq, N, z, n)[n - 1]
    values = tuple(complex(v) for v in vals)
    res = ProbeResult(tuple(eps), values, None)
    if len(values) >= 2:
        res = ProbeResult(tuple(eps), values, bool(res.relative_changes[-1] < tol))
    return res


@dataclass(frozen=True)
class TailStatistics:
    thresholds: Tuple[float, ...]
    fractions: Tuple[float, ...]   # fraction of grid points with |G| > M
    measures: Tuple[float, ...]    # fraction times interval length
    fitted_constant: float         # max over M of M * measure

    def bound_holds(self) -> bool:
        return all(m <= self.fitted_constant / M + 1e-15
                   for m, M in zip(self.measures, self.thresholds))


def tail_statistics(seq: JacobiSequence, N: int, n: int, eps: float, x_grid: np.ndarray,
                    thresholds: Sequence[float]) -> TailStatistics:
    """Distribution tail of ``|G_1n(x + i eps)|`` over a uniform grid of ``x``."""
    x_grid = np.asarray(x_grid, dtype=float)
    vals = np.abs(green_first_row(seq, N, x_grid + 1j * eps, n)[n - 1])
    length = float(x_grid[-1] - x_grid[0])
    fr = tuple(float(np.mean(vals > M)) for M in thresholds)
    meas = tuple(f * length for f in fr)
    C = max(M * m for M, m in zip(thresholds, meas))
    return TailStatistics(tuple(float(M) for M in thresholds), fr, meas, float(C))
