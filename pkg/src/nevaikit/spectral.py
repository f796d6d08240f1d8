"""Truncated Jacobi matrices, their eigen-decomposition and finite spectral measures.

The eigensolver is self-contained: Sturm-sequence bisection for the
eigenvalues (vectorized over all of them at once) followed by inverse
iteration with a pivoted tridiagonal LU, batched over eigenvalues.
Eigenvalues closer than ``CLUSTER_RTOL * ||M||`` are treated as a cluster and
their vectors are Gram-Schmidt orthogonalized against each other during the
iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DomainError
from .models import JacobiSequence

EPS = np.finfo(float).eps
CLUSTER_RTOL = 1e-6
RESIDUAL_RTOL = 1e-10
MAX_INVERSE_STEPS = 8
_BATCH_ELEMENTS = 2_000_000


@dataclass(frozen=True, eq=False)
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix with diagonal ``diag`` and off-diagonal ``off > 0``."""

    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).copy()
        o = np.asarray(self.off, dtype=float).copy()
        if d.ndim != 1 or d.size < 1:
            raise DomainError("diagonal must be a non-empty vector")
        if o.shape != (d.size - 1,):
            raise DomainError(f"off-diagonal must have length {d.size - 1}, got {o.size}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(o))):
            raise DomainError("entries must be finite")
        if np.any(o <= 0):
            raise DomainError("off-diagonal entries must be strictly positive")
        d.flags.writeable = False
        o.flags.writeable = False
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "off", o)

    @property
    def size(self) -> int:
        return self.diag.size

    def norm_bound(self) -> float:
        """Max absolute row sum, an upper bound for the spectral norm."""
        r = np.abs(self.diag).copy()
        r[:-1] += self.off
        r[1:] += self.off
        return float(r.max())

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """``M @ v`` for ``v`` of shape ``(m,)`` or ``(m, B)``."""
        v = np.asarray(v)
        d = self.diag.reshape((-1,) + (1,) * (v.ndim - 1))
        o = self.off.reshape((-1,) + (1,) * (v.ndim - 1))
        out = d * v
        out[:-1] += o * v[1:]
        out[1:] += o * v[:-1]
        return out


def truncate(seq: JacobiSequence, m: int, corner_b: Optional[float] = None) -> TridiagonalMatrix:
    """Leading ``m x m`` block of the Jacobi matrix; ``corner_b`` replaces ``b_m``."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    a, b = seq.arrays(1, m + 1)
    b = b.copy()
    if corner_b is not None:
        b[-1] = float(corner_b)
    return TridiagonalMatrix(b, a[: m - 1])


# ---------------------------------------------------------------------------
# eigenvalues


def sturm_count(M: TridiagonalMatrix, x: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below each entry of ``x``."""
    x = np.asarray(x, dtype=float)
    tiny = EPS * max(M.norm_bound(), 1e-300) * 1e-3
    off2 = (M.off ** 2).tolist()
    d = M.diag.tolist()
    q = d[0] - x
    q = np.where(q == 0.0, -tiny, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, M.size):
        q = (d[i] - x) - off2[i - 1] / q
        q = np.where(np.abs(q) < tiny, -tiny, q)
        count += q < 0
    return count


def eigvals_bisect(M: TridiagonalMatrix) -> np.ndarray:
    """All eigenvalues in increasing order by simultaneous bisection."""
    m = M.size
    r = np.abs(M.diag).copy()
    r[:-1] += M.off
    r[1:] += M.off
    lo_all = float(np.min(M.diag - (r - np.abs(M.diag))))
    hi_all = float(np.max(M.diag + (r - np.abs(M.diag))))
    pad = 2 * EPS * max(abs(lo_all), abs(hi_all), 1e-300) + 1e-300
    lo = np.full(m, lo_all - pad)
    hi = np.full(m, hi_all + pad)
    idx = np.arange(m)
    scale = max(abs(lo_all), abs(hi_all), 1e-300)
    for _ in range(200):
        width = hi - lo
        active = width > 4 * EPS * np.maximum(np.abs(lo) + np.abs(hi), scale * 1e-3)
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        c = sturm_count(M, mid[active])
        sel = np.nonzero(active)[0]
        below = c > idx[sel]  # eigenvalue idx lies below mid
        hi[sel[below]] = mid[active][below]
        lo[sel[~below]] = mid[active][~below]
    else:
        raise ConvergenceError("bisection did not converge", index=int(np.argmax(hi - lo)))
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# inverse iteration with a pivoted LU, batched over shifts


class _ShiftedLU:
    """LU with partial pivoting of ``M - lam_k I`` for a batch of shifts ``lam``."""

    def __init__(self, M: TridiagonalMatrix, lam: np.ndarray, floor: float):
        m, B = M.size, lam.size
        d = np.empty((m, B))
        d[:] = M.diag[:, None] - lam[None, :]
        du = np.empty((max(m - 1, 0), B))
        du[:] = M.off[:, None]
        du2 = np.zeros((max(m - 2, 0), B))
        dl = np.empty((max(m - 1, 0), B))
        swap = np.zeros((max(m - 1, 0), B), dtype=bool)
        off = M.off
        for i in range(m - 1):
            s = np.abs(d[i]) < off[i]
            swap[i] = s
            di, dn = d[i].copy(), d[i + 1].copy()
            f_ns = off[i] / np.where(s, 1.0, di)
            f_s = di / off[i]
            new_dn = np.where(s, du[i] - f_s * dn, dn - f_ns * du[i])
            new_du = np.where(s, dn, du[i])
            d[i] = np.where(s, off[i], di)
            dl[i] = np.where(s, f_s, f_ns)
            if i < m - 2:
                du2[i] = np.where(s, du[i + 1], 0.0)
                du[i + 1] = np.where(s, -f_s * du[i + 1], du[i + 1])
            du[i] = new_du
            d[i + 1] = new_dn
        tiny = np.abs(d) < floor
        d[tiny] = floor
        self.d, self.du, self.du2, self.dl, self.swap = d, du, du2, dl, swap

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = rhs.copy()
        m = b.shape[0]
        d, du, du2, dl, swap = self.d, self.du, self.du2, self.dl, self.swap
        for i in range(m - 1):
            s = swap[i]
            bi, bn = b[i].copy(), b[i + 1].copy()
            b[i] = np.where(s, bn, bi)
            b[i + 1] = np.where(s, bi - dl[i] * bn, bn - dl[i] * bi)
        x = np.empty_like(b)
        x[m - 1] = b[m - 1] / d[m - 1]
        if m > 1:
            x[m - 2] = (b[m - 2] - du[m - 2] * x[m - 1]) / d[m - 2]
        for i in range(m - 3, -1, -1):
            x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
        return x


def _clusters(lam: np.ndarray, gap: float) -> np.ndarray:
    """Cluster id per eigenvalue (consecutive values closer than ``gap`` share a cluster)."""
    if lam.size == 0:
        return np.empty(0, dtype=np.int64)
    brk = np.concatenate(([True], np.diff(lam) > gap))
    return np.cumsum(brk) - 1


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    values: np.ndarray   # increasing
    vectors: np.ndarray  # column j is the unit eigenvector for values[j]
    residuals: np.ndarray

    def components(self, coordinate: int) -> np.ndarray:
        """Entries of every eigenvector at the 1-based ``coordinate``."""
        if not 1 <= coordinate <= self.values.size:
            raise DomainError(f"coordinate {coordinate} outside 1..{self.values.size}")
        return self.vectors[coordinate - 1]


def eigen_tridiag(M: TridiagonalMatrix) -> EigenDecomposition:
    """Full eigen-decomposition by bisection plus batched inverse iteration.

    Raises :class:`ConvergenceError` (with the offending index) when some pair
    misses ``||Mv - lam v|| <= 1e-10 ||M||``.
    """
    m = M.size
    lam = eigvals_bisect(M)
    if m == 1:
        return EigenDecomposition(lam, np.ones((1, 1)), np.zeros(1))
    norm = max(M.norm_bound(), 1e-300)
    cid = _clusters(lam, CLUSTER_RTOL * norm)
    # position of each eigenvalue inside its cluster
    starts = np.concatenate(([0], np.nonzero(np.diff(cid))[0] + 1))
    pos = np.arange(m) - np.repeat(starts, np.diff(np.concatenate((starts, [m]))))
    V = np.zeros((m, m))
    rng = np.random.default_rng(0x5EED)
    floor = EPS * norm
    batch = max(1, _BATCH_ELEMENTS // m)
    for r in range(int(pos.max()) + 1):
        todo = np.nonzero(pos == r)[0]
        for c0 in range(0, todo.size, batch):
            cols = todo[c0: c0 + batch]
            lu = _ShiftedLU(M, lam[cols], floor)
            x = rng.uniform(-1.0, 1.0, size=(m, cols.size))
            x /= np.linalg.norm(x, axis=0)
            for _ in range(MAX_INVERSE_STEPS):
                x = lu.solve(x)
                x = _orthogonalize(x, V, cols, r)
                x /= np.linalg.norm(x, axis=0)
                res = np.linalg.norm(M.matvec(x) - lam[cols] * x, axis=0)
                if np.all(res <= 1e-3 * RESIDUAL_RTOL * norm):
                    break
            V[:, cols] = x
    # fix signs: first component nonnegative
    sgn = np.where(V[0] < 0, -1.0, 1.0)
    V *= sgn
    res = np.linalg.norm(M.matvec(V) - lam * V, axis=0)
    bad = np.nonzero(res > RESIDUAL_RTOL * norm)[0]
    if bad.size:
        raise ConvergenceError(f"eigenpair {int(bad[0])} residual {res[bad[0]]:.3g} above "
                               f"{RESIDUAL_RTOL:g}*||M||", index=int(bad[0]))
    return EigenDecomposition(lam, V, res)


def _orthogonalize(x, V, cols, r):
    """Remove from ``x[:, i]`` its components along the first ``r`` vectors of its cluster."""
    for s in range(1, r + 1):
        prev = V[:, cols - s]
        proj = np.einsum("ij,ij->j", prev, x)
        x = x - prev * proj
    return x


# ---------------------------------------------------------------------------
# spectral measures and moments


@dataclass(frozen=True, eq=False)
class FiniteSpectralMeasure:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1 or x.size == 0:
            raise DomainError("atoms and weights must be matching non-empty vectors")
        if np.any(np.diff(x) <= 0):
            raise DomainError("atoms must be strictly increasing")
        if np.any(w < 0):
            raise DomainError("weights must be nonnegative")
        if abs(math.fsum(w.tolist()) - 1.0) > 1e-10:
            raise DomainError(f"weights sum to {math.fsum(w.tolist())!r}, not 1")
        object.__setattr__(self, "atoms", x)
        object.__setattr__(self, "weights", w)

    def moment(self, k: int) -> float:
        return math.fsum((self.weights * self.atoms ** k).tolist())

    def point_mass(x: float) -> "FiniteSpectralMeasure":
        return FiniteSpectralMeasure(np.array([float(x)]), np.array([1.0]))

    point_mass = staticmethod(point_mass)


def spectral_measure_at(M: TridiagonalMatrix, coordinate: int) -> FiniteSpectralMeasure:
    """Atoms at the eigenvalues, weights ``v_j(coordinate)^2``."""
    if not 1 <= coordinate <= M.size:
        raise DomainError(f"coordinate {coordinate} outside 1..{M.size}")
    eig = eigen_tridiag(M)
    w = eig.components(coordinate) ** 2
    return FiniteSpectralMeasure(eig.values, w / math.fsum(w.tolist()))


def zeros_of_p(seq: JacobiSequence, degree: int) -> np.ndarray:
    """Zeros of ``p_degree``: the eigenvalues of the ``degree``-truncation."""
    if degree < 1:
        raise DomainError(f"degree must be >= 1, got {degree}")
    return eigvals_bisect(truncate(seq, degree))


def operator_moment(seq: JacobiSequence, k: int) -> float:
    """``<delta_1, J^k delta_1>`` on the ``(k+2)``-truncation."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    M = truncate(seq, k + 2)
    h = (k + 1) // 2
    v = np.zeros(k + 2)
    v[0] = 1.0
    # <d1, J^k d1> = <J^h d1, J^(k-h) d1>
    powers = [v]
    for _ in range(max(h, k - h)):
        powers.append(M.matvec(powers[-1]))
    return math.fsum((powers[h] * powers[k - h]).tolist())


def moment_distance(mu: FiniteSpectralMeasure, seq: JacobiSequence, K: int) -> float:
    """``max_{k <= K} |int x^k dmu - <delta_1, J^k delta_1>|``."""
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    return max(abs(mu.moment(k) - operator_moment(seq, k)) for k in range(K + 1))


def regularity_sequence(seq: JacobiSequence, N: int) -> np.ndarray:
    """``(a_1 ... a_n)^{1/n}`` for ``n = 1..N``, accumulated in logs."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    a, _ = seq.arrays(1, N + 1)
    return np.exp(np.cumsum(np.log(a)) / np.arange(1, N + 1))


def recurrence_weights(seq: JacobiSequence, atoms, n: int, dps: Optional[int] = None) -> np.ndarray:
    """``p_n(x)^2 / sum_{k<=n} p_k(x)^2`` at each atom (zeros of ``p_{n+1}``).

    In double precision the forward recurrence magnifies the rounding error of
    an atom by the growth of the transfer matrices, so for localized
    eigenvectors the result can be far off. With ``dps`` set, every atom is
    first refined by Newton steps on ``p_{n+1}`` and the ratio is evaluated
    with ``dps`` significant digits.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    atoms = np.asarray(atoms, dtype=float)
    a, b = seq.arrays(1, n + 2)
    if dps is None:
        out = np.empty(atoms.size)
        for j, x in enumerate(atoms.tolist()):
            p_prev, p, s, a_prev = 0.0, 1.0, 1.0, 0.0
            for i in range(n):
                p_prev, p = p, ((x - b[i]) * p - a_prev * p_prev) / a[i]
                a_prev = a[i]
                s += p * p
            out[j] = p * p / s
        return out
    import mpmath

    with mpmath.workdps(dps):
        am = [mpmath.mpf(float(v)) for v in a]
        bm = [mpmath.mpf(float(v)) for v in b]

        def run(x, deg):
            # p_0..p_deg and derivative of p_deg
            p_prev, p, dp_prev, dp, a_prev = mpmath.mpf(0), mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0), 0
            vals = [p]
            for i in range(deg):
                p_new = ((x - bm[i]) * p - a_prev * p_prev) / am[i]
                dp_new = (p + (x - bm[i]) * dp - a_prev * dp_prev) / am[i]
                p_prev, p, dp_prev, dp, a_prev = p, p_new, dp, dp_new, am[i]
                vals.append(p)
            return vals, dp

        out = np.empty(atoms.size)
        tol = mpmath.mpf(10) ** (-(dps - 5))
        for j, x0 in enumerate(atoms.tolist()):
            x = mpmath.mpf(x0)
            for _ in range(60):
                vals, dp = run(x, n + 1)
                step = vals[-1] / dp
                x -= step
                if abs(step) <= tol * max(1, abs(x)):
                    break
            else:
                raise ConvergenceError(f"Newton refinement of atom {j} did not converge", index=j)
            vals, _ = run(x, n)
            out[j] = float(vals[n] ** 2 / mpmath.fsum(v * v for v in vals))
        return out
