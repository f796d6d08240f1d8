"""Jacobi parameter generators.

Every model is a :class:`JacobiSequence`: an immutable, deterministic
producer of ``(a_n, b_n)`` for ``n >= 1`` with declared bounds
``A_minus <= a_n <= A_plus`` and ``|b_n| <= B_plus``.

Two accessors are provided. ``params_at(n)`` returns a single pair and
``arrays(start, stop)`` returns numpy arrays for the half-open index range
``[start, stop)``; the latter is what the numerical kernels use.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

_MASK64 = (1 << 64) - 1
_GAMMA64 = 0x9E3779B97F4A7C15


class JacobiSequence:
    """Base class. Subclasses implement ``arrays`` and the bound properties."""

    kind: str = "abstract"

    @property
    def bounds(self) -> Tuple[float, float, float]:
        """``(A_minus, A_plus, B_plus)``."""
        raise NotImplementedError

    @property
    def a_minus(self) -> float:
        return self.bounds[0]

    @property
    def a_plus(self) -> float:
        return self.bounds[1]

    @property
    def b_plus(self) -> float:
        return self.bounds[2]

    def arrays(self, start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def params_at(self, n: int) -> Tuple[float, float]:
        if n < 1:
            raise DomainError(f"Jacobi index must be >= 1, got {n}")
        a, b = self.arrays(n, n + 1)
        return float(a[0]), float(b[0])

    def spec(self) -> dict:
        """Config-file representation (see :func:`model_from_spec`)."""
        raise NotImplementedError

    def _check_range(self, start: int, stop: int) -> None:
        if start < 1 or stop < start:
            raise DomainError(f"invalid index range [{start}, {stop})")


def params_at(seq: JacobiSequence, n: int) -> Tuple[float, float]:
    return seq.params_at(n)


# ---------------------------------------------------------------------------
# constant / free


@dataclass(frozen=True)
class ConstantModel(JacobiSequence):
    a: float = 1.0
    b: float = 0.0
    kind: str = "constant"

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"a must be positive, got {self.a}")

    @property
    def bounds(self):
        return (self.a, self.a, abs(self.b))

    def arrays(self, start, stop):
        self._check_range(start, stop)
        n = stop - start
        return np.full(n, float(self.a)), np.full(n, float(self.b))

    def spec(self):
        if self.kind == "free":
            return {"kind": "free"}
        return {"kind": "constant", "a": self.a, "b": self.b}


def make_free() -> ConstantModel:
    """``a_n = 1, b_n = 0``: the measure with essential spectrum [-2, 2]."""
    return ConstantModel(1.0, 0.0, kind="free")


def make_constant(a: float, b: float = 0.0) -> ConstantModel:
    return ConstantModel(float(a), float(b))


# ---------------------------------------------------------------------------
# Szwarc


@dataclass(frozen=True)
class SzwarcModel(JacobiSequence):
    """``a_n = 1``; ``b_1 = beta``, ``b_n = 3/2`` at squares ``n = k^2 >= 4``."""

    beta: float = 0.0
    kind: str = "szwarc"

    @property
    def bounds(self):
        return (1.0, 1.0, max(1.5, abs(self.beta)))

    def arrays(self, start, stop):
        self._check_range(start, stop)
        idx = np.arange(start, stop, dtype=np.int64)
        root = np.floor(np.sqrt(idx.astype(float))).astype(np.int64)
        # float sqrt may be off by one near large squares
        root = np.where(root * root > idx, root - 1, root)
        root = np.where((root + 1) * (root + 1) <= idx, root + 1, root)
        b = np.where((root * root == idx) & (idx >= 4), 1.5, 0.0)
        b = np.where(idx == 1, float(self.beta), b)
        return np.ones(stop - start), b

    def spec(self):
        return {"kind": "szwarc", "beta": self.beta}


def make_szwarc(beta: float = 0.0) -> SzwarcModel:
    return SzwarcModel(float(beta))


# ---------------------------------------------------------------------------
# Anderson


def _splitmix_state(seed: int) -> int:
    z = (seed + _GAMMA64) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def counter_uniform(seed: int, idx: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) draws keyed on ``(seed, n)``.

    This is SplitMix64 evaluated at stream position ``n`` of a stream whose
    origin is a mixed copy of ``seed``, so any index is O(1).
    """
    base = np.uint64(_splitmix_state(int(seed) & _MASK64))
    z = base + np.asarray(idx, dtype=np.uint64) * np.uint64(_GAMMA64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class AndersonModel(JacobiSequence):
    """``a_n = 1/2``, ``b_n`` i.i.d. uniform on [-1, 1]."""

    seed: int = 0
    kind: str = "anderson"

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _MASK64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def bounds(self):
        return (0.5, 0.5, 1.0)

    def arrays(self, start, stop):
        self._check_range(start, stop)
        u = counter_uniform(self.seed, np.arange(start, stop, dtype=np.uint64))
        return np.full(stop - start, 0.5), 2.0 * u - 1.0

    def spec(self):
        return {"kind": "anderson", "seed": int(self.seed)}


def make_anderson(seed: int) -> AndersonModel:
    return AndersonModel(int(seed))


# ---------------------------------------------------------------------------
# block models


@dataclass(frozen=True)
class PowerGrowth:
    """Block sizes ``(round(a_base**(j**p)), round(c_base**(j**p)), round(j**q) - 1)``.

    The defaults are the sizes 3^{j^2}, 2^{j^2}, j^6 - 1. Integer exponents
    are evaluated in exact integer arithmetic.
    """

    a_base: float = 3
    c_base: float = 2
    exponent: float = 2
    interp_exponent: float = 6

    def __call__(self, j: int) -> Tuple[int, int, int]:
        return (
            _int_power(self.a_base, j, self.exponent),
            _int_power(self.c_base, j, self.exponent),
            _plain_power(j, self.interp_exponent) - 1,
        )

    def spec(self) -> dict:
        return {
            "a_base": self.a_base,
            "c_base": self.c_base,
            "exponent": self.exponent,
            "interp_exponent": self.interp_exponent,
        }


def _int_power(base, j, p) -> int:
    if float(p).is_integer() and float(base).is_integer():
        return int(base) ** (int(j) ** int(p))
    return int(round(float(base) ** (float(j) ** float(p))))


def _plain_power(j, p) -> int:
    if float(p).is_integer():
        return int(j) ** int(p)
    return int(round(float(j) ** float(p)))


DEFAULT_GROWTH = PowerGrowth()


class BlockLayout:
    """Prefix-sum bookkeeping for successive labelled blocks.

    Block ``j`` (j = 1, 2, ...) consists of sub-blocks named by ``labels``
    with sizes ``sizes(j)``. Boundaries are extended on demand; the table is
    append-only, so concurrent readers always see consistent prefixes.
    """

    def __init__(self, labels: Sequence[str], sizes: Callable[[int], Sequence[int]]):
        self.labels = tuple(labels)
        self._sizes = sizes
        self._starts = [1]  # start index of every sub-block, flattened
        self._lock = threading.Lock()

    def _extend_to(self, n: int) -> None:
        if self._starts[-1] > n:
            return
        with self._lock:
            while self._starts[-1] <= n:
                j = (len(self._starts) - 1) // len(self.labels) + 1
                sizes = list(self._sizes(j))
                if len(sizes) != len(self.labels) or any(s < 0 for s in sizes):
                    raise DomainError(f"growth returned invalid sizes {sizes} at j={j}")
                for s in sizes:
                    self._starts.append(self._starts[-1] + int(s))

    def locate(self, n: int) -> Tuple[str, int, int, int, int]:
        """``(label, j, offset, start, length)`` for the block containing ``n``."""
        self._extend_to(n)
        pos = bisect.bisect_right(self._starts, n) - 1
        # empty sub-blocks share a start with their successor; bisect_right
        # already lands on the last (nonempty) one
        label = self.labels[pos % len(self.labels)]
        j = pos // len(self.labels) + 1
        start = self._starts[pos]
        return label, j, n - start, start, self._starts[pos + 1] - start

    def block(self, label: str, j: int) -> Tuple[int, int]:
        """Half-open ``[start, stop)`` of sub-block ``label`` in round ``j``."""
        pos = (j - 1) * len(self.labels) + self.labels.index(label)
        while len(self._starts) <= pos + 1:
            self._extend_to(self._starts[-1])
        return self._starts[pos], self._starts[pos + 1]

    def center(self, label: str, j: int) -> int:
        """Half a unit before the midpoint (the midpoint itself for odd sizes)."""
        start, stop = self.block(label, j)
        length = stop - start
        if length == 0:
            raise DomainError(f"block {label}_{j} is empty")
        return start + (length + 1) // 2 - 1

    def segments(self, start: int, stop: int):
        """Yield ``(label, j, lo, hi, block_start)`` pieces covering ``[start, stop)``."""
        if stop <= start:
            return
        self._extend_to(stop - 1)
        pos = bisect.bisect_right(self._starts, start) - 1
        lo = start
        while lo < stop:
            bstart, bstop = self._starts[pos], self._starts[pos + 1]
            hi = min(bstop, stop)
            if hi > lo:
                yield (self.labels[pos % len(self.labels)], pos // len(self.labels) + 1,
                       lo, hi, bstart)
            lo = max(lo, hi)
            pos += 1


@lru_cache(maxsize=None)
def _layout(labels: Tuple[str, ...], growth) -> BlockLayout:
    return BlockLayout(labels, growth)


def _block41_sizes(growth):
    def sizes(j):
        nA, nC = tuple(growth(j))[:2]
        if nA <= 0 or nC <= 0:
            raise DomainError(f"growth must return positive sizes, got ({nA}, {nC}) at j={j}")
        return nA, nC
    return sizes


@dataclass(frozen=True)
class Block41Model(JacobiSequence):
    """``b_n = 0``; ``a_n = 1`` on A_j blocks and ``1/2`` on C_j blocks."""

    growth: Callable = DEFAULT_GROWTH
    kind: str = "block41"

    def __post_init__(self):
        # probe the first blocks so invalid growth fails at construction
        for j in (1, 2):
            _block41_sizes(self.growth)(j)

    @property
    def layout(self) -> BlockLayout:
        return _layout(("A", "C"), _Sizes41(self.growth))

    @property
    def bounds(self):
        return (0.5, 1.0, 0.0)

    def arrays(self, start, stop):
        self._check_range(start, stop)
        a = np.empty(stop - start)
        for label, _j, lo, hi, _bs in self.layout.segments(start, stop):
            a[lo - start:hi - start] = 1.0 if label == "A" else 0.5
        return a, np.zeros(stop - start)

    def block(self, label, j):
        return self.layout.block(label, j)

    def center(self, j):
        """Center of C_j."""
        return self.layout.center("C", j)

    def spec(self):
        return {"kind": "block41", "growth": _growth_spec(self.growth)}


@dataclass(frozen=True)
class _Sizes41:
    growth: Callable

    def __call__(self, j):
        return _block41_sizes(self.growth)(j)


@dataclass(frozen=True)
class _Sizes51:
    growth: Callable

    def __call__(self, j):
        nA, nC, nB = tuple(self.growth(j))[:3]
        if nA <= 0 or nC <= 0 or nB < 0:
            raise DomainError(f"invalid block51 sizes ({nA}, {nC}, {nB}) at j={j}")
        return nA, nB, nC, nB


def make_block41(growth: Callable = DEFAULT_GROWTH) -> Block41Model:
    return Block41Model(growth)


@dataclass(frozen=True)
class Block51Model(JacobiSequence):
    """Blocks A_j, B_j, C_j, D_j with geometric interpolation of ``a_n^2``.

    On B_j each step multiplies ``a_n^2`` by ``c_j``; on D_j each step divides
    by ``c_j``; ``c_j ** (#B_j + 1) = 1/4`` so the plateaus join continuously.
    """

    growth: Callable = DEFAULT_GROWTH
    kind: str = "block51"

    def __post_init__(self):
        for j in (1, 2):
            _Sizes51(self.growth)(j)

    @property
    def layout(self) -> BlockLayout:
        return _layout(("A", "B", "C", "D"), _Sizes51(self.growth))

    @property
    def bounds(self):
        return (0.5, 1.0, 0.0)

    def ratio(self, j: int) -> float:
        """``c_j``."""
        nB = self.layout.block("B", j)
        return 0.25 ** (1.0 / (nB[1] - nB[0] + 1))

    def arrays(self, start, stop):
        self._check_range(start, stop)
        a = np.empty(stop - start)
        for label, j, lo, hi, bstart in self.layout.segments(start, stop):
            sl = slice(lo - start, hi - start)
            if label == "A":
                a[sl] = 1.0
            elif label == "C":
                a[sl] = 0.5
            else:
                steps = np.arange(lo - bstart + 1, hi - bstart + 1, dtype=float)
                c = self.ratio(j)
                a2 = c ** steps if label == "B" else 0.25 * c ** (-steps)
                a[sl] = np.sqrt(a2)
        return a, np.zeros(stop - start)

    def block(self, label, j):
        return self.layout.block(label, j)

    def spec(self):
        return {"kind": "block51", "growth": _growth_spec(self.growth)}


def make_block51(growth: Callable = DEFAULT_GROWTH) -> Block51Model:
    return Block51Model(growth)


def _growth_spec(growth):
    if isinstance(growth, PowerGrowth):
        return growth.spec()
    return repr(growth)


# ---------------------------------------------------------------------------
# Fibonacci


@dataclass(frozen=True)
class FibonacciModel(JacobiSequence):
    """``a_n = 1``, ``b_n = 1`` iff ``(n*alpha + theta) mod 1`` lies in ``[1 - alpha, 1)``."""

    theta: float = 0.0
    kind: str = "fibonacci"

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise DomainError(f"theta must lie in [0, 1), got {self.theta}")

    @property
    def bounds(self):
        return (1.0, 1.0, 1.0)

    def arrays(self, start, stop):
        self._check_range(start, stop)
        idx = np.arange(start, stop, dtype=float)
        frac = np.mod(idx * GOLDEN + self.theta, 1.0)
        return np.ones(stop - start), np.where(frac >= 1.0 - GOLDEN, 1.0, 0.0)

    def spec(self):
        return {"kind": "fibonacci", "theta": self.theta}


def make_fibonacci(theta: float = 0.0) -> FibonacciModel:
    return FibonacciModel(float(theta))


# ---------------------------------------------------------------------------
# periodic (+ decaying perturbation)


@dataclass(frozen=True)
class PowerDecay:
    """``delta_n = amplitude * n**(-exponent)``.

    ``target`` selects where it acts: added to ``b``, multiplied into ``a`` as
    ``a * (1 + delta_n)``, or both.
    """

    amplitude: float
    exponent: float = 2.0
    target: str = "both"

    def __post_init__(self):
        if self.target not in ("a", "b", "both"):
            raise DomainError(f"perturbation target must be a, b or both, got {self.target!r}")
        if self.exponent <= 0:
            raise DomainError("perturbation exponent must be positive (decaying)")
        if self.target != "b" and abs(self.amplitude) >= 1:
            raise DomainError("|amplitude| must be < 1 when perturbing a")

    def __call__(self, n):
        return self.amplitude * np.asarray(n, dtype=float) ** (-self.exponent)


@dataclass(frozen=True)
class PeriodicModel(JacobiSequence):
    a_list: Tuple[float, ...]
    b_list: Tuple[float, ...]
    perturbation: Optional[PowerDecay] = None
    kind: str = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "a_list", tuple(float(x) for x in self.a_list))
        object.__setattr__(self, "b_list", tuple(float(x) for x in self.b_list))
        if len(self.a_list) == 0 or len(self.a_list) != len(self.b_list):
            raise DomainError("a_list and b_list must have equal positive length")
        if min(self.a_list) <= 0:
            raise DomainError("periodic a entries must be positive")

    @property
    def period(self) -> int:
        return len(self.a_list)

    @property
    def bounds(self):
        amp = abs(self.perturbation.amplitude) if self.perturbation else 0.0
        amp_a = amp if self.perturbation and self.perturbation.target != "b" else 0.0
        amp_b = amp if self.perturbation and self.perturbation.target != "a" else 0.0
        return (min(self.a_list) * (1 - amp_a), max(self.a_list) * (1 + amp_a),
                max(abs(b) for b in self.b_list) + amp_b)

    def arrays(self, start, stop):
        self._check_range(start, stop)
        idx = np.arange(start, stop)
        r = (idx - 1) % self.period
        a = np.asarray(self.a_list)[r]
        b = np.asarray(self.b_list)[r]
        p = self.perturbation
        if p is not None:
            d = p(idx)
            if p.target in ("a", "both"):
                a = a * (1.0 + d)
            if p.target in ("b", "both"):
                b = b + d
        return a, b

    def spec(self):
        out = {"kind": "periodic", "a": list(self.a_list), "b": list(self.b_list)}
        if self.perturbation is not None:
            p = self.perturbation
            out["perturbation"] = {"amplitude": p.amplitude, "exponent": p.exponent,
                                   "target": p.target}
        return out


def make_periodic(a_list, b_list, perturbation: Optional[PowerDecay] = None) -> PeriodicModel:
    return PeriodicModel(tuple(a_list), tuple(b_list), perturbation)


# ---------------------------------------------------------------------------
# config round-trip

_MODEL_KEYS = {
    "free": set(),
    "constant": {"a", "b"},
    "szwarc": {"beta"},
    "anderson": {"seed"},
    "block41": {"growth"},
    "block51": {"growth"},
    "fibonacci": {"theta"},
    "periodic": {"a", "b", "perturbation"},
}


def model_from_spec(spec: dict) -> JacobiSequence:
    """Build a model from its config-file dictionary.

    Raises ``KeyError`` for unknown kinds or keys, ``DomainError`` for
    invalid parameter values.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _MODEL_KEYS:
        raise KeyError(f"unknown model kind {kind!r}; expected one of {sorted(_MODEL_KEYS)}")
    unknown = set(spec) - _MODEL_KEYS[kind]
    if unknown:
        raise KeyError(f"unknown key(s) for model {kind!r}: {sorted(unknown)}")
    if kind == "free":
        return make_free()
    if kind == "constant":
        return make_constant(spec.get("a", 1.0), spec.get("b", 0.0))
    if kind == "szwarc":
        return make_szwarc(spec.get("beta", 0.0))
    if kind == "anderson":
        return make_anderson(int(spec.get("seed", 0)))
    if kind == "fibonacci":
        return make_fibonacci(spec.get("theta", 0.0))
    if kind in ("block41", "block51"):
        g = spec.get("growth", {})
        if not isinstance(g, dict):
            raise KeyError("growth must be a table")
        bad = set(g) - {"a_base", "c_base", "exponent", "interp_exponent"}
        if bad:
            raise KeyError(f"unknown growth key(s): {sorted(bad)}")
        growth = PowerGrowth(**g)
        return make_block41(growth) if kind == "block41" else make_block51(growth)
    pert = spec.get("perturbation")
    if pert is not None:
        bad = set(pert) - {"amplitude", "exponent", "target"}
        if bad:
            raise KeyError(f"unknown perturbation key(s): {sorted(bad)}")
        pert = PowerDecay(**pert)
    return make_periodic(spec.get("a", [1.0]), spec.get("b", [0.0]), pert)
