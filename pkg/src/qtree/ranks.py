"""Seeded per-vertex ranks and their quantization into layers.

A rank is stored as a 64-bit integer key; ``rank(v) = key(v) / 2**64``. Keys
are compared directly wherever ties matter, so equality is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

import numpy as np

from qtree.graph import InputError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_KWISE_TAG = 0x6B776973652D636F  # domain separator for polynomial coefficients
_TWO_NEG_64 = 2.0 ** -64


def mix64(x: int) -> int:
    """SplitMix64 step: a bijective avalanche mix of ``x + GOLDEN``."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(x: np.ndarray) -> np.ndarray:
    z = x.astype(np.uint64) + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def child_seed(base: int, *path: int) -> int:
    """Derive an independent 64-bit seed from ``base`` and an index path."""
    h = mix64(base & MASK64)
    for p in path:
        h = mix64(h ^ mix64((p * GOLDEN) & MASK64))
    return h


def parse_seed(text: str | int) -> int:
    """Accept a decimal or ``0x``-prefixed hexadecimal 64-bit seed."""
    if isinstance(text, int):
        value = text
    else:
        s = text.strip().lower()
        try:
            value = int(s, 16) if s.startswith("0x") else int(s, 10)
        except ValueError:
            raise ValueError(f"invalid seed {text!r}") from None
    if not 0 <= value <= MASK64:
        raise ValueError(f"seed {value} is not a 64-bit unsigned value")
    return value


def parse_mode(text: str) -> tuple[str, int]:
    """``"full"`` -> ``("full", 0)``; ``"kwise:<k>"`` -> ``("kwise", k)``."""
    s = text.strip().lower()
    if s == "full":
        return ("full", 0)
    if s.startswith("kwise"):
        _, _, k = s.partition(":")
        k = k or "4"
        if not k.isdigit() or int(k) < 1:
            raise ValueError(f"invalid k in rank mode {text!r}")
        return ("kwise", int(k))
    raise ValueError(f"unknown rank mode {text!r}; expected 'full' or 'kwise:<k>'")


def format_mode(mode: tuple[str, int]) -> str:
    return "full" if mode[0] == "full" else f"kwise:{mode[1]}"


def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13):
        if m % q == 0:
            return m == q
    for q in range(17, isqrt(m) + 1, 2):
        if m % q == 0:
            return False
    return True


@lru_cache(maxsize=None)
def field_prime(n: int) -> int:
    """Smallest prime strictly greater than ``max(n, 2**31)``."""
    m = max(n, 1 << 31) + 1
    while not _is_prime(m):
        m += 1
    return m


class RankOracle:
    """Deterministic map from vertex id to a rank in ``[0, 1]``.

    ``mode="full"`` hashes ``(seed, v)`` through SplitMix64. ``mode="kwise:k"``
    evaluates a random polynomial of degree ``k-1`` over ``GF(p)`` at ``v``,
    with coefficients drawn from ``seed`` in counter mode; any ``k`` distinct
    vertices then get independent ranks at resolution ``1/p``.
    """

    def __init__(self, seed: int, n: int, mode: str | tuple[str, int] = "full"):
        self.seed = parse_seed(seed)
        self.n = int(n)
        self.mode = parse_mode(mode) if isinstance(mode, str) else tuple(mode)
        self._state = mix64(self.seed)
        if self.mode[0] == "kwise":
            k = self.mode[1]
            self.p = field_prime(self.n)
            if self.p >= 1 << 32:
                raise ValueError("kwise mode supports vertex domains below 2**32")
            self.coeffs = tuple(
                mix64(((self._state ^ _KWISE_TAG) + i * GOLDEN) & MASK64) % self.p for i in range(k)
            )
            self._scale = (1 << 64) // self.p
        else:
            self.p = None
            self.coeffs = ()
            self._scale = 1

    @property
    def mode_name(self) -> str:
        return format_mode(self.mode)

    def _check(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise InputError(f"vertex {v} out of range [0, {self.n})")

    def key(self, v: int) -> int:
        """64-bit integer key of ``v``; ranks compare exactly as keys do."""
        self._check(v)
        if self.mode[0] == "full":
            return mix64((self._state + v * GOLDEN) & MASK64)
        h = 0
        for c in reversed(self.coeffs):
            h = (h * v + c) % self.p
        return h * self._scale

    def rank(self, v: int) -> float:
        return self.key(v) * _TWO_NEG_64

    def keys(self, vertices: np.ndarray | None = None) -> np.ndarray:
        """Vectorized keys (``uint64``) for ``vertices`` (default: all)."""
        vs = np.arange(self.n, dtype=np.uint64) if vertices is None else np.asarray(vertices, dtype=np.int64)
        if vs.size and (vs.min() < 0 or vs.max() >= self.n):
            raise InputError("vertex out of range")
        vs = vs.astype(np.uint64)
        if self.mode[0] == "full":
            return mix64_array(np.uint64(self._state) + vs * np.uint64(GOLDEN))
        p = np.uint64(self.p)
        h = np.zeros_like(vs)
        for c in reversed(self.coeffs):
            h = (h * vs + np.uint64(c)) % p
        return h * np.uint64(self._scale)

    def ranks(self, vertices: np.ndarray | None = None) -> np.ndarray:
        return self.keys(vertices).astype(np.float64) * _TWO_NEG_64

    def materialize(self) -> "MaterializedRanks":
        return MaterializedRanks(self)

    def __repr__(self) -> str:
        return f"RankOracle(seed={self.seed:#x}, n={self.n}, mode={self.mode_name!r})"


class MaterializedRanks:
    """All keys of an oracle precomputed into a list; same read interface."""

    def __init__(self, oracle: RankOracle):
        self.oracle = oracle
        self.n = oracle.n
        self.mode = oracle.mode
        self.key_list: list[int] = oracle.keys().tolist()

    def key(self, v: int) -> int:
        if not 0 <= v < self.n:
            raise InputError(f"vertex {v} out of range [0, {self.n})")
        return self.key_list[v]

    def rank(self, v: int) -> float:
        return self.key(v) * _TWO_NEG_64

    def keys(self, vertices: np.ndarray | None = None) -> np.ndarray:
        return self.oracle.keys(vertices)

    def ranks(self, vertices: np.ndarray | None = None) -> np.ndarray:
        return self.oracle.ranks(vertices)


class FixedRanks:
    """Explicit ranks in ``[0, 1]``; handy for hand-built examples.

    Keys are ``round(r * 2**64)`` clamped to 64 bits, so they order exactly as
    the given ranks (up to float resolution).
    """

    def __init__(self, ranks):
        self.values = [float(r) for r in ranks]
        for r in self.values:
            if not 0.0 <= r <= 1.0:
                raise InputError(f"rank {r} outside [0, 1]")
        self.n = len(self.values)
        self.mode = ("fixed", 0)
        self.key_list = [min(int(r * 2.0**64), MASK64) for r in self.values]

    def key(self, v: int) -> int:
        if not 0 <= v < self.n:
            raise InputError(f"vertex {v} out of range [0, {self.n})")
        return self.key_list[v]

    def rank(self, v: int) -> float:
        return self.key(v) * _TWO_NEG_64

    def keys(self, vertices=None) -> np.ndarray:
        arr = np.asarray(self.key_list, dtype=np.uint64)
        return arr if vertices is None else arr[np.asarray(vertices, dtype=np.int64)]

    def ranks(self, vertices=None) -> np.ndarray:
        return self.keys(vertices).astype(np.float64) * _TWO_NEG_64


@dataclass(frozen=True)
class Quantizer:
    """Split ``[0, 1]`` into ``L`` equal segments ``[(l-1)/L, l/L)``; the last is closed."""

    L: int

    def __post_init__(self) -> None:
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")

    def quantize(self, x: float) -> int:
        if not 0.0 <= x <= 1.0:
            raise InputError(f"value {x} outside [0, 1]")
        return min(self.L, int(x * self.L) + 1)

    def quantize_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
            raise InputError("value outside [0, 1]")
        return np.minimum(self.L, np.floor(xs * self.L).astype(np.int64) + 1)


def layer(o, q: Quantizer, v: int) -> int:
    """Quantized layer ``f(v)`` of vertex ``v``."""
    return q.quantize(o.rank(v))


def default_L(d: int) -> int:
    """Layer count ``4(d+1)`` used by the concentration argument."""
    if d < 0:
        raise ValueError("d must be non-negative")
    return 4 * (d + 1)
