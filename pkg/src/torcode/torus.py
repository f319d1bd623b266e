"""Centered modular arithmetic and L2 toroidal geometry on Z_q^l."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class InvalidModulusError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


def _check_q(q: int) -> None:
    if q < 2:
        raise InvalidModulusError(f"modulus must be >= 2, got {q}")


def mod_pm(x: int, q: int) -> int:
    """Centered representative of ``x`` modulo ``q``.

    Even q maps into [-q/2, q/2), odd q into [-(q-1)/2, (q-1)/2].
    """
    _check_q(q)
    r = x % q
    return r - q if r >= (q + 1) // 2 else r


def mod_pm_array(x, q: int) -> np.ndarray:
    """Vectorised :func:`mod_pm` for integer arrays."""
    _check_q(q)
    r = np.mod(np.asarray(x, dtype=np.int64), q)
    return np.where(r >= (q + 1) // 2, r - q, r)


@dataclass(frozen=True)
class TorusVector:
    q: int
    coords: tuple[int, ...]

    def __post_init__(self):
        _check_q(self.q)
        if len(self.coords) < 1:
            raise ValueError("a torus vector needs at least one coordinate")
        for c in self.coords:
            if not 0 <= c < self.q:
                raise ValueError(f"coordinate {c} outside [0, {self.q})")

    @classmethod
    def of(cls, coords: Sequence[int], q: int) -> "TorusVector":
        """Build from arbitrary integers, reducing each coordinate mod q."""
        return cls(q, tuple(int(c) % q for c in coords))

    @property
    def ell(self) -> int:
        return len(self.coords)

    def __add__(self, other: "TorusVector") -> "TorusVector":
        _check_compatible(self, other)
        return TorusVector(self.q, tuple((a + b) % self.q for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "TorusVector") -> "TorusVector":
        _check_compatible(self, other)
        return TorusVector(self.q, tuple((a - b) % self.q for a, b in zip(self.coords, other.coords)))

    def centered(self) -> tuple[int, ...]:
        return tuple(mod_pm(c, self.q) for c in self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=np.int64)


def _check_compatible(v1: TorusVector, v2: TorusVector) -> None:
    if v1.q != v2.q or v1.ell != v2.ell:
        raise DimensionMismatchError(
            f"torus vectors differ: (q={v1.q}, l={v1.ell}) vs (q={v2.q}, l={v2.ell})")


def centered_difference(v1: TorusVector, v2: TorusVector) -> tuple[int, ...]:
    """Component-wise ``mod_pm(v1 - v2)``."""
    _check_compatible(v1, v2)
    return tuple(mod_pm(a - b, v1.q) for a, b in zip(v1.coords, v2.coords))


def toroidal_sqdist(v1: TorusVector, v2: TorusVector) -> int:
    """Exact squared L2 toroidal distance."""
    return sum(c * c for c in centered_difference(v1, v2))


def toroidal_distance(v1: TorusVector, v2: TorusVector) -> float:
    return math.sqrt(toroidal_sqdist(v1, v2))


def min_toroidal_sqdist(codewords, q: int) -> int:
    """Exhaustive minimum squared toroidal distance over distinct index pairs.

    ``codewords`` is anything coercible to an ``(N, l)`` integer array, or a
    sequence of :class:`TorusVector`.
    """
    from . import kernels

    pts = _as_points(codewords)
    if len(pts) < 2:
        raise ValueError("need at least two codewords")
    return int(kernels.min_pair_sqdist(pts, q))


def min_toroidal_distance(codebook) -> float:
    """Minimum pairwise L2 toroidal distance of a codebook (or point list + q)."""
    return math.sqrt(min_toroidal_sqdist(codebook.codewords, codebook.q))


def _as_points(codewords) -> np.ndarray:
    if len(codewords) and isinstance(codewords[0], TorusVector):
        return np.array([c.coords for c in codewords], dtype=np.int64)
    return np.ascontiguousarray(np.asarray(codewords, dtype=np.int64))
