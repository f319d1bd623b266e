"""Arithmetic in Z_q[x]/(x^n + 1), centered binomial sampling, compression."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels


class RingMismatchError(ValueError):
    pass


class StreamExhaustedError(RuntimeError):
    pass


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class RingElement:
    q: int
    n: int
    coeffs: tuple

    def __post_init__(self):
        if not _is_pow2(self.n):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if len(self.coeffs) != self.n:
            raise ValueError(f"expected {self.n} coefficients, got {len(self.coeffs)}")
        object.__setattr__(self, "coeffs", tuple(int(c) % self.q for c in self.coeffs))

    @classmethod
    def from_array(cls, arr, q: int) -> "RingElement":
        arr = np.asarray(arr, dtype=np.int64)
        return cls(q, len(arr), tuple(np.mod(arr, q).tolist()))

    def as_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.int64)

    def _check(self, other):
        if (self.q, self.n) != (other.q, other.n):
            raise RingMismatchError("ring elements live in different rings")

    def __add__(self, other):
        self._check(other)
        return RingElement.from_array(self.as_array() + other.as_array(), self.q)

    def __sub__(self, other):
        self._check(other)
        return RingElement.from_array(self.as_array() - other.as_array(), self.q)

    def __mul__(self, other):
        return poly_mul(self, other)


def poly_mul(a: RingElement, b: RingElement) -> RingElement:
    """Negacyclic schoolbook product."""
    a._check(b)
    return RingElement.from_array(kernels.negacyclic_mul(a.as_array(), b.as_array(), a.q), a.q)


@dataclass(frozen=True)
class PolyVec:
    entries: tuple

    def __post_init__(self):
        if not self.entries:
            raise ValueError("empty polynomial vector")
        q, n = self.entries[0].q, self.entries[0].n
        if any((e.q, e.n) != (q, n) for e in self.entries):
            raise RingMismatchError("polynomial vector entries differ in (q, n)")

    @classmethod
    def from_array(cls, arr, q: int) -> "PolyVec":
        return cls(tuple(RingElement.from_array(r, q) for r in np.asarray(arr)))

    def as_array(self) -> np.ndarray:
        return np.array([e.coeffs for e in self.entries], dtype=np.int64)

    def __len__(self):
        return len(self.entries)


# ---------------------------------------------------------------------------
# deterministic byte streams

class ShakeStream:
    """Extendable SHAKE-256 byte stream; optional byte limit for tests."""

    def __init__(self, seed: bytes, limit: int | None = None):
        self._seed = bytes(seed)
        self._buf = b""
        self._pos = 0
        self._limit = limit
        self._used = 0

    def read(self, nbytes: int) -> bytes:
        if self._limit is not None and self._used + nbytes > self._limit:
            raise StreamExhaustedError("random stream exhausted")
        self._used += nbytes
        if self._pos + nbytes > len(self._buf):
            size = max(2 * len(self._buf), self._pos + nbytes, 256)
            self._buf = hashlib.shake_256(self._seed).digest(size)
        out = self._buf[self._pos:self._pos + nbytes]
        self._pos += nbytes
        return out


class ZeroStream:
    """Stub stream of zero bytes: every binomial draw comes out as 0."""

    def read(self, nbytes: int) -> bytes:
        return bytes(nbytes)


def cbd_from_bytes(buf: bytes, eta: int, count: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="little")
    bits = bits[:2 * eta * count].reshape(count, 2 * eta).astype(np.int64)
    return bits[:, :eta].sum(axis=1) - bits[:, eta:].sum(axis=1)


def cbd_sample(eta: int, rng) -> int:
    """One draw of B(2 eta, 1/2) - eta from a byte stream (one byte consumed)."""
    if eta not in (1, 2, 3):
        raise ValueError(f"eta must be 1, 2 or 3, got {eta}")
    return int(cbd_from_bytes(rng.read(1), eta, 1)[0])


def cbd_poly(eta: int, rng, n: int) -> np.ndarray:
    if eta not in (1, 2, 3):
        raise ValueError(f"eta must be 1, 2 or 3, got {eta}")
    return cbd_from_bytes(rng.read((2 * eta * n + 7) // 8), eta, n)


# ---------------------------------------------------------------------------
# compression

def _check_d(q: int, d: int):
    if d < 1 or (1 << d) >= q:
        raise ValueError(f"need 1 <= d and 2^d < q, got d={d}, q={q}")


def compress(x, d: int, q: int):
    """round(2^d x / q) mod 2^d with halves rounded up; scalar or array."""
    _check_d(q, d)
    if np.ndim(x) == 0:
        return ((2 * (int(x) % q) << d) + q) // (2 * q) % (1 << d)
    x = np.mod(np.asarray(x, dtype=np.int64), q)
    return ((2 * x << d) + q) // (2 * q) % (1 << d)


def decompress(y, d: int, q: int):
    """round(q y / 2^d) with halves rounded up; scalar or array."""
    _check_d(q, d)
    if np.ndim(y) == 0:
        return (2 * q * int(y) + (1 << d)) >> (d + 1)
    y = np.asarray(y, dtype=np.int64)
    return (2 * q * y + (1 << d)) >> (d + 1)


# ---------------------------------------------------------------------------
# strided block layout

def block_positions(n: int, ell: int) -> np.ndarray:
    """(nu, l) array; row i lists positions i, i + nu, ..., i + n - nu."""
    if ell < 1 or n % ell:
        raise ValueError(f"block size {ell} does not divide n={n}")
    nu = n // ell
    return np.arange(n).reshape(ell, nu).T


def block_interleave(m, ell: int) -> np.ndarray:
    m = np.asarray(m)
    return m[block_positions(len(m), ell)]


def block_deinterleave(blocks) -> np.ndarray:
    blocks = np.asarray(blocks)
    return blocks.T.reshape(-1)
