"""Exact discrete distributions on consecutive integers with fixed-point masses.

Masses are nonnegative integers in units of 2^-PREC (PREC = 448 bits by
default). They live in a ``(N, B)`` uint8 array of little-endian limbs so
that large convolutions can be done with a single big-integer product
(Kronecker substitution through gmpy2) and then cut back into slots.

Every operation rounds masses down. Whatever is lost to rounding or to
pruning of negligible edge slots is booked in ``pruned``. The identity
sum(masses) + pruned = 2^PREC holds exactly, so a tail probability plus
``pruned`` is a rigorous upper bound on the true tail.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping

import gmpy2
import numpy as np

PREC = 448
PRUNE_BITS = 400


def _nbytes(prec):
    return prec // 8 + 1


class ProbDist:
    __slots__ = ("lo", "limbs", "prec", "pruned", "prune_bits")

    def __init__(self, lo: int, limbs: np.ndarray, prec: int = PREC, pruned: int | None = None,
                 prune_bits: int = PRUNE_BITS):
        if prec % 8:
            raise ValueError("precision must be a multiple of 8 bits")
        limbs = np.ascontiguousarray(limbs, dtype=np.uint8)
        if limbs.ndim != 2 or limbs.shape[1] != _nbytes(prec) or limbs.shape[0] < 1:
            raise ValueError("limb array has the wrong shape")
        self.lo = int(lo)
        self.limbs = limbs
        self.prec = prec
        self.prune_bits = prune_bits
        total = self.total_int()
        if total > 1 << prec:
            raise ValueError("masses sum to more than one")
        self.pruned = (1 << prec) - total if pruned is None else pruned
        if self.pruned + total != 1 << prec:
            raise ValueError("pruned mass does not complete the total to one")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_int_masses(cls, masses: Mapping[int, int], prec: int = PREC, prune_bits: int = PRUNE_BITS):
        """Masses given as exact integers in units of 2^-prec."""
        items = {int(k): int(v) for k, v in masses.items() if v}
        if not items:
            raise ValueError("distribution has no mass")
        if min(items.values()) < 0:
            raise ValueError("negative mass")
        lo, hi = min(items), max(items)
        nb = _nbytes(prec)
        raw = b"".join(items.get(x, 0).to_bytes(nb, "little") for x in range(lo, hi + 1))
        return cls(lo, np.frombuffer(raw, dtype=np.uint8).reshape(-1, nb), prec, prune_bits=prune_bits)

    @classmethod
    def from_fractions(cls, masses: Mapping[int, Fraction], prec: int = PREC, prune_bits: int = PRUNE_BITS):
        """Exact rational masses, floored to the fixed-point grid."""
        one = 1 << prec
        return cls.from_int_masses({k: (Fraction(v) * one).__floor__() for k, v in masses.items()},
                                   prec, prune_bits)

    @classmethod
    def point(cls, x: int = 0, prec: int = PREC, prune_bits: int = PRUNE_BITS):
        return cls.from_int_masses({x: 1 << prec}, prec, prune_bits)

    def _like(self, lo, limbs):
        return ProbDist(lo, limbs, self.prec, prune_bits=self.prune_bits)

    # -- access -----------------------------------------------------------

    @property
    def hi(self) -> int:
        return self.lo + len(self.limbs) - 1

    def __len__(self):
        return len(self.limbs)

    def masses_int(self) -> list[int]:
        raw = self.limbs.tobytes()
        nb = self.limbs.shape[1]
        return [int.from_bytes(raw[i:i + nb], "little") for i in range(0, len(raw), nb)]

    def as_dict(self) -> dict[int, int]:
        return {self.lo + i: m for i, m in enumerate(self.masses_int()) if m}

    def support(self) -> list[int]:
        nz = np.any(self.limbs != 0, axis=1)
        return (self.lo + np.nonzero(nz)[0]).tolist()

    def _sum_rows(self, rows) -> int:
        cols = self.limbs[rows].sum(axis=0, dtype=np.uint64)
        return sum(int(c) << (8 * j) for j, c in enumerate(cols.tolist()))

    def total_int(self) -> int:
        return self._sum_rows(slice(None))

    def mass(self, x: int) -> Fraction:
        if not self.lo <= x <= self.hi:
            return Fraction(0)
        return Fraction(int.from_bytes(self.limbs[x - self.lo].tobytes(), "little"), 1 << self.prec)

    @property
    def pruned_mass(self) -> Fraction:
        return Fraction(self.pruned, 1 << self.prec)

    def total(self) -> Fraction:
        return Fraction(self.total_int(), 1 << self.prec)

    def moments(self) -> tuple[Fraction, Fraction]:
        """Exact mean and variance of the retained (unnormalised) masses."""
        m = self.masses_int()
        xs = range(self.lo, self.lo + len(m))
        s0 = sum(m)
        s1 = sum(x * v for x, v in zip(xs, m))
        s2 = sum(x * x * v for x, v in zip(xs, m))
        mean = Fraction(s1, s0)
        return mean, Fraction(s2, s0) - mean * mean

    def mean(self) -> Fraction:
        return self.moments()[0]

    def variance(self) -> Fraction:
        return self.moments()[1]

    def tail_ge_int(self, t: int) -> int:
        """Sum of masses at values >= t, plus the pruned mass (units 2^-prec)."""
        start = max(t - self.lo, 0)
        body = self._sum_rows(slice(start, None)) if start < len(self.limbs) else 0
        return body + self.pruned

    def tail_le_int(self, t: int) -> int:
        """Sum of masses at values <= t, plus the pruned mass."""
        stop = min(t - self.lo + 1, len(self.limbs))
        body = self._sum_rows(slice(0, stop)) if stop > 0 else 0
        return body + self.pruned

    def tail_ge(self, t) -> Fraction:
        return Fraction(self.tail_ge_int(_ceil(t)), 1 << self.prec)

    def log2_masses(self) -> np.ndarray:
        out = np.full(len(self.limbs), -np.inf)
        for i, m in enumerate(self.masses_int()):
            if m:
                out[i] = _log2_int(m) - self.prec
        return out

    # -- transforms -------------------------------------------------------

    def negate(self) -> "ProbDist":
        return self._carry(-self.hi, self.limbs[::-1].copy())

    def shift(self, k: int) -> "ProbDist":
        return self._carry(self.lo + k, self.limbs)

    def scale(self, c: int) -> "ProbDist":
        """Distribution of c * X (zeros fill the gaps)."""
        if c == 0:
            return self._carry(0, self.limbs.sum(axis=0, keepdims=True, dtype=np.uint64), exact_total=True)
        if c < 0:
            return self.negate().scale(-c)
        out = np.zeros(((len(self.limbs) - 1) * c + 1, self.limbs.shape[1]), dtype=np.uint8)
        out[::c] = self.limbs
        return self._carry(self.lo * c, out)

    def _carry(self, lo, limbs, exact_total=False):
        if exact_total:
            total = sum(int(v) << (8 * j) for j, v in enumerate(limbs[0].tolist()))
            limbs = np.frombuffer(total.to_bytes(self.limbs.shape[1], "little"), dtype=np.uint8).reshape(1, -1)
        return ProbDist(lo, limbs, self.prec, self.pruned, self.prune_bits)

    def prune(self) -> "ProbDist":
        """Drop edge slots whose mass is below 2^-prune_bits."""
        k = (self.prec - self.prune_bits) // 8
        if k <= 0:
            return self
        big = np.nonzero(np.any(self.limbs[:, k:] != 0, axis=1))[0]
        if len(big) == 0:
            return ProbDist.point(0, self.prec, self.prune_bits)._with_pruned_all()
        a, b = int(big[0]), int(big[-1])
        if a == 0 and b == len(self.limbs) - 1:
            return self
        return self._like(self.lo + a, self.limbs[a:b + 1])

    def _with_pruned_all(self):
        # everything was negligible: keep a zero slot, all mass pruned
        return ProbDist(0, np.zeros_like(self.limbs), self.prec, 1 << self.prec, self.prune_bits)

    def convolve(self, other: "ProbDist", prune: bool = True) -> "ProbDist":
        if self.prec != other.prec:
            raise ValueError("precision mismatch")
        out = _kronecker(self.limbs, other.limbs, self.prec, same=other is self)
        res = self._like(self.lo + other.lo, out)
        return res.prune() if prune else res

    __mul__ = convolve

    def self_convolve(self, k: int, prune: bool = True) -> "ProbDist":
        """k-fold convolution power by repeated squaring."""
        if k < 1:
            raise ValueError("power must be positive")
        result = None
        base = self
        while True:
            if k & 1:
                result = base if result is None else result.convolve(base, prune)
            k >>= 1
            if not k:
                return result
            base = base.convolve(base, prune)

    def __repr__(self):
        return (f"ProbDist([{self.lo}, {self.hi}], slots={len(self)}, "
                f"pruned=2^{_log2_int(self.pruned) - self.prec if self.pruned else '-inf'})")


def _ceil(t) -> int:
    t = Fraction(t)
    return -((-t.numerator) // t.denominator)


def _log2_int(m: int) -> float:
    # accurate log2 for huge integers
    b = m.bit_length()
    if b <= 1000:
        return float(gmpy2.log2(gmpy2.mpfr(m, 64)))
    return float(gmpy2.log2(gmpy2.mpfr(m >> (b - 64)))) + (b - 64)


def _kronecker(a: np.ndarray, b: np.ndarray, prec: int, same: bool = False) -> np.ndarray:
    """Floor-rescaled linear convolution of two limb arrays."""
    nb = a.shape[1]
    w = 2 * nb
    lo = prec // 8

    def pack(x):
        buf = np.zeros((len(x), w), dtype=np.uint8)
        buf[:, :nb] = x
        return gmpy2.mpz.from_bytes(buf.tobytes(), byteorder="little")

    n = len(a) + len(b) - 1
    if len(a) == 1 or len(b) == 1:
        return _scalar_mul(a, b, prec)
    pa = pack(a)
    prod = gmpy2.square(pa) if same else pa * pack(b)
    raw = np.frombuffer(prod.to_bytes(n * w, byteorder="little"), dtype=np.uint8).reshape(n, w)
    return np.ascontiguousarray(raw[:, lo:lo + nb])


def _scalar_mul(a, b, prec):
    if len(a) != 1:
        a, b = b, a
    c = int.from_bytes(a[0].tobytes(), "little")
    nb = b.shape[1]
    rows = [((int.from_bytes(r.tobytes(), "little") * c) >> prec).to_bytes(nb, "little") for r in b]
    return np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(-1, nb)


def convolve_all(dists, prune: bool = True) -> ProbDist:
    dists = list(dists)
    out = dists[0]
    for d in dists[1:]:
        out = out.convolve(d, prune)
    return out
