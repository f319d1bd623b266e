"""Message codebooks on Z_q^l: construction, labelling, encoding and decoding.

Labels are integers in [0, 2^l); bit i of a label is bit ``bits[i]`` of the
corresponding l-bit message block. Codewords are stored in label order, so
the label of codeword index j is ``labels[j]`` (identity for every builder
here, but loaded JSON may use any bijection).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels, lattice
from .torus import DimensionMismatchError, TorusVector, min_toroidal_sqdist, mod_pm_array

SCHEMA = "torcode.codebook/1"

GTD4_BASE = (
    (0, 0, 0, 0), (4, 2, 4, 0), (3, 3, 3, 3), (2, 0, 4, 2),
    (2, 4, 2, 0), (3, 1, 1, 1), (1, 1, 3, 5), (1, 5, 1, 3),
    (0, 2, 2, 2), (3, 5, 5, 5), (1, 3, 5, 1), (0, 4, 4, 4),
    (4, 0, 2, 4), (4, 4, 0, 2), (5, 1, 5, 3), (5, 5, 3, 1),
)

MLD_GENERATOR = ((3, 4, 1, 0), (0, 3, 4, 1))

CONSTRUCTIONS = ("baseline", "minal", "gtd4", "gtd8", "mld")


class CodebookError(ValueError):
    pass


@dataclass(frozen=True)
class Codebook:
    q: int
    ell: int
    codewords: tuple
    labels: tuple
    construction: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ell < 1 or self.ell > 8 or self.ell & (self.ell - 1):
            raise CodebookError(f"ell must be a power of two in [1, 8], got {self.ell}")
        pts = np.array(self.codewords, dtype=np.int64).reshape(-1, self.ell)
        if len(pts) != 2 ** self.ell:
            raise CodebookError(f"need {2 ** self.ell} codewords, got {len(pts)}")
        if pts.min() < 0 or pts.max() >= self.q:
            raise CodebookError("codeword coordinate outside [0, q)")
        if len({tuple(r) for r in pts.tolist()}) != len(pts):
            raise CodebookError("codewords are not distinct")
        if sorted(self.labels) != list(range(2 ** self.ell)):
            raise CodebookError("labels must be a permutation of range(2^ell)")
        object.__setattr__(self, "_pts", pts)
        inv = np.empty(len(pts), dtype=np.int64)
        inv[list(self.labels)] = np.arange(len(pts))
        object.__setattr__(self, "_index_of_label", inv)

    @property
    def points(self) -> np.ndarray:
        return self._pts

    @property
    def size(self) -> int:
        return len(self._pts)

    def vectors(self) -> list[TorusVector]:
        return [TorusVector(self.q, tuple(r)) for r in self._pts.tolist()]

    def index_of_label(self, label: int) -> int:
        return int(self._index_of_label[label])

    def min_sqdist(self) -> int:
        return min_toroidal_sqdist(self._pts, self.q)

    def dmin(self) -> float:
        return math.sqrt(self.min_sqdist())

    def to_json(self) -> dict:
        order = np.argsort(self.labels)
        return {
            "schema": SCHEMA,
            "q": self.q,
            "ell": self.ell,
            "construction": self.construction,
            "params": self.params,
            "codewords": self._pts[order].tolist(),
            "labels": [int(self.labels[i]) for i in order],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, obj) -> "Codebook":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["q"]), int(obj["ell"]),
                   tuple(tuple(int(c) for c in cw) for cw in obj["codewords"]),
                   tuple(int(x) for x in obj["labels"]),
                   obj.get("construction", "custom"), dict(obj.get("params", {})))


def _make(q, ell, pts, construction, params) -> Codebook:
    pts = np.mod(np.asarray(pts, dtype=np.int64), q)
    return Codebook(q, ell, tuple(tuple(r) for r in pts.tolist()),
                    tuple(range(len(pts))), construction, params)


def bits_to_label(bits: Sequence[int]) -> int:
    return sum((int(b) & 1) << i for i, b in enumerate(bits))


def label_to_bits(label: int, ell: int) -> tuple[int, ...]:
    return tuple((label >> i) & 1 for i in range(ell))


# ---------------------------------------------------------------------------
# constructions

def build_baseline(q: int) -> Codebook:
    if q < 3:
        raise CodebookError("baseline code needs q >= 3")
    return _make(q, 1, [[0], [q // 2]], "baseline", {})


def minal_points(q: int, ell: int, gamma: int) -> np.ndarray:
    """All 2^l Minal codewords in label order (may repeat for degenerate gamma)."""
    a = q // 2
    m = np.array([label_to_bits(x, ell) for x in range(2 ** ell)], dtype=np.int64)
    # (G m)_i = a m_i + gamma m_{i-1}
    return a * m + gamma * np.roll(m, 1, axis=1)


def build_minal(q: int, ell: int, gamma: int) -> Codebook:
    if ell not in (2, 4, 8):
        raise CodebookError(f"Minal codes are built for ell in {{2, 4, 8}}, got {ell}")
    if not 0 <= gamma or not 2 * gamma < q:
        raise CodebookError(f"gamma must satisfy 0 <= gamma < q/2, got {gamma}")
    return _make(q, ell, minal_points(q, ell, gamma), "minal", {"gamma": int(gamma)})


def gamma_star(q: int, ell: int) -> int:
    if ell < 2:
        raise CodebookError("gamma_star needs ell >= 2")
    return int(round((q // 2) * (ell - math.sqrt(2 * ell - 1)) / (ell - 1)))


def minal_dmin_sq_formula(q: int, ell: int, gamma: int) -> int:
    a = q // 2
    return min(a * a + gamma * gamma, ell * (a - gamma) ** 2)


def minal_dmin_formula(q: int, ell: int, gamma: int) -> float:
    if not 0 <= gamma or not 2 * gamma < q:
        raise CodebookError(f"gamma must satisfy 0 <= gamma < q/2, got {gamma}")
    return math.sqrt(minal_dmin_sq_formula(q, ell, gamma))


def minal_gamma_for_ratio(q: int, ratio: float) -> int:
    """Integer gamma whose Minal distance sqrt(a^2 + gamma^2) is closest to ratio*q."""
    a = q // 2
    target = ratio * q
    g = math.sqrt(max(target * target - a * a, 0.0))
    lo = int(math.floor(g))
    return min((lo, lo + 1), key=lambda x: abs(math.sqrt(a * a + x * x) - target))


def build_gtd4(q: int) -> Codebook:
    if q < 12:
        raise CodebookError("GTD4 code needs q >= 12")
    scale = q // 6
    return _make(q, 4, scale * np.array(GTD4_BASE), "gtd4",
                 {"p": 6, "lattice": "D4", "scale": scale})


def gtd8_base_points() -> np.ndarray:
    """2E8 mod 4 in label order: b0 picks the coset, b1..b7 coordinates 1..7."""
    labels = np.arange(256)
    b0 = labels & 1
    pts = np.empty((256, 8), dtype=np.int64)
    for i in range(7):
        pts[:, i] = 2 * ((labels >> (i + 1)) & 1) + b0
    # last coordinate from the coset sum condition, reduced into [0, 4)
    partial = pts[:, :7].sum(axis=1)
    pts[:, 7] = np.where(b0 == 0, (-partial) % 4, (-(partial - 7) + 1) % 4)
    return pts


def build_gtd8(q: int) -> Codebook:
    if q < 8:
        raise CodebookError("GTD8 code needs q >= 8")
    scale = q // 4
    return _make(q, 8, scale * gtd8_base_points(), "gtd8",
                 {"p": 4, "lattice": "2E8", "scale": scale})


def lee_sqdist_matrix(pts, p, metric):
    pts = np.asarray(pts, dtype=np.int64)
    c = mod_pm_array(pts[:, None, :] - pts[None, :, :], p)
    return np.abs(c).sum(-1) if metric == "lee" else (c * c).sum(-1)


def mld_full_code() -> np.ndarray:
    g = np.array(MLD_GENERATOR, dtype=np.int64)
    m = np.array([(m0, m1) for m0 in range(5) for m1 in range(5)], dtype=np.int64)
    return (m @ g) % 5


def search_maxmin_subset(points, target: int, metric: str = "l2", q: int | None = None):
    """Greedy farthest-point selection plus single-swap hill climbing.

    ``points`` are integer vectors on Z_q^l (``q`` defaults to one more than
    the largest coordinate). ``metric`` is ``"l2"`` (squared toroidal) or
    ``"lee"``. Returns ``(subset, min_distance)`` where the subset is sorted
    lexicographically and the distance is squared for l2.
    """
    pts = np.asarray([p.coords if isinstance(p, TorusVector) else p for p in points], dtype=np.int64)
    if target > len(pts):
        raise CodebookError(f"cannot pick {target} of {len(pts)} points")
    if metric not in ("l2", "lee"):
        raise CodebookError(f"unknown metric {metric!r}")
    if q is None:
        q = int(pts.max()) + 1
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    dist = lee_sqdist_matrix(pts, q, metric)
    n = len(pts)
    if target == n:
        return pts.copy(), _min_off_diag(dist)
    if target < 2:
        return pts[:target].copy(), 0

    zero = np.nonzero(~pts.any(axis=1))[0]
    chosen = [int(zero[0]) if len(zero) else 0]
    near = dist[chosen[0]].copy()
    near[chosen[0]] = -1
    while len(chosen) < target:
        j = int(near.argmax())  # first maximiser = lexicographically smallest
        chosen.append(j)
        near = np.minimum(near, dist[j])
        near[chosen] = -1

    def score(sel):
        sub = dist[np.ix_(sel, sel)]
        iu = np.triu_indices(len(sel), 1)
        vals = sub[iu]
        m = vals.min()
        return (int(m), -int((vals == m).sum()))

    chosen = sorted(chosen)
    best = score(chosen)
    improved = True
    while improved:
        improved = False
        outside = [j for j in range(n) if j not in set(chosen)]
        for pos in range(target):
            for j in outside:
                cand = sorted(chosen[:pos] + chosen[pos + 1:] + [j])
                s = score(cand)
                if s > best:
                    chosen, best, improved = cand, s, True
                    break
            if improved:
                break
    return pts[chosen].copy(), best[0]


def _min_off_diag(dist):
    iu = np.triu_indices(len(dist), 1)
    return int(dist[iu].min())


def build_mld(q: int) -> Codebook:
    if q < 10:
        raise CodebookError("MLD code needs q >= 10")
    sub, lee = search_maxmin_subset(mld_full_code(), 16, "lee", 5)
    scale = q // 5
    return _make(q, 4, scale * sub, "mld",
                 {"generator": [list(r) for r in MLD_GENERATOR], "scale": scale, "lee_dmin": lee})


def build(construction: str, q: int = 3329, ell: int | None = None, gamma: int | None = None) -> Codebook:
    """Build any supported codebook by construction id."""
    if construction == "baseline":
        return build_baseline(q)
    if construction in ("minal", "mtd2"):
        ell = 2 if ell is None else ell
        return build_minal(q, ell, gamma_star(q, ell) if gamma is None else gamma)
    if construction == "gtd4":
        return build_gtd4(q)
    if construction == "gtd8":
        return build_gtd8(q)
    if construction == "mld":
        return build_mld(q)
    raise CodebookError(f"unknown construction {construction!r}")


# ---------------------------------------------------------------------------
# encoding / decoding

def encode(cb: Codebook, bits: Sequence[int]) -> TorusVector:
    if len(bits) != cb.ell:
        raise DimensionMismatchError(f"expected {cb.ell} bits, got {len(bits)}")
    return TorusVector(cb.q, tuple(int(c) for c in cb.points[cb.index_of_label(bits_to_label(bits))]))


def encode_labels(cb: Codebook, labels) -> np.ndarray:
    return cb.points[cb._index_of_label[np.asarray(labels, dtype=np.int64)]]


def decode(cb: Codebook, received) -> tuple[int, ...]:
    if isinstance(received, TorusVector):
        if received.q != cb.q or received.ell != cb.ell:
            raise DimensionMismatchError("received vector does not match the codebook")
        received = received.coords
    if len(received) != cb.ell:
        raise DimensionMismatchError(f"expected {cb.ell} coordinates, got {len(received)}")
    return label_to_bits(int(decode_labels(cb, [received])[0]), cb.ell)


def decode_labels(cb: Codebook, received) -> np.ndarray:
    """Exhaustive minimum-toroidal-distance decoding of an (N, l) array."""
    r = np.asarray(received, dtype=np.int64).reshape(-1, cb.ell)
    idx = kernels.nearest_index(cb.points, r, cb.q)
    return np.asarray(cb.labels, dtype=np.int64)[idx]


def decode_fast_gtd8(cb: Codebook, received) -> np.ndarray:
    """Fast GTD8 decoder returning labels for an (N, 8) array.

    Per coset it picks each coordinate independently, repairs the parity
    with the cheapest flip, and keeps the closer coset. Costs are exact
    toroidal distances, so the result is a true nearest codeword.
    """
    if cb.construction != "gtd8":
        raise CodebookError("fast decoding is only defined for the GTD8 code")
    r = np.asarray(received, dtype=np.int64).reshape(-1, 8)
    c = kernels.gtd8_decode(r, cb.q, cb.params["scale"])
    lab = c[:, 0] & 1
    for i in range(7):
        lab = lab | (((c[:, i] >> 1) & 1) << (i + 1))
    return lab
