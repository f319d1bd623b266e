"""Integer lattices Z^l, D4 and 2E8: membership, points mod p, nearest point."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

ENUM_BUDGET = 1 << 24


class LatticePreconditionError(ValueError):
    pass


class BudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    """A full-rank integer lattice given by a row basis.

    ``dmin`` is the squared length of a shortest nonzero vector; it is checked
    against a bounded enumeration when the spec is constructed.
    """
    name: str
    dim: int
    basis: tuple
    det: int
    dmin: int
    _b: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = np.array(self.basis, dtype=np.int64)
        if b.shape != (self.dim, self.dim):
            raise ValueError(f"basis must be {self.dim}x{self.dim}")
        object.__setattr__(self, "_b", b)
        det = round(abs(np.linalg.det(b.astype(float))))
        if det != self.det:
            raise ValueError(f"{self.name}: basis determinant {det} != declared {self.det}")
        found = shortest_sqnorm(self)
        if found != self.dmin:
            raise ValueError(f"{self.name}: enumerated dmin {found} != declared {self.dmin}")

    @property
    def basis_array(self) -> np.ndarray:
        return self._b.copy()


def _solve_integer(lat: LatticeSpec, pts: np.ndarray) -> np.ndarray:
    """Boolean mask: which rows of ``pts`` are integer combinations of the basis."""
    b = lat._b
    coef = np.linalg.solve(b.T.astype(float), pts.T.astype(float)).T
    r = np.rint(coef).astype(np.int64)
    return np.all(r @ b == pts, axis=1)


def member_mask(lat: LatticeSpec, pts) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=np.int64))
    if pts.shape[1] != lat.dim:
        raise ValueError(f"point dimension {pts.shape[1]} != lattice dimension {lat.dim}")
    if lat.name.startswith("Z"):
        return np.ones(len(pts), dtype=bool)
    if lat.name == "D4":
        return pts.sum(axis=1) % 2 == 0
    if lat.name == "2E8":
        even = np.all(pts % 2 == 0, axis=1) & (pts.sum(axis=1) % 4 == 0)
        odd = np.all(pts % 2 == 1, axis=1) & ((pts - 1).sum(axis=1) % 4 == 0)
        return even | odd
    return _solve_integer(lat, pts)


def is_member(lat: LatticeSpec, point) -> bool:
    return bool(member_mask(lat, [point])[0])


def shortest_sqnorm(lat: LatticeSpec) -> int:
    # a shortest vector is no longer than the shortest basis row, so its
    # coordinates are bounded by that row's norm
    b = np.array(lat.basis, dtype=np.int64)
    r = math.isqrt(int((b * b).sum(axis=1).min()))
    grid = np.indices((2 * r + 1,) * lat.dim).reshape(lat.dim, -1).T - r
    grid = grid[np.any(grid != 0, axis=1)]
    mask = _solve_integer(lat, grid)
    return int((grid[mask] ** 2).sum(axis=1).min())


def contains_sublattice_pZ(lat: LatticeSpec, p: int) -> bool:
    if p < 1:
        raise LatticePreconditionError("p must be positive")
    return bool(_solve_integer(lat, p * np.eye(lat.dim, dtype=np.int64)).all())


def enumerate_mod_p(lat: LatticeSpec, p: int) -> np.ndarray:
    """All points of the lattice with coordinates in [0, p), lexicographic order."""
    if not contains_sublattice_pZ(lat, p):
        raise LatticePreconditionError(f"{lat.name} does not contain {p}Z^{lat.dim}")
    if p ** lat.dim > ENUM_BUDGET:
        raise BudgetExceededError(f"{p}^{lat.dim} points exceed the enumeration budget")
    grid = np.indices((p,) * lat.dim).reshape(lat.dim, -1).T
    pts = grid[member_mask(lat, grid)]
    expected = p ** lat.dim // lat.det
    if len(pts) != expected:  # pragma: no cover - would mean a broken predicate
        raise AssertionError(f"found {len(pts)} points, point counting says {expected}")
    return pts


def integer_lattice(ell: int) -> LatticeSpec:
    return LatticeSpec(f"Z{ell}", ell, tuple(tuple(r) for r in np.eye(ell, dtype=int).tolist()), 1, 1)


def d4() -> LatticeSpec:
    basis = ((1, 1, 0, 0), (1, -1, 0, 0), (0, 1, -1, 0), (0, 0, 1, -1))
    return LatticeSpec("D4", 4, basis, 2, 2)


def e8_doubled() -> LatticeSpec:
    rows = [[4, 0, 0, 0, 0, 0, 0, 0]]
    for i in range(6):
        r = [0] * 8
        r[i], r[i + 1] = -2, 2
        rows.append(r)
    rows.append([1] * 8)
    return LatticeSpec("2E8", 8, tuple(tuple(r) for r in rows), 256, 8)


def cvp_e8_fast(point) -> np.ndarray:
    """Nearest point of 2E8 to a real 8-vector (or each row of an (N, 8) array).

    Decodes the cosets 2D8 and 2D8 + 1 separately and keeps the closer
    candidate, preferring the even coset on ties.
    """
    x = np.asarray(point, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != 8:
        raise ValueError("2E8 points have 8 coordinates")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite coordinate in CVP query")
    out = kernels.cvp_2e8(x)
    return out[0] if single else out
