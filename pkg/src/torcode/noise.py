"""Exact distributions of the decryption-noise components and of the scalar
projection <dn, d> of one block's noise onto a codeword difference d.

One block of the noise (positions i, i + nu, ...) is a sum of kn/l
independent copies of a projected ring product for each of e^T r and
s^T (e1 + c_u), plus l independent copies of c_v + e2. Only the projection
onto d is ever tabulated, never the l-dimensional joint law.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from math import comb

import numpy as np

from . import kernels
from .probdist import PREC, PRUNE_BITS, ProbDist
from .ring import compress, decompress
from .torus import mod_pm_array

# enumeration guards
EXACT_BUDGET = 1 << 24
SPLIT_BUDGET = 1 << 36


class BudgetError(RuntimeError):
    pass


def dist_cbd(eta: int, prec: int = PREC, prune_bits: int = PRUNE_BITS) -> ProbDist:
    if eta not in (1, 2, 3):
        raise ValueError(f"eta must be 1, 2 or 3, got {eta}")
    return ProbDist.from_fractions({k - eta: Fraction(comb(2 * eta, k), 4 ** eta) for k in range(2 * eta + 1)},
                                   prec, prune_bits)


def quant_error_counts(q: int, d: int) -> dict[int, int]:
    """How many x in Z_q have each centered round-trip error."""
    x = np.arange(q)
    err = mod_pm_array(decompress(compress(x, d, q), d, q) - x, q)
    vals, counts = np.unique(err, return_counts=True)
    return dict(zip(vals.tolist(), counts.tolist()))


def dist_quant_u(q: int, du: int, prec: int = PREC, prune_bits: int = PRUNE_BITS) -> ProbDist:
    """Compression error of a uniform input in Z_q."""
    return ProbDist.from_fractions({k: Fraction(c, q) for k, c in quant_error_counts(q, du).items()},
                                   prec, prune_bits)


def dist_quant_v_plus_e2(q: int, dv: int, eta2: int, prec: int = PREC, prune_bits: int = PRUNE_BITS) -> ProbDist:
    return dist_quant_u(q, dv, prec, prune_bits).convolve(dist_cbd(eta2, prec, prune_bits), prune=False)


def _is_symmetric(p: ProbDist) -> bool:
    return p.as_dict() == {-k: v for k, v in p.as_dict().items()}


def _int_law(dist: ProbDist) -> dict[int, int]:
    return dist.as_dict()


def projected_product_dist(ell: int, d, phi_a: ProbDist, phi_b: ProbDist,
                           budget: int = EXACT_BUDGET) -> ProbDist:
    """Law of <a * b mod (x^l + 1), d> for i.i.d. coefficients a_i ~ phi_a, b_i ~ phi_b.

    The polynomial b is enumerated; given b, the projection is
    sum_i a_i * sigma_i(b), an l-fold convolution of scaled copies of phi_a.
    When phi_a is symmetric only the multiset of |sigma_i(b)| matters, so
    outer states are grouped by it. All arithmetic is exact; masses are
    floored to the working precision once at the end.
    """
    d = np.asarray(d, dtype=np.int64).reshape(-1)
    if len(d) != ell:
        raise ValueError(f"d has {len(d)} entries, expected {ell}")
    if not np.any(d):
        return ProbDist.point(0, phi_a.prec, phi_a.prune_bits)
    prec = phi_a.prec
    # the product is commutative: enumerate the asymmetric side, or the wider one
    sym_a, sym_b = _is_symmetric(phi_a), _is_symmetric(phi_b)
    if (sym_b and not sym_a) or (sym_a == sym_b and len(phi_a.support()) > len(phi_b.support())):
        phi_a, phi_b = phi_b, phi_a
        sym_a = sym_b
    law_a = _int_law(phi_a)
    law_b = _int_law(phi_b)
    if len(law_b) ** ell * len(law_a) ** ell > budget * 64 and len(law_b) ** ell > budget:
        raise BudgetError("projected product enumeration exceeds the budget")
    vals_b = np.array(sorted(law_b), dtype=np.int64)
    masses_b = [law_b[v] for v in vals_b.tolist()]
    sigma = kernels.sigma_states(vals_b, d)
    digits = kernels._all_states_np(np.arange(len(vals_b)), ell)

    groups: dict[tuple, int] = {}
    for row, dig in zip(sigma.tolist(), digits.tolist()):
        w = 1
        for j in dig:
            w *= masses_b[j]
        key = tuple(sorted(abs(s) for s in row)) if sym_a else tuple(row)
        groups[key] = groups.get(key, 0) + w

    total: dict[int, int] = {}
    cache: dict[int, dict[int, int]] = {}
    for key, w in groups.items():
        cond = {0: 1}
        for s in key:
            if s not in cache:
                scaled: dict[int, int] = {}
                for v, m in law_a.items():
                    scaled[v * s] = scaled.get(v * s, 0) + m
                cache[s] = scaled
            cond = _conv_dict(cond, cache[s])
        for v, m in cond.items():
            total[v] = total.get(v, 0) + m * w
    shift = 2 * ell * prec - prec
    return ProbDist.from_int_masses({v: m >> shift for v, m in total.items()}, prec, phi_a.prune_bits)


def _conv_dict(p: dict, r: dict) -> dict:
    out: dict[int, int] = {}
    for x, a in p.items():
        for y, b in r.items():
            out[x + y] = out.get(x + y, 0) + a * b
    return out


def projected_product_bruteforce(ell: int, d, phi_a: ProbDist, phi_b: ProbDist) -> ProbDist:
    """Reference: enumerate every pair (a, b) and project a*b directly."""
    d = [int(x) for x in d]
    la, lb = _int_law(phi_a), _int_law(phi_b)
    total: dict[int, int] = {}
    for a in itertools.product(la.items(), repeat=ell):
        wa = math.prod(m for _, m in a)
        av = [v for v, _ in a]
        for b in itertools.product(lb.items(), repeat=ell):
            w = wa * math.prod(m for _, m in b)
            bv = [v for v, _ in b]
            c = [0] * ell
            for i in range(ell):
                for j in range(ell):
                    if i + j < ell:
                        c[i + j] += av[i] * bv[j]
                    else:
                        c[i + j - ell] -= av[i] * bv[j]
            x = sum(ci * di for ci, di in zip(c, d))
            total[x] = total.get(x, 0) + w
    prec = phi_a.prec
    return ProbDist.from_int_masses({v: m >> (2 * ell * prec - prec) for v, m in total.items()}, prec,
                                    phi_a.prune_bits)


class NoiseComponents:
    """Per-parameter-set building blocks shared by every difference vector."""

    def __init__(self, params, prec: int = PREC, prune_bits: int = PRUNE_BITS):
        self.params = params
        self.prec = prec
        self.prune_bits = prune_bits
        p = params
        self.beta1 = dist_cbd(p.eta1, prec, prune_bits)
        self.beta2 = dist_cbd(p.eta2, prec, prune_bits)
        self.cu = dist_quant_u(p.q, p.du, prec, prune_bits)
        self.e1_cu = self.beta2.convolve(self.cu, prune=False)
        self.cv_e2 = dist_quant_v_plus_e2(p.q, p.dv, p.eta2, prec, prune_bits)
        if (p.k * p.n) % p.ell:
            raise ValueError("kn/l must be an integer")
        self.copies = p.k * p.n // p.ell


def reduce_difference(d) -> tuple[tuple[int, ...], int]:
    """Split d into (d / g, g) with g the gcd of its entries."""
    d = [int(x) for x in d]
    g = math.gcd(*d) if any(d) else 1
    return tuple(x // g for x in d), g


def noise_projection_parts(comp: NoiseComponents, d):
    """The three independent pieces of <dn, d>: (P1, copies), (P2, copies), sum_i d_i (c_v + e2)."""
    ell = comp.params.ell
    p1 = projected_product_dist(ell, d, comp.beta1, comp.beta1)
    p2 = projected_product_dist(ell, d, comp.beta1, comp.e1_cu)
    v = None
    for di in d:
        t = comp.cv_e2.scale(int(di))
        v = t if v is None else v.convolve(t)
    return (p1, comp.copies), (p2, comp.copies), v


def noise_projection_dist(params, d, comp: NoiseComponents | None = None, prec: int = PREC,
                          prune_bits: int = PRUNE_BITS) -> ProbDist:
    """Law of <dn, d> for one block of the decryption noise."""
    d = [int(x) for x in np.asarray(d).reshape(-1)]
    if len(d) != params.ell:
        raise ValueError(f"d has {len(d)} entries, expected l={params.ell}")
    if comp is None:
        comp = NoiseComponents(params, prec, prune_bits)
    (p1, c1), (p2, c2), v = noise_projection_parts(comp, d)
    return p1.self_convolve(c1).convolve(p2.self_convolve(c2)).convolve(v)


def predicted_variance(params, d, comp: NoiseComponents | None = None) -> Fraction:
    """Variance of <dn, d> assembled from component moments."""
    if comp is None:
        comp = NoiseComponents(params)
    (p1, c1), (p2, c2), _ = noise_projection_parts(comp, d)
    return c1 * p1.variance() + c2 * p2.variance() + sum(x * x for x in d) * comp.cv_e2.variance()


def verify_splitting(n: int, ell: int, q: int, phi: ProbDist, phi_b: ProbDist | None = None,
                     budget: int = SPLIT_BUDGET) -> dict:
    """Exhaustively tabulate the joint law of every strided block of c = a*b.

    Returns a report with ``identical`` True iff all n/l block laws agree.
    """
    if n & (n - 1) or ell & (ell - 1) or not 1 < ell < n:
        raise ValueError("need powers of two with 1 < l < n")
    phi_b = phi if phi_b is None else phi_b
    la, lb = _int_law(phi), _int_law(phi_b)
    cases = len(la) ** n * len(lb) ** n
    if cases > budget:
        raise BudgetError(f"{cases} (a, b) pairs exceed the enumeration budget")
    wa = _small_weights(la)
    wb = _small_weights(lb)
    counts = kernels.block_counts(sorted(la), wa, sorted(lb), wb, n, ell, q)
    identical = bool(np.all(counts == counts[0]))
    return {"identical": identical, "pairs": cases, "blocks": int(counts.shape[0]),
            "cells": int(np.count_nonzero(counts[0])), "counts": counts}


def _small_weights(law: dict[int, int]) -> list[int]:
    # reduce exact masses to coprime small integers for int64 accumulation
    vals = [law[k] for k in sorted(law)]
    g = math.gcd(*vals)
    w = [v // g for v in vals]
    if max(w) > 1 << 8:
        raise ValueError("distribution masses are not small rationals")
    return w
