"""Oracle suites behind ``torcode verify``: each returns a CheckResult with evidence."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import codebooks as cbk
from . import kernels, lattice
from .noise import (NoiseComponents, dist_cbd, noise_projection_dist, predicted_variance, quant_error_counts,
                    verify_splitting)
from .pke import _fft_neg, _ifft_neg, _twist, simulate_batch
from .probdist import ProbDist
from .torus import min_toroidal_sqdist, mod_pm_array


@dataclass
class CheckResult:
    name: str
    passed: bool
    evidence: dict = field(default_factory=dict)

    def line(self) -> str:
        ev = ", ".join(f"{k}={v}" for k, v in self.evidence.items())
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {ev}"


def check_theorem1(q: int = 17) -> CheckResult:
    """No 4-point code in Z_q^2 beats the best integer-gamma Minal code."""
    best, witness = kernels.best_four_point(q)
    minal = max((min_toroidal_sqdist(cbk.minal_points(q, 2, g), q), g) for g in range(0, (q + 1) // 2))
    return CheckResult("theorem1", best <= minal[0],
                       {"q": q, "best_sqdist": best, "witness": witness.tolist(),
                        "minal_sqdist": minal[0], "minal_gamma": minal[1]})


def check_lemma1(qs=(17, 31, 101), ells=(2, 4, 8)) -> CheckResult:
    mismatches = []
    argmax_ok = True
    details = {}
    for q in qs:
        for ell in ells:
            vals = []
            for g in range(0, (q + 1) // 2):
                ex = min_toroidal_sqdist(cbk.minal_points(q, ell, g), q)
                if ex != cbk.minal_dmin_sq_formula(q, ell, g):
                    mismatches.append((q, ell, g))
                vals.append(ex)
            top = max(vals)
            arg = [g for g, v in enumerate(vals) if v == top]
            gs = cbk.gamma_star(q, ell)
            ok = any(abs(g - gs) <= 1 for g in arg)
            argmax_ok &= ok
            details[f"q{q}_l{ell}"] = (arg[0], gs)
    return CheckResult("lemma1", not mismatches and argmax_ok,
                       {"mismatches": len(mismatches), "argmax_vs_gamma_star": details})


def check_lattice() -> CheckResult:
    d4, e8 = lattice.d4(), lattice.e8_doubled()
    counts = {f"D4_p{p}": len(lattice.enumerate_mod_p(d4, p)) for p in (2, 4, 6, 8)}
    counts["2E8_p4"] = len(lattice.enumerate_mod_p(e8, 4))
    expected = {f"D4_p{p}": p ** 4 // 2 for p in (2, 4, 6, 8)}
    expected["2E8_p4"] = 256
    pts6 = lattice.enumerate_mod_p(d4, 6)
    pts4 = lattice.enumerate_mod_p(e8, 4)
    dmin_d4 = kernels.min_pair_sqdist(pts6, 6)
    dmin_e8 = kernels.min_pair_sqdist(pts4, 4)
    members = bool(lattice.member_mask(d4, np.array(cbk.GTD4_BASE)).all()
                   and lattice.member_mask(e8, cbk.gtd8_base_points()).all())
    ok = counts == expected and dmin_d4 == d4.dmin and dmin_e8 == e8.dmin and members
    return CheckResult("lattice", ok, {"counts": counts, "torus_dmin_sq": {"D4_p6": int(dmin_d4), "2E8_p4": int(dmin_e8)},
                                       "base_points_members": members})


def check_splitting(n: int = 4, ell: int = 2, q: int = 17) -> CheckResult:
    rep = verify_splitting(n, ell, q, dist_cbd(1))
    half = ProbDist.from_int_masses({0: 1 << 447, 1: 1 << 447})
    probe = verify_splitting(n, ell, q, half) if n <= 4 else None
    ev = {"n": n, "ell": ell, "q": q, "pairs": rep["pairs"], "blocks": rep["blocks"],
          "support_cells": rep["cells"]}
    if probe is not None:
        ev["asymmetric_probe_identical"] = probe["identical"]
    return CheckResult("splitting", rep["identical"], ev)


def _e8_candidates():
    # offsets v (all even or all odd, |v|^2 <= 24) grouped by the class of the base point
    even = np.array(list(itertools.product(range(-2, 3), repeat=8)), dtype=np.int64) * 2
    even = even[(even ** 2).sum(axis=1) <= 24]
    odd = np.array(list(itertools.product((-3, -1, 1, 3), repeat=8)), dtype=np.int64)
    odd = odd[(odd ** 2).sum(axis=1) <= 24]
    allv = np.concatenate([even, odd])
    e8 = lattice.e8_doubled()
    out = {}
    for cls in (0, 2):
        base = np.zeros(8, dtype=np.int64)
        base[0] = cls
        out[cls] = allv[lattice.member_mask(e8, allv + base)]
    return out


def cvp_e8_bruteforce(x) -> np.ndarray:
    """Nearest 2E8 point by search over every lattice point within distance
    sqrt(24) of 2*round(x/2); that ball contains the covering-radius ball."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    p0 = 2 * np.floor(x / 2 + 0.5).astype(np.int64)
    cands = _e8_candidates()
    cls = p0.sum(axis=1) % 4
    out = np.empty_like(p0)
    for c in (0, 2):
        rows = np.nonzero(cls == c)[0]
        if len(rows):
            idx = kernels.nearest_offset(x[rows], p0[rows], cands[c])
            out[rows] = p0[rows] + cands[c][idx]
    return out


def check_decoder(queries: int = 100_000, noise_draws: int = 10_000, seed: int = 0, q: int = 3329) -> CheckResult:
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 4, size=(queries, 8))
    fast = lattice.cvp_e8_fast(x)
    ref = cvp_e8_bruteforce(x)
    dfast = ((x - fast) ** 2).sum(axis=1)
    dref = ((x - ref) ** 2).sum(axis=1)
    cvp_bad = int(np.count_nonzero(np.abs(dfast - dref) > 1e-9))
    members = bool(lattice.member_mask(lattice.e8_doubled(), fast).all())

    g8 = cbk.build_gtd8(q)
    r = rng.integers(0, q, size=(queries, 8))
    lf = cbk.decode_fast_gtd8(g8, r)
    le = cbk.decode_labels(g8, r)
    # compare only where the two candidates are not (near) tied
    dist = lambda lab: (mod_pm_array(r - cbk.encode_labels(g8, lab), q) ** 2).sum(axis=1)
    gap = np.abs(np.sqrt(dist(lf)) - np.sqrt(dist(le)))
    decided = (lf == le) | (gap > 1e-6 * q)
    gtd8_bad = int(np.count_nonzero((lf != le) & decided))

    rt = {}
    for name in cbk.CONSTRUCTIONS:
        cb = cbk.build(name, q)
        labels = np.arange(cb.size)
        ok = bool((cbk.decode_labels(cb, cb.points) == labels).all())
        lab = rng.integers(0, cb.size, noise_draws)
        noise = random_ball_noise(rng, noise_draws, cb.ell, cb.min_sqdist())
        got = cbk.decode_labels(cb, np.mod(cbk.encode_labels(cb, lab) + noise, q))
        rt[name] = (ok, int(np.count_nonzero(got != lab)))
    rt_ok = all(ok and bad == 0 for ok, bad in rt.values())
    return CheckResult("decoder", cvp_bad == 0 and members and gtd8_bad == 0 and rt_ok,
                       {"cvp_queries": queries, "cvp_mismatches": cvp_bad, "cvp_members": members,
                        "gtd8_fast_mismatches": gtd8_bad, "roundtrip_and_half_distance": rt})


def random_ball_noise(rng, count: int, ell: int, dmin_sq: int) -> np.ndarray:
    """Integer noise vectors with squared norm < dmin^2 / 4."""
    out = np.empty((0, ell), dtype=np.int64)
    rad = math.sqrt(dmin_sq) / 2
    while len(out) < count:
        v = rng.normal(size=(count, ell))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        v *= rad * rng.uniform(0, 1, size=(count, 1)) ** (1 / ell)
        v = np.rint(v).astype(np.int64)
        v = v[4 * (v ** 2).sum(axis=1) < dmin_sq]
        out = np.concatenate([out, v])
    return out[:count]


def sample_model_noise(params, trials: int, rng) -> np.ndarray:
    """Decryption noise drawn the way the model assumes it: the same ring algebra,
    but c_u and c_v drawn independently from their uniform-input laws."""
    k, n, q = params.k, params.n, params.q
    tw = _twist(n)

    def cbd(eta, shape):
        return rng.binomial(2 * eta, 0.5, size=shape).astype(np.int64) - eta

    def quant(d, shape):
        law = quant_error_counts(q, d)
        vals = np.array(sorted(law))
        w = np.array([law[v] for v in vals], dtype=np.float64)
        return rng.choice(vals, size=shape, p=w / w.sum())

    s, e, r = (cbd(params.eta1, (trials, k, n)) for _ in range(3))
    e1, e2 = cbd(params.eta2, (trials, k, n)), cbd(params.eta2, (trials, n))
    cu, cv = quant(params.du, (trials, k, n)), quant(params.dv, (trials, n))

    def mul(a, b):
        return _ifft_neg((_fft_neg(a, tw) * _fft_neg(b, tw)).sum(axis=1), tw)

    return mul(e, r) - mul(s, e1 + cu) + e2 + cv


def _block0(params, source, trials, rng):
    if source == "pke":
        noise = simulate_batch(params, trials, rng, return_noise=True)[1]
    elif source == "model":
        noise = sample_model_noise(params, trials, rng)
    else:
        raise ValueError(f"unknown noise source {source!r}")
    return noise[:, ::params.nu]  # positions 0, nu, 2 nu, ...


def check_noise_histogram(params, diffs, samples: int = 10**7, source: str = "pke", seed: int = 0,
                          batch: int = 250_000, sigmas: float = 4.0, min_expected: float = 25.0,
                          prec: int = 128, prune_bits: int = 110) -> CheckResult:
    """Compare the law of <n, d> for block 0 with a sampled histogram, bin by bin.

    Bins with fewer than ``min_expected`` expected hits are not scored; samples
    outside the model support always fail.
    """
    rng = np.random.default_rng(seed)
    parts, left = [], samples
    while left:
        m = min(batch, left)
        parts.append(_block0(params, source, m, rng).copy())
        left -= m
    blocks = np.concatenate(parts)
    comp = NoiseComponents(params, prec, prune_bits)
    worst, ok = {}, True
    for d in diffs:
        dist = noise_projection_dist(params, d, comp)
        x = blocks @ np.asarray(d, dtype=np.int64)
        counts = np.bincount(x - dist.lo, minlength=dist.hi - dist.lo + 1) if x.min() >= dist.lo else None
        if counts is None or len(counts) > dist.hi - dist.lo + 1:
            ok = False
            worst[str(tuple(d))] = "outside support"
            continue
        p = np.exp2(np.array(dist.log2_masses()))
        exp = samples * p
        scored = exp >= min_expected
        z = np.abs(counts[scored] - exp[scored]) / np.sqrt(exp[scored] * (1 - p[scored]))
        worst[str(tuple(d))] = round(float(z.max()), 2)
        ok &= bool(z.max() <= sigmas)
    return CheckResult(f"noise_histogram[{source}]", ok, {"samples": samples, "worst_z": worst})


def check_variance_additivity(params, diffs, rel_tol: float = 2.0 ** -60) -> CheckResult:
    """Variance of the convolved law against the sum of component variances."""
    comp = NoiseComponents(params)
    worst = 0.0
    for d in diffs:
        total = noise_projection_dist(params, d, comp).variance()
        parts = predicted_variance(params, d, comp)
        worst = max(worst, float(abs(total - parts) / parts))
    return CheckResult("variance_additivity", worst <= rel_tol, {"worst_rel": f"{worst:.3g}"})


SUITES = {
    "theorem1": check_theorem1,
    "lemma1": check_lemma1,
    "lattice": check_lattice,
    "splitting": check_splitting,
    "decoder": check_decoder,
}


def run_all() -> list[CheckResult]:
    return [f() for f in SUITES.values()]
