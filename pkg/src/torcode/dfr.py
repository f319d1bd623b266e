"""Decryption failure rates: union bound over codeword pairs and Monte Carlo.

For a sent codeword c and a competitor c', decoding of one block fails when
the received point is at least as close (on the torus) to c' as to c. With
the block noise n this happens iff <n, d_z> >= |d_z|^2 / 2 for some lift
d_z = (c' - c) + q z. The union bound sums these pairwise probabilities over
ordered codeword pairs and multiplies by nu / |C|.

By default every lift whose squared norm is within ``lift_margin * q^2`` of
the shortest one is included (for q/2-sized coordinates two lifts are almost
equally short). ``lifts="single"`` keeps only the centered difference.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy.stats import beta

from . import kernels
from .codebooks import Codebook
from .noise import NoiseComponents, noise_projection_parts, reduce_difference
from .pke import Params, cer, simulate_batch, keygen, encrypt, decrypt
from .probdist import PREC, PRUNE_BITS, ProbDist
from .torus import mod_pm_array

SCHEMA = "torcode.dfr/1"
CSV_COLUMNS = ["construction", "ell", "du", "dv", "d_min_over_q", "log2_dfr", "method", "cer",
               "pruned_mass_log2", "wall_seconds"]
DEFAULT_T_GRID = tuple(2.0 ** (k / 8) for k in range(-32, 33))


class InfeasibleError(RuntimeError):
    pass


def default_workers() -> int:
    return max(1, int(os.environ.get("TORCODE_WORKERS", "1")))


# ---------------------------------------------------------------------------
# single-pair tails

def p_error_exact(dist: ProbDist, threshold) -> Fraction:
    """P(X >= threshold) plus the pruned mass of ``dist``."""
    return dist.tail_ge(threshold)


class ProductMGF:
    """Log-MGF of <a*b mod (x^l+1), d> by enumerating one polynomial.

    The inner coefficient MGF is tabulated at every needed multiple of t,
    so each evaluation costs one pass over the outer states.
    """

    def __init__(self, ell, d, phi_a: ProbDist, phi_b: ProbDist):
        self.d = np.asarray(d, dtype=np.int64)
        sa, sb = phi_a.support(), phi_b.support()
        # outer = smaller support
        if len(sa) < len(sb):
            phi_a, phi_b, sa, sb = phi_b, phi_a, sb, sa
        self.inner_vals = np.array(sa, dtype=np.int64)
        self.inner_logp = _log_probs(phi_a, sa)
        self.outer_vals = np.array(sb, dtype=np.int64)
        self.outer_logp = _log_probs(phi_b, sb)
        self.span = int(np.abs(self.d).sum() * np.abs(self.outer_vals).max())
        # tabulate only the sigma values that occur when the outer enumeration is small
        self._sig = np.arange(-self.span, self.span + 1, dtype=np.int64)
        if len(self.outer_vals) ** len(self.d) <= 1 << 20:
            self._sig = np.unique(kernels.sigma_states(self.outer_vals, self.d))
        va = _float_var(phi_a)
        vb = _float_var(phi_b)
        ma = float(phi_a.mean())
        mb = float(phi_b.mean())
        # Var <ab, d> for independent coefficients: |d|^2 * l * E[a^2]E[b^2] - means
        self._var = float((self.d ** 2).sum()) * ell * ((va + ma * ma) * (vb + mb * mb) - (ma * mb) ** 2)

    def variance(self) -> float:
        return self._var

    def log_mgf(self, t: float) -> float:
        sig = self._sig.astype(np.float64)
        x = t * sig[:, None] * self.inner_vals[None, :] + self.inner_logp[None, :]
        m = x.max(axis=1)
        table = np.zeros(2 * self.span + 1)
        table[self._sig + self.span] = m + np.log(np.exp(x - m[:, None]).sum(axis=1))
        return kernels.log_mgf_outer(self.outer_vals, self.outer_logp, self.d, table, self.span)


def _log_probs(dist: ProbDist, support):
    return np.array([math.log(dist.mass(x)) if dist.mass(x) else -np.inf for x in support])


def _float_var(dist: ProbDist) -> float:
    return float(dist.variance())


class DistMGF:
    """Log-MGF of a tabulated distribution (float64, log-sum-exp)."""

    def __init__(self, dist: ProbDist):
        lm = dist.log2_masses() * math.log(2)
        keep = np.isfinite(lm)
        self.x = (dist.lo + np.arange(len(lm)))[keep].astype(np.float64)
        self.lp = lm[keep]
        self._var = _float_var(dist)

    def variance(self) -> float:
        return self._var

    def log_mgf(self, t: float) -> float:
        y = self.lp + t * self.x
        m = y.max()
        return float(m + math.log(np.exp(y - m).sum()))


class ScaledMGF:
    """MGF of c * X from the MGF of X."""

    def __init__(self, base, c: int):
        self.base, self.c = base, int(c)

    def variance(self) -> float:
        return self.c * self.c * self.base.variance()

    def log_mgf(self, t: float) -> float:
        return self.base.log_mgf(self.c * t)


def _as_mgf(c):
    return DistMGF(c) if isinstance(c, ProbDist) else c


def p_error_chernoff(components, threshold, t_grid=None):
    """min over t in the grid of exp(-t T) prod_i M_i(t)^{m_i}, capped at 1.

    ``components`` is a list of (ProbDist or MGF object, multiplicity). The
    default grid is geometric around T / Var with ratio 2^(1/8).
    """
    comps = [(_as_mgf(c), int(m)) for c, m in components]
    T = mpmath.mpf(Fraction(threshold).numerator) / Fraction(threshold).denominator
    if t_grid is None:
        var = sum(m * c.variance() for c, m in comps)
        t0 = float(T) / var if var > 0 else 1.0
        t_grid = [t0 * g for g in DEFAULT_T_GRID]
    best = mpmath.mpf(0)
    for t in t_grid:
        if t <= 0:
            continue
        val = -mpmath.mpf(t) * T
        for c, m in comps:
            val += m * mpmath.mpf(c.log_mgf(float(t)))
        best = min(best, val)
    return mpmath.e ** best


# ---------------------------------------------------------------------------
# union bound

@dataclass
class PairRecord:
    d: tuple
    lift: tuple
    threshold: str
    pairs: int
    exact_tail: float | None = None
    exact_log2: float | None = None
    chernoff_log2: float | None = None
    pruned_log2: float | None = None


@dataclass
class DfrReport:
    params: dict
    construction: str
    ell: int
    du: int
    dv: int
    d_min_over_q: float
    method: str
    lifts: str
    records: list = field(default_factory=list)
    log2_dfr: float = float("nan")
    log2_dfr_chernoff: float | None = None
    cer: float = 0.0
    pruned_mass_log2: float | None = None
    wall_seconds: float = 0.0
    prec: int = PREC
    prune_bits: int = PRUNE_BITS
    workers: int = 1

    def to_json(self) -> str:
        obj = asdict(self)
        obj["schema"] = SCHEMA
        return json.dumps(obj, indent=2, default=str)

    def csv_row(self) -> dict:
        return {"construction": self.construction, "ell": self.ell, "du": self.du, "dv": self.dv,
                "d_min_over_q": round(self.d_min_over_q, 6), "log2_dfr": round(self.log2_dfr, 4),
                "method": self.method, "cer": self.cer,
                "pruned_mass_log2": None if self.pruned_mass_log2 is None else round(self.pruned_mass_log2, 2),
                "wall_seconds": round(self.wall_seconds, 2)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerow(self.csv_row())
        return buf.getvalue()


def pair_differences(cb: Codebook, group: bool = True):
    """Ordered-pair centered differences, grouped into {d: count} or listed."""
    pts = cb.points
    diff = mod_pm_array(pts[None, :, :] - pts[:, None, :], cb.q)
    n = len(pts)
    out = [tuple(diff[i, j].tolist()) for i in range(n) for j in range(n) if i != j]
    if not group:
        return [(d, 1) for d in out]
    counts: dict[tuple, int] = {}
    for d in out:
        counts[d] = counts.get(d, 0) + 1
    return sorted(counts.items())


def lifts_of(d, q: int, mode: str = "near", margin: float = 0.125):
    """Lifts of a centered difference that can make the error event happen."""
    d = tuple(int(x) for x in d)
    if mode == "single":
        return [d]
    if mode != "near":
        raise ValueError(f"unknown lift mode {mode!r}")
    base = sum(x * x for x in d)
    opts = []
    for x in d:
        alt = x - q if x > 0 else x + q
        opts.append((x, alt) if x != 0 else (x,))
    out = []
    for cand in itertools.product(*opts):
        if sum(x * x for x in cand) <= base + margin * q * q:
            out.append(tuple(cand))
    return sorted(out)


def _canonical(d):
    neg = tuple(-x for x in d)
    return (d, 1) if d >= neg else (neg, -1)


def _job(args):
    key, params, method, prec, prune_bits, allow_long = args
    comp = NoiseComponents(params, prec, prune_bits)
    red, g = reduce_difference(key)
    thr_num = sum(x * x for x in key)  # threshold |d|^2/2 on <n, d>, i.e. |d|^2/(2g) on <n, d/g>
    t_red = Fraction(thr_num, 2 * g)
    ell = params.ell
    res = {}
    if method in ("exact", "both"):
        if ell >= 8 and not allow_long:
            raise InfeasibleError("exact evaluation for l=8 is hours-scale; pass allow_long")
        (p1, c1), (p2, c2), v = noise_projection_parts(comp, red)
        dist = p1.self_convolve(c1).convolve(p2.self_convolve(c2)).convolve(v)
        t_int = -((-t_red.numerator) // t_red.denominator)
        res["up"] = Fraction(dist.tail_ge_int(t_int), 1 << prec)
        res["down"] = Fraction(dist.tail_le_int(-t_int), 1 << prec)
        res["pruned"] = Fraction(dist.pruned, 1 << prec)
    if method in ("chernoff", "both"):
        comps = _chernoff_components(comp, red)
        res["ch_up"] = p_error_chernoff(comps, t_red)
        neg = _chernoff_components(comp, tuple(-x for x in red))
        res["ch_down"] = p_error_chernoff(neg, t_red)
    return key, res


CHERNOFF_EXACT_STATES = 10 ** 4


def _chernoff_components(comp: NoiseComponents, d):
    # exact component laws when their enumeration is small, tabulated product MGFs otherwise
    ell = comp.params.ell
    if len(comp.e1_cu.support()) ** ell <= CHERNOFF_EXACT_STATES:
        (p1, c1), (p2, c2), _ = noise_projection_parts(comp, d)
        comps = [(p1, c1), (p2, c2)]
    else:
        comps = [(ProductMGF(ell, d, comp.beta1, comp.beta1), comp.copies),
                 (ProductMGF(ell, d, comp.beta1, comp.e1_cu), comp.copies)]
    base = DistMGF(comp.cv_e2)
    comps += [(ScaledMGF(base, di), 1) for di in d if di]
    return comps


def _log2(x) -> float:
    if isinstance(x, Fraction):
        if x == 0:
            return float("-inf")
        return _log2_int(x.numerator) - _log2_int(x.denominator)
    return float(mpmath.log(x, 2)) if x > 0 else float("-inf")


def _log2_int(m: int) -> float:
    b = m.bit_length()
    if b <= 900:
        return math.log2(m)
    return math.log2(m >> (b - 64)) + (b - 64)


def dfr_union_bound(params: Params, codebook: Codebook | None = None, method: str = "exact",
                    lifts: str = "near", group: bool = True, workers: int | None = None,
                    allow_long: bool = False, prec: int = PREC, prune_bits: int = PRUNE_BITS) -> DfrReport:
    """Union bound on the per-message DFR (exact tails and/or Chernoff)."""
    t0 = time.time()
    cb = params.codebook if codebook is None else codebook
    if cb is not params.codebook and cb != params.codebook:
        params = params.with_codebook(cb)
    if method not in ("exact", "chernoff", "both"):
        raise ValueError(f"unknown method {method!r}")
    if method != "chernoff" and params.ell >= 8 and not allow_long:
        raise InfeasibleError("exact l=8 evaluation is hours-scale; use method='chernoff' or allow_long")
    workers = default_workers() if workers is None else workers

    diffs = pair_differences(cb, group)
    plan = []  # (d, count, lift, canonical key, sign)
    for d, cnt in diffs:
        for lift in lifts_of(d, cb.q, lifts):
            key, sign = _canonical(lift)
            plan.append((d, cnt, lift, key, sign))
    keys = sorted({p[3] for p in plan})
    jobs = [(k, params, method, prec, prune_bits, allow_long) for k in keys]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = dict(ex.map(_job, jobs))
    else:
        results = dict(map(_job, jobs))

    pref = Fraction(params.nu, cb.size)
    total_exact = Fraction(0)
    total_ch = mpmath.mpf(0)
    records = []
    worst_pruned = Fraction(0)
    for d, cnt, lift, key, sign in plan:
        res = results[key]
        rec = PairRecord(d=d, lift=lift, threshold=str(Fraction(sum(x * x for x in lift), 2)), pairs=cnt)
        if "up" in res:
            tail = res["up"] if sign > 0 else res["down"]
            total_exact += cnt * tail
            rec.exact_tail = float(tail)
            rec.exact_log2 = _log2(tail)
            rec.pruned_log2 = _log2(res["pruned"])
            worst_pruned = max(worst_pruned, res["pruned"])
        if "ch_up" in res:
            ch = res["ch_up"] if sign > 0 else res["ch_down"]
            total_ch += cnt * ch
            rec.chernoff_log2 = _log2(ch)
        records.append(rec)

    rep = DfrReport(params=params.describe(), construction=cb.construction, ell=cb.ell, du=params.du,
                    dv=params.dv, d_min_over_q=cb.dmin() / cb.q, method=method, lifts=lifts,
                    records=records, cer=cer(params), prec=prec, prune_bits=prune_bits, workers=workers)
    if method in ("exact", "both"):
        rep.log2_dfr = _log2(pref * total_exact)
        rep.pruned_mass_log2 = _log2(worst_pruned)
    if method in ("chernoff", "both"):
        val = _log2(mpmath.mpf(pref.numerator) / pref.denominator * total_ch)
        rep.log2_dfr_chernoff = val
        if method == "chernoff":
            rep.log2_dfr = val
    rep.wall_seconds = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass
class MonteCarloResult:
    construction: str
    trials: int
    failures: int
    estimate: float
    ci_low: float
    ci_high: float
    seed: int
    engine: str
    confidence: float = 0.99

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def clopper_pearson(k: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    a = (1 - confidence) / 2
    lo = 0.0 if k == 0 else float(beta.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a, k + 1, n - k))
    return lo, hi


def dfr_monte_carlo(params: Params, codebook: Codebook | None = None, trials: int = 10000, seed: int = 0,
                    engine: str = "batched", batch: int = 512, confidence: float = 0.99) -> MonteCarloResult:
    """Count message-recovery failures over independent keygen/encrypt/decrypt runs."""
    if trials < 1:
        raise ValueError("trials must be positive")
    cb = params.codebook if codebook is None else codebook
    params = params.with_codebook(cb)
    fails = 0
    if engine == "batched":
        rng = np.random.default_rng(seed)
        done = 0
        while done < trials:
            m = min(batch, trials - done)
            fails += int(simulate_batch(params, m, rng).sum())
            done += m
    elif engine == "scalar":
        msg_rng = np.random.default_rng(seed)
        for i in range(trials):
            base = (seed << 32) + i
            kp = keygen(params, 2 * base)
            m = msg_rng.integers(0, 2, params.n)
            ct = encrypt(kp.public, m, params, 2 * base + 1)
            fails += int(not np.array_equal(decrypt(kp.secret, ct, params), m))
    else:
        raise ValueError(f"unknown engine {engine!r}")
    lo, hi = clopper_pearson(fails, trials, confidence)
    return MonteCarloResult(cb.construction, trials, fails, fails / trials, lo, hi, seed, engine, confidence)
