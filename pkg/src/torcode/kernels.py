"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public names at the bottom of the module dispatch on
``torcode._accel.USE_NUMBA``. Both implementations are importable under
``IMPLS["numba"]`` / ``IMPLS["numpy"]`` so tests and the benchmark can pin
one explicitly; the two must agree bit for bit.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# ---------------------------------------------------------------------------
# toroidal distances

@njit
def _centered(x, q):
    r = x % q
    if r >= (q + 1) // 2:
        r -= q
    return r


@njit
def _min_pair_sqdist_nb(pts, q):
    n, ell = pts.shape
    best = np.int64(-1)
    for i in range(n):
        for j in range(i + 1, n):
            s = 0
            for k in range(ell):
                c = _centered(pts[i, k] - pts[j, k], q)
                s += c * c
                if best >= 0 and s >= best:
                    break
            if best < 0 or s < best:
                best = s
    return best


def _min_pair_sqdist_np(pts, q):
    pts = np.asarray(pts, dtype=np.int64)
    n = len(pts)
    best = None
    half = (q + 1) // 2
    for start in range(0, n - 1, 256):
        blk = pts[start:start + 256]
        diff = np.mod(blk[:, None, :] - pts[None, :, :], q)
        diff = np.where(diff >= half, diff - q, diff)
        sq = (diff * diff).sum(axis=2)
        rows = np.arange(start, start + len(blk))
        # keep only pairs (i, j) with j > i
        sq = np.where(np.arange(n)[None, :] > rows[:, None], sq, np.iinfo(np.int64).max)
        m = sq.min()
        best = m if best is None else min(best, m)
    return np.int64(best)


@njit
def _nearest_index_nb(codewords, received, q):
    m, ell = codewords.shape
    out = np.empty(received.shape[0], dtype=np.int64)
    for r in range(received.shape[0]):
        best = np.int64(-1)
        arg = 0
        for i in range(m):
            s = 0
            for k in range(ell):
                c = _centered(received[r, k] - codewords[i, k], q)
                s += c * c
            if best < 0 or s < best:
                best = s
                arg = i
        out[r] = arg
    return out


def _nearest_index_np(codewords, received, q):
    codewords = np.asarray(codewords, dtype=np.int64)
    received = np.asarray(received, dtype=np.int64)
    half = (q + 1) // 2
    out = np.empty(len(received), dtype=np.int64)
    step = max(1, 2 ** 20 // max(1, codewords.size))
    for s in range(0, len(received), step):
        diff = np.mod(received[s:s + step, None, :] - codewords[None, :, :], q)
        diff = np.where(diff >= half, diff - q, diff)
        # argmin returns the first (lowest-index) minimiser
        out[s:s + step] = (diff * diff).sum(axis=2).argmin(axis=1)
    return out


# ---------------------------------------------------------------------------
# brute-force search for the best 4-point code in Z_q^2 (origin pinned)

@njit
def _best_four_point_nb(q):
    pts = np.empty(((q * q) - 1, 2), dtype=np.int64)
    t = 0
    for x in range(q):
        for y in range(q):
            if x == 0 and y == 0:
                continue
            pts[t, 0] = x
            pts[t, 1] = y
            t += 1
    n = pts.shape[0]
    d0 = np.empty(n, dtype=np.int64)
    for i in range(n):
        a = _centered(pts[i, 0], q)
        b = _centered(pts[i, 1], q)
        d0[i] = a * a + b * b
    best = np.int64(0)
    wi, wj, wk = -1, -1, -1
    for i in range(n):
        if d0[i] <= best:
            continue
        for j in range(i + 1, n):
            a = _centered(pts[i, 0] - pts[j, 0], q)
            b = _centered(pts[i, 1] - pts[j, 1], q)
            m = min(d0[i], d0[j], a * a + b * b)
            if m <= best:
                continue
            for k in range(j + 1, n):
                if d0[k] <= best:
                    continue
                a = _centered(pts[i, 0] - pts[k, 0], q)
                b = _centered(pts[i, 1] - pts[k, 1], q)
                m2 = min(m, d0[k], a * a + b * b)
                if m2 <= best:
                    continue
                a = _centered(pts[j, 0] - pts[k, 0], q)
                b = _centered(pts[j, 1] - pts[k, 1], q)
                m2 = min(m2, a * a + b * b)
                if m2 > best:
                    best = m2
                    wi, wj, wk = i, j, k
    wit = np.zeros((4, 2), dtype=np.int64)
    if wi >= 0:
        wit[1] = pts[wi]
        wit[2] = pts[wj]
        wit[3] = pts[wk]
    return best, wit


def _best_four_point_np(q):
    grid = np.array([(x, y) for x in range(q) for y in range(q) if (x, y) != (0, 0)], dtype=np.int64)
    half = (q + 1) // 2

    def cen(v):
        r = np.mod(v, q)
        return np.where(r >= half, r - q, r)

    d0 = (cen(grid) ** 2).sum(-1)
    pair = (cen(grid[:, None, :] - grid[None, :, :]) ** 2).sum(-1)
    n = len(grid)
    best = 0
    wit = np.zeros((4, 2), dtype=np.int64)
    for i in range(n):
        if d0[i] <= best:
            continue
        for j in range(i + 1, n):
            m = min(d0[i], d0[j], pair[i, j])
            if m <= best:
                continue
            c = np.minimum(np.minimum(d0[j + 1:], pair[i, j + 1:]), pair[j, j + 1:])
            c = np.minimum(c, m)
            k = int(c.argmax())
            if c[k] > best:
                best = int(c[k])
                wit[1], wit[2], wit[3] = grid[i], grid[j], grid[j + 1 + k]
    return np.int64(best), wit


# ---------------------------------------------------------------------------
# 2E8 closest point (real input) and exact GTD8 torus decoding

@njit
def _dn_round_nb(x, out):
    # nearest point of D_n (even coordinate sum) to x
    n = x.shape[0]
    total = 0
    worst = 0
    worst_err = -1.0
    for i in range(n):
        r = np.floor(x[i] + 0.5)
        out[i] = r
        total += int(r)
        err = abs(x[i] - r)
        if err > worst_err:
            worst_err = err
            worst = i
    if total % 2 != 0:
        if x[worst] > out[worst]:
            out[worst] += 1.0
        else:
            out[worst] -= 1.0


@njit
def _cvp_2e8_nb(pts):
    b = pts.shape[0]
    out = np.empty((b, 8), dtype=np.int64)
    h = np.empty(8)
    e = np.empty(8)
    o = np.empty(8)
    for r in range(b):
        for i in range(8):
            h[i] = pts[r, i] / 2.0
        _dn_round_nb(h, e)
        for i in range(8):
            h[i] = (pts[r, i] - 1.0) / 2.0
        _dn_round_nb(h, o)
        de = 0.0
        do = 0.0
        for i in range(8):
            t = pts[r, i] - 2.0 * e[i]
            de += t * t
            t = pts[r, i] - 2.0 * o[i] - 1.0
            do += t * t
        if de <= do:
            for i in range(8):
                out[r, i] = int(2.0 * e[i])
        else:
            for i in range(8):
                out[r, i] = int(2.0 * o[i] + 1.0)
    return out


def _dn_round_np(x):
    r = np.floor(x + 0.5)
    odd = (r.sum(axis=1) % 2) != 0
    err = np.abs(x - r)
    worst = err.argmax(axis=1)
    rows = np.nonzero(odd)[0]
    cols = worst[rows]
    r[rows, cols] += np.where(x[rows, cols] > r[rows, cols], 1.0, -1.0)
    return r


def _cvp_2e8_np(pts):
    pts = np.asarray(pts, dtype=np.float64)
    e = 2.0 * _dn_round_np(pts / 2.0)
    o = 2.0 * _dn_round_np((pts - 1.0) / 2.0) + 1.0
    de = ((pts - e) ** 2).sum(axis=1)
    do = ((pts - o) ** 2).sum(axis=1)
    return np.where((de <= do)[:, None], e, o).astype(np.int64)


@njit
def _gtd8_decode_nb(received, q, scale):
    # exact minimum-toroidal-distance decoding of scale * (2E8 mod 4)
    b = received.shape[0]
    out = np.empty((b, 8), dtype=np.int64)
    cost = np.empty((8, 4), dtype=np.int64)
    best = np.empty(8, dtype=np.int64)
    for r in range(b):
        for i in range(8):
            for c in range(4):
                t = _centered(received[r, i] - scale * c, q)
                cost[i, c] = t * t
        total_best = np.int64(-1)
        for coset in range(2):
            lo = coset
            hi = coset + 2
            tot = 0
            par = 0
            pen_i = 0
            pen = np.int64(-1)
            cur = np.empty(8, dtype=np.int64)
            for i in range(8):
                if cost[i, hi] < cost[i, lo]:
                    cur[i] = hi
                    par += 1
                    tot += cost[i, hi]
                    d = cost[i, lo] - cost[i, hi]
                else:
                    cur[i] = lo
                    tot += cost[i, lo]
                    d = cost[i, hi] - cost[i, lo]
                if pen < 0 or d < pen:
                    pen = d
                    pen_i = i
            if par % 2 == 1:
                cur[pen_i] = hi if cur[pen_i] == lo else lo
                tot += pen
            if total_best < 0 or tot < total_best:
                total_best = tot
                for i in range(8):
                    best[i] = cur[i]
        for i in range(8):
            out[r, i] = best[i]
    return out


def _gtd8_decode_np(received, q, scale):
    received = np.asarray(received, dtype=np.int64)
    half = (q + 1) // 2
    vals = np.arange(4, dtype=np.int64) * scale
    t = np.mod(received[:, :, None] - vals[None, None, :], q)
    t = np.where(t >= half, t - q, t)
    cost = t * t
    results = []
    totals = []
    for coset in (0, 1):
        lo, hi = cost[:, :, coset], cost[:, :, coset + 2]
        pick_hi = hi < lo
        cur = np.where(pick_hi, coset + 2, coset)
        tot = np.where(pick_hi, hi, lo).sum(axis=1)
        pen = np.abs(hi - lo)
        odd = pick_hi.sum(axis=1) % 2 == 1
        i = pen.argmin(axis=1)
        rows = np.nonzero(odd)[0]
        cur[rows, i[rows]] = np.where(cur[rows, i[rows]] == coset, coset + 2, coset)
        tot = tot + np.where(odd, pen[np.arange(len(pen)), i], 0)
        results.append(cur)
        totals.append(tot)
    return np.where((totals[0] <= totals[1])[:, None], results[0], results[1])


# ---------------------------------------------------------------------------
# negacyclic polynomial arithmetic

@njit
def _negacyclic_mul_nb(a, b, q):
    n = a.shape[0]
    acc = np.zeros(n, dtype=np.int64)
    for i in range(n):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(n):
            k = i + j
            if k < n:
                acc[k] += ai * b[j]
            else:
                acc[k - n] -= ai * b[j]
    for k in range(n):
        acc[k] %= q
    return acc


def _negacyclic_mul_np(a, b, q):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = len(a)
    full = np.convolve(a, b)
    c = full[:n].copy()
    c[:n - 1] -= full[n:]
    return np.mod(c, q)


@njit
def _negacyclic_mul_int_nb(a, b):
    # exact integer product in Z[x]/(x^n + 1), no reduction
    n = a.shape[0]
    acc = np.zeros(n, dtype=np.int64)
    for i in range(n):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(n):
            k = i + j
            if k < n:
                acc[k] += ai * b[j]
            else:
                acc[k - n] -= ai * b[j]
    return acc


def _negacyclic_mul_int_np(a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = len(a)
    full = np.convolve(a, b)
    c = full[:n].copy()
    c[:n - 1] -= full[n:]
    return c


@njit
def _matvec_nb(mat, vec, q, transpose):
    # mat: (k, k, n), vec: (k, n); returns (k, n) = mat @ vec (or mat^T @ vec)
    k = mat.shape[0]
    n = mat.shape[2]
    out = np.zeros((k, n), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            if transpose:
                p = _negacyclic_mul_int_nb(mat[j, i], vec[j])
            else:
                p = _negacyclic_mul_int_nb(mat[i, j], vec[j])
            for t in range(n):
                out[i, t] += p[t]
        for t in range(n):
            out[i, t] %= q
    return out


def _matvec_np(mat, vec, q, transpose):
    k = mat.shape[0]
    out = np.zeros((k, mat.shape[2]), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            m = mat[j, i] if transpose else mat[i, j]
            out[i] += _negacyclic_mul_int_np(m, vec[j])
    return np.mod(out, q)


# ---------------------------------------------------------------------------
# projections <x^i * b mod (x^l + 1), d> over enumerated coefficient vectors

@njit
def _state_digits(idx, radix, ell, digits):
    for i in range(ell):
        digits[i] = idx % radix
        idx //= radix


@njit
def _sigma_states_nb(values, d):
    # every b in values^l (mixed radix, digit 0 fastest); returns sigma (S, l)
    ell = d.shape[0]
    radix = values.shape[0]
    total = radix ** ell
    out = np.empty((total, ell), dtype=np.int64)
    digits = np.empty(ell, dtype=np.int64)
    b = np.empty(ell, dtype=np.int64)
    for s in range(total):
        _state_digits(s, radix, ell, digits)
        for i in range(ell):
            b[i] = values[digits[i]]
        for i in range(ell):
            acc = 0
            for j in range(ell):
                if j >= i:
                    acc += d[j] * b[j - i]
                else:
                    acc -= d[j] * b[j - i + ell]
            out[s, i] = acc
    return out


def _all_states_np(values, ell):
    radix = len(values)
    idx = np.arange(radix ** ell, dtype=np.int64)
    digits = np.empty((len(idx), ell), dtype=np.int64)
    for i in range(ell):
        digits[:, i] = idx % radix
        idx //= radix
    return np.asarray(values, dtype=np.int64)[digits]


def _sigma_matrix(d):
    # row i holds the linear map b -> <x^i b, d>
    ell = len(d)
    m = np.zeros((ell, ell), dtype=np.int64)
    for i in range(ell):
        for j in range(ell):
            if j >= i:
                m[i, j - i] += d[j]
            else:
                m[i, j - i + ell] -= d[j]
    return m


def _sigma_states_np(values, d):
    d = np.asarray(d, dtype=np.int64)
    states = _all_states_np(values, len(d))
    return states @ _sigma_matrix(d).T


@njit
def _log_mgf_outer_nb(values, logp, d, table, table_off):
    # log sum_b P(b) exp(sum_i L(sigma_i(b))), L tabulated at index sigma + table_off
    ell = d.shape[0]
    radix = values.shape[0]
    total = radix ** ell
    digits = np.empty(ell, dtype=np.int64)
    b = np.empty(ell, dtype=np.int64)
    run_max = -np.inf
    run_sum = 0.0
    for s in range(total):
        _state_digits(s, radix, ell, digits)
        lp = 0.0
        for i in range(ell):
            b[i] = values[digits[i]]
            lp += logp[digits[i]]
        for i in range(ell):
            acc = 0
            for j in range(ell):
                if j >= i:
                    acc += d[j] * b[j - i]
                else:
                    acc -= d[j] * b[j - i + ell]
            lp += table[acc + table_off]
        if lp > run_max:
            run_sum = run_sum * np.exp(run_max - lp) + 1.0
            run_max = lp
        else:
            run_sum += np.exp(lp - run_max)
    return run_max + np.log(run_sum)


def _log_mgf_outer_np(values, logp, d, table, table_off):
    d = np.asarray(d, dtype=np.int64)
    ell = len(d)
    radix = len(values)
    sig = _sigma_matrix(d)
    total = radix ** ell
    chunk = 1 << 16
    parts = []
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = np.empty((len(idx), ell), dtype=np.int64)
        for i in range(ell):
            digits[:, i] = idx % radix
            idx = idx // radix
        b = np.asarray(values, dtype=np.int64)[digits]
        lp = np.asarray(logp)[digits].sum(axis=1)
        lp = lp + table[b @ sig.T + table_off].sum(axis=1)
        m = lp.max()
        parts.append(m + np.log(np.exp(lp - m).sum()))
    parts = np.array(parts)
    m = parts.max()
    return m + np.log(np.exp(parts - m).sum())


@njit
def _nearest_offset_nb(x, base, cands):
    # argmin_j |x_r - base_r - cands[j]|^2, first minimiser
    b, dim = x.shape
    out = np.empty(b, dtype=np.int64)
    for r in range(b):
        best = np.inf
        arg = 0
        for j in range(cands.shape[0]):
            s = 0.0
            for i in range(dim):
                t = x[r, i] - base[r, i] - cands[j, i]
                s += t * t
            if s < best:
                best = s
                arg = j
        out[r] = arg
    return out


def _nearest_offset_np(x, base, cands):
    x = np.asarray(x, dtype=np.float64) - base
    c2 = (cands.astype(np.float64) ** 2).sum(axis=1)
    out = np.empty(len(x), dtype=np.int64)
    for s in range(0, len(x), 256):
        blk = x[s:s + 256]
        # |x - c|^2 = |x|^2 - 2 x.c + |c|^2; recompute exactly for the winner set below
        d = c2[None, :] - 2.0 * blk @ cands.T.astype(np.float64)
        out[s:s + 256] = d.argmin(axis=1)
    return out


# ---------------------------------------------------------------------------
# exhaustive joint block distribution of c = a*b in Z_q[x]/(x^n + 1)

@njit
def _block_counts_nb(values_a, weights_a, values_b, weights_b, n, ell, q):
    nu = n // ell
    cells = q ** ell
    counts = np.zeros((nu, cells), dtype=np.int64)
    ra = values_a.shape[0]
    rb = values_b.shape[0]
    ta = ra ** n
    tb = rb ** n
    da = np.empty(n, dtype=np.int64)
    db = np.empty(n, dtype=np.int64)
    a = np.empty(n, dtype=np.int64)
    b = np.empty(n, dtype=np.int64)
    for sa in range(ta):
        _state_digits(sa, ra, n, da)
        wa = 1
        for i in range(n):
            a[i] = values_a[da[i]]
            wa *= weights_a[da[i]]
        for sb in range(tb):
            _state_digits(sb, rb, n, db)
            w = wa
            for i in range(n):
                b[i] = values_b[db[i]]
                w *= weights_b[db[i]]
            c = _negacyclic_mul_nb(a, b, q)
            for blk in range(nu):
                idx = 0
                for j in range(ell - 1, -1, -1):
                    idx = idx * q + c[blk + j * nu]
                counts[blk, idx] += w
    return counts


def _block_counts_np(values_a, weights_a, values_b, weights_b, n, ell, q):
    nu = n // ell
    cells = q ** ell
    counts = np.zeros((nu, cells), dtype=np.int64)
    A = _all_states_np(values_a, n)
    B = _all_states_np(values_b, n)
    idx_a = _all_states_np(np.arange(len(values_a)), n)
    idx_b = _all_states_np(np.arange(len(values_b)), n)
    wa = np.asarray(weights_a, dtype=np.int64)[idx_a].prod(axis=1)
    wb = np.asarray(weights_b, dtype=np.int64)[idx_b].prod(axis=1)
    place = q ** np.arange(ell, dtype=np.int64)
    for t in range(len(A)):
        # rows of the negacyclic multiplication matrix of a
        a = A[t]
        mat = np.empty((n, n), dtype=np.int64)
        for i in range(n):
            mat[:, i] = np.concatenate([-a[n - i:], a[:n - i]]) if i else a
        c = np.mod(B @ mat.T, q)
        w = wa[t] * wb
        for blk in range(nu):
            idx = c[:, blk::nu] @ place
            np.add.at(counts[blk], idx, w)
    return counts


IMPLS = {
    "numba": {
        "min_pair_sqdist": _min_pair_sqdist_nb,
        "nearest_index": _nearest_index_nb,
        "best_four_point": _best_four_point_nb,
        "cvp_2e8": _cvp_2e8_nb,
        "gtd8_decode": _gtd8_decode_nb,
        "negacyclic_mul": _negacyclic_mul_nb,
        "negacyclic_mul_int": _negacyclic_mul_int_nb,
        "matvec": _matvec_nb,
        "sigma_states": _sigma_states_nb,
        "log_mgf_outer": _log_mgf_outer_nb,
        "block_counts": _block_counts_nb,
        "nearest_offset": _nearest_offset_nb,
    },
    "numpy": {
        "min_pair_sqdist": _min_pair_sqdist_np,
        "nearest_index": _nearest_index_np,
        "best_four_point": _best_four_point_np,
        "cvp_2e8": _cvp_2e8_np,
        "gtd8_decode": _gtd8_decode_np,
        "negacyclic_mul": _negacyclic_mul_np,
        "negacyclic_mul_int": _negacyclic_mul_int_np,
        "matvec": _matvec_np,
        "sigma_states": _sigma_states_np,
        "log_mgf_outer": _log_mgf_outer_np,
        "block_counts": _block_counts_np,
        "nearest_offset": _nearest_offset_np,
    },
}

_ACTIVE = IMPLS["numba" if USE_NUMBA else "numpy"]


def min_pair_sqdist(pts, q):
    return _ACTIVE["min_pair_sqdist"](np.ascontiguousarray(pts, dtype=np.int64), q)


def nearest_index(codewords, received, q):
    return _ACTIVE["nearest_index"](np.ascontiguousarray(codewords, dtype=np.int64),
                                    np.ascontiguousarray(received, dtype=np.int64), q)


def best_four_point(q):
    best, wit = _ACTIVE["best_four_point"](q)
    return int(best), wit


def cvp_2e8(pts):
    return _ACTIVE["cvp_2e8"](np.ascontiguousarray(pts, dtype=np.float64))


def gtd8_decode(received, q, scale):
    return _ACTIVE["gtd8_decode"](np.ascontiguousarray(received, dtype=np.int64), q, scale)


def negacyclic_mul(a, b, q):
    return _ACTIVE["negacyclic_mul"](np.ascontiguousarray(a, dtype=np.int64),
                                     np.ascontiguousarray(b, dtype=np.int64), q)


def matvec(mat, vec, q, transpose=False):
    return _ACTIVE["matvec"](np.ascontiguousarray(mat, dtype=np.int64),
                             np.ascontiguousarray(vec, dtype=np.int64), q, transpose)


def sigma_states(values, d):
    return _ACTIVE["sigma_states"](np.ascontiguousarray(values, dtype=np.int64),
                                   np.ascontiguousarray(d, dtype=np.int64))


def log_mgf_outer(values, logp, d, table, table_off):
    return float(_ACTIVE["log_mgf_outer"](np.ascontiguousarray(values, dtype=np.int64),
                                          np.ascontiguousarray(logp, dtype=np.float64),
                                          np.ascontiguousarray(d, dtype=np.int64),
                                          np.ascontiguousarray(table, dtype=np.float64),
                                          int(table_off)))


def block_counts(values_a, weights_a, values_b, weights_b, n, ell, q):
    args = [np.ascontiguousarray(v, dtype=np.int64) for v in (values_a, weights_a, values_b, weights_b)]
    return _ACTIVE["block_counts"](*args, n, ell, q)


def nearest_offset(x, base, cands):
    return _ACTIVE["nearest_offset"](np.ascontiguousarray(x, dtype=np.float64),
                                     np.ascontiguousarray(base, dtype=np.float64),
                                     np.ascontiguousarray(cands, dtype=np.float64))
