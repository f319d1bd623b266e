"""Numba vs numpy timing for the hot kernels.

Both backends run on identical inputs; outputs are compared before timing so
a speedup is only reported for kernels that agree.
"""
from __future__ import annotations

import time

import numpy as np

from . import kernels
from ._accel import HAS_NUMBA


def _cases(rng):
    q = 3329
    pts = rng.integers(0, q, size=(400, 4))
    cw = rng.integers(0, q, size=(256, 8))
    recv = rng.integers(0, q, size=(2000, 8))
    a = rng.integers(0, q, size=256)
    b = rng.integers(-3, 4, size=256)
    mat = rng.integers(0, q, size=(3, 3, 256))
    vec = rng.integers(-2, 3, size=(3, 256))
    x = rng.uniform(0, 4, size=(5000, 8))
    vals = np.arange(-2, 3)
    logp = np.log(np.array([1, 4, 6, 4, 1]) / 16.0)
    table = np.zeros(41)
    return {
        "min_pair_sqdist": (pts, q),
        "nearest_index": (cw, recv, q),
        "cvp_2e8": (x,),
        "gtd8_decode": (recv, q, 832),
        "negacyclic_mul": (a, b, q),
        "matvec": (mat, vec, q, False),
        "sigma_states": (vals, np.array([1, 0, -1, 2])),
        "log_mgf_outer": (vals, logp, np.array([1, 0, -1, 2]), table, 20),
        "best_four_point": (11,),
    }


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(a, b) for a, b in zip(x, y))
    x, y = np.asarray(x), np.asarray(y)
    if x.dtype.kind == "f" or y.dtype.kind == "f":
        return x.shape == y.shape and bool(np.allclose(x, y, rtol=1e-9, atol=1e-9))
    return x.shape == y.shape and bool(np.array_equal(x, y))


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def run(repeat: int = 5, seed: int = 0, names=None) -> list[dict]:
    """Best-of-``repeat`` wall time per kernel and backend."""
    rng = np.random.default_rng(seed)
    rows = []
    for name, args in _cases(rng).items():
        if names and name not in names:
            continue
        np_fn = kernels.IMPLS["numpy"][name]
        row = {"kernel": name, "numpy_s": _time(np_fn, args, repeat)}
        if HAS_NUMBA:
            nb_fn = kernels.IMPLS["numba"][name]
            out_nb = nb_fn(*args)  # compile and warm up
            row["agree"] = _same(out_nb, np_fn(*args))
            row["numba_s"] = _time(nb_fn, args, repeat)
            row["speedup"] = row["numpy_s"] / row["numba_s"] if row["numba_s"] > 0 else float("inf")
        rows.append(row)
    return rows


def format_rows(rows) -> str:
    lines = [f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  agree"]
    for r in rows:
        nb = r.get("numba_s")
        lines.append(f"{r['kernel']:<18}{1e3 * r['numpy_s']:>12.3f}"
                     f"{(1e3 * nb if nb is not None else float('nan')):>12.3f}"
                     f"{r.get('speedup', float('nan')):>10.1f}  {r.get('agree', '-')}")
    return "\n".join(lines)
