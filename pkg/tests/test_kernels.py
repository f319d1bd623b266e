"""Numba and numpy kernels must agree exactly on the same inputs."""
import numpy as np
import pytest

from torcode import kernels
from torcode._accel import HAS_NUMBA

pytestmark = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")

NB, NP = kernels.IMPLS["numba"], kernels.IMPLS["numpy"]


def _eq(a, b):
    if isinstance(a, tuple):
        return all(_eq(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind == "f":
        return np.allclose(a, b, rtol=1e-12, atol=1e-12)
    return np.array_equal(a, b)


def test_same_kernel_names():
    assert set(NB) == set(NP)


def test_parity_integer_kernels():
    rng = np.random.default_rng(0)
    q = 3329
    pts = rng.integers(0, q, size=(60, 4))
    cw = rng.integers(0, q, size=(16, 4))
    recv = rng.integers(0, q, size=(300, 4))
    a, b = rng.integers(0, q, 64), rng.integers(-3, 4, 64)
    mat, vec = rng.integers(0, q, (2, 2, 16)), rng.integers(-2, 3, (2, 16))
    cases = {
        "min_pair_sqdist": (pts, q),
        "nearest_index": (cw, recv, q),
        "gtd8_decode": (rng.integers(0, q, (300, 8)), q, 832),
        "negacyclic_mul": (a, b, q),
        "negacyclic_mul_int": (rng.integers(-5, 6, 32), rng.integers(-5, 6, 32)),
        "matvec": (mat, vec, q, False),
        "sigma_states": (np.arange(-2, 3), np.array([3, -1, 0, 2])),
        "best_four_point": (7,),
    }
    for name, args in cases.items():
        assert _eq(NB[name](*args), NP[name](*args)), name
    assert _eq(NB["matvec"](mat, vec, q, True), NP["matvec"](mat, vec, q, True))


def test_parity_float_kernels():
    rng = np.random.default_rng(1)
    x = rng.uniform(-8, 8, (500, 8))
    assert _eq(NB["cvp_2e8"](x), NP["cvp_2e8"](x))
    vals = np.arange(-2, 3)
    logp = np.log(np.array([1, 4, 6, 4, 1]) / 16)
    table = rng.normal(size=81)
    d = np.array([2, -1, 3, 1])
    assert _eq(NB["log_mgf_outer"](vals, logp, d, table, 40), NP["log_mgf_outer"](vals, logp, d, table, 40))
    base = np.rint(x / 2) * 2
    cands = rng.integers(-2, 3, (40, 8)).astype(np.float64)
    assert _eq(NB["nearest_offset"](x, base, cands), NP["nearest_offset"](x, base, cands))


def test_parity_block_counts():
    args = (np.array([-1, 0, 1]), np.array([1, 2, 1]), np.array([-1, 0, 1]), np.array([1, 2, 1]), 4, 2, 17)
    assert _eq(NB["block_counts"](*args), NP["block_counts"](*args))


def test_env_flag_selects_numpy(monkeypatch):
    import importlib
    import torcode._accel as accel
    monkeypatch.setenv("TORCODE_DISABLE_NUMBA", "1")
    importlib.reload(accel)
    try:
        assert not accel.USE_NUMBA and accel.backend_name() == "numpy"
    finally:
        monkeypatch.delenv("TORCODE_DISABLE_NUMBA")
        importlib.reload(accel)
