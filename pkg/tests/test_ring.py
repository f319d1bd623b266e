import numpy as np
import pytest

from torcode.ring import (PolyVec, RingElement, RingMismatchError, ShakeStream, StreamExhaustedError, ZeroStream,
                          block_deinterleave, block_interleave, block_positions, cbd_poly, cbd_sample, compress,
                          decompress, poly_mul)


def _schoolbook(a, b, q):
    n = len(a)
    c = [0] * n
    for i in range(n):
        for j in range(n):
            s = 1 if i + j < n else -1
            c[(i + j) % n] += s * a[i] * b[j]
    return [x % q for x in c]


def test_negacyclic_product():
    rng = np.random.default_rng(0)
    for n in (1, 2, 8, 32):
        a, b = rng.integers(0, 3329, n), rng.integers(0, 3329, n)
        got = poly_mul(RingElement.from_array(a, 3329), RingElement.from_array(b, 3329))
        assert list(got.coeffs) == _schoolbook(a.tolist(), b.tolist(), 3329)


def test_x_to_the_n_is_minus_one():
    n, q = 8, 17
    x = RingElement.from_array([0, 1] + [0] * (n - 2), q)
    p = RingElement.from_array([1] + [0] * (n - 1), q)
    for _ in range(n):
        p = p * x
    assert p.coeffs == ((q - 1),) + (0,) * (n - 1)


def test_ring_checks():
    with pytest.raises(ValueError):
        RingElement(17, 3, (0, 0, 0))
    with pytest.raises(RingMismatchError):
        RingElement.from_array([1, 2], 17) + RingElement.from_array([1, 2], 19)
    with pytest.raises(RingMismatchError):
        PolyVec((RingElement.from_array([1, 2], 17), RingElement.from_array([1, 2, 3, 4], 17)))


def test_cbd_range_and_moments():
    s = cbd_poly(2, ShakeStream(b"seed"), 100_000)
    assert s.min() >= -2 and s.max() <= 2
    assert abs(s.mean()) < 0.02 and abs(s.var() - 1.0) < 0.02
    assert cbd_poly(3, ZeroStream(), 16).tolist() == [0] * 16
    with pytest.raises(ValueError):
        cbd_sample(4, ShakeStream(b"x"))


def test_stream_determinism_and_limit():
    assert ShakeStream(b"k").read(40) == ShakeStream(b"k").read(40)
    st = ShakeStream(b"k", limit=10)
    st.read(8)
    with pytest.raises(StreamExhaustedError):
        st.read(3)


def test_compress_round_trip_error():
    q = 3329
    x = np.arange(q)
    for d in (1, 4, 5, 10, 11):
        y = compress(x, d, q)
        assert y.min() >= 0 and y.max() < 2 ** d
        err = (decompress(y, d, q) - x + q // 2) % q - q // 2
        assert np.abs(err).max() <= (q + 2 ** (d + 1) - 1) // 2 ** (d + 1)
    assert compress(1665, 1, q) == 1 and decompress(1, 1, q) == 1665
    with pytest.raises(ValueError):
        compress(5, 12, q)


def test_scalar_matches_array():
    q = 3329
    for x in (0, 1, 832, 1664, 1665, 3328):
        assert compress(x, 10, q) == compress(np.array([x]), 10, q)[0]
        assert decompress(x % 1024, 10, q) == decompress(np.array([x % 1024]), 10, q)[0]


def test_block_layout():
    pos = block_positions(8, 2)
    assert pos.tolist() == [[0, 4], [1, 5], [2, 6], [3, 7]]
    m = np.arange(16)
    assert block_deinterleave(block_interleave(m, 4)).tolist() == m.tolist()
    with pytest.raises(ValueError):
        block_positions(8, 3)
