import json

import numpy as np
import pytest

from torcode import codebooks as cbk
from torcode.torus import DimensionMismatchError, mod_pm_array

Q = 3329


@pytest.fixture(scope="module")
def books():
    return {name: cbk.build(name, Q) for name in cbk.CONSTRUCTIONS}


def test_sizes(books):
    assert {k: v.size for k, v in books.items()} == {"baseline": 2, "minal": 4, "gtd4": 16, "gtd8": 256, "mld": 16}
    for cb in books.values():
        assert cb.size == 2 ** cb.ell
        assert len(set(cb.codewords)) == cb.size


def test_gamma_star_values():
    assert [cbk.gamma_star(Q, l) for l in (2, 4, 8, 16)] == [446, 751, 981, 1157]


def test_minal_formula_matches_exhaustive_q3329():
    for ell in (2, 4, 8):
        g = cbk.gamma_star(Q, ell)
        assert cbk.build_minal(Q, ell, g).min_sqdist() == cbk.minal_dmin_sq_formula(Q, ell, g)


def test_minal_gamma_inversion():
    assert cbk.minal_gamma_for_ratio(Q, 0.547) == 740
    assert cbk.minal_gamma_for_ratio(Q, 0.517) == 440
    assert abs(cbk.build_minal(Q, 4, 740).dmin() / Q - 0.547) < 5e-4


def test_minal_circulant_structure():
    pts = cbk.minal_points(Q, 4, 751)
    # label with only bit 0 set maps to a*e0 + gamma*e1
    assert pts[1].tolist() == [1664, 751, 0, 0]
    assert pts[8].tolist() == [751, 0, 0, 1664]


def test_minal_guards():
    with pytest.raises(cbk.CodebookError):
        cbk.build_minal(Q, 2, 1665)
    with pytest.raises(cbk.CodebookError):
        cbk.build_minal(Q, 3, 10)
    with pytest.raises(cbk.CodebookError):
        cbk.build("hexagonal", Q)


def test_mld_lee_distance(books):
    mld = books["mld"]
    assert mld.params["lee_dmin"] == 4
    base = np.array(mld.codewords) // mld.params["scale"]
    lee = np.abs(mod_pm_array(base[:, None, :] - base[None, :, :], 5)).sum(axis=2)
    np.fill_diagonal(lee, 99)
    assert lee.min() == 4


def test_gtd_codewords_are_scaled_lattice_points(books):
    from torcode import lattice
    g4, g8 = books["gtd4"], books["gtd8"]
    assert lattice.member_mask(lattice.d4(), np.array(g4.codewords) // 554).all()
    assert (np.array(g4.codewords) % 554 == 0).all()
    assert lattice.member_mask(lattice.e8_doubled(), np.array(g8.codewords) // 832).all()


def test_json_round_trip(books):
    for cb in books.values():
        obj = json.loads(cb.dumps())
        assert obj["schema"] == cbk.SCHEMA
        assert cbk.Codebook.from_json(obj) == cb


def test_encode_decode_bits(books):
    for cb in books.values():
        for label in range(0, cb.size, max(1, cb.size // 16)):
            bits = cbk.label_to_bits(label, cb.ell)
            assert cbk.decode(cb, cbk.encode(cb, bits)) == bits
    with pytest.raises(DimensionMismatchError):
        cbk.encode(books["minal"], (1, 0, 1))


def test_bits_label_helpers():
    assert cbk.bits_to_label((1, 0, 1)) == 5
    assert cbk.label_to_bits(5, 3) == (1, 0, 1)


def test_decode_is_nearest(books):
    rng = np.random.default_rng(5)
    for name in ("minal", "gtd4", "mld"):
        cb = books[name]
        r = rng.integers(0, Q, size=(500, cb.ell))
        lab = cbk.decode_labels(cb, r)
        pts = np.array(cb.codewords)
        d = (mod_pm_array(r[:, None, :] - pts[None], Q) ** 2).sum(axis=2)
        assert (d[np.arange(len(r)), lab] == d.min(axis=1)).all()


def test_gtd8_fast_decoder_agrees(books):
    rng = np.random.default_rng(6)
    cb = books["gtd8"]
    r = rng.integers(0, Q, size=(3000, 8))
    assert (cbk.decode_fast_gtd8(cb, r) == cbk.decode_labels(cb, r)).mean() > 0.999
