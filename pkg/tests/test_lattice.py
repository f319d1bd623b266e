import numpy as np
import pytest

from torcode import lattice


def test_counts_mod_p():
    d4 = lattice.d4()
    for p in (2, 4, 6, 8):
        assert len(lattice.enumerate_mod_p(d4, p)) == p ** 4 // 2
    assert len(lattice.enumerate_mod_p(lattice.e8_doubled(), 4)) == 256


def test_specs_validated():
    e8 = lattice.e8_doubled()
    assert e8.det == 256 and e8.dmin == 8
    assert lattice.shortest_sqnorm(e8) == 8
    assert lattice.shortest_sqnorm(lattice.d4()) == 2
    assert lattice.contains_sublattice_pZ(e8, 4)
    assert not lattice.contains_sublattice_pZ(e8, 2)


def test_membership():
    e8 = lattice.e8_doubled()
    assert lattice.is_member(e8, [2, 2, 0, 0, 0, 0, 0, 0])
    assert lattice.is_member(e8, [1] * 8)
    assert lattice.is_member(e8, [4, 0, 0, 0, 0, 0, 0, 0])
    assert not lattice.is_member(e8, [1, 1, 0, 0, 0, 0, 0, 0])
    assert not lattice.is_member(e8, [2, 0, 0, 0, 0, 0, 0, 0])
    assert lattice.is_member(lattice.d4(), [1, 1, 0, 0])
    assert not lattice.is_member(lattice.d4(), [1, 0, 0, 0])


def test_budget_guard():
    with pytest.raises(lattice.BudgetExceededError):
        lattice.enumerate_mod_p(lattice.integer_lattice(8), 32)


def test_cvp_fast_is_member_and_local():
    rng = np.random.default_rng(3)
    x = rng.normal(scale=5, size=(2000, 8))
    y = lattice.cvp_e8_fast(x)
    assert lattice.member_mask(lattice.e8_doubled(), y).all()
    # covering radius of 2E8 is 2
    assert (((x - y) ** 2).sum(axis=1) <= 4 + 1e-9).all()


def test_cvp_rejects_non_finite():
    with pytest.raises(ValueError):
        lattice.cvp_e8_fast([np.nan] * 8)
