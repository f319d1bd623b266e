from fractions import Fraction
from math import comb

import numpy as np
import pytest
from scipy.stats import binom

from torcode.noise import dist_cbd
from torcode.probdist import ProbDist


def _rand_dist(rng, n, lo):
    return ProbDist.from_fractions({lo + i: Fraction(int(w), 1000) for i, w in enumerate(rng.multinomial(1000, [1 / n] * n))})


def test_cbd_exact():
    b2 = dist_cbd(2)
    assert {k: b2.mass(k) for k in range(-2, 3)} == {-2: Fraction(1, 16), -1: Fraction(4, 16), 0: Fraction(6, 16),
                                                     1: Fraction(4, 16), 2: Fraction(1, 16)}
    assert b2.mean() == 0 and b2.variance() == 1
    assert dist_cbd(1).as_dict() == {-1: 1 << 446, 0: 1 << 447, 1: 1 << 446}
    with pytest.raises(ValueError):
        dist_cbd(4)


def test_conservation_and_validation():
    with pytest.raises(ValueError):
        ProbDist.from_fractions({0: Fraction(3, 4), 1: Fraction(1, 2)})
    with pytest.raises(ValueError):
        ProbDist.from_int_masses({0: -1})
    d = ProbDist.from_fractions({0: Fraction(1, 3), 1: Fraction(1, 3)})
    assert d.total() + d.pruned_mass == 1


def test_convolution_commutative_associative():
    rng = np.random.default_rng(0)
    for _ in range(5):
        a, b, c = (_rand_dist(rng, int(rng.integers(2, 9)), int(rng.integers(-5, 5))) for _ in range(3))
        assert (a * b).as_dict() == (b * a).as_dict()
        ab_c, a_bc = (a * b) * c, a * (b * c)
        # floor rounding can differ by a few units in the last place only
        keys = set(ab_c.as_dict()) | set(a_bc.as_dict())
        assert max(abs(ab_c.as_dict().get(k, 0) - a_bc.as_dict().get(k, 0)) for k in keys) <= 4
        for r in (a * b, ab_c):
            assert r.total_int() + r.pruned == 1 << r.prec


def test_convolution_exact_small_case():
    b1 = dist_cbd(1)
    assert (b1 * b1).as_dict() == dist_cbd(2).as_dict()
    assert b1.self_convolve(3).as_dict() == dist_cbd(3).as_dict()


def test_binomial_tail_matches_scipy():
    # beta_2^{*1024} = Binomial(4096, 1/2) - 2048
    d = dist_cbd(2).self_convolve(1024)
    t = 500
    exact = Fraction(sum(comb(4096, k) for k in range(2048 + t, 4097)), 1 << 4096)
    got = d.tail_ge(t)
    assert exact <= got < exact + Fraction(1, 1 << 380)
    ref = binom.logsf(2048 + t - 1, 4096, 0.5) / np.log(2)
    assert abs(np.log2(float(got)) - ref) < 1e-6


def test_tail_includes_pruned():
    d = ProbDist.from_fractions({0: Fraction(1, 2), 5: Fraction(1, 2) - Fraction(1, 1 << 420)})
    assert d.pruned == 1 << 28
    assert d.tail_ge(6) == d.pruned_mass
    assert d.tail_ge(0) == 1


def test_pruning_edges_only():
    masses = {0: Fraction(1, 1 << 420), 1: Fraction(1, 2), 2: Fraction(1, 1 << 420), 3: Fraction(1, 2) - Fraction(1, 1 << 419)}
    d = ProbDist.from_fractions(masses).prune()
    assert d.lo == 1 and d.hi == 3
    assert d.mass(2) == Fraction(1, 1 << 420)
    assert d.total_int() + d.pruned == 1 << 448


def test_scale_negate_shift():
    b = dist_cbd(1)
    assert b.scale(3).as_dict() == {-3: 1 << 446, 0: 1 << 447, 3: 1 << 446}
    assert b.scale(0).as_dict() == {0: 1 << 448}
    a = ProbDist.from_fractions({1: Fraction(1, 4), 2: Fraction(3, 4)})
    assert a.negate().as_dict() == {-2: 3 << 446, -1: 1 << 446}
    assert a.shift(10).support() == [11, 12]
    assert a.scale(-2).support() == [-4, -2]


def test_point_and_tail_semantics():
    p = ProbDist.point(0)
    assert p.tail_ge(1) == 0
    u = ProbDist.from_fractions({-1: Fraction(1, 2), 1: Fraction(1, 2)})
    assert u.tail_ge(1) == Fraction(1, 2)
    assert u.tail_ge(Fraction(1, 2)) == Fraction(1, 2)


def test_log2_masses():
    lm = dist_cbd(2).log2_masses()
    assert np.allclose(lm, np.log2([1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16]))
