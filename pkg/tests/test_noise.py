from fractions import Fraction

import pytest

from torcode import codebooks as cbk
from torcode import verify
from torcode.noise import (NoiseComponents, dist_cbd, dist_quant_u, dist_quant_v_plus_e2, noise_projection_dist,
                           predicted_variance, projected_product_bruteforce, projected_product_dist,
                           quant_error_counts, reduce_difference, verify_splitting)
from torcode.pke import make_params
from torcode.probdist import ProbDist


def test_quant_u_kyber():
    d = dist_quant_u(3329, 11)
    assert set(d.support()) <= {-1, 0, 1}
    # 1/q is not dyadic: flooring moves a sub-ulp remainder into pruned mass
    assert d.total() + d.pruned_mass == 1 and d.pruned_mass < Fraction(3, 2 ** 448)
    assert abs(d.mean()) <= Fraction(1, 3329)
    assert sum(quant_error_counts(3329, 10).values()) == 3329


def test_quant_v_plus_e2():
    d = dist_quant_v_plus_e2(3329, 5, 2)
    assert min(d.support()) >= -55 and max(d.support()) <= 55
    assert d.total() + d.pruned_mass == 1 and d.pruned_mass < Fraction(1, 2 ** 440)
    cv = dist_quant_u(3329, 5)
    assert abs(d.variance() - (cv.variance() + 1)) < Fraction(1, 2 ** 420)


@pytest.mark.parametrize("ell,d,phi", [
    (1, (1,), 1), (2, (1, 0), 1), (2, (1, -5), 1), (2, (0, 5), 2), (4, (1, 0, -5, 1), 1), (4, (1, 1, 0, 0), 2),
])
def test_projected_product_matches_bruteforce(ell, d, phi):
    a = dist_cbd(phi)
    b = dist_cbd(1)
    assert projected_product_dist(ell, d, a, b).as_dict() == projected_product_bruteforce(ell, d, a, b).as_dict()


def test_projected_product_asymmetric_inner():
    skew = ProbDist.from_fractions({0: Fraction(1, 2), 1: Fraction(1, 3), 2: Fraction(1, 6)})
    b1 = dist_cbd(1)
    for ell, d in ((2, (1, -2)), (4, (1, 0, 0, 3))):
        assert projected_product_dist(ell, d, b1, skew).as_dict() == projected_product_bruteforce(ell, d, b1, skew).as_dict()


def test_projected_product_edge_cases():
    b = dist_cbd(2)
    assert projected_product_dist(2, (0, 0), b, b).as_dict() == {0: 1 << 448}
    p = projected_product_dist(2, (3, 1), b, dist_cbd(1))
    assert p.as_dict() == p.negate().as_dict()
    with pytest.raises(ValueError):
        projected_product_dist(2, (1, 0, 0), b, b)


def test_reduce_difference():
    assert reduce_difference((1664, 0)) == ((1, 0), 1664)
    assert reduce_difference((0, 0)) == ((0, 0), 1)
    assert reduce_difference((-6, 4)) == ((-3, 2), 2)


def test_components_and_variance_additivity():
    params = make_params("kyber512", cbk.build_minal(3329, 2, 446))
    comp = NoiseComponents(params)
    assert comp.copies == 256
    d = (3, -1)
    dist = noise_projection_dist(params, d, comp)
    assert dist.total_int() + dist.pruned == 1 << dist.prec
    pred = predicted_variance(params, d, comp)
    # pruned tails make the retained variance a hair smaller
    assert abs(dist.variance() - pred) / pred < Fraction(1, 2 ** 60)


def test_splitting_oracle():
    rep = verify_splitting(4, 2, 17, dist_cbd(1))
    assert rep["identical"] and rep["pairs"] == 6561
    half = ProbDist.from_fractions({0: Fraction(1, 2), 1: Fraction(1, 2)})
    probe = verify_splitting(4, 2, 17, half)
    assert isinstance(probe["identical"], bool)
    with pytest.raises(ValueError):
        verify_splitting(4, 4, 17, dist_cbd(1))


def test_noise_histogram_checks():
    cb = cbk.build_minal(257, 2, cbk.gamma_star(257, 2))
    p = make_params("kyber512", cb, q=257, n=8, k=1, eta1=1, eta2=1, du=7, dv=4)
    model = verify.check_noise_histogram(p, [(1, 0), (1, 1)], samples=200_000, source="model", batch=50_000)
    assert model.passed, model.evidence
    # the real PKE keeps the parity pattern of the d_u = 7 grid at this size
    pke = verify.check_noise_histogram(p, [(1, 0)], samples=200_000, source="pke", batch=50_000)
    assert not pke.passed
    assert verify.check_variance_additivity(p, [(1, 0), (2, -1)]).passed
    with pytest.raises(ValueError):
        verify.check_noise_histogram(p, [(1, 0)], samples=10, source="other")
