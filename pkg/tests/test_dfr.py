import json
import math
from fractions import Fraction

import pytest

from torcode import codebooks as cbk
from torcode.dfr import (InfeasibleError, clopper_pearson, dfr_monte_carlo, dfr_union_bound, lifts_of,
                         p_error_chernoff, p_error_exact, pair_differences)
from torcode.noise import dist_cbd
from torcode.pke import make_params
from torcode.probdist import ProbDist


def tiny(cb, **kw):
    vals = dict(k=1, eta1=1, eta2=1, du=7, dv=4)
    vals.update(kw)
    return make_params("kyber512", cb, q=257, n=8, **vals)


def test_p_error_exact_examples():
    assert p_error_exact(ProbDist.point(0), 1) == 0
    u = ProbDist.from_fractions({-1: Fraction(1, 2), 1: Fraction(1, 2)})
    assert p_error_exact(u, 1) == Fraction(1, 2)


def test_chernoff_examples():
    b = dist_cbd(2)
    assert p_error_chernoff([(b, 1)], 1, t_grid=[0.0]) == 1
    big = b.self_convolve(1024)
    exact = p_error_exact(big, 256)  # 8 sigma
    ch = p_error_chernoff([(b, 1024)], 256)
    assert float(exact) <= ch <= float(exact) * 2 ** 10


def test_lifts():
    assert lifts_of((1664,), 3329) == [(-1665,), (1664,)]
    assert lifts_of((100, 0), 3329) == [(100, 0)]
    assert lifts_of((1664, 446), 3329, "single") == [(1664, 446)]
    with pytest.raises(ValueError):
        lifts_of((1,), 5, "all")


def test_pair_differences_counts():
    cb = cbk.build_gtd4(3329)
    assert sum(c for _, c in pair_differences(cb)) == 16 * 15
    assert len(pair_differences(cb, group=False)) == 16 * 15


@pytest.mark.parametrize("cb", [cbk.build_baseline(257), cbk.build_minal(257, 2, cbk.gamma_star(257, 2))])
def test_grouped_equals_ungrouped(cb):
    p = tiny(cb)
    a = dfr_union_bound(p, method="exact", group=True)
    b = dfr_union_bound(p, method="exact", group=False)
    assert a.log2_dfr == b.log2_dfr


def test_chernoff_dominates_exact_every_pair():
    for cb in (cbk.build_baseline(257), cbk.build_minal(257, 2, cbk.gamma_star(257, 2)), cbk.build_gtd4(257)):
        rep = dfr_union_bound(tiny(cb, du=6, dv=3), method="both")
        for r in rep.records:
            # the exact tail is an upper bound; only tail - pruned is a certified lower bound
            gap = r.exact_log2 - r.pruned_log2
            if gap > 1:
                lower = r.exact_log2 + math.log2(1 - 2 ** -gap)
                assert r.chernoff_log2 >= lower - 1e-9
        assert rep.log2_dfr_chernoff >= rep.log2_dfr


def test_report_fields_and_determinism():
    cb = cbk.build_minal(257, 2, cbk.gamma_star(257, 2))
    a = dfr_union_bound(tiny(cb), method="exact", workers=1)
    b = dfr_union_bound(tiny(cb), method="exact", workers=2)
    assert a.log2_dfr == b.log2_dfr
    assert [r.exact_log2 for r in a.records] == [r.exact_log2 for r in b.records]
    obj = json.loads(a.to_json())
    assert obj["schema"] == "torcode.dfr/1" and obj["ell"] == 2
    assert a.to_csv().splitlines()[0].split(",")[:6] == ["construction", "ell", "du", "dv", "d_min_over_q", "log2_dfr"]
    assert math.isfinite(a.log2_dfr) and a.log2_dfr < 0


def test_exact_l8_needs_allow_long():
    with pytest.raises(InfeasibleError):
        dfr_union_bound(make_params("kyber1024", cbk.build_gtd8(3329)), method="exact")


def test_bound_dominates_simulation_tiny():
    cb = cbk.build_minal(257, 2, cbk.gamma_star(257, 2))
    p = tiny(cb, k=2, eta1=3, eta2=3, du=5, dv=3)
    bound = 2 ** dfr_union_bound(p, method="exact").log2_dfr
    mc = dfr_monte_carlo(p, trials=20000, seed=1)
    assert mc.failures > 0
    assert mc.ci_low <= bound


def test_clopper_pearson():
    lo, hi = clopper_pearson(0, 1000)
    assert lo == 0 and abs(hi - (1 - 0.005 ** (1 / 1000))) < 1e-12
    assert abs(hi * 1000 - 5.3) < 0.05
    lo, hi = clopper_pearson(50, 1000)
    assert lo < 0.05 < hi


def test_monte_carlo_seeded():
    p = make_params("stressed", cbk.build_baseline(3329))
    a = dfr_monte_carlo(p, trials=300, seed=7)
    b = dfr_monte_carlo(p, trials=300, seed=7)
    assert a.failures == b.failures
    s = dfr_monte_carlo(p, trials=40, seed=7, engine="scalar")
    assert s.engine == "scalar" and 0 <= s.failures <= 40
    with pytest.raises(ValueError):
        dfr_monte_carlo(p, trials=0)
