from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kneserkit.group import EmptySetError, GroupSet, make_group
from kneserkit.inequalities import (
    BoundReport,
    ConnectednessWarning,
    EqualityCase,
    check_kneser,
    check_partial_bound,
    classify_equality,
    exhaustive_submodularity,
    ruzsa_functional,
    sqrt_upper,
    submodularity_defect,
)

from . import oracles
from .conftest import random_set
from .strategies import group_and_sets

PRIMES = st.sampled_from([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31])


@st.composite
def prime_pair(draw):
    p = draw(PRIMES)
    return draw(group_and_sets(count=2, dims=st.just([p])))


def iv(g, start, length):
    return GroupSet.interval(g, start, length)


class TestBoundReport:
    def test_holds_iff_defect_nonnegative(self):
        assert BoundReport("x", Fraction(1, 2), Fraction(1, 3)).holds
        assert not BoundReport("x", Fraction(1, 4), Fraction(1, 3)).holds
        r = BoundReport("x", Fraction(1, 3), Fraction(1, 3))
        assert r.holds and r.defect == 0
        assert r.to_json()["defect"] == "0"


class TestKneser:
    def test_interval_equality(self):
        g = make_group([97])
        r = check_kneser(iv(g, 0, 10), iv(g, 0, 10))
        assert r.defect == 0 and r.details["sumset_size"] == 19 and not r.caveat

    def test_full_group(self):
        g = make_group([97])
        r = check_kneser(GroupSet.full(g), GroupSet.full(g))
        assert r.lhs == 1 and r.rhs == 1 and r.holds

    def test_subgroup_violation_is_flagged(self):
        g = make_group([6])
        h = GroupSet.from_indices(g, [0, 2, 4])
        with pytest.warns(ConnectednessWarning):
            r = check_kneser(h, h)
        assert not r.holds and r.caveat
        assert r.details["sumset_size"] == 3

    def test_empty(self):
        g = make_group([5])
        with pytest.raises(EmptySetError):
            check_kneser(GroupSet.empty(g), GroupSet.full(g))

    @given(prime_pair())
    def test_cauchy_davenport(self, gs):
        g, a, b = gs
        r = check_kneser(a, b)
        size = len(oracles.sumset(g.dims, a.members(), b.members()))
        assert r.lhs == Fraction(size, g.total_size)
        assert r.holds and not r.caveat


class TestRuzsa:
    def test_zero_threshold(self):
        g = make_group([97])
        r = ruzsa_functional(iv(g, 0, 5), iv(g, 10, 7), 0)
        assert r.lhs == 0 and r.rhs == 0

    def test_saturated_small_set(self):
        g = make_group([97])
        a, b = GroupSet.from_indices(g, [0, 1]), GroupSet.from_indices(g, [0, 1, 2])
        r = ruzsa_functional(a, b, Fraction(2, 97))
        c = oracles.counts(g.dims, a.members(), b.members())
        assert r.lhs == Fraction(sum(min(v, 2) for v in c), 97 * 97)
        assert r.defect == 0

    def test_half_intervals(self):
        g = make_group([97])
        a = iv(g, 0, 48)
        r = ruzsa_functional(a, a, Fraction(10, 97))
        c = oracles.counts(g.dims, a.members(), a.members())
        assert r.lhs == Fraction(sum(min(v, 10) for v in c), 97 * 97)
        assert r.holds

    def test_range_checks(self):
        g = make_group([97])
        a = iv(g, 0, 5)
        with pytest.raises(ValueError):
            ruzsa_functional(a, a, Fraction(6, 97))
        with pytest.raises(ValueError):
            ruzsa_functional(a, a, Fraction(1, 194))

    @given(prime_pair(), st.data())
    def test_pollard_on_primes(self, gs, data):
        g, a, b = gs
        p = g.total_size
        k = data.draw(st.integers(0, min(a.cardinality, b.cardinality)))
        r = ruzsa_functional(a, b, Fraction(k, p))
        assert r.holds
        assert r.holds == oracles.pollard_holds(p, set(a.members()), set(b.members()), k)


class TestPartialBound:
    def test_sqrt_upper(self):
        for x in (Fraction(1, 3), Fraction(2), Fraction(4, 1009), Fraction(1, 10**12)):
            s = sqrt_upper(x)
            assert s * s >= x
            assert s - Fraction(math.sqrt(x)) < Fraction(1, 10**12)

    def test_intervals_1009(self):
        g = make_group([1009])
        a = iv(g, 0, 200)
        eps = Fraction(4, 1009)
        r = check_partial_bound(a, a, eps)
        c = np.array(oracles.counts(g.dims, a.members(), a.members()))
        size = int(np.count_nonzero(c * 1009 >= eps * 1009 * 1009))
        assert r.lhs == Fraction(size, 1009)
        assert r.rhs == Fraction(400, 1009) - 2 * sqrt_upper(eps) - Fraction(2, 1009)
        assert r.holds

    def test_full(self):
        g = make_group([31])
        r = check_partial_bound(GroupSet.full(g), GroupSet.full(g), Fraction(1, 2))
        assert r.lhs == 1 and r.holds

    def test_eps_range(self):
        g = make_group([31])
        a = iv(g, 0, 3)
        with pytest.raises(ValueError):
            check_partial_bound(a, a, Fraction(9, 961))
        with pytest.raises(ValueError):
            check_partial_bound(a, a, 0)

    @given(prime_pair(), st.data())
    def test_never_violated_on_primes(self, gs, data):
        g, a, b = gs
        n = g.total_size
        lo = min(a.cardinality, b.cardinality)
        if lo < 2:
            return
        eps = Fraction(data.draw(st.integers(1, lo * lo - 1)), n * n)
        assert check_partial_bound(a, b, eps).holds


class TestSubmodularity:
    def test_identical(self):
        g = make_group([11])
        rng = np.random.default_rng(0)
        a, b = random_set(g, rng), random_set(g, rng)
        r = submodularity_defect(a, a, b, Fraction(3, 11))
        assert r.lhs == 0 and r.details["integrated_defect"] == 0

    def test_disjoint_with_point(self):
        g = make_group([11])
        a1, a2 = GroupSet.from_indices(g, [0, 1]), GroupSet.from_indices(g, [5, 7])
        r = submodularity_defect(a1, a2, GroupSet.from_indices(g, [0]), Fraction(3, 11))
        assert r.holds

    @given(group_and_sets(count=3, dims=st.just([11]), nonempty=False), st.integers(1, 11))
    def test_random_z11(self, gs, k):
        g, a1, a2, b = gs
        r = submodularity_defect(a1, a2, b, Fraction(k, 11))
        assert r.holds
        # integer oracle for the pointwise minimum
        cs = [oracles.counts(g.dims, s.members(), b.members()) for s in (a1, a2, a1 & a2, a1 | a2)]
        pts = [min(c1, k) + min(c2, k) - min(c3, k) - min(c4, k) for c1, c2, c3, c4 in zip(*cs)]
        assert r.lhs == Fraction(min(pts), 11)

    def test_non_integral_threshold(self):
        g = make_group([6])
        a1, a2, b = (GroupSet.from_indices(g, s) for s in ([0, 1], [1, 2], [0, 3]))
        assert submodularity_defect(a1, a2, b, Fraction(1, 4)).holds

    def test_exhaustive_small(self):
        out = exhaustive_submodularity(4)
        assert out["violations"] == 0 and out["min_pointwise_defect"] >= 0
        assert out["triples_times_t"] == 16**3 * 4


class TestClassify:
    def test_singleton(self):
        g = make_group([97])
        assert classify_equality(GroupSet.from_indices(g, [5]), iv(g, 10, 30)) is EqualityCase.MEASURE_ZERO

    def test_full_measure(self):
        g = make_group([97])
        a, b = iv(g, 0, 50), iv(g, 3, 60)
        assert classify_equality(a, b) is EqualityCase.FULL_MEASURE

    def test_intervals_parallel(self):
        g = make_group([97])
        assert classify_equality(iv(g, 3, 10), iv(g, 40, 20)) is EqualityCase.PARALLEL_BOHR

    def test_bohr_pair_other_frequency(self):
        from kneserkit.group import bohr

        g = make_group([101])
        a, b = bohr(g, 7, 3, 12), bohr(g, 7, 50, 20)
        assert classify_equality(a, b) is EqualityCase.PARALLEL_BOHR

    def test_non_extremal(self):
        g = make_group([97])
        rng = np.random.default_rng(5)
        a, b = random_set(g, rng, 0.1), random_set(g, rng, 0.1)
        assert check_kneser(a, b).defect > Fraction(1, 97)
        assert classify_equality(a, b) is EqualityCase.NON_EXTREMAL

    @given(prime_pair())
    def test_large_defect_is_non_extremal(self, gs):
        g, a, b = gs
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConnectednessWarning)
            d = check_kneser(a, b).defect
        if abs(d) > Fraction(1, g.total_size):
            assert classify_equality(a, b) is EqualityCase.NON_EXTREMAL
