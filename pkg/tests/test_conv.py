from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kneserkit import _ntt
from kneserkit.conv import (
    as_fraction,
    convolve,
    difference_profile,
    iterated_sumset,
    partial_sumset,
    sumset,
)
from kneserkit.group import EmptySetError, GroupMismatchError, GroupSet, bohr, make_group

from . import oracles
from .conftest import random_set
from .strategies import group_and_sets


def S(g, xs):
    return GroupSet.from_indices(g, xs)


class TestConvolve:
    def test_examples(self):
        g = make_group([5])
        assert list(convolve(S(g, [0]), S(g, [0])).counts) == [1, 0, 0, 0, 0]
        assert list(convolve(S(g, [0, 1]), S(g, [0, 2])).counts) == [1, 1, 1, 1, 0]
        g7 = make_group([7])
        b = S(g7, [1, 4, 5])
        assert list(convolve(GroupSet.full(g7), b).counts) == [3] * 7

    @given(group_and_sets(count=2, nonempty=False))
    def test_matches_double_loop(self, gs):
        g, a, b = gs
        prof = convolve(a, b)
        assert list(prof.counts) == oracles.counts(g.dims, a.members(), b.members())

    @given(group_and_sets(count=2, nonempty=False))
    def test_invariants(self, gs):
        g, a, b = gs
        prof = convolve(a, b)
        assert prof.mass == a.cardinality * b.cardinality
        assert prof.counts.min() >= 0
        assert prof.counts.max() <= min(a.cardinality, b.cardinality)
        assert prof == convolve(b, a)
        for x in (0, g.total_size - 1):
            assert prof.normalized(x) == Fraction(int(prof.counts[x]), g.total_size)

    @given(group_and_sets(count=2, nonempty=False))
    def test_ntt_matches_direct(self, gs):
        _, a, b = gs
        assert convolve(a, b, "ntt") == convolve(a, b, "direct")

    @pytest.mark.parametrize("n", [64, 1000, 4096])
    def test_ntt_matches_direct_random(self, n):
        rng = np.random.default_rng(n)
        g = make_group([n])
        for _ in range(200):
            a = random_set(g, rng)
            b = random_set(g, rng, p=rng.uniform(0.001, 0.05))
            assert convolve(a, b, "ntt") == convolve(a, b, "direct")

    def test_two_prime_path(self):
        # counts beyond the first prime force the CRT reconstruction
        a = np.full(8, 10**6, dtype=np.int64)
        b = np.full(8, 10**6, dtype=np.int64)
        out = _ntt.cyclic_convolve(a, b)
        assert out.tolist() == [8 * 10**12] * 8
        with pytest.raises(ValueError):
            _ntt.cyclic_convolve(np.zeros(3, dtype=np.int64), np.zeros(4, dtype=np.int64))

    def test_multi_dim(self):
        g = make_group([4, 6, 3])
        rng = np.random.default_rng(3)
        for _ in range(5):
            a, b = random_set(g, rng), random_set(g, rng)
            assert convolve(a, b, "ntt") == convolve(a, b, "direct")

    def test_mismatch_and_method(self):
        with pytest.raises(GroupMismatchError):
            convolve(S(make_group([5]), [0]), S(make_group([7]), [0]))
        with pytest.raises(ValueError):
            convolve(S(make_group([5]), [0]), S(make_group([5]), [0]), "fft")


class TestSumsets:
    def test_examples(self):
        g = make_group([5])
        assert sumset(S(g, [0, 1]), S(g, [0, 1])).members() == [0, 1, 2]
        a = S(g, [1, 3])
        assert sumset(a, S(g, [0])) == a
        with pytest.raises(EmptySetError):
            sumset(a, GroupSet.empty(g))

    @pytest.mark.parametrize("a,b", [(10, 10), (1, 97), (30, 41), (48, 50)])
    def test_interval_sum(self, a, b):
        g = make_group([97])
        s = sumset(GroupSet.interval(g, 0, a), GroupSet.interval(g, 0, b))
        assert s == GroupSet.interval(g, 0, min(97, a + b - 1))

    @given(group_and_sets(count=2))
    def test_sumset_matches_oracle(self, gs):
        g, a, b = gs
        assert set(sumset(a, b).members()) == oracles.sumset(g.dims, a.members(), b.members())

    def test_partial_examples(self):
        g = make_group([12])
        a = GroupSet.interval(g, 0, 3)
        assert partial_sumset(a, a, Fraction(2, 12)).members() == [1, 2, 3]
        full = GroupSet.full(g)
        assert partial_sumset(full, full, 1) == full
        assert partial_sumset(a, a, Fraction(1, 12)) == sumset(a, a)
        for bad in (0, Fraction(13, 12), -1):
            with pytest.raises(ValueError):
                partial_sumset(a, a, bad)

    @given(group_and_sets(count=2), st.data())
    def test_partial_monotone(self, gs, data):
        g, a, b = gs
        n = g.total_size
        k1 = data.draw(st.integers(1, n))
        k2 = data.draw(st.integers(k1, n))
        hi, lo = partial_sumset(a, b, Fraction(k2, n)), partial_sumset(a, b, Fraction(k1, n))
        assert hi.issubset(lo)
        assert lo.issubset(sumset(a, b))

    def test_iterated(self):
        g = make_group([100])
        c = GroupSet.interval(g, 0, 7)
        assert iterated_sumset(c, 1) == c
        for k in range(1, 8):
            assert iterated_sumset(c, k) == GroupSet.interval(g, 0, k * 6 + 1)
        with pytest.raises(ValueError):
            iterated_sumset(c, 0)

    def test_iterated_bohr(self):
        g = make_group([60])
        c = bohr(g, 1, 5, 8)
        for k in range(1, 8):
            assert iterated_sumset(c, k) == bohr(g, 1, 5 * k, min(60, k * 7 + 1))


class TestDifferenceProfile:
    def test_examples(self):
        g = make_group([5])
        assert list(difference_profile(S(g, [0])).counts) == [1, 0, 0, 0, 0]
        assert list(difference_profile(S(g, [0, 1])).counts) == [2, 1, 0, 0, 1]
        assert list(difference_profile(GroupSet.full(g)).counts) == [5] * 5
        with pytest.raises(EmptySetError):
            difference_profile(GroupSet.empty(g))

    @given(group_and_sets(count=1))
    def test_even_and_overlap(self, gs):
        g, a = gs
        c = difference_profile(a).counts
        assert c[0] == a.cardinality
        for x in g.elements():
            assert c[x] == c[g.neg(x)]
            assert c[x] == (a & a.translate(x)).cardinality


def test_as_fraction():
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction("3/7") == Fraction(3, 7)
    assert as_fraction(2) == 2
