import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grouptest import (CoupledSample, InvalidParameterError, Prior, TestDesign,
                       coupling_prevalence, defective_mask, dumps_design,
                       loads_design, run_tests, sample_combinatorial,
                       sample_coupled, sample_iid, subdesign)

from .conftest import random_design


class TestTestDesign:
    def test_dual_consistency(self, rng):
        d = random_design(rng, n=9, T=7)
        for i in range(d.n):
            for t in range(d.T):
                assert (i in d.tests[t]) == (t in d.item_tests[i])

    def test_duplicates_collapse(self):
        d = TestDesign(4, [[1, 1, 2]])
        assert d.tests[0] == frozenset({1, 2})
        assert d.test_sizes.tolist() == [2]

    def test_index_validation(self):
        with pytest.raises(InvalidParameterError):
            TestDesign(3, [[0, 3]])
        with pytest.raises(InvalidParameterError):
            TestDesign(3, [[-1]])
        with pytest.raises(InvalidParameterError):
            TestDesign(0, [])

    def test_members_sorted(self):
        d = TestDesign(5, [[4, 0, 2]])
        assert d.test_members(0).tolist() == [0, 2, 4]

    def test_incidence_matrix(self):
        d = TestDesign(3, [[0, 1], [2]])
        expected = np.array([[True, True, False], [False, False, True]])
        assert np.array_equal(d.incidence(), expected)

    def test_empty_design(self):
        d = TestDesign(4, [])
        assert d.T == 0 and d.incidence_count == 0
        assert run_tests(d, {1}).shape == (0,)


class TestRunTests:
    def test_identity_reads_off_s(self):
        d = TestDesign(3, [[0], [1], [2]])
        assert run_tests(d, {1}).tolist() == [False, True, False]

    def test_hand_or_evaluation(self):
        d = TestDesign(3, [[0, 1], [1, 2]])
        assert run_tests(d, {1}).tolist() == [True, True]

    def test_empty_set_all_negative(self, rng):
        d = random_design(rng, n=8, T=6)
        assert not run_tests(d, frozenset()).any()

    def test_empty_test_is_negative(self):
        d = TestDesign(2, [[], [0, 1]])
        assert run_tests(d, {0}).tolist() == [False, True]

    def test_out_of_range_member(self):
        d = TestDesign(3, [[0, 1]])
        with pytest.raises(InvalidParameterError):
            run_tests(d, {5})

    @settings(max_examples=50, deadline=None)
    @given(data=st.data())
    def test_monotone_in_defectives(self, data):
        n, T = 8, 5
        seed = data.draw(st.integers(0, 2**32 - 1))
        gen = np.random.default_rng(seed)
        d = random_design(gen, n=n, T=T)
        small = data.draw(st.frozensets(st.integers(0, n - 1), max_size=n))
        extra = data.draw(st.frozensets(st.integers(0, n - 1), max_size=n))
        lo, hi = run_tests(d, small), run_tests(d, small | extra)
        assert not (lo & ~hi).any()

    def test_untested_items_invisible(self, rng):
        d = TestDesign(6, [[0, 1], [2]])
        tested = {0, 1, 2}
        for _ in range(20):
            s = frozenset(map(int, np.flatnonzero(rng.random(6) < 0.5)))
            assert np.array_equal(run_tests(d, s), run_tests(d, s & tested))


class TestSampleIid:
    def test_prevalence_validation(self, rng):
        for bad in (0.0, -0.1, 0.51, 1.0):
            with pytest.raises(InvalidParameterError):
                sample_iid(10, bad, rng)

    def test_vanishing_prevalence(self):
        gen = np.random.default_rng(7)
        assert sample_iid(10, 1e-12, gen) == frozenset()

    def test_binomial_concentration(self):
        n, p = 10**5, 0.1
        fractions = []
        for seed in range(100):
            gen = np.random.default_rng(seed)
            fractions.append(len(sample_iid(n, p, gen)) / n)
        assert all(abs(f - p) < 0.01 for f in fractions)

    def test_uniform_at_half(self):
        # iid(1/2) makes all 16 subsets of 4 items equally likely
        gen = np.random.default_rng(42)
        trials = 10**5
        counts = {}
        for _ in range(trials):
            s = sample_iid(4, 0.5, gen)
            counts[s] = counts.get(s, 0) + 1
        sigma = math.sqrt((1 / 16) * (15 / 16) / trials)
        for mask in range(16):
            members = frozenset(i for i in range(4) if (mask >> i) & 1)
            assert abs(counts.get(members, 0) / trials - 1 / 16) < 3 * sigma + 1e-9


class TestSampleCombinatorial:
    def test_cardinality_contract(self, rng):
        for _ in range(50):
            assert len(sample_combinatorial(4, 2, rng)) == 2

    def test_k_validation(self, rng):
        with pytest.raises(InvalidParameterError):
            sample_combinatorial(4, 0, rng)
        with pytest.raises(InvalidParameterError):
            sample_combinatorial(4, 3, rng)

    def test_single_defective_symmetry(self):
        gen = np.random.default_rng(3)
        trials = 2 * 10**4
        ones = sum(sample_combinatorial(2, 1, gen) == frozenset({0})
                   for _ in range(trials))
        sigma = math.sqrt(0.25 / trials)
        assert abs(ones / trials - 0.5) < 3 * sigma

    def test_uniform_over_pairs(self):
        gen = np.random.default_rng(11)
        trials = 10**5
        counts = {}
        for _ in range(trials):
            s = sample_combinatorial(5, 2, gen)
            counts[s] = counts.get(s, 0) + 1
        assert len(counts) == 10
        sigma = math.sqrt(0.1 * 0.9 / trials)
        for c in counts.values():
            assert abs(c / trials - 0.1) < 3 * sigma


def coupled_conditional_law(n, k, p0):
    """Exact conditional law of the coupled sampler given no overflow,
    by enumerating the first-stage draw (oracle for the symmetry claim)."""
    law = {}
    mass_ok = 0.0
    items = range(n)
    for r in range(0, k + 1):
        for s0 in itertools.combinations(items, r):
            mass = p0 ** r * (1 - p0) ** (n - r)
            mass_ok += mass
            rest = [i for i in items if i not in s0]
            completions = list(itertools.combinations(rest, k - r))
            for extra in completions:
                final = frozenset(s0) | frozenset(extra)
                law[final] = law.get(final, 0.0) + mass / len(completions)
    return {s: m / mass_ok for s, m in law.items()}


class TestSampleCoupled:
    def test_default_prevalence_formula(self):
        assert coupling_prevalence(100, 50) == pytest.approx(
            (50 - math.sqrt(50) * math.log(100)) / 100)
        assert coupling_prevalence(100, 50) == pytest.approx(0.1744, abs=1e-4)

    def test_formula_regime_error(self, rng):
        # sqrt(3) < ln 6, so the default first-stage prevalence is negative
        with pytest.raises(InvalidParameterError):
            sample_coupled(6, 3, rng)

    def test_formula_regime_works_when_positive(self, rng):
        draw = sample_coupled(4, 2, rng)  # sqrt(2) > ln 4 barely fails... see assert
        assert isinstance(draw, CoupledSample)

    def test_explicit_p0_validation(self, rng):
        for bad in (0.0, 1.0, -0.5):
            with pytest.raises(InvalidParameterError):
                sample_coupled(10, 3, rng, p0=bad)

    def test_topup_contract(self, rng):
        for _ in range(200):
            draw = sample_coupled(10, 4, rng, p0=0.3)
            if not draw.overflow:
                assert len(draw.s) == 4
                assert draw.s0 <= draw.s
            else:
                assert len(draw.s0) > 4 and draw.s == draw.s0

    def test_conditional_law_uniform_enumeration(self):
        # exact coupling correctness at n <= 8 for several (k, p0)
        for n, k, p0 in ((6, 3, 0.3), (8, 4, 0.35), (7, 2, 0.15),
                         (4, 2, coupling_prevalence(4, 2))):
            law = coupled_conditional_law(n, k, p0)
            target = 1 / math.comb(n, k)
            assert len(law) == math.comb(n, k)
            assert all(abs(m - target) < 1e-12 for m in law.values())

    def test_sampler_matches_enumeration(self):
        # the sampler's conditional frequencies agree with the exact law
        gen = np.random.default_rng(99)
        n, k, p0 = 6, 3, 0.3
        trials, counts, kept = 4 * 10**4, {}, 0
        for _ in range(trials):
            draw = sample_coupled(n, k, gen, p0=p0)
            if draw.overflow:
                continue
            kept += 1
            counts[draw.s] = counts.get(draw.s, 0) + 1
        target = 1 / math.comb(n, k)
        sigma = math.sqrt(target * (1 - target) / kept)
        for s, c in counts.items():
            assert abs(c / kept - target) < 4 * sigma


class TestPrior:
    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            Prior.iid(0.7)
        with pytest.raises(InvalidParameterError):
            Prior.combinatorial(0)
        with pytest.raises(InvalidParameterError):
            Prior("gaussian")

    def test_from_string(self):
        assert Prior.from_string("iid:0.25") == Prior.iid(0.25)
        assert Prior.from_string("comb:7") == Prior.combinatorial(7)
        assert Prior.from_string("coupled:5").kind == "coupled"
        with pytest.raises(InvalidParameterError):
            Prior.from_string("iid:abc")
        with pytest.raises(InvalidParameterError):
            Prior.from_string("magic:3")

    def test_param_and_means(self):
        assert Prior.iid(0.2).param == 0.2
        assert Prior.combinatorial(4).param == 4.0
        assert Prior.iid(0.2).mean_defectives(50) == pytest.approx(10.0)
        assert Prior.combinatorial(4).prevalence(8) == 0.5

    def test_sample_dispatch(self, rng):
        assert len(Prior.combinatorial(3).sample(10, rng)) == 3
        s = Prior.iid(0.5).sample(10, rng)
        assert all(0 <= i < 10 for i in s)


class TestMatrixFormat:
    def test_round_trip_bit_exact(self, rng):
        d = random_design(rng, n=11, T=9)
        text = dumps_design(d)
        again = loads_design(text)
        assert again == d
        assert dumps_design(again) == text

    def test_empty_test_line(self):
        d = TestDesign(3, [[0, 2], [], [1]])
        text = dumps_design(d)
        assert text == "3 3\n0 2\n\n1\n"
        assert loads_design(text) == d

    def test_comments_skipped(self):
        text = "# generated design\n2 4\n# first test\n0 3\n1 2\n"
        d = loads_design(text)
        assert d.tests == (frozenset({0, 3}), frozenset({1, 2}))

    def test_header_errors(self):
        with pytest.raises(InvalidParameterError):
            loads_design("")
        with pytest.raises(InvalidParameterError):
            loads_design("3\n0\n1\n2\n")
        with pytest.raises(InvalidParameterError):
            loads_design("2 3\n0\n")  # wrong test count

    def test_ordering_enforced(self):
        with pytest.raises(InvalidParameterError):
            loads_design("1 3\n2 1\n")
        with pytest.raises(InvalidParameterError):
            loads_design("1 3\n1 1\n")


class TestSubdesign:
    def test_restriction(self):
        d = TestDesign(5, [[0, 1, 2], [2, 3], [4]])
        keep_items = np.array([True, False, True, True, True])
        keep_tests = np.array([True, True, False])
        sub, item_ids, test_ids = subdesign(d, keep_items, keep_tests)
        assert item_ids.tolist() == [0, 2, 3, 4]
        assert test_ids.tolist() == [0, 1]
        assert sub.tests == (frozenset({0, 1}), frozenset({1, 2}))

    def test_empty_restriction(self):
        d = TestDesign(3, [[0, 1]])
        sub, item_ids, test_ids = subdesign(d, np.zeros(3, bool), np.zeros(1, bool))
        assert sub.n == 0 and sub.T == 0


def test_defective_mask_round_trip():
    mask = defective_mask(6, {1, 4})
    assert mask.tolist() == [False, True, False, False, True, False]
