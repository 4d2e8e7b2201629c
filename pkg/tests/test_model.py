"""Core model: valuations, welfare, feasible-set enumeration."""

from fractions import Fraction as F
from itertools import product

import pytest

from relaxround import (AdditiveValuation, Allocation, EnumerationTooLargeError,
                        EvaluationError, SingleMindedValuation,
                        SinglePeakedValuation, TableValuation,
                        ValuationProfile, enumerate_feasible, make_no_money,
                        make_single_item, make_single_minded_ca, profile_for,
                        social_welfare, value_of)
from relaxround.model import scale_valuation


def bundles(*sets):
    return Allocation(tuple(frozenset(s) for s in sets))


class TestValueOf:
    def test_additive_sums_items(self):
        profile = ValuationProfile((AdditiveValuation((F(2), F(3))),))
        assert value_of(profile, 0, bundles({0, 1})) == 5

    def test_single_minded_misses_partial_bundle(self):
        profile = ValuationProfile((SingleMindedValuation(frozenset({0, 1}), F(7)),))
        assert value_of(profile, 0, bundles({0})) == 0

    def test_single_minded_superset_pays_full_value(self):
        profile = ValuationProfile((SingleMindedValuation(frozenset({0}), F(7)),))
        assert value_of(profile, 0, bundles({0, 1})) == 7

    @pytest.mark.parametrize("valuation", [
        AdditiveValuation((F(2), F(3))),
        SingleMindedValuation(frozenset({0}), F(7)),
        TableValuation(((frozenset({0}), F(4)),)),
        SinglePeakedValuation(F(3)),
    ])
    def test_empty_bundle_is_worth_zero(self, valuation):
        profile = ValuationProfile((valuation,))
        assert value_of(profile, 0, bundles(set())) == 0

    def test_table_unknown_bundle_names_the_bundle(self):
        profile = ValuationProfile((TableValuation(((frozenset({0}), F(4)),)),))
        with pytest.raises(EvaluationError, match=r"\{1\}"):
            value_of(profile, 0, bundles({1}))

    def test_single_peaked_is_negative_distance(self):
        profile = ValuationProfile((SinglePeakedValuation(F(3)),))
        assert value_of(profile, 0, bundles({3})) == 0
        assert value_of(profile, 0, bundles({5})) == -2

    def test_negative_values_rejected(self):
        with pytest.raises(ValueError):
            AdditiveValuation((F(-1),))
        with pytest.raises(ValueError):
            SingleMindedValuation(frozenset({0}), F(-2))


class TestSocialWelfare:
    def test_sums_over_bidders(self):
        profile = ValuationProfile((AdditiveValuation((F(5),)),
                                    AdditiveValuation((F(3),))))
        alloc = Allocation((frozenset({0}), frozenset({0})))
        # Not a feasible auction allocation, but welfare is still a plain sum.
        assert social_welfare(profile, alloc) == 8

    def test_all_empty_is_zero(self):
        profile = ValuationProfile((AdditiveValuation((F(5),)),
                                    AdditiveValuation((F(3),))))
        assert social_welfare(profile, Allocation.empty(2)) == 0

    def test_single_item_only_winner_contributes(self):
        profile = ValuationProfile((AdditiveValuation((F(5),)),
                                    AdditiveValuation((F(3),))))
        assert social_welfare(profile, bundles({0}, set())) == 5

    def test_linearity_in_one_bidder(self):
        """Scaling one bidder's values scales exactly that contribution."""
        inst = make_single_minded_ca(2, [{0}, {0, 1}])
        profile = profile_for(inst, [F(3), F(5)])
        scaled = ValuationProfile((
            scale_valuation(profile.valuations[0], F(7, 2)),
            profile.valuations[1]))
        for alloc in enumerate_feasible(inst):
            base0 = value_of(profile, 0, alloc)
            assert (social_welfare(scaled, alloc) - social_welfare(profile, alloc)
                    == (F(7, 2) - 1) * base0)


class TestEnumerateFeasible:
    def test_single_item_two_bidders(self):
        allocs = enumerate_feasible(make_single_item(2))
        assert allocs == [
            Allocation.empty(2),
            bundles({0}, set()),
            bundles(set(), {0}),
        ]

    def test_single_item_one_bidder(self):
        assert len(enumerate_feasible(make_single_item(1))) == 2

    def test_single_minded_disjoint_matches_bitmask_oracle(self):
        """Oracle: filter all item-to-bidder maps down to demand-respecting ones."""
        desires = [frozenset({0}), frozenset({1})]
        inst = make_single_minded_ca(2, desires)
        oracle = set()
        for assignment in product(range(len(desires) + 1), repeat=2):
            got = [frozenset(j for j in range(2) if assignment[j] == i + 1)
                   for i in range(len(desires))]
            if all(b in (frozenset(), desires[i]) for i, b in enumerate(got)):
                oracle.add(Allocation(tuple(got)))
        allocs = enumerate_feasible(inst)
        assert set(allocs) == oracle
        assert len(allocs) == 4

    def test_overlapping_desires_exclude_conflicts(self):
        inst = make_single_minded_ca(2, [{0}, {0, 1}])
        allocs = enumerate_feasible(inst)
        for alloc in allocs:
            won = [b for b in alloc.bundles if b]
            for i, a in enumerate(won):
                for b in won[i + 1:]:
                    assert not (a & b)
        assert len(allocs) == 3  # empty, bidder 0, bidder 1

    def test_order_is_deterministic_and_lexicographic(self):
        inst = make_single_item(3)
        allocs = enumerate_feasible(inst)
        keys = [a.sort_key() for a in allocs]
        assert keys == sorted(keys)
        assert allocs == enumerate_feasible(inst)
        assert allocs[0] == Allocation.empty(3)

    def test_shrink_to_empty_stays_feasible(self):
        inst = make_single_minded_ca(3, [{0}, {1, 2}, {0, 2}])
        feasible = set(enumerate_feasible(inst))
        for alloc in feasible:
            for i in range(inst.n):
                shrunk = list(alloc.bundles)
                shrunk[i] = frozenset()
                assert Allocation(tuple(shrunk)) in feasible

    def test_single_peaked_positions_plus_empty(self):
        inst = make_no_money(3, "single_peaked", positions=5)
        allocs = enumerate_feasible(inst)
        assert len(allocs) == 6
        assert allocs[0] == Allocation.empty(3)

    def test_size_bound_raises_with_estimate(self):
        inst = make_single_minded_ca(2, [{0}, {1}])
        with pytest.raises(EnumerationTooLargeError) as err:
            enumerate_feasible(inst, bound=2)
        assert err.value.bound == 2


class TestInstanceInvariants:
    def test_variable_index_is_a_bijection(self):
        inst = make_single_minded_ca(2, [{0, 1}, {0, 1}])
        assert len(set(inst.variable_index)) == inst.num_vars

    def test_profile_must_match_family(self):
        from relaxround.model import validate_profile
        inst = make_single_item(2)
        sp = ValuationProfile((SinglePeakedValuation(F(1)),
                               SinglePeakedValuation(F(2))))
        with pytest.raises(ValueError):
            validate_profile(inst, sp)

    def test_single_peaked_peak_must_be_a_position(self):
        from relaxround.model import validate_profile
        inst = make_no_money(1, "single_peaked", positions=4)
        with pytest.raises(ValueError):
            validate_profile(inst, ValuationProfile((SinglePeakedValuation(F(9)),)))
        with pytest.raises(ValueError):
            validate_profile(inst, ValuationProfile((SinglePeakedValuation(F(1, 2)),)))
