"""Closed-form solvers against the exact enumeration oracles."""

import math
import random
from fractions import Fraction
from itertools import product

import pytest

from luba.auction import (
    NO_BID,
    ActionSet,
    AuctionConfig,
    BidProfile,
    bidder_payoffs,
    prefix_set,
    resolve_profile,
)
from luba.equilibria import (
    MixedStrategy,
    asymmetric_two_bidder_eq,
    better_reply_cycle,
    expected_payoff,
    expected_payoff_moment,
    is_better_reply_cycle,
    pareto_and_global_optimum,
    prefix_ladder,
    pure_eq_search,
    single_bid_pure_eq,
    three_bidder_symmetric_eq,
    two_bidder_mixed_eq,
    two_bidder_risk_eq,
    two_by_two_risk_eq,
    verify_equilibrium,
)


def symmetric_config(v=8, c=1, c_r=0, budget=6, n=2, bid_cap=None, theta=0.0):
    return AuctionConfig.create(n=n, m=1, valuations=v, c=c, c_r=c_r,
                                budgets=budget, bid_cap=bid_cap or budget,
                                theta=theta)


class TestExpectedPayoff:
    def test_single_term(self):
        cfg = symmetric_config(budget=100, bid_cap=10, c_r=1)
        stay_out = MixedStrategy((NO_BID,), (Fraction(1),))
        value = expected_payoff(cfg, 0, ActionSet({1}), [stay_out])
        assert value == 8 - 1 - 1 - 1

    def test_staying_out_is_zero(self):
        cfg = symmetric_config()
        opp = MixedStrategy.uniform(prefix_ladder(6))
        assert expected_payoff(cfg, 0, NO_BID, [opp]) == 0

    def test_prefix_support_payoffs_vanish(self):
        cfg = symmetric_config()
        y = two_bidder_mixed_eq(8, 1, 6)
        for idx in y.support:
            value = expected_payoff(cfg, 0, y.actions[idx], [y])
            assert value == 0  # exact rational arithmetic


class TestTwoBidderMixedEq:
    def test_reference_distribution(self):
        y = two_bidder_mixed_eq(8, 1, 6)
        expected = (Fraction(1, 7), Fraction(1, 6), Fraction(1, 5),
                    Fraction(1, 4), Fraction(101, 420), 0, 0)
        assert y.probs == expected
        assert y.actions == prefix_ladder(6)

    def test_near_threshold_value(self):
        y = two_bidder_mixed_eq(Fraction(21, 10), 1, 6)  # v barely above c+1
        assert len(y.support) == 2
        assert y.probs[0] == Fraction(10, 11)
        assert sum(y.probs) == 1

    def test_regret_certificate(self):
        cfg = symmetric_config()
        y = two_bidder_mixed_eq(8, 1, 6)
        cert = verify_equilibrium(cfg, (y, y), tol=1e-9)
        assert cert.certified
        assert cert.max_regret == 0
        for payoffs in cert.supported_payoffs:
            assert all(p == 0 for p in payoffs)

    def test_rejects_small_value(self):
        with pytest.raises(ValueError):
            two_bidder_mixed_eq(2, 1, 6)

    def test_budget_caps_support(self):
        y = two_bidder_mixed_eq(8, 1, 2)
        assert len(y.probs) == 3
        assert sum(y.probs) == 1
        assert y.probs[2] == 1 - Fraction(1, 7) - Fraction(1, 6)


class TestTwoBidderRiskEq:
    def test_matches_neutral_at_tiny_theta(self):
        neutral = two_bidder_mixed_eq(8, 1, 6)
        risky = two_bidder_risk_eq(8, 1, 1e-8, 6)
        for p, q in zip(neutral.probs, risky.probs):
            assert abs(float(p) - q) < 1e-5

    def test_reference_component(self):
        y = two_bidder_risk_eq(8, 1, 0.1, 6)
        assert y.probs[0] == pytest.approx(
            math.expm1(0.1) / math.expm1(0.7), abs=1e-12)

    def test_support_moments_are_one(self):
        cfg = symmetric_config(theta=0.1)
        y = two_bidder_risk_eq(8, 1, 0.1, 6)
        for idx in y.support:
            if y.actions[idx] == NO_BID:
                continue
            moment = expected_payoff_moment(cfg, 0, y.actions[idx], [y])
            assert moment == pytest.approx(1.0, abs=1e-9)

    def test_risk_certificate(self):
        cfg = symmetric_config(theta=0.1)
        y = two_bidder_risk_eq(8, 1, 0.1, 6)
        cert = verify_equilibrium(cfg, (y, y), tol=1e-9)
        assert cert.certified

    def test_theta_zero_delegates(self):
        assert two_bidder_risk_eq(8, 1, 0, 6) == two_bidder_mixed_eq(8, 1, 6)

    def test_risk_seeking_spreads_mass_upward(self):
        neutral = two_bidder_mixed_eq(8, 1, 6)
        seeking = two_bidder_risk_eq(8, 1, 0.5, 6)
        k = max(neutral.support)
        assert seeking.probs[k] > float(neutral.probs[k])


class TestAsymmetricTwoBidder:
    def config(self):
        return AuctionConfig.create(n=2, m=1, valuations=8, c=1, c_r=0,
                                    budgets=(2, 3), bid_cap=3)

    def test_reference_components(self):
        x, y = asymmetric_two_bidder_eq(8, 1)
        assert x.probs == (1 - Fraction(1, 6) - Fraction(1, 5),
                           Fraction(1, 6), Fraction(1, 5))
        assert y.probs == (Fraction(1, 7), Fraction(1, 6), Fraction(1, 5),
                           1 - Fraction(1, 7) - Fraction(1, 6) - Fraction(1, 5))
        assert sum(x.probs) == 1 and sum(y.probs) == 1

    def test_indifference_identities(self):
        # y zeroes every action of the 3-action bidder; x equalizes the
        # participating actions of the 4-action bidder
        cfg = self.config()
        x, y = asymmetric_two_bidder_eq(8, 1)
        for action in prefix_ladder(2):
            assert expected_payoff(cfg, 0, action, [y]) == 0
        participating = [expected_payoff(cfg, 1, a, [x])
                         for a in prefix_ladder(3)[1:]]
        assert len(set(participating)) == 1
        assert participating[0] == Fraction(103, 30)

    def test_one_sided_regret_structure(self):
        # the 4-action bidder's no-bid mass is strictly suboptimal against
        # x, so the full certificate's regret equals exactly that leak:
        # y_0 * (participation payoff) = (1/7)(103/30)
        cfg = self.config()
        x, y = asymmetric_two_bidder_eq(8, 1)
        cert = verify_equilibrium(
            cfg, (x, y), action_spaces=[prefix_ladder(2), prefix_ladder(3)])
        assert cert.max_regret == Fraction(103, 210)
        assert cert.equilibrium_payoffs[0] == 0

    def test_rejects_small_value(self):
        with pytest.raises(ValueError):
            asymmetric_two_bidder_eq(4, 1)


class TestTwoByTwoRisk:
    def test_neutral_limit(self):
        s1, s2 = two_by_two_risk_eq(4, 0.0, 0.0)
        assert s1.probs[0] == Fraction(1, 4)
        assert s2.probs[0] == Fraction(1, 4)

    def test_reference_value(self):
        s1, _ = two_by_two_risk_eq(4, 0.2, 0.2)
        assert s1.probs[0] == pytest.approx(
            (1 - math.exp(0.2)) / (1 - math.exp(0.8)), abs=1e-12)

    def test_cross_dependence(self):
        # bidder 1 mixes to keep bidder 2 indifferent, so bidder 1's
        # no-bid probability is driven by theta_2
        s1, s2 = two_by_two_risk_eq(4, 0.3, -0.3)
        t1, t2 = two_by_two_risk_eq(4, 0.3, 0.3)
        assert s2.probs == t2.probs
        assert s1.probs != t1.probs

    def test_participation_ordering(self):
        for v in (2.0, 4.0, 10.0):
            seek, _ = two_by_two_risk_eq(v, 0.2, 0.2)
            neutral, _ = two_by_two_risk_eq(v, 0.0, 0.0)
            averse, _ = two_by_two_risk_eq(v, -0.2, -0.2)
            assert (1 - seek.probs[0]) > (1 - float(neutral.probs[0])) \
                > (1 - averse.probs[0])

    def test_indifference_in_game_matrix(self):
        # winner nets v-1, losing participant pays 1, abstainer gets 0
        v, t1, t2 = 4.0, 0.25, -0.4
        s1, s2 = two_by_two_risk_eq(v, t1, t2)
        p = s1.probs[0]
        # bidder 2's utility of bidding vs staying out under exp(theta r)
        bid_util = p * math.exp(t2 * (v - 1)) + (1 - p) * math.exp(-t2)
        assert bid_util == pytest.approx(1.0, abs=1e-12)


class TestThreeBidderSymmetric:
    def config(self):
        return AuctionConfig.create(n=3, m=1, valuations=7, c=1, c_r=0,
                                    budgets=100, bid_cap=2)

    def test_reference_components(self):
        s = three_bidder_symmetric_eq(7, 1)
        assert s.probs[0] == pytest.approx(0.4, abs=1e-12)
        assert s.probs[1] == pytest.approx(0.2, abs=1e-12)
        assert s.probs[2] == pytest.approx(math.sqrt(1 / 6) - 0.4, abs=1e-12)
        assert s.probs[3] == pytest.approx(1 - 0.6 - (math.sqrt(1 / 6) - 0.4),
                                           abs=1e-12)

    def test_indifference_identities(self):
        v, c = 7, 1
        s = three_bidder_symmetric_eq(v, c)
        x0, x1, x2, _ = s.probs
        assert (x0 + x2) ** 2 == pytest.approx(c / (v - 1), abs=1e-12)
        assert x0 ** 2 + x1 ** 2 == pytest.approx(c / (v - 2), abs=1e-12)
        assert 2 * x0 * x1 + x1 ** 2 == pytest.approx(c / (v - 2), abs=1e-12)

    def test_oracle_regret(self):
        cfg = self.config()
        s = three_bidder_symmetric_eq(7, 1)
        cert = verify_equilibrium(cfg, (s, s, s), tol=1e-6)
        assert cert.certified
        for idx in s.support[1:]:
            value = expected_payoff(cfg, 0, s.actions[idx], [s, s])
            assert abs(value) < 1e-12

    def test_support_not_nested(self):
        # all four actions carry mass and {1}, {2} are incomparable sets
        s = three_bidder_symmetric_eq(7, 1)
        assert len(s.support) == 4
        assert not ActionSet({1}) <= ActionSet({2})

    def test_combination_mass_grows_with_value(self):
        masses = [three_bidder_symmetric_eq(v, 1).probs[3]
                  for v in (7, 10, 20, 50)]
        assert masses == sorted(masses)

    def test_feasibility_guard(self):
        with pytest.raises(ValueError):
            three_bidder_symmetric_eq(3, 1)


class TestPureEqSearch:
    def test_generic_instance_has_none(self):
        cfg = AuctionConfig.create(n=2, m=1, valuations=8, c=1, c_r=1,
                                   budgets=6, bid_cap=6)
        assert pure_eq_search(cfg) == []

    def test_tight_budget_instance(self):
        cfg = AuctionConfig.create(n=3, m=1, valuations=6, c=1, c_r=1,
                                   budgets=(5, 3, 3), bid_cap=5)
        found = pure_eq_search(cfg)
        target = BidProfile.single_item([ActionSet({1}), NO_BID, NO_BID])
        assert target in found

    def test_single_bidder_takes_floor_bid(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=8, c=1, c_r=1,
                                   budgets=100, bid_cap=4)
        found = pure_eq_search(cfg)
        assert found == [BidProfile.single_item([ActionSet({1})])]

    def test_generic_random_two_bidder_instances(self):
        # genericity needs v strictly above 2 + c + c_r (at equality the
        # profile (out, {1}) is an equilibrium: entering with {1,2} only
        # breaks even)
        rng = random.Random(31)
        for _ in range(5):
            c = rng.randint(1, 2)
            c_r = rng.randint(0, 2)
            v = c + c_r + rng.randint(3, 5)
            cfg = AuctionConfig.create(n=2, m=1, valuations=v, c=c, c_r=c_r,
                                       budgets=v + c + c_r + 2,
                                       bid_cap=min(v, 5))
            assert pure_eq_search(cfg) == []

    def test_pure_eq_has_zero_regret(self):
        cfg = AuctionConfig.create(n=3, m=1, valuations=6, c=1, c_r=1,
                                   budgets=(5, 3, 3), bid_cap=5)
        profile = pure_eq_search(cfg)[0]
        strategies = tuple(
            MixedStrategy((profile.actions[j],), (Fraction(1),))
            for j in range(3))
        spaces = [[row for row in
                   [(a,) for a in (NO_BID, ActionSet({1}), ActionSet({2}),
                                   ActionSet({3}), ActionSet({1, 2}))]]
                  for _ in range(3)]
        # restrict to each bidder's ex-ante feasible actions
        from luba.auction import is_feasible
        spaces = [[row for row in space if is_feasible(row, cfg, j)]
                  for j, space in enumerate(spaces)]
        cert = verify_equilibrium(cfg, strategies, action_spaces=spaces)
        assert cert.max_regret == 0


class TestSingleBidPureEq:
    def test_two_by_two_permutations(self):
        cfg = AuctionConfig.create(n=2, m=2, valuations=10, c=(1, 1), c_r=1,
                                   budgets=(1, 1), bid_cap=5)
        found = single_bid_pure_eq(cfg)
        assert ((1, 0), (0, 1)) in found
        assert ((0, 1), (1, 0)) in found
        assert len(found) == 2

    def test_zero_budget_blocks_all(self):
        cfg = AuctionConfig.create(n=2, m=1, valuations=10, c=1, c_r=1,
                                   budgets=(0.5, 0.5), bid_cap=5)
        assert single_bid_pure_eq(cfg) == []

    def test_single_cell(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=5, c=1, c_r=1,
                                   budgets=3, bid_cap=3)
        assert single_bid_pure_eq(cfg) == [((1,),)]

    def test_low_value_filtered(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=3, c=1, c_r=1,
                                   budgets=3, bid_cap=3)
        assert single_bid_pure_eq(cfg) == []  # needs v > 1 + c + c_r


class TestBetterReplyCycle:
    def test_three_bidder_ladder(self):
        cfg = AuctionConfig.create(n=3, m=1, valuations=10, c=1, c_r=1,
                                   budgets=9, bid_cap=9)
        cycle = better_reply_cycle(cfg)
        assert cycle is not None
        assert is_better_reply_cycle(cfg, cycle)
        assert len(cycle) == 8
        assert cycle[0] == BidProfile.single_item(
            [ActionSet({1}), NO_BID, NO_BID])

    def test_truncated_ladder_under_tight_budget(self):
        # budget 5 cannot fund the third rung; the ladder shrinks to two
        # active bidders and still closes
        cfg = AuctionConfig.create(n=3, m=1, valuations=10, c=1, c_r=1,
                                   budgets=5, bid_cap=5)
        cycle = better_reply_cycle(cfg)
        assert cycle is not None
        assert is_better_reply_cycle(cfg, cycle)
        assert len(cycle) == 6

    def test_single_bidder_has_no_cycle(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=10, c=1, c_r=1,
                                   budgets=9, bid_cap=9)
        assert better_reply_cycle(cfg) is None

    def test_cycle_coexists_with_empty_pure_search(self):
        cfg = AuctionConfig.create(n=2, m=1, valuations=8, c=1, c_r=1,
                                   budgets=6, bid_cap=6)
        assert better_reply_cycle(cfg) is not None
        assert pure_eq_search(cfg) == []

    def test_each_step_moves_one_bidder(self):
        cfg = AuctionConfig.create(n=3, m=1, valuations=10, c=1, c_r=1,
                                   budgets=9, bid_cap=9)
        cycle = better_reply_cycle(cfg)
        for t in range(len(cycle)):
            cur, nxt = cycle[t], cycle[(t + 1) % len(cycle)]
            movers = [j for j in range(3) if cur.actions[j] != nxt.actions[j]]
            assert len(movers) == 1

    def test_validator_rejects_non_improving(self):
        cfg = AuctionConfig.create(n=2, m=1, valuations=8, c=1, c_r=1,
                                   budgets=6, bid_cap=6)
        a = BidProfile.single_item([ActionSet({1}), NO_BID])
        b = BidProfile.single_item([ActionSet({2}), NO_BID])
        assert not is_better_reply_cycle(cfg, [a, b])


class TestParetoGlobalOptimum:
    def test_reference_gap(self):
        cfg = AuctionConfig.create(n=2, m=1, valuations=8, c=1, c_r=1,
                                   budgets=6, bid_cap=6)
        result = pareto_and_global_optimum(cfg)
        assert result.go_payoff == 5
        assert result.inefficiency_gap == 5
        outcome = resolve_profile(result.witness)[0]
        assert outcome.winning_bid == 1
        assert outcome.histogram == {1: 1}

    def test_unprofitable_items_contribute_zero(self):
        cfg = AuctionConfig.create(n=2, m=1, valuations=3, c=1, c_r=1,
                                   budgets=6, bid_cap=6)
        result = pareto_and_global_optimum(cfg)
        assert result.go_payoff == 0
        assert all(a == NO_BID for row in result.witness.actions for a in row)

    def test_witness_is_pareto_undominated(self):
        cfg = AuctionConfig.create(n=2, m=1, valuations=(8, 6), c=1, c_r=1,
                                   budgets=6, bid_cap=4)
        result = pareto_and_global_optimum(cfg)
        base = bidder_payoffs(result.witness, cfg).bidder_totals
        actions = [NO_BID, ActionSet({1}), ActionSet({2}), ActionSet({1, 2})]
        for rows in product(actions, repeat=2):
            payoffs = bidder_payoffs(
                BidProfile.single_item(list(rows)), cfg).bidder_totals
            dominates = all(p >= b for p, b in zip(payoffs, base)) and any(
                p > b for p, b in zip(payoffs, base))
            assert not dominates

    def test_max_value_bidder_selected(self):
        cfg = AuctionConfig.create(n=3, m=2, valuations=((4, 9), (8, 4), (5, 5)),
                                   c=(1, 1), c_r=1, budgets=10, bid_cap=5)
        result = pareto_and_global_optimum(cfg)
        assert result.witness.actions[1][0] == ActionSet({1})
        assert result.witness.actions[0][1] == ActionSet({1})
        assert result.go_payoff == (8 - 3) + (9 - 3)


class TestMixedStrategyType:
    def test_normalization_enforced(self):
        with pytest.raises(ValueError):
            MixedStrategy((NO_BID, ActionSet({1})), (0.5, 0.6))
        with pytest.raises(ValueError):
            MixedStrategy((NO_BID,), (-0.1,))

    def test_support(self):
        s = MixedStrategy((NO_BID, ActionSet({1}), ActionSet({2})),
                          (Fraction(1, 2), Fraction(1, 2), 0))
        assert s.support == (0, 1)
        assert s.support_actions == (NO_BID, ActionSet({1}))
        assert s.prob_of(ActionSet({2})) == 0
