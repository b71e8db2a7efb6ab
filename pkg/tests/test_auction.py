"""Core auction mechanics: winner determination, payoffs, budgets, bounds."""

import math
import random
from fractions import Fraction

import pytest

from luba.auction import (
    NO_BID,
    ActionSet,
    AuctionConfig,
    BidProfile,
    CapExceededError,
    auctioneer_revenue,
    bidder_payoffs,
    enumerate_actions,
    is_feasible,
    prefix_set,
    reduce_action_space,
    resolve_item,
    resolve_profile,
    risk_payoff,
    spend,
)


def sets_from_multiplicities(mults):
    """Bidders realizing a given bid->count histogram (bidder t holds every
    bid with count > t)."""
    bidders = max(mults.values(), default=0)
    return [ActionSet(b for b, k in mults.items() if k > t) for t in range(bidders)]


class TestResolveItem:
    def test_reference_histogram(self):
        # multiplicities {1:2, 3:1, 4:3, 5:2, 6:1, 8:1, 9:3} -> 3 wins
        sets = sets_from_multiplicities({1: 2, 3: 1, 4: 3, 5: 2, 6: 1, 8: 1, 9: 3})
        out = resolve_item(sets)
        assert out.histogram == {1: 2, 3: 1, 4: 3, 5: 2, 6: 1, 8: 1, 9: 3}
        assert out.unique_bids == frozenset({3, 6, 8})
        assert out.winning_bid == 3
        assert out.winner == 0

    def test_all_empty(self):
        out = resolve_item([NO_BID, NO_BID, NO_BID])
        assert out.histogram == {}
        assert out.winning_bid is None and out.winner is None

    def test_perfect_tie(self):
        out = resolve_item([{1}, {1}])
        assert out.unique_bids == frozenset()
        assert out.winner is None

    def test_exhaustive_against_definition(self):
        # every multiplicity function with <= 4 bidders and bids <= 6
        counts = [0]

        def oracle(mults):
            unique = [b for b, k in mults.items() if k == 1]
            return min(unique) if unique else None

        grids = [range(5)] * 6
        import itertools

        for combo in itertools.product(*grids):
            mults = {b + 1: k for b, k in enumerate(combo) if k > 0}
            if mults and max(mults.values()) > 4:
                continue
            out = resolve_item(sets_from_multiplicities(mults))
            assert out.winning_bid == oracle(mults)
            counts[0] += 1
        assert counts[0] > 10_000

    def test_permutation_equivariance(self):
        rng = random.Random(7)
        for _ in range(200):
            sets = [ActionSet(rng.sample(range(1, 7), rng.randint(0, 3)))
                    for _ in range(4)]
            base = resolve_item(sets)
            order = list(range(4))
            rng.shuffle(order)
            shuffled = resolve_item([sets[k] for k in order])
            assert shuffled.winning_bid == base.winning_bid
            if base.winner is None:
                assert shuffled.winner is None
            else:
                assert order[shuffled.winner] == base.winner

    def test_winner_structure(self):
        rng = random.Random(11)
        for _ in range(300):
            sets = [ActionSet(rng.sample(range(1, 8), rng.randint(0, 4)))
                    for _ in range(rng.randint(1, 4))]
            out = resolve_item(sets)
            if out.winning_bid is not None:
                assert out.histogram[out.winning_bid] == 1
                for b in range(1, out.winning_bid):
                    assert out.histogram.get(b, 0) != 1


class TestActionSet:
    def test_rejects_bad_bids(self):
        with pytest.raises(ValueError):
            ActionSet({0, 1})
        with pytest.raises(ValueError):
            ActionSet({1.5})

    def test_resubmissions(self):
        assert ActionSet({1, 2, 5}).resubmissions == 3
        assert NO_BID.resubmissions == 0
        assert NO_BID.lowest() is None


class TestPayoffs:
    def config(self, **kw):
        defaults = dict(n=2, m=1, valuations=8, c=1, c_r=1, budgets=100,
                        bid_cap=10)
        defaults.update(kw)
        return AuctionConfig.create(**defaults)

    def test_winner_payoff(self):
        cfg = self.config()
        profile = BidProfile.single_item([{1, 2}, NO_BID])
        report = bidder_payoffs(profile, cfg)
        # v=8 minus two submissions, winning payment 1, registration 1
        assert report.bidder_payoffs[0][0] == 8 - 2 - 1 - 1
        assert report.bidder_payoffs[1][0] == 0

    def test_loser_pays_fees(self):
        cfg = self.config(n=3)
        profile = BidProfile.single_item([{1}, {2, 3, 4}, {2, 3, 4}])
        report = bidder_payoffs(profile, cfg)
        assert report.bidder_payoffs[1][0] == -(3 * 1 + 1)

    def test_out_means_zero_and_losing_costs(self):
        # staying out always nets exactly zero; with positive fees a
        # participating loser is strictly negative. (A winner can break
        # even exactly, e.g. three bids winning at 4 with v=8, c=c_r=1,
        # so zero payoff does not imply staying out.)
        rng = random.Random(3)
        cfg = self.config(n=3)
        for _ in range(200):
            profile = BidProfile.single_item(
                [ActionSet(rng.sample(range(1, 6), rng.randint(0, 3)))
                 for _ in range(3)])
            outcomes = resolve_profile(profile)
            report = bidder_payoffs(profile, cfg, outcomes)
            for j in range(3):
                if not profile.actions[j][0]:
                    assert report.bidder_payoffs[j][0] == 0
                elif outcomes[0].winner != j:
                    assert report.bidder_payoffs[j][0] < 0

    def test_dimension_mismatch(self):
        cfg = self.config()
        with pytest.raises(ValueError):
            bidder_payoffs(BidProfile.single_item([{1}]), cfg)

    def test_auctioneer_single_participant(self):
        cfg = self.config(n=1)
        profile = BidProfile.single_item([{1}])
        assert auctioneer_revenue(profile, cfg, 2) == (1 + 1 + 1 - 2,)

    def test_auctioneer_empty(self):
        cfg = self.config()
        profile = BidProfile.single_item([NO_BID, NO_BID])
        assert auctioneer_revenue(profile, cfg, 5) == (-5,)

    def test_conservation_identity(self):
        # bidders + seller together net the winner's value minus the
        # seller's value, per item
        rng = random.Random(17)
        for _ in range(200):
            n = rng.randint(1, 4)
            m = rng.randint(1, 2)
            cfg = AuctionConfig.create(
                n=n, m=m,
                valuations=[[rng.randint(3, 9) for _ in range(m)]
                            for _ in range(n)],
                c=[rng.randint(0, 2) for _ in range(m)],
                c_r=rng.randint(0, 2), budgets=1000, bid_cap=8)
            profile = BidProfile(tuple(
                tuple(ActionSet(rng.sample(range(1, 7), rng.randint(0, 3)))
                      for _ in range(m))
                for _ in range(n)))
            v_a = [rng.randint(1, 6) for _ in range(m)]
            outcomes = resolve_profile(profile)
            report = bidder_payoffs(profile, cfg, outcomes, v_a)
            lhs = sum(report.bidder_totals) + report.auctioneer_total
            rhs = sum(
                (cfg.valuations[outcomes[i].winner][i]
                 if outcomes[i].winner is not None else 0) - v_a[i]
                for i in range(m))
            assert lhs == rhs


class TestBudget:
    def config(self, budget):
        return AuctionConfig.create(n=1, m=1, valuations=8, c=1, c_r=1,
                                    budgets=budget, bid_cap=10)

    def test_ex_post_winner(self):
        cfg = self.config(6)
        profile = BidProfile.single_item([{1, 2}])
        outcomes = resolve_profile(profile)
        assert spend(profile.row(0), cfg, 0, "ex_post", outcomes) == 1 + 2 + 1
        assert is_feasible(profile.row(0), cfg, 0, "ex_post", outcomes)

    def test_ex_ante_blocks_two_cent_bid(self):
        cfg = self.config(3)
        assert spend((ActionSet({2}),), cfg, 0, "ex_ante") == 4
        assert not is_feasible((ActionSet({2}),), cfg, 0, "ex_ante")
        assert is_feasible((ActionSet({1}),), cfg, 0, "ex_ante")

    def test_empty_always_feasible(self):
        cfg = self.config(1)
        assert is_feasible((NO_BID,), cfg, 0, "ex_ante")

    def test_ex_ante_implies_ex_post(self):
        rng = random.Random(23)
        for _ in range(200):
            n = rng.randint(2, 4)
            cfg = AuctionConfig.create(n=n, m=1, valuations=9, c=1, c_r=1,
                                       budgets=rng.randint(2, 8), bid_cap=6)
            rows = [(ActionSet(rng.sample(range(1, 6), rng.randint(0, 3))),)
                    for _ in range(n)]
            outcomes = resolve_profile(BidProfile(tuple(rows)))
            for j in range(n):
                if is_feasible(rows[j], cfg, j, "ex_ante"):
                    assert is_feasible(rows[j], cfg, j, "ex_post", outcomes)


class TestActionSpaceReduction:
    def test_reference_bounds(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=8, c=1, c_r=1,
                                   budgets=6, bid_cap=20)
        bounds = reduce_action_space(cfg, 0, 0)
        assert bounds.max_bid == 6
        assert bounds.max_resubmissions == 7

    def test_worthless_item(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=1.5, c=1, c_r=1,
                                   budgets=6, bid_cap=20)
        bounds = reduce_action_space(cfg, 0, 0)
        assert bounds.max_bid == 0 and bounds.max_resubmissions == 0
        assert enumerate_actions(cfg, 0, 0) == [NO_BID]

    def test_free_registration(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=5, c=1, c_r=0,
                                   budgets=1000, bid_cap=30)
        assert reduce_action_space(cfg, 0, 0).max_resubmissions == 5

    def test_prefix_enumeration(self):
        cfg = AuctionConfig.create(n=2, m=1, valuations=8, c=1, c_r=0,
                                   budgets=6, bid_cap=6)
        ladder = enumerate_actions(cfg, 0, 0, "prefix_sets")
        assert ladder == [prefix_set(k) for k in range(7)]
        assert len(ladder) == 7

    def test_full_subsets_small(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=3, c=1, c_r=0,
                                   budgets=2, bid_cap=9)
        subsets = enumerate_actions(cfg, 0, 0, "full_subsets")
        assert subsets == [NO_BID, ActionSet({1}), ActionSet({2}),
                           ActionSet({1, 2})]

    def test_full_subsets_cap(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=100, c=1, c_r=0,
                                   budgets=50, bid_cap=50)
        with pytest.raises(CapExceededError):
            enumerate_actions(cfg, 0, 0, "full_subsets")

    def test_ordering_is_stable(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=5, c=1, c_r=0,
                                   budgets=4, bid_cap=4)
        subsets = enumerate_actions(cfg, 0, 0, "full_subsets")
        keys = [(len(a), tuple(sorted(a))) for a in subsets]
        assert keys == sorted(keys)


class TestRiskPayoff:
    def test_degenerate(self):
        for theta in (-2, -0.1, 0, 0.5, 3):
            assert risk_payoff([5], [1.0], theta) == pytest.approx(5)

    def test_risk_neutral_limit(self):
        assert risk_payoff([0, 1], [0.5, 0.5], 0) == pytest.approx(0.5)
        for theta in (1e-6, -1e-6):
            assert risk_payoff([0, 1], [0.5, 0.5], theta) == pytest.approx(
                0.5, abs=1e-4)

    def test_reference_value(self):
        assert risk_payoff([0, 1], [0.5, 0.5], 1) == pytest.approx(
            math.log((1 + math.e) / 2), abs=1e-12)

    def test_monotone_in_theta(self):
        rng = random.Random(5)
        for _ in range(100):
            k = rng.randint(2, 5)
            values = [rng.uniform(-3, 3) for _ in range(k)]
            if max(values) - min(values) < 1e-6:
                continue
            weights = [rng.random() + 0.05 for _ in range(k)]
            total = sum(weights)
            probs = [w / total for w in weights]
            thetas = sorted(rng.uniform(-3, 3) for _ in range(3))
            ce = [risk_payoff(values, probs, t) for t in thetas]
            assert ce[0] < ce[1] < ce[2]

    def test_overflow_guard(self):
        # |theta * r| around 700 must not overflow
        value = risk_payoff([700, -700], [0.5, 0.5], 1.0)
        assert math.isfinite(value)
        assert value == pytest.approx(700 - math.log(2), abs=1e-6)

    def test_rejects_bad_probs(self):
        with pytest.raises(ValueError):
            risk_payoff([1, 2], [0.7, 0.7], 0.1)


class TestConfigValidation:
    def test_named_invariants(self):
        with pytest.raises(ValueError, match="budgets"):
            AuctionConfig.create(n=1, m=1, valuations=5, budgets=0)
        with pytest.raises(ValueError, match="valuations"):
            AuctionConfig.create(n=1, m=1, valuations=-2, budgets=5)
        with pytest.raises(ValueError, match="bid_cap"):
            AuctionConfig.create(n=1, m=1, valuations=5, budgets=5, bid_cap=0)

    def test_broadcasting(self):
        cfg = AuctionConfig.create(n=2, m=2, valuations=(3, 4), c=1, c_r=0,
                                   budgets=5, bid_cap=4)
        assert cfg.valuations == ((3, 3), (4, 4))
        assert cfg.c == (1, 1)
        assert cfg.theta == (0.0, 0.0)

    def test_profile_bid_cap(self):
        cfg = AuctionConfig.create(n=1, m=1, valuations=9, budgets=9, bid_cap=3)
        with pytest.raises(ValueError, match="bid_cap"):
            BidProfile.single_item([{5}]).validate_against(cfg)
