"""Mechanics of multi-item lowest-unique-bid auctions with resubmission.

A bidder may place several distinct positive integer bids on each item,
paying a submission fee per bid plus a registration fee per item entered.
On each item the lowest bid held by exactly one bidder wins; that bidder
pays the winning bid. If no bid is unique the item is not sold.

All operations here are pure functions of immutable values. Monetary
amounts may be ints, Fractions or floats; arithmetic stays exact when the
inputs are exact.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from numbers import Real


class CapExceededError(RuntimeError):
    """An enumeration or search exceeded its configured size cap."""


class ActionSet(frozenset):
    """The set of distinct positive integer bids one bidder places on one item.

    The empty set encodes non-participation. Cardinality equals the number
    of (re)submissions paid for.
    """

    def __new__(cls, bids=()):
        bids = frozenset(bids)
        for b in bids:
            if not isinstance(b, int) or isinstance(b, bool) or b < 1:
                raise ValueError(f"bids must be integers >= 1, got {b!r}")
        return super().__new__(cls, bids)

    @property
    def resubmissions(self) -> int:
        return len(self)

    def lowest(self) -> int | None:
        return min(self) if self else None

    def __repr__(self) -> str:
        return "{" + ",".join(str(b) for b in sorted(self)) + "}"


#: Non-participation (the empty bid set).
NO_BID = ActionSet()


def prefix_set(length: int) -> ActionSet:
    """The bid set {1, ..., length}; length 0 gives non-participation."""
    return ActionSet(range(1, length + 1))


def _as_tuple(value, count, name):
    """Broadcast a scalar to a tuple of the given length."""
    if isinstance(value, Real):
        return (value,) * count
    out = tuple(value)
    if len(out) != count:
        raise ValueError(f"{name} must have length {count}, got {len(out)}")
    return out


@dataclass(frozen=True)
class AuctionConfig:
    """Static data of one multi-item auction.

    Attributes:
        n: number of bidders (>= 1).
        m: number of items (>= 1).
        c_r: registration fee, charged once per (bidder, item) participation.
        c: per-item submission costs, length m.
        budgets: per-bidder total budgets, length n.
        valuations: n x m matrix of item values.
        bid_cap: largest admissible bid on any item.
        theta: per-bidder risk indices; 0 means risk-neutral.
    """

    n: int
    m: int
    c_r: Real
    c: tuple
    budgets: tuple
    valuations: tuple
    bid_cap: int
    theta: tuple

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.c_r < 0:
            raise ValueError("registration fee c_r must be >= 0")
        if len(self.c) != self.m or any(ci < 0 for ci in self.c):
            raise ValueError("submission costs c must be m values >= 0")
        if len(self.budgets) != self.n or any(b <= 0 for b in self.budgets):
            raise ValueError("budgets must be n values > 0")
        if len(self.valuations) != self.n or any(
            len(row) != self.m for row in self.valuations
        ):
            raise ValueError("valuations must be an n x m matrix")
        if any(v <= 0 for row in self.valuations for v in row):
            raise ValueError("valuations must be > 0")
        if self.bid_cap < 1:
            raise ValueError("bid_cap must be >= 1")
        if len(self.theta) != self.n or any(not math.isfinite(t) for t in self.theta):
            raise ValueError("theta must be n finite values")

    @classmethod
    def create(cls, n, m, valuations, c=1, c_r=0, budgets=None, bid_cap=None,
               theta=0.0):
        """Build a config, broadcasting scalar fees, budgets and valuations.

        ``valuations`` may be a scalar (all bidders, all items), a length-n
        sequence (one value per bidder, broadcast over items) or a full
        n x m matrix.
        """
        c = _as_tuple(c, m, "c")
        if isinstance(valuations, Real):
            vals = tuple((valuations,) * m for _ in range(n))
        else:
            rows = tuple(valuations)
            if rows and isinstance(rows[0], Real):
                if len(rows) != n:
                    raise ValueError("per-bidder valuations must have length n")
                vals = tuple((v,) * m for v in rows)
            else:
                vals = tuple(tuple(row) for row in rows)
        if budgets is None:
            budgets = max(max(row) for row in vals)
        budgets = _as_tuple(budgets, n, "budgets")
        if bid_cap is None:
            bid_cap = max(
                1,
                max(
                    int(min(b, max(row)))
                    for b, row in zip(budgets, vals)
                ),
            )
        theta = _as_tuple(theta, n, "theta")
        return cls(n=n, m=m, c_r=c_r, c=c, budgets=budgets, valuations=vals,
                   bid_cap=bid_cap, theta=theta)


@dataclass(frozen=True)
class BidProfile:
    """One action per (bidder, item): rows are bidders, columns items."""

    actions: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "actions",
            tuple(tuple(ActionSet(a) for a in row) for row in self.actions),
        )

    @classmethod
    def single_item(cls, bid_sets) -> "BidProfile":
        return cls(tuple((ActionSet(a),) for a in bid_sets))

    @property
    def n(self) -> int:
        return len(self.actions)

    @property
    def m(self) -> int:
        return len(self.actions[0]) if self.actions else 0

    def row(self, bidder: int) -> tuple:
        return self.actions[bidder]

    def item_bids(self, item: int) -> list:
        return [row[item] for row in self.actions]

    def replace(self, bidder: int, row) -> "BidProfile":
        rows = list(self.actions)
        rows[bidder] = tuple(ActionSet(a) for a in row)
        return BidProfile(tuple(rows))

    def validate_against(self, config: AuctionConfig) -> None:
        if self.n != config.n or any(len(row) != config.m for row in self.actions):
            raise ValueError(
                f"profile shape {self.n}x{self.m} does not match config "
                f"{config.n}x{config.m}"
            )
        for row in self.actions:
            for a in row:
                if a and max(a) > config.bid_cap:
                    raise ValueError(f"bid {max(a)} exceeds bid_cap {config.bid_cap}")


@dataclass(frozen=True)
class ItemOutcome:
    """Resolution of one item: bid histogram, unique bids, winner."""

    histogram: dict
    unique_bids: frozenset
    winning_bid: int | None
    winner: int | None


@dataclass(frozen=True)
class PayoffReport:
    """Per-(bidder, item) payoffs plus totals and the auctioneer side."""

    bidder_payoffs: tuple
    bidder_totals: tuple
    auctioneer_payoffs: tuple
    auctioneer_total: Real


def resolve_item(bid_sets) -> ItemOutcome:
    """Determine the lowest unique bid and its holder on one item.

    Args:
        bid_sets: one ActionSet (or iterable of bids) per bidder.

    Returns:
        ItemOutcome; ``winner`` is None when no bid is unique.
    """
    sets = [ActionSet(b) for b in bid_sets]
    histogram = Counter()
    for s in sets:
        histogram.update(s)
    unique = frozenset(b for b, count in histogram.items() if count == 1)
    if not unique:
        return ItemOutcome(dict(histogram), unique, None, None)
    winning_bid = min(unique)
    winner = next(j for j, s in enumerate(sets) if winning_bid in s)
    return ItemOutcome(dict(histogram), unique, winning_bid, winner)


def resolve_profile(profile: BidProfile, config: AuctionConfig | None = None):
    """Resolve every item of a profile; returns a list of ItemOutcome."""
    if config is not None:
        profile.validate_against(config)
    return [resolve_item(profile.item_bids(i)) for i in range(profile.m)]


def _item_payoff(action: ActionSet, outcome: ItemOutcome, bidder, v, c_i, c_r):
    """Payoff of one bidder on one item: zero iff not participating."""
    if not action:
        return 0
    cost = len(action) * c_i + c_r
    if outcome.winner == bidder:
        return v - cost - outcome.winning_bid
    return -cost


def bidder_payoffs(profile: BidProfile, config: AuctionConfig, outcomes=None,
                   auctioneer_valuations=None) -> PayoffReport:
    """Evaluate every bidder's payoff on every item of a resolved profile.

    The winner of item i earns ``v_ji - |B_ji| c_i - winning_bid - c_r``,
    any other participant pays ``|B_ji| c_i + c_r``, and non-participants
    earn exactly zero.

    Args:
        profile: the bid profile to evaluate.
        config: auction parameters; dimensions must match the profile.
        outcomes: optional pre-resolved per-item outcomes.
        auctioneer_valuations: optional per-item seller valuations (0 if
            omitted) used for the auctioneer side of the report.
    """
    profile.validate_against(config)
    if outcomes is None:
        outcomes = resolve_profile(profile)
    v_a = _as_tuple(auctioneer_valuations if auctioneer_valuations is not None else 0,
                    config.m, "auctioneer_valuations")
    matrix = tuple(
        tuple(
            _item_payoff(profile.actions[j][i], outcomes[i], j,
                         config.valuations[j][i], config.c[i], config.c_r)
            for i in range(config.m)
        )
        for j in range(config.n)
    )
    totals = tuple(sum(row) for row in matrix)
    seller = tuple(
        _auctioneer_item_payoff(profile, config, outcomes[i], i, v_a[i])
        for i in range(config.m)
    )
    return PayoffReport(matrix, totals, seller, sum(seller))


def _auctioneer_item_payoff(profile, config, outcome, item, v_a):
    fees = sum(
        config.c_r + len(profile.actions[j][item]) * config.c[item]
        for j in range(config.n)
        if profile.actions[j][item]
    )
    price = outcome.winning_bid if outcome.winning_bid is not None else 0
    return fees + price - v_a


def auctioneer_revenue(profile: BidProfile, config: AuctionConfig,
                       auctioneer_valuations, outcomes=None) -> tuple:
    """Per-item seller payoff: fees collected plus winning bid minus value."""
    profile.validate_against(config)
    if outcomes is None:
        outcomes = resolve_profile(profile)
    v_a = _as_tuple(auctioneer_valuations, config.m, "auctioneer_valuations")
    return tuple(
        _auctioneer_item_payoff(profile, config, outcomes[i], i, v_a[i])
        for i in range(config.m)
    )


def spend(row, config: AuctionConfig, bidder: int, settlement="ex_ante",
          outcomes=None):
    """Total outlay of one bidder's action row under a settlement mode.

    ``ex_ante`` charges the worst case: fees plus the highest own bid per
    item (a winner never pays more than its own largest bid). ``ex_post``
    charges fees plus the realized winning payments and needs resolved
    outcomes.
    """
    row = tuple(ActionSet(a) for a in row)
    total = 0
    for i, action in enumerate(row):
        if not action:
            continue
        total += config.c_r + len(action) * config.c[i]
        if settlement == "ex_ante":
            total += max(action)
        elif settlement == "ex_post":
            if outcomes is None:
                raise ValueError("ex_post settlement requires resolved outcomes")
            if outcomes[i].winner == bidder:
                total += outcomes[i].winning_bid
        else:
            raise ValueError(f"unknown settlement mode {settlement!r}")
    return total


def is_feasible(row, config: AuctionConfig, bidder: int, settlement="ex_ante",
                outcomes=None) -> bool:
    """Whether a bidder's action row fits within its budget."""
    return spend(row, config, bidder, settlement, outcomes) <= config.budgets[bidder]


@dataclass(frozen=True)
class ActionBounds:
    """Undominated bid range for one (bidder, item): see reduce_action_space."""

    max_bid: int
    max_resubmissions: int


def reduce_action_space(config: AuctionConfig, bidder: int, item: int) -> ActionBounds:
    """Dominance bounds on one bidder's bids for one item.

    Bidding above ``min(v - c_r, budget)`` or submitting more than
    ``(v - c_r) / c`` bids is dominated by staying out; when the value does
    not even cover one submission plus registration, staying out is the
    only undominated action and both bounds are zero.
    """
    v = config.valuations[bidder][item]
    c_i = config.c[item]
    if v < c_i + config.c_r:
        return ActionBounds(0, 0)
    max_bid = math.floor(min(v - config.c_r, config.budgets[bidder], config.bid_cap))
    max_bid = max(max_bid, 0)
    if c_i > 0:
        max_resub = math.floor((v - config.c_r) / c_i)
    else:
        max_resub = max_bid
    return ActionBounds(max_bid, max(max_resub, 0))


#: Exhaustive subset enumeration is refused above this many bid levels.
FULL_SUBSET_CAP = 20


def enumerate_actions(config: AuctionConfig, bidder: int, item: int,
                      mode="full_subsets") -> list:
    """Ordered action space for one (bidder, item) after dominance reduction.

    ``full_subsets`` lists all subsets of {1..max_bid} (including staying
    out), ordered by cardinality then lexicographically; ``prefix_sets``
    lists only the nested sets {}, {1}, {1,2}, ... which carry the
    two-bidder equilibrium support.
    """
    top = reduce_action_space(config, bidder, item).max_bid
    if mode == "prefix_sets":
        return [prefix_set(length) for length in range(top + 1)]
    if mode == "full_subsets":
        if top > FULL_SUBSET_CAP:
            raise CapExceededError(
                f"2^{top} subsets exceed the full_subsets cap of 2^{FULL_SUBSET_CAP}"
            )
        out = []
        for size in range(top + 1):
            for combo in combinations(range(1, top + 1), size):
                out.append(ActionSet(combo))
        return out
    raise ValueError(f"unknown action mode {mode!r}")


def risk_payoff(values, probs, theta) -> float:
    """Certainty equivalent of a payoff distribution under exponential risk.

    Returns ``(1/theta) ln E[exp(theta r)]`` for theta != 0 and the plain
    expectation for theta == 0. The log-sum is max-shifted so exponents up
    to |theta * r| ~ 700 stay finite.
    """
    values = list(values)
    probs = list(probs)
    if len(values) != len(probs):
        raise ValueError("values and probs must have equal length")
    total = sum(probs)
    if abs(total - 1) > 1e-9:
        raise ValueError("probs must sum to 1")
    if theta == 0:
        return sum(p * r for p, r in zip(probs, values))
    shift = max(theta * r for p, r in zip(probs, values) if p > 0)
    acc = sum(p * math.exp(theta * r - shift) for p, r in zip(probs, values) if p > 0)
    return (shift + math.log(acc)) / theta
