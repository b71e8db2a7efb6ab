"""Equilibrium solvers and exhaustive oracles for lowest-unique-bid auctions.

Closed forms: the two-bidder partially mixed equilibrium over nested prefix
bid sets (risk-neutral and risk-sensitive), the asymmetric 3x4 two-bidder
game, the 2x2 single-bid risk game, and the symmetric three-bidder game
over {}, {1}, {2}, {1,2}. Oracles: exact expected-payoff enumeration,
regret certification, exhaustive pure-equilibrium search, better-reply
cycle construction and the bidders' global-optimum benchmark.

Payoffs are kept in exact rational arithmetic whenever the inputs are
ints or Fractions, so argmax comparisons and regret checks have no float
ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from numbers import Real

from .auction import (
    NO_BID,
    ActionSet,
    AuctionConfig,
    BidProfile,
    CapExceededError,
    bidder_payoffs,
    enumerate_actions,
    is_feasible,
    prefix_set,
    resolve_item,
)

#: Enumeration cap on the product of opponent support sizes.
ENUM_CAP = 10**6
#: Cap on the joint pure-action space searched exhaustively.
SEARCH_CAP = 10**7

SUPPORT_EPS = 1e-12


def _exact(*values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


@dataclass(frozen=True)
class MixedStrategy:
    """A probability vector over an explicitly enumerated action list."""

    actions: tuple
    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "probs", tuple(self.probs))
        if len(self.actions) != len(self.probs):
            raise ValueError("actions and probs must have equal length")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(self.probs) - 1) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    @property
    def support(self) -> tuple:
        return tuple(i for i, p in enumerate(self.probs) if p > SUPPORT_EPS)

    @property
    def support_actions(self) -> tuple:
        return tuple(self.actions[i] for i in self.support)

    def prob_of(self, action):
        for a, p in zip(self.actions, self.probs):
            if a == action:
                return p
        return 0

    @classmethod
    def uniform(cls, actions) -> "MixedStrategy":
        actions = tuple(actions)
        share = Fraction(1, len(actions))
        return cls(actions, (share,) * len(actions))


@dataclass(frozen=True)
class EquilibriumCertificate:
    """Regret certificate for a strategy profile.

    ``max_regret`` is the largest payoff improvement any bidder can get by
    a unilateral pure deviation within its action space; the profile is
    certified iff that is within tolerance.
    """

    strategies: tuple
    max_regret: Real
    equilibrium_payoffs: tuple
    supported_payoffs: tuple
    tol: float
    certified: bool


def _as_row(action, m: int) -> tuple:
    """Normalize an action to a per-item row of ActionSets."""
    if isinstance(action, (ActionSet, frozenset, set)):
        row = (ActionSet(action),)
    else:
        row = tuple(ActionSet(a) for a in action)
    if len(row) != m:
        raise ValueError(f"action covers {len(row)} items, config has {m}")
    return row


@lru_cache(maxsize=200_000)
def _resolve_cached(item_bids: tuple):
    return resolve_item(item_bids)


def _own_payoff(rows, config: AuctionConfig, bidder: int):
    """Focal bidder's total payoff for one pure joint profile."""
    total = 0
    for i in range(config.m):
        outcome = _resolve_cached(tuple(row[i] for row in rows))
        action = rows[bidder][i]
        if not action:
            continue
        cost = len(action) * config.c[i] + config.c_r
        if outcome.winner == bidder:
            total += config.valuations[bidder][i] - cost - outcome.winning_bid
        else:
            total -= cost
    return total


def _opponent_terms(config, bidder, opponent_strategies, cap):
    """Yield (probability, opponent rows by bidder index) over supports."""
    others = [j for j in range(config.n) if j != bidder]
    if len(opponent_strategies) != len(others):
        raise ValueError(
            f"expected {len(others)} opponent strategies, got "
            f"{len(opponent_strategies)}"
        )
    supports = []
    size = 1
    for strat in opponent_strategies:
        entries = [(strat.probs[i], _as_row(strat.actions[i], config.m))
                   for i in strat.support]
        supports.append(entries)
        size *= len(entries)
    if size > cap:
        raise CapExceededError(f"{size} opponent combinations exceed cap {cap}")
    for combo in product(*supports):
        prob = 1
        for p, _ in combo:
            prob = prob * p
        yield prob, dict(zip(others, (row for _, row in combo)))


def expected_payoff(config: AuctionConfig, bidder: int, action,
                    opponent_strategies, cap: int = ENUM_CAP):
    """Expected payoff of a pure action against mixed opponents.

    Enumerates every combination of opponent support actions exactly.
    When the bidder's risk index is nonzero the certainty equivalent
    ``(1/theta) ln E[exp(theta r)]`` is returned instead of the mean.
    """
    theta = config.theta[bidder]
    if theta != 0:
        moment = expected_payoff_moment(config, bidder, action,
                                        opponent_strategies, cap)
        return math.log(moment) / theta
    row = _as_row(action, config.m)
    total = 0
    for prob, opp_rows in _opponent_terms(config, bidder, opponent_strategies, cap):
        rows = [opp_rows.get(j, row) for j in range(config.n)]
        rows[bidder] = row
        total += prob * _own_payoff(tuple(rows), config, bidder)
    return total


def expected_payoff_moment(config: AuctionConfig, bidder: int, action,
                           opponent_strategies, cap: int = ENUM_CAP) -> float:
    """E[exp(theta_j r_j)] of a pure action against mixed opponents.

    The risk-sensitive indifference condition makes this exactly 1 on
    every equilibrium support action.
    """
    theta = config.theta[bidder]
    if theta == 0:
        raise ValueError("moment oracle needs a nonzero risk index")
    row = _as_row(action, config.m)
    total = 0.0
    for prob, opp_rows in _opponent_terms(config, bidder, opponent_strategies, cap):
        rows = [opp_rows.get(j, row) for j in range(config.n)]
        rows[bidder] = row
        total += float(prob) * math.exp(theta * float(_own_payoff(tuple(rows),
                                                                  config, bidder)))
    return total


def _mixture_payoff(config, bidder, strategy, opponent_strategies, cap):
    theta = config.theta[bidder]
    if theta == 0:
        return sum(
            strategy.probs[i] * expected_payoff(config, bidder,
                                                strategy.actions[i],
                                                opponent_strategies, cap)
            for i in strategy.support
        )
    moment = sum(
        float(strategy.probs[i]) * expected_payoff_moment(
            config, bidder, strategy.actions[i], opponent_strategies, cap)
        for i in strategy.support
    )
    return math.log(moment) / theta


def default_action_spaces(config: AuctionConfig, mode="full_subsets") -> list:
    """Per-bidder joint action lists: per-item spaces combined and filtered
    by ex-ante budget feasibility."""
    spaces = []
    for j in range(config.n):
        per_item = [enumerate_actions(config, j, i, mode) for i in range(config.m)]
        joint = [row for row in product(*per_item)
                 if is_feasible(row, config, j, "ex_ante")]
        spaces.append(joint)
    return spaces


def verify_equilibrium(config: AuctionConfig, strategies, action_spaces=None,
                       tol: float = 1e-9, cap: int = ENUM_CAP) -> EquilibriumCertificate:
    """Certify a strategy profile by exhaustive unilateral deviation.

    Args:
        config: the game.
        strategies: one MixedStrategy per bidder.
        action_spaces: deviation actions per bidder; defaults to every
            ex-ante feasible combination of full-subset actions.
        tol: certification threshold on the regret.

    Returns:
        EquilibriumCertificate with the worst regret over all bidders and
        pure deviations, and each bidder's expected payoff on its own
        support actions (equal at an exact equilibrium).
    """
    strategies = tuple(strategies)
    if len(strategies) != config.n:
        raise ValueError(f"need {config.n} strategies, got {len(strategies)}")
    if action_spaces is None:
        action_spaces = default_action_spaces(config)
    max_regret = 0
    eq_payoffs = []
    supported = []
    for j in range(config.n):
        opponents = [strategies[k] for k in range(config.n) if k != j]
        base = _mixture_payoff(config, j, strategies[j], opponents, cap)
        eq_payoffs.append(base)
        supported.append(tuple(
            expected_payoff(config, j, strategies[j].actions[i], opponents, cap)
            for i in strategies[j].support
        ))
        for action in action_spaces[j]:
            gain = expected_payoff(config, j, action, opponents, cap) - base
            if gain > max_regret:
                max_regret = gain
    return EquilibriumCertificate(
        strategies=strategies,
        max_regret=max_regret,
        equilibrium_payoffs=tuple(eq_payoffs),
        supported_payoffs=tuple(supported),
        tol=tol,
        certified=max_regret <= tol,
    )


def prefix_ladder(top: int) -> tuple:
    """Actions {}, {1}, {1,2}, ..., {1..top}."""
    return tuple(prefix_set(length) for length in range(top + 1))


def two_bidder_mixed_eq(v, c, b_max: int) -> MixedStrategy:
    """Symmetric two-bidder equilibrium over nested prefix bid sets.

    The strategy puts mass c/(v-1) on staying out, c/(v-(l+1)) on the
    prefix {1..l} for l = 1..k-1, and the remainder on {1..k}, where k is
    the largest index keeping the partial sum below 1 (capped by b_max).
    Every support action then earns exactly zero against the strategy.

    Exact Fractions are returned when v and c are rational.
    """
    if v <= c + 1:
        raise ValueError("need v > c + 1 for participation to be viable")
    if b_max < 1:
        raise ValueError("b_max must be >= 1")
    if _exact(v, c):
        v, c = Fraction(v), Fraction(c)
    k = 0
    total = 0 * v
    terms = []
    while k < b_max and v - (k + 1) > 0:
        term = c / (v - (k + 1))
        if total + term >= 1:
            break
        terms.append(term)
        total += term
        k += 1
    probs = terms + [1 - total] + [0 * v] * (b_max - k)
    return MixedStrategy(prefix_ladder(b_max), tuple(probs))


def two_bidder_risk_eq(v, c, theta, b_max: int) -> MixedStrategy:
    """Risk-sensitive version of the two-bidder prefix-set equilibrium.

    Under exponential risk utility exp(theta r), the indifference system
    gives mass (e^{(l+1) theta c} - e^{l theta c}) / (e^{theta (v-(l+1))} - 1)
    to index l; every support action then satisfies E[e^{theta r}] = 1.
    Delegates to the risk-neutral solver when theta is zero.
    """
    if theta == 0:
        return two_bidder_mixed_eq(v, c, b_max)
    if v <= c + 1:
        raise ValueError("need v > c + 1 for participation to be viable")
    v, c, theta = float(v), float(c), float(theta)
    k = 0
    total = 0.0
    terms = []
    while k < b_max and v - (k + 1) > 0:
        # exp(l*t*c) * expm1(t*c) = e^{(l+1)tc} - e^{ltc}, stable for tiny theta
        term = (math.exp(k * theta * c) * math.expm1(theta * c)
                / math.expm1(theta * (v - (k + 1))))
        if total + term >= 1:
            break
        terms.append(term)
        total += term
        k += 1
    probs = terms + [1.0 - total] + [0.0] * (b_max - k)
    return MixedStrategy(prefix_ladder(b_max), tuple(probs))


def asymmetric_two_bidder_eq(v, c):
    """Mixed equilibrium of the asymmetric game with supports of size 3 and 4.

    Bidder 1 mixes over ({}, {1}, {1,2}) and bidder 2 over
    ({}, {1}, {1,2}, {1,2,3}); bidder 1's participation actions all leave
    bidder 2 indifferent and vice versa.
    """
    if _exact(v, c):
        v, c = Fraction(v), Fraction(c)
    x = (1 - c / (v - 2) - c / (v - 3), c / (v - 2), c / (v - 3))
    y = (c / (v - 1), c / (v - 2), c / (v - 3),
         1 - c / (v - 1) - c / (v - 2) - c / (v - 3))
    for p in x + y:
        if p < 0 or p > 1:
            raise ValueError(f"value {v} too small: component {p} outside [0, 1]")
    return (
        MixedStrategy(prefix_ladder(2), x),
        MixedStrategy(prefix_ladder(3), y),
    )


def two_by_two_risk_eq(v, theta_1, theta_2):
    """Mixed equilibrium of the 2x2 single-bid risk game over (no-bid, bid-1).

    Winning nets v - 1, a losing participant pays 1, staying out pays
    nothing. Bidder 1's no-bid probability (1 - e^{theta_2})/(1 - e^{v theta_2})
    uses the opponent's risk index (it is what makes bidder 2 indifferent),
    and symmetrically for bidder 2. A zero index falls back to the
    risk-neutral value 1/v.
    """
    if v <= 1:
        raise ValueError("need v > 1")

    def no_bid_prob(theta):
        if theta == 0:
            return Fraction(1, v) if _exact(v) else 1.0 / v
        return math.expm1(theta) / math.expm1(v * theta)

    actions = (NO_BID, ActionSet({1}))
    p1 = no_bid_prob(theta_2)
    p2 = no_bid_prob(theta_1)
    return (
        MixedStrategy(actions, (p1, 1 - p1)),
        MixedStrategy(actions, (p2, 1 - p2)),
    )


def three_bidder_symmetric_eq(v, c) -> MixedStrategy:
    """Symmetric three-bidder equilibrium over ({}, {1}, {2}, {1,2}).

    Solves the indifference identities (x0+x2)^2 = c/(v-1) and
    x0^2 + x1^2 = 2 x0 x1 + x1^2 = c/(v-2), which force x0 = 2 x1. All
    four actions carry positive mass in the feasible range, so the support
    is not a nested chain of bid sets.
    """
    v, c = float(v), float(c)
    x1 = math.sqrt(c / (5 * (v - 2)))
    x0 = 2 * x1
    x2 = math.sqrt(c / (v - 1)) - x0
    x12 = 1 - x0 - x1 - x2
    probs = (x0, x1, x2, x12)
    if any(p <= 0 or p >= 1 for p in probs):
        raise ValueError(f"no interior equilibrium at v={v}, c={c}: {probs}")
    actions = (NO_BID, ActionSet({1}), ActionSet({2}), ActionSet({1, 2}))
    return MixedStrategy(actions, probs)


def pure_eq_search(config: AuctionConfig, mode="full_subsets",
                   action_spaces=None, cap: int = SEARCH_CAP) -> list:
    """Exhaustively list all pure Nash equilibria of the constrained game.

    Action spaces default to every ex-ante budget-feasible combination of
    per-item actions. A profile qualifies iff no bidder has a strictly
    improving unilateral deviation. Generically the result is empty;
    special cases (tight budgets, single-bid restrictions) do admit pure
    equilibria.
    """
    if action_spaces is None:
        action_spaces = default_action_spaces(config, mode)
    size = 1
    for space in action_spaces:
        size *= len(space)
    if size > cap:
        raise CapExceededError(f"{size} joint profiles exceed cap {cap}")

    equilibria = []
    for rows in product(*action_spaces):
        if _is_pure_nash(rows, config, action_spaces):
            equilibria.append(BidProfile(rows))
    return equilibria


def _is_pure_nash(rows, config, action_spaces) -> bool:
    for j in range(config.n):
        current = _own_payoff(rows, config, j)
        trial = list(rows)
        for alt in action_spaces[j]:
            if alt == rows[j]:
                continue
            trial[j] = alt
            if _own_payoff(tuple(trial), config, j) > current:
                return False
        trial[j] = rows[j]
    return True


def single_bid_pure_eq(config: AuctionConfig) -> list:
    """Pure equilibria of the special case with at most one bid per item.

    Enumerates 0/1 assignment matrices with exactly one bidder per item,
    row sums within budgets, and every assigned bidder valuing its item
    above 1 + c_i + c_r. Returned as n x m tuples of 0/1.
    """
    out = []
    for assignment in product(range(config.n), repeat=config.m):
        matrix = [[0] * config.m for _ in range(config.n)]
        ok = True
        for i, j in enumerate(assignment):
            if config.valuations[j][i] <= 1 + config.c[i] + config.c_r:
                ok = False
                break
            matrix[j][i] = 1
        if not ok:
            continue
        if any(sum(row) > config.budgets[j] for j, row in enumerate(matrix)):
            continue
        out.append(tuple(tuple(row) for row in matrix))
    return out


def _single_item_profile(config, assignments) -> BidProfile:
    rows = []
    for j in range(config.n):
        row = [NO_BID] * config.m
        row[0] = assignments.get(j, NO_BID)
        rows.append(tuple(row))
    return BidProfile(tuple(rows))


def better_reply_cycle(config: AuctionConfig):
    """Build the ladder of strictly improving deviations that closes a cycle.

    On item 0, bidders enter one by one with ever longer prefix sets (each
    new entrant wins at its top bid), leave from the front once beaten,
    the survivor shortens to {1}, bidder 0 re-enters with {1,2}, the
    survivor leaves, and bidder 0 shortens back to {1} - returning to the
    start. Rungs a bidder cannot fund are dropped, shrinking the ladder;
    with fewer than two fundable entrants there is no cycle and None is
    returned.

    The returned profiles p_0..p_{K-1} wrap around: step K moves from
    p_{K-1} back to p_0. Every step is validated to strictly improve its
    mover.
    """
    c, c_r = config.c[0], config.c_r

    def rung_ok(j, k):
        v = config.valuations[j][0]
        return (
            v - k * c - k - c_r > 0
            and c_r + k * c + k <= config.budgets[j]
            and k <= config.bid_cap
        )

    q = 0
    for j in range(config.n):
        if rung_ok(j, j + 1):
            q += 1
        else:
            break
    if q < 2 or not rung_ok(0, 2):
        return None

    assignments = {0: prefix_set(1)}
    profiles = [_single_item_profile(config, assignments)]

    def push():
        profiles.append(_single_item_profile(config, assignments))

    for j in range(1, q):          # entries with growing prefixes
        assignments[j] = prefix_set(j + 1)
        push()
    for j in range(q - 1):         # beaten bidders leave from the front
        del assignments[j]
        push()
    assignments[q - 1] = prefix_set(1)   # survivor shortens to {1}
    push()
    assignments[0] = prefix_set(2)       # bidder 0 re-enters and wins at 2
    push()
    del assignments[q - 1]               # beaten survivor leaves
    push()
    # bidder 0 shortening {1,2} -> {1} closes the cycle back to profiles[0]

    if not is_better_reply_cycle(config, profiles):
        return None
    return profiles


def is_better_reply_cycle(config: AuctionConfig, profiles) -> bool:
    """Check that consecutive profiles (wrapping) are strict better replies.

    Each step must change exactly one bidder's actions and strictly
    increase that bidder's total payoff.
    """
    count = len(profiles)
    if count < 2:
        return False
    for t in range(count):
        cur, nxt = profiles[t], profiles[(t + 1) % count]
        movers = [j for j in range(config.n) if cur.actions[j] != nxt.actions[j]]
        if len(movers) != 1:
            return False
        j = movers[0]
        before = _own_payoff(cur.actions, config, j)
        after = _own_payoff(nxt.actions, config, j)
        if not after > before:
            return False
    return True


@dataclass(frozen=True)
class GlobalOptimum:
    """Bidders' global-optimum surplus and its gap to equilibrium surplus."""

    go_payoff: Real
    inefficiency_gap: Real
    witness: BidProfile


def pareto_and_global_optimum(config: AuctionConfig) -> GlobalOptimum:
    """Best total bidder surplus and its witness profile.

    Per item, the highest-valuation bidder bids a lone 1 cent (when
    profitable and fundable), winning at the floor price; everyone else
    stays out. Mixed-equilibrium bidder surplus is zero, so the
    inefficiency gap equals the optimum itself.
    """
    rows = [[NO_BID] * config.m for _ in range(config.n)]
    committed = [0] * config.n
    go_payoff = 0
    for i in range(config.m):
        best = max(range(config.n), key=lambda j: config.valuations[j][i])
        value = config.valuations[best][i]
        gain = value - config.c[i] - config.c_r - 1
        outlay = config.c_r + config.c[i] + 1
        if gain <= 0 or committed[best] + outlay > config.budgets[best]:
            continue
        rows[best][i] = ActionSet({1})
        committed[best] += outlay
        go_payoff += gain
    witness = BidProfile(tuple(tuple(row) for row in rows))
    return GlobalOptimum(go_payoff, go_payoff - 0, witness)
