"""Strategic learning for lowest-unique-bid auctions.

Two learners are provided. The imitative payoff-and-strategy learner
keeps a per-action payoff estimate updated from own observations only and
tilts its mixed strategy multiplicatively by (1+lambda)^estimate - the
imitative Boltzmann-Gibbs rule with temperature 1/ln(1+lambda), whose
small-rate limit is the replicator dynamics. The Monte-Carlo learner
keeps a belief over single bids and eliminates bids from system feedback
("non-unique" / "too high"), redistributing their mass.

Runs are sequential and deterministic for a given seed: all randomness
flows through one counter-based Philox generator, so trajectories are
bit-reproducible across platforms.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from numbers import Real

import numpy as np

from .auction import ActionSet, AuctionConfig, NO_BID, enumerate_actions, resolve_item

FEEDBACK_KINDS = ("win", "non_unique", "too_high")


@dataclass
class LearningState:
    """Mutable per-run learner state, exclusively owned by its run.

    ``r_hat[j][i]`` and ``strategy[j][i]`` are vectors over the enumerated
    action list ``actions[j][i]``.
    """

    actions: tuple
    r_hat: list
    strategy: list
    remaining_budget: list
    alpha: float
    lam: float
    epsilon: float

    def copy(self) -> "LearningState":
        return LearningState(
            actions=self.actions,
            r_hat=[[r.copy() for r in row] for row in self.r_hat],
            strategy=[[s.copy() for s in row] for row in self.strategy],
            remaining_budget=list(self.remaining_budget),
            alpha=self.alpha,
            lam=self.lam,
            epsilon=self.epsilon,
        )


def _normalized_exp(log_weights: np.ndarray) -> np.ndarray:
    """Exponentiate max-shifted log weights and normalize to a distribution."""
    shift = np.max(log_weights)
    if not np.isfinite(shift):
        raise ValueError("all strategy weights vanished")
    w = np.exp(log_weights - shift)
    return w / w.sum()


def codipas_step(state: LearningState, chosen, observed) -> LearningState:
    """One round of the combined payoff-estimate and strategy update.

    For every bidder and item, the estimate of the action actually played
    moves toward the observed payoff with rate alpha, then the whole
    strategy is reweighted by (1+lambda)^estimate and normalized. The
    exponentiation runs in log space so large estimates cannot overflow.

    Args:
        state: current learner state.
        chosen: chosen[j][i] is the played action index.
        observed: observed[j][i] is the (possibly noisy) realized payoff.

    Returns:
        A new LearningState; the input is left untouched.
    """
    _check_rates(state)
    new = state.copy()
    for j, row in enumerate(new.r_hat):
        for i, r_hat in enumerate(row):
            a = chosen[j][i]
            r_hat[a] += state.alpha * (observed[j][i] - r_hat[a])
            new.strategy[j][i] = _imitation_reweight(new.strategy[j][i],
                                                     r_hat, state.lam)
    return new


def codipas_step_counterfactual(state: LearningState, observed) -> LearningState:
    """Payoff-and-strategy update from per-action payoff observations.

    Same rule as ``codipas_step`` but ``observed[j][i]`` is a full vector:
    the payoff every action would have earned against the round's realized
    opponent bids (computable from the published bid statistics). Every
    estimate is refreshed, which removes the stale-estimate drift that
    pure own-action feedback suffers from.
    """
    _check_rates(state)
    new = state.copy()
    for j, row in enumerate(new.r_hat):
        for i, r_hat in enumerate(row):
            r_hat += state.alpha * (np.asarray(observed[j][i]) - r_hat)
            new.strategy[j][i] = _imitation_reweight(new.strategy[j][i],
                                                     r_hat, state.lam)
    return new


def _check_rates(state) -> None:
    if not 0 < state.alpha <= 1:
        raise ValueError("alpha must be in (0, 1]")
    if state.lam <= 0:
        raise ValueError("lambda must be > 0 (imitation direction)")


def _imitation_reweight(strategy, r_hat, lam) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_w = np.log(strategy) + r_hat * math.log1p(lam)
    return _normalized_exp(log_w)


def ibg_strategy(strategy, r_hat, epsilon: float) -> np.ndarray:
    """Imitative Boltzmann-Gibbs reweighting of a mixed strategy.

    Returns s(B) e^{r_hat(B)/epsilon} normalized, computed max-shifted.
    This is the unique maximizer of expected estimated payoff minus
    epsilon times the relative entropy from the current strategy. Actions
    with zero current mass stay at zero forever; a warning is emitted
    because imitation cannot revive them.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    s = np.asarray(strategy, dtype=float)
    r = np.asarray(r_hat, dtype=float)
    if np.any(s == 0):
        warnings.warn("zero-probability actions can never be revived by imitation",
                      stacklevel=2)
    with np.errstate(divide="ignore"):
        log_w = np.log(s) + r / epsilon
    return _normalized_exp(log_w)


@dataclass(frozen=True)
class IbgValue:
    """Optimal perturbed value and the simplex Lagrange multiplier."""

    w: float
    nu: float


def ibg_value(strategy, r_hat, epsilon: float) -> IbgValue:
    """Value of the entropy-perturbed best reply.

    W = epsilon * ln sum_B s(B) e^{r_hat(B)/epsilon}; the multiplier of the
    simplex constraint is nu = W - epsilon. W falls from max r_hat (high
    rationality, epsilon -> 0) to <s, r_hat> (low rationality,
    epsilon -> infinity).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    s = np.asarray(strategy, dtype=float)
    r = np.asarray(r_hat, dtype=float)
    with np.errstate(divide="ignore"):
        t = np.log(s) + r / epsilon
    shift = np.max(t)
    w = epsilon * (shift + math.log(np.exp(t - shift).sum()))
    return IbgValue(w=w, nu=w - epsilon)


def replicator_field(probs, payoffs) -> list:
    """Time derivative of the replicator dynamics at one strategy point.

    ds(B) = s(B) (payoff(B) - average payoff). Works on exact Fractions as
    well as floats; the components sum to zero whenever the input
    probabilities sum exactly to one.
    """
    probs = list(probs)
    payoffs = list(payoffs)
    if len(probs) != len(payoffs):
        raise ValueError("probs and payoffs must have equal length")
    mean = sum(p * r for p, r in zip(probs, payoffs))
    return [p * (r - mean) for p, r in zip(probs, payoffs)]


@dataclass(frozen=True)
class MonteCarloBelief:
    """Belief over single bids {1..bid_cap} with eliminated bids tracked."""

    bid_cap: int
    delta: tuple
    forbidden: frozenset = frozenset()

    def __post_init__(self):
        if len(self.delta) != self.bid_cap:
            raise ValueError("delta must have one entry per bid 1..bid_cap")
        if abs(sum(self.delta) - 1) > 1e-9:
            raise ValueError("delta must sum to 1")
        if any(self.delta[k - 1] != 0 for k in self.forbidden):
            raise ValueError("forbidden bids must carry zero mass")

    @classmethod
    def uniform(cls, bid_cap: int) -> "MonteCarloBelief":
        if bid_cap < 1:
            raise ValueError("bid_cap must be >= 1")
        return cls(bid_cap, (1.0 / bid_cap,) * bid_cap)

    def allowed(self) -> list:
        return [b for b in range(1, self.bid_cap + 1) if b not in self.forbidden]


def monte_carlo_step(belief: MonteCarloBelief, feedback: str, k: int) -> MonteCarloBelief:
    """Update a single-bid belief from the system's feedback on bid k.

    "win" leaves the belief unchanged. "non_unique" rules k out and
    spreads its mass uniformly over the remaining allowed bids.
    "too_high" rules k out and spreads its mass uniformly over the allowed
    bids strictly below k. When no target bid remains the belief resets to
    uniform over all bids.
    """
    if feedback not in FEEDBACK_KINDS:
        raise ValueError(f"unknown feedback {feedback!r}")
    if not 1 <= k <= belief.bid_cap or k in belief.forbidden:
        raise ValueError(f"bid {k} is not in the belief's support")
    if feedback == "win":
        return belief

    forbidden = belief.forbidden | {k}
    if feedback == "non_unique":
        targets = [b for b in range(1, belief.bid_cap + 1) if b not in forbidden]
    else:
        targets = [b for b in range(1, k) if b not in forbidden]
    if not targets:
        return MonteCarloBelief.uniform(belief.bid_cap)

    mass = belief.delta[k - 1]
    share = mass / len(targets)
    delta = list(belief.delta)
    delta[k - 1] = 0.0
    for b in targets:
        delta[b - 1] += share
    return MonteCarloBelief(belief.bid_cap, tuple(delta), forbidden)


def rmse(current, previous) -> float:
    """Root of the summed squared strategy change across bidders, items
    and actions between two consecutive rounds."""
    total = 0.0
    if len(current) != len(previous):
        raise ValueError("strategy snapshots differ in bidder count")
    for row_now, row_prev in zip(current, previous):
        if len(row_now) != len(row_prev):
            raise ValueError("strategy snapshots differ in item count")
        for s_now, s_prev in zip(row_now, row_prev):
            a, b = np.asarray(s_now, float), np.asarray(s_prev, float)
            if a.shape != b.shape:
                raise ValueError("strategy snapshots differ in action count")
            total += float(((a - b) ** 2).sum())
    return math.sqrt(total)


@dataclass
class Trajectory:
    """Per-iteration record of one seeded learning run."""

    algorithm: str
    seed: int
    noise_std: float
    params: dict
    actions: tuple
    strategies: list = field(default_factory=list)
    payoffs: list = field(default_factory=list)
    winners: list = field(default_factory=list)
    chosen: list = field(default_factory=list)
    rmse_series: list = field(default_factory=list)
    rejections: int = 0

    @property
    def iterations(self) -> int:
        return len(self.strategies)

    def final_strategies(self) -> list:
        return self.strategies[-1]

    def play_frequencies(self, item: int = 0) -> np.ndarray:
        """Empirical distribution of the actions actually played on one
        item, pooled over all bidders and rounds."""
        size = len(self.actions[0][item])
        counts = np.zeros(size)
        for draws in self.chosen:
            for row in draws:
                counts[row[item]] += 1
        return counts / counts.sum()

    def to_csv(self, path, stride: int = 1) -> None:
        """Write rows (iteration, bidder, item, action_id, probability,
        rmse, payoff, winner_flag); bit-identical for identical runs."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "bidder", "item", "action_id",
                             "probability", "rmse", "payoff", "winner_flag"])
            last = self.iterations - 1
            for t in range(self.iterations):
                if t % stride and t != last:
                    continue
                for j, row in enumerate(self.strategies[t]):
                    for i, s in enumerate(row):
                        won = 1 if self.winners[t][i] == j else 0
                        for a, p in enumerate(s):
                            writer.writerow([
                                t + 1, j, i, a,
                                repr(float(p)),
                                repr(float(self.rmse_series[t])),
                                repr(float(self.payoffs[t][j][i])),
                                won,
                            ])


def _sample_index(rng, probs) -> int:
    u = rng.random()
    acc = 0.0
    for idx, p in enumerate(probs):
        acc += p
        if u < acc:
            return idx
    return len(probs) - 1


def _single_bid_space(config: AuctionConfig, j: int) -> tuple:
    top = int(min(config.budgets[j], config.bid_cap))
    if top < 1:
        raise ValueError(f"bidder {j} cannot afford any single bid")
    return tuple(
        tuple(ActionSet({b}) for b in range(1, top + 1))
        for _ in range(config.m)
    )


def _action_spaces(config: AuctionConfig, algorithm: str, action_mode: str,
                   action_filter: str = "none") -> tuple:
    if algorithm == "monte_carlo" or action_mode == "single_bids":
        return tuple(_single_bid_space(config, j) for j in range(config.n))
    spaces = []
    for j in range(config.n):
        per_item = []
        for i in range(config.m):
            actions = enumerate_actions(config, j, i, action_mode)
            if action_filter == "ex_ante":
                # one item considered in isolation; joint overspend is
                # handled by the depleting-budget rejection path
                actions = [
                    a for a in actions
                    if not a
                    or config.c_r + len(a) * config.c[i] + max(a)
                    <= config.budgets[j]
                ]
            elif action_filter != "none":
                raise ValueError(f"unknown action_filter {action_filter!r}")
            per_item.append(tuple(actions))
        spaces.append(tuple(per_item))
    return tuple(spaces)


def _row_cost(actions_row, config, settlement="ex_ante"):
    total = 0
    for i, a in enumerate(actions_row):
        if a:
            total += config.c_r + len(a) * config.c[i] + max(a)
    return total


def _realized_payoffs(rows, config, outcomes):
    payoffs = np.zeros((config.n, config.m))
    for j in range(config.n):
        for i in range(config.m):
            a = rows[j][i]
            if not a:
                continue
            cost = len(a) * config.c[i] + config.c_r
            if outcomes[i].winner == j:
                payoffs[j, i] = float(config.valuations[j][i] - cost
                                      - outcomes[i].winning_bid)
            else:
                payoffs[j, i] = -float(cost)
    return payoffs


def init_learning_state(config: AuctionConfig, rng, alpha=0.5, lam=0.1,
                        epsilon=1.0, action_mode="prefix_sets",
                        r_hat_init="uniform", algorithm="codipas",
                        action_filter="none") -> LearningState:
    """Fresh learner state: uniform strategies and seeded payoff estimates.

    ``r_hat_init`` is either "uniform" (draws on [0, 1) from the run's
    generator) or a constant used for every estimate.
    """
    actions = _action_spaces(config, algorithm, action_mode, action_filter)
    r_hat, strategy = [], []
    for j in range(config.n):
        r_row, s_row = [], []
        for i in range(config.m):
            size = len(actions[j][i])
            if r_hat_init == "uniform":
                r_row.append(rng.random(size))
            else:
                r_row.append(np.full(size, float(r_hat_init)))
            s_row.append(np.full(size, 1.0 / size))
        r_hat.append(r_row)
        strategy.append(s_row)
    return LearningState(actions=actions, r_hat=r_hat, strategy=strategy,
                         remaining_budget=list(config.budgets),
                         alpha=alpha, lam=lam, epsilon=epsilon)


def _counterfactual_payoff(action, opponent_sets, v, c_i, c_r):
    """Payoff the focal bidder would earn playing `action` against the
    realized opponent bid sets on one item."""
    if not action:
        return 0.0
    outcome = resolve_item([action, *opponent_sets])
    cost = len(action) * c_i + c_r
    if outcome.winner == 0:
        return float(v - cost - outcome.winning_bid)
    return -float(cost)


class _CounterfactualTable:
    """Memoized per-action payoffs against realized opponent rows."""

    def __init__(self, config, actions):
        self.config = config
        self.actions = actions
        self.cache = {}

    def vector(self, bidder, item, rows):
        opp = tuple(sorted(
            tuple(sorted(rows[k][item]))
            for k in range(self.config.n) if k != bidder
        ))
        key = (bidder, item, opp)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        opp_sets = [rows[k][item] for k in range(self.config.n) if k != bidder]
        vec = np.array([
            _counterfactual_payoff(a, opp_sets,
                                   self.config.valuations[bidder][item],
                                   self.config.c[item], self.config.c_r)
            for a in self.actions[bidder][item]
        ])
        self.cache[key] = vec
        return vec


def _require_symmetric(config: AuctionConfig) -> None:
    rows = config.valuations
    if (any(row != rows[0] for row in rows)
            or any(b != config.budgets[0] for b in config.budgets)
            or any(t != config.theta[0] for t in config.theta)):
        raise ValueError("symmetric coupling needs identical bidder data")


def run_simulation(config: AuctionConfig, algorithm="codipas", iterations=1000,
                   seed=0, noise_std=0.0, alpha=0.5, lam=0.1, epsilon=1.0,
                   action_mode="prefix_sets", r_hat_init="uniform",
                   budget_mode="static", action_filter="none",
                   feedback="own", symmetric=False, reward_scale=1.0,
                   resample_limit=100) -> Trajectory:
    """Run one seeded learning episode and record every round.

    Per round: every bidder samples one action per item from its current
    strategy, all items resolve, Gaussian observation noise is added to
    the observed payoffs, and the chosen algorithm updates. With
    ``budget_mode="depleting"`` a bidder's joint draw must fit its
    remaining budget (worst case); infeasible draws are resampled, the
    rejections are counted, and realized spending is deducted each round.

    ``feedback`` selects what the imitative learner observes: "own"
    updates only the played action's estimate from its realized payoff,
    while "histogram" prices every candidate action against the round's
    published bid statistics (all estimates refresh each round).
    ``symmetric=True`` runs identical bidders as one population sharing a
    single strategy and estimate vector, the setting under which the
    imitative dynamics converge to the symmetric mixed equilibrium.
    ``reward_scale`` rescales observed payoffs before estimation (e.g.
    1/v measures rewards in units of the item value).

    The same (config, parameters, seed) produces a bit-identical
    Trajectory: randomness comes from a single counter-based Philox
    stream consumed in a fixed order.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if algorithm not in ("codipas", "monte_carlo"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if budget_mode not in ("static", "depleting"):
        raise ValueError(f"unknown budget_mode {budget_mode!r}")
    if feedback not in ("own", "histogram"):
        raise ValueError(f"unknown feedback {feedback!r}")
    if symmetric:
        if algorithm != "codipas":
            raise ValueError("symmetric coupling applies to the imitative learner")
        _require_symmetric(config)
    if algorithm == "monte_carlo":
        min_entry = min(config.c_r + config.c[i] + 1 for i in range(config.m))
        if any(b < min_entry for b in config.budgets):
            raise ValueError("initial budgets cannot fund a single bid")

    rng = np.random.Generator(np.random.Philox(seed))
    state = init_learning_state(config, rng, alpha, lam, epsilon,
                                action_mode, r_hat_init, algorithm,
                                action_filter)
    counterfactuals = _CounterfactualTable(config, state.actions)
    beliefs = None
    if algorithm == "monte_carlo":
        beliefs = [[MonteCarloBelief.uniform(len(state.actions[j][i]))
                    for i in range(config.m)] for j in range(config.n)]
        for j in range(config.n):
            for i in range(config.m):
                state.strategy[j][i] = np.array(beliefs[j][i].delta)

    traj = Trajectory(algorithm=algorithm, seed=seed, noise_std=noise_std,
                      params={"alpha": alpha, "lambda": lam, "epsilon": epsilon,
                              "action_mode": action_mode,
                              "action_filter": action_filter,
                              "r_hat_init": r_hat_init,
                              "budget_mode": budget_mode,
                              "feedback": feedback,
                              "symmetric": symmetric,
                              "reward_scale": reward_scale,
                              "rng": "philox"},
                      actions=state.actions)
    previous = [[s.copy() for s in row] for row in state.strategy]

    for _ in range(iterations):
        chosen = []
        for j in range(config.n):
            draw = [_sample_index(rng, state.strategy[j][i])
                    for i in range(config.m)]
            if budget_mode == "depleting":
                tries = 0
                while (_row_cost([state.actions[j][i][draw[i]]
                                  for i in range(config.m)], config)
                       > state.remaining_budget[j]):
                    traj.rejections += 1
                    tries += 1
                    if tries > resample_limit:
                        draw = [_cheapest_index(state.actions[j][i])
                                for i in range(config.m)]
                        break
                    draw = [_sample_index(rng, state.strategy[j][i])
                            for i in range(config.m)]
            chosen.append(draw)

        rows = tuple(
            tuple(state.actions[j][i][chosen[j][i]] for i in range(config.m))
            for j in range(config.n)
        )
        outcomes = [resolve_item([rows[j][i] for j in range(config.n)])
                    for i in range(config.m)]
        observed = _realized_payoffs(rows, config, outcomes)
        if noise_std > 0:
            observed = observed + rng.normal(0.0, noise_std,
                                             size=observed.shape)

        if algorithm == "codipas":
            if feedback == "histogram":
                vectors = [[counterfactuals.vector(j, i, rows)
                            for i in range(config.m)]
                           for j in range(config.n)]
                if noise_std > 0:
                    vectors = [[vec + rng.normal(0.0, noise_std, size=vec.shape)
                                for vec in row] for row in vectors]
                if reward_scale != 1.0:
                    vectors = [[vec * reward_scale for vec in row]
                               for row in vectors]
                if symmetric:
                    _shared_update(state, vectors=vectors)
                else:
                    state = codipas_step_counterfactual(state, vectors)
            else:
                scaled = observed * reward_scale
                if symmetric:
                    _shared_update(state, chosen=chosen, scalars=scaled)
                else:
                    state = codipas_step(state, chosen, scaled)
        else:
            for j in range(config.n):
                for i in range(config.m):
                    k = next(iter(rows[j][i]))
                    kind = _feedback(outcomes[i], j, k)
                    beliefs[j][i] = monte_carlo_step(beliefs[j][i], kind, k)
                    state.strategy[j][i] = np.array(beliefs[j][i].delta)

        if budget_mode == "depleting":
            for j in range(config.n):
                spent = 0
                for i in range(config.m):
                    a = rows[j][i]
                    if a:
                        spent += config.c_r + len(a) * config.c[i]
                        if outcomes[i].winner == j:
                            spent += outcomes[i].winning_bid
                state.remaining_budget[j] = max(
                    0, state.remaining_budget[j] - spent)

        snapshot = [[s.copy() for s in row] for row in state.strategy]
        traj.strategies.append(snapshot)
        traj.payoffs.append(observed)
        traj.winners.append([o.winner if o.winner is not None else -1
                             for o in outcomes])
        traj.chosen.append(chosen)
        traj.rmse_series.append(rmse(snapshot, previous))
        previous = snapshot

    return traj


def _shared_update(state: LearningState, chosen=None, scalars=None,
                   vectors=None) -> None:
    """One-population update: all bidders pool observations into a single
    shared estimate and strategy per item (bidder data must be identical)."""
    n = len(state.strategy)
    m = len(state.strategy[0])
    for i in range(m):
        r_hat = state.r_hat[0][i]
        if vectors is not None:
            pooled = np.mean([vectors[j][i] for j in range(n)], axis=0)
            r_hat += state.alpha * (pooled - r_hat)
        else:
            for j in range(n):
                a = chosen[j][i]
                r_hat[a] += state.alpha * (scalars[j][i] - r_hat[a])
        shared = _imitation_reweight(state.strategy[0][i], r_hat, state.lam)
        for j in range(n):
            state.strategy[j][i] = shared.copy()
            state.r_hat[j][i] = r_hat if j == 0 else r_hat.copy()


def _cheapest_index(actions) -> int:
    for idx, a in enumerate(actions):
        if a == NO_BID:
            return idx
    return min(range(len(actions)), key=lambda idx: (len(actions[idx]),
                                                     sorted(actions[idx])))


def _feedback(outcome, bidder: int, k: int) -> str:
    if outcome.winner == bidder:
        return "win"
    if outcome.histogram.get(k, 0) >= 2:
        return "non_unique"
    return "too_high"
