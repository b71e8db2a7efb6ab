"""Multi-item lowest-unique-bid auctions with resubmission.

Mechanics, closed-form and exhaustively verified equilibria, two
strategic-learning algorithms with reproducible diagnostics, and seller
revenue analysis under a Poisson bidder-count model.
"""

from .auction import (
    NO_BID,
    ActionBounds,
    ActionSet,
    AuctionConfig,
    BidProfile,
    CapExceededError,
    ItemOutcome,
    PayoffReport,
    auctioneer_revenue,
    bidder_payoffs,
    enumerate_actions,
    is_feasible,
    prefix_set,
    reduce_action_space,
    resolve_item,
    resolve_profile,
    risk_payoff,
)
from .config import ConfigError, ExperimentSpec, load_spec, save_spec
from .equilibria import (
    EquilibriumCertificate,
    GlobalOptimum,
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
from .learning import (
    LearningState,
    MonteCarloBelief,
    Trajectory,
    codipas_step,
    ibg_strategy,
    ibg_value,
    init_learning_state,
    monte_carlo_step,
    replicator_field,
    rmse,
    run_simulation,
)
from .revenue import (
    PoissonRevenueModel,
    ThresholdResult,
    all_pay_comparison,
    expected_min_unique,
    expected_revenue,
    profit_threshold_z,
    revenue_curve,
    simulate_min_unique,
)
from .scenarios import ScenarioResult, build_spec, list_scenarios, run_scenario

__version__ = "0.1.0"
