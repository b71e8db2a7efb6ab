"""Command-line interface.

Verbs: ``resolve`` (one-shot auction from a profile file), ``solve``
(closed-form equilibria), ``verify`` (regret certificate), ``learn``
(seeded simulation), ``revenue`` (seller model sweep), ``scenario``
(named reproductions) and ``list-scenarios``.

Exit codes: 0 success, 2 configuration error, 3 enumeration cap
exceeded, 4 scenario check failed under --check.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .auction import (
    ActionSet,
    BidProfile,
    CapExceededError,
    bidder_payoffs,
    resolve_profile,
)
from .config import ConfigError, load_spec, save_spec, spec_from_sections
from .equilibria import (
    MixedStrategy,
    asymmetric_two_bidder_eq,
    three_bidder_symmetric_eq,
    two_bidder_mixed_eq,
    two_bidder_risk_eq,
    two_by_two_risk_eq,
    verify_equilibrium,
)
from .learning import run_simulation
from .revenue import PoissonRevenueModel, profit_threshold_z, revenue_curve
from .scenarios import build_spec, list_scenarios, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_CHECK = 4


def _number(text: str):
    if "/" in text:
        return Fraction(text)
    if text.lstrip("+-").isdigit():
        return int(text)
    return float(text)


def _strategy_from_json(entry) -> MixedStrategy:
    actions = []
    for action in entry["actions"]:
        if action and isinstance(action[0], list):
            actions.append(tuple(ActionSet(a) for a in action))
        else:
            actions.append(ActionSet(action))
    return MixedStrategy(tuple(actions), tuple(entry["probs"]))


def _strategy_to_json(strategy: MixedStrategy) -> dict:
    actions = []
    for action in strategy.actions:
        if isinstance(action, (ActionSet, frozenset)):
            actions.append(sorted(action))
        else:
            actions.append([sorted(a) for a in action])
    return {"actions": actions, "probs": [float(p) for p in strategy.probs]}


def _emit(payload: dict, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return
    # csv: flat key,value rows; list values joined with spaces
    for key in sorted(payload):
        value = payload[key]
        if isinstance(value, (list, tuple)):
            value = " ".join(str(v) for v in value)
        out.write(f"{key},{value}\n")


def cmd_resolve(args) -> int:
    raw = json.loads(Path(args.profile).read_text())
    if "auction" not in raw or "bids" not in raw:
        raise ConfigError("profile file needs 'auction' and 'bids' entries")
    spec = spec_from_sections({"auction": raw["auction"]})
    config = spec.auction
    rows = []
    for row in raw["bids"]:
        if row and row[0] != [] and isinstance(row[0], list):
            rows.append(tuple(ActionSet(a) for a in row))
        else:
            rows.append((ActionSet(row),))
    profile = BidProfile(tuple(rows))
    outcomes = resolve_profile(profile, config)
    report = bidder_payoffs(profile, config, outcomes,
                            raw.get("auctioneer_valuations"))
    payload = {
        "winners": [o.winner for o in outcomes],
        "winning_bids": [o.winning_bid for o in outcomes],
        "unique_bids": [sorted(o.unique_bids) for o in outcomes],
        "bidder_totals": [float(t) for t in report.bidder_totals],
        "auctioneer_total": float(report.auctioneer_total),
    }
    _emit(payload, args.format, sys.stdout)
    return EXIT_OK


def cmd_solve(args) -> int:
    v = _number(args.value)
    c = _number(args.cost)
    if args.solver == "two-bidder":
        result = {"strategy": _strategy_to_json(
            two_bidder_mixed_eq(v, c, args.b_max))}
    elif args.solver == "two-bidder-risk":
        result = {"strategy": _strategy_to_json(
            two_bidder_risk_eq(v, c, args.theta, args.b_max))}
    elif args.solver == "asym-two-bidder":
        x, y = asymmetric_two_bidder_eq(v, c)
        result = {"bidder_0": _strategy_to_json(x),
                  "bidder_1": _strategy_to_json(y)}
    elif args.solver == "two-by-two-risk":
        s1, s2 = two_by_two_risk_eq(v, args.theta, args.theta2)
        result = {"bidder_0": _strategy_to_json(s1),
                  "bidder_1": _strategy_to_json(s2)}
    else:  # three-bidder-symmetric
        result = {"strategy": _strategy_to_json(three_bidder_symmetric_eq(v, c))}
    _emit(result, args.format, sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = load_spec(args.config)
    entries = json.loads(Path(args.strategies).read_text())
    strategies = tuple(_strategy_from_json(e) for e in entries)
    cert = verify_equilibrium(spec.auction, strategies, tol=args.tol)
    payload = {
        "max_regret": float(cert.max_regret),
        "certified": cert.certified,
        "tol": cert.tol,
        "equilibrium_payoffs": [float(p) for p in cert.equilibrium_payoffs],
    }
    _emit(payload, args.format, sys.stdout)
    if args.check and not cert.certified:
        return EXIT_CHECK
    return EXIT_OK


def cmd_learn(args) -> int:
    spec = load_spec(args.config)
    if args.seed is not None:
        spec.seed = args.seed
    if args.repeats is not None:
        spec.repeats = args.repeats
    if args.algorithm is not None:
        spec.algorithm = args.algorithm
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for seed in spec.seeds():
        traj = run_simulation(
            spec.auction, algorithm=spec.algorithm,
            iterations=spec.iterations, seed=seed, noise_std=spec.noise_std,
            alpha=spec.alpha, lam=spec.lam, epsilon=spec.epsilon,
            action_mode=spec.action_mode, r_hat_init=spec.r_hat_init,
            budget_mode=spec.budget_mode, action_filter=spec.action_filter)
        path = out / f"trajectory_seed{seed}.csv"
        stride = spec.csv_stride or 1
        traj.to_csv(path, stride=stride)
        written.append(str(path))
    _emit({"trajectories": written}, args.format, sys.stdout)
    return EXIT_OK


def cmd_revenue(args) -> int:
    model = PoissonRevenueModel(
        item_value=args.value, submission_cost=args.cost,
        tail_exponent=max(args.z_min, 1e-9), registration_fee=args.fee,
        n_registrants=args.registrants, bid_cap=args.cap)
    steps = int(round((args.z_max - args.z_min) / args.z_step))
    grid = [args.z_min + k * args.z_step for k in range(steps + 1)]
    rows = revenue_curve(model, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "revenue_vs_z.csv"
    with open(csv_path, "w") as fh:
        fh.write("z,fee_revenue,expected_min_unique,total\n")
        for z, fees, win, total in rows:
            fh.write(f"{z},{fees!r},{win!r},{total!r}\n")
    threshold = profit_threshold_z(model)
    _emit({"csv": str(csv_path), "verdict": threshold.verdict,
           "z_star": threshold.z_star}, args.format, sys.stdout)
    return EXIT_OK


def cmd_scenario(args) -> int:
    if args.config:
        spec = load_spec(args.config)
        if args.scenario:
            spec.name = args.scenario
    else:
        if not args.scenario:
            raise ConfigError("scenario verb needs --scenario or --config")
        spec = build_spec(args.scenario)
    if args.seed is not None:
        spec.seed = args.seed
    if args.repeats is not None:
        spec.repeats = args.repeats
    try:
        result = run_scenario(spec, args.out, render_plots=not args.no_plots)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    _emit({"scenario": result.name, "check_passed": result.passed,
           "files": result.files}, args.format, sys.stdout)
    if args.check and not result.passed:
        return EXIT_CHECK
    return EXIT_OK


def cmd_list_scenarios(args) -> int:
    for name, description in list_scenarios():
        sys.stdout.write(f"{name}\n    {description}\n")
    return EXIT_OK


def cmd_emit_config(args) -> int:
    spec = build_spec(args.scenario)
    save_spec(spec, args.out_file)
    sys.stdout.write(f"{args.out_file}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="luba",
        description="Multi-item lowest-unique-bid auctions: mechanics, "
                    "equilibria, learning and revenue analysis.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required,
                       help="experiment config file (.ini/.cfg or .json)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--repeats", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("resolve", help="resolve one bid profile")
    p.add_argument("profile", help="JSON file with 'auction' and 'bids'")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("solve", help="closed-form equilibrium solvers")
    p.add_argument("solver", choices=("two-bidder", "two-bidder-risk",
                                      "asym-two-bidder", "two-by-two-risk",
                                      "three-bidder-symmetric"))
    p.add_argument("--value", "-v", default="8")
    p.add_argument("--cost", "-c", default="1")
    p.add_argument("--b-max", type=int, default=6)
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--theta2", type=float, default=0.1)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="regret-certify strategies")
    common(p, config_required=True)
    p.add_argument("--strategies", required=True,
                   help="JSON list of {actions, probs} per bidder")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--check", action="store_true",
                   help="exit 4 when not certified")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("learn", help="run a seeded learning simulation")
    common(p, config_required=True)
    p.add_argument("--algorithm", choices=("codipas", "monte-carlo"),
                   default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("revenue", help="seller revenue sweep over z")
    p.add_argument("--value", type=float, default=10.0)
    p.add_argument("--cost", type=float, default=1.0)
    p.add_argument("--fee", type=float, default=1.0)
    p.add_argument("--registrants", type=float, default=5.0)
    p.add_argument("--cap", type=int, default=10)
    p.add_argument("--z-min", type=float, default=0.001)
    p.add_argument("--z-max", type=float, default=3.0)
    p.add_argument("--z-step", type=float, default=0.001)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_revenue)

    p = sub.add_parser("scenario", help="run a named reproduction scenario")
    common(p)
    p.add_argument("--scenario", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--check", action="store_true",
                   help="exit 4 when the scenario metric fails")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("list-scenarios", help="list the scenario registry")
    p.set_defaults(func=cmd_list_scenarios)

    p = sub.add_parser("emit-config",
                       help="write a scenario's canonical config file")
    p.add_argument("--scenario", required=True)
    p.add_argument("out_file")
    p.set_defaults(func=cmd_emit_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "algorithm", None) == "monte-carlo":
        args.algorithm = "monte_carlo"
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except CapExceededError as exc:
        sys.stderr.write(f"cap exceeded: {exc}\n")
        return EXIT_CAP
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
