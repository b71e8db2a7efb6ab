"""Experiment configuration: a structured-text format and a JSON mirror.

Both formats carry the same sections (experiment, auction, learning,
report) and map onto one ExperimentSpec. Parsing is strict: unknown
sections or keys are rejected by name, and every constraint violation
reports the offending section and key. Rational numbers can be written
as "p/q" and survive a round trip exactly.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field, fields
from fractions import Fraction
from numbers import Real
from pathlib import Path

from .auction import AuctionConfig


class ConfigError(ValueError):
    """A configuration file failed to parse or validate."""


KNOWN_KEYS = {
    "experiment": {"name", "algorithm", "iterations", "repeats", "seed",
                   "noise_std"},
    "auction": {"bidders", "items", "registration_fee", "submission_costs",
                "budgets", "valuations", "bid_cap", "risk_indices"},
    "learning": {"alpha", "lambda", "epsilon", "r_hat_init", "action_mode",
                 "action_filter", "budget_mode", "feedback", "symmetric",
                 "reward_scale"},
    "report": {"percentiles", "csv_stride"},
}

ALGORITHMS = ("codipas", "monte_carlo")
ACTION_MODES = ("prefix_sets", "full_subsets", "single_bids")
ACTION_FILTERS = ("none", "ex_ante")
BUDGET_MODES = ("static", "depleting")
FEEDBACK_MODES = ("own", "histogram")


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one experiment deterministically."""

    auction: AuctionConfig
    name: str | None = None
    algorithm: str = "codipas"
    iterations: int = 1000
    repeats: int = 1
    seed: int = 0
    noise_std: float = 0.0
    alpha: float = 0.5
    lam: float = 0.1
    epsilon: float = 1.0
    r_hat_init: object = "uniform"
    action_mode: str = "prefix_sets"
    action_filter: str = "none"
    budget_mode: str = "static"
    feedback: str = "own"
    symmetric: bool = False
    reward_scale: float = 1.0
    percentiles: tuple = (5, 25, 50, 75, 95)
    csv_stride: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"[experiment] algorithm: must be one of {ALGORITHMS}")
        if self.iterations < 1:
            raise ConfigError("[experiment] iterations: must be >= 1")
        if self.repeats < 1:
            raise ConfigError("[experiment] repeats: must be >= 1")
        if self.noise_std < 0:
            raise ConfigError("[experiment] noise_std: must be >= 0")
        if not 0 < self.alpha <= 1:
            raise ConfigError("[learning] alpha: must be in (0, 1]")
        if self.lam <= 0:
            raise ConfigError("[learning] lambda: must be > 0")
        if self.epsilon <= 0:
            raise ConfigError("[learning] epsilon: must be > 0")
        if self.action_mode not in ACTION_MODES:
            raise ConfigError(f"[learning] action_mode: must be one of {ACTION_MODES}")
        if self.action_filter not in ACTION_FILTERS:
            raise ConfigError(
                f"[learning] action_filter: must be one of {ACTION_FILTERS}")
        if self.budget_mode not in BUDGET_MODES:
            raise ConfigError(f"[learning] budget_mode: must be one of {BUDGET_MODES}")
        if self.feedback not in FEEDBACK_MODES:
            raise ConfigError(f"[learning] feedback: must be one of {FEEDBACK_MODES}")
        if self.reward_scale <= 0:
            raise ConfigError("[learning] reward_scale: must be > 0")
        if self.csv_stride < 0:
            raise ConfigError("[report] csv_stride: must be >= 0")
        self.percentiles = tuple(int(p) for p in self.percentiles)

    def seeds(self) -> list:
        """Distinct per-repeat seeds derived from the base seed."""
        return [self.seed + r for r in range(self.repeats)]


def _parse_bool(value, where: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "1"):
        return True
    if text in ("false", "no", "0"):
        return False
    raise ConfigError(f"{where}: not a boolean: {value!r}")


def _parse_number(text: str, where: str):
    text = text.strip()
    try:
        if "/" in text:
            return Fraction(text)
        if text.lstrip("+-").isdigit():
            return int(text)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: not a number: {text!r}") from exc


def _parse_vector(value, where: str) -> tuple:
    if isinstance(value, str):
        parts = value.split()
    else:
        parts = list(value)
    if not parts:
        raise ConfigError(f"{where}: empty vector")
    return tuple(p if isinstance(p, Real) else _parse_number(str(p), where)
                 for p in parts)


def _parse_matrix(value, where: str) -> tuple:
    if isinstance(value, str):
        rows = [r for r in value.split(";") if r.strip()]
    else:
        rows = list(value)
    if not rows:
        raise ConfigError(f"{where}: empty matrix")
    return tuple(_parse_vector(row, where) for row in rows)


def _check_keys(sections: dict) -> None:
    for section, mapping in sections.items():
        if section not in KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in mapping:
            if key not in KNOWN_KEYS[section]:
                raise ConfigError(f"[{section}] unknown key {key!r}")
    if "auction" not in sections:
        raise ConfigError("missing required section [auction]")


def spec_from_sections(sections: dict) -> ExperimentSpec:
    """Build a validated ExperimentSpec from nested section dicts."""
    _check_keys(sections)
    auction_raw = sections["auction"]
    for required in ("bidders", "items", "valuations"):
        if required not in auction_raw:
            raise ConfigError(f"[auction] missing required key {required!r}")

    def num(section, key, default):
        raw = sections.get(section, {}).get(key, default)
        if isinstance(raw, Real):
            return raw
        return _parse_number(str(raw), f"[{section}] {key}")

    n = int(num("auction", "bidders", None))
    m = int(num("auction", "items", None))
    try:
        auction = AuctionConfig.create(
            n=n,
            m=m,
            valuations=_parse_matrix(auction_raw["valuations"],
                                     "[auction] valuations"),
            c=_parse_vector(auction_raw.get("submission_costs", "1"),
                            "[auction] submission_costs"),
            c_r=num("auction", "registration_fee", 0),
            budgets=(_parse_vector(auction_raw["budgets"], "[auction] budgets")
                     if "budgets" in auction_raw else None),
            bid_cap=(int(num("auction", "bid_cap", 0))
                     if "bid_cap" in auction_raw else None),
            theta=_parse_vector(auction_raw.get("risk_indices", "0 " * n),
                                "[auction] risk_indices"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[auction] {exc}") from exc

    experiment = sections.get("experiment", {})
    learning = sections.get("learning", {})
    report = sections.get("report", {})
    r_hat_init = learning.get("r_hat_init", "uniform")
    if isinstance(r_hat_init, str) and r_hat_init != "uniform":
        r_hat_init = _parse_number(r_hat_init, "[learning] r_hat_init")

    name = experiment.get("name")
    return ExperimentSpec(
        auction=auction,
        name=str(name) if name is not None else None,
        algorithm=str(experiment.get("algorithm", "codipas")),
        iterations=int(num("experiment", "iterations", 1000)),
        repeats=int(num("experiment", "repeats", 1)),
        seed=int(num("experiment", "seed", 0)),
        noise_std=float(num("experiment", "noise_std", 0.0)),
        alpha=float(num("learning", "alpha", 0.5)),
        lam=float(num("learning", "lambda", 0.1)),
        epsilon=float(num("learning", "epsilon", 1.0)),
        r_hat_init=r_hat_init,
        action_mode=str(learning.get("action_mode", "prefix_sets")),
        action_filter=str(learning.get("action_filter", "none")),
        budget_mode=str(learning.get("budget_mode", "static")),
        feedback=str(learning.get("feedback", "own")),
        symmetric=_parse_bool(learning.get("symmetric", False),
                              "[learning] symmetric"),
        reward_scale=float(num("learning", "reward_scale", 1.0)),
        percentiles=_parse_vector(report.get("percentiles", "5 25 50 75 95"),
                                  "[report] percentiles"),
        csv_stride=int(num("report", "csv_stride", 0)),
    )


def _format_number(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def spec_to_sections(spec: ExperimentSpec) -> dict:
    """Inverse of spec_from_sections (semantic round trip)."""
    auction = spec.auction
    sections = {
        "experiment": {
            "algorithm": spec.algorithm,
            "iterations": str(spec.iterations),
            "repeats": str(spec.repeats),
            "seed": str(spec.seed),
            "noise_std": _format_number(spec.noise_std),
        },
        "auction": {
            "bidders": str(auction.n),
            "items": str(auction.m),
            "registration_fee": _format_number(auction.c_r),
            "submission_costs": " ".join(_format_number(x) for x in auction.c),
            "budgets": " ".join(_format_number(x) for x in auction.budgets),
            "valuations": "; ".join(
                " ".join(_format_number(v) for v in row)
                for row in auction.valuations
            ),
            "bid_cap": str(auction.bid_cap),
            "risk_indices": " ".join(_format_number(t) for t in auction.theta),
        },
        "learning": {
            "alpha": _format_number(spec.alpha),
            "lambda": _format_number(spec.lam),
            "epsilon": _format_number(spec.epsilon),
            "r_hat_init": (spec.r_hat_init if isinstance(spec.r_hat_init, str)
                           else _format_number(spec.r_hat_init)),
            "action_mode": spec.action_mode,
            "action_filter": spec.action_filter,
            "budget_mode": spec.budget_mode,
            "feedback": spec.feedback,
            "symmetric": "true" if spec.symmetric else "false",
            "reward_scale": _format_number(spec.reward_scale),
        },
        "report": {
            "percentiles": " ".join(str(p) for p in spec.percentiles),
            "csv_stride": str(spec.csv_stride),
        },
    }
    if spec.name is not None:
        sections["experiment"]["name"] = spec.name
    return sections


def load_spec(path) -> ExperimentSpec:
    """Parse a config file (.json for the JSON mirror, INI otherwise)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".json":
        try:
            sections = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: "
                              f"{exc.msg}") from exc
        if not isinstance(sections, dict) or not all(
            isinstance(v, dict) for v in sections.values()
        ):
            raise ConfigError(f"{path}: top level must map section names to tables")
        return spec_from_sections(sections)
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    return spec_from_sections(sections)


def save_spec(spec: ExperimentSpec, path) -> None:
    """Write a spec back to disk in the format implied by the suffix."""
    path = Path(path)
    sections = spec_to_sections(spec)
    if path.suffix == ".json":
        path.write_text(json.dumps(sections, indent=2, sort_keys=True) + "\n")
        return
    parser = configparser.ConfigParser()
    for name, mapping in sections.items():
        parser[name] = mapping
    with open(path, "w") as fh:
        parser.write(fh)
