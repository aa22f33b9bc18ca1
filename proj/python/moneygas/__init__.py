"""Kinetic money-exchange simulations (C++ core)."""

import json

from ._moneygas import (
    ConfigError,
    FitError,
    StepError,
    UsageError,
    entropy_per_agent,
    enumerate_oracle,
    fit_exponential,
    fit_gamma,
    kinetic_stationary,
    ks_two_sample,
    oracle_check,
    tail_exponent_hill,
)
from . import _moneygas


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def canonical_config(config):
    return json.loads(_moneygas.canonical_config(_text(config)))


def config_hash(config):
    return _moneygas.config_hash(_text(config))


def Simulation(config):
    return _moneygas.Simulation(_text(config))


def run_point(config, threads=1):
    out = _moneygas.run_point(_text(config), threads)
    out["fits"] = json.loads(out.pop("fits_json"))
    return out


__all__ = [
    "ConfigError",
    "FitError",
    "StepError",
    "UsageError",
    "Simulation",
    "canonical_config",
    "config_hash",
    "entropy_per_agent",
    "enumerate_oracle",
    "fit_exponential",
    "fit_gamma",
    "kinetic_stationary",
    "ks_two_sample",
    "oracle_check",
    "run_point",
    "tail_exponent_hill",
]
