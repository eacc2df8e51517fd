"""Terminal laws and dynamics for fuels and demand.

Fuel prices follow correlated exponential OU processes whose terminal
distribution is jointly lognormal; demand at maturity is a Gaussian variable
truncated at the stack endpoints, which leaves point masses (atoms) at zero
and at full capacity.  Scenario builders assemble the three market setups
used throughout the analysis: symmetric base case, fuel forward curves in
contango/backwardation, and separated coal/gas price levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from .stack import FuelBid

__all__ = [
    "FuelTerminalLaw",
    "FuelDynamics",
    "DemandLaw",
    "ScenarioSpec",
    "terminal_law_from_dynamics",
    "fuel_forward",
    "calibrate_mean_to_forward",
    "demand_atoms",
    "scenario",
    "scenario_build",
    "base_bids",
    "base_dynamics",
    "base_demand",
]


@dataclass(frozen=True)
class FuelTerminalLaw:
    """Joint lognormal law of (coal, gas) prices at maturity."""

    mu_c: float
    mu_g: float
    sigma_c: float
    sigma_g: float
    rho: float

    def __post_init__(self):
        if self.sigma_c < 0.0 or self.sigma_g < 0.0:
            raise ValueError("log-price volatilities must be non-negative")
        if abs(self.rho) > 1.0:
            raise ValueError("correlation must lie in [-1, 1]")

    @property
    def cross_var(self) -> float:
        """Variance of the log price ratio, sigma_c^2 - 2 rho sigma_c sigma_g + sigma_g^2."""
        return max(
            0.0,
            self.sigma_c ** 2
            - 2.0 * self.rho * self.sigma_c * self.sigma_g
            + self.sigma_g ** 2,
        )

    def swapped(self) -> "FuelTerminalLaw":
        return FuelTerminalLaw(self.mu_g, self.mu_c, self.sigma_g,
                               self.sigma_c, self.rho)


@dataclass(frozen=True)
class FuelDynamics:
    """Correlated exponential OU dynamics of the two fuel prices."""

    kappa_c: float
    kappa_g: float
    nu_c: float
    nu_g: float
    lambda_c: float
    lambda_g: float
    s0_c: float
    s0_g: float
    varrho: float

    def __post_init__(self):
        if self.kappa_c <= 0.0 or self.kappa_g <= 0.0:
            raise ValueError("mean-reversion speeds must be strictly positive")
        if self.nu_c < 0.0 or self.nu_g < 0.0:
            raise ValueError("volatilities must be non-negative")
        if self.s0_c <= 0.0 or self.s0_g <= 0.0:
            raise ValueError("spot fuel prices must be strictly positive")
        if abs(self.varrho) > 1.0:
            raise ValueError("driving-noise correlation must lie in [-1, 1]")


@dataclass(frozen=True)
class DemandLaw:
    """Truncated Gaussian demand: D = clamp(X, 0, cap), X ~ N(mu_d, sigma_d^2)."""

    mu_d: float
    sigma_d: float
    cap: float

    def __post_init__(self):
        if self.sigma_d < 0.0:
            raise ValueError("sigma_d must be non-negative")
        if self.cap <= 0.0:
            raise ValueError("market capacity must be strictly positive")


def terminal_law_from_dynamics(dyn: FuelDynamics, T: float) -> FuelTerminalLaw:
    """Map exp-OU dynamics to the joint lognormal law at maturity T.

    mu_i = log(s0_i) e^{-kappa_i T} + lambda_i (1 - e^{-kappa_i T}),
    sigma_i^2 = nu_i^2 (1 - e^{-2 kappa_i T}) / (2 kappa_i), and the
    covariance follows from the correlated Brownian drivers.
    """
    if T <= 0.0:
        raise ValueError("maturity must be strictly positive")
    mu_c = math.log(dyn.s0_c) * math.exp(-dyn.kappa_c * T) \
        + dyn.lambda_c * (1.0 - math.exp(-dyn.kappa_c * T))
    mu_g = math.log(dyn.s0_g) * math.exp(-dyn.kappa_g * T) \
        + dyn.lambda_g * (1.0 - math.exp(-dyn.kappa_g * T))
    var_c = dyn.nu_c ** 2 * (1.0 - math.exp(-2.0 * dyn.kappa_c * T)) / (2.0 * dyn.kappa_c)
    var_g = dyn.nu_g ** 2 * (1.0 - math.exp(-2.0 * dyn.kappa_g * T)) / (2.0 * dyn.kappa_g)
    sigma_c, sigma_g = math.sqrt(var_c), math.sqrt(var_g)
    cov = dyn.varrho * dyn.nu_c * dyn.nu_g \
        * (1.0 - math.exp(-(dyn.kappa_c + dyn.kappa_g) * T)) / (dyn.kappa_c + dyn.kappa_g)
    rho = 0.0 if sigma_c == 0.0 or sigma_g == 0.0 else cov / (sigma_c * sigma_g)
    return FuelTerminalLaw(mu_c=mu_c, mu_g=mu_g, sigma_c=sigma_c,
                           sigma_g=sigma_g, rho=max(-1.0, min(1.0, rho)))


def _law_params(law: FuelTerminalLaw, fuel: str):
    if fuel in ("c", "coal"):
        return law.mu_c, law.sigma_c
    if fuel in ("g", "gas"):
        return law.mu_g, law.sigma_g
    raise ValueError(f"unknown fuel {fuel!r}")


def fuel_forward(law: FuelTerminalLaw, fuel: str) -> float:
    """Forward price of a fuel, exp(mu + sigma^2 / 2)."""
    mu, sigma = _law_params(law, fuel)
    return math.exp(mu + 0.5 * sigma * sigma)


def calibrate_mean_to_forward(law: FuelTerminalLaw, fuel: str,
                              observed_forward: float) -> FuelTerminalLaw:
    """Shift one mean so the law reproduces an observed fuel forward exactly."""
    if observed_forward <= 0.0:
        raise ValueError("observed forward must be strictly positive")
    _, sigma = _law_params(law, fuel)
    mu = math.log(observed_forward) - 0.5 * sigma * sigma
    if fuel in ("c", "coal"):
        return replace(law, mu_c=mu)
    return replace(law, mu_g=mu)


def demand_atoms(d: DemandLaw):
    """Probabilities of demand pinned at zero and at full capacity."""
    if d.sigma_d == 0.0:
        return float(d.mu_d <= 0.0), float(d.mu_d >= d.cap)
    p_zero = float(ndtr(-d.mu_d / d.sigma_d))
    p_cap = float(ndtr((d.mu_d - d.cap) / d.sigma_d))
    return p_zero, p_cap


# Base parameter block: symmetric two-fuel market, both bid curves
# s * exp(2 + xi) with capacity 0.5, exp-OU fuels reverting to 10, and
# truncated Gaussian demand centred mid-stack.
_BASE = dict(k=2.0, m=1.0, cap=0.5, kappa=1.0, nu=0.5, level=10.0,
             mu_d=0.5, sigma_d=0.2, rate=0.0)


def base_bids():
    return (FuelBid("coal", _BASE["k"], _BASE["m"], _BASE["cap"]),
            FuelBid("gas", _BASE["k"], _BASE["m"], _BASE["cap"]))


def base_dynamics(varrho: float = 0.0) -> FuelDynamics:
    lev = math.log(_BASE["level"])
    return FuelDynamics(kappa_c=_BASE["kappa"], kappa_g=_BASE["kappa"],
                        nu_c=_BASE["nu"], nu_g=_BASE["nu"],
                        lambda_c=lev, lambda_g=lev,
                        s0_c=_BASE["level"], s0_g=_BASE["level"],
                        varrho=varrho)


def base_demand() -> DemandLaw:
    coal, gas = base_bids()
    return DemandLaw(mu_d=_BASE["mu_d"], sigma_d=_BASE["sigma_d"],
                     cap=coal.cap + gas.cap)


@dataclass(frozen=True)
class ScenarioSpec:
    """One of the three market scenarios.

    I:   fuel forwards implied by the dynamics.
    II:  observed fuel forward curves, gas in contango and coal in
         backwardation, linear with `forward_step` per month from
         `forward_level`; means recalibrated per maturity.
    III: no forward inputs, but coal levels shifted below gas
         (level overrides applied to the dynamics).
    """

    id: str
    coal_bid: FuelBid
    gas_bid: FuelBid
    dynamics: FuelDynamics
    demand: DemandLaw
    rate: float = 0.0
    forward_level: float = 10.0
    forward_step: float = 0.2

    def __post_init__(self):
        if self.id not in ("I", "II", "III"):
            raise ValueError("scenario id must be I, II or III")


def scenario(spec_id: str, varrho: float = 0.0,
             demand: Optional[DemandLaw] = None,
             coal_bid: Optional[FuelBid] = None,
             gas_bid: Optional[FuelBid] = None,
             rate: float = 0.0) -> ScenarioSpec:
    """Build one of the preset scenarios on top of the base parameters."""
    coal, gas = base_bids()
    coal = coal_bid or coal
    gas = gas_bid or gas
    dyn = base_dynamics(varrho)
    if spec_id == "III":
        dyn = replace(dyn, lambda_c=math.log(7.0), s0_c=7.0,
                      lambda_g=math.log(13.0), s0_g=13.0)
    dem = demand or DemandLaw(mu_d=_BASE["mu_d"], sigma_d=_BASE["sigma_d"],
                              cap=coal.cap + gas.cap)
    return ScenarioSpec(id=spec_id, coal_bid=coal, gas_bid=gas, dynamics=dyn,
                        demand=dem, rate=rate)


def scenario_forward_curve(spec: ScenarioSpec, T):
    """Observed fuel forwards of scenario II at maturity T (coal, gas)."""
    months = 12.0 * np.asarray(T, dtype=float)
    f_c = spec.forward_level - spec.forward_step * months
    f_g = spec.forward_level + spec.forward_step * months
    if np.any(f_c <= 0.0):
        raise ValueError("scenario II coal forward is non-positive at this maturity")
    return f_c, f_g


def scenario_build(spec: ScenarioSpec, T: float):
    """Terminal law, demand law and fuel forwards of a scenario at maturity T."""
    law = terminal_law_from_dynamics(spec.dynamics, T)
    if spec.id == "II":
        f_c, f_g = scenario_forward_curve(spec, T)
        law = calibrate_mean_to_forward(law, "coal", float(f_c))
        law = calibrate_mean_to_forward(law, "gas", float(f_g))
    forwards = (fuel_forward(law, "coal"), fuel_forward(law, "gas"))
    return law, spec.demand, forwards
