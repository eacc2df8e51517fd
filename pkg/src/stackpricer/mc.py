"""Monte Carlo machinery used as the verification oracle.

Terminal sampling of the joint fuel/demand law, exact-transition OU path
simulation, and estimators for forwards, spreads and moments.  All draws
come from the counter-based Philox generator keyed on (seed, stream), with
normals produced by the inverse CDF so antithetic pairs mirror exactly;
results are bit-identical for a fixed seed regardless of how the work is
chunked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import ndtri

from .forwards import PricingInputs
from .market import FuelDynamics, FuelTerminalLaw, DemandLaw
from .stack import SpikeParams, spot_price_extended_vec, spot_price_twofuel_vec

__all__ = [
    "SimConfig",
    "Estimate",
    "TerminalSample",
    "DemandPathSpec",
    "sample_terminal",
    "mc_forward",
    "mc_spread",
    "mc_moment",
    "simulate_spot_paths",
]

_INV = 1.0 / 2.0 ** 53


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 1_000_000
    n_steps: int = 1
    seed: int = 0
    antithetic: bool = True

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be positive")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic sampling needs an even path count")


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_effective: int


class TerminalSample(NamedTuple):
    s_c: np.ndarray
    s_g: np.ndarray
    d: np.ndarray
    x: np.ndarray


def _normals(seed: int, shape, antithetic: bool, stream: int = 0) -> np.ndarray:
    """Inverse-CDF standard normals from Philox(seed, stream).

    With antithetic sampling the second half mirrors the first exactly, so
    the mean of any odd functional vanishes to machine precision.
    """
    gen = np.random.Generator(np.random.Philox(key=[seed, stream]))
    if antithetic:
        half = (shape[0] + 1) // 2
        u = (gen.integers(0, 2 ** 53, size=(half, *shape[1:])) + 0.5) * _INV
        z = ndtri(u)
        return np.concatenate([z, -z], axis=0)[: shape[0]]
    u = (gen.integers(0, 2 ** 53, size=shape) + 0.5) * _INV
    return ndtri(u)


def sample_terminal(law: FuelTerminalLaw, demand: DemandLaw,
                    cfg: SimConfig) -> TerminalSample:
    """Joint draws of (S_c, S_g, D, X) at maturity, deterministic in the seed."""
    if abs(law.rho) > 1.0:
        raise ValueError("correlation must lie in [-1, 1]")
    z = _normals(cfg.seed, (cfg.n_paths, 3), cfg.antithetic)
    z_c = z[:, 0]
    z_g = law.rho * z[:, 0] + math.sqrt(max(0.0, 1.0 - law.rho ** 2)) * z[:, 1]
    s_c = np.exp(law.mu_c + law.sigma_c * z_c)
    s_g = np.exp(law.mu_g + law.sigma_g * z_g)
    x = demand.mu_d + demand.sigma_d * z[:, 2]
    d = np.clip(x, 0.0, demand.cap)
    return TerminalSample(s_c=s_c, s_g=s_g, d=d, x=x)


def _estimate(values: np.ndarray, antithetic: bool) -> Estimate:
    if antithetic:
        half = values.shape[0] // 2
        pairs = 0.5 * (values[:half] + values[half:])
        n = half
        se = float(np.std(pairs, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return Estimate(value=float(np.mean(pairs)), std_error=se, n_effective=n)
    n = values.shape[0]
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(value=float(np.mean(values)), std_error=se, n_effective=n)


def _spot_samples(inputs: PricingInputs, cfg: SimConfig) -> np.ndarray:
    smp = sample_terminal(inputs.law, inputs.demand, cfg)
    if inputs.spike is not None:
        return spot_price_extended_vec(inputs.coal_bid, inputs.gas_bid,
                                       smp.x, smp.s_c, smp.s_g, inputs.spike)
    return spot_price_twofuel_vec(inputs.coal_bid, inputs.gas_bid,
                                  smp.d, smp.s_c, smp.s_g)


def mc_forward(inputs: PricingInputs, cfg: SimConfig) -> Estimate:
    """Monte Carlo forward price (expected spot at maturity)."""
    return _estimate(_spot_samples(inputs, cfg), cfg.antithetic)


def mc_spread(inputs: PricingInputs, spec, cfg: SimConfig) -> Estimate:
    """Monte Carlo spread option price for either leg."""
    smp = sample_terminal(inputs.law, inputs.demand, cfg)
    if inputs.spike is not None:
        spot = spot_price_extended_vec(inputs.coal_bid, inputs.gas_bid,
                                       smp.x, smp.s_c, smp.s_g, inputs.spike)
    else:
        spot = spot_price_twofuel_vec(inputs.coal_bid, inputs.gas_bid,
                                      smp.d, smp.s_c, smp.s_g)
    leg_price = smp.s_c if spec.leg == "dark" else smp.s_g
    disc = math.exp(-inputs.rate * spec.maturity)
    payoff = disc * np.maximum(spot - spec.heat_rate * leg_price, 0.0)
    return _estimate(payoff, cfg.antithetic)


def mc_moment(inputs: PricingInputs, n: int, cfg: SimConfig) -> Estimate:
    """Monte Carlo n-th moment of the spot price (base stack)."""
    smp = sample_terminal(inputs.law, inputs.demand, cfg)
    spot = spot_price_twofuel_vec(inputs.coal_bid, inputs.gas_bid,
                                  smp.d, smp.s_c, smp.s_g)
    return _estimate(spot ** n, cfg.antithetic)


@dataclass(frozen=True)
class DemandPathSpec:
    """OU dynamics of the unbounded demand proxy, plus optional seasonality."""

    kappa: float
    level: float
    vol: float
    x0: float
    seasonal: Optional[Callable[[float], float]] = None

    def mean_at(self, t: float) -> float:
        return self.level + (self.seasonal(t) if self.seasonal else 0.0)


def simulate_spot_paths(dyn: FuelDynamics, demand_path: DemandPathSpec,
                        spike: SpikeParams, horizon: float, cfg: SimConfig,
                        coal_bid, gas_bid):
    """Exact-discretisation paths of fuels, demand proxy and extended spot.

    Returns a dict of arrays keyed by 'time' (n_steps+1,), and 's_c', 's_g',
    'x', 'd', 'p' of shape (n_paths, n_steps+1).
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be strictly positive")
    n, steps = cfg.n_paths, cfg.n_steps
    dt = horizon / steps
    times = np.linspace(0.0, horizon, steps + 1)

    dec_c, dec_g = math.exp(-dyn.kappa_c * dt), math.exp(-dyn.kappa_g * dt)
    sd_c = dyn.nu_c * math.sqrt((1.0 - dec_c ** 2) / (2.0 * dyn.kappa_c))
    sd_g = dyn.nu_g * math.sqrt((1.0 - dec_g ** 2) / (2.0 * dyn.kappa_g))
    cov = dyn.varrho * dyn.nu_c * dyn.nu_g \
        * (1.0 - math.exp(-(dyn.kappa_c + dyn.kappa_g) * dt)) \
        / (dyn.kappa_c + dyn.kappa_g)
    rho_step = 0.0 if sd_c == 0.0 or sd_g == 0.0 else cov / (sd_c * sd_g)
    rho_step = max(-1.0, min(1.0, rho_step))
    dec_x = math.exp(-demand_path.kappa * dt)
    sd_x = demand_path.vol * math.sqrt(
        (1.0 - dec_x ** 2) / (2.0 * demand_path.kappa))

    z = _normals(cfg.seed, (n, steps, 3), cfg.antithetic)
    log_c = np.full(n, math.log(dyn.s0_c))
    log_g = np.full(n, math.log(dyn.s0_g))
    x = np.full(n, demand_path.x0)

    s_c = np.empty((n, steps + 1))
    s_g = np.empty((n, steps + 1))
    xs = np.empty((n, steps + 1))
    s_c[:, 0], s_g[:, 0], xs[:, 0] = np.exp(log_c), np.exp(log_g), x

    root = math.sqrt(max(0.0, 1.0 - rho_step ** 2))
    for j in range(steps):
        zc = z[:, j, 0]
        zg = rho_step * z[:, j, 0] + root * z[:, j, 1]
        log_c = dyn.lambda_c + (log_c - dyn.lambda_c) * dec_c + sd_c * zc
        log_g = dyn.lambda_g + (log_g - dyn.lambda_g) * dec_g + sd_g * zg
        mean_x = demand_path.mean_at(times[j + 1])
        x = mean_x + (x - mean_x) * dec_x + sd_x * z[:, j, 2]
        s_c[:, j + 1], s_g[:, j + 1], xs[:, j + 1] = np.exp(log_c), np.exp(log_g), x

    total_cap = coal_bid.cap + gas_bid.cap
    d = np.clip(xs, 0.0, total_cap)
    p = spot_price_extended_vec(coal_bid, gas_bid, xs, s_c, s_g, spike)
    return {"time": times, "s_c": s_c, "s_g": s_g, "x": xs, "d": d, "p": p}
