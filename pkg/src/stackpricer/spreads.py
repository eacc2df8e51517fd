"""Dark and spark spread options on spot power, strike zero.

A dark spread pays (P_T - h * S^c_T)^+.  Conditional on demand the payoff
takes seven distinct shapes depending on which capacities are exhausted and
whether the option can be in the money there; the region boundaries are the
ordered breakpoint vector built from the two capacities and the quantity
xi_h of coal generation cheaper than the contract heat rate.  Integrating
the region integrands against truncated Gaussian demand yields a closed form
out of bivariate normal CDF strips over the breakpoints.  Spark spreads are
priced by relabelling the fuels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from .forwards import PricingInputs, _Market, _market, _moment_integrand, _phi_over, _StripBag
from .market import DemandLaw, demand_atoms
from .stack import FuelBid

__all__ = [
    "SpreadSpec",
    "Breakpoints",
    "heat_rate_quantity",
    "spread_breakpoints",
    "spread_integrand",
    "spread_price_quadrature",
    "spread_price_closed",
    "spark_spread_price",
]

_REGIONS = ("low2", "low1", "mid3", "mid2", "mid1", "high2", "high1")


@dataclass(frozen=True)
class SpreadSpec:
    """Spread option contract: leg fuel, heat rate, maturity, zero strike."""

    leg: str
    heat_rate: float
    maturity: float
    strike: float = 0.0

    def __post_init__(self):
        if self.leg not in ("dark", "spark"):
            raise ValueError("leg must be 'dark' or 'spark'")
        if self.strike != 0.0:
            raise ValueError("only zero-strike spreads are supported")
        if self.heat_rate <= 0.0:
            raise ValueError("heat rate must be strictly positive")


@dataclass(frozen=True)
class Breakpoints:
    """Ordered demand breakpoints of the seven-region decomposition.

    `grid` holds the raw demand levels, `a` their standardisations
    (grid - mu_d)/sigma_d.  When coal is the smaller technology the
    mid-region entries coincide pairwise and those regions are empty.
    """

    grid: tuple
    a: tuple


def heat_rate_quantity(h: float, coal: FuelBid) -> float:
    """Coal generation cheaper than heat rate h: (log h - k_c)/m_c."""
    lo, hi = math.exp(coal.k), math.exp(coal.k + coal.m * coal.cap)
    if not lo * (1.0 - 1e-12) <= h <= hi * (1.0 + 1e-12):
        raise ValueError(
            f"heat rate {h} outside the market range [{lo:.6g}, {hi:.6g}]"
        )
    return min(max((math.log(h) - coal.k) / coal.m, 0.0), coal.cap)


def spread_breakpoints(coal: FuelBid, gas: FuelBid, demand: DemandLaw,
                       xi_h: float) -> Breakpoints:
    """Sorted 8-vector of region boundaries, raw and standardised."""
    if demand.sigma_d <= 0.0:
        raise ValueError("breakpoints need sigma_d > 0; deterministic demand "
                         "bypasses the region decomposition")
    xibar = coal.cap + gas.cap
    grid = sorted((
        0.0,
        min(gas.cap, xi_h),
        min(coal.cap, gas.cap),
        max(gas.cap, xi_h),
        min(coal.cap, gas.cap + xi_h),
        max(coal.cap, gas.cap),
        max(coal.cap, gas.cap + xi_h),
        xibar,
    ))
    a = tuple((g - demand.mu_d) / demand.sigma_d for g in grid)
    return Breakpoints(grid=tuple(grid), a=a)


def _dark_view(inputs: PricingInputs, spec: SpreadSpec):
    """Reduce both legs to the dark case by relabelling fuels if needed."""
    if spec.leg == "spark":
        return inputs.swapped(), replace(spec, leg="dark")
    return inputs, spec


def _h_threshold(mkt: _Market, h: float, xi):
    # boundary of in-the-moneyness in the joint-marginal region, expressed
    # for the log gas/coal price ratio
    return (math.log(h) - mkt.beta - mkt.gamma * np.asarray(xi, float)) / mkt.alpha_g


def _rtilde(f, z, sig2):
    return z + f.lnF_o - f.lnF - 0.5 * sig2


def _v_low1(mkt: _Market, h: float, xi):
    sig2, sig = mkt.sig2, mkt.sig
    c = mkt.coal
    hx = _h_threshold(mkt, h, xi)
    value = c.bid(xi) * _phi_over(c.rgap(xi, 0.0, sig2), sig)
    value = value - h * mkt.F_c * _phi_over(_rtilde(c, -hx, sig2), sig)
    bracket = (1.0
               - _phi_over(c.rgap(xi, 0.0, sig2) + mkt.alpha_g * sig2, sig)
               - _phi_over(_rtilde(mkt.gas, hx, sig2) + mkt.alpha_c * sig2, sig))
    return value + mkt.bcg(xi) * np.exp(-0.5 * mkt.alpha_c * mkt.alpha_g * sig2) * bracket


def _v_high2(mkt: _Market, h: float, xi):
    sig2, sig = mkt.sig2, mkt.sig
    g, c = mkt.gas, mkt.coal
    hx = _h_threshold(mkt, h, xi)
    rg = g.rgap(xi - c.cap, c.cap, sig2)
    value = g.bid(xi - c.cap) * _phi_over(-rg, sig)
    value = value - h * mkt.F_c * _phi_over(_rtilde(c, -hx, sig2), sig)
    bracket = (_phi_over(rg + mkt.alpha_c * sig2, sig)
               - _phi_over(_rtilde(g, hx, sig2) + mkt.alpha_c * sig2, sig))
    return value + mkt.bcg(xi) * np.exp(-0.5 * mkt.alpha_c * mkt.alpha_g * sig2) * bracket


def _spread_region_value(mkt: _Market, h: float, region: str, xi):
    if region in ("low2", "mid3"):
        return np.zeros_like(np.asarray(xi, float)) + 0.0
    if region == "low1":
        return _v_low1(mkt, h, xi)
    if region == "high2":
        return _v_high2(mkt, h, xi)
    if region == "mid2":
        return _v_low1(mkt, h, xi) if mkt.plus is mkt.coal else _v_high2(mkt, h, xi)
    if region == "mid1":
        return _moment_integrand(mkt, "mid", xi, 1) - h * mkt.F_c
    if region == "high1":
        return _moment_integrand(mkt, "high", xi, 1) - h * mkt.F_c
    raise ValueError(f"unknown region {region!r}")


def spread_integrand(region: str, xi: float, inputs: PricingInputs,
                     spec: SpreadSpec) -> float:
    """Expected spread payoff conditional on demand = xi in the region."""
    inputs, spec = _dark_view(inputs, spec)
    mkt = _market(inputs)
    xi_h = heat_rate_quantity(spec.heat_rate, inputs.coal_bid)
    bp = spread_breakpoints(inputs.coal_bid, inputs.gas_bid, inputs.demand, xi_h)
    idx = _REGIONS.index(region)
    lo, hi = bp.grid[idx], bp.grid[idx + 1]
    if not lo - 1e-12 <= xi <= hi + 1e-12:
        raise ValueError(f"xi={xi} outside the {region} interval [{lo}, {hi}]")
    return float(_spread_region_value(mkt, spec.heat_rate, region, xi))


def _deterministic_spread(mkt: _Market, h: float, demand: DemandLaw,
                          grid) -> float:
    xi = min(max(demand.mu_d, 0.0), demand.cap)
    if xi <= 0.0:
        return 0.0
    if xi >= demand.cap:
        return float(_moment_integrand(mkt, "high", demand.cap, 1) - h * mkt.F_c)
    idx = max(np.searchsorted(np.asarray(grid), xi, side="left") - 1, 0)
    return float(max(_spread_region_value(mkt, h, _REGIONS[idx], xi), 0.0))


def spread_price_quadrature(inputs: PricingInputs, spec: SpreadSpec,
                            density=None) -> float:
    """Spread price by adaptive quadrature over the seven demand regions."""
    inputs, spec = _dark_view(inputs, spec)
    mkt = _market(inputs)
    h = spec.heat_rate
    xi_h = heat_rate_quantity(h, inputs.coal_bid)
    disc = math.exp(-inputs.rate * spec.maturity)
    dem = inputs.demand

    if density is None and dem.sigma_d == 0.0:
        base = _deterministic_spread(
            mkt, h,
            dem,
            sorted((0.0, min(mkt.cap_g, xi_h), min(mkt.cap_c, mkt.cap_g),
                    max(mkt.cap_g, xi_h), min(mkt.cap_c, mkt.cap_g + xi_h),
                    max(mkt.cap_c, mkt.cap_g), max(mkt.cap_c, mkt.cap_g + xi_h),
                    dem.cap)),
        )
        if inputs.spike is not None:
            raise ValueError("spike extension needs sigma_d > 0")
        return disc * base

    bp = spread_breakpoints(inputs.coal_bid, inputs.gas_bid, dem, xi_h)
    if density is None:
        p_zero, p_cap = demand_atoms(dem)
        norm = 1.0 / (dem.sigma_d * math.sqrt(2.0 * math.pi))

        def pdf(x):
            z = (x - dem.mu_d) / dem.sigma_d
            return norm * math.exp(-0.5 * z * z)
    else:
        pdf, p_zero, p_cap = density
        mass = quad(pdf, 0.0, dem.cap, limit=200)[0] + p_zero + p_cap
        if abs(mass - 1.0) > 1e-6:
            raise ValueError(f"demand density plus atoms integrate to {mass}, not 1")

    total = 0.0
    for idx, region in enumerate(_REGIONS):
        lo, hi = bp.grid[idx], bp.grid[idx + 1]
        if hi - lo < 1e-15 or region in ("low2", "mid3"):
            continue
        val, _ = quad(
            lambda x, r=region: float(_spread_region_value(mkt, h, r, x)) * pdf(x),
            lo, hi, limit=200, epsabs=1e-12, epsrel=1e-9,
        )
        total += val
    # demand atoms: worthless at the zero floor, always in the money at the cap
    total += p_cap * float(_moment_integrand(mkt, "high", dem.cap, 1) - h * mkt.F_c)
    if inputs.spike is not None:
        total += _spike_spread_terms(dem, inputs.spike)
    return disc * total


def _spike_spread_terms(d: DemandLaw, spike) -> float:
    # spike regime is always in the money for admissible heat rates; the
    # negative-price regime never is
    zs = (d.mu_d - d.cap) / d.sigma_d
    return float(
        math.exp(spike.m_s * (d.mu_d - d.cap) + 0.5 * (spike.m_s * d.sigma_d) ** 2)
        * ndtr(zs + spike.m_s * d.sigma_d) - ndtr(zs)
    )


def _spread_closed_core(mkt: _Market, h: float, mu_d: float, sd: float,
                        a, cap_c: float):
    """Sum of bivariate-CDF strips for the dark spread closed form.

    `a` is the sorted standardised breakpoint vector; batching over the fuel
    law is supported through broadcasting in the strip arguments.
    """
    sig2, sig = mkt.sig2, mkt.sig
    alpha_c, alpha_g, gamma = mkt.alpha_c, mkt.alpha_g, mkt.gamma
    c, g = mkt.coal, mkt.gas
    a1, a2, a3, a4, a5, a6, a7, a8 = a
    a_c = (cap_c - mu_d) / sd

    q_c, q_g, q_cg = c.m * sd, g.m * sd, gamma * sd
    sig_cd = np.sqrt(q_c * q_c + sig2)
    sig_gd = np.sqrt(q_g * q_g + sig2)
    sig_gg = np.sqrt((q_cg / alpha_g) ** 2 + sig2)
    h0 = (math.log(h) - mkt.beta - gamma * mu_d) / alpha_g
    rt_h = _rtilde(c, -h0, sig2)
    eta = 0.5 * (gamma ** 2 * sd ** 2 - alpha_c * alpha_g * sig2)

    bag = _StripBag()
    # coal marginal with gas at zero, in the money
    bag.add(c.bid(mu_d) * np.exp(0.5 * q_c * q_c),
            [a_c - q_c, a3 - q_c], [a4 - q_c, a2 - q_c],
            (c.rgap(mu_d, 0.0, sig2) - q_c * q_c) / sig_cd, q_c / sig_cd)
    # coal marginal above saturated gas, in the money
    bag.add(c.bid(mu_d - mkt.cap_g) * np.exp(0.5 * q_c * q_c),
            [a8 - q_c, a6 - q_c], [a7 - q_c, a5 - q_c],
            (-c.rgap(mu_d - mkt.cap_g, mkt.cap_g, sig2) + q_c * q_c) / sig_cd,
            -q_c / sig_cd)
    # gas marginal above saturated coal (always in the money)
    bag.add(g.bid(mu_d - cap_c) * np.exp(0.5 * q_g * q_g),
            [a8 - q_g], [a_c - q_g],
            (-g.rgap(mu_d - cap_c, cap_c, sig2) + q_g * q_g) / sig_gd,
            -q_g / sig_gd)
    # heat-rate payment over every sometimes-in-the-money region
    bag.add(-h * mkt.F_c * np.ones_like(np.asarray(sig2, float)),
            [a7, a5, a3], [a6, a4, a2],
            rt_h / sig_gg, -(q_cg / alpha_g) / sig_gg)
    # joint-marginal block
    coef = mkt.bcg(mu_d) * np.exp(eta)
    bag.add(coef,
            [a_c - q_cg, a3 - q_cg], [a4 - q_cg, a2 - q_cg],
            (-c.rgap(mu_d, 0.0, sig2) - alpha_g * sig2 + gamma * c.m * sd * sd) / sig_cd,
            -q_c / sig_cd)
    bag.add(-coef,
            [a8 - q_cg, a6 - q_cg], [a7 - q_cg, a5 - q_cg],
            (-c.rgap(mu_d - mkt.cap_g, mkt.cap_g, sig2) - alpha_g * sig2
             + gamma * c.m * sd * sd) / sig_cd,
            -q_c / sig_cd)
    bag.add(coef,
            [a8 - q_cg], [a_c - q_cg],
            (g.rgap(mu_d - cap_c, cap_c, sig2) + alpha_c * sig2
             - gamma * g.m * sd * sd) / sig_gd,
            q_g / sig_gd)
    bag.add(-coef,
            [a7 - q_cg, a5 - q_cg, a3 - q_cg], [a6 - q_cg, a4 - q_cg, a2 - q_cg],
            (-rt_h - alpha_g * sig2 - gamma ** 2 * sd * sd / alpha_g) / sig_gg,
            (q_cg / alpha_g) / sig_gg)

    value = bag.total()
    # stack-top atom (always in the money) and the residual heat-rate payment
    top_sum = sum(f.bid(f.cap) * _phi_over(-f.rgap(f.cap, f.cap_o, sig2), sig)
                  for f in mkt.fuels())
    value = value + ndtr(-a8) * top_sum
    value = value - h * mkt.F_c * (1.0 - ndtr(a7) + ndtr(a6) - ndtr(a5))
    return value


def spread_price_closed(inputs: PricingInputs, spec: SpreadSpec) -> float:
    """Closed-form spread price under truncated Gaussian demand.

    Valid for both capacity orderings; empty regions contribute nothing
    because their breakpoints coincide.  Deterministic demand is priced
    directly off the region integrands, and the spike extension adds its
    two closed correction terms.
    """
    inputs, spec = _dark_view(inputs, spec)
    mkt = _market(inputs)
    h = spec.heat_rate
    xi_h = heat_rate_quantity(h, inputs.coal_bid)
    disc = math.exp(-inputs.rate * spec.maturity)
    dem = inputs.demand

    if dem.sigma_d == 0.0:
        grid = sorted((0.0, min(mkt.cap_g, xi_h), min(mkt.cap_c, mkt.cap_g),
                       max(mkt.cap_g, xi_h), min(mkt.cap_c, mkt.cap_g + xi_h),
                       max(mkt.cap_c, mkt.cap_g), max(mkt.cap_c, mkt.cap_g + xi_h),
                       dem.cap))
        if inputs.spike is not None:
            raise ValueError("spike extension needs sigma_d > 0")
        return disc * _deterministic_spread(mkt, h, dem, grid)

    bp = spread_breakpoints(inputs.coal_bid, inputs.gas_bid, dem, xi_h)
    value = float(_spread_closed_core(mkt, h, dem.mu_d, dem.sigma_d, bp.a,
                                      inputs.coal_bid.cap))
    if inputs.spike is not None:
        value += _spike_spread_terms(dem, inputs.spike)
    return disc * value


def spark_spread_price(inputs: PricingInputs, spec: SpreadSpec) -> float:
    """Spark spread price: relabel the fuels and price the dark spread."""
    return spread_price_closed(inputs, replace(spec, leg="spark"))
