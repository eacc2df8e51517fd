"""Electricity forward prices and power-price moments.

Conditional on demand, the expected spot price over the joint lognormal fuel
law has an explicit form per demand region (low / mid / high, by which
capacities are exhausted).  Integrating those region integrands against a
truncated Gaussian demand gives a fully closed form built from bivariate
normal CDF strips, plus two endpoint atom terms.  The same machinery with
n-th powers yields all moments of the power price.

Every closed form here is cross-checked elsewhere against adaptive
quadrature of the region integrands and against Monte Carlo.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from .gauss import binorm_cdf
from .market import DemandLaw, FuelTerminalLaw, demand_atoms, fuel_forward, scenario_build
from .stack import FuelBid, SpikeParams

__all__ = [
    "PricingInputs",
    "forward_integrand",
    "forward_price_quadrature",
    "forward_price_closed",
    "spike_forward_correction",
    "power_moment",
    "power_moment_quadrature",
    "power_variance",
]


@dataclass(frozen=True)
class PricingInputs:
    """Everything a forward or spread price depends on."""

    coal_bid: FuelBid
    gas_bid: FuelBid
    law: FuelTerminalLaw
    demand: DemandLaw
    forwards: tuple
    rate: float = 0.0
    maturity: float = 1.0
    spike: Optional[SpikeParams] = None

    def __post_init__(self):
        implied = (fuel_forward(self.law, "coal"), fuel_forward(self.law, "gas"))
        for got, want in zip(self.forwards, implied):
            if abs(got - want) > 1e-9 * max(1.0, want):
                raise ValueError(
                    "fuel forwards inconsistent with the terminal law; "
                    "recalibrate the means first"
                )
        if self.demand.cap > self.coal_bid.cap + self.gas_bid.cap + 1e-12:
            raise ValueError("demand cap exceeds combined fuel capacity")

    @classmethod
    def from_scenario(cls, spec, T: float, spike: Optional[SpikeParams] = None,
                      demand: Optional[DemandLaw] = None) -> "PricingInputs":
        law, dem, forwards = scenario_build(spec, T)
        return cls(coal_bid=spec.coal_bid, gas_bid=spec.gas_bid, law=law,
                   demand=demand or dem, forwards=forwards, rate=spec.rate,
                   maturity=T, spike=spike)

    def swapped(self) -> "PricingInputs":
        """Relabel coal <-> gas (used to price spark spreads as dark ones)."""
        return PricingInputs(
            coal_bid=FuelBid("coal", self.gas_bid.k, self.gas_bid.m, self.gas_bid.cap),
            gas_bid=FuelBid("gas", self.coal_bid.k, self.coal_bid.m, self.coal_bid.cap),
            law=self.law.swapped(),
            demand=self.demand,
            forwards=(self.forwards[1], self.forwards[0]),
            rate=self.rate,
            maturity=self.maturity,
            spike=self.spike,
        )


class _Fuel:
    """Per-fuel constants plus everything that depends on the partner fuel."""

    __slots__ = ("k", "m", "cap", "sig", "F", "lnF", "k_o", "m_o", "cap_o",
                 "sig_o", "lnF_o", "alpha_o", "delta")

    def __init__(self, k, m, cap, sig, F, k_o, m_o, cap_o, sig_o, F_o,
                 alpha_o, delta):
        self.k, self.m, self.cap = k, m, cap
        self.sig, self.F, self.lnF = sig, F, np.log(F)
        self.k_o, self.m_o, self.cap_o = k_o, m_o, cap_o
        self.sig_o, self.lnF_o = sig_o, np.log(F_o)
        self.alpha_o, self.delta = alpha_o, delta

    def bid(self, xi, n=1):
        # formula evaluation; xi may fall outside [0, cap] here by design
        return (self.F * np.exp(self.k + self.m * xi)) ** n

    def rgap(self, xi_own, xi_other, sig2):
        """Log cost gap to the partner fuel net of the forward drift."""
        return (self.k_o + self.m_o * xi_other - self.k - self.m * xi_own
                + self.lnF_o - self.lnF - 0.5 * sig2)

    def rgap_n(self, xi_own, xi_other, n, rho):
        """n-th moment version of the cost gap (tilt scaled by n)."""
        return (self.k_o + self.m_o * xi_other - self.k - self.m * xi_own
                + self.lnF_o - self.lnF
                - (n - 0.5) * self.sig ** 2 - 0.5 * self.sig_o ** 2
                + n * rho * self.sig * self.sig_o)


class _Market:
    """Two-fuel market with a fixed stack and a (possibly batched) fuel law."""

    def __init__(self, coal: FuelBid, gas: FuelBid, sig_c, sig_g, rho, F_c, F_g):
        m_c, m_g = coal.m, gas.m
        self.alpha_c = m_g / (m_c + m_g)
        self.alpha_g = m_c / (m_c + m_g)
        self.beta = (coal.k * m_g + gas.k * m_c) / (m_c + m_g)
        self.gamma = m_c * m_g / (m_c + m_g)
        self.cap_c, self.cap_g = coal.cap, gas.cap
        self.xibar = coal.cap + gas.cap
        self.sig_c, self.sig_g, self.rho = sig_c, sig_g, rho
        self.F_c, self.F_g = F_c, F_g
        self.sig2 = sig_c ** 2 - 2.0 * rho * sig_c * sig_g + sig_g ** 2
        self.sig2 = np.maximum(self.sig2, 0.0)
        self.sig = np.sqrt(self.sig2)
        # dominant technology by capacity; the price is invariant to the
        # tie-break when capacities are equal
        plus_is_coal = coal.cap > gas.cap
        self.coal = _Fuel(coal.k, m_c, coal.cap, sig_c, F_c,
                          gas.k, m_g, gas.cap, sig_g, F_g,
                          self.alpha_g, -1.0 if plus_is_coal else 1.0)
        self.gas = _Fuel(gas.k, m_g, gas.cap, sig_g, F_g,
                         coal.k, m_c, coal.cap, sig_c, F_c,
                         self.alpha_c, 1.0 if plus_is_coal else -1.0)
        self.plus, self.minus = (self.coal, self.gas) if plus_is_coal \
            else (self.gas, self.coal)
        self.alpha_plus = self.alpha_c if plus_is_coal else self.alpha_g
        self.alpha_minus = self.alpha_g if plus_is_coal else self.alpha_c

    def fuels(self):
        return (self.coal, self.gas)

    def bcg(self, xi, n=1):
        return (self.F_c ** self.alpha_c * self.F_g ** self.alpha_g
                * np.exp(self.beta + self.gamma * xi)) ** n


def _market(inputs: PricingInputs) -> _Market:
    law = inputs.law
    return _Market(inputs.coal_bid, inputs.gas_bid, law.sigma_c, law.sigma_g,
                   law.rho, *inputs.forwards)


def _phi_over(num, den):
    """Phi(num/den) with the den == 0 limit taken as a step function."""
    num, den = np.broadcast_arrays(np.asarray(num, float), np.asarray(den, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), np.inf)
    out = np.where(den > 0.0, ndtr(np.clip(ratio, -40, 40)),
                   np.where(num > 0.0, 1.0, np.where(num < 0.0, 0.0, 0.5)))
    return out if out.ndim else float(out)


class _StripBag:
    """Accumulates coefficient-weighted bivariate CDF strips, evaluated in
    one vectorised call."""

    def __init__(self):
        self._x, self._y, self._r, self._c = [], [], [], []

    def add(self, coef, uppers, lowers, second, corr):
        for u in uppers:
            self._x.append(u)
            self._y.append(second)
            self._r.append(corr)
            self._c.append(coef)
        for low in lowers:
            self._x.append(low)
            self._y.append(second)
            self._r.append(corr)
            self._c.append(-np.asarray(coef, dtype=float))

    def total(self):
        xs = np.stack(np.broadcast_arrays(*map(np.asarray, self._x)), axis=-1)
        ys = np.stack(np.broadcast_arrays(*map(np.asarray, self._y)), axis=-1)
        rs = np.stack(np.broadcast_arrays(*map(np.asarray, self._r)), axis=-1)
        cs = np.stack(np.broadcast_arrays(*map(np.asarray, self._c)), axis=-1)
        xs, ys, rs, cs = np.broadcast_arrays(xs, ys, rs, cs)
        return np.sum(cs * binorm_cdf(xs, ys, rs), axis=-1)


# ---------------------------------------------------------------------------
# region integrands (general moment order n; forwards are the n = 1 case)

def _moment_integrand(mkt: _Market, region: str, xi, n: int, mu_d_ignored=None):
    sig2, sig, rho = mkt.sig2, mkt.sig, mkt.rho
    pow_fac = {f: np.exp(0.5 * (n * n - n) * f.sig ** 2) for f in mkt.fuels()}
    v_n = (-0.5 * n * n * mkt.alpha_c * mkt.alpha_g * sig2
           + 0.5 * (n * n - n) * (mkt.alpha_c * mkt.sig_c ** 2
                                  + mkt.alpha_g * mkt.sig_g ** 2))
    bcg = mkt.bcg(xi, n) * np.exp(v_n)

    if region == "low":
        total = 0.0
        bracket = 1.0
        for f in mkt.fuels():
            rn = f.rgap_n(xi, 0.0, n, rho)
            total = total + f.bid(xi, n) * pow_fac[f] * _phi_over(rn, sig)
            bracket = bracket - _phi_over(rn + n * f.alpha_o * sig2, sig)
        return total + bcg * bracket
    if region == "mid":
        p = mkt.plus
        rn_sat = p.rgap_n(xi - mkt.minus.cap, mkt.minus.cap, n, rho)
        rn_alone = p.rgap_n(xi, 0.0, n, rho)
        total = p.bid(xi - mkt.minus.cap, n) * pow_fac[p] * _phi_over(-rn_sat, sig)
        total = total + p.bid(xi, n) * pow_fac[p] * _phi_over(rn_alone, sig)
        shift = n * mkt.alpha_minus * sig2
        return total + bcg * (_phi_over(rn_sat + shift, sig)
                              - _phi_over(rn_alone + shift, sig))
    if region == "high":
        total = 0.0
        bracket = -1.0
        for f in mkt.fuels():
            rn = f.rgap_n(xi - f.cap_o, f.cap_o, n, rho)
            total = total + f.bid(xi - f.cap_o, n) * pow_fac[f] * _phi_over(-rn, sig)
            bracket = bracket + _phi_over(rn + n * f.alpha_o * sig2, sig)
        return total + bcg * bracket
    raise ValueError(f"unknown region {region!r}")


def _region_bounds(mkt: _Market, region: str):
    lo_cap = min(mkt.cap_c, mkt.cap_g)
    hi_cap = max(mkt.cap_c, mkt.cap_g)
    return {"low": (0.0, lo_cap), "mid": (lo_cap, hi_cap),
            "high": (hi_cap, mkt.xibar)}[region]


def forward_integrand(region: str, xi: float, inputs: PricingInputs) -> float:
    """Expected spot price conditional on demand = xi in the given region."""
    mkt = _market(inputs)
    lo, hi = _region_bounds(mkt, region)
    if not lo - 1e-12 <= xi <= hi + 1e-12:
        raise ValueError(f"xi={xi} outside the {region} region [{lo}, {hi}]")
    return float(_moment_integrand(mkt, region, xi, 1))


def _region_of(mkt: _Market, xi: float) -> str:
    if xi <= min(mkt.cap_c, mkt.cap_g):
        return "low"
    if xi <= max(mkt.cap_c, mkt.cap_g):
        return "mid"
    return "high"


def _deterministic_demand_value(mkt: _Market, demand: DemandLaw, n: int) -> float:
    xi = min(max(demand.mu_d, 0.0), demand.cap)
    return float(_moment_integrand(mkt, _region_of(mkt, xi), xi, n))


def _integrate_regions(mkt: _Market, pdf, n: int, p_zero: float, p_cap: float,
                       quad_kwargs=None) -> float:
    kwargs = dict(limit=200, epsabs=1e-12, epsrel=1e-10)
    if quad_kwargs:
        kwargs.update(quad_kwargs)
    total = 0.0
    for region in ("low", "mid", "high"):
        lo, hi = _region_bounds(mkt, region)
        if hi - lo < 1e-15:
            continue
        val, _ = quad(lambda x, r=region: float(_moment_integrand(mkt, r, x, n)) * pdf(x),
                      lo, hi, **kwargs)
        total += val
    total += p_zero * float(_moment_integrand(mkt, "low", 0.0, n))
    total += p_cap * float(_moment_integrand(mkt, "high", mkt.xibar, n))
    return total


def _resolve_density(inputs: PricingInputs, density):
    """Return (pdf, p_zero, p_cap); default is the truncated Gaussian demand."""
    dem = inputs.demand
    if density is None:
        p_zero, p_cap = demand_atoms(dem)
        norm = 1.0 / (dem.sigma_d * math.sqrt(2.0 * math.pi))

        def pdf(x):
            z = (x - dem.mu_d) / dem.sigma_d
            return norm * math.exp(-0.5 * z * z)

        return pdf, p_zero, p_cap
    pdf, p_zero, p_cap = density
    mass = quad(pdf, 0.0, dem.cap, limit=200)[0] + p_zero + p_cap
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"demand density plus atoms integrate to {mass}, not 1")
    return pdf, p_zero, p_cap


def forward_price_quadrature(inputs: PricingInputs, density=None) -> float:
    """Forward price by adaptive quadrature of the region integrands.

    `density` overrides the demand law with a tuple (pdf, p_zero, p_cap);
    the endpoint atoms are always added explicitly.
    """
    mkt = _market(inputs)
    if density is None and inputs.demand.sigma_d == 0.0:
        value = _deterministic_demand_value(mkt, inputs.demand, 1)
    else:
        pdf, p_zero, p_cap = _resolve_density(inputs, density)
        value = _integrate_regions(mkt, pdf, 1, p_zero, p_cap)
    if inputs.spike is not None:
        value += spike_forward_correction(inputs.demand, inputs.spike)
    return value


# ---------------------------------------------------------------------------
# closed forms

def _forward_closed_core(mkt: _Market, mu_d, sd):
    sig2, sig = mkt.sig2, mkt.sig
    gamma = mkt.gamma
    eta = 0.5 * (gamma ** 2 * sd ** 2 - mkt.alpha_c * mkt.alpha_g * sig2)
    bcg_mu = mkt.bcg(mu_d)
    x0 = -mu_d / sd
    xbar = (mkt.xibar - mu_d) / sd

    bag = _StripBag()
    for f in mkt.fuels():
        q = f.m * sd
        sid = np.sqrt(q * q + sig2)
        x_own = (f.cap - mu_d) / sd
        x_oth = (f.cap_o - mu_d) / sd
        tilt = np.exp(0.5 * q * q)

        w1 = (f.rgap(mu_d, 0.0, sig2) - q * q) / sid
        bag.add(tilt * f.bid(mu_d), [x_own - q], [x0 - q], w1, q / sid)

        w2 = (-f.rgap(mu_d - f.cap_o, f.cap_o, sig2) + q * q) / sid
        bag.add(tilt * f.bid(mu_d - f.cap_o), [xbar - q], [x_oth - q], w2, -q / sid)

        qg = gamma * sd
        coef = f.delta * np.exp(eta) * bcg_mu
        u1 = (f.rgap(mu_d, 0.0, sig2) + f.alpha_o * sig2 - gamma * f.m * sd * sd) \
            / (f.delta * sid)
        u2 = (f.rgap(mu_d - f.cap_o, f.cap_o, sig2) + f.alpha_o * sig2
              - gamma * f.m * sd * sd) / (f.delta * sid)
        corr = q / (f.delta * sid)
        bag.add(-coef, [x_own - qg], [x0 - qg], u1, corr)
        bag.add(coef, [xbar - qg], [x_oth - qg], u2, corr)

    value = bag.total()
    p_zero, p_cap = ndtr(x0), ndtr(-xbar)
    floor_sum = sum(f.bid(0.0) * _phi_over(f.rgap(0.0, 0.0, sig2), sig)
                    for f in mkt.fuels())
    top_sum = sum(f.bid(f.cap) * _phi_over(-f.rgap(f.cap, f.cap_o, sig2), sig)
                  for f in mkt.fuels())
    return value + p_zero * floor_sum + p_cap * top_sum


def forward_price_closed(inputs: PricingInputs) -> float:
    """Closed-form forward price under truncated Gaussian demand.

    Deterministic demand (sigma_d = 0) routes to the region integrand at
    the clamped demand mean; a spike regime adds its own closed correction.
    """
    mkt = _market(inputs)
    dem = inputs.demand
    if dem.sigma_d == 0.0:
        value = _deterministic_demand_value(mkt, dem, 1)
        if inputs.spike is not None:
            x = dem.mu_d
            if x >= dem.cap:
                value += math.exp(inputs.spike.m_s * (x - dem.cap)) - 1.0
            elif x <= 0.0:
                value -= math.exp(-inputs.spike.m_n * x) - 1.0
        return value
    value = float(_forward_closed_core(mkt, dem.mu_d, dem.sigma_d))
    if inputs.spike is not None:
        value += spike_forward_correction(dem, inputs.spike)
    return value


def spike_forward_correction(d: DemandLaw, spike: SpikeParams) -> float:
    """Forward increment from the spike and negative-price regimes."""
    if d.sigma_d <= 0.0:
        raise ValueError("spike correction needs sigma_d > 0")
    zs = (d.mu_d - d.cap) / d.sigma_d
    zn = -d.mu_d / d.sigma_d
    up = math.exp(spike.m_s * (d.mu_d - d.cap) + 0.5 * (spike.m_s * d.sigma_d) ** 2) \
        * ndtr(zs + spike.m_s * d.sigma_d) - ndtr(zs)
    down = math.exp(-spike.m_n * d.mu_d + 0.5 * (spike.m_n * d.sigma_d) ** 2) \
        * ndtr(spike.m_n * d.sigma_d + zn) - ndtr(zn)
    return float(up - down)


def _moment_closed_core(mkt: _Market, mu_d, sd, n: int):
    sig2, sig, rho = mkt.sig2, mkt.sig, mkt.rho
    gamma = mkt.gamma
    eta_n = (0.5 * n * n * (gamma ** 2 * sd ** 2 - mkt.alpha_c * mkt.alpha_g * sig2)
             + 0.5 * (n * n - n) * (mkt.alpha_c * mkt.sig_c ** 2
                                    + mkt.alpha_g * mkt.sig_g ** 2))
    bcg_mu = mkt.bcg(mu_d, n)
    x0 = -mu_d / sd
    xbar = (mkt.xibar - mu_d) / sd

    bag = _StripBag()
    for f in mkt.fuels():
        q = f.m * sd
        sid = np.sqrt(q * q + sig2)
        x_own = (f.cap - mu_d) / sd
        x_oth = (f.cap_o - mu_d) / sd
        zeta_n = 0.5 * (n * n - n) * f.sig ** 2 + 0.5 * (n * q) ** 2

        w1 = (f.rgap_n(mu_d, 0.0, n, rho) - n * q * q) / sid
        bag.add(np.exp(zeta_n) * f.bid(mu_d, n),
                [x_own - n * q], [x0 - n * q], w1, q / sid)

        w2 = (-f.rgap_n(mu_d - f.cap_o, f.cap_o, n, rho) + n * q * q) / sid
        bag.add(np.exp(zeta_n) * f.bid(mu_d - f.cap_o, n),
                [xbar - n * q], [x_oth - n * q], w2, -q / sid)

        qg = n * gamma * sd
        coef = f.delta * np.exp(eta_n) * bcg_mu
        u1 = (f.rgap_n(mu_d, 0.0, n, rho) + n * f.alpha_o * sig2
              - n * gamma * f.m * sd * sd) / (f.delta * sid)
        u2 = (f.rgap_n(mu_d - f.cap_o, f.cap_o, n, rho) + n * f.alpha_o * sig2
              - n * gamma * f.m * sd * sd) / (f.delta * sid)
        corr = q / (f.delta * sid)
        bag.add(-coef, [x_own - qg], [x0 - qg], u1, corr)
        bag.add(coef, [xbar - qg], [x_oth - qg], u2, corr)

    value = bag.total()
    p_zero, p_cap = ndtr(x0), ndtr(-xbar)
    pow_fac = {f: np.exp(0.5 * (n * n - n) * f.sig ** 2) for f in mkt.fuels()}
    floor_sum = sum(f.bid(0.0, n) * pow_fac[f]
                    * _phi_over(f.rgap_n(0.0, 0.0, n, rho), sig)
                    for f in mkt.fuels())
    top_sum = sum(f.bid(f.cap, n) * pow_fac[f]
                  * _phi_over(-f.rgap_n(f.cap, f.cap_o, n, rho), sig)
                  for f in mkt.fuels())
    return value + p_zero * floor_sum + p_cap * top_sum


def power_moment(n: int, inputs: PricingInputs) -> float:
    """n-th moment of the power price at maturity (base stack, no spikes)."""
    if n < 1 or n != int(n):
        raise ValueError("moment order must be a positive integer")
    mkt = _market(inputs)
    dem = inputs.demand
    if dem.sigma_d == 0.0:
        return _deterministic_demand_value(mkt, dem, int(n))
    return float(_moment_closed_core(mkt, dem.mu_d, dem.sigma_d, int(n)))


def power_moment_quadrature(n: int, inputs: PricingInputs) -> float:
    """Independent quadrature evaluation of the n-th power-price moment."""
    if n < 1 or n != int(n):
        raise ValueError("moment order must be a positive integer")
    mkt = _market(inputs)
    if inputs.demand.sigma_d == 0.0:
        return _deterministic_demand_value(mkt, inputs.demand, int(n))
    pdf, p_zero, p_cap = _resolve_density(inputs, None)
    return _integrate_regions(mkt, pdf, int(n), p_zero, p_cap)


def power_variance(inputs: PricingInputs) -> float:
    """Variance of the power price at maturity."""
    m1 = power_moment(1, inputs)
    m2 = power_moment(2, inputs)
    return m2 - m1 * m1
