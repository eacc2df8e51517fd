"""Fuel bid curves and the market bid stack.

Each technology offers power along an exponential bid curve
b_i(xi, s) = s * exp(k_i + m_i * xi) for xi in [0, cap_i].  Merit-order
aggregation of those curves maps (demand, fuel prices) to the spot price:
generically for any number of fuels via ordered breakpoints, in explicit
case-resolved form for two fuels, and with spike / negative-price regimes
bolted onto the stack endpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FuelBid",
    "MarketSnapshot",
    "MarginalSets",
    "StackCoefficients",
    "SpikeParams",
    "bid_curve_eval",
    "bid_curve_inverse",
    "classify_marginal_sets",
    "stack_coefficients",
    "spot_price_nfuel",
    "spot_price_twofuel",
    "spot_price_twofuel_vec",
    "spot_price_extended",
    "spot_price_extended_vec",
    "case_count",
]


@dataclass(frozen=True)
class FuelBid:
    """Exponential bid curve of one technology: s * exp(k + m * xi)."""

    fuel_id: str
    k: float
    m: float
    cap: float

    def __post_init__(self):
        if self.m <= 0.0:
            raise ValueError("bid slope m must be strictly positive")
        if self.cap <= 0.0:
            raise ValueError("capacity must be strictly positive")

    def floor(self, fuel_price: float) -> float:
        """Cheapest bid of this fuel: price of its first unit."""
        return fuel_price * math.exp(self.k)

    def top(self, fuel_price: float) -> float:
        """Most expensive bid: price of the last unit at full capacity."""
        return fuel_price * math.exp(self.k + self.m * self.cap)


@dataclass(frozen=True)
class MarketSnapshot:
    """One observation of demand and fuel prices."""

    demand: float
    fuel_prices: dict

    def __post_init__(self):
        if any(s <= 0.0 for s in self.fuel_prices.values()):
            raise ValueError("fuel prices must be strictly positive")


@dataclass(frozen=True)
class MarginalSets:
    marginal: frozenset
    saturated: frozenset


@dataclass(frozen=True)
class StackCoefficients:
    """Exponents of the joint-marginal price region.

    For marginal set M: price = prod_i s_i^alpha_i * exp(beta + gamma * q)
    with q the demand served by M.  alpha_i = (prod_{j != i} m_j)/zeta,
    beta = (sum_l k_l prod_{j != l} m_j)/zeta, gamma = (prod m_j)/zeta and
    zeta = sum_l prod_{j != l} m_j; the alphas sum to one.
    """

    alpha: dict
    beta: float
    gamma: float
    zeta: float


@dataclass(frozen=True)
class SpikeParams:
    """Slopes of the negative-price and spike regimes beyond the stack ends."""

    m_n: float
    m_s: float

    def __post_init__(self):
        if self.m_n <= 0.0 or self.m_s <= 0.0:
            raise ValueError("spike regime slopes must be strictly positive")


def bid_curve_eval(bid: FuelBid, quantity: float, fuel_price: float) -> float:
    """Offer price of fuel `bid` at cumulative quantity `quantity`."""
    if not 0.0 <= quantity <= bid.cap:
        raise ValueError(f"quantity {quantity} outside [0, {bid.cap}]")
    if fuel_price <= 0.0:
        raise ValueError("fuel price must be strictly positive")
    return fuel_price * math.exp(bid.k + bid.m * quantity)


def bid_curve_inverse(bid: FuelBid, price: float, fuel_price: float) -> float:
    """Quantity supplied at a power price (right-continuous inverse).

    0 below the curve floor, cap at or above the curve top, the log
    inversion in between; total in `price`.
    """
    if fuel_price <= 0.0:
        raise ValueError("fuel price must be strictly positive")
    if price < bid.floor(fuel_price):
        return 0.0
    if price >= bid.top(fuel_price):
        return bid.cap
    return (math.log(price / fuel_price) - bid.k) / bid.m


def stack_coefficients(bids) -> StackCoefficients:
    """Joint-marginal exponents for the marginal set `bids`."""
    bids = list(bids)
    if not bids:
        raise ValueError("marginal set must be nonempty")
    prods = {}
    for b in bids:
        prods[b.fuel_id] = math.prod(o.m for o in bids if o is not b)
    zeta = sum(prods.values())
    alpha = {fid: p / zeta for fid, p in prods.items()}
    beta = sum(b.k * prods[b.fuel_id] for b in bids) / zeta
    gamma = math.prod(b.m for b in bids) / zeta
    return StackCoefficients(alpha=alpha, beta=beta, gamma=gamma, zeta=zeta)


def _check_snapshot(bids, snap):
    total_cap = sum(b.cap for b in bids)
    if not 0.0 <= snap.demand <= total_cap:
        raise ValueError(f"demand {snap.demand} outside [0, {total_cap}]")
    for b in bids:
        if b.fuel_id not in snap.fuel_prices:
            raise ValueError(f"missing fuel price for {b.fuel_id}")


def _clearing(bids, snap):
    """Left-continuous clearing price and per-fuel quantities.

    Sorts the 2n curve endpoints, walks segments accumulating supply and
    solves the located segment in closed form; no iterative root-finding.
    """
    _check_snapshot(bids, snap)
    demand = snap.demand
    prices = {b.fuel_id: snap.fuel_prices[b.fuel_id] for b in bids}
    floors = {b.fuel_id: b.floor(prices[b.fuel_id]) for b in bids}
    tops = {b.fuel_id: b.top(prices[b.fuel_id]) for b in bids}

    if demand == 0.0:
        return min(floors.values()), {b.fuel_id: 0.0 for b in bids}

    def supply(p):
        return sum(bid_curve_inverse(b, p, prices[b.fuel_id]) for b in bids)

    breakpoints = sorted(set(floors.values()) | set(tops.values()))
    price = breakpoints[-1]
    for idx, bp in enumerate(breakpoints):
        s = supply(bp)
        if s >= demand:
            if s == demand or idx == 0:
                price = bp
            else:
                lo = breakpoints[idx - 1]
                marginal = [
                    b for b in bids
                    if floors[b.fuel_id] <= lo and tops[b.fuel_id] >= bp
                ]
                saturated_cap = sum(
                    b.cap for b in bids if tops[b.fuel_id] <= lo
                )
                co = stack_coefficients(marginal)
                log_p = co.beta + co.gamma * (demand - saturated_cap)
                log_p += sum(
                    co.alpha[b.fuel_id] * math.log(prices[b.fuel_id])
                    for b in marginal
                )
                price = math.exp(log_p)
            break

    quantities = {
        b.fuel_id: bid_curve_inverse(b, price, prices[b.fuel_id]) for b in bids
    }
    return price, quantities


def spot_price_nfuel(bids, snap: MarketSnapshot) -> float:
    """Market-clearing spot price for any number of fuels."""
    price, _ = _clearing(list(bids), snap)
    return price


def classify_marginal_sets(bids, snap: MarketSnapshot) -> MarginalSets:
    """Split fuels into partially used (marginal) and fully used sets.

    Boundary demand resolves by left-continuity: a fuel sitting exactly at
    full capacity lands in the saturated set.
    """
    bids = list(bids)
    price, quantities = _clearing(bids, snap)
    marginal = frozenset(
        b.fuel_id for b in bids if 0.0 < quantities[b.fuel_id] < b.cap
    )
    saturated = frozenset(
        b.fuel_id for b in bids if quantities[b.fuel_id] >= b.cap
    )
    return MarginalSets(marginal=marginal, saturated=saturated)


def spot_price_twofuel(coal: FuelBid, gas: FuelBid, snap: MarketSnapshot,
                       with_region: bool = False):
    """Explicit case-resolved two-fuel spot price.

    Region tags follow the five merit-order cases: P1 coal alone, P2 gas
    alone, P3 coal marginal with gas saturated, P4 gas marginal with coal
    saturated, P5 both fuels jointly marginal.  Exact case boundaries take
    the lower-demand (left-continuous) branch.
    """
    _check_snapshot((coal, gas), snap)
    d = snap.demand
    s_c, s_g = snap.fuel_prices[coal.fuel_id], snap.fuel_prices[gas.fuel_id]
    lo_cap, hi_cap = min(coal.cap, gas.cap), max(coal.cap, gas.cap)
    # tie -> gas is the dominant technology; any consistent choice works
    plus, minus = (coal, gas) if coal.cap > gas.cap else (gas, coal)
    s_plus = snap.fuel_prices[plus.fuel_id]

    def joint(dd):
        co = stack_coefficients((coal, gas))
        return (s_c ** co.alpha[coal.fuel_id]) * (s_g ** co.alpha[gas.fuel_id]) \
            * math.exp(co.beta + co.gamma * dd)

    if d <= lo_cap:
        p_c = bid_curve_eval(coal, d, s_c)
        p_g = bid_curve_eval(gas, d, s_g)
        if p_c <= gas.floor(s_g):
            price, region = p_c, "P1"
        elif p_g <= coal.floor(s_c):
            price, region = p_g, "P2"
        else:
            price, region = joint(d), "P5"
    elif d <= hi_cap:
        alone = bid_curve_eval(plus, d, s_plus)
        above = bid_curve_eval(plus, d - minus.cap, s_plus)
        if alone <= minus.floor(snap.fuel_prices[minus.fuel_id]):
            price, region = alone, ("P1" if plus is coal else "P2")
        elif above > minus.top(snap.fuel_prices[minus.fuel_id]):
            price, region = above, ("P3" if plus is coal else "P4")
        else:
            price, region = joint(d), "P5"
    else:
        c_above = bid_curve_eval(coal, d - gas.cap, s_c)
        g_above = bid_curve_eval(gas, d - coal.cap, s_g)
        if c_above > gas.top(s_g):
            price, region = c_above, "P3"
        elif g_above > coal.top(s_c):
            price, region = g_above, "P4"
        else:
            price, region = joint(d), "P5"

    return (price, region) if with_region else price


def spot_price_twofuel_vec(coal: FuelBid, gas: FuelBid, demand, s_c, s_g):
    """Vectorised two-fuel spot price over arrays of (demand, s_c, s_g)."""
    d = np.asarray(demand, dtype=float)
    s_c = np.asarray(s_c, dtype=float)
    s_g = np.asarray(s_g, dtype=float)
    co = stack_coefficients((coal, gas))
    a_c, a_g = co.alpha[coal.fuel_id], co.alpha[gas.fuel_id]
    joint = (s_c ** a_c) * (s_g ** a_g) * np.exp(co.beta + co.gamma * d)

    floor_c, top_c = s_c * math.exp(coal.k), s_c * math.exp(coal.k + coal.m * coal.cap)
    floor_g, top_g = s_g * math.exp(gas.k), s_g * math.exp(gas.k + gas.m * gas.cap)

    lo_cap, hi_cap = min(coal.cap, gas.cap), max(coal.cap, gas.cap)
    plus, minus = (coal, gas) if coal.cap > gas.cap else (gas, coal)
    s_plus = s_c if plus is coal else s_g
    floor_minus = floor_c if minus is coal else floor_g
    top_minus = top_c if minus is coal else top_g

    b_c = s_c * np.exp(coal.k + coal.m * d)
    b_g = s_g * np.exp(gas.k + gas.m * d)
    low = np.where(b_c <= floor_g, b_c, np.where(b_g <= floor_c, b_g, joint))

    alone = s_plus * np.exp(plus.k + plus.m * d)
    above = s_plus * np.exp(plus.k + plus.m * (d - minus.cap))
    mid = np.where(alone <= floor_minus, alone,
                   np.where(above > top_minus, above, joint))

    c_above = s_c * np.exp(coal.k + coal.m * (d - gas.cap))
    g_above = s_g * np.exp(gas.k + gas.m * (d - coal.cap))
    high = np.where(c_above > top_g, c_above,
                    np.where(g_above > top_c, g_above, joint))

    return np.where(d <= lo_cap, low, np.where(d <= hi_cap, mid, high))


def spot_price_extended(coal: FuelBid, gas: FuelBid, x: float,
                        fuel_prices: dict, spike: SpikeParams,
                        with_region: bool = False):
    """Spot price driven by the unbounded demand proxy `x`.

    Inside the stack this is the two-fuel price at clamped demand; beyond
    the endpoints the price moves onto the negative-price / spike tails,
    continuously at both junctions.
    """
    total_cap = coal.cap + gas.cap
    s_c = fuel_prices[coal.fuel_id]
    s_g = fuel_prices[gas.fuel_id]
    if x <= 0.0:
        base = min(coal.floor(s_c), gas.floor(s_g))
        price, region = base - math.exp(-spike.m_n * x) + 1.0, "negative"
    elif x >= total_cap:
        base = max(coal.top(s_c), gas.top(s_g))
        price, region = base + math.exp(spike.m_s * (x - total_cap)) - 1.0, "spike"
    else:
        snap = MarketSnapshot(demand=x, fuel_prices=fuel_prices)
        return spot_price_twofuel(coal, gas, snap, with_region=with_region)
    return (price, region) if with_region else price


def spot_price_extended_vec(coal: FuelBid, gas: FuelBid, x, s_c, s_g,
                            spike: SpikeParams):
    """Vectorised extended spot price over arrays of (x, s_c, s_g)."""
    x = np.asarray(x, dtype=float)
    s_c = np.asarray(s_c, dtype=float)
    s_g = np.asarray(s_g, dtype=float)
    total_cap = coal.cap + gas.cap
    d = np.clip(x, 0.0, total_cap)
    base = spot_price_twofuel_vec(coal, gas, d, s_c, s_g)
    floor = np.minimum(s_c * math.exp(coal.k), s_g * math.exp(gas.k))
    top = np.maximum(s_c * math.exp(coal.k + coal.m * coal.cap),
                     s_g * math.exp(gas.k + gas.m * gas.cap))
    neg = floor - np.exp(-spike.m_n * np.minimum(x, 0.0)) + 1.0
    spk = top + np.exp(spike.m_s * (np.maximum(x, total_cap) - total_cap)) - 1.0
    return np.where(x <= 0.0, neg, np.where(x >= total_cap, spk, base))


def case_count(n: int) -> int:
    """Number of distinct price expressions for an n-fuel stack."""
    if n < 1:
        raise ValueError("need at least one fuel")
    return sum(
        math.comb(n, i) * sum(math.comb(n - i, j) for j in range(n - i + 1))
        for i in range(1, n + 1)
    )
