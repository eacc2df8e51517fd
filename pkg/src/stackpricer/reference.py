"""Reference pricing models the stack model is compared against.

Margrabe's exchange-option formula for jointly lognormal power and fuel, a
linear cointegration model priced by simulation, moment matching of those
reduced forms to the stack model's mean/variance term structure, and the
implied-correlation inversion of Margrabe against a stack price.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.special import ndtr

from .market import FuelTerminalLaw
from .mc import Estimate, SimConfig, _estimate, sample_terminal
from .stack import FuelBid

__all__ = [
    "LognormalPowerLaw",
    "CointegrationSpec",
    "MatchPolicy",
    "OUParams",
    "margrabe_price",
    "margrabe_sigma",
    "cointegration_weights",
    "calibrate_cointegration",
    "cointegration_spread_mc",
    "lognormal_match",
    "moment_match_ou",
    "implied_correlation",
]

_RHO_EDGE = 1.0 - 1e-9


@dataclass(frozen=True)
class LognormalPowerLaw:
    """Reduced-form lognormal law of the power price at maturity."""

    mu_p: float
    sigma_p: float
    rho_pc: float = 0.0
    rho_pg: float = 0.0

    def __post_init__(self):
        if max(abs(self.rho_pc), abs(self.rho_pg)) > 1.0:
            raise ValueError("power-fuel correlations must lie in [-1, 1]")

    @property
    def forward(self) -> float:
        return math.exp(self.mu_p + 0.5 * self.sigma_p ** 2)


@dataclass(frozen=True)
class CointegrationSpec:
    """P_T = w_c S_c + w_g S_g + Y with Gaussian residual Y."""

    w_c: float
    w_g: float
    mu_y: float
    sigma_y: float

    def __post_init__(self):
        if self.w_c <= 0.0 or self.w_g <= 0.0:
            raise ValueError("cointegrating weights must be strictly positive")
        if self.sigma_y < 0.0:
            raise ValueError("residual volatility must be non-negative")


@dataclass(frozen=True)
class MatchPolicy:
    match_mean: bool = True
    match_variance: bool = True


@dataclass(frozen=True)
class OUParams:
    """OU process for a Gaussian driver (log power price or the residual)."""

    kappa: float
    level: float
    vol: float
    x0: float

    def mean_at(self, T):
        dec = np.exp(-self.kappa * np.asarray(T, float))
        return self.x0 * dec + self.level * (1.0 - dec)

    def var_at(self, T):
        return self.vol ** 2 * (1.0 - np.exp(-2.0 * self.kappa * np.asarray(T, float))) \
            / (2.0 * self.kappa)


def margrabe_price(F_p, F_i, h, sigma_pi, r=0.0, T=1.0):
    """Exchange option e^{-rT} E[(P - h S_i)^+] for jointly lognormal legs.

    `sigma_pi` is the terminal standard deviation of log(P/(h S_i)); zero
    degenerates to the discounted intrinsic value.
    """
    F_p = np.asarray(F_p, float)
    F_i = np.asarray(F_i, float)
    sigma_pi = np.asarray(sigma_pi, float)
    if np.any(F_p <= 0.0) or np.any(F_i <= 0.0):
        raise ValueError("forwards must be strictly positive")
    if np.any(sigma_pi < 0.0):
        raise ValueError("sigma must be non-negative")
    disc = np.exp(-r * np.asarray(T, float))
    safe = np.where(sigma_pi > 0.0, sigma_pi, 1.0)
    ratio = np.log(F_p / (h * F_i))
    d_plus = ratio / safe + 0.5 * safe
    d_minus = ratio / safe - 0.5 * safe
    live = disc * (F_p * ndtr(d_plus) - h * F_i * ndtr(d_minus))
    intrinsic = disc * np.maximum(F_p - h * F_i, 0.0)
    out = np.where(sigma_pi > 0.0, live, intrinsic)
    return float(out) if out.ndim == 0 else out


def margrabe_sigma(sigma_p, sigma_i, rho_pi):
    """Spread volatility sqrt(sigma_p^2 - 2 rho sigma_p sigma_i + sigma_i^2)."""
    if np.any(np.abs(np.asarray(rho_pi)) > 1.0):
        raise ValueError("correlation must lie in [-1, 1]")
    var = np.asarray(sigma_p) ** 2 - 2.0 * np.asarray(rho_pi) * np.asarray(sigma_p) \
        * np.asarray(sigma_i) + np.asarray(sigma_i) ** 2
    out = np.sqrt(np.maximum(var, 0.0))
    return float(out) if out.ndim == 0 else out


def cointegration_weights(coal: FuelBid, mu_d: float):
    """Equal weights pinned to the most likely marginal coal bid level."""
    w = 0.5 * math.exp(coal.k + coal.m * mu_d * coal.cap)
    return w, w


def calibrate_cointegration(w_c: float, w_g: float, law: FuelTerminalLaw,
                            target_mean: float, target_var: float) -> CointegrationSpec:
    """Residual law matching a target mean and variance of the power price.

    An infeasible variance target (fuel part already larger) clamps the
    residual volatility at zero, matching the mean only.
    """
    f_c = math.exp(law.mu_c + 0.5 * law.sigma_c ** 2)
    f_g = math.exp(law.mu_g + 0.5 * law.sigma_g ** 2)
    var_c = f_c * f_c * (math.exp(law.sigma_c ** 2) - 1.0)
    var_g = f_g * f_g * (math.exp(law.sigma_g ** 2) - 1.0)
    cov = f_c * f_g * (math.exp(law.rho * law.sigma_c * law.sigma_g) - 1.0)
    fuel_var = w_c * w_c * var_c + w_g * w_g * var_g + 2.0 * w_c * w_g * cov
    mu_y = target_mean - w_c * f_c - w_g * f_g
    sigma_y = math.sqrt(max(0.0, target_var - fuel_var))
    return CointegrationSpec(w_c=w_c, w_g=w_g, mu_y=mu_y, sigma_y=sigma_y)


def cointegration_spread_mc(spec: CointegrationSpec, law: FuelTerminalLaw,
                            h: float, leg: str = "dark", r: float = 0.0,
                            T: float = 1.0, n_paths: int = 100_000,
                            seed: int = 0, antithetic: bool = True) -> Estimate:
    """Simulated spread price in the cointegration model."""
    if n_paths < 10_000:
        raise ValueError("need at least 1e4 paths")
    if leg not in ("dark", "spark"):
        raise ValueError("leg must be 'dark' or 'spark'")
    from .market import DemandLaw  # demand unused beyond the sampler interface

    cfg = SimConfig(n_paths=n_paths, seed=seed, antithetic=antithetic)
    dummy = DemandLaw(mu_d=0.0, sigma_d=1.0, cap=1.0)
    smp = sample_terminal(law, dummy, cfg)
    # residual draws ride on the (unused) demand normal
    y = spec.mu_y + spec.sigma_y * (smp.x - dummy.mu_d) / dummy.sigma_d
    power = spec.w_c * smp.s_c + spec.w_g * smp.s_g + y
    fuel = smp.s_c if leg == "dark" else smp.s_g
    payoff = math.exp(-r * T) * np.maximum(power - h * fuel, 0.0)
    return _estimate(payoff, antithetic)


def lognormal_match(mean: float, variance: float):
    """(mu, sigma^2) of a lognormal matching a mean and variance exactly."""
    if mean <= 0.0:
        raise ValueError("mean must be strictly positive")
    if variance < 0.0:
        raise ValueError("variance must be non-negative")
    sigma2 = math.log1p(variance / (mean * mean))
    return math.log(mean) - 0.5 * sigma2, sigma2


def moment_match_ou(maturities: Sequence[float], means: Sequence[float],
                    variances: Sequence[float], policy: MatchPolicy = MatchPolicy(),
                    reference: Optional[tuple] = None) -> OUParams:
    """Best-fit OU driver for log P_T given power-price moment targets.

    Targets are per-maturity (mean, variance) pairs of P_T; each pair is
    converted to the Gaussian scale before a relative least-squares fit of
    (kappa, level, vol, x0).  Per the match policy, unmatched series are
    replaced by the `reference` targets (means_ref, vars_ref).
    """
    T = np.asarray(maturities, float)
    if T.size < 2:
        raise ValueError("need at least two maturities")
    means = np.asarray(means, float)
    variances = np.asarray(variances, float)
    if not (policy.match_mean and policy.match_variance):
        if reference is None:
            raise ValueError("match policy needs reference targets")
        ref_means = np.asarray(reference[0], float)
        ref_vars = np.asarray(reference[1], float)
        if not policy.match_mean:
            means = ref_means
        if not policy.match_variance:
            variances = ref_vars
    if np.all(variances <= 0.0):
        raise ValueError("degenerate targets: zero variance everywhere")

    mu_t = np.empty_like(T)
    var_t = np.empty_like(T)
    for i, (m, v) in enumerate(zip(means, variances)):
        mu_t[i], var_t[i] = lognormal_match(float(m), float(v))
    return fit_ou_to_gaussian_targets(T, mu_t, var_t)


def fit_ou_to_gaussian_targets(T, mu_targets, var_targets) -> OUParams:
    """Relative least-squares fit of an OU mean/variance term structure."""
    T = np.asarray(T, float)
    mu_targets = np.asarray(mu_targets, float)
    var_targets = np.asarray(var_targets, float)
    mu_scale = np.maximum(np.abs(mu_targets), 1e-8)
    var_scale = np.maximum(np.abs(var_targets), 1e-12)

    def residuals(theta):
        kappa, level, vol, x0 = math.exp(theta[0]), theta[1], math.exp(theta[2]), theta[3]
        ou = OUParams(kappa=kappa, level=level, vol=vol, x0=x0)
        return np.concatenate([
            (ou.mean_at(T) - mu_targets) / mu_scale,
            (ou.var_at(T) - var_targets) / var_scale,
        ])

    kappa0 = 1.0
    level0 = float(mu_targets[-1])
    x00 = float(mu_targets[0])
    vol0 = math.sqrt(max(float(var_targets[-1]) * 2.0 * kappa0, 1e-10))
    sol = least_squares(residuals, x0=[math.log(kappa0), level0, math.log(vol0), x00],
                        method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    kappa, level, vol, x0 = math.exp(sol.x[0]), sol.x[1], math.exp(sol.x[2]), sol.x[3]
    return OUParams(kappa=kappa, level=level, vol=vol, x0=x0)


def implied_correlation(stack_value: float, F_p: float, F_i: float, h: float,
                        sigma_p: float, sigma_i: float, r: float = 0.0,
                        T: float = 1.0, tol: float = 1e-10) -> Optional[float]:
    """Power-fuel correlation at which Margrabe reproduces a stack price.

    Bracketed bisection on rho in [-1+1e-9, 1-1e-9]; the price is strictly
    decreasing in rho, so a root exists iff the stack value lies between the
    extreme Margrabe prices.  Returns None when it does not exist.
    """

    def price(rho):
        return margrabe_price(F_p, F_i, h, margrabe_sigma(sigma_p, sigma_i, rho), r, T)

    lo, hi = -_RHO_EDGE, _RHO_EDGE
    p_max, p_min = price(lo), price(hi)
    if stack_value > p_max + tol or stack_value < p_min - tol:
        return None
    if abs(p_max - stack_value) <= tol:
        return lo
    if abs(p_min - stack_value) <= tol:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        diff = price(mid) - stack_value
        if abs(diff) <= tol:
            return mid
        if diff > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
