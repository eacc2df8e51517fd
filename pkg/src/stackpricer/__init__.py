"""Multi-fuel bid-stack electricity pricing library.

Spot prices from merit-order stacking of exponential fuel bid curves,
closed-form power forwards, dark/spark spread options and power-price
moments under joint lognormal fuels and truncated Gaussian demand, with
quadrature and Monte Carlo cross-validation, reference models (Margrabe,
cointegration) and power plant valuation.
"""

from .gauss import StripArgs, binorm_cdf, binorm_strip, gaussian_exp_overlap, norm_cdf
from .stack import (
    FuelBid,
    MarginalSets,
    MarketSnapshot,
    SpikeParams,
    StackCoefficients,
    bid_curve_eval,
    bid_curve_inverse,
    case_count,
    classify_marginal_sets,
    spot_price_extended,
    spot_price_nfuel,
    spot_price_twofuel,
    stack_coefficients,
)
from .market import (
    DemandLaw,
    FuelDynamics,
    FuelTerminalLaw,
    ScenarioSpec,
    base_bids,
    base_demand,
    base_dynamics,
    calibrate_mean_to_forward,
    demand_atoms,
    fuel_forward,
    scenario,
    scenario_build,
    terminal_law_from_dynamics,
)
from .forwards import (
    PricingInputs,
    forward_integrand,
    forward_price_closed,
    forward_price_quadrature,
    power_moment,
    power_moment_quadrature,
    power_variance,
    spike_forward_correction,
)
from .spreads import (
    Breakpoints,
    SpreadSpec,
    heat_rate_quantity,
    spark_spread_price,
    spread_breakpoints,
    spread_integrand,
    spread_price_closed,
    spread_price_quadrature,
)
from .mc import (
    DemandPathSpec,
    Estimate,
    SimConfig,
    mc_forward,
    mc_moment,
    mc_spread,
    sample_terminal,
    simulate_spot_paths,
)
from .reference import (
    CointegrationSpec,
    LognormalPowerLaw,
    MatchPolicy,
    OUParams,
    calibrate_cointegration,
    cointegration_spread_mc,
    cointegration_weights,
    implied_correlation,
    lognormal_match,
    margrabe_price,
    margrabe_sigma,
    moment_match_ou,
)
from .plant import (
    PlantSpec,
    margrabe_plant_value,
    plant_hours,
    plant_value,
    plant_value_sweep,
)

__version__ = "0.1.0"
