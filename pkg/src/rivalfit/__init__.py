"""rivalfit: rewards and maxmin play for competing linear prediction models.

Two players fit linear models of a shared Gaussian target from partially
overlapping feature sets; whoever lands the strictly smaller absolute error
collects the whole reward |y| (ties pay the opponent).  The package computes
expected rewards in closed-form-assisted cubature, cross-checks them with
seeded Monte Carlo, solves the equal-coefficient worked example exactly in
rational arithmetic, and searches the guaranteed (maxmin) reward over
block-constant strategies, including regime sweeps with CSV/figure output.
"""

from .errors import (
    CapacityError,
    InvalidConfigError,
    InvalidModelError,
    InvalidRegimeError,
    InvalidStrategyError,
    NotPositiveSemidefiniteError,
    NumericalFailureError,
    RivalfitError,
)
from .model import (
    THEORETICAL,
    ConsistencyReport,
    FeatureRegime,
    FeatureSets,
    GameCovariance,
    GeneralStrategyPair,
    SymmetricStrategyPair,
    build_covariance_general,
    build_covariance_symmetric,
    consistency_check,
    expand_symmetric,
    regime_of_sets,
)
from .cubature import (
    SQRT_2_OVER_PI,
    CubatureGrid,
    HermiteRule,
    expect_reward_batch,
    expect_reward_integrand,
    hermite_rule,
    psd_sqrt,
    tensor_reward_sum,
)
from .reward import (
    RewardEstimate,
    mc_reward,
    realize_regime,
    reward_covariance,
    reward_general,
    reward_symmetric,
)
from .discrete import (
    DiscreteEnumeration,
    DiscreteGame,
    OutcomeRow,
    enumerate_discrete,
    equal_coefficient_rewards,
    example_game,
)
from .solver import (
    BestResponse,
    DiscreteMaxmin,
    MaxminSolution,
    SearchConfig,
    SweepRow,
    best_response,
    discrete_maxmin,
    fraction_range,
    float_range,
    maxmin,
    regime_sweep,
    sweep_to_csv,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "RivalfitError",
    "InvalidModelError",
    "InvalidStrategyError",
    "InvalidRegimeError",
    "InvalidConfigError",
    "NotPositiveSemidefiniteError",
    "NumericalFailureError",
    "CapacityError",
    # model
    "FeatureSets",
    "FeatureRegime",
    "GeneralStrategyPair",
    "SymmetricStrategyPair",
    "THEORETICAL",
    "GameCovariance",
    "ConsistencyReport",
    "build_covariance_general",
    "build_covariance_symmetric",
    "expand_symmetric",
    "regime_of_sets",
    "consistency_check",
    # cubature
    "HermiteRule",
    "CubatureGrid",
    "hermite_rule",
    "psd_sqrt",
    "expect_reward_integrand",
    "expect_reward_batch",
    "tensor_reward_sum",
    "SQRT_2_OVER_PI",
    # reward engines
    "RewardEstimate",
    "reward_symmetric",
    "reward_general",
    "reward_covariance",
    "mc_reward",
    "realize_regime",
    # discrete
    "DiscreteGame",
    "OutcomeRow",
    "DiscreteEnumeration",
    "enumerate_discrete",
    "example_game",
    "equal_coefficient_rewards",
    # solver
    "SearchConfig",
    "BestResponse",
    "MaxminSolution",
    "DiscreteMaxmin",
    "SweepRow",
    "best_response",
    "maxmin",
    "regime_sweep",
    "discrete_maxmin",
    "fraction_range",
    "float_range",
    "sweep_to_csv",
]
