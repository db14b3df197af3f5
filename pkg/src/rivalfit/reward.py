"""Expected-reward engines: gated cubature and the Monte Carlo referee.

Rewards are reported normalized: U = E[|y| 1(|e1| < |e2|)] / sqrt(n), which
is the reward integral under the unit-variance covariance from
:mod:`rivalfit.model`.  Multiply by sqrt(n) for the absolute scale.

The cubature engine evaluates at the requested order m and at m - 12; if the
two disagree by 1e-3 or more it escalates once to order 120 and reports that
convergence gap as the error bound.  The Monte Carlo engine simulates the
per-instance reward directly from the feature model (never through the
covariance algebra), so the two routes are independent checks of each other.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .cubature import SQRT_2_OVER_PI, Which, expect_reward_integrand
from .errors import InvalidConfigError, InvalidRegimeError, InvalidStrategyError, NumericalFailureError
from .model import (
    FeatureRegime,
    FeatureSets,
    GameCovariance,
    GeneralStrategyPair,
    SymmetricStrategyPair,
    build_covariance_general,
    build_covariance_symmetric,
)

__all__ = [
    "RewardEstimate",
    "reward_symmetric",
    "reward_general",
    "reward_covariance",
    "mc_reward",
    "realize_regime",
    "DEFAULT_ORDER",
    "CONVERGENCE_GATE",
    "ESCALATION_ORDER",
    "DEFAULT_MC_FEATURES",
]

DEFAULT_ORDER = 60
CONVERGENCE_GATE = 1e-3
ESCALATION_ORDER = 120
GATE_STEP = 12
DEFAULT_MC_FEATURES = 10000

Method = Literal["cubature", "monte-carlo", "exact-enumeration"]


@dataclass(frozen=True)
class RewardEstimate:
    """A reward value with method metadata and an error bound.

    ``error_bound`` is the convergence gap for cubature, the standard error
    for Monte Carlo, and 0 for exact enumeration.  ``scale_applied`` is the
    multiplier already applied to ``value`` (1 for normalized output,
    sqrt(n) for absolute).  ``seed`` is recorded for Monte Carlo estimates.
    """

    value: float
    method: Method
    order_or_samples: int
    error_bound: float
    scale_applied: float = 1.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.value < 0.0:
            raise InvalidConfigError(f"reward cannot be negative, got {self.value}")
        # total-reward cap, with statistical headroom for Monte Carlo estimates
        cap = SQRT_2_OVER_PI * self.scale_applied + 4.0 * self.error_bound + 1e-9 * self.scale_applied
        if self.value > cap:
            raise InvalidConfigError(
                f"reward {self.value} exceeds the total-reward cap {cap}"
            )


def _gated_value(cov: GameCovariance, m: int, which: Which) -> tuple[float, int, float]:
    """Evaluate with the convergence gate; returns (value, order_used, gap)."""
    if m < 1:
        raise InvalidConfigError(f"cubature order must be >= 1, got {m}")
    lower = max(1, m - GATE_STEP)
    u = expect_reward_integrand(cov, m, which=which)
    gap = abs(u - expect_reward_integrand(cov, lower, which=which)) if lower < m else 0.0
    if gap < CONVERGENCE_GATE or m >= ESCALATION_ORDER:
        return u, m, gap
    u_hi = expect_reward_integrand(cov, ESCALATION_ORDER, which=which)
    gap_hi = abs(u_hi - expect_reward_integrand(cov, ESCALATION_ORDER - GATE_STEP, which=which))
    return u_hi, ESCALATION_ORDER, gap_hi


def reward_covariance(
    cov: GameCovariance,
    m: int = DEFAULT_ORDER,
    which: Which = "r1",
    absolute: bool = False,
) -> RewardEstimate:
    """Gated cubature reward for an already-built game covariance."""
    value, order, gap = _gated_value(cov, m, which)
    scale = math.sqrt(cov.scale) if absolute else 1.0
    return RewardEstimate(
        value=value * scale,
        method="cubature",
        order_or_samples=order,
        error_bound=gap * scale,
        scale_applied=scale,
    )


def reward_symmetric(
    regime: FeatureRegime,
    strat: SymmetricStrategyPair,
    m: int = DEFAULT_ORDER,
    which: Which = "r1",
) -> RewardEstimate:
    """Normalized reward of A under block-constant strategies."""
    return reward_covariance(build_covariance_symmetric(regime, strat), m=m, which=which)


def reward_general(
    sets: FeatureSets,
    strat: GeneralStrategyPair,
    m: int = DEFAULT_ORDER,
    which: Which = "r1",
    absolute: bool = False,
) -> RewardEstimate:
    """Reward of A under arbitrary per-feature coefficients."""
    cov = build_covariance_general(sets, strat)
    return reward_covariance(cov, m=m, which=which, absolute=absolute)


def realize_regime(regime: FeatureRegime, n: int = DEFAULT_MC_FEATURES) -> FeatureSets:
    """Materialize fractional knowledge as explicit index sets of size n.

    Set sizes are the nearest integers to g*n; the shared block occupies the
    first g12*n indices of both sets (exchangeability makes the placement
    irrelevant).  Fractions that round inconsistently are rejected.
    """
    if n < 1:
        raise InvalidRegimeError(f"need n >= 1 to realize a regime, got {n}")
    k1 = int(round(regime.g1 * n))
    k2 = int(round(regime.g2 * n))
    k12 = int(round(regime.g12 * n))
    if k12 > min(k1, k2):
        raise InvalidRegimeError(
            f"rounded overlap {k12} exceeds min set size {min(k1, k2)} at n={n}"
        )
    if k1 + k2 - k12 > n:
        raise InvalidRegimeError(
            f"rounded sets need {k1 + k2 - k12} features but n={n}"
        )
    shared = range(1, k12 + 1)
    only1 = range(k12 + 1, k1 + 1)
    only2 = range(k1 + 1, k1 + (k2 - k12) + 1)
    return FeatureSets(n=n, s1=frozenset(shared) | frozenset(only1), s2=frozenset(shared) | frozenset(only2))


def _block_sizes(sets: FeatureSets) -> tuple[int, int, int, int]:
    k12 = len(sets.shared)
    return (k12, len(sets.s1) - k12, len(sets.s2) - k12, sets.n - len(sets.s1 | sets.s2))


def _chunk_stats_blocks(
    rng: np.random.Generator,
    count: int,
    sizes: tuple[int, int, int, int],
    strat: SymmetricStrategyPair,
    sqrt_n: float,
    which: Which,
) -> tuple[float, float]:
    """Simulate ``count`` draws through independent block sums."""
    roots = [math.sqrt(b) for b in sizes]
    draws = rng.standard_normal((4, count))
    s_sh = draws[0] * roots[0]
    s_u1 = draws[1] * roots[1]
    s_u2 = draws[2] * roots[2]
    s_no = draws[3] * roots[3]
    y = s_sh + s_u1 + s_u2 + s_no
    e1 = (1.0 - strat.a12) * s_sh + (1.0 - strat.a11) * s_u1 + s_u2 + s_no
    e2 = (1.0 - strat.a22) * s_sh + s_u1 + (1.0 - strat.a21) * s_u2 + s_no
    return _score(y, e1, e2, sqrt_n, which)


def _score(
    y: np.ndarray, e1: np.ndarray, e2: np.ndarray, sqrt_n: float, which: Which
) -> tuple[float, float]:
    ay = np.abs(y)
    win = np.abs(e1) < np.abs(e2)
    r1 = np.where(win, ay, 0.0)
    r2 = np.where(win, 0.0, ay)
    if not np.all(r1 + r2 == ay):  # per-draw reward split is exact by construction
        raise NumericalFailureError("per-sample reward split violated r1 + r2 == |y|")
    if which == "r1":
        vals = r1
    elif which == "r2":
        vals = r2
    else:
        vals = ay
    vals = vals / sqrt_n
    return float(vals.sum()), float((vals * vals).sum())


def _worker_stats(
    seed_seq: np.random.SeedSequence,
    quota: int,
    sets: FeatureSets,
    strat: SymmetricStrategyPair | GeneralStrategyPair,
    which: Which,
) -> tuple[float, float]:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    sqrt_n = math.sqrt(sets.n)
    total = 0.0
    total_sq = 0.0
    if isinstance(strat, SymmetricStrategyPair):
        sizes = _block_sizes(sets)
        chunk = 1 << 17
        left = quota
        while left > 0:
            c = min(chunk, left)
            left -= c
            s, sq = _chunk_stats_blocks(rng, c, sizes, strat, sqrt_n, which)
            total += s
            total_sq += sq
    else:
        strat.validate_against(sets)
        w1 = np.ones(sets.n)
        w2 = np.ones(sets.n)
        for i, coeff in strat.alpha1.items():
            w1[i - 1] = 1.0 - coeff
        for i, coeff in strat.alpha2.items():
            w2[i - 1] = 1.0 - coeff
        chunk = min(1 << 17, max(256, (1 << 22) // sets.n))
        left = quota
        while left > 0:
            c = min(chunk, left)
            left -= c
            x = rng.standard_normal((c, sets.n))
            y = x.sum(axis=1)
            s, sq = _score(y, x @ w1, x @ w2, sqrt_n, which)
            total += s
            total_sq += sq
    return total, total_sq


def mc_reward(
    model: FeatureRegime | FeatureSets,
    strat: SymmetricStrategyPair | GeneralStrategyPair,
    samples: int = 1_000_000,
    seed: int = 0,
    which: Which = "r1",
    workers: int = 1,
    n_features: int = DEFAULT_MC_FEATURES,
    absolute: bool = False,
) -> RewardEstimate:
    """Plain Monte Carlo estimate of the normalized reward.

    Regime inputs are realized as explicit sets with ``n_features`` features.
    The generator is split into one child stream per worker, so results are
    reproducible for a fixed (seed, workers) pair.  Calls with the same seed
    and worker count consume identical random streams regardless of
    ``which``, making R1/R2/total estimates from the same seed comparable
    draw for draw.
    """
    if samples < 1000:
        raise InvalidConfigError(f"need at least 1000 samples, got {samples}")
    if workers < 1:
        raise InvalidConfigError(f"workers must be >= 1, got {workers}")
    if isinstance(model, FeatureRegime):
        if not isinstance(strat, SymmetricStrategyPair):
            raise InvalidStrategyError(
                "regime inputs carry no per-feature identity; use a SymmetricStrategyPair"
            )
        sets = realize_regime(model, n_features)
    else:
        sets = model
        if isinstance(strat, GeneralStrategyPair):
            strat.validate_against(sets)

    quotas = [samples // workers] * workers
    quotas[-1] += samples - sum(quotas)
    children = np.random.SeedSequence(seed).spawn(workers)
    if workers == 1:
        stats = [_worker_stats(children[0], quotas[0], sets, strat, which)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(_worker_stats, children, quotas, [sets] * workers,
                                  [strat] * workers, [which] * workers))
    total = math.fsum(s for s, _ in stats)
    total_sq = math.fsum(sq for _, sq in stats)
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    se = math.sqrt(var / samples)
    scale = math.sqrt(sets.n) if absolute else 1.0
    return RewardEstimate(
        value=mean * scale,
        method="monte-carlo",
        order_or_samples=samples,
        error_bound=se * scale,
        scale_applied=scale,
        seed=seed,
    )
