"""Generative model and game covariance construction.

Two players fit linear predictors of a shared target

    y = x_1 + ... + x_n,      x_i ~ N(0, 1) independent,

player A seeing the features indexed by S1 and player B those in S2.  A
strategy is a coefficient vector on the player's features; the prediction
errors are e1 = y - sum(alpha1_i x_i) and e2 = y - sum(alpha2_i x_i).  The
triple (y, e1, e2) is jointly Gaussian and everything downstream (rewards,
best responses, maxmin values) depends on the strategies only through its
covariance.  This module builds that covariance, normalized so that
var(y) = 1 (the raw factor n is kept in ``GameCovariance.scale``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    InvalidModelError,
    InvalidRegimeError,
    InvalidStrategyError,
    NotPositiveSemidefiniteError,
)

__all__ = [
    "FeatureSets",
    "FeatureRegime",
    "GeneralStrategyPair",
    "SymmetricStrategyPair",
    "THEORETICAL",
    "GameCovariance",
    "ConsistencyReport",
    "build_covariance_general",
    "build_covariance_symmetric",
    "covariance_entries_symmetric",
    "expand_symmetric",
    "regime_of_sets",
    "consistency_check",
]

# PSD slack for validating constructed covariances.
PSD_EIG_TOL = 1e-10
# Slack used when validating regime fractions and Cauchy-Schwarz bounds.
_FRACTION_TOL = 1e-12


@dataclass(frozen=True)
class FeatureSets:
    """Feature index sets available to each player.

    Indices are 1-based, following the convention that the target is the sum
    of features 1..n.  ``|s1| <= |s2|`` is *not* required: treating A as the
    inferior player is an analysis convention, not a type constraint.
    """

    n: int
    s1: frozenset[int]
    s2: frozenset[int]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidModelError(f"need at least one feature, got n={self.n}")
        object.__setattr__(self, "s1", frozenset(self.s1))
        object.__setattr__(self, "s2", frozenset(self.s2))
        universe = range(1, self.n + 1)
        for name, s in (("s1", self.s1), ("s2", self.s2)):
            bad = [i for i in s if i not in universe]
            if bad:
                raise InvalidModelError(f"{name} contains indices outside 1..{self.n}: {sorted(bad)}")

    @property
    def shared(self) -> frozenset[int]:
        return self.s1 & self.s2


@dataclass(frozen=True)
class FeatureRegime:
    """Knowledge fractions g1 = |S1|/n, g2 = |S2|/n, g12 = |S1 ∩ S2|/n."""

    g1: float
    g2: float
    g12: float

    def __post_init__(self) -> None:
        for name, g in (("g1", self.g1), ("g2", self.g2), ("g12", self.g12)):
            if not (0.0 <= g <= 1.0) or not math.isfinite(g):
                raise InvalidRegimeError(f"{name}={g} is not in [0, 1]")
        if self.g12 > min(self.g1, self.g2) + _FRACTION_TOL:
            raise InvalidRegimeError(
                f"g12={self.g12} exceeds min(g1, g2)={min(self.g1, self.g2)}"
            )
        if self.g12 < max(0.0, self.g1 + self.g2 - 1.0) - _FRACTION_TOL:
            raise InvalidRegimeError(
                f"g12={self.g12} is below g1+g2-1={self.g1 + self.g2 - 1.0}"
            )


@dataclass(frozen=True)
class GeneralStrategyPair:
    """Per-feature coefficient maps; the domain of each map must equal the
    player's feature set exactly."""

    alpha1: Mapping[int, float]
    alpha2: Mapping[int, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha1", dict(self.alpha1))
        object.__setattr__(self, "alpha2", dict(self.alpha2))

    def validate_against(self, sets: FeatureSets) -> None:
        if set(self.alpha1) != set(sets.s1):
            raise InvalidStrategyError(
                f"alpha1 domain {sorted(self.alpha1)} != s1 {sorted(sets.s1)}"
            )
        if set(self.alpha2) != set(sets.s2):
            raise InvalidStrategyError(
                f"alpha2 domain {sorted(self.alpha2)} != s2 {sorted(sets.s2)}"
            )


@dataclass(frozen=True)
class SymmetricStrategyPair:
    """Block-constant coefficients: a11 on A's unique features, a12 on the
    shared block, a21 on B's unique features, a22 on the shared block.

    No range restriction; optimal play routinely uses coefficients above 1.
    """

    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self) -> None:
        for name in ("a11", "a12", "a21", "a22"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidStrategyError(f"{name}={v} is not finite")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a11, self.a12, self.a21, self.a22)


THEORETICAL = SymmetricStrategyPair(1.0, 1.0, 1.0, 1.0)
"""Both players keeping every coefficient at 1 (the max-likelihood fit)."""


@dataclass(frozen=True)
class GameCovariance:
    """Normalized 3x3 covariance of (y, e1, e2), with entry (0,0) == 1.

    ``scale`` is the raw variance of the target (the feature count n) that
    was divided out; absolute rewards are recovered by multiplying the
    normalized reward by sqrt(scale).
    """

    matrix: np.ndarray
    scale: float = 1.0

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise InvalidModelError(f"covariance must be 3x3, got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def v01(self) -> float:
        return float(self.matrix[0, 1])

    @property
    def v02(self) -> float:
        return float(self.matrix[0, 2])

    @property
    def v11(self) -> float:
        return float(self.matrix[1, 1])

    @property
    def v12(self) -> float:
        return float(self.matrix[1, 2])

    @property
    def v22(self) -> float:
        return float(self.matrix[2, 2])

    def validate(self) -> None:
        """Check symmetry, unit target variance, Cauchy-Schwarz bounds, PSD."""
        m = self.matrix
        if not np.array_equal(m, m.T):
            raise NotPositiveSemidefiniteError("covariance is not symmetric")
        if m[0, 0] != 1.0:
            raise InvalidModelError(f"normalized covariance needs Sigma[0,0] == 1, got {m[0,0]}")
        if self.v11 < 0.0 or self.v22 < 0.0:
            raise NotPositiveSemidefiniteError("negative error variance")
        if abs(self.v12) > math.sqrt(self.v11 * self.v22) + _FRACTION_TOL:
            raise NotPositiveSemidefiniteError("|v12| exceeds sqrt(v11*v22)")
        if abs(self.v01) > math.sqrt(self.v11) + _FRACTION_TOL:
            raise NotPositiveSemidefiniteError("|v01| exceeds sqrt(v11)")
        if abs(self.v02) > math.sqrt(self.v22) + _FRACTION_TOL:
            raise NotPositiveSemidefiniteError("|v02| exceeds sqrt(v22)")
        eig = np.linalg.eigvalsh(m)
        if eig.min() < -PSD_EIG_TOL:
            raise NotPositiveSemidefiniteError(f"eigenvalue {eig.min():.3e} below -{PSD_EIG_TOL}")


def build_covariance_general(sets: FeatureSets, strat: GeneralStrategyPair) -> GameCovariance:
    """Covariance of (y, e1, e2) for arbitrary per-feature coefficients.

    All entries are the raw sums over feature blocks divided by n, so the
    target row/column is exactly (1, v01, v02).
    """
    strat.validate_against(sets)
    n = sets.n
    s1, s2 = sets.s1, sets.s2
    universe = frozenset(range(1, n + 1))
    s1c = universe - s1
    s2c = universe - s2
    a1, a2 = strat.alpha1, strat.alpha2

    v01 = math.fsum([float(len(s1c))] + [1.0 - a1[i] for i in s1]) / n
    v02 = math.fsum([float(len(s2c))] + [1.0 - a2[i] for i in s2]) / n
    v11 = math.fsum([float(len(s1c))] + [(1.0 - a1[i]) ** 2 for i in s1]) / n
    v22 = math.fsum([float(len(s2c))] + [(1.0 - a2[i]) ** 2 for i in s2]) / n
    v12 = math.fsum(
        [float(len(s1c & s2c))]
        + [1.0 - a2[i] for i in s1c & s2]
        + [1.0 - a1[i] for i in s1 & s2c]
        + [(1.0 - a1[i]) * (1.0 - a2[i]) for i in s1 & s2]
    ) / n
    mat = np.array([[1.0, v01, v02], [v01, v11, v12], [v02, v12, v22]])
    return GameCovariance(mat, scale=float(n))


def covariance_entries_symmetric(
    g1: float, g2: float, g12: float, a: np.ndarray
) -> np.ndarray:
    """Vectorized regime-parameterized covariance entries.

    ``a`` has shape (B, 4) holding (a11, a12, a21, a22) rows; returns a
    (B, 3, 3) stack of normalized covariance matrices.
    """
    a = np.asarray(a, dtype=float)
    a11, a12, a21, a22 = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    gu1 = g1 - g12  # mass of A's unique block
    gu2 = g2 - g12
    v01 = (1.0 - g1) + (1.0 - a11) * gu1 + (1.0 - a12) * g12
    v02 = (1.0 - g2) + (1.0 - a21) * gu2 + (1.0 - a22) * g12
    v12 = (
        (1.0 - g1 - g2 + g12)
        + (1.0 - a11) * gu1
        + (1.0 - a21) * gu2
        + (1.0 - a12) * (1.0 - a22) * g12
    )
    v11 = (1.0 - g1) + (1.0 - a11) ** 2 * gu1 + (1.0 - a12) ** 2 * g12
    v22 = (1.0 - g2) + (1.0 - a21) ** 2 * gu2 + (1.0 - a22) ** 2 * g12
    out = np.empty((a.shape[0], 3, 3))
    out[:, 0, 0] = 1.0
    out[:, 0, 1] = out[:, 1, 0] = v01
    out[:, 0, 2] = out[:, 2, 0] = v02
    out[:, 1, 2] = out[:, 2, 1] = v12
    out[:, 1, 1] = v11
    out[:, 2, 2] = v22
    return out


def build_covariance_symmetric(
    regime: FeatureRegime, strat: SymmetricStrategyPair
) -> GameCovariance:
    """Covariance of (y, e1, e2) under block-constant strategies.

    The regime parameterization is already normalized (scale = 1).
    """
    mat = covariance_entries_symmetric(
        regime.g1, regime.g2, regime.g12, np.array([strat.as_tuple()])
    )[0]
    return GameCovariance(mat, scale=1.0)


def expand_symmetric(sets: FeatureSets, strat: SymmetricStrategyPair) -> GeneralStrategyPair:
    """Spread block coefficients onto explicit per-feature maps."""
    shared = sets.shared
    alpha1 = {i: (strat.a12 if i in shared else strat.a11) for i in sets.s1}
    alpha2 = {i: (strat.a22 if i in shared else strat.a21) for i in sets.s2}
    return GeneralStrategyPair(alpha1, alpha2)


def regime_of_sets(sets: FeatureSets) -> FeatureRegime:
    n = sets.n
    return FeatureRegime(len(sets.s1) / n, len(sets.s2) / n, len(sets.shared) / n)


@dataclass(frozen=True)
class ConsistencyReport:
    """Cross-validation of the two covariance builders on the same game."""

    general: GameCovariance
    symmetric: GameCovariance
    max_abs_difference: float = field(init=False)

    def __post_init__(self) -> None:
        diff = float(np.max(np.abs(self.general.matrix - self.symmetric.matrix)))
        object.__setattr__(self, "max_abs_difference", diff)


def consistency_check(sets: FeatureSets, strat4: SymmetricStrategyPair) -> ConsistencyReport:
    """Build the covariance both ways (expanded per-feature vs regime form).

    The two matrices agree entrywise up to float rounding; any larger
    deviation is an implementation bug, which is what this diagnostic is for.
    """
    general = build_covariance_general(sets, expand_symmetric(sets, strat4))
    symmetric = build_covariance_symmetric(regime_of_sets(sets), strat4)
    return ConsistencyReport(general=general, symmetric=symmetric)
