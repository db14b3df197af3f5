"""Exact enumeration of discrete-feature games.

The continuous machinery replaces the Gaussian features with a finite value
domain (default: each feature is 0 or 1 with equal probability) and computes
expected rewards by exhausting all |domain|^n outcomes in rational
arithmetic, so results are exact -- ties in particular are decided exactly,
and they matter here: with both players theoretical, the four-feature worked
example pays A only 0.1875 of the total 2 precisely because ties go to B.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import IO, Mapping, Sequence

import numpy as np

from .errors import CapacityError, InvalidModelError, InvalidStrategyError

__all__ = [
    "DiscreteGame",
    "OutcomeRow",
    "DiscreteEnumeration",
    "enumerate_discrete",
    "example_game",
    "equal_coefficient_rewards",
    "ENUMERATION_CAPACITY",
]

ENUMERATION_CAPACITY = 1 << 24


def _to_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x)  # exact binary expansion of the given float
    if isinstance(x, Rational):
        return Fraction(x)
    raise InvalidStrategyError(f"cannot interpret {x!r} as an exact coefficient")


@dataclass(frozen=True)
class DiscreteGame:
    """A finite-outcome instance of the two-player prediction game.

    ``values`` and ``probabilities`` describe the shared per-feature
    distribution; coefficients are stored exactly as rationals.
    """

    n: int
    s1: frozenset[int]
    s2: frozenset[int]
    alpha1: Mapping[int, Fraction]
    alpha2: Mapping[int, Fraction]
    values: tuple[Fraction, ...] = (Fraction(0), Fraction(1))
    probabilities: tuple[Fraction, ...] = (Fraction(1, 2), Fraction(1, 2))

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidModelError(f"need at least one feature, got n={self.n}")
        object.__setattr__(self, "s1", frozenset(self.s1))
        object.__setattr__(self, "s2", frozenset(self.s2))
        universe = range(1, self.n + 1)
        for name, s in (("s1", self.s1), ("s2", self.s2)):
            if any(i not in universe for i in s):
                raise InvalidModelError(f"{name} has indices outside 1..{self.n}")
        object.__setattr__(self, "alpha1", {i: _to_fraction(v) for i, v in dict(self.alpha1).items()})
        object.__setattr__(self, "alpha2", {i: _to_fraction(v) for i, v in dict(self.alpha2).items()})
        if set(self.alpha1) != set(self.s1):
            raise InvalidStrategyError("alpha1 domain does not equal s1")
        if set(self.alpha2) != set(self.s2):
            raise InvalidStrategyError("alpha2 domain does not equal s2")
        object.__setattr__(self, "values", tuple(_to_fraction(v) for v in self.values))
        object.__setattr__(self, "probabilities", tuple(_to_fraction(p) for p in self.probabilities))
        if len(self.values) != len(self.probabilities) or not self.values:
            raise InvalidModelError("values and probabilities must be equal-length and nonempty")
        if sum(self.probabilities) != 1:
            raise InvalidModelError(f"probabilities sum to {sum(self.probabilities)}, not 1")
        if any(p < 0 for p in self.probabilities):
            raise InvalidModelError("probabilities must be nonnegative")
        if len(self.values) ** self.n > ENUMERATION_CAPACITY:
            raise CapacityError(
                f"{len(self.values)}^{self.n} outcomes exceed the {ENUMERATION_CAPACITY} guard"
            )


@dataclass(frozen=True)
class OutcomeRow:
    """One feature pattern with its errors, target and A's reward."""

    pattern: str
    e1: Fraction
    e2: Fraction
    y: Fraction
    r1: Fraction


@dataclass(frozen=True)
class DiscreteEnumeration:
    """Exact expected rewards plus the per-outcome table."""

    r1: Fraction
    r2: Fraction
    rows: tuple[OutcomeRow, ...]
    total: Fraction = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "total", self.r1 + self.r2)

    def to_csv(self, out: IO[str]) -> None:
        """Columns pattern,e1,e2,y,r1 in enumeration (lexicographic) order."""
        out.write("pattern,e1,e2,y,r1\n")
        for row in self.rows:
            out.write(
                f"{row.pattern},{_decimal(row.e1)},{_decimal(row.e2)},"
                f"{_decimal(row.y)},{_decimal(row.r1)}\n"
            )


def _decimal(x: Fraction) -> str:
    return format(float(x), ".10g")


def _pattern_label(values: Sequence[Fraction], indices: tuple[int, ...]) -> str:
    labels = [str(values[i]) if values[i].denominator != 1 else str(values[i].numerator) for i in indices]
    if all(len(lab) == 1 for lab in labels):
        return "".join(labels)
    return "|".join(labels)


def enumerate_discrete(game: DiscreteGame) -> DiscreteEnumeration:
    """Exhaustively enumerate the game; all arithmetic is exact.

    Rows appear in lexicographic pattern order (features left to right, the
    value domain in its given order).  A's reward on an outcome is |y| when
    |e1| < |e2| strictly; everything else, ties included, pays B.
    """
    vals = game.values
    probs = game.probabilities
    feats = list(range(1, game.n + 1))
    r1_total = Fraction(0)
    ey_total = Fraction(0)
    rows: list[OutcomeRow] = []
    for combo in itertools.product(range(len(vals)), repeat=game.n):
        x = {i: vals[combo[j]] for j, i in enumerate(feats)}
        prob = Fraction(1)
        for ix in combo:
            prob *= probs[ix]
        y = sum(x.values(), Fraction(0))
        e1 = y - sum((game.alpha1[i] * x[i] for i in game.s1), Fraction(0))
        e2 = y - sum((game.alpha2[i] * x[i] for i in game.s2), Fraction(0))
        r1 = abs(y) if abs(e1) < abs(e2) else Fraction(0)
        r1_total += prob * r1
        ey_total += prob * abs(y)
        rows.append(OutcomeRow(_pattern_label(vals, combo), e1, e2, y, r1))
    return DiscreteEnumeration(r1=r1_total, r2=ey_total - r1_total, rows=tuple(rows))


def example_game(alpha, beta) -> DiscreteGame:
    """The four-feature Bernoulli game (A sees x1, x2; B sees x2, x3, x4).

    ``alpha`` is a scalar or a pair; ``beta`` a scalar or a triple.  Scalars
    are broadcast to equal coefficients.
    """
    alphas = _broadcast(alpha, 2, "alpha")
    betas = _broadcast(beta, 3, "beta")
    return DiscreteGame(
        n=4,
        s1=frozenset({1, 2}),
        s2=frozenset({2, 3, 4}),
        alpha1={1: alphas[0], 2: alphas[1]},
        alpha2={2: betas[0], 3: betas[1], 4: betas[2]},
    )


def _broadcast(value, count: int, name: str) -> list[Fraction]:
    if isinstance(value, (list, tuple)):
        if len(value) != count:
            raise InvalidStrategyError(f"{name} needs {count} coefficients, got {len(value)}")
        return [_to_fraction(v) for v in value]
    return [_to_fraction(value)] * count


def equal_coefficient_rewards(
    game: DiscreteGame,
    alphas: Sequence[Fraction],
    betas: Sequence[Fraction],
) -> np.ndarray:
    """Exact R1 payoff matrix over an (alpha x beta) grid of equal coefficients.

    Entry [i, j] is A's expected reward when A plays alphas[i] on all of s1
    and B plays betas[j] on all of s2.  Returned as an object array of
    Fractions.  Equiprobable unit-denominator games take an integer fast
    path; anything else falls back to per-cell rational evaluation.
    """
    alphas = [_to_fraction(a) for a in alphas]
    betas = [_to_fraction(b) for b in betas]
    vals = game.values
    stats = []
    for combo in itertools.product(range(len(vals)), repeat=game.n):
        x = [vals[ix] for ix in combo]
        y = sum(x, Fraction(0))
        s1sum = sum((x[i - 1] for i in game.s1), Fraction(0))
        s2sum = sum((x[i - 1] for i in game.s2), Fraction(0))
        prob = Fraction(1)
        for ix in combo:
            prob *= game.probabilities[ix]
        stats.append((prob, y, s1sum, s2sum))

    equiprob = len({p for p, *_ in stats}) == 1
    integral = all(y.denominator == 1 and s1.denominator == 1 and s2.denominator == 1
                   for _, y, s1, s2 in stats)
    if equiprob and integral:
        d = 1
        for f in itertools.chain(alphas, betas):
            d = d * f.denominator // np.gcd(d, f.denominator)
        a_num = np.array([int(a * d) for a in alphas], dtype=object)
        b_num = np.array([int(b * d) for b in betas], dtype=object)
        ys = np.array([int(y) for _, y, _, _ in stats], dtype=np.int64)
        s1s = np.array([int(s1) for _, _, s1, _ in stats], dtype=np.int64)
        s2s = np.array([int(s2) for _, _, _, s2 in stats], dtype=np.int64)
        bound = d * int(np.abs(ys).max(initial=0)) + max(
            (abs(int(v)) for v in np.concatenate([a_num, b_num])), default=0
        ) * int(max(np.abs(s1s).max(initial=0), np.abs(s2s).max(initial=0)))
        if bound < 2**62:
            a_num = a_num.astype(np.int64)
            b_num = b_num.astype(np.int64)
            e1 = np.abs(d * ys[None, :] - a_num[:, None] * s1s[None, :])  # (A, P)
            e2 = np.abs(d * ys[None, :] - b_num[:, None] * s2s[None, :])  # (B, P)
            ay = np.abs(ys)
            win = e1[:, None, :] < e2[None, :, :]
            numerators = (win * ay[None, None, :]).sum(axis=2)
            denom = len(stats) // 1  # equiprobable
            prob = stats[0][0]
            out = np.empty(numerators.shape, dtype=object)
            for i in range(out.shape[0]):
                for j in range(out.shape[1]):
                    out[i, j] = prob * int(numerators[i, j])
            return out

    out = np.empty((len(alphas), len(betas)), dtype=object)
    for i, a in enumerate(alphas):
        e1s = [abs(y - a * s1) for _, y, s1, _ in stats]
        for j, b in enumerate(betas):
            total = Fraction(0)
            for (prob, y, _, s2), e1 in zip(stats, e1s):
                if e1 < abs(y - b * s2):
                    total += prob * abs(y)
            out[i, j] = total
    return out
