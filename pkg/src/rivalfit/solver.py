"""Best responses, maxmin strategies and regime sweeps.

The guaranteed (maxmin) reward of player A over block-constant strategies is
computed by a deterministic nested coarse-to-fine grid search: the reward
surface is cheap per point but discontinuity-prone, so no gradients are used
and all grid ties break toward lexicographically smallest coordinates.  The
inner minimum is re-evaluated at the refined outer incumbent with one extra
refinement round so the reported value never rests on an under-minimized
response.

A variant backed by the exact rational enumerator solves the discrete
worked example on equal-coefficient grids.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import IO, Sequence

import numpy as np

from .cubature import expect_reward_batch
from .discrete import DiscreteGame, equal_coefficient_rewards
from .errors import InvalidConfigError, InvalidRegimeError
from .model import FeatureRegime, covariance_entries_symmetric

__all__ = [
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
    "sweep_metadata",
    "SWEEP_COLUMNS",
]

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "g1,g2,g12,u_theoretical,u_star,gain,a11,a12,a21,a22,evals,gap"
)


@dataclass(frozen=True)
class SearchConfig:
    """Nested grid-search parameters shared by both optimization loops."""

    box: tuple[float, float] = (-2.0, 5.0)
    coarse_points: int = 29
    refine_rounds: int = 3
    refine_shrink: float = 0.25
    cubature_order: int = 60

    def __post_init__(self) -> None:
        lo, hi = self.box
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise InvalidConfigError(f"degenerate search box {self.box}")
        if self.coarse_points < 5:
            raise InvalidConfigError(f"coarse_points must be >= 5, got {self.coarse_points}")
        if not 0.0 < self.refine_shrink < 1.0:
            raise InvalidConfigError(f"refine_shrink must be in (0, 1), got {self.refine_shrink}")
        if self.refine_rounds < 0:
            raise InvalidConfigError(f"refine_rounds must be >= 0, got {self.refine_rounds}")
        if (hi - lo) * self.refine_shrink**self.refine_rounds <= 1e-6:
            raise InvalidConfigError("refinement would shrink the box below 1e-6")
        if self.cubature_order < 1:
            raise InvalidConfigError(f"cubature_order must be >= 1, got {self.cubature_order}")


@dataclass(frozen=True)
class BestResponse:
    a2: tuple[float, float]
    value: float
    evaluations: int


@dataclass(frozen=True)
class MaxminSolution:
    """Guaranteed reward for A with the supporting strategies.

    ``gain`` is u_star / u_theoretical (inf when the theoretical baseline is
    exactly zero).  ``diagnostics`` records evaluation counts, final grid
    spacings, the inner re-check delta and whether an optimizer touched the
    search box boundary.
    """

    u_star: float
    a1_star: tuple[float, float]
    a2_response: tuple[float, float]
    u_theoretical: float
    gain: float
    diagnostics: dict[str, float]


def _axis(lo: float, hi: float, points: int) -> np.ndarray:
    return np.linspace(lo, hi, points)


def _grid_points(lo: np.ndarray, hi: np.ndarray, points: int) -> np.ndarray:
    x = _axis(lo[0], hi[0], points)
    y = _axis(lo[1], hi[1], points)
    return np.stack([np.repeat(x, points), np.tile(y, points)], axis=1)


def _shrink_box(
    center: np.ndarray, lo: np.ndarray, hi: np.ndarray, box: tuple[float, float], shrink: float
) -> tuple[np.ndarray, np.ndarray]:
    width = (hi - lo) * shrink
    new_lo = np.maximum(center - width / 2.0, box[0])
    new_hi = np.minimum(center + width / 2.0, box[1])
    return new_lo, new_hi


def _inner_values(regime: FeatureRegime, a1: np.ndarray, a2_points: np.ndarray, m: int) -> np.ndarray:
    coeffs = np.concatenate(
        [np.broadcast_to(a1, (a2_points.shape[0], 2)), a2_points], axis=1
    )
    mats = covariance_entries_symmetric(regime.g1, regime.g2, regime.g12, coeffs)
    return expect_reward_batch(mats, m, which="r1", validate=False)


def best_response(
    regime: FeatureRegime,
    a1: tuple[float, float],
    cfg: SearchConfig,
    rounds: int | None = None,
) -> BestResponse:
    """B's reward-minimizing block coefficients against a fixed A strategy.

    Coarse grid over the box, then ``rounds`` local refinements around the
    incumbent (defaults to cfg.refine_rounds).  Deterministic: grid ties keep
    the lexicographically smallest (a21, a22).
    """
    rounds = cfg.refine_rounds if rounds is None else rounds
    a1_arr = np.asarray(a1, dtype=float)
    lo = np.array([cfg.box[0]] * 2)
    hi = np.array([cfg.box[1]] * 2)
    best_val = math.inf
    best_pt = None
    evals = 0
    for _ in range(rounds + 1):
        pts = _grid_points(lo, hi, cfg.coarse_points)
        vals = _inner_values(regime, a1_arr, pts, cfg.cubature_order)
        evals += pts.shape[0]
        idx = int(np.argmin(vals))
        if float(vals[idx]) < best_val:
            best_val = float(vals[idx])
            best_pt = pts[idx].copy()
        lo, hi = _shrink_box(best_pt, lo, hi, cfg.box, cfg.refine_shrink)
    return BestResponse(a2=(float(best_pt[0]), float(best_pt[1])), value=best_val, evaluations=evals)


def _theoretical_value(regime: FeatureRegime, m: int) -> float:
    mats = covariance_entries_symmetric(regime.g1, regime.g2, regime.g12, np.ones((1, 4)))
    return float(expect_reward_batch(mats, m, which="r1", validate=False)[0])


def maxmin(regime: FeatureRegime, cfg: SearchConfig | None = None) -> MaxminSolution:
    """max over A's grid of (min over B's grid) of the normalized reward.

    Every outer candidate is scored with a full inner search; the final
    incumbent's inner minimum is then re-run with one extra refinement round
    and its (possibly lower) value is the one reported.
    """
    cfg = cfg or SearchConfig()
    lo = np.array([cfg.box[0]] * 2)
    hi = np.array([cfg.box[1]] * 2)
    best_val = -math.inf
    best_pt = None
    evals = 0
    last_improvement = math.inf
    for _ in range(cfg.refine_rounds + 1):
        pts = _grid_points(lo, hi, cfg.coarse_points)
        round_best = -math.inf
        round_pt = None
        for row in pts:
            resp = best_response(regime, (row[0], row[1]), cfg)
            evals += resp.evaluations
            if resp.value > round_best:
                round_best = resp.value
                round_pt = row
        if round_best > best_val:
            last_improvement = round_best - best_val
            best_val = round_best
            best_pt = round_pt.copy()
        lo, hi = _shrink_box(best_pt, lo, hi, cfg.box, cfg.refine_shrink)

    final = best_response(regime, (best_pt[0], best_pt[1]), cfg, rounds=cfg.refine_rounds + 1)
    evals += final.evaluations
    u_star = min(final.value, best_val)
    u_theoretical = _theoretical_value(regime, cfg.cubature_order)
    gain = u_star / u_theoretical if u_theoretical > 0.0 else math.inf
    width = (cfg.box[1] - cfg.box[0]) * cfg.refine_shrink**cfg.refine_rounds
    spacing = width / (cfg.coarse_points - 1)
    boundary = any(
        math.isclose(v, edge, rel_tol=0.0, abs_tol=1e-12)
        for v in (*best_pt, *final.a2)
        for edge in cfg.box
    )
    if boundary:
        logger.warning(
            "maxmin optimizer touched the search box boundary at g=(%g, %g, %g); "
            "the reported guarantee may improve with a wider box",
            regime.g1, regime.g2, regime.g12,
        )
    return MaxminSolution(
        u_star=u_star,
        a1_star=(float(best_pt[0]), float(best_pt[1])),
        a2_response=final.a2,
        u_theoretical=u_theoretical,
        gain=gain,
        diagnostics={
            "evaluations": float(evals),
            "final_spacing": spacing,
            "outer_improvement": float(last_improvement),
            "recheck_delta": float(final.value - best_val),
            "boundary_hit": float(boundary),
        },
    )


# --- regime sweeps -----------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    g1: float
    g2: float
    g12: float
    u_theoretical: float = math.nan
    u_star: float = math.nan
    gain: float = math.nan
    a11: float = math.nan
    a12: float = math.nan
    a21: float = math.nan
    a22: float = math.nan
    evals: int = 0
    gap: float = math.nan
    skip: str = ""


def _resolve_g12(g1: float, g2: float, rule: str | float) -> float:
    if rule == "product":
        return g1 * g2
    return float(rule)


def _sweep_cell(args: tuple[float, float, str | float, SearchConfig]) -> SweepRow:
    g1, g2, rule, cfg = args
    g12 = _resolve_g12(g1, g2, rule)
    try:
        regime = FeatureRegime(g1, g2, g12)
    except InvalidRegimeError as exc:
        return SweepRow(g1=g1, g2=g2, g12=g12, skip=str(exc))
    sol = maxmin(regime, cfg)
    return SweepRow(
        g1=g1,
        g2=g2,
        g12=g12,
        u_theoretical=sol.u_theoretical,
        u_star=sol.u_star,
        gain=sol.gain,
        a11=sol.a1_star[0],
        a12=sol.a1_star[1],
        a21=sol.a2_response[0],
        a22=sol.a2_response[1],
        evals=int(sol.diagnostics["evaluations"]),
        gap=abs(sol.diagnostics["recheck_delta"]),
    )


def regime_sweep(
    g1_values: Sequence[float],
    g2_values: Sequence[float],
    g12_rule: str | float,
    cfg: SearchConfig | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    """One maxmin solve per (g1, g2) cell, g1-major row order.

    Cells whose implied g12 violates the regime bounds are emitted with an
    explicit skip marker instead of values.  Cells are independent and run
    in parallel when ``workers`` > 1; the row order never depends on the
    schedule.
    """
    cfg = cfg or SearchConfig()
    if isinstance(g12_rule, str) and g12_rule != "product":
        raise InvalidConfigError(f"g12 rule must be 'product' or a number, got {g12_rule!r}")
    cells = [(float(g1), float(g2), g12_rule, cfg) for g1 in g1_values for g2 in g2_values]
    if workers <= 1:
        return [_sweep_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, cells, chunksize=1))


def _fmt(value: float, digits: int = 10) -> str:
    return format(value, f".{digits}g")


def sweep_to_csv(rows: Sequence[SweepRow], out: IO[str], digits: int = 10) -> None:
    """Write the sweep schema with fixed significant digits (newline endings)."""
    out.write(SWEEP_COLUMNS + "\n")
    for row in rows:
        cells = [_fmt(row.g1, digits), _fmt(row.g2, digits), _fmt(row.g12, digits)]
        if row.skip:
            cells += ["skip"] * 9
        else:
            cells += [
                _fmt(row.u_theoretical, digits),
                _fmt(row.u_star, digits),
                _fmt(row.gain, digits),
                _fmt(row.a11, digits),
                _fmt(row.a12, digits),
                _fmt(row.a21, digits),
                _fmt(row.a22, digits),
                str(row.evals),
                _fmt(row.gap, digits),
            ]
        out.write(",".join(cells) + "\n")


def sweep_metadata(
    cfg: SearchConfig,
    g12_rule: str | float,
    g1_values: Sequence[float],
    g2_values: Sequence[float],
    workers: int,
    version: str,
    seed: int | None = None,
) -> dict:
    return {
        "config": asdict(cfg),
        "cubature_order": cfg.cubature_order,
        "g12_rule": g12_rule,
        "g1_values": [float(g) for g in g1_values],
        "g2_values": [float(g) for g in g2_values],
        "workers": workers,
        "seed": seed,
        "version": version,
    }


def write_sweep_metadata(path: str, meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- discrete variant --------------------------------------------------------


@dataclass(frozen=True)
class DiscreteMaxmin:
    """Exact equal-coefficient maxmin of a discrete game over given grids."""

    value: Fraction
    alpha_star: Fraction
    beta_response: Fraction
    evaluations: int


def fraction_range(start, stop, step) -> list[Fraction]:
    """Inclusive rational grid; pass decimal strings to get exact decimals."""
    start, stop, step = Fraction(start), Fraction(stop), Fraction(step)
    if step <= 0:
        raise InvalidConfigError(f"grid step must be positive, got {step}")
    out = []
    v = start
    while v <= stop:
        out.append(v)
        v += step
    if not out:
        raise InvalidConfigError(f"empty grid {start}:{stop}:{step}")
    return out


def float_range(start: float, stop: float, step: float) -> list[float]:
    """Inclusive float grid start, start+step, ... (tolerant right edge)."""
    if step <= 0:
        raise InvalidConfigError(f"grid step must be positive, got {step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise InvalidConfigError(f"empty grid {start}:{stop}:{step}")
    return [start + i * step for i in range(count)]


def discrete_maxmin(
    game: DiscreteGame,
    alpha_grid: Sequence[Fraction],
    beta_grid: Sequence[Fraction],
) -> DiscreteMaxmin:
    """Exact max over alpha of (min over beta) of A's expected reward.

    Both players are restricted to equal coefficients on their feature sets.
    All comparisons are exact, so grid ties and reward ties are decided
    without rounding; ties in the arg scan keep the smallest coefficient.
    """
    matrix = equal_coefficient_rewards(game, alpha_grid, beta_grid)
    best_val = None
    best_i = 0
    best_j = 0
    for i in range(matrix.shape[0]):
        row = matrix[i, :]
        j_min = 0
        for j in range(1, matrix.shape[1]):
            if row[j] < row[j_min]:
                j_min = j
        if best_val is None or row[j_min] > best_val:
            best_val = row[j_min]
            best_i, best_j = i, j_min
    return DiscreteMaxmin(
        value=best_val,
        alpha_star=Fraction(alpha_grid[best_i]),
        beta_response=Fraction(beta_grid[best_j]),
        evaluations=matrix.shape[0] * matrix.shape[1],
    )
