"""Command-line front end.

Commands::

    reward    normalized reward of A for one regime/strategy (cubature)
    mc        Monte Carlo estimate of the same quantity
    maxmin    guaranteed reward of A over block-constant strategies
    sweep     maxmin over a (g1, g2) grid; CSV + metadata, optional figure
    example   the exact four-feature Bernoulli game
    hermite   dump the Gauss-Hermite rule as CSV

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
Flag values may also come from a flat ``key=value`` file via ``--config``;
explicit command-line flags win.  ``RIVALFIT_SEED`` supplies the seed when
``--seed`` is absent.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .cubature import hermite_rule
from .discrete import enumerate_discrete, equal_coefficient_rewards, example_game
from .errors import (
    CapacityError,
    InvalidConfigError,
    NotPositiveSemidefiniteError,
    NumericalFailureError,
    RivalfitError,
)
from .model import FeatureRegime, SymmetricStrategyPair
from .reward import DEFAULT_MC_FEATURES, DEFAULT_ORDER, mc_reward, reward_symmetric
from .solver import (
    SearchConfig,
    discrete_maxmin,
    float_range,
    fraction_range,
    maxmin,
    regime_sweep,
    sweep_metadata,
    sweep_to_csv,
    write_sweep_metadata,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _parse_quad(text: str, flag: str) -> SymmetricStrategyPair:
    parts = text.split(",")
    if len(parts) != 4:
        raise InvalidConfigError(f"{flag} needs four comma-separated values, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise InvalidConfigError(f"{flag} has a non-numeric entry: {text!r}") from exc
    return SymmetricStrategyPair(*vals)


def _parse_box(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise InvalidConfigError(f"{flag} must look like lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise InvalidConfigError(f"{flag} has a non-numeric bound: {text!r}") from exc
    return lo, hi


def _parse_float_grid(text: str, flag: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidConfigError(f"{flag} must look like start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise InvalidConfigError(f"{flag} has a non-numeric part: {text!r}") from exc
    return float_range(start, stop, step)


def _parse_fraction_grid(text: str, flag: str) -> list[Fraction]:
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidConfigError(f"{flag} must look like start:stop:step, got {text!r}")
    try:
        return fraction_range(parts[0], parts[1], parts[2])
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidConfigError(f"{flag} has a non-numeric part: {text!r}") from exc


def _parse_coeffs(text: str, count: int, flag: str) -> list[Fraction]:
    parts = text.split(",")
    try:
        vals = [Fraction(p) for p in parts]
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidConfigError(f"{flag} has a non-numeric entry: {text!r}") from exc
    if len(vals) == 1:
        return vals * count
    if len(vals) != count:
        raise InvalidConfigError(f"{flag} needs 1 or {count} values, got {len(vals)}")
    return vals


def _digits(args: argparse.Namespace) -> int:
    return 17 if args.full_precision else 10


def _round_sig(value: float, digits: int) -> float:
    if not math.isfinite(value):
        return value
    return float(format(value, f".{digits}g"))


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, args: argparse.Namespace) -> None:
    digits = _digits(args)

    def walk(obj):
        if isinstance(obj, float):
            return _round_sig(obj, digits)
        if isinstance(obj, dict):
            return {k: walk(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [walk(v) for v in obj]
        return obj

    _emit(json.dumps(walk(payload), indent=2) + "\n", args.out)


def _fraction_json(value: Fraction):
    return int(value) if value.denominator == 1 else float(value)


def _resolve_seed(args: argparse.Namespace) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("RIVALFIT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InvalidConfigError(f"RIVALFIT_SEED must be an integer, got {env!r}") from exc
    return 0


def _regime_from_args(args: argparse.Namespace) -> FeatureRegime:
    for flag in ("g1", "g2", "g12"):
        if getattr(args, flag) is None:
            raise InvalidConfigError(f"--{flag} is required")
    return FeatureRegime(args.g1, args.g2, args.g12)


def _search_config(args: argparse.Namespace) -> SearchConfig:
    return SearchConfig(
        box=_parse_box(args.box, "--box"),
        coarse_points=args.coarse,
        refine_rounds=args.refine,
        refine_shrink=args.shrink,
        cubature_order=args.order,
    )


# --- command handlers ---------------------------------------------------------


def _cmd_reward(args: argparse.Namespace) -> int:
    regime = _regime_from_args(args)
    if args.a is None:
        raise InvalidConfigError("--a is required (four comma-separated coefficients)")
    strat = _parse_quad(args.a, "--a")
    which = {1: "r1", 2: "r2"}[args.player]
    est = reward_symmetric(regime, strat, m=args.order, which=which)
    scale = 1.0
    if args.absolute:
        if args.n is None:
            raise InvalidConfigError("--absolute needs --n to set the feature count")
        scale = math.sqrt(args.n)
    _emit_json(
        {
            "value": est.value * scale,
            "method": est.method,
            "order": est.order_or_samples,
            "error_bound": est.error_bound * scale,
            "scale_applied": scale,
            "player": args.player,
            "g1": regime.g1,
            "g2": regime.g2,
            "g12": regime.g12,
            "a": list(strat.as_tuple()),
        },
        args,
    )
    return EXIT_OK


def _cmd_mc(args: argparse.Namespace) -> int:
    regime = _regime_from_args(args)
    if args.a is None:
        raise InvalidConfigError("--a is required (four comma-separated coefficients)")
    strat = _parse_quad(args.a, "--a")
    which = {1: "r1", 2: "r2", 0: "none"}[args.player]
    seed = _resolve_seed(args)
    est = mc_reward(
        regime,
        strat,
        samples=args.samples,
        seed=seed,
        which=which,
        workers=args.parallel,
        n_features=args.n,
        absolute=args.absolute,
    )
    _emit_json(
        {
            "value": est.value,
            "method": est.method,
            "samples": est.order_or_samples,
            "error_bound": est.error_bound,
            "scale_applied": est.scale_applied,
            "seed": est.seed,
            "workers": args.parallel,
            "n": args.n,
            "player": args.player,
        },
        args,
    )
    return EXIT_OK


def _cmd_maxmin(args: argparse.Namespace) -> int:
    regime = _regime_from_args(args)
    sol = maxmin(regime, _search_config(args))
    _emit_json(
        {
            "u_star": sol.u_star,
            "a1_star": list(sol.a1_star),
            "a2_response": list(sol.a2_response),
            "u_theoretical": sol.u_theoretical,
            "gain": sol.gain,
            "diagnostics": sol.diagnostics,
        },
        args,
    )
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    if args.g1 is None or args.g2 is None:
        raise InvalidConfigError("--g1 and --g2 grids are required (start:stop:step)")
    g1_values = _parse_float_grid(args.g1, "--g1")
    g2_values = _parse_float_grid(args.g2, "--g2")
    if args.g12 is None:
        raise InvalidConfigError("--g12 is required ('product' or a number)")
    rule: str | float
    if args.g12 == "product":
        rule = "product"
    else:
        try:
            rule = float(args.g12)
        except ValueError as exc:
            raise InvalidConfigError(f"--g12 must be 'product' or a number, got {args.g12!r}") from exc
    cfg = _search_config(args)
    rows = regime_sweep(g1_values, g2_values, rule, cfg, workers=args.parallel)

    import io

    buf = io.StringIO()
    sweep_to_csv(rows, buf, digits=_digits(args))
    _emit(buf.getvalue(), args.out)
    if args.out:
        meta = sweep_metadata(cfg, rule, g1_values, g2_values, args.parallel, __version__)
        write_sweep_metadata(args.out + ".meta.json", meta)
    plot_path = _plot_target(args)
    if plot_path:
        from .plots import save_sweep_figure

        save_sweep_figure(rows, plot_path)
    return EXIT_OK


def _plot_target(args: argparse.Namespace) -> str | None:
    if args.plot is None:
        return None
    if args.plot != "auto":
        return args.plot
    if not args.out:
        raise InvalidConfigError("--plot without a path needs --out to derive the figure name")
    stem = args.out[:-4] if args.out.endswith(".csv") else args.out
    return stem + ".png"


def _cmd_example(args: argparse.Namespace) -> int:
    alphas = _parse_coeffs(args.alpha, 2, "--alpha")
    betas = _parse_coeffs(args.beta, 3, "--beta")
    game = example_game(alphas, betas)

    if args.maxmin:
        if args.grid is None:
            raise InvalidConfigError("--maxmin needs --grid start:stop:step")
        grid = _parse_fraction_grid(args.grid, "--grid")
        sol = discrete_maxmin(game, grid, grid)
        _emit_json(
            {
                "maxmin": _fraction_json(sol.value),
                "alpha_star": _fraction_json(sol.alpha_star),
                "beta_response": _fraction_json(sol.beta_response),
                "evaluations": sol.evaluations,
                "grid": args.grid,
            },
            args,
        )
        return EXIT_OK

    if args.surface:
        if args.grid is None:
            raise InvalidConfigError("--surface needs --grid start:stop:step")
        grid = _parse_fraction_grid(args.grid, "--grid")
        matrix = equal_coefficient_rewards(game, grid, grid)
        digits = _digits(args)
        lines = ["alpha,beta,r1"]
        for i, a in enumerate(grid):
            for j, b in enumerate(grid):
                lines.append(
                    f"{format(float(a), f'.{digits}g')},{format(float(b), f'.{digits}g')},"
                    f"{format(float(matrix[i, j]), f'.{digits}g')}"
                )
        _emit("\n".join(lines) + "\n", args.out)
        plot_path = _plot_target(args)
        if plot_path:
            from .plots import save_example_figure

            save_example_figure(
                [float(v) for v in grid],
                [float(v) for v in grid],
                np.array([[float(matrix[i, j]) for j in range(len(grid))] for i in range(len(grid))]),
                plot_path,
            )
        return EXIT_OK

    enum = enumerate_discrete(game)
    if args.table:
        with open(args.table, "w", encoding="utf-8", newline="") as fh:
            enum.to_csv(fh)
    _emit_json(
        {
            "r1": _fraction_json(enum.r1),
            "r2": _fraction_json(enum.r2),
            "total": _fraction_json(enum.total),
            "alpha": [_fraction_json(a) for a in alphas],
            "beta": [_fraction_json(b) for b in betas],
        },
        args,
    )
    return EXIT_OK


def _cmd_hermite(args: argparse.Namespace) -> int:
    rule = hermite_rule(args.order)
    lines = ["index,node,weight"]
    for i, (node, weight) in enumerate(zip(rule.nodes, rule.weights)):
        lines.append(f"{i},{format(node, '.17g')},{format(weight, '.17g')}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="write the artifact to this path instead of stdout")
    parser.add_argument("--config", help="flat key=value file with flag defaults")
    parser.add_argument(
        "--full-precision", action="store_true", help="emit 17 significant digits instead of 10"
    )


def _add_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--box", type=str, default="-2:5", help="coefficient search box lo:hi (default -2:5)")
    parser.add_argument("--coarse", type=int, default=29, help="grid points per axis (default 29)")
    parser.add_argument("--refine", type=int, default=3, help="refinement rounds (default 3)")
    parser.add_argument("--shrink", type=float, default=0.25, help="box shrink factor per round (default 0.25)")
    parser.add_argument("--order", type=int, default=DEFAULT_ORDER, help="cubature order (default 60)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rivalfit",
        description="Rewards and maxmin strategies for competing linear prediction models.",
    )
    parser.add_argument("--version", action="version", version=f"rivalfit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reward", help="cubature reward for one regime and strategy pair")
    p.add_argument("--g1", type=float, help="A's knowledge fraction")
    p.add_argument("--g2", type=float, help="B's knowledge fraction")
    p.add_argument("--g12", type=float, help="shared knowledge fraction")
    p.add_argument("--a", type=str, help="coefficients a11,a12,a21,a22")
    p.add_argument("--order", type=int, default=DEFAULT_ORDER, help="cubature order (default 60)")
    p.add_argument("--player", type=int, choices=(1, 2), default=1, help="whose reward (default 1)")
    p.add_argument("--absolute", action="store_true", help="scale by sqrt(n) (needs --n)")
    p.add_argument("--n", type=int, help="feature count for absolute scaling")
    _add_common(p)
    p.set_defaults(handler=_cmd_reward)

    p = sub.add_parser("mc", help="Monte Carlo reward estimate")
    p.add_argument("--g1", type=float, help="A's knowledge fraction")
    p.add_argument("--g2", type=float, help="B's knowledge fraction")
    p.add_argument("--g12", type=float, help="shared knowledge fraction")
    p.add_argument("--a", type=str, help="coefficients a11,a12,a21,a22")
    p.add_argument("--samples", type=int, default=1_000_000, help="number of draws (default 1000000)")
    p.add_argument("--seed", type=int, help="RNG seed (default: RIVALFIT_SEED or 0)")
    p.add_argument("--n", type=int, default=DEFAULT_MC_FEATURES,
                   help="features used to realize the regime (default 10000)")
    p.add_argument("--parallel", type=int, default=1, help="worker streams (default 1)")
    p.add_argument("--player", type=int, choices=(0, 1, 2), default=1,
                   help="1 or 2 for a player, 0 for the total E|y| (default 1)")
    p.add_argument("--absolute", action="store_true", help="scale by sqrt(n)")
    _add_common(p)
    p.set_defaults(handler=_cmd_mc)

    p = sub.add_parser("maxmin", help="guaranteed reward over block-constant strategies")
    p.add_argument("--g1", type=float, help="A's knowledge fraction")
    p.add_argument("--g2", type=float, help="B's knowledge fraction")
    p.add_argument("--g12", type=float, help="shared knowledge fraction")
    _add_search_flags(p)
    _add_common(p)
    p.set_defaults(handler=_cmd_maxmin)

    p = sub.add_parser("sweep", help="maxmin over a (g1, g2) grid; emits CSV (+ metadata)")
    p.add_argument("--g1", type=str, help="grid start:stop:step")
    p.add_argument("--g2", type=str, help="grid start:stop:step")
    p.add_argument("--g12", type=str, help="'product' for g1*g2, or a fixed value")
    _add_search_flags(p)
    p.add_argument("--parallel", type=int, default=1, help="cells solved in parallel (default 1)")
    p.add_argument("--plot", nargs="?", const="auto",
                   help="also render the heatmap figure (default name: <out>.png)")
    _add_common(p)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("example", help="exact four-feature Bernoulli game")
    p.add_argument("--alpha", type=str, default="1", help="A's coefficient(s): one value or a1,a2")
    p.add_argument("--beta", type=str, default="1", help="B's coefficient(s): one value or b1,b2,b3")
    p.add_argument("--table", help="write the per-outcome table (pattern,e1,e2,y,r1) to this CSV")
    p.add_argument("--maxmin", action="store_true", help="equal-coefficient maxmin over --grid")
    p.add_argument("--surface", action="store_true", help="emit the reward surface over --grid as CSV")
    p.add_argument("--grid", type=str, help="grid start:stop:step (exact decimals)")
    p.add_argument("--plot", nargs="?", const="auto", help="render the surface figure (with --surface)")
    _add_common(p)
    p.set_defaults(handler=_cmd_example)

    p = sub.add_parser("hermite", help="print Gauss-Hermite nodes/weights as CSV")
    p.add_argument("--order", type=int, required=True, help="rule order m")
    _add_common(p)
    p.set_defaults(handler=_cmd_hermite)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Prepend config-file values as defaults; explicit flags still win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise InvalidConfigError("--config needs a file path")
    path = argv[idx + 1]
    try:
        with open(path, "r", encoding="utf-8") as fh:
            pairs = []
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InvalidConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
                key, value = line.split("=", 1)
                pairs.append((key.strip(), value.strip()))
    except OSError as exc:
        raise InvalidConfigError(f"cannot read --config file {path}: {exc}") from exc
    explicit = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    injected: list[str] = []
    for key, value in pairs:
        flag = f"--{key}"
        if flag in explicit:
            continue
        if flag in _SWITCH_FLAGS and value.lower() in ("true", "yes", "on", "1"):
            injected.append(flag)
        else:
            injected.extend([flag, value])
    # insert after the subcommand token so subparser flags resolve
    for i, token in enumerate(argv):
        if not token.startswith("-"):
            return argv[: i + 1] + injected + argv[i + 1 :]
    return argv + injected


_SWITCH_FLAGS = {"--absolute", "--maxmin", "--surface", "--full-precision"}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.handler(args)
    except (NotPositiveSemidefiniteError, NumericalFailureError, CapacityError) as exc:
        print(f"rivalfit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RivalfitError as exc:
        print(f"rivalfit: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
