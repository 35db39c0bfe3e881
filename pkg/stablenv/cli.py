"""
Command line interface: limit-law evaluation, Monte Carlo validation and the acceptance suite.
"""
import argparse
import logging
import sys
from typing import List, Optional

import numpy as np
import pandas as pd

from . import __version__
from .acceptance import AcceptanceContext, CHECKS, results_document, run_checks, suite_passed
from .adapters.output import extrema_frame, path_frame, rows_to_frame, slopes_frame, write_csv, write_json
from .environment import CapExceeded, DEFAULT_STEP, SimConfig, generate_path, reflect
from .extrema import InsufficientPath, find_x_extrema, slope_decomposition
from .fluctuation import (
    HittingParams,
    SlopeKind,
    bias_gamma,
    cdf_b1_grid,
    density_b1_grid,
    drawup_time_lt,
    g_closed,
    g_integral,
    lt_down_excursion,
    lt_down_run,
    lt_undershoot,
    lt_up_excursion,
    lt_up_run,
    slope_height_mean,
    slope_length_lt,
    slope_length_mean,
)
from .inversion import InversionConfig
from .montecarlo import (
    B_LEVEL,
    DEFAULT_N_PATHS,
    DEFAULT_RENEWAL_X_VALUES,
    InsufficientPool,
    McConfig,
    McReport,
    renewal_overshoot_check,
    run_all,
    simulate_paths,
)
from .scale import ScaleContext
from .special import NumericalDomainError, NumericalFailure, mittag_leffler
from .utilities import ConfigurationError, resolve_seed
from .walk import DEFAULT_SITES_PER_SIDE, DEFAULT_WALK_ENVS, DEFAULT_WALK_STEP, DEFAULT_WALK_STEPS, WalkConfig, diffusion_demo

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

CSV = "csv"
JSON = "json"


def _emit_table(frame: pd.DataFrame, args) -> None:
    if args.format == JSON:
        write_json({"rows": frame.to_dict(orient="records")}, args.output)
    else:
        write_csv(frame, args.output)


def _emit_report(report: McReport, args) -> None:
    if args.format == CSV:
        rows = [(name, c.analytic, c.empirical, c.se, c.z) for name, c in sorted(report.comparisons.items())]
        write_csv(rows_to_frame(rows, ("name", "analytic", "empirical", "se", "z")), args.output)
    else:
        write_json(report.to_dict(), args.output)


def _inversion_config(args) -> InversionConfig:
    return InversionConfig(args.stehfest_terms)


def command_ml(args) -> int:
    value = mittag_leffler(args.alpha, args.z, args.order)
    _emit_table(rows_to_frame([(args.alpha, args.z, args.order, value)], ("a", "z", "order", "value")), args)
    return EXIT_OK


def command_density(args) -> int:
    ctx = ScaleContext(args.alpha)
    inv = _inversion_config(args)
    xs = np.linspace(args.x_min, args.x_max, args.points)
    frame = pd.DataFrame({
        "x": xs,
        "density": density_b1_grid(ctx, xs, inv, args.level),
        "cdf": cdf_b1_grid(ctx, xs, inv, args.level),
    })
    _emit_table(frame, args)
    return EXIT_OK


def command_bias(args) -> int:
    alphas = np.linspace(args.alpha_min, args.alpha_max, args.points)
    rows = [(float(a), bias_gamma(float(a)), g_closed(float(a)), g_integral(float(a))) for a in alphas]
    _emit_table(rows_to_frame(rows, ("a", "gamma", "g_closed", "g_integral")), args)
    return EXIT_OK


def command_slope_laws(args) -> int:
    ctx = ScaleContext(args.alpha)
    means = [slope_length_mean(ctx, kind, args.level) for kind in SlopeKind]
    heights = [slope_height_mean(ctx, kind, args.level) for kind in SlopeKind]
    rows = [
        (u, slope_length_lt(ctx, SlopeKind.UPWARD, u, args.level), slope_length_lt(ctx, SlopeKind.DOWNWARD, u, args.level), *means, *heights)
        for u in args.u
    ]
    columns = ("u", "upward_lt", "downward_lt", "upward_mean", "downward_mean", "upward_height_mean", "downward_height_mean")
    _emit_table(rows_to_frame(rows, columns), args)
    return EXIT_OK


def command_transforms(args) -> int:
    ctx = ScaleContext(args.alpha)
    u, v, k = args.u, args.v, args.k
    row = (
        u, v, k,
        lt_down_excursion(ctx, HittingParams(u, v, k)),
        lt_up_run(ctx, u, args.x, k),
        lt_up_excursion(ctx, u, k),
        lt_down_run(ctx, u, k),
        lt_undershoot(ctx, u, k),
        drawup_time_lt(ctx, u, k),
    )
    columns = ("u", "v", "k", "down_excursion", "up_run", "up_excursion", "down_run", "undershoot", "drawup_time")
    _emit_table(rows_to_frame([row], columns), args)
    return EXIT_OK


def _mc_config(args) -> McConfig:
    sim = SimConfig(args.alpha, args.step, resolve_seed(args.seed))
    return McConfig(sim, n_paths=args.paths, threads=args.threads, spectrally_positive=args.spectrally_positive)


def command_simulate(args) -> int:
    cfg = _mc_config(args)
    report, sample = run_all(cfg, _inversion_config(args))
    if args.samples_csv:
        write_csv(pd.DataFrame({"b": sample.b_values}), args.samples_csv)
    if args.dump_path or args.dump_extrema or args.dump_slopes:
        path, _ = generate_path(cfg.sim, cfg.stop_rule, 0)
        if cfg.spectrally_positive:
            path = reflect(path)
        if args.dump_path:
            write_csv(path_frame(path), args.dump_path)
        if args.dump_extrema:
            write_csv(extrema_frame(find_x_extrema(path, B_LEVEL)), args.dump_extrema)
        if args.dump_slopes:
            write_csv(slopes_frame(slope_decomposition(path, B_LEVEL)), args.dump_slopes)
    _emit_report(report, args)
    return EXIT_OK


def command_renewal_check(args) -> int:
    cfg = _mc_config(args)
    report = renewal_overshoot_check(cfg, args.x, simulate_paths(cfg), args.horizon_multiplier)
    _emit_report(report, args)
    return EXIT_OK


def command_walk_demo(args) -> int:
    cfg = WalkConfig(args.alpha, args.walk_step, args.sites, args.steps, args.envs, resolve_seed(args.seed))
    summary = diffusion_demo(cfg)
    if args.format == JSON:
        write_json(
            {
                "config": dict(cfg._asdict()),
                "left_fraction": dict(summary.left_fraction._asdict()),
                "mean_final_position": summary.mean_final_position,
                "cap_hits": summary.cap_hits,
                "b_sign_agreement": dict(summary.b_sign_agreement._asdict()),
                "b_determined": summary.b_determined,
            },
            args.output,
        )
        return EXIT_OK
    trajectory = summary.trajectory
    rows = [
        (env, int(step), int(step) * cfg.h ** 2, float(position))
        for row, step in enumerate(trajectory.checkpoint_steps)
        for env, position in enumerate(trajectory.positions[row])
    ]
    write_csv(rows_to_frame(rows, ("env", "step", "time", "position")), args.output)
    return EXIT_OK


def command_verify(args) -> int:
    context = AcceptanceContext(args.fast, resolve_seed(args.seed), args.threads)
    results = run_checks(context, CHECKS, set(args.only) if args.only else None)
    write_json(results_document(results), args.output)
    return EXIT_OK if suite_passed(results) else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=(CSV, JSON), default=None, help="output format (csv for tables, json for reports)")
    common.add_argument("-o", "--output", default=None, help="output file, stdout if not given")
    common.add_argument("--seed", type=int, default=None, help="root seed; overrides STABLENV_SEED")
    common.add_argument("--threads", type=int, default=1, help="worker processes for path simulation")
    common.add_argument("--stehfest-terms", type=int, default=16, help="Gaver-Stehfest terms (even, 8..20)")
    common.add_argument("--verbose", action="store_true", default=False, help="If given, DEBUG info will be displayed")

    parser = argparse.ArgumentParser(prog="stablenv", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    ml = commands.add_parser("ml", parents=[common], help="Mittag-Leffler function E_a and its derivatives")
    ml.add_argument("--alpha", type=float, required=True)
    ml.add_argument("--z", type=float, required=True)
    ml.add_argument("--order", type=int, choices=(0, 1, 2), default=0)
    ml.set_defaults(handler=command_ml, default_format=CSV)

    density = commands.add_parser("density", parents=[common], help="density and cdf of b_1 on a grid")
    density.add_argument("--alpha", type=float, required=True)
    density.add_argument("--x-min", type=float, default=-5.0)
    density.add_argument("--x-max", type=float, default=5.0)
    density.add_argument("--points", type=int, default=101)
    density.add_argument("--level", type=float, default=1.0, help="level x of b_x = x^a b_1")
    density.set_defaults(handler=command_density, default_format=CSV)

    bias = commands.add_parser("bias", parents=[common], help="gamma(a) = P(b_1 < 0) with both forms of g")
    bias.add_argument("--alpha-min", type=float, default=1.0)
    bias.add_argument("--alpha-max", type=float, default=2.0)
    bias.add_argument("--points", type=int, default=11)
    bias.set_defaults(handler=command_bias, default_format=CSV)

    slope_laws = commands.add_parser("slope-laws", parents=[common], help="slope-length transforms, mean lengths and heights")
    slope_laws.add_argument("--alpha", type=float, required=True)
    slope_laws.add_argument("--u", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    slope_laws.add_argument("--level", type=float, default=1.0)
    slope_laws.set_defaults(handler=command_slope_laws, default_format=CSV)

    transforms = commands.add_parser("transforms", parents=[common], help="drawdown/drawup fluctuation transforms")
    transforms.add_argument("--alpha", type=float, required=True)
    transforms.add_argument("--u", type=float, required=True)
    transforms.add_argument("--v", type=float, default=0.0)
    transforms.add_argument("--k", type=float, default=1.0)
    transforms.add_argument("--x", type=float, default=float("inf"), help="cap on the running maximum overshoot")
    transforms.set_defaults(handler=command_transforms, default_format=CSV)

    for name, handler, help_text in (
        ("simulate", command_simulate, "Monte Carlo estimate of the b_1 law and slope statistics"),
        ("renewal-check", command_renewal_check, "alternating renewal check of the overshoot limit"),
    ):
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("--alpha", type=float, required=True)
        sub.add_argument("--paths", type=int, default=DEFAULT_N_PATHS)
        sub.add_argument("--step", type=float, default=DEFAULT_STEP)
        sub.add_argument("--spectrally-positive", action="store_true", default=False, help="simulate the time-reversed environment")
        sub.set_defaults(handler=handler, default_format=JSON)
        if name == "simulate":
            sub.add_argument("--samples-csv", default=None, help="write the raw b_1 samples here")
            sub.add_argument("--dump-path", default=None, help="write the first environment path here")
            sub.add_argument("--dump-extrema", default=None, help="write the 1-extrema of the first path here")
            sub.add_argument("--dump-slopes", default=None, help="write the slope decomposition of the first path here")
        else:
            sub.add_argument("--x", type=float, nargs="+", default=list(DEFAULT_RENEWAL_X_VALUES))
            sub.add_argument("--horizon-multiplier", type=float, default=50.0)

    walk = commands.add_parser("walk-demo", parents=[common], help="random walk in sampled environments")
    walk.add_argument("--alpha", type=float, required=True)
    walk.add_argument("--steps", type=int, default=DEFAULT_WALK_STEPS)
    walk.add_argument("--envs", type=int, default=DEFAULT_WALK_ENVS)
    walk.add_argument("--sites", type=int, default=DEFAULT_SITES_PER_SIDE, help="sites on each side of the origin")
    walk.add_argument("--walk-step", type=float, default=DEFAULT_WALK_STEP)
    walk.set_defaults(handler=command_walk_demo, default_format=CSV)

    verify = commands.add_parser("verify", parents=[common], help="run the acceptance suite")
    verify.add_argument("--fast", action="store_true", default=False, help="smaller Monte Carlo sizes")
    verify.add_argument("--only", nargs="+", default=None, choices=[check.name for check in CHECKS])
    verify.set_defaults(handler=command_verify, default_format=JSON)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and run the selected command.

    :return: exit code, 0 success, 2 usage, 3 numerical or simulation error, 4 acceptance failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return EXIT_USAGE if error.code else EXIT_OK
    if args.format is None:
        args.format = args.default_format

    logging.basicConfig(format="%(asctime)s [%(levelname)s] %(name)s: %(message)s", level=logging.INFO, stream=sys.stderr)
    if args.verbose:
        logging.getLogger("stablenv").setLevel(logging.DEBUG)

    try:
        return args.handler(args)
    except ConfigurationError as error:
        logger.error(f"{args.command}: invalid configuration: {error}")
        return EXIT_USAGE
    except (NumericalDomainError, NumericalFailure, CapExceeded, InsufficientPath, InsufficientPool) as error:
        logger.error(f"{args.command}: {error.__class__.__name__}: {error}")
        return EXIT_NUMERICAL
    except (ValueError, ArithmeticError) as error:
        logger.error(f"{args.command}: numerical failure: {error.__class__.__name__}: {error}")
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())
