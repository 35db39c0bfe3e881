"""
Monte Carlo validation of the b_1 law, the slope laws and the renewal limit behind them.

Paths are generated on independent substreams keyed by path index, so results do not depend on how the
paths are partitioned across worker processes.
"""
import concurrent.futures as cf
import logging
import math
from collections import namedtuple
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .environment import SimConfig, StopRule, generate_path, reflect
from .extrema import compute_b, slope_decomposition, slopes_near_centre
from .fluctuation import SlopeKind, bias_gamma, cdf_b1_grid, slope_height_mean, slope_length_lt, slope_length_mean
from .inversion import DEFAULT_INVERSION_CONFIG, InversionConfig
from .scale import ScaleContext
from .utilities import ConfigurationError, default_partition_size, flatten, partition, substream

logger = logging.getLogger(__name__)

DEFAULT_N_PATHS = 20_000
MIN_N_PATHS = 100
DEFAULT_TRANSFORM_US = (0.5, 1.0, 2.0)
DEFAULT_RECORDS_PER_SIDE = 3
DEFAULT_KS_POINTS = 200
KS_GRID_MEAN_MULTIPLE = 8.0
DEFAULT_HORIZON_MULTIPLIER = 50.0
DEFAULT_RENEWAL_X_VALUES = (0.0, 0.25, 0.5, 1.0)

# substream key of the renewal resampler, disjoint from the (path, attempt, side) path keys
RENEWAL_STREAM_KEY = (2 ** 31 - 1,)

B_LEVEL = 1.0


class InsufficientPool(ValueError):
    """Exception for a slope-length pool too small to estimate from.
    """

    pass


class McConfig(
    namedtuple("McConfig", ("sim", "n_paths", "transform_us", "ks_grid", "threads", "records_per_side", "spectrally_positive"))
):
    """
    :param sim: path simulation controls
    :param n_paths: number of environment paths, >= 100
    :param transform_us: u values of the slope-length Laplace transform comparisons
    :param ks_grid: points of the Kolmogorov-Smirnov comparison, None for the default grid
    :param threads: worker processes; paths are split into that many contiguous blocks
    :param records_per_side: x-extrema required on each side of the origin
    :param spectrally_positive: simulate the time-reversed (spectrally positive) environment
    """

    __slots__ = ()

    def __new__(
        cls,
        sim: SimConfig,
        n_paths: int = DEFAULT_N_PATHS,
        transform_us: Sequence[float] = DEFAULT_TRANSFORM_US,
        ks_grid: Optional[Sequence[float]] = None,
        threads: int = 1,
        records_per_side: int = DEFAULT_RECORDS_PER_SIDE,
        spectrally_positive: bool = False,
    ):
        if int(n_paths) < MIN_N_PATHS:
            raise ConfigurationError(f"n_paths must be >= {MIN_N_PATHS}, got: {n_paths}")
        if int(threads) < 1:
            raise ConfigurationError(f"threads must be >= 1, got: {threads}")
        if int(records_per_side) < 1:
            raise ConfigurationError(f"records_per_side must be >= 1, got: {records_per_side}")
        if any(u < 0 for u in transform_us):
            raise ConfigurationError(f"transform_us must be >= 0, got: {transform_us}")
        grid = None if ks_grid is None else tuple(float(x) for x in ks_grid)
        return super().__new__(
            cls, sim, int(n_paths), tuple(float(u) for u in transform_us), grid, int(threads), int(records_per_side), bool(spectrally_positive)
        )

    @property
    def stop_rule(self) -> StopRule:
        # a record at the origin moves to the other side under reflection
        extra = 1 if self.spectrally_positive else 0
        return StopRule(B_LEVEL, self.records_per_side + extra)

    def as_dict(self) -> dict:
        return {
            "a": self.sim.a,
            "h": self.sim.h,
            "seed": self.sim.seed,
            "max_side_length": self.sim.max_side_length,
            "n_paths": self.n_paths,
            "transform_us": list(self.transform_us),
            "threads": self.threads,
            "records_per_side": self.records_per_side,
            "spectrally_positive": self.spectrally_positive,
        }


Estimate = namedtuple("Estimate", ("value", "se", "n"))


class Comparison(namedtuple("Comparison", ("analytic", "empirical", "se", "z"))):
    __slots__ = ()

    @classmethod
    def build(cls, analytic: float, estimate: Estimate) -> "Comparison":
        difference = estimate.value - analytic
        if estimate.se > 0:
            z = difference / estimate.se
        else:
            z = 0.0 if difference == 0 else math.copysign(math.inf, difference)
        return cls(float(analytic), float(estimate.value), float(estimate.se), float(z))

    def within(self, n_se: float = 3.0, allowance: float = 0.0) -> bool:
        """|empirical - analytic| <= n_se standard errors plus an absolute allowance."""
        return abs(self.empirical - self.analytic) <= n_se * self.se + allowance


class McReport(namedtuple("McReport", ("config", "estimates", "comparisons", "ks_statistic", "cap_retry_count", "partition", "flags"))):
    __slots__ = ()

    def to_dict(self) -> dict:
        return {
            "config": dict(self.config),
            "estimates": {name: dict(e._asdict()) for name, e in sorted(self.estimates.items())},
            "comparisons": {name: dict(c._asdict()) for name, c in sorted(self.comparisons.items())},
            "ks": self.ks_statistic,
            "retries": self.cap_retry_count,
            "partition": dict(self.partition),
            "flags": dict(self.flags),
        }

    def merge(self, other: "McReport") -> "McReport":
        """Combine reports built from the same simulation."""
        ks = self.ks_statistic if self.ks_statistic is not None else other.ks_statistic
        return McReport(
            self.config,
            {**self.estimates, **other.estimates},
            {**self.comparisons, **other.comparisons},
            ks,
            max(self.cap_retry_count, other.cap_retry_count),
            self.partition,
            {**self.flags, **other.flags},
        )


PathSummary = namedtuple("PathSummary", ("b", "slopes", "retries"))

SimulationSample = namedtuple(
    "SimulationSample",
    ("b_values", "up_lengths", "down_lengths", "up_heights", "down_heights", "cap_retry_count", "partition"),
)


def _summarise_path(cfg: McConfig, path_index: int) -> PathSummary:
    path, retries = generate_path(cfg.sim, cfg.stop_rule, path_index)
    if cfg.spectrally_positive:
        path = reflect(path)
    b = compute_b(path, B_LEVEL)
    slopes = slopes_near_centre(slope_decomposition(path, B_LEVEL), cfg.records_per_side - 1)
    return PathSummary(b, tuple((slope.kind.value, slope.length, slope.height) for slope in slopes), retries)


def _simulate_block(args: Tuple[McConfig, int, int]) -> List[PathSummary]:
    cfg, start, stop = args
    return [_summarise_path(cfg, index) for index in range(start, stop)]


def simulate_paths(cfg: McConfig) -> SimulationSample:
    """
    Simulate cfg.n_paths environments and collect b_1 together with the slopes near the central slope.

    Blocks run in a process pool when cfg.threads > 1 and are merged back in path order.
    """
    block_size = default_partition_size(cfg.n_paths, cfg.threads)
    blocks = partition(cfg.n_paths, block_size)
    logger.info(f"simulating {cfg.n_paths} paths a={cfg.sim.a} h={cfg.sim.h} in {len(blocks)} block(s)")
    jobs = [(cfg, start, stop) for start, stop in blocks]
    if cfg.threads == 1:
        results = [_simulate_block(job) for job in jobs]
    else:
        with cf.ProcessPoolExecutor(max_workers=cfg.threads) as executor:
            results = list(executor.map(_simulate_block, jobs))
    summaries = flatten(results)

    pools = {SlopeKind.UPWARD.value: ([], []), SlopeKind.DOWNWARD.value: ([], [])}
    for summary in summaries:
        for kind, length, height in summary.slopes:
            pools[kind][0].append(length)
            pools[kind][1].append(height)
    up_lengths, up_heights = pools[SlopeKind.UPWARD.value]
    down_lengths, down_heights = pools[SlopeKind.DOWNWARD.value]
    retries = sum(summary.retries for summary in summaries)
    if retries:
        logger.info(f"{retries} cap retries over {cfg.n_paths} paths")
    return SimulationSample(
        np.array([summary.b for summary in summaries]),
        np.array(up_lengths),
        np.array(down_lengths),
        np.array(up_heights),
        np.array(down_heights),
        retries,
        {"workers": cfg.threads, "block_size": block_size, "blocks": len(blocks)},
    )


def proportion(mask: np.ndarray) -> Estimate:
    """Binomial proportion; the standard error falls back to p = 1/2n at 0 and 1."""
    n = len(mask)
    p = float(np.mean(mask))
    p_se = min(max(p, 0.5 / n), 1.0 - 0.5 / n)
    return Estimate(p, math.sqrt(p_se * (1.0 - p_se) / n), n)


def sample_mean(values: np.ndarray) -> Estimate:
    n = len(values)
    if n < 2:
        raise InsufficientPool(f"need at least 2 samples for a mean estimate, got: {n}")
    return Estimate(float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(n)), n)


def empirical_cdf(samples: np.ndarray, grid: Iterable[float]) -> np.ndarray:
    ordered = np.sort(samples)
    return np.searchsorted(ordered, np.asarray(list(grid), dtype=float), side="right") / len(ordered)


def default_ks_grid(ctx: ScaleContext, inv: InversionConfig = DEFAULT_INVERSION_CONFIG, points: int = DEFAULT_KS_POINTS) -> np.ndarray:
    low = min(KS_GRID_MEAN_MULTIPLE * slope_length_mean(ctx, SlopeKind.UPWARD), inv.t_max)
    high = min(KS_GRID_MEAN_MULTIPLE * slope_length_mean(ctx, SlopeKind.DOWNWARD), inv.t_max)
    return np.linspace(-low, high, points)


def analytic_b_cdf(ctx: ScaleContext, grid: np.ndarray, mirrored: bool, inv: InversionConfig = DEFAULT_INVERSION_CONFIG) -> np.ndarray:
    """cdf of b_1, or of -b_1 for the mirrored environment (continuous law, so F(x-) = F(x))."""
    if mirrored:
        return 1.0 - cdf_b1_grid(ctx, -grid, inv)
    return cdf_b1_grid(ctx, grid, inv)


def _laws(cfg: McConfig) -> Tuple[SlopeKind, SlopeKind]:
    """Analytic slope laws matching the empirical (upward, downward) pools."""
    if cfg.spectrally_positive:
        return SlopeKind.DOWNWARD, SlopeKind.UPWARD
    return SlopeKind.UPWARD, SlopeKind.DOWNWARD


def estimate_b1_law(cfg: McConfig, sample: Optional[SimulationSample] = None, inv: InversionConfig = DEFAULT_INVERSION_CONFIG) -> McReport:
    """Empirical P(b_1 < 0) against gamma(a) and the Kolmogorov-Smirnov distance to the analytic cdf."""
    sample = simulate_paths(cfg) if sample is None else sample
    ctx = ScaleContext(cfg.sim.a)
    negative = proportion(sample.b_values < 0)
    gamma = bias_gamma(ctx.a)
    analytic_negative = 1.0 - gamma if cfg.spectrally_positive else gamma

    grid = np.asarray(cfg.ks_grid) if cfg.ks_grid is not None else default_ks_grid(ctx, inv)
    distance = float(np.max(np.abs(empirical_cdf(sample.b_values, grid) - analytic_b_cdf(ctx, grid, cfg.spectrally_positive, inv))))
    logger.info(f"P(b_1 < 0) = {negative.value:.4f} +- {negative.se:.4f} (analytic {analytic_negative:.6f}), KS = {distance:.4f}")

    estimates = {
        "b1_negative_fraction": negative,
        "b1_mean": sample_mean(sample.b_values),
    }
    comparisons = {"b1_negative_fraction": Comparison.build(analytic_negative, negative)}
    return McReport(cfg.as_dict(), estimates, comparisons, distance, sample.cap_retry_count, sample.partition,
                    {"ks_grid_points": len(grid)})


def estimate_slope_stats(cfg: McConfig, sample: Optional[SimulationSample] = None) -> McReport:
    """Pooled non-central slope lengths and heights by kind against their analytic means and transforms."""
    sample = simulate_paths(cfg) if sample is None else sample
    ctx = ScaleContext(cfg.sim.a)
    up_law, down_law = _laws(cfg)
    estimates = {}
    comparisons = {}
    pools = (
        ("up", up_law, sample.up_lengths, sample.up_heights),
        ("down", down_law, sample.down_lengths, sample.down_heights),
    )
    for name, law, lengths, heights in pools:
        if len(lengths) < 2:
            raise InsufficientPool(f"{name} slope pool holds {len(lengths)} lengths")
        mean_length = sample_mean(lengths)
        estimates[f"{name}_length_mean"] = mean_length
        comparisons[f"{name}_length_mean"] = Comparison.build(slope_length_mean(ctx, law, B_LEVEL), mean_length)
        mean_height = sample_mean(heights)
        estimates[f"{name}_height_mean"] = mean_height
        comparisons[f"{name}_height_mean"] = Comparison.build(slope_height_mean(ctx, law, B_LEVEL), mean_height)
        for u in cfg.transform_us:
            empirical = sample_mean(np.exp(-u * lengths))
            key = f"{name}_length_lt_u{u:g}"
            estimates[key] = empirical
            comparisons[key] = Comparison.build(slope_length_lt(ctx, law, u, B_LEVEL), empirical)
        logger.info(f"{name} slopes: n={mean_length.n} mean length {mean_length.value:.4f} +- {mean_length.se:.4f}")
    return McReport(cfg.as_dict(), estimates, comparisons, None, sample.cap_retry_count, sample.partition, {})


def renewal_overshoot_check(
    cfg: McConfig,
    x_values: Sequence[float] = DEFAULT_RENEWAL_X_VALUES,
    sample: Optional[SimulationSample] = None,
    horizon_multiplier: float = DEFAULT_HORIZON_MULTIPLIER,
    n_replicates: Optional[int] = None,
) -> McReport:
    """
    Alternating renewal sequence resampled from the slope pools: up, down, up, ... from time 0.

    At horizon t, N(t) odd means t falls in a downward length, and B_t is its residual part. The estimate of
    P(N(t) odd, B_t > x) is compared with E(xi_d - x)^+ / (m_u + m_d) computed on the same pools.
    """
    sample = simulate_paths(cfg) if sample is None else sample
    up, down = sample.up_lengths, sample.down_lengths
    if len(up) < 2 or len(down) < 2:
        raise InsufficientPool(f"renewal check needs >= 2 lengths of each kind, got: up={len(up)}, down={len(down)}")
    n_replicates = cfg.n_paths if n_replicates is None else int(n_replicates)
    mean_up, mean_down = float(np.mean(up)), float(np.mean(down))
    cycle = mean_up + mean_down
    horizon = horizon_multiplier * cycle
    rng = substream(cfg.sim.seed, *RENEWAL_STREAM_KEY)

    in_down = np.zeros(n_replicates, dtype=bool)
    residual = np.zeros(n_replicates)
    clock = np.zeros(n_replicates)
    active = np.arange(n_replicates)
    while active.size:
        up_end = clock[active] + rng.choice(up, size=active.size)
        down_end = up_end + rng.choice(down, size=active.size)
        stopped_up = up_end > horizon
        stopped_down = ~stopped_up & (down_end > horizon)
        in_down[active[stopped_down]] = True
        residual[active[stopped_down]] = down_end[stopped_down] - horizon
        clock[active] = down_end
        active = active[~(stopped_up | stopped_down)]

    ctx = ScaleContext(cfg.sim.a)
    _, down_law = _laws(cfg)
    analytic_x0 = slope_length_mean(ctx, down_law) / (slope_length_mean(ctx, SlopeKind.UPWARD) + slope_length_mean(ctx, SlopeKind.DOWNWARD))
    estimates = {}
    comparisons = {}
    for x in x_values:
        estimate = proportion(in_down & (residual > x))
        key = f"renewal_odd_overshoot_x{x:g}"
        estimates[key] = estimate
        comparisons[key] = Comparison.build(float(np.mean(np.maximum(down - x, 0.0))) / cycle, estimate)
    at_zero = proportion(in_down & (residual > 0.0))
    comparisons["renewal_odd_fraction_vs_bias"] = Comparison.build(analytic_x0, at_zero)
    logger.info(f"renewal check: horizon {horizon:.3f}, P(N odd) = {at_zero.value:.4f} (analytic {analytic_x0:.6f})")
    return McReport(cfg.as_dict(), estimates, comparisons, None, sample.cap_retry_count, sample.partition,
                    {"renewal_horizon_multiplier": horizon_multiplier, "renewal_replicates": n_replicates})


def run_all(cfg: McConfig, inv: InversionConfig = DEFAULT_INVERSION_CONFIG, renewal_x_values: Optional[Sequence[float]] = None) -> Tuple[McReport, SimulationSample]:
    """b_1 law, slope statistics and (optionally) the renewal check from a single simulation."""
    sample = simulate_paths(cfg)
    report = estimate_b1_law(cfg, sample, inv).merge(estimate_slope_stats(cfg, sample))
    if renewal_x_values is not None:
        report = report.merge(renewal_overshoot_check(cfg, renewal_x_values, sample))
    return report, sample
