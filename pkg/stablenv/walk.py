"""
Nearest-neighbour random walk in a sampled environment.

From site i the walker steps right with probability p_i and left with q_i = 1 - p_i, where
q_i / p_i = exp(w((i+1) h) - w(i h)). The chain's scale function then telescopes to exp(w), the discrete
counterpart of the diffusion with generator (1/2) e^w d/dx (e^-w d/dx). Each step lasts h^2.
"""
import logging
import warnings
from collections import namedtuple
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import expit

from .environment import EnvironmentPath, SimConfig, StopRule, generate_two_sided
from .extrema import InsufficientPath, compute_b
from .montecarlo import Estimate, proportion
from .utilities import DEFAULT_SEED, ConfigurationError, substream

logger = logging.getLogger(__name__)

DEFAULT_WALK_STEP = 0.1
DEFAULT_SITES_PER_SIDE = 2000
DEFAULT_WALK_STEPS = 10 ** 6
DEFAULT_WALK_ENVS = 500
UNIFORM_BLOCK_SIZE = 4096

# substream key prefix of the walkers, disjoint from the environment path keys
WALK_STREAM_TAG = 2 ** 31 - 2


class RwreChain(namedtuple("RwreChain", ("h", "p_right", "p_left", "origin_index"))):
    """
    :param h: site spacing
    :param p_right: probability of a right step at each site
    :param p_left: probability of a left step at each site, kept separately from 1 - p_right
    :param origin_index: site of the origin
    """

    __slots__ = ()

    @property
    def step_time(self) -> float:
        return self.h * self.h

    @property
    def n_sites(self) -> int:
        return len(self.p_right)

    def odds_ratios(self) -> np.ndarray:
        return self.p_left[:-1] / self.p_right[:-1]

    def cumulative_odds(self) -> np.ndarray:
        """prod_{i<k} q_i/p_i for k = 1 .. n_sites - 1, which equals exp(w(k h) - w(0))."""
        return np.cumprod(self.odds_ratios())


def build_chain(path: EnvironmentPath) -> RwreChain:
    """
    Chain on the grid of path; the last site only steps left.
    """
    increments = np.diff(path.values())
    p_right = np.append(expit(-increments), 0.0)
    p_left = np.append(expit(increments), 1.0)
    return RwreChain(path.h, p_right, p_left, path.origin_index)


WalkTrajectory = namedtuple("WalkTrajectory", ("checkpoint_steps", "positions", "cap_hits", "occupation"))


def dyadic_checkpoints(n_steps: int) -> List[int]:
    checkpoints = []
    step = 1
    while step < n_steps:
        checkpoints.append(step)
        step *= 2
    checkpoints.append(n_steps)
    return checkpoints


def run_walks(chains: Sequence[RwreChain], n_steps: int, rngs: Sequence[np.random.Generator],
              track_occupation: bool = False) -> WalkTrajectory:
    """
    One walker per chain, all advanced together; walker i draws its uniforms from rngs[i] in blocks.

    Reflecting caps: a walker leaving the first or last site is sent back inside and the event counted.

    :return: positions (in units of h, relative to the origin) at dyadic checkpoints, one row per checkpoint
    """
    if len(chains) != len(rngs):
        raise ValueError(f"need one generator per chain, got: {len(chains)} chains, {len(rngs)} generators")
    n_walkers = len(chains)
    width = max(chain.n_sites for chain in chains)
    p_right = np.full((n_walkers, width), 0.5)
    for row, chain in enumerate(chains):
        p_right[row, : chain.n_sites] = chain.p_right
    last_site = np.array([chain.n_sites - 1 for chain in chains])
    origin = np.array([chain.origin_index for chain in chains])
    h = np.array([chain.h for chain in chains])

    rows = np.arange(n_walkers)
    site = origin.copy()
    cap_hits = np.zeros(n_walkers, dtype=int)
    occupation = np.zeros((n_walkers, width), dtype=np.int64) if track_occupation else None
    checkpoints = dyadic_checkpoints(n_steps)
    recorded = []
    next_checkpoint = 0
    uniforms = np.empty((n_walkers, 0))
    for step in range(1, n_steps + 1):
        column = (step - 1) % UNIFORM_BLOCK_SIZE
        if column == 0:
            size = min(UNIFORM_BLOCK_SIZE, n_steps - step + 1)
            uniforms = np.stack([rng.random(size) for rng in rngs])
        moves = np.where(uniforms[:, column] < p_right[rows, site], 1, -1)
        site = site + moves
        below = site < 0
        above = site > last_site
        if below.any() or above.any():
            cap_hits += below | above
            site = np.where(below, 1, np.where(above, last_site - 1, site))
        if occupation is not None:
            occupation[rows, site] += 1
        if step == checkpoints[next_checkpoint]:
            recorded.append((site - origin) * h)
            next_checkpoint += 1
    total_caps = int(cap_hits.sum())
    if total_caps:
        warnings.warn(f"{total_caps} reflections at the chain ends over {n_walkers} walkers")
    return WalkTrajectory(np.array(checkpoints), np.array(recorded), cap_hits, occupation)


def run_walk(chain: RwreChain, n_steps: int, rng: np.random.Generator, track_occupation: bool = False) -> WalkTrajectory:
    return run_walks([chain], n_steps, [rng], track_occupation)


class WalkConfig(namedtuple("WalkConfig", ("a", "h", "sites_per_side", "n_steps", "n_envs", "seed"))):
    """
    :param a: stability index of the environment
    :param h: site spacing
    :param sites_per_side: sites on each side of the origin
    :param n_steps: walk steps per environment
    :param n_envs: number of environments, one walker each
    :param seed: root seed
    """

    __slots__ = ()

    def __new__(cls, a: float, h: float = DEFAULT_WALK_STEP, sites_per_side: int = DEFAULT_SITES_PER_SIDE,
                n_steps: int = DEFAULT_WALK_STEPS, n_envs: int = DEFAULT_WALK_ENVS, seed: int = DEFAULT_SEED):
        if int(sites_per_side) < 2 or int(n_steps) < 1 or int(n_envs) < 1:
            raise ConfigurationError(f"expected sites_per_side >= 2, n_steps >= 1, n_envs >= 1, got: {sites_per_side}, {n_steps}, {n_envs}")
        return super().__new__(cls, float(a), float(h), int(sites_per_side), int(n_steps), int(n_envs), int(seed))


DemoSummary = namedtuple(
    "DemoSummary",
    ("left_fraction", "mean_final_position", "cap_hits", "b_sign_agreement", "b_determined", "trajectory"),
)


def diffusion_demo(cfg: WalkConfig, b_level: Optional[float] = None) -> DemoSummary:
    """
    One walker in each of cfg.n_envs environments, started at the origin.

    The fraction of walkers ending left of the origin is the leftward bias. Where b at level b_level
    (default log n_steps) is determined on the finite environment, its sign is compared with the walker's.
    """
    sim = SimConfig(cfg.a, cfg.h, cfg.seed)
    fixed_length = StopRule(0.0, 1, cfg.sites_per_side)
    paths = [generate_two_sided(sim, fixed_length, path_index=i) for i in range(cfg.n_envs)]
    chains = [build_chain(path) for path in paths]
    rngs = [substream(cfg.seed, WALK_STREAM_TAG, i) for i in range(cfg.n_envs)]
    logger.info(f"walking {cfg.n_envs} walkers for {cfg.n_steps} steps, a={cfg.a} h={cfg.h}")
    trajectory = run_walks(chains, cfg.n_steps, rngs)
    final = trajectory.positions[-1]

    level = float(np.log(cfg.n_steps)) if b_level is None else b_level
    agreements = []
    for path, position in zip(paths, final):
        try:
            b = compute_b(path, level)
        except InsufficientPath:
            continue
        agreements.append(np.sign(b) == np.sign(position))
    agreement = proportion(np.array(agreements)) if agreements else Estimate(float("nan"), float("nan"), 0)
    return DemoSummary(
        proportion(final < 0),
        float(np.mean(final)),
        int(trajectory.cap_hits.sum()),
        agreement,
        len(agreements),
        trajectory,
    )
