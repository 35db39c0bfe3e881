"""
Discretised two-sided spectrally negative stable environments.

The environment w satisfies E exp(lam w_t) = exp(t lam^a) for t >= 0 and lam >= 0. It is sampled on the
grid {i h}: the right side is a one-sided stable process Y, the left side is w(-i h) = -Y'(i h) for an
independent copy Y', so forward increments on both sides are spectrally negative.
"""
import logging
import math
import warnings
from collections import namedtuple
from typing import List, Optional, Tuple

import numpy as np

from .extrema import InsufficientPath, find_x_extrema
from .special import NumericalDomainError
from .utilities import DEFAULT_SEED, ConfigurationError, substream

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
DEFAULT_MAX_SIDE_LENGTH = 10 ** 8
DEFAULT_CHUNK_SIZE = 1024
DEFAULT_MAX_ATTEMPTS = 10

RIGHT_SIDE = 0
LEFT_SIDE = 1


class CapExceeded(RuntimeError):
    """Exception for a path side that reached max_side_length before the stop rule was met.
    """

    pass


class SimConfig(namedtuple("SimConfig", ("a", "h", "seed", "max_side_length"))):
    """
    :param a: stability index in (1, 2]
    :param h: grid spacing
    :param seed: root seed of all substreams
    :param max_side_length: cap on grid points per side
    """

    __slots__ = ()

    def __new__(cls, a: float, h: float = DEFAULT_STEP, seed: int = DEFAULT_SEED, max_side_length: int = DEFAULT_MAX_SIDE_LENGTH):
        if not 1.0 < a <= 2.0:
            raise ConfigurationError(f"a must be in (1, 2], got: {a}")
        if not h > 0:
            raise ConfigurationError(f"h must be > 0, got: {h}")
        if int(max_side_length) < 1:
            raise ConfigurationError(f"max_side_length must be >= 1, got: {max_side_length}")
        return super().__new__(cls, float(a), float(h), int(seed), int(max_side_length))


class StopRule(namedtuple("StopRule", ("level", "records_per_side", "min_side_points"))):
    """
    When to stop extending a path.

    :param level: extremum level x, 0 selects the degenerate single-increment path
    :param records_per_side: x-extrema required at positions <= 0 and at positions > 0
    :param min_side_points: lower bound on grid points per side
    """

    __slots__ = ()

    def __new__(cls, level: float = 1.0, records_per_side: int = 1, min_side_points: int = 1):
        if level < 0:
            raise ConfigurationError(f"level must be >= 0, got: {level}")
        if int(records_per_side) < 1 or int(min_side_points) < 1:
            raise ConfigurationError(f"records_per_side and min_side_points must be >= 1, got: {records_per_side}, {min_side_points}")
        return super().__new__(cls, float(level), int(records_per_side), int(min_side_points))


DEFAULT_STOP_RULE = StopRule()


class EnvironmentPath(namedtuple("EnvironmentPath", ("h", "left_values", "right_values"))):
    """
    :param h: grid spacing
    :param left_values: w(-h), w(-2h), ...
    :param right_values: w(h), w(2h), ...
    """

    __slots__ = ()

    @property
    def origin_index(self) -> int:
        return len(self.left_values)

    def __len__(self) -> int:
        return len(self.left_values) + 1 + len(self.right_values)

    def positions(self) -> np.ndarray:
        return self.h * np.arange(-len(self.left_values), len(self.right_values) + 1, dtype=float)

    def values(self) -> np.ndarray:
        return np.concatenate((np.asarray(self.left_values, dtype=float)[::-1], [0.0], np.asarray(self.right_values, dtype=float)))

    @classmethod
    def from_values(cls, h: float, values, origin_index: int) -> "EnvironmentPath":
        """Build a path from grid values left to right; values[origin_index] is shifted to 0."""
        values = np.asarray(values, dtype=float)
        if not 0 <= origin_index < len(values):
            raise ValueError(f"origin_index {origin_index} outside a path of {len(values)} points")
        values = values - values[origin_index]
        return cls(float(h), values[:origin_index][::-1].copy(), values[origin_index + 1:].copy())


def stable_scale(a: float) -> float:
    """
    sigma(a) = (-cos(pi a / 2))^(1/a), the scale of S_a(sigma, -1, 0) with E exp(lam X) = exp(lam^a).
    At a = 2 the variate is Normal(0, 2).
    """
    if not 1.0 < a <= 2.0:
        raise NumericalDomainError(f"a must be in (1, 2], got: {a}")
    return (-math.cos(math.pi * a / 2.0)) ** (1.0 / a)


def sample_standard_stable(a: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Chambers-Mallows-Stuck variates of S_a(1, -1, 0), a != 1, totally skewed toward negative values.
    """
    beta = -1.0
    tan_term = math.tan(math.pi * a / 2.0)
    b = math.atan(beta * tan_term) / a
    s = (1.0 + beta * beta * tan_term * tan_term) ** (1.0 / (2.0 * a))
    v = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size)
    w = rng.standard_exponential(size)
    shifted = a * (v + b)
    return s * np.sin(shifted) / np.cos(v) ** (1.0 / a) * (np.cos(v - shifted) / w) ** ((1.0 - a) / a)


def sample_increments(a: float, h: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Increments of w over steps of length h, distributed as h^(1/a) sigma(a) S_a(1, -1, 0)."""
    if not h > 0:
        raise NumericalDomainError(f"h must be > 0, got: {h}")
    return h ** (1.0 / a) * stable_scale(a) * sample_standard_stable(a, size, rng)


def sample_increment(a: float, h: float, rng: np.random.Generator) -> float:
    """One increment over a step of length h; consumes the stream exactly like sample_increments(a, h, 1, rng)."""
    return float(sample_increments(a, h, 1, rng)[0])


class _Side:
    """One side of the path, grown outward from the origin in doubling chunks."""

    def __init__(self, cfg: SimConfig, rng: np.random.Generator, sign: float):
        self.cfg = cfg
        self.rng = rng
        self.sign = sign
        self.chunks: List[np.ndarray] = []
        self.length = 0
        self.last = 0.0
        self.next_chunk = DEFAULT_CHUNK_SIZE

    def extend(self, size: Optional[int] = None) -> None:
        size = self.next_chunk if size is None else size
        room = self.cfg.max_side_length - self.length
        if room <= 0:
            raise CapExceeded(f"path side reached max_side_length={self.cfg.max_side_length}")
        size = min(size, room)
        outward = self.last + self.sign * np.cumsum(sample_increments(self.cfg.a, self.cfg.h, size, self.rng))
        self.chunks.append(outward)
        self.length += size
        self.last = float(outward[-1])
        self.next_chunk *= 2

    def values(self) -> np.ndarray:
        if not self.chunks:
            return np.empty(0)
        if len(self.chunks) > 1:
            self.chunks = [np.concatenate(self.chunks)]
        return self.chunks[0]

    def has_drawdown_and_drawup(self, level: float) -> bool:
        """Outward from the origin, both a fall of level below the running max and a rise above the running min."""
        values = np.concatenate(([0.0], self.values()))
        drawdown = np.max(np.maximum.accumulate(values) - values)
        drawup = np.max(values - np.minimum.accumulate(values))
        return drawdown >= level and drawup >= level


def _count_records(path: EnvironmentPath, level: float) -> Tuple[int, int]:
    try:
        records = find_x_extrema(path, level)
    except InsufficientPath:
        return 0, 0
    left = sum(1 for record in records if record.position <= 0)
    return left, len(records) - left


def generate_two_sided(cfg: SimConfig, stop_rule: StopRule = DEFAULT_STOP_RULE, path_index: int = 0, attempt: int = 0) -> EnvironmentPath:
    """
    Generate a two-sided path long enough that its x-extrema around the origin are determined.

    Each side first grows until both a drawdown and a drawup of stop_rule.level are seen outward from the origin;
    then the side lacking x-extrema is extended until stop_rule.records_per_side records lie on each side.

    :param cfg: simulation controls
    :param stop_rule: stopping criterion
    :param path_index: index of the path, part of its substream key
    :param attempt: retry counter, part of its substream key
    :raises CapExceeded: a side reached cfg.max_side_length
    """
    right = _Side(cfg, substream(cfg.seed, path_index, attempt, RIGHT_SIDE), 1.0)
    left = _Side(cfg, substream(cfg.seed, path_index, attempt, LEFT_SIDE), -1.0)
    sides = (left, right)

    if stop_rule.level == 0:
        for side in sides:
            side.extend(stop_rule.min_side_points)
        return EnvironmentPath(cfg.h, left.values(), right.values())

    for side in sides:
        while side.length < stop_rule.min_side_points or not side.has_drawdown_and_drawup(stop_rule.level):
            side.extend()

    while True:
        path = EnvironmentPath(cfg.h, left.values(), right.values())
        left_count, right_count = _count_records(path, stop_rule.level)
        if left_count >= stop_rule.records_per_side and right_count >= stop_rule.records_per_side:
            logger.debug(f"path {path_index}/{attempt}: {left.length}+{right.length} points, records {left_count}/{right_count}")
            return path
        if left_count < stop_rule.records_per_side:
            left.extend()
        if right_count < stop_rule.records_per_side:
            right.extend()


def generate_path(cfg: SimConfig, stop_rule: StopRule = DEFAULT_STOP_RULE, path_index: int = 0,
                  max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> Tuple[EnvironmentPath, int]:
    """
    generate_two_sided with cap retries on fresh substreams.

    :return: (path, number of retries)
    """
    for attempt in range(max_attempts):
        try:
            return generate_two_sided(cfg, stop_rule, path_index, attempt), attempt
        except CapExceeded as error:
            warnings.warn(f"path {path_index} attempt {attempt}: {error}, retrying on a new substream")
    raise CapExceeded(f"path {path_index} exceeded max_side_length on {max_attempts} attempts")


def reflect(path: EnvironmentPath) -> EnvironmentPath:
    """Time reversal w(t) -> w(-t): a spectrally negative path becomes spectrally positive."""
    return EnvironmentPath(path.h, path.right_values, path.left_values)
