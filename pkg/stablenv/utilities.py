"""Utilities to assist in seeding and partitioning simulation work."""
import os
import warnings
from typing import Iterable, List, Optional, Tuple

import numpy as np

DEFAULT_SEED = 20050527
SEED_ENVIRONMENT_VARIABLE = "STABLENV_SEED"


class ConfigurationError(ValueError):
    """Exception for a configuration record built from invalid settings.
    """

    pass


def resolve_seed(cli_seed: Optional[int] = None) -> int:
    """
    Seed precedence: explicit argument, then the STABLENV_SEED environment variable, then DEFAULT_SEED.

    :param cli_seed: seed given on the command line, if any
    :return: seed to use
    """
    if cli_seed is not None:
        return int(cli_seed)
    env_seed = os.environ.get(SEED_ENVIRONMENT_VARIABLE, None)
    if env_seed:
        try:
            return int(env_seed)
        except ValueError:
            warnings.warn(f"{SEED_ENVIRONMENT_VARIABLE}={env_seed!r} is not an integer, using DEFAULT_SEED={DEFAULT_SEED}")
    return DEFAULT_SEED


def substream(seed: int, *key: int) -> np.random.Generator:
    """
    Independent PCG64 stream for the given key, e.g. (stream_tag, path_index, attempt).
    Streams with distinct keys never share state, so work can be split across processes freely.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(sequence))


def partition(n_items: int, partition_size: int) -> List[Tuple[int, int]]:
    """
    Split range(n_items) into contiguous [start, stop) blocks of at most partition_size items.

    >>> partition(5, 2)
    [(0, 2), (2, 4), (4, 5)]
    """
    if partition_size < 1:
        raise ValueError(f"partition_size must be >= 1, got: {partition_size}")
    return [(start, min(start + partition_size, n_items)) for start in range(0, n_items, partition_size)]


def default_partition_size(n_items: int, workers: int) -> int:
    workers = max(1, int(workers))
    return max(1, -(-n_items // workers))


def flatten(blocks: Iterable[Iterable]) -> list:
    return [item for block in blocks for item in block]
