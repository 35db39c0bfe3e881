"""
x-extrema of grid paths, the b-process and the slope decomposition.

A point y0 is an x-minimum when the path, scanned left from y0, reaches w(y0) + x before it returns to a
value <= w(y0), and, scanned right, reaches w(y0) + x before it drops below w(y0). x-maxima are x-minima of -w.
Ties resolve to the earliest index.
"""
import enum
import logging
from collections import namedtuple
from typing import TYPE_CHECKING, List, Tuple

if TYPE_CHECKING:
    from .environment import EnvironmentPath

from .fluctuation import SlopeKind

logger = logging.getLogger(__name__)


class InsufficientPath(ValueError):
    """Exception for a path too short to determine the requested x-extrema.
    """

    pass


class ExtremumKind(enum.Enum):
    MIN = "min"
    MAX = "max"


ExtremaRecord = namedtuple("ExtremaRecord", ("position", "value", "kind", "index"))

SlopeRecord = namedtuple(
    "SlopeRecord",
    ("kind", "length", "height", "start_position", "is_central", "is_boundary_partial"),
)

_MIN = ExtremumKind.MIN
_MAX = ExtremumKind.MAX


def _check_level(x: float) -> None:
    if not x > 0:
        raise ValueError(f"extremum level must be > 0, got: {x}")


def _sweep(values: List[float], x: float) -> List[Tuple[int, ExtremumKind]]:
    """Single left-to-right pass; returns (index, kind) pairs, the first one not yet validated."""
    emitted = []
    state = None
    min_index = max_index = 0
    for index in range(1, len(values)):
        value = values[index]
        if state is not _MIN:
            # looking for the next x-minimum
            if value < values[min_index]:
                min_index = index
            elif value >= values[min_index] + x:
                emitted.append((min_index, _MIN))
                state = _MIN
                max_index = index
                continue
        if state is not _MAX:
            if value > values[max_index]:
                max_index = index
            elif value <= values[max_index] - x:
                emitted.append((max_index, _MAX))
                state = _MAX
                min_index = index
    return emitted


def _first_is_determined(values: List[float], index: int, kind: ExtremumKind, x: float) -> bool:
    head = values[:index]
    if not head:
        return False
    if kind is _MIN:
        return max(head) >= values[index] + x
    return min(head) <= values[index] - x


def x_extrema_indices(values, x: float) -> List[Tuple[int, ExtremumKind]]:
    """(index, kind) of every x-extremum of the grid values."""
    _check_level(x)
    values = list(map(float, values))
    emitted = _sweep(values, x)
    if emitted and not _first_is_determined(values, emitted[0][0], emitted[0][1], x):
        emitted = emitted[1:]
    return emitted


def _is_x_minimum(values: List[float], y0: int, x: float) -> bool:
    level = values[y0]
    target = level + x
    found = False
    for value in reversed(values[:y0]):
        if value <= level:
            break
        if value >= target:
            found = True
            break
    if not found:
        return False
    for value in values[y0 + 1:]:
        if value < level:
            return False
        if value >= target:
            return True
    return False


def _is_x_maximum(values: List[float], y0: int, x: float) -> bool:
    level = values[y0]
    target = level - x
    found = False
    for value in reversed(values[:y0]):
        if value >= level:
            break
        if value <= target:
            found = True
            break
    if not found:
        return False
    for value in values[y0 + 1:]:
        if value > level:
            return False
        if value <= target:
            return True
    return False


def brute_force_x_extrema_indices(values, x: float) -> List[Tuple[int, ExtremumKind]]:
    """Test the x-extremum definition at every grid point; quadratic in the worst case."""
    _check_level(x)
    values = list(map(float, values))
    result = []
    for y0 in range(len(values)):
        if _is_x_minimum(values, y0, x):
            result.append((y0, _MIN))
        elif _is_x_maximum(values, y0, x):
            result.append((y0, _MAX))
    return result


def _records(path: "EnvironmentPath", pairs: List[Tuple[int, ExtremumKind]]) -> List[ExtremaRecord]:
    values = path.values()
    offset = path.origin_index
    return [ExtremaRecord((index - offset) * path.h, float(values[index]), kind, index - offset) for index, kind in pairs]


def find_x_extrema(path: "EnvironmentPath", x: float) -> List[ExtremaRecord]:
    """
    x-extrema of the path, in increasing position with alternating kinds.

    :param path: environment path
    :param x: extremum level, x > 0
    :raises InsufficientPath: no x-extremum is determined on the path
    """
    records = _records(path, x_extrema_indices(path.values(), x))
    if not records:
        raise InsufficientPath(f"no {x}-extremum determined on a path of {len(path)} points")
    return records


def brute_force_x_extrema(path: "EnvironmentPath", x: float) -> List[ExtremaRecord]:
    return _records(path, brute_force_x_extrema_indices(path.values(), x))


def origin_neighbours(records: List[ExtremaRecord]) -> Tuple[int, int]:
    """Indices in records of x0, the last record at position <= 0, and x1, the first at position > 0."""
    right = next((i for i, record in enumerate(records) if record.index > 0), None)
    if right is None or right == 0:
        raise InsufficientPath("x-extrema do not cover both sides of the origin")
    return right - 1, right


def compute_b(path: "EnvironmentPath", x: float = 1.0) -> float:
    """
    b_x(w): x0 if x0 is an x-minimum, otherwise x1.

    :raises InsufficientPath: x0 or x1 undetermined
    """
    records = find_x_extrema(path, x)
    left, right = origin_neighbours(records)
    if records[left].kind is _MIN:
        return records[left].position
    assert records[right].kind is _MIN, "x-extrema must alternate around the origin"
    return records[right].position


def slope_decomposition(path: "EnvironmentPath", x: float = 1.0) -> List[SlopeRecord]:
    """
    Slopes between consecutive x-extrema, preceded and followed by the partially observed boundary slopes.

    A slope starting at an x-minimum is upward. The central slope [x0, x1) straddles the origin.
    """
    records = find_x_extrema(path, x)
    central_start, _ = origin_neighbours(records)
    values = path.values()
    positions = path.positions()
    slopes = []

    first = records[0]
    first_kind = SlopeKind.DOWNWARD if first.kind is _MIN else SlopeKind.UPWARD
    slopes.append(SlopeRecord(first_kind, first.position - float(positions[0]), abs(first.value - float(values[0])),
                              float(positions[0]), False, True))
    for i, (start, end) in enumerate(zip(records, records[1:])):
        kind = SlopeKind.UPWARD if start.kind is _MIN else SlopeKind.DOWNWARD
        slopes.append(SlopeRecord(kind, end.position - start.position, abs(end.value - start.value),
                                  start.position, i == central_start, False))
    last = records[-1]
    last_kind = SlopeKind.UPWARD if last.kind is _MIN else SlopeKind.DOWNWARD
    slopes.append(SlopeRecord(last_kind, float(positions[-1]) - last.position, abs(float(values[-1]) - last.value),
                              last.position, False, True))
    logger.debug(f"{len(records)} records, {len(slopes)} slopes at level {x}")
    return slopes


def slopes_near_centre(slopes: List[SlopeRecord], depth: int) -> List[SlopeRecord]:
    """Non-central, fully observed slopes at most depth slopes away from the central slope."""
    centre = next(i for i, slope in enumerate(slopes) if slope.is_central)
    return [
        slope
        for i, slope in enumerate(slopes)
        if not slope.is_central and not slope.is_boundary_partial and abs(i - centre) <= depth
    ]
