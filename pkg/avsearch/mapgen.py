"""Synthetic indoor maps.

Maps are bordered rectangles split into rooms by occlusion walls with one
door gap per wall, sprinkled with small furniture blocks. Candidate object
locations are placed along walls and furniture while keeping the empty
space connected.

Functions
---------
generate_map
    Generate a map from explicit parameters.
generate_preset
    Generate a map from a named difficulty preset.
save_map
    Write a map in the map-file format.
"""
import logging

import numpy as np
from scipy import ndimage

from avsearch.environment import CellTag, GridMap


logger = logging.getLogger(__name__)

PRESETS = {
    'easy': {'width': 10, 'height': 10, 'room_count': 1,
             'candidate_density': 0.3},
    'medium': {'width': 18, 'height': 18, 'room_count': 2,
               'candidate_density': 0.3},
    'hard': {'width': 30, 'height': 30, 'room_count': 3,
             'candidate_density': 0.25},
}

MAX_ATTEMPTS = 32
MIN_ROOM = 3
FURNITURE_AREA = 30
FURNITURE_SHAPES = ((1, 1), (2, 1), (1, 2))
CROSS = ndimage.generate_binary_structure(2, 1)


class GenerationFailed(Exception):
    def __init__(self, reason, attempts=MAX_ATTEMPTS):
        msg = "Map generation failed after {} attempts: {}".format(
            attempts, reason)
        super(GenerationFailed, self).__init__(msg)


class UnknownPresetError(Exception):
    def __init__(self, name):
        msg = "Unknown difficulty preset {!r}; expected one of {}".format(
            name, ', '.join(sorted(PRESETS)))
        super(UnknownPresetError, self).__init__(msg)


class _Retry(Exception):
    pass


def _connected(cells):
    _, count = ndimage.label(cells == CellTag.EMPTY, structure=CROSS)
    return count == 1


def _neighbors(cells, x, y):
    h, w = cells.shape
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nx_, ny_ = x + dx, y + dy
        if 0 <= nx_ < w and 0 <= ny_ < h:
            yield nx_, ny_


def _split_options(cells, room):
    x0, y0, x1, y1 = room
    options = []
    if x1 - x0 + 1 >= 2 * MIN_ROOM + 1:
        for x in range(x0 + MIN_ROOM, x1 - MIN_ROOM + 1):
            if cells[y0 - 1, x] != CellTag.EMPTY and cells[y1 + 1, x] != CellTag.EMPTY:
                options.append((0, x))
    if y1 - y0 + 1 >= 2 * MIN_ROOM + 1:
        for y in range(y0 + MIN_ROOM, y1 - MIN_ROOM + 1):
            if cells[y, x0 - 1] != CellTag.EMPTY and cells[y, x1 + 1] != CellTag.EMPTY:
                options.append((1, y))
    return options


def _split_rooms(cells, room_count, rng):
    h, w = cells.shape
    rooms = [(1, 1, w - 2, h - 2)]
    doors = []
    while len(rooms) < room_count:
        by_area = sorted(rooms, key=lambda r: -(r[2] - r[0] + 1) * (r[3] - r[1] + 1))
        for room in by_area:
            options = _split_options(cells, room)
            if options:
                break
        else:
            raise GenerationFailed('rooms too small for {} rooms'.format(room_count))

        axis, pos = options[int(rng.integers(len(options)))]
        x0, y0, x1, y1 = room
        rooms.remove(room)
        if axis == 0:
            cells[y0:y1 + 1, pos] = CellTag.OCCLUSION
            door = (pos, int(rng.integers(y0, y1 + 1)))
            rooms += [(x0, y0, pos - 1, y1), (pos + 1, y0, x1, y1)]
        else:
            cells[pos, x0:x1 + 1] = CellTag.OCCLUSION
            door = (int(rng.integers(x0, x1 + 1)), pos)
            rooms += [(x0, y0, x1, pos - 1), (x0, pos + 1, x1, y1)]
        cells[door[1], door[0]] = CellTag.EMPTY
        doors.append(door)
    return rooms, doors


def _place_furniture(cells, rooms, door_zone, rng):
    for x0, y0, x1, y1 in rooms:
        area = (x1 - x0 + 1) * (y1 - y0 + 1)
        for _ in range(area // FURNITURE_AREA):
            bw, bh = FURNITURE_SHAPES[int(rng.integers(len(FURNITURE_SHAPES)))]
            x = int(rng.integers(x0 + 1, max(x0 + 2, x1 - bw + 1)))
            y = int(rng.integers(y0 + 1, max(y0 + 2, y1 - bh + 1)))
            block = (slice(y, y + bh), slice(x, x + bw))
            if door_zone[block].any() or (cells[block] != CellTag.EMPTY).any():
                continue
            cells[block] = CellTag.OCCLUSION
            if not _connected(cells):
                cells[block] = CellTag.EMPTY


def _keeps_observers(cells, x, y):
    if not any(cells[ny, nx_] == CellTag.EMPTY for nx_, ny in _neighbors(cells, x, y)):
        return False
    for nx_, ny in _neighbors(cells, x, y):
        if cells[ny, nx_] == CellTag.CANDIDATE:
            if not any(cells[my, mx] == CellTag.EMPTY
                       for mx, my in _neighbors(cells, nx_, ny)):
                return False
    return True


def _place_candidates(cells, door_zone, candidate_density, rng):
    empty = cells == CellTag.EMPTY
    occluded = cells == CellTag.OCCLUSION
    wall_adjacent = empty & ndimage.binary_dilation(occluded, structure=CROSS)
    wanted = max(1, int(round(candidate_density * wall_adjacent.sum())))

    ys, xs = np.nonzero(wall_adjacent & ~door_zone)
    order = rng.permutation(len(xs))
    placed = 0
    for i in order:
        if placed == wanted:
            break
        x, y = int(xs[i]), int(ys[i])
        cells[y, x] = CellTag.CANDIDATE
        if _keeps_observers(cells, x, y) and _connected(cells):
            placed += 1
        else:
            cells[y, x] = CellTag.EMPTY
    if placed == 0:
        raise _Retry()
    return placed, wanted


def _generate(width, height, room_count, candidate_density, rng):
    cells = np.full((height, width), CellTag.EMPTY, dtype=np.int8)
    cells[0, :] = cells[-1, :] = CellTag.OCCLUSION
    cells[:, 0] = cells[:, -1] = CellTag.OCCLUSION

    rooms, doors = _split_rooms(cells, room_count, rng)
    door_mask = np.zeros_like(cells, dtype=bool)
    for x, y in doors:
        door_mask[y, x] = True
    door_zone = ndimage.binary_dilation(door_mask, structure=CROSS)

    _place_furniture(cells, rooms, door_zone, rng)
    if not _connected(cells):
        raise _Retry()
    placed, wanted = _place_candidates(cells, door_zone, candidate_density, rng)
    logger.debug('Placed %d of %d candidates in %d rooms', placed, wanted,
                 len(rooms))
    return cells


def generate_map(width, height, room_count, candidate_density, seed, cell_size=1.0):
    """Generate a synthetic indoor map.

    Parameters
    ----------
    width, height : int
        Map size in cells, border walls included; at least 4.
    room_count : int
        Number of rooms, at least 1.
    candidate_density : float
        Fraction in (0, 1) of wall-adjacent empty cells turned into
        candidate locations.
    seed : int
        Seed of the generator; equal seeds give equal maps.
    cell_size : float, optional
        Meters per cell.

    Returns
    -------
    grid : GridMap

    Raises
    ------
    GenerationFailed
        If no connected map with at least one candidate is found within
        ``MAX_ATTEMPTS`` attempts.
    ValueError
        On out-of-range parameters.
    """
    if width < 4 or height < 4:
        raise ValueError('maps must be at least 4x4, got {}x{}'.format(width, height))
    if not 0 < candidate_density < 1:
        raise ValueError('candidate_density must lie in (0, 1)')
    if room_count < 1:
        raise ValueError('room_count must be at least 1')

    streams = np.random.SeedSequence(seed).spawn(MAX_ATTEMPTS)
    for attempt, stream in enumerate(streams):
        try:
            cells = _generate(width, height, room_count, candidate_density,
                              np.random.default_rng(stream))
        except _Retry:
            logger.debug('Map attempt %d rejected', attempt)
            continue
        return GridMap(cells, cell_size=cell_size)
    raise GenerationFailed('no connected layout with candidates')


def generate_preset(name, seed, cell_size=1.0):
    """Generate a map from the ``easy``, ``medium`` or ``hard`` preset."""
    try:
        params = PRESETS[name]
    except KeyError:
        raise UnknownPresetError(name)
    return generate_map(seed=seed, cell_size=cell_size, **params)


def save_map(grid, path):
    with open(path, 'w') as f:
        f.write(grid.to_text())
