"""World model for active visual search on a grid.

Classes
-------
CellTag
    Tag of a grid cell: occlusion, empty or candidate object location.
GridMap
    Immutable tagged occupancy grid with candidate location indexing.
Pose
    Discrete agent pose ``(x, y, theta)``.
Action
    The four agent actions.
PoseGraph
    Poses reachable by the agent and the single-action edges between them.
FovParams
    Field-of-view cone of the agent's sensor.
VisibilityMatrix
    Boolean pose-by-location observability matrix.

Functions
---------
load_map
    Parse a map file into a `GridMap`.
read_map
    Load a map file from disk.
build_pose_graph
    Enumerate every legal pose and its single-action successors.
apply_action
    Apply an action to a pose, returning the successor or `BLOCKED`.
visible_locations
    Candidate locations inside the unoccluded field of view of a pose.
compute_visibility
    Build the observability matrix for every pose of a graph.
supercover
    All grid cells touched by the segment between two cell centers.

Notes
-----
Rows grow downwards in the map file, so a heading of 90 degrees points to
the previous row ("north") and clockwise rotation decreases ``theta``.
Candidate locations are addressed by their 0-based position in row-major
order.
"""
from dataclasses import dataclass
import enum
import logging
import math
import re
from typing import NamedTuple

import networkx as nx
import numpy as np


logger = logging.getLogger(__name__)

GLYPHS = {'#': 0, '.': 1, 'o': 2}
SIZE_HEADER = re.compile(r'^size\s+(\d+)\s+(\d+)\s*$')
ANGLE_TOLERANCE = 1e-9


class ParseError(Exception):
    """Raised when map text does not conform to the map format."""
    def __init__(self, reason, line=None):
        msg = "Invalid map: {}".format(reason)
        if line is not None:
            msg = "{} (line {})".format(msg, line)
        super(ParseError, self).__init__(msg)


class InvalidRotationStep(Exception):
    """Raised when a rotation step does not evenly divide 360 degrees."""
    def __init__(self, delta_theta):
        msg = "Rotation step {} does not divide 360 degrees".format(delta_theta)
        super(InvalidRotationStep, self).__init__(msg)


class InvalidFovError(Exception):
    def __init__(self, half_angle, max_range):
        msg = "Invalid field of view: half_angle={} max_range={}".format(
            half_angle, max_range)
        super(InvalidFovError, self).__init__(msg)


class UnknownPoseError(Exception):
    def __init__(self, pose):
        msg = "{} is not a node of the pose graph".format(pose)
        super(UnknownPoseError, self).__init__(msg)


class CellTag(enum.IntEnum):
    OCCLUSION = 0
    EMPTY = 1
    CANDIDATE = 2


class Action(enum.IntEnum):
    """The agent's action set.

    The integer value is the action's ordinal, used for every tie-break.
    """
    MOVE_FORWARD = 0
    MOVE_BACKWARD = 1
    ROTATE_CLOCKWISE = 2
    ROTATE_COUNTER_CLOCKWISE = 3


ACTIONS = tuple(Action)


class Pose(NamedTuple):
    x: int
    y: int
    theta: int


class _Blocked(object):
    """Signal returned by `apply_action` for an illegal translation."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(_Blocked, cls).__new__(cls)
        return cls._instance

    def __repr__(self):
        return 'BLOCKED'

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Blocked, ())


BLOCKED = _Blocked()


class GridMap(object):
    """Tagged occupancy grid.

    Parameters
    ----------
    cells : array_like of int
        ``(height, width)`` array of `CellTag` values.
    cell_size : float, optional
        Meters per cell. Metadata only.

    Attributes
    ----------
    width, height : int
        Grid dimensions in cells.
    cells : numpy.ndarray
        Read-only ``(height, width)`` tag array.
    candidate_cells : numpy.ndarray
        ``(k, 2)`` array of ``(x, y)`` candidate coordinates in row-major
        order; row ``j`` is location ``j``.

    Raises
    ------
    ParseError
        If the grid contains no candidate cells or unknown tags.
    """

    def __init__(self, cells, cell_size=1.0):
        cells = np.array(cells, dtype=np.int8)
        if cells.ndim != 2 or cells.size == 0:
            raise ParseError('grid must be a non-empty 2-D array')
        if not np.isin(cells, [int(t) for t in CellTag]).all():
            raise ParseError('unknown cell tag')

        cells.setflags(write=False)
        self.cells = cells
        self.height, self.width = cells.shape
        self.cell_size = float(cell_size)

        ys, xs = np.nonzero(cells == CellTag.CANDIDATE)
        if len(xs) == 0:
            raise ParseError('map has zero candidate cells')
        self.candidate_cells = np.stack([xs, ys], axis=1).astype(np.int64)
        self.candidate_cells.setflags(write=False)
        self._candidate_index = {
            (int(x), int(y)): j for j, (x, y) in enumerate(self.candidate_cells)
        }

    @property
    def k(self):
        """Number of candidate locations."""
        return len(self.candidate_cells)

    def tag(self, x, y):
        return CellTag(int(self.cells[y, x]))

    def in_bounds(self, x, y):
        return 0 <= x < self.width and 0 <= y < self.height

    def is_empty(self, x, y):
        return self.in_bounds(x, y) and self.cells[y, x] == CellTag.EMPTY

    def is_occlusion(self, x, y):
        return self.cells[y, x] == CellTag.OCCLUSION

    def candidate_index(self, x, y):
        """Location index of the candidate cell at ``(x, y)``.

        Raises
        ------
        KeyError
            If ``(x, y)`` is not a candidate cell.
        """
        return self._candidate_index[(x, y)]

    def candidate_cell(self, location):
        x, y = self.candidate_cells[location]
        return int(x), int(y)

    def empty_cells(self):
        """Empty cells as ``(x, y)`` tuples in row-major order."""
        ys, xs = np.nonzero(self.cells == CellTag.EMPTY)
        return [(int(x), int(y)) for x, y in zip(xs, ys)]

    def to_text(self, header=True):
        """Render the map in the map-file format."""
        glyphs = {v: k for k, v in GLYPHS.items()}
        rows = [''.join(glyphs[int(t)] for t in row) for row in self.cells]
        if header:
            rows.insert(0, 'size {} {}'.format(self.width, self.height))
        return '\n'.join(rows) + '\n'

    def __eq__(self, other):
        return isinstance(other, GridMap) \
            and np.array_equal(self.cells, other.cells) \
            and self.cell_size == other.cell_size

    def __hash__(self):
        return hash((self.cells.tobytes(), self.cells.shape))

    def __repr__(self):
        return 'GridMap({}x{}, k={})'.format(self.width, self.height, self.k)


def load_map(text, cell_size=1.0):
    """Parse map-file contents.

    Parameters
    ----------
    text : str
        Map file contents: one row per line using ``#`` (occlusion), ``.``
        (empty) and ``o`` (candidate), optionally preceded by a
        ``size <w> <h>`` header.
    cell_size : float, optional
        Meters per cell.

    Returns
    -------
    grid : GridMap

    Raises
    ------
    ParseError
        On unknown glyphs, ragged rows, a header that disagrees with the rows
        or a map without candidate cells.
    """
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()

    size = None
    offset = 0
    if lines:
        match = SIZE_HEADER.match(lines[0].strip())
        if match is not None:
            size = (int(match.group(1)), int(match.group(2)))
            offset = 1

    rows = []
    for lineno, line in enumerate(lines[offset:], start=offset + 1):
        line = line.rstrip('\r')
        try:
            rows.append([GLYPHS[c] for c in line])
        except KeyError as e:
            raise ParseError('unknown glyph {!r}'.format(e.args[0]), lineno)
        if len(rows[-1]) != len(rows[0]):
            raise ParseError('ragged rows', lineno)

    if not rows or not rows[0]:
        raise ParseError('map has no rows')

    if size is not None and size != (len(rows[0]), len(rows)):
        raise ParseError('header size {}x{} does not match {}x{} rows'.format(
            size[0], size[1], len(rows[0]), len(rows)))

    return GridMap(rows, cell_size=cell_size)


def read_map(path, cell_size=1.0):
    """Load a map file from disk; see `load_map`."""
    with open(path, 'r') as f:
        return load_map(f.read(), cell_size=cell_size)


def heading_vector(theta):
    """Single-cell translation for a heading, snapped to the 8-neighborhood."""
    rad = math.radians(theta)
    return int(round(math.cos(rad))), -int(round(math.sin(rad)))


class PoseGraph(object):
    """Poses of the agent and their single-action successors.

    Attributes
    ----------
    nodes : list of Pose
        Node ordinals follow row-major cell order, then increasing heading.
    successors : numpy.ndarray
        ``(n, 4)`` array; ``successors[i, a]`` is the node reached from node
        ``i`` by action ``a`` or -1 when the translation is illegal.
    delta_theta : int
        Rotation step in degrees.
    """

    def __init__(self, nodes, successors, delta_theta):
        self.nodes = list(nodes)
        self.successors = np.asarray(successors, dtype=np.int64)
        self.successors.setflags(write=False)
        self.delta_theta = delta_theta
        self._index = {pose: i for i, pose in enumerate(self.nodes)}
        self._legal = [
            tuple(a for a in ACTIONS if row[a] >= 0)
            for row in self.successors.tolist()
        ]
        self._digraph = None

    @property
    def n(self):
        return len(self.nodes)

    def index(self, pose):
        try:
            return self._index[Pose(*pose)]
        except (KeyError, TypeError):
            raise UnknownPoseError(pose)

    def __contains__(self, pose):
        return Pose(*pose) in self._index

    def successor(self, node, action):
        """Node reached from ``node`` by ``action``, or -1."""
        return int(self.successors[node, action])

    def legal_actions(self, node):
        """Actions with an out-edge from ``node`` in ordinal order."""
        return self._legal[node]

    @property
    def digraph(self):
        """`networkx.DiGraph` view; edges carry their ``action``."""
        if self._digraph is None:
            g = nx.DiGraph()
            g.add_nodes_from(range(self.n))
            for i, row in enumerate(self.successors.tolist()):
                for a, j in enumerate(row):
                    if j >= 0:
                        g.add_edge(i, j, action=Action(a), weight=1)
            self._digraph = g
        return self._digraph

    def __getstate__(self):
        state = self.__dict__.copy()
        state['_digraph'] = None
        return state


def build_pose_graph(grid, delta_theta=90):
    """Enumerate every pose on an empty cell and its single-action edges.

    Parameters
    ----------
    grid : GridMap
    delta_theta : int, optional
        Rotation step in degrees. Default 90.

    Returns
    -------
    graph : PoseGraph

    Raises
    ------
    InvalidRotationStep
        If ``delta_theta`` does not evenly divide 360.
    """
    if int(delta_theta) != delta_theta or delta_theta <= 0 \
            or 360 % int(delta_theta) != 0:
        raise InvalidRotationStep(delta_theta)
    delta_theta = int(delta_theta)
    headings = list(range(0, 360, delta_theta))
    steps = len(headings)

    nodes = [Pose(x, y, theta)
             for (x, y) in grid.empty_cells() for theta in headings]
    index = {pose: i for i, pose in enumerate(nodes)}

    successors = np.full((len(nodes), len(ACTIONS)), -1, dtype=np.int64)
    for i, pose in enumerate(nodes):
        h = pose.theta // delta_theta
        successors[i, Action.ROTATE_CLOCKWISE] = index[
            Pose(pose.x, pose.y, headings[(h - 1) % steps])]
        successors[i, Action.ROTATE_COUNTER_CLOCKWISE] = index[
            Pose(pose.x, pose.y, headings[(h + 1) % steps])]

        dx, dy = heading_vector(pose.theta)
        for action, sign in ((Action.MOVE_FORWARD, 1),
                             (Action.MOVE_BACKWARD, -1)):
            x, y = pose.x + sign * dx, pose.y + sign * dy
            if grid.is_empty(x, y):
                successors[i, action] = index[Pose(x, y, pose.theta)]

    logger.debug('Built pose graph with %d nodes (delta_theta=%d)',
                 len(nodes), delta_theta)
    return PoseGraph(nodes, successors, delta_theta)


def apply_action(graph, pose, action):
    """Apply ``action`` at ``pose``.

    Returns
    -------
    pose : Pose or BLOCKED
        The successor pose, or `BLOCKED` when the translation would leave the
        map or enter a non-empty cell. Rotations are never blocked.
    """
    j = graph.successor(graph.index(pose), Action(action))
    return graph.nodes[j] if j >= 0 else BLOCKED


@dataclass(frozen=True)
class FovParams:
    """Sensor field of view.

    Parameters
    ----------
    half_angle : float
        Half aperture of the viewing cone in degrees, in (0, 180].
    max_range : float
        Maximum Euclidean range in cells, at least 1.
    """
    half_angle: float = 45.0
    max_range: float = 5.0

    def __post_init__(self):
        if not (0 < self.half_angle <= 180) or self.max_range < 1:
            raise InvalidFovError(self.half_angle, self.max_range)


def supercover(start, end):
    """Cells touched by the segment joining two cell centers.

    When the segment passes exactly through a cell corner both cells beside
    the corner are included.

    Parameters
    ----------
    start, end : tuple of int
        ``(x, y)`` cell coordinates.

    Returns
    -------
    cells : list of tuple
        Cells from ``start`` to ``end`` inclusive.
    """
    x, y = start
    dx, dy = end[0] - x, end[1] - y
    nx_, ny_ = abs(dx), abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1

    cells = [(x, y)]
    ix = iy = 0
    while ix < nx_ or iy < ny_:
        decision = (1 + 2 * ix) * ny_ - (1 + 2 * iy) * nx_
        if decision == 0:
            cells.append((x + sx, y))
            cells.append((x, y + sy))
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif decision < 0:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        cells.append((x, y))
    return cells


def line_of_sight(grid, start, end):
    """True if no occlusion cell lies on the segment between two cells."""
    for (x, y) in supercover(start, end)[1:]:
        if grid.is_occlusion(x, y):
            return False
    return True


def _cell_view(grid, x, y, fov):
    """Range/occlusion mask and bearings of every candidate from a cell."""
    offsets = grid.candidate_cells - np.array([x, y])
    distances = np.hypot(offsets[:, 0], offsets[:, 1])
    bearings = np.degrees(np.arctan2(-offsets[:, 1], offsets[:, 0]))

    mask = (distances <= fov.max_range + ANGLE_TOLERANCE) & (distances > 0)
    for j in np.flatnonzero(mask):
        if not line_of_sight(grid, (x, y), grid.candidate_cell(j)):
            mask[j] = False
    return mask, bearings


def angular_offset(bearing, theta):
    """Absolute angle in degrees between a bearing and a heading."""
    return np.abs((np.asarray(bearing) - theta + 180.0) % 360.0 - 180.0)


def _in_cone(bearings, theta, fov):
    return angular_offset(bearings, theta) <= fov.half_angle + ANGLE_TOLERANCE


def visible_locations(grid, pose, fov):
    """Candidate locations visible from ``pose``.

    A location is visible when its cell center is within ``fov.max_range``
    of the pose cell, within ``fov.half_angle`` of the heading, and the
    supercover segment between the two cells crosses no occlusion cell.

    Returns
    -------
    locations : frozenset of int
    """
    mask, bearings = _cell_view(grid, pose[0], pose[1], fov)
    mask &= _in_cone(bearings, pose[2], fov)
    return frozenset(int(j) for j in np.flatnonzero(mask))


class VisibilityMatrix(object):
    """Boolean ``n x k`` observability matrix.

    ``entries[i, j]`` is True iff location ``j`` is visible from node ``i``.
    """

    def __init__(self, entries):
        entries = np.array(entries, dtype=bool)
        entries.setflags(write=False)
        self.entries = entries
        self._rows = [frozenset(np.flatnonzero(row).tolist()) for row in entries]

    @property
    def shape(self):
        return self.entries.shape

    def row(self, node):
        return self.entries[node]

    def visible_from(self, node):
        """Visible locations of ``node`` as a frozenset."""
        return self._rows[node]

    def sees(self, node, location):
        return location in self._rows[node]

    def observers(self, location):
        """Node ordinals from which ``location`` is visible."""
        return np.flatnonzero(self.entries[:, location])

    def __eq__(self, other):
        return isinstance(other, VisibilityMatrix) \
            and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


def compute_visibility(grid, graph, fov):
    """Observability matrix for every node of ``graph``.

    Occlusion is evaluated once per cell and reused for every heading.

    Returns
    -------
    visibility : VisibilityMatrix
    """
    entries = np.zeros((graph.n, grid.k), dtype=bool)
    views = {}
    for i, pose in enumerate(graph.nodes):
        cell = (pose.x, pose.y)
        if cell not in views:
            views[cell] = _cell_view(grid, pose.x, pose.y, fov)
        mask, bearings = views[cell]
        entries[i] = mask & _in_cone(bearings, pose.theta, fov)

    logger.debug('Visibility matrix %s with %d visible pairs',
                 entries.shape, int(entries.sum()))
    return VisibilityMatrix(entries)
