"""Drive the agent to the target once exploration has ended.

Classes
-------
DockingPlan
    Destination pose and the action sequence leading to it.

Functions
---------
destination_pose
    Closest pose that sees a location and points towards it.
shortest_path
    Minimal-action path between two poses.
execute_docking
    Replay a plan on an episode without using the detector.
"""
import logging

import networkx as nx
import numpy as np

from avsearch.environment import ACTIONS, angular_offset


logger = logging.getLogger(__name__)

PRECISION = 9


class UnobservableTarget(Exception):
    def __init__(self, location):
        msg = "No pose observes location {}".format(location)
        super(UnobservableTarget, self).__init__(msg)


class Unreachable(Exception):
    def __init__(self, src, dst):
        msg = "{} cannot be reached from {}".format(dst, src)
        super(Unreachable, self).__init__(msg)


class CapExceeded(Exception):
    """Raised when the episode cap is hit before a plan completes."""
    def __init__(self, planned, executed):
        self.planned = planned
        self.executed = executed
        msg = "Episode cap reached after {} of {} docking steps".format(
            executed, planned)
        super(CapExceeded, self).__init__(msg)


class DockingPlan(object):
    """Action sequence from ``source`` to ``destination``.

    Parameters
    ----------
    source, destination : Pose
    path : list of (Action, Pose), optional
        Pairs where ``pose`` is reached by ``action``.
    """

    def __init__(self, source, destination, path=None):
        self.source = source
        self.destination = destination
        self.path = list(path) if path is not None else []

    @property
    def actions(self):
        return [a for a, _ in self.path]

    def __len__(self):
        return len(self.path)

    def __repr__(self):
        return 'DockingPlan({} -> {}, {} actions)'.format(
            self.source, self.destination, len(self.path))


def destination_pose(target, graph, visibility, grid):
    """Pose observing ``target`` that is closest to it and faces it best.

    Poses are ordered by Euclidean distance to the target cell, then by the
    angle between heading and bearing to the target, then by node ordinal.

    Raises
    ------
    UnobservableTarget
        If no pose observes ``target``.
    """
    observers = visibility.observers(target)
    if len(observers) == 0:
        raise UnobservableTarget(target)

    tx, ty = grid.candidate_cell(target)
    poses = np.array([graph.nodes[i] for i in observers], dtype=np.float64)
    dx, dy = tx - poses[:, 0], ty - poses[:, 1]
    distance = np.round(np.hypot(dx, dy), PRECISION)
    bearing = np.degrees(np.arctan2(-dy, dx))
    offset = np.round(angular_offset(bearing, poses[:, 2]), PRECISION)

    best = np.lexsort((observers, offset, distance))[0]
    return graph.nodes[int(observers[best])]


def _weight_function(weight):
    if callable(weight):
        return weight
    return lambda u, v, data: data.get(weight, 1)


def shortest_path(graph, src, dst, weight='weight'):
    """Minimal-cost path from ``src`` to ``dst``.

    Costs are computed with Dijkstra's algorithm on the reversed pose graph.
    The path is then rebuilt forwards by taking, at each pose, the lowest
    ordinal action that stays on a minimal-cost path, which yields the
    lexicographically smallest action sequence among optimal paths.

    Parameters
    ----------
    graph : PoseGraph
    src, dst : Pose
    weight : str or callable, optional
        Edge attribute name or ``weight(u, v, data)`` hook. Unit costs by
        default.

    Returns
    -------
    plan : DockingPlan

    Raises
    ------
    UnknownPoseError
        If either pose is not in ``graph``.
    Unreachable
        If no path exists.
    """
    s, t = graph.index(src), graph.index(dst)
    plan = DockingPlan(graph.nodes[s], graph.nodes[t])
    if s == t:
        return plan

    g = graph.digraph
    cost = _weight_function(weight)
    reverse_cost = lambda u, v, data: cost(v, u, data)
    remaining = nx.single_source_dijkstra_path_length(
        g.reverse(copy=False), t, weight=reverse_cost)
    if s not in remaining:
        raise Unreachable(graph.nodes[s], graph.nodes[t])

    node = s
    while node != t:
        for a in ACTIONS:
            j = graph.successor(node, a)
            if j < 0 or j not in remaining:
                continue
            step = cost(node, j, g[node][j])
            if abs(remaining[node] - step - remaining[j]) <= 1e-9:
                plan.path.append((a, graph.nodes[j]))
                node = j
                break
        else:
            raise Unreachable(graph.nodes[s], graph.nodes[t])
    logger.debug('Docking path of %d actions from %s to %s',
                 len(plan), plan.source, plan.destination)
    return plan


def execute_docking(plan, episode):
    """Replay ``plan`` on ``episode``.

    Only motion is simulated: the detector, belief and probability field
    are left untouched.

    Parameters
    ----------
    plan : DockingPlan
    episode : SearchEpisode
        Must currently be at ``plan.source``.

    Returns
    -------
    trajectory : list of Pose
        Poses reached by the executed actions.

    Raises
    ------
    CapExceeded
        If the episode cap is reached before the destination; the steps
        that fit are executed first.
    ValueError
        If the plan does not start at the episode's pose.
    """
    if episode.pose != plan.source:
        raise ValueError('plan starts at {} but the agent is at {}'.format(
            plan.source, episode.pose))

    trajectory = []
    for action, pose in plan.path:
        if episode.remaining_steps <= 0:
            raise CapExceeded(len(plan), len(trajectory))
        episode.move(action)
        trajectory.append(pose)
    return trajectory
