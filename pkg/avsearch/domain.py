"""Active visual search as a POMDP.

Classes
-------
PlannerVariant
    Planner modes: belief update strategy crossed with exit rule.
AvsState
    Hidden state: agent pose node and target location.
RewardSpec
    Reward magnitudes for discovery, motion and revisits.
VisitedMemory
    Poses visited during an episode.
Target
    A searchable object: id, true location and detector statistics.
Scenario
    Everything needed to run an episode on one map.
AvsModel
    Generative model handed to the POMCP planner.
SearchEpisode
    Exploration loop state for one episode.
StepOutcome
    What happened during one real step.

Functions
---------
generative_step
    Simulated transition, observation and reward.
init_belief
    Uniform initial belief over target locations.
update_pp
    Remove confidently empty locations from the elimination set.
resample_belief_be
    Belief uniform over the elimination set.
reinvigorate_belief
    Observation-consistent refill from the previous belief.
run_pomcp_step
    Advance an episode by one real step.
"""
import enum
import logging
from typing import NamedTuple, Optional

import numpy as np

from avsearch.detection import (DetectorStats, ExitThreshold, SimulatedDetector,
                                check_exit, step_likelihood, uniform_field,
                                update_posterior)
from avsearch.environment import FovParams
from avsearch.pomcp import (Belief, GenerativeModel, POMCP, PomdpConfig,
                            StepResult)


logger = logging.getLogger(__name__)


class EmptyEliminationSet(Exception):
    """Raised when every candidate location has been ruled out."""
    def __init__(self):
        super(EmptyEliminationSet, self).__init__(
            "Every candidate location has been ruled out")


class IllegalActionError(Exception):
    def __init__(self, node, action):
        msg = "Action {} is not legal at node {}".format(action, node)
        super(IllegalActionError, self).__init__(msg)


class InvalidRewardSpec(Exception):
    def __init__(self, rewards):
        msg = "Rewards must satisfy found > 0 > step > revisit, got {}".format(
            rewards)
        super(InvalidRewardSpec, self).__init__(msg)


class PlannerVariant(enum.Enum):
    RANDOM = 'random'
    POMP = 'pomp'
    POMP_BE = 'pomp-be'
    POMP_PD = 'pomp-pd'
    POMP_BE_PD = 'pomp-be-pd'

    @property
    def uses_planner(self):
        return self is not PlannerVariant.RANDOM

    @property
    def belief_by_exploration(self):
        return self in (PlannerVariant.POMP_BE, PlannerVariant.POMP_BE_PD)

    @property
    def probabilistic_exit(self):
        return self in (PlannerVariant.POMP_PD, PlannerVariant.POMP_BE_PD)

    def __str__(self):
        return self.value


class AvsState(NamedTuple):
    """Hidden state; ``node`` is the pose graph ordinal of the agent pose."""
    node: int
    target: int


class RewardSpec(object):
    """Reward magnitudes of the search POMDP.

    Parameters
    ----------
    found : float
        Reward for a transition that brings the target into view.
    step : float
        Reward of any other transition.
    revisit : float
        Replaces ``step`` when the new pose was visited before.

    Raises
    ------
    InvalidRewardSpec
        Unless ``found > 0 > step > revisit``.
    """

    def __init__(self, found=100.0, step=-1.0, revisit=-10.0):
        self.found = found
        self.step = step
        self.revisit = revisit
        if not found > 0 > step > revisit:
            raise InvalidRewardSpec(self)

    def __eq__(self, other):
        if not isinstance(other, RewardSpec):
            return NotImplemented
        return (self.found, self.step, self.revisit) == \
            (other.found, other.step, other.revisit)

    def __hash__(self):
        return hash((self.found, self.step, self.revisit))

    def __repr__(self):
        return 'RewardSpec(found={}, step={}, revisit={})'.format(
            self.found, self.step, self.revisit)


class VisitedMemory(object):
    """Pose nodes visited during the current episode."""

    def __init__(self, nodes=()):
        self._nodes = set(nodes)

    def add(self, node):
        self._nodes.add(node)

    def snapshot(self):
        return frozenset(self._nodes)

    def reset(self):
        self._nodes.clear()

    def __contains__(self, node):
        return node in self._nodes

    def __len__(self):
        return len(self._nodes)


class Target(object):
    """A searchable object.

    Attributes
    ----------
    id : str
    location : int
        Candidate index of the object.
    stats : DetectorStats
        Statistics of the detector looking for it.
    """

    def __init__(self, id, location, stats=None):
        self.id = id
        self.location = location
        self.stats = stats if stats is not None else DetectorStats()

    def __repr__(self):
        return 'Target({!r}, {})'.format(self.id, self.location)


class Scenario(object):
    """A map prepared for search.

    Parameters
    ----------
    name : str
    grid : GridMap
    graph : PoseGraph
    visibility : VisibilityMatrix
    fov : FovParams, optional
    targets : dict, optional
        Target id to `Target`.
    start_pose : Pose, optional
        Fixed start pose; sampled per episode when None.
    rewards : RewardSpec, optional
    episode_cap : int
        Maximum number of real steps, exploration and docking included.
    pomcp : PomdpConfig, optional
    exit_c : int, optional
        Confidence constant of the exit threshold. None uses ``k``.
    d_goal : float
        Success radius in cells around the target.
    preset : str, optional
        Difficulty preset the map was generated from.

    Raises
    ------
    ValueError
        If ``episode_cap`` is below 1.
    """

    def __init__(self, name, grid, graph, visibility, fov=None, targets=None,
                 start_pose=None, rewards=None, episode_cap=200, pomcp=None,
                 exit_c=None, d_goal=2.0, preset=None):
        if episode_cap < 1:
            raise ValueError('episode_cap must be at least 1')
        self.name = name
        self.grid = grid
        self.graph = graph
        self.visibility = visibility
        self.fov = fov if fov is not None else FovParams()
        self.targets = targets if targets is not None else {}
        self.start_pose = start_pose
        self.rewards = rewards if rewards is not None else RewardSpec()
        self.episode_cap = episode_cap
        self.pomcp = pomcp if pomcp is not None else PomdpConfig()
        self.exit_c = exit_c
        self.d_goal = d_goal
        self.preset = preset

    @property
    def k(self):
        return self.grid.k

    def __repr__(self):
        return 'Scenario({!r}, k={}, targets={})'.format(
            self.name, self.k, sorted(self.targets))


def generative_step(graph, visibility, state, action, memory, rewards):
    """Simulate one action.

    The target is static. The observation is True when the target is visible
    from the new pose, which ends the simulated episode with ``rewards.found``.
    Otherwise the step costs ``rewards.step``, or ``rewards.revisit`` when the
    new pose is in ``memory``.

    Returns
    -------
    result : StepResult

    Raises
    ------
    IllegalActionError
        If ``action`` has no edge from the current pose.
    """
    node = graph.successor(state.node, action)
    if node < 0:
        raise IllegalActionError(state.node, action)
    seen = visibility.sees(node, state.target)
    if seen:
        reward = rewards.found
    elif node in memory:
        reward = rewards.revisit
    else:
        reward = rewards.step
    return StepResult(AvsState(node, state.target), seen, reward, seen)


class AvsModel(GenerativeModel):
    """Simulator of the search task for the planner.

    Parameters
    ----------
    graph : PoseGraph
    visibility : VisibilityMatrix
    rewards : RewardSpec
    memory : frozenset
        Snapshot of the visited poses at planning time.
    """

    def __init__(self, graph, visibility, rewards=RewardSpec(), memory=frozenset()):
        self.graph = graph
        self.visibility = visibility
        self.rewards = rewards
        self.memory = memory

    def step(self, state, action, rng):
        return generative_step(self.graph, self.visibility, state, action,
                               self.memory, self.rewards)

    def legal_actions(self, state):
        return self.graph.legal_actions(state.node)


def init_belief(k, num_particles, rng, node=0):
    """Particles at ``node`` with targets uniform over ``range(k)``."""
    targets = rng.integers(k, size=num_particles)
    return Belief(AvsState(node, int(t)) for t in targets)


def update_pp(pp, fov_set, detection):
    """Elimination set after a frame; only empty frames remove locations."""
    if detection is None:
        return pp - fov_set
    return pp


def resample_belief_be(pp, node, num_particles, rng):
    """Particles at ``node`` with targets uniform over ``pp``.

    Raises
    ------
    EmptyEliminationSet
        If ``pp`` is empty.
    """
    if not pp:
        raise EmptyEliminationSet()
    locations = np.array(sorted(pp), dtype=np.int64)
    targets = locations[rng.integers(len(locations), size=num_particles)]
    return Belief(AvsState(node, int(t)) for t in targets)


def reinvigorate_belief(previous, node, observation, visibility, num_particles, rng):
    """Refill a belief from the previous particles.

    Targets are drawn from ``previous`` and kept when consistent with
    ``observation`` at ``node``. When no previous particle survives, targets
    are drawn uniformly from every consistent location.
    """
    visible = visibility.visible_from(node)
    consistent = [s.target for s in previous
                  if (s.target in visible) == observation]
    if not consistent:
        k = visibility.shape[1]
        consistent = [j for j in range(k) if (j in visible) == observation]
    if not consistent:
        consistent = list(range(visibility.shape[1]))
    consistent = np.asarray(consistent, dtype=np.int64)
    targets = consistent[rng.integers(len(consistent), size=num_particles)]
    return Belief(AvsState(node, int(t)) for t in targets)


class StepOutcome(NamedTuple):
    action: int
    node: int
    detection: object
    pp: frozenset
    field: Optional[np.ndarray]
    exit_location: Optional[int]


class SearchEpisode(object):
    """Exploration state of a single episode.

    Parameters
    ----------
    scenario : Scenario
    target : Target
    variant : PlannerVariant
    start_node : int
        Pose graph ordinal of the start pose.
    rng : numpy.random.Generator
    detector : SimulatedDetector or ScriptedDetector, optional
        Defaults to a simulated detector with the target's statistics.

    Attributes
    ----------
    node : int
        Current real pose node.
    steps : int
        Real steps taken so far, docking included.
    trajectory : list of Pose
        Poses visited, start pose first.
    pp : frozenset
        Elimination set.
    field : numpy.ndarray or None
        Probability field; maintained by the probabilistic-exit variants.
    exit_location, exit_node, exit_step
        Set once the exit condition fires.
    """

    def __init__(self, scenario, target, variant, start_node, rng, detector=None):
        self.scenario = scenario
        self.target = target
        self.variant = PlannerVariant(variant)
        self.rng = rng
        self.detector = detector if detector is not None \
            else SimulatedDetector(target.stats)

        self.node = start_node
        self.steps = 0
        self.trajectory = [scenario.graph.nodes[start_node]]
        self.memory = VisitedMemory([start_node])
        self.pp = frozenset(range(scenario.k))
        self.field = uniform_field(scenario.k) \
            if self.variant.probabilistic_exit else None
        self.threshold = ExitThreshold(scenario.exit_c, scenario.k)

        self.exit_location = None
        self.exit_node = None
        self.exit_step = None

        self.belief = None
        self.planner = None
        if self.variant.uses_planner:
            cfg = scenario.pomcp
            self.belief = init_belief(scenario.k, cfg.num_particles, rng, start_node)
            self.planner = POMCP(None, cfg)

    @property
    def exited(self):
        return self.exit_location is not None

    @property
    def remaining_steps(self):
        return self.scenario.episode_cap - self.steps

    @property
    def pose(self):
        return self.scenario.graph.nodes[self.node]

    def move(self, action):
        """Execute ``action`` in the real world and record the new pose."""
        node = self.scenario.graph.successor(self.node, action)
        if node < 0:
            raise IllegalActionError(self.node, action)
        self.node = node
        self.steps += 1
        self.trajectory.append(self.scenario.graph.nodes[node])
        self.memory.add(node)
        return node

    def choose_action(self):
        graph = self.scenario.graph
        if not self.variant.uses_planner:
            legal = graph.legal_actions(self.node)
            return legal[int(self.rng.integers(len(legal)))]
        self.planner.model = AvsModel(graph, self.scenario.visibility,
                                      self.scenario.rewards,
                                      self.memory.snapshot())
        return self.planner.plan(self.belief, self.rng)

    def step(self):
        """One real step: plan, act, detect, filter, then test the exit rule.

        Returns
        -------
        outcome : StepOutcome

        Raises
        ------
        DegeneratePosterior
        EmptyEliminationSet
        """
        scenario = self.scenario
        action = self.choose_action()

        node = self.move(action)

        fov_set = scenario.visibility.visible_from(node)
        detection = self.detector.detect(scenario.graph.nodes[node], fov_set,
                                         self.target.location, self.rng)
        seen = detection is not None

        if self.field is not None:
            likelihood = step_likelihood(fov_set, detection, self.detector.stats,
                                         scenario.grid)
            self.field = update_posterior(self.field, likelihood)

        self.pp = update_pp(self.pp, fov_set, detection)

        if self.variant.belief_by_exploration:
            self.planner.reset()
            self.belief = resample_belief_be(self.pp, node,
                                             scenario.pomcp.num_particles,
                                             self.rng)
        elif self.variant.uses_planner:
            previous = self.belief
            self.belief = self.planner.advance(
                action, seen,
                lambda count: reinvigorate_belief(previous, node, seen,
                                                  scenario.visibility, count,
                                                  self.rng))

        if self.variant.probabilistic_exit:
            location = check_exit(self.field, scenario.visibility.row(node),
                                  self.threshold)
        else:
            location = detection.location if seen else None

        if location is not None:
            self.exit_location = location
            self.exit_node = node
            self.exit_step = self.steps
            logger.debug('Exit at step %d: location %d from %s',
                         self.steps, location, scenario.graph.nodes[node])

        return StepOutcome(action, node, detection, self.pp, self.field, location)


def run_pomcp_step(episode):
    """Advance ``episode`` by one real step; see `SearchEpisode.step`."""
    return episode.step()

