"""Online POMDP planning with Monte-Carlo tree search (POMCP).

Classes
-------
PomdpConfig
    Solver settings: discount, simulation budget, exploration, depths.
StepResult
    Output of one generative-model step.
GenerativeModel
    Base class for simulators plugged into the solver.
Belief
    Unweighted particle set over hidden states.
BeliefNode
ActionNode
    Nodes of the search tree.
POMCP
    The planner: holds the search trees of the current planning session.

Functions
---------
uct_select
    Upper-confidence action selection at a belief node.
plan
    One-shot convenience wrapper around `POMCP.plan`.

Notes
-----
Simulations are sequential by default. With ``workers > 1`` the budget is
split across independent trees (root parallelisation), each driven by its
own generator seeded from the caller's generator, and root statistics are
merged after all trees finish. Results depend only on the seed, never on
thread scheduling.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import math
from typing import Any, Hashable, NamedTuple, Optional

import numpy as np


logger = logging.getLogger(__name__)


class InvalidPomdpConfig(Exception):
    def __init__(self, reason):
        msg = "Invalid POMCP configuration: {}".format(reason)
        super(InvalidPomdpConfig, self).__init__(msg)


class NoLegalAction(Exception):
    """Raised when the model reports no legal action at the root."""
    def __init__(self, state):
        msg = "No legal action available from {}".format(state)
        super(NoLegalAction, self).__init__(msg)


class EmptyBeliefError(Exception):
    def __init__(self):
        super(EmptyBeliefError, self).__init__(
            "Cannot plan from an empty belief")


@dataclass(frozen=True)
class PomdpConfig:
    """Settings of the POMCP solver.

    Parameters
    ----------
    gamma : float
        Discount factor in [0, 1).
    num_simulations : int
        Simulations per planning call, at least 1.
    uct_c : float
        UCT exploration constant, non-negative.
    max_tree_depth : int
        Depth at which tree simulations stop, at least 1 so that every
        simulation expands a root action.
    rollout_depth : int
        Maximum number of rollout steps from a new leaf.
    num_particles : int
        Belief size maintained between real steps.
    particle_floor : int, optional
        Child particle count below which the fallback resampler refills the
        belief. Defaults to 1/16 of ``num_particles``.
    workers : int
        Independent search trees per planning call; 1 is sequential.
    """
    gamma: float = 0.95
    num_simulations: int = 2 ** 10
    uct_c: float = 200.0
    max_tree_depth: int = 30
    rollout_depth: int = 30
    num_particles: int = 1024
    particle_floor: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidPomdpConfig('gamma must lie in [0, 1)')
        if self.num_simulations < 1:
            raise InvalidPomdpConfig('num_simulations must be at least 1')
        if self.uct_c < 0:
            raise InvalidPomdpConfig('uct_c must be non-negative')
        if self.max_tree_depth < 1:
            raise InvalidPomdpConfig('max_tree_depth must be at least 1')
        if self.rollout_depth < 0:
            raise InvalidPomdpConfig('rollout_depth must be non-negative')
        if self.num_particles < 1:
            raise InvalidPomdpConfig('num_particles must be at least 1')
        if self.workers < 1:
            raise InvalidPomdpConfig('workers must be at least 1')

    @property
    def floor(self):
        if self.particle_floor is not None:
            return self.particle_floor
        return max(1, self.num_particles // 16)


class StepResult(NamedTuple):
    state: Any
    observation: Hashable
    reward: float
    terminal: bool


class GenerativeModel(object):
    """Base class for simulators used by `POMCP`.

    Notes
    -----
    Subclasses override `step` and `legal_actions`. `step` must depend only
    on its arguments and the generator stream so that planning is
    reproducible, and must be safe to call from several threads.
    """

    def step(self, state, action, rng):
        """Sample a successor, an observation and a reward.

        Returns
        -------
        result : StepResult
        """
        raise NotImplementedError

    def legal_actions(self, state):
        """Actions available in ``state`` in ordinal order."""
        raise NotImplementedError

    def sample_rollout_action(self, state, rng):
        """Rollout policy; uniform over legal actions by default."""
        legal = self.legal_actions(state)
        return legal[int(rng.integers(len(legal)))]


class Belief(object):
    """Unweighted particle filter.

    Parameters
    ----------
    particles : iterable
        States; duplicates encode probability mass.
    """

    def __init__(self, particles=None):
        self.particles = list(particles) if particles is not None else []

    def sample(self, rng):
        return self.particles[int(rng.integers(len(self.particles)))]

    def __len__(self):
        return len(self.particles)

    def __iter__(self):
        return iter(self.particles)

    def __bool__(self):
        return len(self.particles) > 0

    def __repr__(self):
        return 'Belief({} particles)'.format(len(self.particles))


class ActionNode(object):
    """Statistics of one action at a belief node."""

    __slots__ = ('visits', 'value', 'children')

    def __init__(self):
        self.visits = 0
        self.value = 0.0
        self.children = {}


class BeliefNode(object):
    """History node holding a visit count, particles and action children."""

    __slots__ = ('visits', 'particles', 'children')

    def __init__(self, particles=None):
        self.visits = 0
        self.particles = particles if particles is not None else []
        self.children = {}

    def expand(self, actions):
        for a in actions:
            if a not in self.children:
                self.children[a] = ActionNode()


def uct_select(node, uct_c, actions=None):
    """Select an action at ``node`` by the UCT rule.

    Unvisited actions come first. Otherwise the action maximising
    ``Q + uct_c * sqrt(ln N(h) / N(h, a))`` is returned. Ties go to the
    lowest ordinal.

    Parameters
    ----------
    node : BeliefNode
    uct_c : float
    actions : sequence, optional
        Restrict the choice to these actions. Defaults to all children.

    Returns
    -------
    action
    """
    if actions is None:
        actions = node.children.keys()
    actions = sorted(actions)

    for a in actions:
        if node.children[a].visits == 0:
            return a

    log_n = math.log(node.visits) if node.visits > 0 else 0.0
    best, best_score = None, -math.inf
    for a in actions:
        child = node.children[a]
        score = child.value + uct_c * math.sqrt(log_n / child.visits)
        if score > best_score:
            best, best_score = a, score
    return best


class POMCP(object):
    """Partially observable Monte-Carlo planner.

    Parameters
    ----------
    model : GenerativeModel
        Simulator of the environment. May be replaced between planning
        calls (e.g. to refresh a memory snapshot).
    config : PomdpConfig

    Attributes
    ----------
    trees : list of BeliefNode
        Roots of the current planning session; empty before `plan`.
    on_backup : callable, optional
        Called as ``on_backup(action_node, total)`` after every backup.
    """

    def __init__(self, model, config=None):
        self.model = model
        self.config = config if config is not None else PomdpConfig()
        self.trees = []
        self.on_backup = None

    def plan(self, belief, rng):
        """Search from ``belief`` and return the greedy root action.

        Parameters
        ----------
        belief : Belief
            Non-empty particle set; each simulation starts from a particle
            sampled uniformly.
        rng : numpy.random.Generator

        Returns
        -------
        action
            Root action with the highest Q; ties go to the lowest ordinal.

        Raises
        ------
        EmptyBeliefError
            If ``belief`` holds no particles.
        NoLegalAction
            If the model reports no legal action at the root.
        """
        if not belief:
            raise EmptyBeliefError()
        first = belief.particles[0]
        legal = self.model.legal_actions(first)
        if not legal:
            raise NoLegalAction(first)

        cfg = self.config
        workers = min(cfg.workers, cfg.num_simulations)
        if workers == 1:
            root = BeliefNode(belief.particles)
            self._search(root, belief, cfg.num_simulations, rng)
            self.trees = [root]
        else:
            entropy = int(rng.integers(0, 2 ** 63 - 1))
            streams = [np.random.default_rng(s) for s in
                       np.random.SeedSequence(entropy).spawn(workers)]
            budgets = [cfg.num_simulations // workers] * workers
            for w in range(cfg.num_simulations % workers):
                budgets[w] += 1
            roots = [BeliefNode(belief.particles) for _ in range(workers)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(
                    lambda args: self._search(args[0], belief, args[1], args[2]),
                    zip(roots, budgets, streams)))
            self.trees = roots

        stats = self.root_statistics()
        if len(legal) == 1 and legal[0] not in stats:
            return legal[0]
        best, best_q = None, -math.inf
        for a in sorted(stats):
            visits, q = stats[a]
            if visits > 0 and q > best_q:
                best, best_q = a, q
        if best is None:
            best = min(legal)
            logger.warning('No root action was visited; falling back to %s', best)
        else:
            logger.debug('Planned %s (Q=%.3f) over %d simulations',
                         best, best_q, cfg.num_simulations)
        return best

    def _search(self, root, belief, budget, rng):
        for _ in range(budget):
            state = belief.sample(rng)
            self.simulate(state, root, 0, rng)
        return root

    def root_statistics(self):
        """Merged ``{action: (N, Q)}`` over all trees of the session."""
        merged = {}
        for root in self.trees:
            for a, child in root.children.items():
                n, total = merged.get(a, (0, 0.0))
                merged[a] = (n + child.visits, total + child.visits * child.value)
        return {a: (n, total / n if n > 0 else 0.0)
                for a, (n, total) in merged.items()}

    def simulate(self, state, node, depth, rng):
        """Run one tree simulation from ``state`` at ``node``.

        Returns
        -------
        total : float
            Discounted return of the simulation from this depth.
        """
        cfg = self.config
        if depth >= cfg.max_tree_depth:
            return 0.0

        legal = self.model.legal_actions(state)
        node.expand(legal)
        action = uct_select(node, cfg.uct_c, legal)
        result = self.model.step(state, action, rng)

        action_node = node.children[action]
        child = action_node.children.get(result.observation)
        created = child is None
        if created:
            child = BeliefNode()
            action_node.children[result.observation] = child
        child.particles.append(result.state)

        if result.terminal:
            total = result.reward
        elif created:
            total = result.reward + cfg.gamma * self.rollout(result.state, 0, rng)
        else:
            total = result.reward + cfg.gamma * self.simulate(
                result.state, child, depth + 1, rng)

        node.visits += 1
        action_node.visits += 1
        action_node.value += (total - action_node.value) / action_node.visits
        if self.on_backup is not None:
            self.on_backup(action_node, total)
        return total

    def rollout(self, state, depth, rng):
        """Discounted return of the rollout policy; updates no statistics.

        Parameters
        ----------
        state
            Start state.
        depth : int
            Rollout steps already taken; the rollout stops at
            ``config.rollout_depth`` or on a terminal step.
        """
        cfg = self.config
        total, discount = 0.0, 1.0
        while depth < cfg.rollout_depth:
            action = self.model.sample_rollout_action(state, rng)
            result = self.model.step(state, action, rng)
            total += discount * result.reward
            if result.terminal:
                break
            discount *= cfg.gamma
            state = result.state
            depth += 1
        return total

    def advance(self, action, observation, fallback):
        """Belief after executing ``action`` and observing ``observation``.

        Parameters
        ----------
        action
        observation
        fallback : callable
            ``fallback(count)`` returns a `Belief` of ``count`` particles;
            used when the matching child holds fewer particles than the
            configured floor.

        Returns
        -------
        belief : Belief
            The child's particles, topped up by ``fallback`` to
            ``config.num_particles`` when below the floor. The search trees
            are discarded.
        """
        particles = []
        for root in self.trees:
            action_node = root.children.get(action)
            if action_node is None:
                continue
            child = action_node.children.get(observation)
            if child is not None:
                particles.extend(child.particles)
        self.trees = []

        if len(particles) >= self.config.floor:
            return Belief(particles)

        missing = self.config.num_particles - len(particles)
        logger.debug('Child belief has %d particles; refilling %d',
                     len(particles), missing)
        refill = fallback(missing) if missing > 0 else Belief()
        return Belief(particles + refill.particles)

    def reset(self):
        """Discard the current planning session."""
        self.trees = []


def plan(belief, model, config, rng):
    """Plan a single action from ``belief`` with a fresh `POMCP`."""
    return POMCP(model, config).plan(belief, rng)
