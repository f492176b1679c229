import math
import os

import numpy as np
import pytest

from avsearch.detection import (Detection, DetectorStats, ScriptedDetector,
                                step_likelihood, uniform_field,
                                update_posterior)
from avsearch.domain import (AvsModel, AvsState, EmptyEliminationSet,
                             IllegalActionError, InvalidRewardSpec,
                             PlannerVariant, RewardSpec, Scenario,
                             SearchEpisode, Target, VisitedMemory,
                             generative_step, init_belief,
                             reinvigorate_belief, resample_belief_be,
                             run_pomcp_step, update_pp)
from avsearch.environment import (ACTIONS, Action, FovParams, Pose,
                                  build_pose_graph, compute_visibility,
                                  load_map, read_map)
from avsearch.pomcp import PomdpConfig


FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')
SMALL_POMCP = PomdpConfig(num_simulations=32, num_particles=32,
                          max_tree_depth=10, rollout_depth=10)


def make_scenario(grid, fov=FovParams(), location=0, stats=DetectorStats(),
                  start=None, exit_c=10, episode_cap=200, pomcp=SMALL_POMCP):
    graph = build_pose_graph(grid)
    visibility = compute_visibility(grid, graph, fov)
    target = Target('t{}'.format(location), location, stats)
    return Scenario(name='test', grid=grid, graph=graph, visibility=visibility,
                    fov=fov, targets={target.id: target}, start_pose=start,
                    episode_cap=episode_cap, pomcp=pomcp, exit_c=exit_c)


def start_episode(scenario, variant, seed=0, detector=None):
    target = next(iter(scenario.targets.values()))
    start = scenario.graph.index(scenario.start_pose)
    return SearchEpisode(scenario, target, variant, start,
                         np.random.default_rng(seed), detector)


class TestGenerativeStep(object):
    def setup_method(self):
        self.grid = load_map('..o')
        self.graph = build_pose_graph(self.grid)
        self.visibility = compute_visibility(self.grid, self.graph, FovParams())

    def test_transition_table(self):
        # (pose, action) -> successor pose; missing pairs are illegal.
        table = {
            (Pose(0, 0, 0), Action.MOVE_FORWARD): Pose(1, 0, 0),
            (Pose(0, 0, 0), Action.ROTATE_CLOCKWISE): Pose(0, 0, 270),
            (Pose(0, 0, 0), Action.ROTATE_COUNTER_CLOCKWISE): Pose(0, 0, 90),
            (Pose(0, 0, 90), Action.ROTATE_CLOCKWISE): Pose(0, 0, 0),
            (Pose(0, 0, 90), Action.ROTATE_COUNTER_CLOCKWISE): Pose(0, 0, 180),
            (Pose(0, 0, 180), Action.MOVE_BACKWARD): Pose(1, 0, 180),
            (Pose(0, 0, 180), Action.ROTATE_CLOCKWISE): Pose(0, 0, 90),
            (Pose(0, 0, 180), Action.ROTATE_COUNTER_CLOCKWISE): Pose(0, 0, 270),
            (Pose(0, 0, 270), Action.ROTATE_CLOCKWISE): Pose(0, 0, 180),
            (Pose(0, 0, 270), Action.ROTATE_COUNTER_CLOCKWISE): Pose(0, 0, 0),
            (Pose(1, 0, 0), Action.MOVE_BACKWARD): Pose(0, 0, 0),
            (Pose(1, 0, 0), Action.ROTATE_CLOCKWISE): Pose(1, 0, 270),
            (Pose(1, 0, 0), Action.ROTATE_COUNTER_CLOCKWISE): Pose(1, 0, 90),
            (Pose(1, 0, 90), Action.ROTATE_CLOCKWISE): Pose(1, 0, 0),
            (Pose(1, 0, 90), Action.ROTATE_COUNTER_CLOCKWISE): Pose(1, 0, 180),
            (Pose(1, 0, 180), Action.MOVE_FORWARD): Pose(0, 0, 180),
            (Pose(1, 0, 180), Action.ROTATE_CLOCKWISE): Pose(1, 0, 90),
            (Pose(1, 0, 180), Action.ROTATE_COUNTER_CLOCKWISE): Pose(1, 0, 270),
            (Pose(1, 0, 270), Action.ROTATE_CLOCKWISE): Pose(1, 0, 180),
            (Pose(1, 0, 270), Action.ROTATE_COUNTER_CLOCKWISE): Pose(1, 0, 0),
        }
        seeing = {Pose(0, 0, 0), Pose(1, 0, 0)}
        rewards = RewardSpec()
        model = AvsModel(self.graph, self.visibility, rewards)

        for i, pose in enumerate(self.graph.nodes):
            state = AvsState(i, 0)
            legal = model.legal_actions(state)
            assert set(legal) == {a for (p, a) in table if p == pose}
            for action in ACTIONS:
                if action not in legal:
                    with pytest.raises(IllegalActionError):
                        model.step(state, action, None)
                    continue
                result = model.step(state, action, None)
                expected = table[(pose, action)]
                assert self.graph.nodes[result.state.node] == expected
                assert result.state.target == 0
                assert result.observation == (expected in seeing)
                assert result.terminal == (expected in seeing)
                assert result.reward == (rewards.found if expected in seeing
                                         else rewards.step)

    def test_revisit(self):
        rewards = RewardSpec()
        start = self.graph.index(Pose(0, 0, 0))
        north = self.graph.index(Pose(0, 0, 90))
        memory = frozenset({start, north})

        result = generative_step(self.graph, self.visibility, AvsState(start, 0),
                                 Action.ROTATE_COUNTER_CLOCKWISE, memory, rewards)
        assert result.reward == rewards.revisit
        assert not result.terminal

        # Seeing the target outweighs the revisit penalty.
        result = generative_step(self.graph, self.visibility, AvsState(north, 0),
                                 Action.ROTATE_CLOCKWISE, memory, rewards)
        assert result.reward == rewards.found
        assert result.terminal

    def test_rewards(self):
        assert RewardSpec() == RewardSpec(100.0, -1.0, -10.0)
        for found, step, revisit in ((-1, -1, -10), (100, 1, -10), (100, -20, -10),
                                     (100, -1, -1)):
            with pytest.raises(InvalidRewardSpec):
                RewardSpec(found, step, revisit)


class TestLegalActions(object):
    def test_examples(self):
        grid = read_map(os.path.join(FIXTURES, 'room.map'))
        graph = build_pose_graph(grid)
        model = AvsModel(graph, compute_visibility(grid, graph, FovParams()))
        assert model.legal_actions(AvsState(graph.index(Pose(2, 2, 0)), 0)) == ACTIONS

        corridor = load_map('..o')
        graph = build_pose_graph(corridor)
        model = AvsModel(graph, compute_visibility(corridor, graph, FovParams()))
        assert model.legal_actions(AvsState(graph.index(Pose(0, 0, 90)), 0)) == \
            (Action.ROTATE_CLOCKWISE, Action.ROTATE_COUNTER_CLOCKWISE)

    def test_graph_agreement(self):
        rng = np.random.default_rng(0)
        cells = rng.choice(3, size=(6, 6), p=(0.2, 0.6, 0.2))
        cells[0, 0], cells[5, 5] = 1, 2
        grid = load_map('\n'.join(''.join('#.o'[c] for c in row) for row in cells))
        graph = build_pose_graph(grid)
        model = AvsModel(graph, compute_visibility(grid, graph, FovParams()))
        for i in range(graph.n):
            legal = model.legal_actions(AvsState(i, 0))
            assert Action.ROTATE_CLOCKWISE in legal
            assert Action.ROTATE_COUNTER_CLOCKWISE in legal
            assert set(legal) == {a for a in ACTIONS if graph.successor(i, a) >= 0}
            assert {graph.successor(i, a) for a in legal} == \
                set(graph.digraph.successors(i))


class TestBeliefs(object):
    def test_init_belief(self):
        rng = np.random.default_rng(1)
        belief = init_belief(1, 100, rng, node=7)
        assert set(belief) == {AvsState(7, 0)}

        belief = init_belief(4, 10000, rng, node=3)
        assert len(belief) == 10000
        assert all(s.node == 3 for s in belief)
        counts = np.bincount([s.target for s in belief], minlength=4)
        assert np.all(np.abs(counts / 10000 - 0.25) <= 0.015)

    def test_resample(self):
        rng = np.random.default_rng(2)
        belief = resample_belief_be(frozenset({7}), 5, 50, rng)
        assert set(belief) == {AvsState(5, 7)}

        belief = resample_belief_be(frozenset({1, 2}), 5, 10000, rng)
        targets = np.array([s.target for s in belief])
        assert set(targets.tolist()) <= {1, 2}
        assert abs(np.mean(targets == 1) - 0.5) <= 0.015

        with pytest.raises(EmptyEliminationSet):
            resample_belief_be(frozenset(), 5, 10, rng)

    def test_reinvigorate(self):
        grid = read_map(os.path.join(FIXTURES, 'room.map'))
        graph = build_pose_graph(grid)
        visibility = compute_visibility(grid, graph, FovParams(45, 3))
        rng = np.random.default_rng(3)
        previous = init_belief(grid.k, 200, rng, node=0)
        for node in range(0, graph.n, 7):
            visible = visibility.visible_from(node)
            for observation in (False, True):
                if observation and not visible:
                    continue
                belief = reinvigorate_belief(previous, node, observation,
                                             visibility, 64, rng)
                assert len(belief) == 64
                for s in belief:
                    assert s.node == node
                    assert (s.target in visible) == observation

    def test_update_pp(self):
        pp = frozenset(range(10))
        assert update_pp(pp, frozenset({2, 3}), None) == pp - {2, 3}
        assert update_pp(pp, frozenset(), None) == pp
        assert update_pp(pp, frozenset({2, 3}), Detection(2, 0.95)) == pp

    def test_tour(self):
        grid = read_map(os.path.join(FIXTURES, 'room.map'))
        graph = build_pose_graph(grid)
        visibility = compute_visibility(grid, graph, FovParams())
        rng = np.random.default_rng(4)
        for _ in range(10):
            pp = frozenset(range(grid.k))
            seen = set()
            for node in rng.choice(graph.n, size=5, replace=False):
                fov_set = visibility.visible_from(int(node))
                previous = pp
                pp = update_pp(pp, fov_set, None)
                seen |= fov_set
                assert pp <= previous
            assert pp == frozenset(range(grid.k)) - seen

    def test_memory(self):
        memory = VisitedMemory([1])
        memory.add(4)
        memory.add(4)
        snapshot = memory.snapshot()
        memory.add(9)
        assert snapshot == {1, 4}
        assert 9 in memory and len(memory) == 3
        memory.reset()
        assert len(memory) == 0 and 1 not in memory


def test_no_detection_ratio():
    grid = read_map(os.path.join(FIXTURES, 'room.map'))
    graph = build_pose_graph(grid)
    visibility = compute_visibility(grid, graph, FovParams())
    stats = DetectorStats(precision=0.8, recall=0.8)
    for node in range(graph.n):
        fov_set = visibility.visible_from(node)
        if not fov_set or len(fov_set) == grid.k:
            continue
        prior = uniform_field(grid.k)
        posterior = update_posterior(prior, step_likelihood(fov_set, None, stats, grid))
        inside = next(iter(fov_set))
        outside = next(j for j in range(grid.k) if j not in fov_set)
        assert posterior[inside] / posterior[outside] == pytest.approx(0.25)


def test_planner_variants():
    lattice = {
        'random': (False, False, False),
        'pomp': (True, False, False),
        'pomp-be': (True, True, False),
        'pomp-pd': (True, False, True),
        'pomp-be-pd': (True, True, True),
    }
    for name, (planner, be, pd) in lattice.items():
        variant = PlannerVariant(name)
        assert str(variant) == name
        assert variant.uses_planner == planner
        assert variant.belief_by_exploration == be
        assert variant.probabilistic_exit == pd


class TestSearchEpisode(object):
    def wide(self, **kwargs):
        # Every pose sees both candidates, two cells apart.
        return make_scenario(load_map('o.o'), fov=FovParams(180, 5), location=1,
                             start=Pose(1, 0, 90), **kwargs)

    def test_posterior_exit(self):
        for variant in ('pomp-pd', 'pomp-be-pd'):
            episode = start_episode(self.wide(exit_c=1), variant)
            outcome = run_pomcp_step(episode)
            assert outcome.detection.location == 1
            assert outcome.field[1] == pytest.approx(1 / (1 + math.exp(-2)))
            assert episode.exited and episode.exit_step == 1
            assert episode.exit_location == 1

            episode = start_episode(self.wide(exit_c=10), variant)
            fields = []
            while not episode.exited:
                fields.append(run_pomcp_step(episode).field[1])
            assert episode.exit_step == 3
            assert fields == pytest.approx(
                [1 / (1 + math.exp(-2 * n)) for n in (1, 2, 3)])

    def test_false_positive(self):
        frames = [Detection(0, 0.95)]
        scenario = self.wide(stats=DetectorStats(fp_rate=0.1))

        episode = start_episode(scenario, 'pomp', detector=ScriptedDetector(frames))
        run_pomcp_step(episode)
        assert episode.exited
        assert episode.exit_location == 0 and episode.exit_step == 1

        episode = start_episode(scenario, 'pomp-pd', detector=ScriptedDetector(frames))
        outcome = run_pomcp_step(episode)
        assert not episode.exited
        assert outcome.field[0] < episode.threshold.tau

    def test_empty_elimination_set(self):
        scenario = self.wide(stats=DetectorStats(recall=0.0))
        episode = start_episode(scenario, 'pomp-be')
        with pytest.raises(EmptyEliminationSet):
            run_pomcp_step(episode)

    def test_belief_by_exploration(self):
        grid = read_map(os.path.join(FIXTURES, 'room.map'))
        scenario = make_scenario(grid, fov=FovParams(45, 3), location=3,
                                 start=Pose(3, 4, 90))
        for variant in ('pomp-be', 'pomp-be-pd'):
            episode = start_episode(scenario, variant, seed=5)
            previous = episode.pp
            for _ in range(10):
                if episode.exited:
                    break
                outcome = run_pomcp_step(episode)
                assert outcome.pp <= previous
                assert 3 in outcome.pp
                assert {s.target for s in episode.belief} <= outcome.pp
                assert all(s.node == episode.node for s in episode.belief)
                previous = outcome.pp

    def test_elimination_monotone(self):
        grid = read_map(os.path.join(FIXTURES, 'room.map'))
        starts = (Pose(3, 4, 90), Pose(1, 2, 0), Pose(5, 5, 180), Pose(2, 6, 270))
        scenarios = [make_scenario(grid, fov=FovParams(45, 3), location=j, start=s)
                     for j in range(grid.k) for s in starts]
        cases = 0
        for seed in range(1000):
            if cases >= 1000:
                break
            scenario = scenarios[seed % len(scenarios)]
            episode = start_episode(scenario, 'random', seed=seed)
            previous = episode.pp
            for _ in range(40):
                if episode.exited:
                    break
                outcome = run_pomcp_step(episode)
                assert outcome.pp <= previous
                assert episode.target.location in outcome.pp
                if outcome.detection is None:
                    fov_set = scenario.visibility.visible_from(outcome.node)
                    assert not outcome.pp & fov_set
                else:
                    assert outcome.pp == previous
                previous = outcome.pp
                cases += 1
        assert cases >= 1000

    def test_belief_within_elimination_set(self):
        grid = read_map(os.path.join(FIXTURES, 'room.map'))
        cheap = PomdpConfig(num_simulations=8, num_particles=16,
                            max_tree_depth=4, rollout_depth=4)
        starts = (Pose(3, 4, 90), Pose(1, 2, 0), Pose(5, 5, 180), Pose(2, 6, 270))
        scenarios = [make_scenario(grid, fov=FovParams(30, 2), location=j,
                                   start=s, episode_cap=30, pomcp=cheap)
                     for j in range(grid.k) for s in starts]
        cases = 0
        for seed in range(100):
            scenario = scenarios[seed % len(scenarios)]
            episode = start_episode(scenario, 'pomp-be', seed=seed)
            for _ in range(scenario.episode_cap):
                if episode.exited:
                    break
                outcome = run_pomcp_step(episode)
                assert len(episode.belief) == cheap.num_particles
                assert {s.target for s in episode.belief} <= outcome.pp
                assert all(s.node == outcome.node for s in episode.belief)
                cases += len(episode.belief)
        assert cases >= 1000

    def test_bookkeeping(self):
        grid = read_map(os.path.join(FIXTURES, 'room.map'))
        scenario = make_scenario(grid, location=0, start=Pose(3, 4, 90))
        for variant in PlannerVariant:
            episode = start_episode(scenario, variant, seed=6)
            assert (episode.belief is None) == (not variant.uses_planner)
            assert (episode.field is None) == (not variant.probabilistic_exit)
            for _ in range(5):
                if episode.exited:
                    break
                action = episode.choose_action()
                assert action in scenario.graph.legal_actions(episode.node)
                outcome = run_pomcp_step(episode)
                assert episode.pose == scenario.graph.nodes[outcome.node]
                if outcome.field is not None:
                    assert outcome.field.sum() == pytest.approx(1.0, abs=1e-12)
            assert len(episode.trajectory) == episode.steps + 1
            assert episode.remaining_steps == scenario.episode_cap - episode.steps
            for pose in episode.trajectory:
                assert scenario.graph.index(pose) in episode.memory

    def test_illegal_move(self):
        scenario = make_scenario(load_map('..o'), start=Pose(0, 0, 90))
        episode = start_episode(scenario, 'random')
        with pytest.raises(IllegalActionError):
            episode.move(Action.MOVE_FORWARD)
        assert episode.steps == 0

    def test_scenario_cap(self):
        with pytest.raises(ValueError):
            make_scenario(load_map('..o'), episode_cap=0)
