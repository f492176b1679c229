"""Episode orchestration and suite execution.

Functions
---------
goal_pose_set
    Poses counting as arrival at a target.
solvable_locations
    Candidate locations with a non-empty goal set.
shortest_possible
    Oracle number of actions from a pose to a goal set.
judge_success
    Whether an episode ended on a goal pose.
classify_failure
    Failure class of an unsuccessful episode.
run_episode
    Run exploration and docking for one target and seed.
build_scenario
build_scenarios
    Turn configuration sections into `Scenario` objects.
run_suite
    Run every (scenario, variant, target, seed) episode of a configuration.
write_heatmap
    Write a probability field as a PGM image.
read_metrics_json
    Load a suite's metrics.json.
"""
import json
import logging
import os

import networkx as nx
import numpy as np
from tqdm import tqdm

from avsearch.configuration import (InvalidConfigError, parse_exit_constant,
                                    parse_seeds, parse_variants)
from avsearch.detection import AllZeroField, DegeneratePosterior, DetectorStats
from avsearch.docking import (CapExceeded, UnobservableTarget, Unreachable,
                              destination_pose, execute_docking, shortest_path)
from avsearch.domain import (EmptyEliminationSet, PlannerVariant, RewardSpec,
                             Scenario, SearchEpisode, Target)
from avsearch.environment import (FovParams, Pose, build_pose_graph,
                                  compute_visibility, read_map)
from avsearch.managers import create_manager
from avsearch.mapgen import generate_map, generate_preset
from avsearch.metrics import (EpisodeResult, FailureClass, summarize,
                              write_results_csv)
from avsearch.pomcp import PomdpConfig
from avsearch.utils import AvsDecoder, AvsEncoder


logger = logging.getLogger(__name__)

EPISODE_FAILURES = (DegeneratePosterior, EmptyEliminationSet, AllZeroField,
                    UnobservableTarget, Unreachable, CapExceeded)
PGM_MAXVAL = 65535


def goal_pose_set(grid, graph, visibility, location, d_goal):
    """Nodes seeing ``location`` from at most ``d_goal`` cells away."""
    tx, ty = grid.candidate_cell(location)
    goals = set()
    for i in visibility.observers(location):
        pose = graph.nodes[int(i)]
        if np.hypot(pose.x - tx, pose.y - ty) <= d_goal + 1e-9:
            goals.add(int(i))
    return frozenset(goals)


def solvable_locations(grid, graph, visibility, d_goal):
    return [j for j in range(grid.k)
            if goal_pose_set(grid, graph, visibility, j, d_goal)]


def _goal_distances(graph, goals):
    if not goals:
        return {}
    return nx.multi_source_dijkstra_path_length(
        graph.digraph.reverse(copy=False), set(goals))


def shortest_possible(graph, start_node, goals):
    """Fewest actions from ``start_node`` to any node of ``goals``.

    Returns
    -------
    length : int or None
        None when no goal is reachable.
    """
    length = _goal_distances(graph, goals).get(start_node)
    return int(length) if length is not None else None


def judge_success(final_node, goals, within_cap=True):
    return within_cap and final_node in goals


def classify_failure(exit_node, target_location, visibility):
    """Failure class of an unsuccessful episode.

    Parameters
    ----------
    exit_node : int or None
        Pose node where the exit condition fired, None if it never did.
    target_location : int
    visibility : VisibilityMatrix

    Returns
    -------
    failure : FailureClass
        ``LOCALISATION`` if exploration ended at a pose not seeing the
        target, ``DOCKING`` if it ended correctly but the agent did not
        arrive, ``OTHER`` if exploration never ended.
    """
    if exit_node is None:
        return FailureClass.OTHER
    if not visibility.sees(exit_node, target_location):
        return FailureClass.LOCALISATION
    return FailureClass.DOCKING


def sample_start(graph, goals, rng):
    """Uniformly chosen node from which a goal pose is reachable."""
    reachable = sorted(_goal_distances(graph, goals))
    if not reachable:
        return int(rng.integers(graph.n))
    return int(reachable[int(rng.integers(len(reachable)))])


def write_heatmap(path, grid, field):
    """Write ``field`` as a plain PGM image at map resolution.

    Candidate cells carry ``round(65535 * p)``; every other cell is 0.
    """
    values = np.zeros((grid.height, grid.width), dtype=np.int64)
    xs, ys = grid.candidate_cells[:, 0], grid.candidate_cells[:, 1]
    values[ys, xs] = np.rint(PGM_MAXVAL * np.asarray(field)).astype(np.int64)
    lines = ['P2', '{} {}'.format(grid.width, grid.height), str(PGM_MAXVAL)]
    lines += [' '.join(str(v) for v in row) for row in values]
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w') as f:
        f.write('\n'.join(lines) + '\n')


def run_episode(scenario, target_id, variant, seed, heatmap_dir=None,
                detector=None):
    """Search for one target, dock and judge the outcome.

    Parameters
    ----------
    scenario : Scenario
    target_id : str
    variant : PlannerVariant or str
    seed : int
        Seeds every random choice of the episode, start pose included.
    heatmap_dir : str, optional
        When set, the probability field is written after every exploration
        step to ``<heatmap_dir>/step_<t>.pgm``.
    detector : optional
        Replaces the simulated detector, e.g. with a scripted one.

    Returns
    -------
    result : EpisodeResult
        Failures of the search are classified, never raised.
    """
    variant = PlannerVariant(variant)
    target = scenario.targets[target_id]
    graph, visibility = scenario.graph, scenario.visibility
    rng = np.random.default_rng(seed)

    goals = goal_pose_set(scenario.grid, graph, visibility, target.location,
                          scenario.d_goal)
    if scenario.start_pose is not None:
        start = graph.index(scenario.start_pose)
    else:
        start = sample_start(graph, goals, rng)
    shortest = shortest_possible(graph, start, goals)

    episode = SearchEpisode(scenario, target, variant, start, rng, detector)
    success = False
    reason = ''
    docking_steps = 0
    try:
        while not episode.exited and episode.remaining_steps > 0:
            episode.step()
            if heatmap_dir is not None and episode.field is not None:
                write_heatmap(
                    os.path.join(heatmap_dir, 'step_{:03d}.pgm'.format(episode.steps)),
                    scenario.grid, episode.field)

        if episode.exited:
            destination = destination_pose(episode.exit_location, graph,
                                           visibility, scenario.grid)
            plan = shortest_path(graph, episode.pose, destination)
            docking_start = episode.steps
            try:
                execute_docking(plan, episode)
            finally:
                docking_steps = episode.steps - docking_start
            success = judge_success(episode.node, goals)
            if not success:
                reason = 'stopped outside the goal set'
        else:
            reason = 'time limit reached without exit'
    except EPISODE_FAILURES as e:
        reason = str(e)

    failure = None if success else classify_failure(
        episode.exit_node, target.location, visibility)

    result = EpisodeResult(
        scenario=scenario.name,
        variant=variant.value,
        target=target.id,
        seed=seed,
        success=success,
        steps_taken=episode.steps,
        shortest_possible=shortest,
        failure_class=failure,
        trajectory=list(episode.trajectory),
        exit_step=episode.exit_step,
        exit_location=episode.exit_location,
        docking_steps=docking_steps,
        detector_calls=episode.detector.calls,
        final_posterior_max=float(episode.field.max())
        if episode.field is not None else None,
        preset=scenario.preset,
        reason=reason,
    )
    logger.info('%s/%s/%s seed %d: %s after %d steps (shortest %s)%s',
                scenario.name, variant.value, target.id, seed,
                'success' if success else failure, episode.steps, shortest,
                ' - ' + reason if reason else '')
    return result


def run_episode_task(scenario, target_id, variant, seed, heatmap_dir=None):
    """Picklable task entry point for the managers."""
    return run_episode(scenario, target_id, variant, seed, heatmap_dir=heatmap_dir)


def _detector_stats(config, target_id):
    options = config.detector_options(target_id)
    scores = (options['score_low'], options['score_high'])
    return DetectorStats(
        precision=options['precision'],
        recall=options['recall'],
        fp_rate=options['fp_rate'],
        sigma=options['sigma'],
        score_threshold=options['score_threshold'],
        tp_scores=scores,
        fp_scores=scores,
        likelihood_convention=options['likelihood_convention'],
    )


def _pomdp_config(config, sequential=False):
    p = config.pomcp
    return PomdpConfig(
        gamma=p.gamma,
        num_simulations=p.simulations,
        uct_c=p.uct_c,
        max_tree_depth=p.max_tree_depth,
        rollout_depth=p.rollout_depth,
        num_particles=p.particles,
        workers=1 if sequential else p.workers,
    )


def _load_grid(name, group, config):
    section = 'scenario:' + name
    cell_size = config.map.cell_size
    if group.map:
        path = group.map if os.path.isabs(group.map) \
            else os.path.join(config.directory, group.map)
        return read_map(path, cell_size=cell_size), None
    if group.preset:
        return generate_preset(group.preset, group.seed, cell_size), group.preset
    if group.width > 0 and group.height > 0:
        return generate_map(group.width, group.height, group.rooms,
                            group.density, group.seed, cell_size), None
    raise InvalidConfigError(section, 'map', 'one of map, preset or width/height is required')


def _parse_ints(section, option, text):
    try:
        return [int(v) for v in text.replace(',', ' ').split()]
    except ValueError:
        raise InvalidConfigError(section, option, 'expected integers, got {!r}'.format(text))


def build_scenario(name, group, config, sequential_planner=False):
    """Build a `Scenario` from a ``[scenario:<name>]`` section.

    Targets are the listed candidate indices or, when none are listed,
    ``num_targets`` locations drawn with the scenario seed among those with
    a non-empty goal set. Target ids are ``t<index>``.

    Raises
    ------
    InvalidConfigError
        On a missing map, out-of-range targets or an unknown start pose.
    """
    section = 'scenario:' + name
    grid, preset = _load_grid(name, group, config)
    graph = build_pose_graph(grid, config.map.delta_theta)
    fov = FovParams(config.fov.half_angle, config.fov.max_range)
    visibility = compute_visibility(grid, graph, fov)
    d_goal = config.protocol.d_goal

    if group.targets:
        locations = _parse_ints(section, 'targets', group.targets)
        for j in locations:
            if not 0 <= j < grid.k:
                raise InvalidConfigError(section, 'targets',
                                         'location {} outside 0..{}'.format(j, grid.k - 1))
    else:
        solvable = solvable_locations(grid, graph, visibility, d_goal)
        count = min(group.num_targets, len(solvable))
        rng = np.random.default_rng(group.seed)
        locations = sorted(int(j) for j in rng.choice(solvable, size=count, replace=False)) \
            if count > 0 else []

    targets = {}
    for j in locations:
        target_id = 't{}'.format(j)
        targets[target_id] = Target(target_id, j, _detector_stats(config, target_id))

    start = None
    if group.start:
        values = _parse_ints(section, 'start', group.start)
        if len(values) != 3 or Pose(*values) not in graph:
            raise InvalidConfigError(section, 'start',
                                     '{!r} is not a free pose'.format(group.start))
        start = Pose(*values)

    scenario = Scenario(
        name=name,
        grid=grid,
        graph=graph,
        visibility=visibility,
        fov=fov,
        targets=targets,
        start_pose=start,
        rewards=RewardSpec(config.rewards.found, config.rewards.step,
                           config.rewards.revisit),
        episode_cap=config.protocol.episode_cap,
        pomcp=_pomdp_config(config, sequential_planner),
        exit_c=parse_exit_constant(config.exit.c),
        d_goal=d_goal,
        preset=preset,
    )
    logger.info('Scenario %s: %dx%d map, k=%d, %d poses, targets %s',
                name, grid.width, grid.height, grid.k, graph.n,
                ', '.join(targets) or '-')
    return scenario


def build_scenarios(config, sequential_planner=False):
    return [build_scenario(name, group, config, sequential_planner)
            for name, group in config.scenarios.items()]


def _tasks(scenarios, variants, seeds, heatmap_root):
    for scenario in scenarios:
        for variant in variants:
            for target_id in scenario.targets:
                for seed in seeds:
                    tag = '/'.join([scenario.name, variant.value, target_id, str(seed)])
                    heatmap_dir = os.path.join(heatmap_root, tag) \
                        if heatmap_root is not None else None
                    yield tag, {'scenario': scenario, 'target_id': target_id,
                                'variant': variant.value, 'seed': seed,
                                'heatmap_dir': heatmap_dir}


def run_suite(config, output_dir=None, variants=None, seeds=None, jobs=None,
              dump_heatmaps=None, sequential_planner=False, progress=False):
    """Run the episode grid of ``config`` and write its results.

    Parameters
    ----------
    config : AvsConfig
    output_dir : str, optional
        Defaults to ``[global] output``.
    variants : list of str, optional
        Defaults to ``[global] variants``.
    seeds : list of int, optional
        Defaults to ``[global] seeds``.
    jobs : int, optional
        Worker processes; defaults to ``[global] jobs``.
    dump_heatmaps : bool, optional
        Defaults to ``[global] dump_heatmaps``.
    sequential_planner : bool
        Force single-tree planning.
    progress : bool
        Show a progress bar.

    Returns
    -------
    reports : dict
        ``(scenario, variant)`` to `MetricsReport`.

    Notes
    -----
    Writes ``episodes.csv``, ``metrics.json`` and the effective
    ``config.ini`` to the output directory, plus heatmaps under
    ``heatmaps/`` when requested.
    """
    output_dir = output_dir or config.output
    variant_names = variants if variants is not None else parse_variants(config.variants)
    try:
        variants = [PlannerVariant(v) for v in variant_names]
    except ValueError as e:
        raise InvalidConfigError('global', 'variants', str(e))
    seeds = seeds if seeds is not None else parse_seeds(config.seeds)
    jobs = jobs if jobs is not None else config.jobs
    dump_heatmaps = config.dump_heatmaps if dump_heatmaps is None else dump_heatmaps

    os.makedirs(output_dir, exist_ok=True)
    scenarios = build_scenarios(config, sequential_planner)
    heatmap_root = os.path.join(output_dir, 'heatmaps') if dump_heatmaps else None

    tasks = list(_tasks(scenarios, variants, seeds, heatmap_root))
    logger.info('Running %d episodes with %d job(s)', len(tasks), jobs)

    manager = create_manager(config.manager, jobs)
    results = []
    queue = iter(tasks)
    remaining = len(tasks)
    try:
        with tqdm(total=len(tasks), disable=not progress, unit='episode') as bar:
            while remaining > 0 or not manager.empty():
                while remaining > 0 and manager.hungry():
                    tag, params = next(queue)
                    manager.add_task(run_episode_task, tag, params)
                    remaining -= 1
                result = manager.run_task()
                bar.update(1)
                if result is not None:
                    results.append(result[1])
    finally:
        manager.close()

    if manager.failures:
        logger.error('%d of %d episodes failed to run', len(manager.failures),
                     len(tasks))

    write_results_csv(results, os.path.join(output_dir, 'episodes.csv'))
    summary = summarize(results)
    with open(os.path.join(output_dir, 'metrics.json'), 'w') as f:
        json.dump({group: {'/'.join(map(str, key if isinstance(key, tuple) else (key,))): report
                           for key, report in reports.items()}
                   for group, reports in summary.items()},
                  f, cls=AvsEncoder, indent=2, sort_keys=True)
    config.save_config(os.path.join(output_dir, 'config.ini'))
    return summary['scenarios']



def read_metrics_json(path):
    """Load the ``metrics.json`` written by `run_suite`.

    Returns
    -------
    metrics : dict
        ``{group: {'<name>/<variant>' or '<variant>': report dict}}``.
    """
    with open(path, 'r') as f:
        return json.load(f, cls=AvsDecoder)
