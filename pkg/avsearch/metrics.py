"""Episode records and evaluation metrics.

Classes
-------
FailureClass
    Why a failed episode failed.
EpisodeResult
    Outcome of one episode.
MetricsReport
    Success rate, average path length and SPL of a group of episodes.

Functions
---------
compute_metrics
    Aggregate a list of results into a `MetricsReport`.
failure_rates
    Share of every failure class among a group of episodes.
metrics_by_shortest
    Reports per bucket of shortest possible path length.
summarize
    Reports per (scenario, variant), per (preset, variant) and per variant.
results_frame
    Results as a `pandas.DataFrame` in the CSV schema.
write_results_csv
read_results_csv
    Store and load per-episode rows.
"""
import enum
import logging

import numpy as np
import pandas as pd


logger = logging.getLogger(__name__)

CSV_COLUMNS = ['scenario', 'variant', 'target', 'seed', 'success', 'steps',
               'shortest', 'spl_term', 'failure_class', 'exit_step',
               'docking_steps', 'exit_location', 'detector_calls',
               'final_posterior_max', 'preset', 'reason']
SORT_KEYS = ['scenario', 'variant', 'target', 'seed']


class FailureClass(enum.Enum):
    LOCALISATION = 'localisation'
    DOCKING = 'docking'
    OTHER = 'other'

    def __str__(self):
        return self.value


class EpisodeResult(object):
    """Outcome of a single episode.

    Parameters
    ----------
    scenario, variant, target : str
    seed : int
    success : bool
    steps_taken : int
        Every real step, docking included.
    shortest_possible : int or None
        Oracle distance from the start pose to the nearest goal pose; None
        when no goal pose is reachable.
    failure_class : FailureClass or str, optional
        Required to be None for a successful episode.
    trajectory : list of Pose, optional
    exit_step, exit_location : int, optional
        Set when exploration ended through the exit rule.
    docking_steps : int
    detector_calls : int
    final_posterior_max : float, optional
        Largest entry of the probability field at the end of exploration.
    preset : str, optional
    reason : str
        Short description of a failure.

    Raises
    ------
    ValueError
        If a successful episode carries a failure class.
    """

    FIELDS = ('scenario', 'variant', 'target', 'seed', 'success',
              'steps_taken', 'shortest_possible', 'failure_class',
              'trajectory', 'exit_step', 'exit_location', 'docking_steps',
              'detector_calls', 'final_posterior_max', 'preset', 'reason')

    def __init__(self, scenario, variant, target, seed, success, steps_taken,
                 shortest_possible, failure_class=None, trajectory=None,
                 exit_step=None, exit_location=None, docking_steps=0,
                 detector_calls=0, final_posterior_max=None, preset=None,
                 reason=''):
        if success and failure_class is not None:
            raise ValueError('a successful episode has no failure class')
        self.scenario = scenario
        self.variant = variant
        self.target = target
        self.seed = seed
        self.success = success
        self.steps_taken = steps_taken
        self.shortest_possible = shortest_possible
        self.failure_class = FailureClass(failure_class) \
            if failure_class is not None else None
        self.trajectory = list(trajectory) if trajectory is not None else []
        self.exit_step = exit_step
        self.exit_location = exit_location
        self.docking_steps = docking_steps
        self.detector_calls = detector_calls
        self.final_posterior_max = final_posterior_max
        self.preset = preset
        self.reason = reason

    def __eq__(self, other):
        if not isinstance(other, EpisodeResult):
            return NotImplemented
        return all(getattr(self, f) == getattr(other, f) for f in self.FIELDS)

    __hash__ = None

    def __repr__(self):
        return 'EpisodeResult({}/{}/{}/{}, success={}, steps={})'.format(
            self.scenario, self.variant, self.target, self.seed, self.success,
            self.steps_taken)

    @property
    def spl_term(self):
        if not self.success or self.shortest_possible is None:
            return 0.0
        longest = max(self.steps_taken, self.shortest_possible)
        if longest == 0:
            return 1.0
        return self.shortest_possible / longest

    def to_row(self):
        return {
            'scenario': self.scenario,
            'variant': str(self.variant),
            'target': self.target,
            'seed': self.seed,
            'success': bool(self.success),
            'steps': self.steps_taken,
            'shortest': self.shortest_possible,
            'spl_term': self.spl_term,
            'failure_class': str(self.failure_class) if self.failure_class else None,
            'exit_step': self.exit_step,
            'docking_steps': self.docking_steps,
            'exit_location': self.exit_location,
            'detector_calls': self.detector_calls,
            'final_posterior_max': self.final_posterior_max,
            'preset': self.preset,
            'reason': self.reason,
        }

    @classmethod
    def from_row(cls, row):
        """Rebuild a result from a CSV row; the trajectory is not stored."""
        def value(name, cast=None):
            v = row.get(name)
            if v is None or (not isinstance(v, str) and pd.isna(v)):
                return None
            return cast(v) if cast is not None else v

        return cls(
            scenario=str(row['scenario']),
            variant=str(row['variant']),
            target=str(row['target']),
            seed=int(row['seed']),
            success=bool(row['success']),
            steps_taken=int(row['steps']),
            shortest_possible=value('shortest', int),
            failure_class=value('failure_class', FailureClass),
            exit_step=value('exit_step', int),
            exit_location=value('exit_location', int),
            docking_steps=value('docking_steps', int) or 0,
            detector_calls=value('detector_calls', int) or 0,
            final_posterior_max=value('final_posterior_max', float),
            preset=value('preset', str),
            reason=value('reason', str) or '',
        )


class MetricsReport(object):
    """Aggregate metrics of a group of episodes.

    Attributes
    ----------
    episodes : int
    sr : float
        Success rate.
    apl : float or None
        Average steps of successful episodes; None when none succeeded.
    spl : float
        Success weighted by path length.
    failures : dict
        Failure class value to count.
    """

    def __init__(self, episodes, sr, apl, spl, failures=None):
        self.episodes = episodes
        self.sr = sr
        self.apl = apl
        self.spl = spl
        self.failures = dict(failures) if failures is not None else {}

    def __eq__(self, other):
        if not isinstance(other, MetricsReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    def __repr__(self):
        return 'MetricsReport(episodes={}, sr={}, apl={}, spl={})'.format(
            self.episodes, self.sr, self.apl, self.spl)

    def to_dict(self):
        return {'episodes': self.episodes, 'sr': self.sr, 'apl': self.apl,
                'spl': self.spl, 'failures': dict(self.failures)}


def compute_metrics(results):
    """Success rate, average successful path length and SPL.

    Parameters
    ----------
    results : list of EpisodeResult

    Returns
    -------
    report : MetricsReport

    Raises
    ------
    ValueError
        If ``results`` is empty.
    """
    results = list(results)
    if not results:
        raise ValueError('cannot compute metrics of zero episodes')

    n = len(results)
    successes = [r for r in results if r.success]
    sr = len(successes) / n
    apl = float(np.mean([r.steps_taken for r in successes])) if successes else None
    spl = float(np.sum([r.spl_term for r in results])) / n

    failures = {str(c): 0 for c in FailureClass}
    for r in results:
        if r.failure_class is not None:
            failures[str(r.failure_class)] += 1
    return MetricsReport(n, sr, apl, spl, failures)


def failure_rates(results):
    """Share of episodes in every failure class."""
    report = compute_metrics(results)
    return {c: count / report.episodes for c, count in report.failures.items()}


def _bucket_labels(bins):
    labels = ['[{}, {})'.format(lo, hi) for lo, hi in zip(bins[:-1], bins[1:])]
    labels.append('[{}, inf)'.format(bins[-1]))
    return labels


def metrics_by_shortest(results, bins):
    """Reports per bucket of shortest possible path length.

    Parameters
    ----------
    results : list of EpisodeResult
    bins : sequence of int
        Increasing bucket lower edges; the last bucket is open ended.
        Episodes below ``bins[0]`` or without a shortest path are skipped.

    Returns
    -------
    reports : dict
        Bucket label to `MetricsReport`, empty buckets omitted.
    """
    bins = list(bins)
    if bins != sorted(set(bins)):
        raise ValueError('bins must be strictly increasing')
    labels = _bucket_labels(bins)
    grouped = {}
    for r in results:
        if r.shortest_possible is None or r.shortest_possible < bins[0]:
            continue
        i = int(np.searchsorted(bins, r.shortest_possible, side='right')) - 1
        grouped.setdefault(labels[i], []).append(r)
    return {label: compute_metrics(grouped[label])
            for label in labels if label in grouped}


def results_frame(results):
    """Rows of ``results`` sorted by scenario, variant, target and seed."""
    rows = [r.to_row() for r in results]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS).astype(
        {'shortest': 'Int64', 'exit_step': 'Int64', 'exit_location': 'Int64'})
    if len(frame) > 0:
        frame = frame.sort_values(SORT_KEYS, kind='mergesort').reset_index(drop=True)
    return frame


def _grouped(results, frame, keys):
    if len(frame) == 0:
        return {}
    reports = {}
    for key, index in frame.groupby(keys, sort=True, dropna=True).groups.items():
        reports[key] = compute_metrics([results[i] for i in index])
    return reports


def summarize(results):
    """Metrics per (scenario, variant), per (preset, variant) and per variant.

    Returns
    -------
    summary : dict
        ``{'scenarios': {(scenario, variant): report},
        'presets': {(preset, variant): report},
        'overall': {variant: report}}``. Episodes on maps without a preset
        are left out of the preset grouping.
    """
    results = list(results)
    frame = pd.DataFrame([r.to_row() for r in results], columns=CSV_COLUMNS)
    return {
        'scenarios': _grouped(results, frame, ['scenario', 'variant']),
        'presets': _grouped(results, frame, ['preset', 'variant']),
        'overall': _grouped(results, frame, 'variant'),
    }


def summary_frame(summary):
    """Flatten a `summarize` result into one row per report."""
    rows = []
    for group, reports in summary.items():
        for key, report in reports.items():
            key = key if isinstance(key, tuple) else ('', key)
            row = {'group': group, 'name': key[0], 'variant': key[1]}
            row.update(report.to_dict())
            failures = row.pop('failures')
            row.update({'failures_' + c: n for c, n in failures.items()})
            rows.append(row)
    return pd.DataFrame(rows)


def write_results_csv(results, path):
    frame = results_frame(results)
    frame.to_csv(path, index=False)
    logger.info('Wrote %d episode rows to %s', len(frame), path)
    return frame


def read_results_csv(path):
    frame = pd.read_csv(path, dtype={'scenario': str, 'target': str,
                                     'variant': str, 'preset': str,
                                     'reason': str})
    return [EpisodeResult.from_row(row) for row in frame.to_dict('records')]
