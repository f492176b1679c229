"""Simulated object detector and the probabilistic detection filter.

Classes
-------
DetectorStats
    Post-threshold confusion statistics of a simulated detector.
Detection
    A detector output surfaced to the filter.
ExitThreshold
    Posterior threshold for ending exploration.
SimulatedDetector
    Detector drawing frames from `DetectorStats`.
ScriptedDetector
    Detector replaying a fixed sequence of frames.

Functions
---------
f1_score
    Harmonic mean of precision and recall.
simulate_detection
    Draw one detector frame.
step_likelihood
    Per-step likelihood field over candidate locations.
update_posterior
    Bayesian update of the probability field.
check_exit
    Visible location whose posterior reaches the exit threshold.
uniform_field
    Uniform probability field.
"""
from dataclasses import dataclass
from functools import cached_property
import logging
from typing import NamedTuple

import numpy as np
import scipy.stats


logger = logging.getLogger(__name__)

SCORE_THRESHOLD = 0.9
MAX_TAU = 0.99
CONVENTIONS = ('figure', 'text')


class InvalidDetectorStats(Exception):
    def __init__(self, reason):
        msg = "Invalid detector statistics: {}".format(reason)
        super(InvalidDetectorStats, self).__init__(msg)


class AllZeroField(Exception):
    """Raised when a likelihood field has no positive entry."""
    def __init__(self, reason):
        msg = "Likelihood field is identically zero: {}".format(reason)
        super(AllZeroField, self).__init__(msg)


class DegeneratePosterior(Exception):
    """Raised when prior and likelihood have disjoint support."""
    def __init__(self):
        msg = "Posterior normalizer is zero; prior and likelihood are disjoint"
        super(DegeneratePosterior, self).__init__(msg)


def f1_score(precision, recall):
    """Harmonic mean of ``precision`` and ``recall``; 0 when both are 0."""
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _score_distribution(low, high):
    if high > low:
        return scipy.stats.uniform(loc=low, scale=high - low)
    return None


@dataclass(frozen=True)
class DetectorStats:
    """Confusion statistics of a simulated detector.

    ``recall`` and ``fp_rate`` describe the detector after scores at or
    below ``score_threshold`` are suppressed; raw emission probabilities are
    scaled up by the score survival probability to compensate.

    Parameters
    ----------
    precision, recall : float
        Values in [0, 1].
    fp_rate : float
        Per-frame probability of a false positive at a random visible
        location, in [0, 1].
    sigma : float
        Spread in cells of the detected-case Gaussian likelihood.
    score_threshold : float
        Detections scoring at or below this value are suppressed.
    tp_scores, fp_scores : tuple of float
        ``(low, high)`` bounds of the uniform score distributions. Equal
        bounds give a constant score.
    likelihood_convention : {'figure', 'text'}
        Which side of the FOV receives ``1 - f1`` when nothing is detected.
    """
    precision: float = 1.0
    recall: float = 1.0
    fp_rate: float = 0.0
    sigma: float = 1.0
    score_threshold: float = SCORE_THRESHOLD
    tp_scores: tuple = (0.9, 1.0)
    fp_scores: tuple = (0.9, 1.0)
    likelihood_convention: str = 'figure'

    def __post_init__(self):
        for name in ('precision', 'recall', 'fp_rate'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidDetectorStats('{}={} not in [0, 1]'.format(name, value))
        if self.sigma <= 0:
            raise InvalidDetectorStats('sigma must be positive')
        for name in ('tp_scores', 'fp_scores'):
            low, high = getattr(self, name)
            if not 0.0 <= low <= high <= 1.0:
                raise InvalidDetectorStats('{}={} is not a range in [0, 1]'.format(
                    name, (low, high)))
        if self.likelihood_convention not in CONVENTIONS:
            raise InvalidDetectorStats('unknown likelihood convention {!r}'.format(
                self.likelihood_convention))

    @property
    def f1(self):
        return f1_score(self.precision, self.recall)

    @cached_property
    def tp_distribution(self):
        return _score_distribution(*self.tp_scores)

    @cached_property
    def fp_distribution(self):
        return _score_distribution(*self.fp_scores)

    def _survival(self, scores, dist):
        if dist is None:
            return 1.0 if scores[0] > self.score_threshold else 0.0
        return float(dist.sf(self.score_threshold))

    def _emission(self, rate, scores, dist):
        survival = self._survival(scores, dist)
        if survival <= 0:
            return 0.0
        return min(1.0, rate / survival)

    @cached_property
    def tp_emission(self):
        """Raw probability of emitting a true positive before thresholding."""
        return self._emission(self.recall, self.tp_scores, self.tp_distribution)

    @cached_property
    def fp_emission(self):
        """Raw probability of emitting a false positive before thresholding."""
        return self._emission(self.fp_rate, self.fp_scores, self.fp_distribution)


class Detection(NamedTuple):
    location: int
    score: float


def _draw_score(dist, scores, rng):
    if dist is None:
        return float(scores[0])
    return float(dist.ppf(rng.random()))


def simulate_detection(pose, fov_set, true_location, stats, rng):
    """Draw one detector frame.

    A true positive is emitted with probability ``stats.recall`` when the
    target is visible. Otherwise, and on a missed true positive, a false
    positive is emitted at a uniformly chosen visible location with
    probability ``stats.fp_rate``. It may land on the target itself.

    Parameters
    ----------
    pose : Pose
        Pose of the frame. Unused by the statistical model.
    fov_set : frozenset of int
        Locations visible from ``pose``.
    true_location : int
    stats : DetectorStats
    rng : numpy.random.Generator

    Returns
    -------
    detection : Detection or None
    """
    if true_location in fov_set and rng.random() < stats.tp_emission:
        score = _draw_score(stats.tp_distribution, stats.tp_scores, rng)
        if score > stats.score_threshold:
            return Detection(true_location, score)

    if not fov_set:
        return None
    if rng.random() < stats.fp_emission:
        visible = sorted(fov_set)
        location = visible[int(rng.integers(len(visible)))]
        score = _draw_score(stats.fp_distribution, stats.fp_scores, rng)
        if score > stats.score_threshold:
            return Detection(location, score)
    return None


class SimulatedDetector(object):
    """Detector drawing frames from per-target statistics.

    Attributes
    ----------
    calls : int
        Number of frames requested so far.
    """

    def __init__(self, stats):
        self.stats = stats
        self.calls = 0

    def detect(self, pose, fov_set, true_location, rng):
        self.calls += 1
        return simulate_detection(pose, fov_set, true_location, self.stats, rng)


class ScriptedDetector(object):
    """Detector replaying ``frames`` in order, then reporting nothing.

    Parameters
    ----------
    frames : sequence of Detection or None
    stats : DetectorStats
        Statistics used by the filter when interpreting the frames.
    """

    def __init__(self, frames, stats=None):
        self.frames = list(frames)
        self.stats = stats if stats is not None else DetectorStats()
        self.calls = 0

    def detect(self, pose, fov_set, true_location, rng):
        frame = self.frames[self.calls] if self.calls < len(self.frames) else None
        self.calls += 1
        return frame


def uniform_field(k):
    return np.full(k, 1.0 / k)


def step_likelihood(fov_set, detection, stats, grid, sigma=None):
    """Likelihood field of a single detector frame.

    Parameters
    ----------
    fov_set : frozenset of int
        Locations visible from the current pose.
    detection : Detection or None
    stats : DetectorStats
    grid : GridMap
    sigma : float, optional
        Gaussian spread in cells; defaults to ``stats.sigma``.

    Returns
    -------
    field : numpy.ndarray
        Length-``k`` vector summing to 1.

    Raises
    ------
    AllZeroField
        If a detection is given with an empty ``fov_set`` or the field
        vanishes everywhere.
    ValueError
        If the detection lies outside ``fov_set``.
    """
    k = grid.k
    sigma = stats.sigma if sigma is None else sigma
    visible = np.array(sorted(fov_set), dtype=np.int64)

    if detection is not None:
        if len(visible) == 0:
            raise AllZeroField('detection with an empty field of view')
        if detection.location not in fov_set:
            raise ValueError('detection at {} outside the field of view'.format(
                detection.location))
        mean = grid.candidate_cells[detection.location]
        gauss = scipy.stats.multivariate_normal(mean=mean, cov=sigma ** 2)
        field = np.zeros(k)
        field[visible] = np.atleast_1d(gauss.pdf(grid.candidate_cells[visible]))
    else:
        f1 = stats.f1
        inside, outside = 1.0 - f1, f1
        if stats.likelihood_convention == 'text':
            inside, outside = outside, inside
        field = np.full(k, outside)
        field[visible] = inside

    total = field.sum()
    if total <= 0:
        raise AllZeroField('no location carries likelihood')
    return field / total


def update_posterior(prior, likelihood):
    """Elementwise product of prior and likelihood, renormalized.

    Raises
    ------
    DegeneratePosterior
        If the product sums to zero.
    """
    product = np.asarray(prior) * np.asarray(likelihood)
    total = product.sum()
    if total <= 0:
        raise DegeneratePosterior()
    return product / total


class ExitThreshold(object):
    """Exit threshold ``tau = c / k`` clamped to ``MAX_TAU``.

    Parameters
    ----------
    c : int, optional
        Confidence constant, at least 1. Defaults to ``k``, which puts
        ``tau`` at ``MAX_TAU`` on every map.
    k : int
        Number of candidate locations.

    Notes
    -----
    A single detection confines the field to the field of view and, with
    candidates a few cells apart, concentrates most of it on one location.
    Thresholds well below ``MAX_TAU`` therefore fire on the first detected
    frame, exactly like the deterministic exit.
    """

    def __init__(self, c=None, k=1):
        if k < 1 or (c is not None and c < 1):
            raise ValueError('c and k must be positive, got c={} k={}'.format(c, k))
        self.c = k if c is None else c
        self.k = k

    @property
    def tau(self):
        return min(self.c / self.k, MAX_TAU)

    def __repr__(self):
        return 'ExitThreshold(c={}, k={})'.format(self.c, self.k)


def check_exit(field, visibility_row, threshold):
    """Most probable visible location whose posterior reaches ``tau``.

    Parameters
    ----------
    field : numpy.ndarray
        Probability field of length ``k``.
    visibility_row : numpy.ndarray of bool
        Visibility of every location from the current pose.
    threshold : ExitThreshold

    Returns
    -------
    location : int or None
        Lowest index among ties; None if no location qualifies.
    """
    field = np.asarray(field)
    qualifying = (field >= threshold.tau) & np.asarray(visibility_row, dtype=bool)
    if not qualifying.any():
        return None
    return int(np.argmax(np.where(qualifying, field, -np.inf)))
