"""Support-shrink estimation from nearest-element distances.

The estimator treats a training run's final weights as a point whose
distance to its paired initial weights reflects how far the reachable
weight set contracted. Averaging that distance over an ensemble with an
adaptive outlier-replacement loop yields d_hat, a comparative proxy for
accumulated information: smaller d_hat, less support shrink, less
information.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels, infometrics
from .core import euclidean_distance
from .errors import (
    CvUndefined,
    DimMismatch,
    DomainError,
    EmptyEnsemble,
    EmptyReference,
    InsufficientSamples,
    NotConverged,
    SourceExhausted,
)

DEFAULT_T = 0.3
DEFAULT_N = 200


@dataclass(frozen=True)
class NearestDistanceReport:
    """Nearest-element distances for a query set plus summary stats.

    std is the Bessel-corrected sample deviation (0.0 for a single
    query). cv is computed on access and is undefined when the mean is
    zero.
    """

    distances: np.ndarray
    mean: float
    std: float

    @classmethod
    def from_distances(cls, distances):
        d = np.asarray(distances, dtype=np.float64).copy()
        d.flags.writeable = False
        mean = float(np.mean(d))
        std = float(np.std(d, ddof=1)) if d.size > 1 else 0.0
        return cls(distances=d, mean=mean, std=std)

    @property
    def cv(self):
        if self.mean == 0.0:
            raise CvUndefined("coefficient of variation undefined at mean 0")
        return self.std / self.mean


@dataclass(frozen=True)
class QmcmEstimate:
    """Adaptive estimate of the mean init-to-final distance.

    d_hat averages the accepted sample set; converged reports whether
    the coefficient of variation reached the threshold before the
    resample budget ran out.
    """

    d_hat: float
    samples_used: int
    resample_count: int
    achieved_cv: float
    converged: bool
    threshold: float

    def __post_init__(self):
        if self.converged and self.achieved_cv > self.threshold:
            raise DomainError(
                "converged estimate with cv above its threshold"
            )

    @property
    def std(self):
        """Sample deviation reconstructed from cv and mean."""
        return self.achieved_cv * self.d_hat


class RunOrdering(enum.Enum):
    """Comparative information verdict between two estimates."""

    LESS_INFO = "LessInfo"
    MORE_INFO = "MoreInfo"
    INDISTINGUISHABLE = "Indistinguishable"


def nearest_distance(x, reference_set):
    """Distance from x to the closest member of the reference ensemble.

    Exactly 0 when x is a member (identical bit patterns).
    """
    if len(reference_set) == 0:
        raise EmptyReference("reference set has no members")
    if x.dim != reference_set.dim:
        raise DimMismatch(
            f"query dim {x.dim} != reference dim {reference_set.dim}"
        )
    d2, _ = _kernels.nearest_sq(reference_set.as_matrix(), x.to_float64())
    return float(np.sqrt(d2))


def mean_nearest_distance(queries, reference_set):
    """NearestDistanceReport of every query's nearest-element distance."""
    if len(queries) == 0:
        raise EmptyEnsemble("query ensemble has no members")
    if len(reference_set) == 0:
        raise EmptyReference("reference set has no members")
    if queries.dim != reference_set.dim:
        raise DimMismatch(
            f"query dim {queries.dim} != reference dim {reference_set.dim}"
        )
    d2, _ = _kernels.nearest_sq_bulk(
        reference_set.as_matrix(), queries.as_matrix()
    )
    return NearestDistanceReport.from_distances(np.sqrt(d2))


def total_nearest_distance(queries, reference_set):
    """Sum of nearest-element distances over the query ensemble.

    Enlarging the reference set can never increase this total: every
    per-query minimum is taken over a superset of the same candidate
    distances.
    """
    report = mean_nearest_distance(queries, reference_set)
    return float(np.sum(report.distances))


def qmcm_estimate(source, t=DEFAULT_T, n=DEFAULT_N, max_resamples=None):
    """Adaptive mean-distance estimate over a pair sampling source.

    Draws n (initial, final) pairs from the source, each contributing
    d = euclidean_distance(initial, final). While the sample cv exceeds
    t, the entry with the largest |d - mean| is replaced by a fresh
    draw (ties break at the lowest index; the replacement takes the
    removed entry's slot). Runs with t=0.3, n=200 by default. The
    result is deterministic for a seeded source.

    Exhausting max_resamples (default 50*n) returns converged=False
    with the final accepted set rather than raising; exhausting the
    source itself raises SourceExhausted.
    """
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"cv threshold must be positive, got {t}")
    n = int(n)
    if n < 2:
        raise DomainError(f"sample count must be at least 2, got {n}")
    if max_resamples is None:
        max_resamples = 50 * n
    max_resamples = int(max_resamples)

    it = iter(source)

    def draw():
        try:
            initial, final = next(it)
        except StopIteration:
            raise SourceExhausted(
                "sampling source ran out of weight pairs"
            ) from None
        return euclidean_distance(initial, final)

    d = np.array([draw() for _ in range(n)], dtype=np.float64)
    resamples = 0
    while True:
        mean = float(np.mean(d))
        std = float(np.std(d, ddof=1))
        cv = 0.0 if std == 0.0 else std / mean
        if cv <= t or resamples >= max_resamples:
            break
        worst = int(np.argmax(np.abs(d - mean)))
        d[worst] = draw()
        resamples += 1
    return QmcmEstimate(
        d_hat=mean,
        samples_used=n,
        resample_count=resamples,
        achieved_cv=cv,
        converged=cv <= t,
        threshold=t,
    )


def compare_runs(a, b):
    """Order two converged estimates by implied information content.

    The verdict is Indistinguishable when the d_hat gap is within
    eps = max of the two sample deviations divided by sqrt of the
    smaller sample count; smaller d_hat otherwise means less
    information.
    """
    if not a.converged or not b.converged:
        raise NotConverged("both estimates must have converged")
    eps = max(a.std, b.std) / np.sqrt(min(a.samples_used, b.samples_used))
    if a.d_hat < b.d_hat - eps:
        return RunOrdering.LESS_INFO
    if a.d_hat > b.d_hat + eps:
        return RunOrdering.MORE_INFO
    return RunOrdering.INDISTINGUISHABLE


def information_from_ratio(rho):
    """Information in nats implied by a support shrink ratio.

    rho is |support after| / |support before| in (0, 1); the result
    log(1/rho) is positive because only shrinking supports are
    meaningful here.
    """
    return infometrics._information_from_ratio(rho)


def simulate_distance_distribution(
    population_size, dim, subset_fraction, seed, bins=infometrics.DEFAULT_BINS
):
    """Sample the nearest-distance distribution of a random point cloud.

    Draws population_size standard-normal points in the given dim,
    marks floor(subset_fraction * size) of them (chosen uniformly at
    random) as the reference subset, and measures every remaining
    point's distance to its nearest reference element. Returns the
    distance report, the histogram, and KL(P || Q) against the
    moment-matched normal Q.

    Deterministic per (population_size, dim, subset_fraction, seed,
    bins).
    """
    population_size = int(population_size)
    dim = int(dim)
    subset_fraction = float(subset_fraction)
    if population_size < 100:
        raise DomainError(
            f"population must hold at least 100 points, got {population_size}"
        )
    if dim < 1:
        raise DomainError("dim must be a positive integer")
    if not 0.0 < subset_fraction < 1.0:
        raise DomainError(
            f"subset fraction must lie in (0, 1), got {subset_fraction}"
        )
    n_ref = int(subset_fraction * population_size)
    n_query = population_size - n_ref
    if n_ref < 1 or n_query < 30:
        raise InsufficientSamples(
            f"{n_ref} references and {n_query} queries leave too few "
            "distances for a histogram (need >= 1 and >= 30)"
        )
    rng = np.random.default_rng(seed)
    population = rng.standard_normal((population_size, dim))
    ref_idx = rng.choice(population_size, size=n_ref, replace=False)
    mask = np.zeros(population_size, dtype=bool)
    mask[ref_idx] = True
    refs = population[mask]
    queries = population[~mask]
    d2, _ = _kernels.nearest_sq_bulk(refs, queries)
    report = NearestDistanceReport.from_distances(np.sqrt(d2))
    hist = infometrics.build_histogram(report.distances, bins=bins)
    q = infometrics.fit_normal_mass(hist)
    kl = infometrics.kl_divergence(hist, q)
    return report, hist, kl
