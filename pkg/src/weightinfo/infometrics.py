"""Information-theoretic primitives shared across the package.

All quantities use natural logarithms (nats). mutual_information is a
reference baseline only; the measurement pipeline never calls it.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, rel_entr

from .errors import (
    BinMismatch,
    DegenerateFit,
    DomainError,
    EmptyTable,
    InsufficientSamples,
    InvalidDistribution,
    ShrinkViolation,
)

DEFAULT_BINS = 64


@dataclass(frozen=True)
class Histogram:
    """Equal-purpose binned counts: B+1 edges, B nonnegative counts."""

    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        counts = np.asarray(self.counts)
        if not np.issubdtype(counts.dtype, np.integer):
            rounded = np.rint(counts)
            if not np.array_equal(rounded, counts):
                raise DomainError("histogram counts must be integers")
            counts = rounded.astype(np.int64)
        counts = counts.astype(np.int64)
        if edges.ndim != 1 or counts.ndim != 1:
            raise DomainError("edges and counts must be one-dimensional")
        if len(counts) < 2:
            raise DomainError("a histogram needs at least 2 bins")
        if len(edges) != len(counts) + 1:
            raise BinMismatch(
                f"{len(edges)} edges do not delimit {len(counts)} bins"
            )
        if np.any(np.diff(edges) <= 0):
            raise DomainError("edges must be strictly increasing")
        if np.any(counts < 0):
            raise DomainError("counts cannot be negative")
        if counts.sum() <= 0:
            raise DomainError("histogram total must be positive")
        edges = edges.copy()
        counts = counts.copy()
        edges.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def bins(self):
        return len(self.counts)

    @property
    def total(self):
        return int(self.counts.sum())

    def probabilities(self):
        """Counts normalized to an empirical probability vector."""
        return self.counts / self.total

    def midpoints(self):
        return (self.edges[:-1] + self.edges[1:]) / 2.0


def build_histogram(values, bins=DEFAULT_BINS):
    """Equal-width histogram spanning [min, max] of the sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DomainError("cannot histogram an empty sample")
    if bins < 2:
        raise DomainError("need at least 2 bins")
    counts, edges = np.histogram(values, bins=bins)
    return Histogram(edges=edges, counts=counts)


def entropy(p):
    """Shannon entropy of a probability vector in nats, 0 ln 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0.0):
        raise InvalidDistribution("probabilities cannot be negative")
    if abs(float(p.sum()) - 1.0) > 1e-9:
        raise InvalidDistribution(f"probabilities sum to {p.sum()}, not 1")
    positive = p[p > 0.0]
    return float(-np.sum(positive * np.log(positive)))


def _information_from_ratio(rho):
    """log(1/rho) in nats for a support shrink ratio in (0, 1)."""
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise DomainError(f"shrink ratio must lie in (0, 1), got {rho}")
    return math.log(1.0 / rho)


def information_gain(support_before, support_after):
    """Nats gained when a uniform support shrinks between two stages.

    Equal supports give exactly 0.0; a grown support means the run is
    outside the regime this measure describes.
    """
    before = int(support_before)
    after = int(support_after)
    if before <= 0 or after <= 0:
        raise DomainError("support sizes must be positive integers")
    if after > before:
        raise ShrinkViolation(
            f"support grew from {before} to {after}; gain undefined"
        )
    if after == before:
        return 0.0
    return _information_from_ratio(after / before)


def mutual_information(joint_counts):
    """Mutual information of a joint count table in nats.

    Reference implementation of the observation-based baseline; kept
    for comparison, unused by the distance estimator.
    """
    counts = np.asarray(joint_counts, dtype=np.float64)
    if counts.ndim != 2:
        raise DomainError("joint counts must form a 2-D table")
    if np.any(counts < 0):
        raise DomainError("counts cannot be negative")
    total = counts.sum()
    if total <= 0:
        raise EmptyTable("joint table has no positive entry")
    p = counts / total
    row = p.sum(axis=1)
    col = p.sum(axis=0)
    mask = p > 0
    outer = np.outer(row, col)
    mi = float(np.sum(p[mask] * np.log(p[mask] / outer[mask])))
    return max(0.0, mi)


def kl_divergence(p_hist, q_mass):
    """KL(P || Q) in nats between a histogram and an aligned mass vector.

    Q is floored at 1e-12 and renormalized before the sum, which keeps
    empty-tail bins from producing infinities. Result is clamped at 0
    to absorb rounding noise (Gibbs' inequality rules out true
    negatives).
    """
    q = np.asarray(q_mass, dtype=np.float64)
    if q.ndim != 1 or len(q) != p_hist.bins:
        raise BinMismatch(
            f"mass vector of length {q.shape} does not match "
            f"{p_hist.bins} bins"
        )
    if np.any(q < 0.0):
        raise InvalidDistribution("mass vector entries cannot be negative")
    q = np.maximum(q, 1e-12)
    q = q / q.sum()
    p = p_hist.probabilities()
    return max(0.0, float(rel_entr(p, q).sum()))


def fit_normal_mass(hist):
    """Per-bin masses of the moment-matched normal, renormalized to the
    histogram's range.

    Moments come from bin midpoints weighted by counts, with a
    Bessel-corrected variance.
    """
    total = hist.total
    if total < 30:
        raise InsufficientSamples(
            f"normal fit needs at least 30 observations, got {total}"
        )
    mid = hist.midpoints()
    counts = hist.counts.astype(np.float64)
    mean = float(np.sum(counts * mid) / total)
    var = float(np.sum(counts * (mid - mean) ** 2) / (total - 1))
    if var <= 0.0:
        raise DegenerateFit("sample variance is zero; nothing to fit")
    sigma = math.sqrt(var)
    cdf = ndtr((hist.edges - mean) / sigma)
    span = float(cdf[-1] - cdf[0])
    if span <= 0.0:
        raise DegenerateFit("fitted normal places no mass on the range")
    return np.diff(cdf) / span
