"""Classical multidimensional scaling for weight ensembles.

Squared distances are double-centered into a Gram matrix whose top
eigenpairs give a low-dimensional embedding that preserves Euclidean
structure. All operations are pure and deterministic for fixed input.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    AsymmetricInput,
    ConvergenceError,
    DegenerateEmbedding,
    DomainError,
    RankError,
)

RESIDUAL_BOUND = 1e-8


@dataclass(frozen=True)
class MdsEmbedding:
    """n points embedded in m dimensions with their retained eigenvalues.

    Eigenvalues are non-increasing and already clamped at zero; row i of
    points is the embedding of input element i.
    """

    points: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).copy()
        vals = np.asarray(self.eigenvalues, dtype=np.float64).copy()
        if points.ndim != 2:
            raise DomainError("points must form an n-by-m matrix")
        if vals.shape != (points.shape[1],):
            raise DomainError("need one eigenvalue per embedding dimension")
        if np.any(np.diff(vals) > 0):
            raise DomainError("eigenvalues must be non-increasing")
        if np.any(vals < 0):
            raise DomainError("retained eigenvalues must be clamped at 0")
        points.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "eigenvalues", vals)

    @property
    def n(self):
        return int(self.points.shape[0])

    @property
    def m(self):
        return int(self.points.shape[1])


def double_center(d2):
    """Convert squared distances to the Gram matrix B = -1/2 J d2 J.

    J is the centering projector I - (1/n) 11'. Every row of B sums to
    zero up to rounding.
    """
    d2 = np.asarray(d2, dtype=np.float64)
    if d2.ndim != 2 or d2.shape[0] != d2.shape[1]:
        raise DomainError(f"squared distances must be square, got {d2.shape}")
    if not np.array_equal(d2, d2.T):
        raise AsymmetricInput("squared-distance matrix must be symmetric")
    if np.any(np.diagonal(d2) != 0.0):
        raise DomainError("squared-distance diagonal must be zero")
    if np.any(d2 < 0.0):
        raise DomainError("squared distances cannot be negative")
    row = d2.mean(axis=1, keepdims=True)
    col = d2.mean(axis=0, keepdims=True)
    grand = d2.mean()
    b = -0.5 * (d2 - row - col + grand)
    # addition commutes exactly, so this symmetrization is bitwise stable
    return 0.5 * (b + b.T)


def top_eigenpairs(matrix, m):
    """The m algebraically largest eigenpairs of a symmetric matrix.

    Eigenvalues come back non-increasing with unit-norm eigenvector
    columns; each pair is verified against the residual bound
    ||B v - lambda v|| <= 1e-8 * max(1, |lambda|).
    """
    B = np.asarray(matrix, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DomainError(f"matrix must be square, got {B.shape}")
    if not np.array_equal(B, B.T):
        raise AsymmetricInput("eigendecomposition input must be symmetric")
    n = B.shape[0]
    m = int(m)
    if m < 1:
        raise RankError(f"need at least one eigenpair, got m={m}")
    if m > n:
        raise RankError(f"m={m} exceeds matrix order n={n}")
    try:
        vals, vecs = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(vals)[::-1][:m]
    top_vals = vals[order]
    top_vecs = vecs[:, order]
    residual = np.linalg.norm(B @ top_vecs - top_vecs * top_vals, axis=0)
    bound = RESIDUAL_BOUND * np.maximum(1.0, np.abs(top_vals))
    if np.any(residual > bound):
        worst = float(residual.max())
        raise ConvergenceError(
            f"eigenpair residual {worst:.3e} exceeds the bound"
        )
    return top_vals, top_vecs


def mds_embed(dm, m):
    """Embed a DistanceMatrix into m dimensions.

    Negative retained eigenvalues (non-Euclidean noise) are clamped to
    zero before the square root, so ensembles of identical points come
    back as an all-zero embedding rather than an error.
    """
    d2 = dm.entries ** 2
    b = double_center(d2)
    vals, vecs = top_eigenpairs(b, m)
    if float(vals[0]) < 0.0:
        raise DegenerateEmbedding("no retained eigenvalue is nonnegative")
    clamped = np.maximum(vals, 0.0)
    points = vecs * np.sqrt(clamped)[None, :]
    return MdsEmbedding(points=points, eigenvalues=clamped)


def embedded_distances(embedding):
    """Pairwise Euclidean distances between embedded points."""
    return np.sqrt(_kernels.pairwise_sq(embedding.points))


def embedding_csv(embedding, stages):
    """Render an embedding as CSV text: index,stage,x1..xm rows.

    stages supplies one label per point. Floats carry 17 significant
    digits so the file round-trips exactly; lines end with LF.
    """
    stages = list(stages)
    if len(stages) != embedding.n:
        raise DomainError(
            f"{len(stages)} stage labels for {embedding.n} points"
        )
    header = "index,stage," + ",".join(
        f"x{j + 1}" for j in range(embedding.m)
    )
    lines = [header]
    for i in range(embedding.n):
        coords = ",".join(f"{v:.17g}" for v in embedding.points[i])
        label = stages[i].value if hasattr(stages[i], "value") else str(stages[i])
        lines.append(f"{i},{label},{coords}")
    return "\n".join(lines) + "\n"


def write_embedding_csv(embedding, stages, path):
    """Write embedding_csv output to a file as UTF-8 with LF endings."""
    text = embedding_csv(embedding, stages)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
