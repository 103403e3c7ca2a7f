"""Domain types, weight flattening, distances, and snapshot persistence.

A network's full parameter state is treated as a single point in
Euclidean space. Snapshots store float32 payloads (documented caveat:
training may run at higher precision, but distances at snapshot
precision suffice for the estimator); all distance arithmetic
accumulates in float64. Every operation here is a pure function over
immutable inputs and safe to call from multiple threads.
"""

import enum
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import (
    AsymmetricInput,
    DimMismatch,
    DomainError,
    EmptyEnsemble,
    EmptyModel,
    FormatError,
    HeaderError,
    NonFiniteInput,
    TruncationError,
)

SNAPSHOT_MAGIC = b"WODO"
SNAPSHOT_VERSION = 1

_F32_ZERO = np.float32(0.0)


class Stage(enum.Enum):
    """Which end of a training run an ensemble was captured at."""

    INITIAL = "Initial"
    FINAL = "Final"


class WeightVector:
    """A flat, fixed-dimension float32 weight state.

    Values are canonicalized (-0.0 becomes +0.0) and frozen, so equal
    vectors have identical bit patterns and zero mutual distance.
    """

    __slots__ = ("_values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if arr.size == 0:
            raise EmptyModel("a weight vector needs at least one entry")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("weight values must be finite")
        with np.errstate(over="ignore"):
            stored = arr.astype(np.float32) + _F32_ZERO
        if not np.all(np.isfinite(stored)):
            raise NonFiniteInput("weight values overflow float32 storage")
        stored.flags.writeable = False
        self._values = stored

    @property
    def values(self):
        return self._values

    @property
    def dim(self):
        return int(self._values.shape[0])

    def to_float64(self):
        """Copy of the values widened to float64 (exact conversion)."""
        return self._values.astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __hash__(self):
        return hash((self.dim, self._values.tobytes()))

    def __repr__(self):
        return f"WeightVector(dim={self.dim})"


@dataclass(frozen=True)
class WeightEnsemble:
    """An ordered collection of same-dimension weight vectors.

    seeds records the provenance seed of each member; order is stable
    across save/load round-trips.
    """

    members: tuple
    stage: Stage
    seeds: tuple

    def __post_init__(self):
        members = tuple(self.members)
        seeds = tuple(int(s) for s in self.seeds)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "seeds", seeds)
        if len(seeds) != len(members):
            raise DimMismatch(
                f"{len(members)} members but {len(seeds)} seeds"
            )
        if members:
            dim = members[0].dim
            for i, m in enumerate(members):
                if m.dim != dim:
                    raise DimMismatch(
                        f"member {i} has dim {m.dim}, expected {dim}"
                    )

    def __len__(self):
        return len(self.members)

    @property
    def dim(self):
        return self.members[0].dim if self.members else 0

    def as_matrix(self):
        """Members stacked into an (n, dim) float64 matrix."""
        if not self.members:
            raise EmptyEnsemble("cannot build a matrix from no members")
        return np.stack([m.to_float64() for m in self.members])


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative matrix of pairwise Euclidean distances."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"entries must be square, got {arr.shape}")
        if not np.array_equal(arr, arr.T):
            raise AsymmetricInput("distance matrix must be exactly symmetric")
        if np.any(np.diagonal(arr) != 0.0):
            raise DomainError("distance matrix diagonal must be zero")
        if np.any(arr < 0.0):
            raise DomainError("distances cannot be negative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def n(self):
        return int(self.entries.shape[0])

    def max_triangle_violation(self, triples=2000, seed=0):
        """Largest d(i,k) - d(i,j) - d(j,k) over sampled index triples.

        Nonpositive results mean the triangle inequality held on every
        sampled triple.
        """
        n = self.n
        if n < 3:
            return 0.0
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n, size=(triples, 3))
        d = self.entries
        return float(
            np.max(d[idx[:, 0], idx[:, 2]]
                   - d[idx[:, 0], idx[:, 1]]
                   - d[idx[:, 1], idx[:, 2]])
        )


@dataclass(frozen=True)
class RunManifest:
    """Description of one training run binding its two snapshots."""

    run_id: str
    seed: int
    label_fraction: float
    corruption_rate: float
    epochs: int
    learning_rate: float
    batch_size: int
    dataset_recipe: dict
    initial_snapshot: str = None
    final_snapshot: str = None

    def __post_init__(self):
        if not 0.0 < self.label_fraction <= 1.0:
            raise DomainError(
                f"label_fraction must lie in (0, 1], got {self.label_fraction}"
            )
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise DomainError(
                f"corruption_rate must lie in [0, 1], got {self.corruption_rate}"
            )
        if self.epochs < 1:
            raise DomainError("epochs must be a positive integer")
        if self.learning_rate <= 0.0:
            raise DomainError("learning_rate must be positive")
        if self.batch_size < 1:
            raise DomainError("batch_size must be a positive integer")

    def to_json(self):
        payload = {
            "run_id": self.run_id,
            "seed": self.seed,
            "label_fraction": self.label_fraction,
            "corruption_rate": self.corruption_rate,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "dataset_recipe": self.dataset_recipe,
            "initial_snapshot": self.initial_snapshot,
            "final_snapshot": self.final_snapshot,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(**data)

    def snapshot_dims_match(self):
        """Check that both referenced snapshot files, when present, agree.

        Returns True when no comparison is possible (missing paths or
        files). Raises HeaderError when the dims differ.
        """
        paths = [self.initial_snapshot, self.final_snapshot]
        dims = []
        for p in paths:
            if p and Path(p).exists():
                dims.append(load_snapshot(p).dim)
        if len(dims) == 2 and dims[0] != dims[1]:
            raise HeaderError(
                f"snapshot dims differ: {dims[0]} vs {dims[1]}"
            )
        return True


def flatten_weights(layers):
    """Concatenate layer tensors into one WeightVector.

    Layers are taken in declared order; matrices serialize row-major,
    with each bias following its matrix. The flattening is injective
    for fixed layer shapes.
    """
    layers = list(layers)
    if not layers:
        raise EmptyModel("no layers to flatten")
    parts = []
    for i, layer in enumerate(layers):
        arr = np.asarray(layer, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput(f"layer {i} contains non-finite entries")
        parts.append(arr.ravel(order="C"))
    flat = np.concatenate(parts) if parts else np.empty(0)
    if flat.size == 0:
        raise EmptyModel("layers hold no parameters")
    return WeightVector(flat)


def euclidean_distance(a, b):
    """L2 distance between two weight vectors, accumulated in float64."""
    if a.dim != b.dim:
        raise DimMismatch(f"dims differ: {a.dim} vs {b.dim}")
    return float(np.sqrt(_kernels.sq_dist(a.to_float64(), b.to_float64())))


def pairwise_distances(ensemble):
    """DistanceMatrix over all member pairs of one ensemble."""
    if len(ensemble) == 0:
        raise EmptyEnsemble("pairwise distances need at least one member")
    d2 = _kernels.pairwise_sq(ensemble.as_matrix())
    return DistanceMatrix(np.sqrt(d2))


def save_snapshot(w, path):
    """Write a WeightVector to the binary snapshot format.

    Layout: magic "WODO" | version u16 LE | dim u64 LE | dim float32 LE.
    """
    payload = w.values.astype("<f4").tobytes()
    header = SNAPSHOT_MAGIC + struct.pack("<HQ", SNAPSHOT_VERSION, w.dim)
    Path(path).write_bytes(header + payload)


def load_snapshot(path):
    """Read a snapshot written by save_snapshot; round-trips bit-exactly."""
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != SNAPSHOT_MAGIC:
        raise FormatError(f"{path}: bad magic bytes")
    if len(blob) < 14:
        raise TruncationError(f"{path}: header incomplete")
    version, dim = struct.unpack("<HQ", blob[4:14])
    if version != SNAPSHOT_VERSION:
        raise HeaderError(f"{path}: unsupported format version {version}")
    if dim == 0:
        raise HeaderError(f"{path}: header declares dim 0")
    payload = blob[14:]
    expected = dim * 4
    if len(payload) < expected:
        raise TruncationError(
            f"{path}: payload holds {len(payload) // 4} of {dim} values"
        )
    if len(payload) > expected:
        raise HeaderError(
            f"{path}: payload longer than the declared dim {dim}"
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    return WeightVector(values)


def save_ensemble(ensemble, directory):
    """Persist an ensemble as one snapshot per member plus an index file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for i, member in enumerate(ensemble.members):
        name = f"member_{i:05d}.wodo"
        save_snapshot(member, directory / name)
        files.append(name)
    index = {
        "dim": ensemble.dim,
        "stage": ensemble.stage.value,
        "seeds": list(ensemble.seeds),
        "files": files,
    }
    (directory / "ensemble.json").write_text(
        json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_ensemble(directory):
    """Load an ensemble saved by save_ensemble, preserving member order."""
    directory = Path(directory)
    index = json.loads((directory / "ensemble.json").read_text(encoding="utf-8"))
    members = tuple(load_snapshot(directory / f) for f in index["files"])
    ensemble = WeightEnsemble(
        members=members,
        stage=Stage(index["stage"]),
        seeds=tuple(index["seeds"]),
    )
    if ensemble.members and ensemble.dim != index["dim"]:
        raise HeaderError(
            f"{directory}: index dim {index['dim']} != member dim {ensemble.dim}"
        )
    return ensemble
