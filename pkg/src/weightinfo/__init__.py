"""Information estimation for neural-network training runs.

The package measures how much information a training process absorbs
from its dataset by tracking how far weights travel from their
initialization: ensembles of identically configured networks are
trained from seeded initial weights, the mean init-to-final Euclidean
distance is estimated adaptively, and larger estimates indicate more
informative training data. Classical MDS embeddings, histogram
information metrics, a desk-scale MLP trainer, and experiment drivers
with a CLI round out the toolkit.

Distance kernels run on a compiled extension when it is available and
fall back to pure numpy otherwise; set WEIGHTINFO_BACKEND=python or
=compiled to force a choice.
"""

from ._kernels import available_backends, backend_name
from .core import (
    DistanceMatrix,
    RunManifest,
    Stage,
    WeightEnsemble,
    WeightVector,
    euclidean_distance,
    flatten_weights,
    load_ensemble,
    load_snapshot,
    pairwise_distances,
    save_ensemble,
    save_snapshot,
)
from .errors import (
    AsymmetricInput,
    BinMismatch,
    ConvergenceError,
    CvUndefined,
    DegenerateEmbedding,
    DegenerateFit,
    DimMismatch,
    DivergenceError,
    DomainError,
    EmptyEnsemble,
    EmptyModel,
    EmptyReference,
    EmptyTable,
    FormatError,
    HeaderError,
    InsufficientSamples,
    InvalidDistribution,
    NoClassesLeft,
    NonFiniteInput,
    NotConverged,
    PairingError,
    PreconditionFailed,
    RankError,
    ShrinkViolation,
    SourceExhausted,
    TruncationError,
    WeightInfoError,
)
from .harness import (
    ExperimentConfig,
    check_nearest_pairing,
    ensemble_distance_stats,
    run_init_ensemble,
    run_label_corruption,
    run_label_fraction,
    run_two_scratch,
)
from .infometrics import (
    Histogram,
    build_histogram,
    entropy,
    fit_normal_mass,
    information_gain,
    kl_divergence,
    mutual_information,
)
from .mds import MdsEmbedding, double_center, mds_embed, top_eigenpairs
from .qmcm import (
    NearestDistanceReport,
    QmcmEstimate,
    RunOrdering,
    compare_runs,
    information_from_ratio,
    mean_nearest_distance,
    nearest_distance,
    qmcm_estimate,
    simulate_distance_distribution,
    total_nearest_distance,
)
from .toytrain import (
    MlpSpec,
    SyntheticDataset,
    corrupt_labels,
    loss_and_gradient,
    make_blobs,
    restrict_labels,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AsymmetricInput",
    "BinMismatch",
    "ConvergenceError",
    "CvUndefined",
    "DegenerateEmbedding",
    "DegenerateFit",
    "DimMismatch",
    "DistanceMatrix",
    "DivergenceError",
    "DomainError",
    "EmptyEnsemble",
    "EmptyModel",
    "EmptyReference",
    "EmptyTable",
    "ExperimentConfig",
    "FormatError",
    "HeaderError",
    "Histogram",
    "InsufficientSamples",
    "InvalidDistribution",
    "MdsEmbedding",
    "MlpSpec",
    "NearestDistanceReport",
    "NoClassesLeft",
    "NonFiniteInput",
    "NotConverged",
    "PairingError",
    "PreconditionFailed",
    "QmcmEstimate",
    "RankError",
    "RunManifest",
    "RunOrdering",
    "ShrinkViolation",
    "SourceExhausted",
    "Stage",
    "SyntheticDataset",
    "TruncationError",
    "WeightEnsemble",
    "WeightInfoError",
    "WeightVector",
    "available_backends",
    "backend_name",
    "build_histogram",
    "check_nearest_pairing",
    "compare_runs",
    "corrupt_labels",
    "double_center",
    "ensemble_distance_stats",
    "entropy",
    "euclidean_distance",
    "fit_normal_mass",
    "flatten_weights",
    "information_from_ratio",
    "information_gain",
    "kl_divergence",
    "load_ensemble",
    "load_snapshot",
    "loss_and_gradient",
    "make_blobs",
    "mds_embed",
    "mean_nearest_distance",
    "mutual_information",
    "nearest_distance",
    "pairwise_distances",
    "qmcm_estimate",
    "restrict_labels",
    "run_init_ensemble",
    "run_label_corruption",
    "run_label_fraction",
    "run_two_scratch",
    "save_ensemble",
    "save_snapshot",
    "simulate_distance_distribution",
    "top_eigenpairs",
    "total_nearest_distance",
    "train",
    "__version__",
]
