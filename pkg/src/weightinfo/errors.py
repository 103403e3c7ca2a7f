"""Exception types raised across the package.

Every error weightinfo raises deliberately derives from WeightInfoError.
PreconditionFailed (and its subclasses) marks inputs that violate a
documented precondition; the CLI maps those to exit code 2 and every
other WeightInfoError to exit code 1.
"""


class WeightInfoError(Exception):
    """Base class for all errors raised by weightinfo."""


class PreconditionFailed(WeightInfoError):
    """A documented precondition on the inputs does not hold."""


# ---------------------------------------------------------------------------
# core


class EmptyModel(WeightInfoError):
    """A weight flattening was requested for an empty layer list."""


class NonFiniteInput(WeightInfoError):
    """An input tensor contains NaN or infinity."""


class DimMismatch(WeightInfoError):
    """Two vectors or ensembles do not share the same dimension."""


class EmptyEnsemble(WeightInfoError):
    """An operation requires at least one ensemble member."""


class FormatError(WeightInfoError):
    """A snapshot file does not start with the expected magic bytes."""


class HeaderError(WeightInfoError):
    """A snapshot header is inconsistent with the file contents."""


class TruncationError(WeightInfoError):
    """A snapshot file ends before the declared payload is complete."""


# ---------------------------------------------------------------------------
# mds


class AsymmetricInput(WeightInfoError):
    """A matrix that must be symmetric is not."""


class RankError(WeightInfoError):
    """The requested number of eigenpairs exceeds the matrix order."""


class ConvergenceError(WeightInfoError):
    """The eigensolver failed to meet its residual bound."""


class DegenerateEmbedding(WeightInfoError):
    """No retained eigenvalue is positive or zero; nothing to embed."""


# ---------------------------------------------------------------------------
# qmcm


class EmptyReference(WeightInfoError):
    """A nearest-distance query was made against an empty reference set."""


class CvUndefined(WeightInfoError):
    """The coefficient of variation is undefined because the mean is 0."""


class SourceExhausted(WeightInfoError):
    """The sampling source ran out of pairs before the estimator finished."""


class NotConverged(WeightInfoError):
    """An estimate comparison requires converged inputs."""


class DomainError(WeightInfoError):
    """A scalar argument lies outside its mathematical domain."""


class InsufficientSamples(PreconditionFailed):
    """Too few query distances would remain for a meaningful histogram."""


# ---------------------------------------------------------------------------
# infometrics


class InvalidDistribution(WeightInfoError):
    """A probability vector has negative entries or does not sum to 1."""


class ShrinkViolation(WeightInfoError):
    """Support grew where only shrinking supports are meaningful."""


class EmptyTable(WeightInfoError):
    """A joint count table contains no positive entry."""


class BinMismatch(WeightInfoError):
    """A mass vector does not align with the histogram's bin count."""


class DegenerateFit(WeightInfoError):
    """A normal fit is impossible because the sample variance is zero."""


# ---------------------------------------------------------------------------
# toytrain


class DivergenceError(WeightInfoError):
    """Training produced a non-finite loss."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")


class NoClassesLeft(PreconditionFailed):
    """A label restriction would retain zero classes."""


# ---------------------------------------------------------------------------
# harness


class PairingError(WeightInfoError):
    """Initial and final ensembles cannot be paired index by index."""
