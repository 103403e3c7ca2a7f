"""Minimal feed-forward network trainer for desk-scale experiments.

Networks are plain MLPs trained with mini-batch SGD on softmax
cross-entropy. Initialization draws every parameter uniformly from
[-1/sqrt(fan_in), +1/sqrt(fan_in)], giving a bounded, evenly filled
initial weight region. Training runs a fixed number of updates,
epochs * ceil(N / batch_size), independent of data content, so
experimental arms with different dataset sizes can be granted equal
step budgets.

Randomness is split deliberately: the weight init stream is keyed by
MlpSpec.seed while the batch-order stream is keyed by train's seed
argument, so ensembles can share one fixed init while varying data
order, or vary both.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import WeightVector, flatten_weights
from .errors import (
    DimMismatch,
    DivergenceError,
    DomainError,
    NoClassesLeft,
    NonFiniteInput,
)

_ACTIVATIONS = ("relu", "tanh")
_F32_MAX = float(np.finfo(np.float32).max)


@dataclass(frozen=True)
class MlpSpec:
    """Architecture and init seed of one MLP."""

    layer_sizes: tuple
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise DomainError("an MLP needs at least input and output layers")
        if any(s < 1 for s in sizes):
            raise DomainError(f"layer sizes must be positive, got {sizes}")
        if self.activation not in _ACTIVATIONS:
            raise DomainError(
                f"activation must be one of {_ACTIVATIONS}, "
                f"got {self.activation!r}"
            )

    @property
    def parameter_count(self):
        return sum(
            fin * fout + fout
            for fin, fout in zip(self.layer_sizes[:-1], self.layer_sizes[1:])
        )


@dataclass(frozen=True)
class SyntheticDataset:
    """Labeled point cloud with a fixed class count."""

    inputs: np.ndarray
    labels: np.ndarray
    class_count: int
    seed: int

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64).copy()
        labels = np.asarray(self.labels, dtype=np.int64).copy()
        if inputs.ndim != 2 or inputs.shape[0] == 0:
            raise DomainError("inputs must form a nonempty N-by-d matrix")
        if labels.shape != (inputs.shape[0],):
            raise DimMismatch(
                f"{labels.shape} labels for {inputs.shape[0]} samples"
            )
        if not np.all(np.isfinite(inputs)):
            raise NonFiniteInput("dataset inputs must be finite")
        k = int(self.class_count)
        if k < 1:
            raise DomainError("class_count must be positive")
        if labels.min() < 0 or labels.max() >= k:
            raise DomainError(f"labels must lie in [0, {k})")
        present = np.bincount(labels, minlength=k)
        if np.any(present == 0):
            missing = int(np.argmin(present))
            raise DomainError(f"class {missing} has no samples")
        inputs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_count", k)

    def __len__(self):
        return int(self.inputs.shape[0])

    @property
    def feature_dim(self):
        return int(self.inputs.shape[1])


def make_blobs(k, per_class, dim, spread, seed):
    """Gaussian clusters with unit-separated means, per-class counts exact.

    Class c is centered at (1/sqrt(2)) e_c, so every pair of means is
    exactly distance 1 apart; this placement needs dim >= k.
    """
    k = int(k)
    per_class = int(per_class)
    dim = int(dim)
    if k < 2:
        raise DomainError("need at least 2 classes")
    if per_class < 10:
        raise DomainError("need at least 10 samples per class")
    if dim < k:
        raise DomainError(
            f"means sit on orthogonal axes, so dim ({dim}) must be >= k ({k})"
        )
    if not spread > 0:
        raise DomainError("spread must be positive")
    rng = np.random.default_rng(seed)
    half_sqrt2 = 1.0 / math.sqrt(2.0)
    inputs = np.empty((k * per_class, dim), dtype=np.float64)
    labels = np.empty(k * per_class, dtype=np.int64)
    for c in range(k):
        block = slice(c * per_class, (c + 1) * per_class)
        noise = spread * rng.standard_normal((per_class, dim))
        noise[:, c] += half_sqrt2
        inputs[block] = noise
        labels[block] = c
    return SyntheticDataset(
        inputs=inputs, labels=labels, class_count=k, seed=int(seed)
    )


def restrict_labels(ds, fraction):
    """Keep only the first ceil(fraction * k) classes of a dataset.

    Retained labels are already contiguous from 0, so no re-indexing is
    needed; sample count shrinks accordingly. fraction=1.0 returns the
    dataset unchanged.
    """
    fraction = float(fraction)
    if not 0.0 < fraction <= 1.0:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    # tiny backoff so decimal fractions hit their intended class counts
    kept = math.ceil(fraction * ds.class_count - 1e-12)
    if kept < 1:
        raise NoClassesLeft(
            f"fraction {fraction} of {ds.class_count} classes keeps none"
        )
    kept = min(kept, ds.class_count)
    if kept == ds.class_count:
        return ds
    mask = ds.labels < kept
    return SyntheticDataset(
        inputs=ds.inputs[mask],
        labels=ds.labels[mask],
        class_count=kept,
        seed=ds.seed,
    )


def corrupt_labels(ds, rate, seed):
    """Shuffle the labels of floor(rate * N) randomly chosen samples.

    The chosen labels are permuted among themselves, so the global
    label multiset survives; features are untouched. rate=0 returns the
    dataset unchanged. Deterministic per seed.
    """
    rate = float(rate)
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"corruption rate must lie in [0, 1], got {rate}")
    n = len(ds)
    # tiny tolerance so decimal rates select their intended counts
    selected = int(rate * n + 1e-9)
    if selected == 0:
        return ds
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=selected, replace=False)
    labels = ds.labels.copy()
    labels[chosen] = labels[chosen][rng.permutation(selected)]
    return SyntheticDataset(
        inputs=ds.inputs,
        labels=labels,
        class_count=ds.class_count,
        seed=ds.seed,
    )


def _init_layers(spec):
    rng = np.random.default_rng([int(spec.seed), 0])
    weights = []
    biases = []
    for fin, fout in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        bound = 1.0 / math.sqrt(fin)
        weights.append(rng.uniform(-bound, bound, size=(fin, fout)))
        biases.append(rng.uniform(-bound, bound, size=fout))
    return weights, biases


def _interleave(weights, biases):
    layers = []
    for w, b in zip(weights, biases):
        layers.append(w)
        layers.append(b)
    return layers


def _unpack(flat, sizes):
    weights = []
    biases = []
    pos = 0
    for fin, fout in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[pos : pos + fin * fout].reshape(fin, fout))
        pos += fin * fout
        biases.append(flat[pos : pos + fout])
        pos += fout
    return weights, biases


def _forward(weights, biases, x, activation):
    """Hidden activations for each layer plus output logits."""
    acts = [x]
    h = x
    for w, b in zip(weights[:-1], biases[:-1]):
        z = h @ w + b
        h = np.maximum(z, 0.0) if activation == "relu" else np.tanh(z)
        acts.append(h)
    logits = h @ weights[-1] + biases[-1]
    return acts, logits


def _loss_and_grads(weights, biases, x, y, activation):
    """Mean softmax cross-entropy and its parameter gradients."""
    acts, logits = _forward(weights, biases, x, activation)
    shift = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shift)
    total = exp.sum(axis=1, keepdims=True)
    log_p = shift - np.log(total)
    n = x.shape[0]
    loss = float(-log_p[np.arange(n), y].mean())
    delta = exp / total
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = acts[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            back = delta @ weights[layer].T
            if activation == "relu":
                delta = back * (acts[layer] > 0)
            else:
                delta = back * (1.0 - acts[layer] ** 2)
    return loss, grad_w, grad_b


def loss_and_gradient(spec, flat_weights, inputs, labels):
    """Loss and flattened gradient at an arbitrary parameter vector.

    flat_weights follows the same layout as flatten_weights: each
    weight matrix row-major, its bias immediately after.
    """
    flat = np.asarray(flat_weights, dtype=np.float64)
    if flat.shape != (spec.parameter_count,):
        raise DimMismatch(
            f"expected {spec.parameter_count} parameters, got {flat.shape}"
        )
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    weights, biases = _unpack(flat, spec.layer_sizes)
    loss, grad_w, grad_b = _loss_and_grads(
        weights, biases, x, y, spec.activation
    )
    grad = np.concatenate(
        [g.ravel() for pair in zip(grad_w, grad_b) for g in pair]
    )
    return loss, grad


def train(spec, ds, epochs, learning_rate, batch_size, seed):
    """Mini-batch SGD returning initial weights, final weights, and the
    per-step loss curve.

    Runs exactly epochs * ceil(N / batch_size) updates regardless of
    data content. The recorded loss is each batch's cross-entropy
    before its update. Fully deterministic per (spec, ds,
    hyperparameters, seed); learning_rate 0 leaves the weights
    bit-identical.
    """
    epochs = int(epochs)
    batch_size = int(batch_size)
    learning_rate = float(learning_rate)
    if epochs < 1:
        raise DomainError("epochs must be a positive integer")
    if batch_size < 1:
        raise DomainError("batch_size must be a positive integer")
    if learning_rate < 0.0:
        raise DomainError("learning_rate cannot be negative")
    if spec.layer_sizes[0] != ds.feature_dim:
        raise DimMismatch(
            f"input layer {spec.layer_sizes[0]} != feature dim {ds.feature_dim}"
        )
    if spec.layer_sizes[-1] != ds.class_count:
        raise DimMismatch(
            f"output layer {spec.layer_sizes[-1]} != {ds.class_count} classes"
        )
    weights, biases = _init_layers(spec)
    initial = flatten_weights(_interleave(weights, biases))
    order_rng = np.random.default_rng([int(seed), 1])
    x_all = ds.inputs
    y_all = ds.labels
    n = len(ds)
    losses = []
    step = 0
    for _ in range(epochs):
        order = order_rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            loss, grad_w, grad_b = _loss_and_grads(
                weights, biases, x_all[batch], y_all[batch], spec.activation
            )
            if not math.isfinite(loss):
                raise DivergenceError(step)
            losses.append(loss)
            for layer in range(len(weights)):
                weights[layer] -= learning_rate * grad_w[layer]
                biases[layer] -= learning_rate * grad_b[layer]
            # weights beyond float32 range can never be snapshotted, so
            # runs that blow past it count as diverged even while the
            # float64 loss is still finite
            largest = max(
                max(np.max(np.abs(w)) for w in weights),
                max(np.max(np.abs(b)) for b in biases),
            )
            if largest > _F32_MAX:
                raise DivergenceError(step)
            step += 1
    final = flatten_weights(_interleave(weights, biases))
    return initial, final, losses


def accuracy(spec, weight_vector, ds):
    """Fraction of dataset samples the given weights classify correctly."""
    if isinstance(weight_vector, WeightVector):
        flat = weight_vector.to_float64()
    else:
        flat = np.asarray(weight_vector, dtype=np.float64)
    if flat.shape != (spec.parameter_count,):
        raise DimMismatch(
            f"expected {spec.parameter_count} parameters, got {flat.shape}"
        )
    weights, biases = _unpack(flat, spec.layer_sizes)
    _, logits = _forward(weights, biases, ds.inputs, spec.activation)
    predictions = logits.argmax(axis=1)
    return float(np.mean(predictions == ds.labels))


def steps_per_epoch(n_samples, batch_size):
    """Number of SGD updates one epoch performs: ceil(N / batch)."""
    return -(-int(n_samples) // int(batch_size))
