"""Dataset construction, label controls, and the MLP trainer."""

import math

import numpy as np
import pytest

from weightinfo.errors import (
    DimMismatch,
    DivergenceError,
    DomainError,
    NoClassesLeft,
)
from weightinfo.infometrics import entropy
from weightinfo.toytrain import (
    MlpSpec,
    accuracy,
    corrupt_labels,
    loss_and_gradient,
    make_blobs,
    restrict_labels,
    steps_per_epoch,
    train,
)

from oracles import central_difference_gradient, perceptron_separates


# ---------------------------------------------------------------------------
# make_blobs


def test_blobs_binary_separable_by_perceptron():
    ds = make_blobs(2, 10, 2, 0.1, seed=0)
    assert len(ds) == 20
    error_free, margin = perceptron_separates(ds.inputs, ds.labels)
    assert error_free
    assert margin > 0.0


def test_blobs_deterministic():
    a = make_blobs(3, 12, 5, 0.2, seed=4)
    b = make_blobs(3, 12, 5, 0.2, seed=4)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.labels, b.labels)


def test_blobs_uniform_label_histogram():
    ds = make_blobs(10, 100, 20, 0.3, seed=1)
    assert np.array_equal(np.bincount(ds.labels), np.full(10, 100))


def test_blobs_preconditions():
    with pytest.raises(DomainError):
        make_blobs(1, 10, 4, 0.1, seed=0)
    with pytest.raises(DomainError):
        make_blobs(2, 9, 4, 0.1, seed=0)
    with pytest.raises(DomainError):
        make_blobs(4, 10, 3, 0.1, seed=0)


# ---------------------------------------------------------------------------
# restrict_labels


def test_restrict_full_fraction_is_identity():
    ds = make_blobs(4, 10, 6, 0.2, seed=2)
    kept = restrict_labels(ds, 1.0)
    assert np.array_equal(kept.inputs, ds.inputs)
    assert np.array_equal(kept.labels, ds.labels)


def test_restrict_keeps_first_classes():
    ds = make_blobs(10, 10, 12, 0.2, seed=3)
    kept = restrict_labels(ds, 0.2)
    assert kept.class_count == 2
    assert set(np.unique(kept.labels)) == {0, 1}
    assert len(kept) == 20


def test_restrict_decimal_fractions_hit_expected_counts():
    ds = make_blobs(10, 10, 12, 0.2, seed=3)
    for fraction, expected in ((0.2, 2), (0.4, 4), (0.6, 6), (0.8, 8)):
        assert restrict_labels(ds, fraction).class_count == expected


def test_restrict_entropy_grows_with_fraction():
    ds = make_blobs(10, 10, 12, 0.2, seed=5)
    entropies = []
    for fraction in (0.2, 0.5, 1.0):
        kept = restrict_labels(ds, fraction)
        marginal = np.bincount(kept.labels) / len(kept)
        entropies.append(entropy(marginal))
    assert entropies[0] == pytest.approx(math.log(2.0), rel=1e-12)
    assert entropies[-1] == pytest.approx(math.log(10.0), rel=1e-12)
    assert entropies == sorted(entropies)


def test_restrict_no_classes_left():
    ds = make_blobs(10, 10, 12, 0.2, seed=3)
    with pytest.raises(NoClassesLeft):
        restrict_labels(ds, 1e-14)
    with pytest.raises(DomainError):
        restrict_labels(ds, 0.0)


# ---------------------------------------------------------------------------
# corrupt_labels


def test_corrupt_rate_zero_identity():
    ds = make_blobs(3, 10, 4, 0.2, seed=6)
    out = corrupt_labels(ds, 0.0, seed=1)
    assert np.array_equal(out.labels, ds.labels)
    assert np.array_equal(out.inputs, ds.inputs)


def test_corrupt_preserves_label_multiset():
    ds = make_blobs(4, 15, 5, 0.2, seed=7)
    for rate in (0.3, 0.7, 1.0):
        out = corrupt_labels(ds, rate, seed=2)
        assert np.array_equal(np.bincount(out.labels),
                              np.bincount(ds.labels))
        assert np.array_equal(out.inputs, ds.inputs)


def test_corrupt_changes_at_most_floor_rate_n():
    ds = make_blobs(4, 15, 5, 0.2, seed=8)
    n = len(ds)
    for rate in (0.1, 0.5, 0.9):
        out = corrupt_labels(ds, rate, seed=3)
        changed = int(np.sum(out.labels != ds.labels))
        assert changed <= int(rate * n + 1e-9)


def test_corrupt_deterministic():
    ds = make_blobs(4, 15, 5, 0.2, seed=9)
    a = corrupt_labels(ds, 0.5, seed=11)
    b = corrupt_labels(ds, 0.5, seed=11)
    assert np.array_equal(a.labels, b.labels)
    assert not np.array_equal(
        corrupt_labels(ds, 0.5, seed=12).labels, a.labels
    )


# ---------------------------------------------------------------------------
# gradients


def _random_instance(rng, spec, n_points=10):
    sizes = []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        sizes.append(fan_in * fan_out + fan_out)
    flat = rng.standard_normal(sum(sizes))
    inputs = rng.standard_normal((n_points, spec.layer_sizes[0]))
    labels = rng.integers(0, spec.layer_sizes[-1], size=n_points)
    return flat, inputs, labels


@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_gradients_match_finite_differences(activation, rng):
    spec = MlpSpec(layer_sizes=(2, 4, 2), activation=activation, seed=0)
    for _ in range(3):
        flat, inputs, labels = _random_instance(rng, spec)
        _, grad = loss_and_gradient(spec, flat, inputs, labels)

        def loss_of(w):
            return loss_and_gradient(spec, w, inputs, labels)[0]

        fd = central_difference_gradient(loss_of, flat, h=1e-5)
        denom = np.maximum(np.abs(fd), 1e-8)
        assert np.max(np.abs(grad - fd) / denom) < 1e-4


def test_gradient_shape_checked(rng):
    spec = MlpSpec(layer_sizes=(2, 4, 2), activation="relu", seed=0)
    with pytest.raises(DimMismatch):
        loss_and_gradient(spec, np.zeros(5), np.zeros((3, 2)),
                          np.zeros(3, dtype=np.int64))


# ---------------------------------------------------------------------------
# train


def test_zero_learning_rate_keeps_weights():
    ds = make_blobs(2, 10, 3, 0.2, seed=0)
    spec = MlpSpec(layer_sizes=(3, 5, 2), activation="relu", seed=1)
    initial, final, losses = train(spec, ds, epochs=2, learning_rate=0.0,
                                   batch_size=10, seed=2)
    assert initial == final
    assert len(losses) == 2 * steps_per_epoch(len(ds), 10)


def test_training_deterministic():
    ds = make_blobs(3, 10, 4, 0.2, seed=1)
    spec = MlpSpec(layer_sizes=(4, 6, 3), activation="relu", seed=5)
    a = train(spec, ds, epochs=3, learning_rate=0.1, batch_size=8, seed=7)
    b = train(spec, ds, epochs=3, learning_rate=0.1, batch_size=8, seed=7)
    assert a[0] == b[0]
    assert a[1] == b[1]
    assert a[2] == b[2]


def test_order_seed_changes_trajectory_not_init():
    ds = make_blobs(3, 10, 4, 0.2, seed=1)
    spec = MlpSpec(layer_sizes=(4, 6, 3), activation="relu", seed=5)
    a = train(spec, ds, epochs=3, learning_rate=0.1, batch_size=8, seed=7)
    b = train(spec, ds, epochs=3, learning_rate=0.1, batch_size=8, seed=8)
    assert a[0] == b[0]
    assert a[1] != b[1]


def test_separable_blobs_reach_accuracy():
    ds = make_blobs(2, 20, 2, 0.1, seed=3)
    spec = MlpSpec(layer_sizes=(2, 8, 2), activation="relu", seed=0)
    _, final, losses = train(spec, ds, epochs=50, learning_rate=0.2,
                             batch_size=10, seed=1)
    assert accuracy(spec, final, ds) >= 0.95
    assert np.all(np.isfinite(losses))


def test_step_count_contract():
    ds_a = make_blobs(2, 12, 3, 0.2, seed=4)
    ds_b = make_blobs(2, 12, 3, 0.9, seed=9)
    spec = MlpSpec(layer_sizes=(3, 4, 2), activation="tanh", seed=0)
    _, _, losses_a = train(spec, ds_a, epochs=4, learning_rate=0.05,
                           batch_size=7, seed=0)
    _, _, losses_b = train(spec, ds_b, epochs=4, learning_rate=0.05,
                           batch_size=7, seed=0)
    assert len(losses_a) == len(losses_b) == 4 * math.ceil(24 / 7)


def test_divergence_reports_step():
    ds = make_blobs(2, 10, 3, 0.2, seed=5)
    spec = MlpSpec(layer_sizes=(3, 4, 2), activation="relu", seed=0)
    with pytest.raises(DivergenceError) as excinfo:
        train(spec, ds, epochs=50, learning_rate=1e100, batch_size=5,
              seed=0)
    assert excinfo.value.step >= 0


def test_train_shape_preconditions():
    ds = make_blobs(3, 10, 4, 0.2, seed=6)
    with pytest.raises(DimMismatch):
        train(MlpSpec(layer_sizes=(5, 4, 3), activation="relu", seed=0),
              ds, epochs=1, learning_rate=0.1, batch_size=5, seed=0)
    with pytest.raises(DimMismatch):
        train(MlpSpec(layer_sizes=(4, 4, 2), activation="relu", seed=0),
              ds, epochs=1, learning_rate=0.1, batch_size=5, seed=0)


def test_init_respects_fan_in_bounds():
    ds = make_blobs(2, 10, 3, 0.2, seed=7)
    spec = MlpSpec(layer_sizes=(3, 16, 2), activation="relu", seed=42)
    initial, _, _ = train(spec, ds, epochs=1, learning_rate=0.0,
                          batch_size=10, seed=0)
    values = initial.to_float64()
    first_layer = values[: 3 * 16 + 16]
    bound = 1.0 / math.sqrt(3.0)
    assert np.max(np.abs(first_layer)) <= bound
    rest = values[3 * 16 + 16:]
    assert np.max(np.abs(rest)) <= 1.0 / math.sqrt(16.0)


def test_mlp_spec_validation():
    with pytest.raises(DomainError):
        MlpSpec(layer_sizes=(4,), activation="relu", seed=0)
    with pytest.raises(DomainError):
        MlpSpec(layer_sizes=(4, 2), activation="gelu", seed=0)
    with pytest.raises(DomainError):
        MlpSpec(layer_sizes=(4, 0, 2), activation="relu", seed=0)
