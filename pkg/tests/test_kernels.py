"""Distance-kernel contracts: backend parity, exactness, tie-breaking."""

import numpy as np
import pytest

from weightinfo import _kernels
from weightinfo._kernels import available_backends, get_backend

from oracles import brute_sq_distance

BACKENDS = [get_backend(name) for name in available_backends()]
BACKEND_IDS = list(available_backends())


def test_compiled_backend_is_built():
    assert "compiled" in available_backends()
    assert "python" in available_backends()


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_sq_dist_matches_brute_force_loop(backend, rng):
    for _ in range(20):
        a = rng.standard_normal(100)
        b = rng.standard_normal(100)
        expected = brute_sq_distance(a, b)
        got = backend.sq_dist(a, b)
        assert got == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_pairwise_rows_equal_single_pair_calls(backend, rng):
    # the acceptance monotonicity argument needs the matrix route and
    # the one-pair route to agree bitwise, not just approximately
    points = rng.standard_normal((40, 7))
    matrix = backend.pairwise_sq(points)
    for i in range(40):
        for j in range(40):
            assert matrix[i, j] == backend.sq_dist(points[i], points[j])


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_pairwise_symmetric_with_zero_diagonal(backend, rng):
    points = rng.standard_normal((25, 5))
    matrix = backend.pairwise_sq(points)
    assert np.array_equal(matrix, matrix.T)
    assert np.all(np.diagonal(matrix) == 0.0)
    assert np.all(matrix >= 0.0)


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_cross_sq_matches_sq_dist(backend, rng):
    left = rng.standard_normal((12, 6))
    right = rng.standard_normal((9, 6))
    cross = backend.cross_sq(left, right)
    assert cross.shape == (12, 9)
    for i in range(12):
        for j in range(9):
            assert cross[i, j] == backend.sq_dist(left[i], right[j])


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_nearest_sq_finds_minimum(backend, rng):
    refs = rng.standard_normal((30, 4))
    query = rng.standard_normal(4)
    d2, idx = backend.nearest_sq(refs, query)
    per_ref = [backend.sq_dist(r, query) for r in refs]
    assert d2 == min(per_ref)
    assert d2 == per_ref[idx]


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_nearest_sq_bulk_matches_single_queries(backend, rng):
    refs = rng.standard_normal((20, 3))
    queries = rng.standard_normal((15, 3))
    dists, indices = backend.nearest_sq_bulk(refs, queries)
    for k, query in enumerate(queries):
        single_d, single_i = backend.nearest_sq(refs, query)
        assert dists[k] == single_d
        assert indices[k] == single_i
        assert dists[k] == backend.sq_dist(refs[indices[k]], query)


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
def test_nearest_tie_breaks_to_lowest_index(backend):
    refs = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    query = np.array([0.0, 0.0])
    _, indices = backend.nearest_sq_bulk(refs, query[None, :])
    assert indices[0] == 0


def test_backends_agree_within_tolerance(rng):
    # summation order may differ between implementations, so parity is
    # near-exact rather than bitwise
    backends = [get_backend(name) for name in available_backends()]
    if len(backends) < 2:
        pytest.skip("only one backend available")
    first, second = backends[0], backends[1]
    points = rng.standard_normal((30, 50))
    queries = rng.standard_normal((10, 50))
    m1 = first.pairwise_sq(points)
    m2 = second.pairwise_sq(points)
    assert np.allclose(m1, m2, rtol=1e-12, atol=0.0)
    d1, i1 = first.nearest_sq_bulk(points, queries)
    d2, i2 = second.nearest_sq_bulk(points, queries)
    assert np.allclose(d1, d2, rtol=1e-12, atol=0.0)
    assert np.array_equal(i1, i2)


def test_backend_env_override(monkeypatch):
    monkeypatch.setenv("WEIGHTINFO_BACKEND", "python")
    assert get_backend().__name__.endswith("_pykernels")
    monkeypatch.setenv("WEIGHTINFO_BACKEND", "nonsense")
    with pytest.raises(ValueError):
        get_backend()


def test_module_level_kernels_are_bound():
    points = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert _kernels.sq_dist(points[0], points[1]) == 25.0
    assert _kernels.pairwise_sq(points)[0, 1] == 25.0
