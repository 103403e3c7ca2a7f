"""Classical MDS: centering, eigenpairs, embedding isometry."""

import csv
import math

import numpy as np
import pytest

from weightinfo.errors import (
    AsymmetricInput,
    DomainError,
    RankError,
)
from weightinfo.mds import (
    MdsEmbedding,
    double_center,
    embedded_distances,
    embedding_csv,
    mds_embed,
    top_eigenpairs,
    write_embedding_csv,
)
from weightinfo.core import DistanceMatrix, Stage

from oracles import power_iteration_eigenpairs


def _distance_matrix_from_points(points):
    """Exact-symmetry distance matrix built independently of the package."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = math.sqrt(float(np.sum((pts[i] - pts[j]) ** 2)))
            entries[i, j] = d
            entries[j, i] = d
    return DistanceMatrix(entries)


# ---------------------------------------------------------------------------
# double_center


def test_double_center_two_points():
    b = double_center(np.array([[0.0, 4.0], [4.0, 0.0]]))
    assert np.allclose(b, np.array([[1.0, -1.0], [-1.0, 1.0]]),
                       rtol=0.0, atol=1e-15)


def test_double_center_zeros():
    b = double_center(np.zeros((3, 3)))
    assert np.array_equal(b, np.zeros((3, 3)))


def test_double_center_row_sums_vanish(rng):
    pts = rng.standard_normal((20, 6))
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    d2 = 0.5 * (d2 + d2.T)
    np.fill_diagonal(d2, 0.0)
    b = double_center(d2)
    assert np.max(np.abs(b.sum(axis=1))) < 1e-9
    assert np.array_equal(b, b.T)


def test_double_center_rejects_asymmetry():
    with pytest.raises(AsymmetricInput):
        double_center(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_double_center_rejects_negative_entries():
    with pytest.raises(DomainError):
        double_center(np.array([[0.0, -1.0], [-1.0, 0.0]]))


# ---------------------------------------------------------------------------
# top_eigenpairs


def test_top_eigenpairs_diagonal():
    values, vectors = top_eigenpairs(np.diag([3.0, 1.0, 2.0]), 2)
    assert np.array_equal(values, np.array([3.0, 2.0]))
    assert vectors.shape == (3, 2)


def test_top_eigenpairs_identity_residual():
    matrix = np.eye(4)
    values, vectors = top_eigenpairs(matrix, 1)
    assert values[0] == pytest.approx(1.0, rel=1e-12)
    v = vectors[:, 0]
    assert np.linalg.norm(matrix @ v - values[0] * v) <= 1e-8
    assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)


def test_top_eigenpairs_matches_power_iteration_oracle(rng):
    base = rng.standard_normal((15, 15))
    matrix = 0.5 * (base + base.T)
    matrix = 0.5 * (matrix + matrix.T)
    values, vectors = top_eigenpairs(matrix, 4)
    oracle_values, _ = power_iteration_eigenpairs(matrix, 4)
    assert np.all(np.diff(values) <= 0.0)
    assert np.allclose(values, oracle_values, rtol=0.0, atol=1e-8)
    for k in range(4):
        v = vectors[:, k]
        residual = np.linalg.norm(matrix @ v - values[k] * v)
        assert residual <= 1e-8 * max(1.0, abs(values[k]))


def test_top_eigenpairs_rank_errors():
    matrix = np.eye(3)
    with pytest.raises(RankError):
        top_eigenpairs(matrix, 4)
    with pytest.raises(RankError):
        top_eigenpairs(matrix, 0)


def test_top_eigenpairs_rejects_asymmetry():
    with pytest.raises(AsymmetricInput):
        top_eigenpairs(np.array([[1.0, 2.0], [3.0, 4.0]]), 1)


# ---------------------------------------------------------------------------
# mds_embed


def test_unit_square_round_trip():
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    dm = _distance_matrix_from_points(corners)
    embedding = mds_embed(dm, 2)
    got = np.sort(embedded_distances(embedding)[np.triu_indices(4, k=1)])
    expected = np.sort(dm.entries[np.triu_indices(4, k=1)])
    assert np.allclose(got, expected, rtol=1e-6, atol=0.0)
    root2 = math.sqrt(2.0)
    assert np.allclose(expected, [1.0, 1.0, 1.0, 1.0, root2, root2],
                       rtol=1e-12)


def test_identical_points_embed_to_zero():
    dm = DistanceMatrix(np.zeros((5, 5)))
    embedding = mds_embed(dm, 2)
    assert np.array_equal(embedding.points, np.zeros((5, 2)))


def test_isometry_recovery(rng):
    for intrinsic in (1, 2, 3):
        pts = rng.standard_normal((12, intrinsic))
        dm = _distance_matrix_from_points(pts)
        embedding = mds_embed(dm, 3)
        got = embedded_distances(embedding)
        mask = ~np.eye(12, dtype=bool)
        assert np.allclose(got[mask], dm.entries[mask], rtol=1e-6, atol=0.0)


def test_rigid_motion_leaves_distance_multiset(rng):
    pts = rng.standard_normal((10, 3))
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    moved = pts @ q.T + rng.standard_normal(3)
    emb_a = mds_embed(_distance_matrix_from_points(pts), 3)
    emb_b = mds_embed(_distance_matrix_from_points(moved), 3)
    da = np.sort(embedded_distances(emb_a).ravel())
    db = np.sort(embedded_distances(emb_b).ravel())
    assert np.allclose(da, db, rtol=1e-6, atol=1e-9)


def test_eigenvalues_non_increasing_and_clamped(rng):
    # L1 distances are generally non-Euclidean, which drives some MDS
    # eigenvalues negative before clamping
    pts = rng.standard_normal((9, 4))
    n = 9
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.sum(np.abs(pts[i] - pts[j])))
            entries[i, j] = d
            entries[j, i] = d
    embedding = mds_embed(DistanceMatrix(entries), 5)
    assert np.all(np.diff(embedding.eigenvalues) <= 0.0)
    assert np.all(embedding.eigenvalues >= 0.0)


def test_mds_embed_rank_bounds(rng):
    dm = _distance_matrix_from_points(rng.standard_normal((4, 2)))
    with pytest.raises(RankError):
        mds_embed(dm, 5)


# ---------------------------------------------------------------------------
# CSV export


def test_embedding_csv_format(rng):
    pts = rng.standard_normal((3, 2))
    embedding = MdsEmbedding(points=pts, eigenvalues=np.array([2.0, 1.0]))
    text = embedding_csv(embedding, [Stage.INITIAL, Stage.FINAL,
                                     Stage.INITIAL])
    lines = text.splitlines()
    assert lines[0] == "index,stage,x1,x2"
    assert len(lines) == 4
    assert text.endswith("\n")
    first = lines[1].split(",")
    assert first[0] == "0"
    assert first[1] == "Initial"
    # 17 significant digits must round-trip the double exactly
    assert float(first[2]) == embedding.points[0, 0]


def test_embedding_csv_stage_count_checked(rng):
    embedding = MdsEmbedding(points=rng.standard_normal((3, 2)),
                             eigenvalues=np.array([2.0, 1.0]))
    with pytest.raises(DomainError):
        embedding_csv(embedding, [Stage.INITIAL])


def test_write_embedding_csv_round_trip(tmp_path, rng):
    pts = rng.standard_normal((4, 3))
    embedding = MdsEmbedding(points=pts,
                             eigenvalues=np.array([3.0, 2.0, 1.0]))
    path = tmp_path / "emb.csv"
    write_embedding_csv(embedding, ["Initial"] * 4, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    parsed = np.array(
        [[float(row[f"x{k}"]) for k in (1, 2, 3)] for row in rows]
    )
    assert np.array_equal(parsed, pts)
    raw = path.read_bytes()
    assert b"\r" not in raw