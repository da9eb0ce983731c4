import numpy as np
import pytest

from volball import linsolve
from volball.laplace import (face_area_vectors, harmonic_fill, laplacian_matrix,
                             tet_cotangent_weights)
from volball.tetmesh import TetMesh

# cot(arccos(1/3)) / 12 for a unit-edge regular tetrahedron
REGULAR_TET_WEIGHT = (1.0 / (2.0 * np.sqrt(2.0))) / 12.0


def _regular_tet(scale=1.0):
    verts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
                     dtype=float) / np.sqrt(8.0) * scale
    return TetMesh.from_arrays(verts, np.array([[0, 1, 2, 3]]))


def test_regular_tet_weight_value():
    w = tet_cotangent_weights(_regular_tet())
    assert len(w.weights) == 6
    np.testing.assert_allclose(w.weights, REGULAR_TET_WEIGHT, rtol=1e-12)


def test_weights_scale_linearly():
    w1 = tet_cotangent_weights(_regular_tet(1.0))
    w3 = tet_cotangent_weights(_regular_tet(3.0))
    np.testing.assert_allclose(w3.weights, 3.0 * w1.weights, rtol=1e-12)


def test_weights_symmetric_pairs(ball_mesh):
    w = tet_cotangent_weights(ball_mesh)
    # one weight per undirected edge, keys sorted
    assert np.all(w.edges[:, 0] < w.edges[:, 1])
    assert len(np.unique(w.edges, axis=0)) == len(w.edges)
    d = w.as_dict()
    assert all(np.isfinite(v) for v in d.values())


def test_face_area_vectors_close(reference_tet):
    S = face_area_vectors(reference_tet.vertices, reference_tet.tets)[0]
    np.testing.assert_allclose(S.sum(axis=0), 0.0, atol=1e-14)


def test_laplacian_row_sums_zero(ball_mesh):
    L = laplacian_matrix(ball_mesh)
    rows = np.asarray(L.sum(axis=1)).ravel()
    assert np.abs(rows).max() < 1e-10
    assert (abs(L - L.T)).max() < 1e-12


def test_harmonic_fill_identity(ball_mesh):
    bidx = ball_mesh.boundary_vertices
    pos = harmonic_fill(ball_mesh, ball_mesh.vertices[bidx], bidx)
    np.testing.assert_allclose(pos, ball_mesh.vertices, atol=1e-8)


def test_harmonic_fill_constant(ball_mesh):
    bidx = ball_mesh.boundary_vertices
    p = np.array([0.3, -0.2, 0.9])
    pos = harmonic_fill(ball_mesh, np.tile(p, (len(bidx), 1)), bidx)
    np.testing.assert_allclose(pos, np.tile(p, (len(pos), 1)), atol=1e-9)


def test_harmonic_fill_linear_functions(ball_mesh):
    # affine maps are harmonic: boundary = A x + t reproduces A x + t inside
    A = np.array([[1.0, 0.2, 0.0], [0.0, 0.8, 0.1], [0.3, 0.0, 1.2]])
    t = np.array([0.1, -0.4, 0.2])
    bidx = ball_mesh.boundary_vertices
    pos = harmonic_fill(ball_mesh, ball_mesh.vertices[bidx] @ A.T + t, bidx)
    np.testing.assert_allclose(pos, ball_mesh.vertices @ A.T + t, atol=1e-8)


def test_harmonic_energy_minimality(ball_mesh):
    from volball.sphere_map import compute_boundary_sphere_map
    bmap = compute_boundary_sphere_map(ball_mesh, mode="conformal")
    pos = harmonic_fill(ball_mesh, bmap.points, bmap.vertex_indices)
    L = laplacian_matrix(ball_mesh)

    def energy(p):
        return sum(float(p[:, c] @ (L @ p[:, c])) for c in range(3))

    base = energy(pos)
    interior = ~ball_mesh.boundary_vertex_mask
    rng = np.random.default_rng(123)
    for _ in range(100):
        bump = np.zeros_like(pos)
        bump[interior] = 1e-3 * rng.normal(size=(interior.sum(), 3))
        assert energy(pos + bump) >= base - 1e-12


def test_maximum_principle_advisory(cube8):
    from volball.sphere_map import compute_boundary_sphere_map
    w = tet_cotangent_weights(cube8)
    bmap = compute_boundary_sphere_map(cube8, mode="conformal")
    pos = harmonic_fill(cube8, bmap.points, bmap.vertex_indices)
    if w.weights.min() >= 0:
        lo = bmap.points.min(axis=0) - 1e-9
        hi = bmap.points.max(axis=0) + 1e-9
        assert np.all(pos >= lo) and np.all(pos <= hi)
    else:
        # negative weights void the maximum principle; just require a valid map
        assert cube8.count_folds(pos) == 0
