import numpy as np
import pytest

from volball.tetmesh import (BarycentricCoord, DegenerateTetError, PointLocator,
                             TetMesh, TopologyError, barycentric_coordinates,
                             signed_volumes)


def test_reference_tet_basics(reference_tet):
    assert len(reference_tet.vertices) == 4
    assert len(reference_tet.tets) == 1
    assert len(reference_tet.boundary_faces) == 4
    assert reference_tet.signed_volume(0) == pytest.approx(1.0 / 6.0)


def test_signed_volume_orientation_and_scaling():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert signed_volumes(verts, np.array([[0, 1, 2, 3]]))[0] == pytest.approx(1 / 6)
    # odd permutation flips the sign
    assert signed_volumes(verts, np.array([[0, 1, 3, 2]]))[0] == pytest.approx(-1 / 6)
    assert signed_volumes(2 * verts, np.array([[0, 1, 2, 3]]))[0] == pytest.approx(8 / 6)


def test_negative_tet_reoriented_at_load():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    mesh = TetMesh.from_arrays(verts, np.array([[0, 1, 3, 2]]))
    assert mesh.signed_volume(0) > 0


def test_degenerate_tet_rejected():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(DegenerateTetError):
        TetMesh.from_arrays(verts, np.array([[0, 1, 2, 2]]))
    flat = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    with pytest.raises(DegenerateTetError):
        TetMesh.from_arrays(flat, np.array([[0, 1, 2, 3]]))


def test_two_tet_boundary_euler(two_tet_mesh):
    # shared-face bipyramid: 6 boundary faces, V - E + F = 5 - 9 + 6 = 2
    assert len(two_tet_mesh.boundary_faces) == 6
    bverts = np.unique(two_tet_mesh.boundary_faces)
    edges = np.sort(two_tet_mesh.boundary_faces[:, [[0, 1], [1, 2], [2, 0]]]
                    .reshape(-1, 2), axis=1)
    n_edges = len(np.unique(edges, axis=0))
    assert len(bverts) - n_edges + 6 == 2


def test_isolated_vertex_rejected():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [5, 5, 5]])
    with pytest.raises(TopologyError):
        TetMesh.from_arrays(verts, np.array([[0, 1, 2, 3]]))


def test_boundary_outward_orientation(reference_tet):
    # enclosed volume via the divergence theorem matches the tet volume
    assert reference_tet.enclosed_volume() == pytest.approx(1 / 6, rel=1e-12)


def test_volume_divergence_identity(ball_mesh):
    total = ball_mesh.volumes.sum()
    assert ball_mesh.enclosed_volume() == pytest.approx(total, rel=1e-10)


def test_count_folds(ball_mesh):
    assert ball_mesh.count_folds(ball_mesh.vertices) == 0
    mirrored = ball_mesh.vertices.copy()
    mirrored[:, 0] *= -1
    assert ball_mesh.count_folds(mirrored) == len(ball_mesh.tets)


def test_count_folds_reflected_vertex(reference_tet):
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]])
    mesh = TetMesh.from_arrays(verts, np.array([[0, 1, 2, 3], [1, 2, 3, 4]]))
    moved = mesh.vertices.copy()
    # push vertex 0 through the plane of face (1,2,3); only its tet inverts
    moved[0] = [1.0, 1.0, 1.0 + 1e-3]
    sv = signed_volumes(moved, mesh.tets)
    assert mesh.count_folds(moved) == int(np.count_nonzero(sv <= 0)) == 1


def test_count_folds_rigid_motion_invariant(ball_mesh):
    rng = np.random.default_rng(7)
    theta = 0.7
    R = np.array([[np.cos(theta), -np.sin(theta), 0],
                  [np.sin(theta), np.cos(theta), 0], [0, 0, 1.0]])
    moved = ball_mesh.vertices @ R.T + rng.normal(size=3)
    assert ball_mesh.count_folds(moved) == 0


def test_locate_point_centroid(ball_mesh):
    k = 17
    centroid = ball_mesh.vertices[ball_mesh.tets[k]].mean(axis=0)
    bc = ball_mesh.locate_point(centroid)
    assert bc is not None
    lam = barycentric_coordinates(ball_mesh.vertices, ball_mesh.tets,
                                  np.array([bc.tet_index]), centroid[None])[0]
    assert lam.sum() == pytest.approx(1.0)
    if bc.tet_index == k:
        np.testing.assert_allclose(bc.lambdas, 0.25, atol=1e-9)


def test_locate_point_vertex_and_outside(ball_mesh):
    v = ball_mesh.vertices[5]
    bc = ball_mesh.locate_point(v)
    assert bc is not None
    assert np.max(bc.lambdas) == pytest.approx(1.0, abs=1e-8)
    assert ball_mesh.locate_point(np.array([2.0, 0, 0])) is None


def test_locate_point_roundtrip(ball_mesh):
    rng = np.random.default_rng(0)
    tet_ids = rng.integers(0, len(ball_mesh.tets), size=1000)
    lam = rng.dirichlet(np.ones(4), size=1000)
    points = np.einsum("ki,kij->kj", lam, ball_mesh.vertices[ball_mesh.tets[tet_ids]])
    for tid, p, l in zip(tet_ids, points, lam):
        bc = ball_mesh.locate_point(p)
        assert bc is not None
        # the located tet must actually contain the point
        check = barycentric_coordinates(ball_mesh.vertices, ball_mesh.tets,
                                        np.array([bc.tet_index]), p[None])[0]
        assert check.min() >= -1e-9
        assert bc.point(ball_mesh.vertices, ball_mesh.tets) == pytest.approx(p, abs=1e-9)


def test_barycentric_point_roundtrip(reference_tet):
    bc = BarycentricCoord(0, np.array([0.1, 0.2, 0.3, 0.4]))
    p = bc.point(reference_tet.vertices, reference_tet.tets)
    located = reference_tet.locate_point(p)
    np.testing.assert_allclose(located.lambdas, bc.lambdas, atol=1e-12)


def test_locator_standalone(ball_mesh):
    loc = PointLocator(ball_mesh.vertices, ball_mesh.tets)
    assert loc.locate(np.zeros(3)) is not None
    assert loc.locate(np.array([0.0, 0.0, 3.0])) is None
