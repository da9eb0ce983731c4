import numpy as np
import pytest

from volball.synthetic import (cube_mesh, ellipsoid_mesh, graded_ellipsoid_mesh,
                               hemispheric_population, lcube_mesh,
                               octant_population, smooth_population,
                               stretched_ball_mesh)


def test_cube_mesh_counts():
    mesh = cube_mesh(4)
    assert len(mesh.tets) == 6 * 4**3
    assert len(mesh.vertices) == 5**3
    assert mesh.enclosed_volume() == pytest.approx(8.0, rel=1e-12)
    assert mesh.count_folds(mesh.vertices) == 0


def test_ellipsoid_volume_scales():
    ball = ellipsoid_mesh(1, axes=(1, 1, 1))
    ell = ellipsoid_mesh(1, axes=(2, 1, 1))
    assert ell.enclosed_volume() == pytest.approx(2 * ball.enclosed_volume(),
                                                  rel=1e-10)


def test_graded_ellipsoid_valid_and_graded():
    mesh = graded_ellipsoid_mesh(1)
    assert mesh.count_folds(mesh.vertices) == 0
    vols = mesh.volumes
    assert vols.max() / vols.min() > 5.0


def test_lcube_topology():
    mesh = lcube_mesh(4)
    assert mesh.count_folds(mesh.vertices) == 0
    # 7/8 of the full cube volume
    assert mesh.enclosed_volume() == pytest.approx(7.0, rel=1e-12)


def test_populations_positive_and_patterned():
    mesh = cube_mesh(4)
    hemi = hemispheric_population(mesh, ratio=4.0)
    assert np.all(hemi > 0)
    rho = hemi / np.abs(mesh.volumes)
    assert set(np.round(np.unique(rho), 9)) == {1.0, 4.0}
    smooth = smooth_population(mesh, ratio=5.0)
    r = smooth / np.abs(mesh.volumes)
    assert r.max() / r.min() == pytest.approx(5.0, rel=0.2)
    oct0 = octant_population(mesh, seed=0)
    oct1 = octant_population(mesh, seed=1)
    assert np.all(oct0 > 0)
    assert not np.allclose(oct0, oct1)
    np.testing.assert_array_equal(oct0, octant_population(mesh, seed=0))


def test_stretched_ball_is_affine_ball():
    mesh = stretched_ball_mesh(1, stretch=(2.0, 1.0, 0.5))
    ball = ellipsoid_mesh(1, axes=(1, 1, 1))
    np.testing.assert_allclose(mesh.vertices, ball.vertices * [2.0, 1.0, 0.5])
