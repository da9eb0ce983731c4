"""Synthetic solids and population patterns used by the demos and tests."""

from __future__ import annotations

import numpy as np

from .remesh import uniform_ball_mesh
from .tetmesh import TetMesh, signed_volumes

#6-tet decomposition of a cube cell around the main diagonal 000-111.
_CUBE_TETS = np.array([
    [0b000, 0b100, 0b110, 0b111],
    [0b000, 0b110, 0b010, 0b111],
    [0b000, 0b010, 0b011, 0b111],
    [0b000, 0b011, 0b001, 0b111],
    [0b000, 0b001, 0b101, 0b111],
    [0b000, 0b101, 0b100, 0b111],
])


def cube_mesh(n: int = 8, half_width: float = 1.0) -> TetMesh:
    """Regular tetrahedralization of the cube [-h, h]^3 with 6 n^3 tets."""
    if n < 1:
        raise ValueError("n must be >= 1")
    axis = np.linspace(-half_width, half_width, n + 1)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    vertices = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    cells = np.arange(n)
    ci, cj, ck = np.meshgrid(cells, cells, cells, indexing="ij")
    ci, cj, ck = ci.ravel(), cj.ravel(), ck.ravel()
    corner = np.stack([vid(ci + ((b >> 2) & 1), cj + ((b >> 1) & 1), ck + (b & 1))
                       for b in range(8)], axis=1)  # (cells, 8)
    tets = corner[:, _CUBE_TETS].reshape(-1, 4)
    return TetMesh.from_arrays(vertices, tets)


def ellipsoid_mesh(resolution: int = 2, axes=(2.0, 1.0, 1.0)) -> TetMesh:
    ball = uniform_ball_mesh(resolution)
    return TetMesh.from_arrays(ball.vertices * np.asarray(axes), ball.tets)


def stretched_ball_mesh(resolution: int = 2, stretch=(2.0, 1.0, 0.7)) -> TetMesh:
    """Anisotropic affine image of the uniform ball."""
    return ellipsoid_mesh(resolution, axes=stretch)


def graded_ellipsoid_mesh(resolution: int = 2, axes=(2.0, 1.0, 1.0),
                          power: float = 1.5) -> TetMesh:
    """Ellipsoid whose tet sizes grow from the center outwards.

    The radial warp r -> r^power thins the mesh near the center while keeping
    the boundary fixed, giving a strongly nonuniform but valid solid.
    """
    ball = uniform_ball_mesh(resolution)
    r = np.linalg.norm(ball.vertices, axis=1)
    scale = np.where(r > 0, r ** (power - 1.0), 1.0)
    warped = ball.vertices * scale[:, None] * np.asarray(axes)
    return TetMesh.from_arrays(warped, ball.tets)


def lcube_mesh(n: int = 8, stretch=(1.0, 1.0, 1.0)) -> TetMesh:
    """L-shaped solid: the cube with one octant removed, optionally stretched.

    Non-convex but still ball-topology; with a strong anisotropic stretch its
    harmonic ball map develops genuine folds, which exercises the correction
    machinery.
    """
    axis = np.linspace(-1.0, 1.0, n + 1)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    vertices = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    mid = (axis[:-1] + axis[1:]) / 2.0
    keep = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if mid[i] > 0 and mid[j] > 0 and mid[k] > 0:
                    continue
                corner = np.array([vid(i + ((b >> 2) & 1), j + ((b >> 1) & 1),
                                       k + (b & 1)) for b in range(8)])
                keep.append(corner[_CUBE_TETS])
    tets = np.vstack(keep)
    used = np.unique(tets)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TetMesh.from_arrays(vertices[used] * np.asarray(stretch, dtype=float),
                               remap[tets])


def _tet_centroids(mesh: TetMesh) -> np.ndarray:
    return mesh.vertices[mesh.tets].mean(axis=1)


def hemispheric_population(mesh: TetMesh, ratio: float = 4.0,
                           axis: int = 0) -> np.ndarray:
    """Volume-proportional population with a density jump across one plane."""
    vols = np.abs(signed_volumes(mesh.vertices, mesh.tets))
    weight = np.where(_tet_centroids(mesh)[:, axis] > 0.0, ratio, 1.0)
    return vols * weight


def smooth_population(mesh: TetMesh, ratio: float = 5.0,
                      axis: int = 0) -> np.ndarray:
    """Volume-proportional population with a smooth max/min density ratio."""
    vols = np.abs(signed_volumes(mesh.vertices, mesh.tets))
    x = _tet_centroids(mesh)[:, axis]
    t = (x - x.min()) / max(x.max() - x.min(), 1e-300)
    return vols * (1.0 + (ratio - 1.0) * t)


def octant_population(mesh: TetMesh, seed: int = 0,
                      low: float = 1.0, high: float = 4.0) -> np.ndarray:
    """Region-weighted population: half the octants dense, half sparse.

    Four octants get weight ``high`` and four get ``low``, arranged by the
    seed, so every draw carries a substantial density contrast.
    """
    rng = np.random.default_rng(seed)
    weights = rng.permutation([low] * 4 + [high] * 4)
    c = _tet_centroids(mesh)
    octant = ((c[:, 0] > 0).astype(int) * 4 + (c[:, 1] > 0).astype(int) * 2
              + (c[:, 2] > 0).astype(int))
    vols = np.abs(signed_volumes(mesh.vertices, mesh.tets))
    return vols * weights[octant]
