"""Density fields and the discrete diffusion machinery of the equalizing flow.

Densities live on tets (population / current volume) and are transferred to
vertices through a volume-weighted, row-stochastic averaging matrix. One flow
iteration diffuses the vertex density implicitly, differentiates it per tet,
converts the gradient into a velocity, projects the boundary velocity onto the
sphere's tangent planes, and advects the vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from . import linsolve
from .laplace import laplacian_matrix
from .tetmesh import TetMesh, signed_volumes


class DensityError(ValueError):
    pass


@dataclass
class DensityField:
    population: np.ndarray  # (m,) positive
    rho_tet: np.ndarray     # (m,)
    rho_vertex: np.ndarray  # (n,)


@dataclass
class DiffusionOperators:
    lumped_volumes: np.ndarray  # (n,) diagonal mass
    laplacian: csr_matrix       # (n, n) PSD cotangent Laplacian


def tet_to_vertex_matrix(tets: np.ndarray, volumes: np.ndarray,
                         n_vertices: int) -> csr_matrix:
    """Row-stochastic matrix averaging tet quantities onto vertices.

    Row i weights each incident tet by its volume over the total incident
    volume, so every row sums to 1.
    """
    rows = tets.reshape(-1)
    cols = np.repeat(np.arange(len(tets)), 4)
    vals = np.repeat(volumes, 4)
    incident = np.bincount(rows, weights=vals, minlength=n_vertices)
    if np.any(incident <= 0):
        raise DensityError("vertex with nonpositive incident volume")
    mat = csr_matrix((vals / incident[rows], (rows, cols)),
                     shape=(n_vertices, len(tets)))
    return mat


def recouple_density(mesh: TetMesh, positions: np.ndarray,
                     population: np.ndarray) -> DensityField:
    """Recompute tet and vertex densities from the current volumes."""
    population = np.asarray(population, dtype=np.float64)
    if np.any(population <= 0):
        raise DensityError("populations must be positive")
    vols = signed_volumes(positions, mesh.tets)
    if np.any(vols <= 0):
        raise DensityError(
            f"{int(np.count_nonzero(vols <= 0))} tets have nonpositive volume")
    rho_tet = population / vols
    conv = tet_to_vertex_matrix(mesh.tets, vols, len(mesh.vertices))
    return DensityField(population, rho_tet, conv @ rho_tet)


def build_operators(mesh: TetMesh, positions: np.ndarray) -> DiffusionOperators:
    """Assemble lumped volumes and the cotangent Laplacian on current positions."""
    vols = signed_volumes(positions, mesh.tets)
    if np.any(vols <= 0):
        raise DensityError("deformed mesh has nonpositive volumes")
    lumped = np.bincount(mesh.tets.reshape(-1), weights=np.repeat(vols / 4.0, 4),
                         minlength=len(mesh.vertices))
    return DiffusionOperators(lumped, laplacian_matrix(mesh.tets, positions))


def diffusion_step(ops: DiffusionOperators, rho_vertex: np.ndarray,
                   dt: float, tol: float = 1e-10) -> np.ndarray:
    """Backward-Euler diffusion: solve (A + dt L) rho_next = A rho.

    Conserves the lumped mass sum(A_ii rho_i) because the Laplacian has zero
    row sums.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = len(rho_vertex)
    A = csr_matrix((ops.lumped_volumes, (np.arange(n), np.arange(n))), shape=(n, n))
    system = linsolve.LinearSystem(n, A + dt * ops.laplacian, symmetric=True)
    return linsolve.solve(system, ops.lumped_volumes * rho_vertex, tol=tol)


def density_gradient(mesh_or_tets, positions: np.ndarray,
                     rho_vertex: np.ndarray) -> np.ndarray:
    """Exact per-tet gradient of the vertexwise-linear density field."""
    tets = mesh_or_tets.tets if isinstance(mesh_or_tets, TetMesh) else np.asarray(mesh_or_tets)
    positions = np.asarray(positions, dtype=np.float64)
    e = positions[tets[:, 1:]] - positions[tets[:, :1]]  # (m, 3, 3) rows = edges
    d = rho_vertex[tets[:, 1:]] - rho_vertex[tets[:, :1]]  # (m, 3)
    return np.linalg.solve(e, d[:, :, None])[..., 0]


def velocity_field(rho_vertex: np.ndarray, grad_vertex: np.ndarray) -> np.ndarray:
    """Velocity -grad(rho)/rho per vertex."""
    if np.any(rho_vertex <= 0):
        raise DensityError("nonpositive vertex density (recoupling bug?)")
    return -grad_vertex / rho_vertex[:, None]


def project_boundary_velocity(positions: np.ndarray, velocity: np.ndarray,
                              boundary_mask: np.ndarray) -> np.ndarray:
    """Remove the radial component of the velocity at boundary vertices.

    The boundary lives on the unit sphere, so the outward normal at a boundary
    vertex is its own position (normalized here for exact tangency).
    """
    out = np.array(velocity, dtype=np.float64, copy=True)
    x = positions[boundary_mask]
    n = x / np.linalg.norm(x, axis=1, keepdims=True)
    vb = out[boundary_mask]
    out[boundary_mask] = vb - (np.einsum("ij,ij->i", vb, n))[:, None] * n
    return out


def advect_and_renormalize(positions: np.ndarray, velocity: np.ndarray,
                           dt: float, boundary_mask: np.ndarray) -> np.ndarray:
    """Move vertices by dt * velocity; boundary vertices are radially projected
    back to the unit sphere afterwards."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = positions + dt * velocity
    b = out[boundary_mask]
    out[boundary_mask] = b / np.linalg.norm(b, axis=1, keepdims=True)
    return out
