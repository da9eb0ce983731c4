"""Bijective spherical maps for the boundary surface of a solid.

The boundary of the solid is a closed genus-0 triangle mesh. It is sent to the
unit sphere in three stages: a convex normalized embedding smoothed with
mean-value weights, optional density-equalizing iterations on the sphere, and
an overlap-correction stage that removes flipped spherical triangles by
truncating the per-triangle Beltrami coefficient in a stereographic chart and
re-solving the associated elliptic system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from . import linsolve
from .tetmesh import MeshError, TetMesh


class SphereMapError(MeshError):
    pass


@dataclass(frozen=True)
class BoundaryMap:
    """Unit-sphere images of the boundary vertices of a solid mesh."""

    vertex_indices: np.ndarray  # (k,) indices into the volume mesh
    points: np.ndarray          # (k, 3) unit vectors


# -- triangle geometry -------------------------------------------------------


def face_normals_areas(points: np.ndarray, faces: np.ndarray):
    e1 = points[faces[:, 1]] - points[faces[:, 0]]
    e2 = points[faces[:, 2]] - points[faces[:, 0]]
    n = np.cross(e1, e2)
    norms = np.linalg.norm(n, axis=1)
    areas = 0.5 * norms
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(norms[:, None] > 0, n / norms[:, None], 0.0)
    return unit, areas


def face_to_vertex_matrix(faces: np.ndarray, areas: np.ndarray,
                          n_vertices: int) -> csr_matrix:
    rows = faces.reshape(-1)
    cols = np.repeat(np.arange(len(faces)), 3)
    vals = np.repeat(areas, 3)
    incident = np.bincount(rows, weights=vals, minlength=n_vertices)
    return csr_matrix((vals / incident[rows], (rows, cols)),
                      shape=(n_vertices, len(faces)))


def surface_laplacian(points: np.ndarray, faces: np.ndarray,
                      n_vertices: int) -> csr_matrix:
    """PSD cotangent Laplacian of a triangle mesh."""
    rows, cols, vals = [], [], []
    for k in range(3):
        i = faces[:, (k + 1) % 3]
        j = faces[:, (k + 2) % 3]
        o = faces[:, k]
        u = points[i] - points[o]
        v = points[j] - points[o]
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        cot = np.einsum("ij,ij->i", u, v) / np.maximum(cross, 1e-300)
        w = 0.5 * cot
        rows.extend([i, j, i, j])
        cols.extend([j, i, i, j])
        vals.extend([-w, -w, w, w])
    system = linsolve.assemble(n_vertices, np.concatenate(rows),
                               np.concatenate(cols), np.concatenate(vals))
    return system.matrix


def surface_gradient(points: np.ndarray, faces: np.ndarray,
                     values: np.ndarray) -> np.ndarray:
    """Per-face gradient of a vertexwise-linear field on a triangle mesh."""
    normal, areas = face_normals_areas(points, faces)
    grad = np.zeros((len(faces), 3))
    for k in range(3):
        edge = points[faces[:, (k + 2) % 3]] - points[faces[:, (k + 1) % 3]]
        grad += values[faces[:, k], None] * np.cross(normal, edge)
    return grad / (2.0 * areas[:, None])


def vertex_rings(faces: np.ndarray, n_vertices: int) -> csr_matrix:
    e = np.vstack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    adj = coo_matrix((np.ones(2 * len(e)),
                      (np.concatenate([e[:, 0], e[:, 1]]),
                       np.concatenate([e[:, 1], e[:, 0]]))),
                     shape=(n_vertices, n_vertices))
    return adj.tocsr()


def spherical_flips(points: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Mask of spherical triangles with non-outward orientation."""
    tri = points[faces]
    det = np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2]))
    return det <= 0.0


def normalize_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def center_sphere(points: np.ndarray, faces: np.ndarray,
                  max_iter: int = 200, tol: float = 1e-12) -> np.ndarray:
    """Translate so the area centroid sits at the origin, then reproject."""
    u = points
    for _ in range(max_iter):
        _, areas = face_normals_areas(u, faces)
        centroid = (areas[:, None] * u[faces].mean(axis=1)).sum(axis=0) / areas.sum()
        if np.linalg.norm(centroid) < tol:
            break
        u = normalize_rows(u - centroid)
    return u


# -- stereographic charts and Beltrami machinery -----------------------------


def stereographic(points: np.ndarray, pole: float) -> np.ndarray:
    """Complex chart projecting from (0, 0, pole); pole is +1 or -1."""
    denom = 1.0 - pole * points[:, 2]
    denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
    return (points[:, 0] + 1j * points[:, 1]) / denom


def inverse_stereographic(w: np.ndarray, pole: float) -> np.ndarray:
    r2 = np.abs(w) ** 2
    d = 1.0 + r2
    return np.column_stack([2.0 * w.real / d, 2.0 * w.imag / d,
                            pole * (r2 - 1.0) / d])


def beltrami_coefficient(z_domain: np.ndarray, w_image: np.ndarray,
                         faces: np.ndarray) -> np.ndarray:
    """Per-triangle Beltrami coefficient of the planar map z -> w."""
    dz1 = z_domain[faces[:, 1]] - z_domain[faces[:, 0]]
    dz2 = z_domain[faces[:, 2]] - z_domain[faces[:, 0]]
    dw1 = w_image[faces[:, 1]] - w_image[faces[:, 0]]
    dw2 = w_image[faces[:, 2]] - w_image[faces[:, 0]]
    det = dz1 * np.conj(dz2) - dz2 * np.conj(dz1)
    det = np.where(np.abs(det) < 1e-300, 1e-300, det)
    fz = (dw1 * np.conj(dz2) - dw2 * np.conj(dz1)) / det
    fzb = (dz1 * dw2 - dz2 * dw1) / det
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = np.where(np.abs(fz) > 1e-300, fzb / fz, 1e3 + 0j)
    return mu


def truncate_beltrami(mu: np.ndarray, cap: float = 0.99) -> np.ndarray:
    mag = np.abs(mu)
    over = mag >= cap
    out = mu.copy()
    out[over] = cap * mu[over] / np.maximum(mag[over], 1e-300)
    return out


def beltrami_stiffness(z_domain: np.ndarray, faces: np.ndarray,
                       mu: np.ndarray) -> linsolve.LinearSystem:
    """Anisotropic stiffness matrix of the Beltrami equation on the plane.

    Each triangle with coefficient mu = rho + i tau carries the SPD matrix
    [[(rho-1)^2 + tau^2, -2 tau], [-2 tau, (1+rho)^2 + tau^2]] / (1 - |mu|^2);
    triangles with astronomically large domain coordinates (close to the
    projection pole) are skipped since all their vertices are constrained.
    """
    pts = np.column_stack([z_domain.real, z_domain.imag])
    keep = np.all(np.abs(z_domain[faces]) < 1e8, axis=1)
    faces = faces[keep]
    mu = mu[keep]
    rho, tau = mu.real, mu.imag
    denom = np.maximum(1.0 - (rho**2 + tau**2), 1e-12)
    a11 = ((rho - 1.0) ** 2 + tau**2) / denom
    a12 = -2.0 * tau / denom
    a22 = ((1.0 + rho) ** 2 + tau**2) / denom

    p = pts[faces]  # (k, 3, 2)
    e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]  # edge opposite each vertex
    area2 = e[:, 0, 0] * e[:, 1, 1] - e[:, 0, 1] * e[:, 1, 0]  # 2 * signed area
    # floor near-degenerate chart triangles so the assembly stays finite
    floor = 1e-10 * np.einsum("tij,tij->t", e, e)
    area2 = np.where(np.abs(area2) < floor,
                     np.where(area2 < 0, -floor, floor), area2)
    grads = np.stack([-e[:, :, 1], e[:, :, 0]], axis=2) / area2[:, None, None]
    A = np.stack([np.stack([a11, a12], axis=1),
                  np.stack([a12, a22], axis=1)], axis=1)
    local = np.einsum("tix,txy,tjy,t->tij", grads, A, grads, np.abs(area2) / 2.0)
    local = 0.5 * (local + np.swapaxes(local, 1, 2))
    rows = np.repeat(faces, 3, axis=1).reshape(-1)
    cols = np.tile(faces, (1, 3)).reshape(-1)
    return linsolve.assemble(len(z_domain), rows, cols, local.reshape(-1),
                             symmetric=True)


def correct_spherical_flips(reference: np.ndarray, points: np.ndarray,
                            faces: np.ndarray, budget: int = 10,
                            cap: float = 0.99, rings: int = 2) -> np.ndarray:
    """Remove flipped spherical triangles, keeping the rest of the map.

    ``reference`` must be a flip-free spherical configuration of the same
    triangulation; it provides the embedded chart in which the Beltrami
    coefficient of the current map is measured, truncated to |mu| <= cap, and
    re-solved with vertices outside the flipped neighborhoods held fixed.
    Raises SphereMapError if flips survive the correction budget.
    """
    cur = normalize_rows(np.array(points, dtype=np.float64))
    ref = normalize_rows(np.asarray(reference, dtype=np.float64))
    adj = vertex_rings(faces, len(cur))
    degree = np.asarray(adj.sum(axis=1)).ravel()
    prev_flips = None
    for round_no in range(budget):
        flips_now = spherical_flips(cur, faces)
        if not flips_now.any():
            return cur
        if prev_flips is not None and np.array_equal(flips_now, prev_flips):
            # the elliptic re-solve stalled on sliver triangles; relax the
            # flipped patch tangentially toward the neighbor average
            patch = np.zeros(len(cur), dtype=bool)
            patch[faces[flips_now].reshape(-1)] = True
            patch |= (adj @ patch) > 0
            w = min(0.2 + 0.1 * round_no, 0.8)
            for _ in range(3):
                mean = (adj @ cur) / degree[:, None]
                target = normalize_rows((1.0 - w) * cur + w * mean)
                cur[patch] = target[patch]
            cur = normalize_rows(cur)
        prev_flips = flips_now
        # a cap of 0.99 can leave sliver triangles that the spherical
        # orientation test still rejects; later rounds truncate harder and
        # free a wider neighborhood
        round_cap = min(cap, max(0.99 - 0.12 * round_no, 0.35))
        round_rings = rings + round_no
        for pole in (1.0, -1.0):
            flipped = spherical_flips(cur, faces)
            if not flipped.any():
                break
            z_dom = stereographic(ref, pole)
            radius = np.abs(z_dom)
            handled = flipped & (np.max(radius[faces], axis=1) < 4.0)
            if not handled.any():
                continue
            free = np.zeros(len(cur), dtype=bool)
            free[faces[handled].reshape(-1)] = True
            for _ in range(round_rings):
                free |= (adj @ free) > 0
            free &= radius < 8.0
            fixed = np.flatnonzero(~free)
            if len(fixed) < 3:
                order = np.argsort(radius)[::-1]
                fixed = order[:3]
                free = np.ones(len(cur), dtype=bool)
                free[fixed] = False
            w_cur = stereographic(cur, pole)
            mu = truncate_beltrami(beltrami_coefficient(z_dom, w_cur, faces),
                                   round_cap)
            system = beltrami_stiffness(z_dom, faces, mu)
            system.constrain(fixed, np.column_stack([w_cur[fixed].real,
                                                     w_cur[fixed].imag]))
            uv = linsolve.solve(system, np.zeros((len(cur), 2)), tol=1e-10)
            cur = normalize_rows(inverse_stereographic(uv[:, 0] + 1j * uv[:, 1], pole))
    remaining = int(spherical_flips(cur, faces).sum())
    if remaining:
        raise SphereMapError(
            f"spherical overlap correction failed: {remaining} flipped triangles")
    return cur


# -- embedding and surface density equalization ------------------------------


def mean_value_weights(points: np.ndarray, faces: np.ndarray,
                       n_vertices: int) -> csr_matrix:
    """Row-stochastic mean-value averaging operator (positive weights)."""
    rows, cols, vals = [], [], []
    for k in range(3):
        i = faces[:, k]
        j = faces[:, (k + 1) % 3]
        l = faces[:, (k + 2) % 3]
        u = points[j] - points[i]
        v = points[l] - points[i]
        lu = np.linalg.norm(u, axis=1)
        lv = np.linalg.norm(v, axis=1)
        cosang = np.clip(np.einsum("ij,ij->i", u, v) / (lu * lv), -1.0, 1.0)
        t = np.tan(0.5 * np.arccos(cosang))
        rows.extend([i, i])
        cols.extend([j, l])
        vals.extend([t / lu, t / lv])
    W = coo_matrix((np.concatenate(vals),
                    (np.concatenate(rows), np.concatenate(cols))),
                   shape=(n_vertices, n_vertices)).tocsr()
    rowsum = np.asarray(W.sum(axis=1)).ravel()
    inv = csr_matrix((1.0 / rowsum, (np.arange(n_vertices), np.arange(n_vertices))),
                     shape=(n_vertices, n_vertices))
    return inv @ W


def spherical_embedding(surface_points: np.ndarray, faces: np.ndarray,
                        smooth_iters: int = 10, step: float = 0.5,
                        correction_budget: int = 10) -> np.ndarray:
    """Map a genus-0 surface onto the unit sphere, guaranteed flip-free.

    Starts from the centroid-normalized radial projection, applies tangential
    mean-value smoothing with unit-norm projection and area-centroid
    recentering, and fixes any flips against the last valid configuration.
    """
    pts = np.asarray(surface_points, dtype=np.float64)
    _, areas = face_normals_areas(pts, faces)
    centroid = (areas[:, None] * pts[faces].mean(axis=1)).sum(axis=0) / areas.sum()
    u = normalize_rows(pts - centroid)

    last_valid = None
    if not spherical_flips(u, faces).any():
        last_valid = u.copy()
    T = mean_value_weights(pts, faces, len(pts))
    for _ in range(smooth_iters):
        target = T @ u
        delta = target - u
        delta -= np.einsum("ij,ij->i", delta, u)[:, None] * u
        u = center_sphere(normalize_rows(u + step * delta), faces)
        if spherical_flips(u, faces).any():
            if last_valid is None:
                continue
            u = correct_spherical_flips(last_valid, u, faces,
                                        budget=correction_budget)
        last_valid = u.copy()
    if last_valid is None or spherical_flips(u, faces).any():
        if last_valid is None:
            raise SphereMapError(
                "could not reach a flip-free spherical embedding "
                f"({int(spherical_flips(u, faces).sum())} flips)")
        u = last_valid
    return u


def surface_density_equalize(sphere: np.ndarray, faces: np.ndarray,
                             population: np.ndarray, dt: float = 0.1,
                             eps: float = 1e-2, max_iter: int = 100,
                             correction_budget: int = 10) -> np.ndarray:
    """Density-equalizing flow on the sphere with overlap correction.

    Face density is population over current area; iterations stop when its
    sd/mean ratio falls below ``eps`` or after ``max_iter`` rounds.
    """
    u = normalize_rows(np.array(sphere, dtype=np.float64))
    population = np.asarray(population, dtype=np.float64)
    if np.any(population <= 0):
        raise SphereMapError("face populations must be positive")
    n = len(u)
    last_valid = u.copy()
    for _ in range(max_iter):
        _, areas = face_normals_areas(u, faces)
        rho_face = population / areas
        if np.std(rho_face) / np.mean(rho_face) < eps:
            break
        conv = face_to_vertex_matrix(faces, areas, n)
        rho_vertex = conv @ rho_face
        lumped = np.bincount(faces.reshape(-1), weights=np.repeat(areas / 3.0, 3),
                             minlength=n)
        L = surface_laplacian(u, faces, n)
        A = csr_matrix((lumped, (np.arange(n), np.arange(n))), shape=(n, n))
        system = linsolve.LinearSystem(n, A + dt * L, symmetric=True)
        rho_next = linsolve.solve(system, lumped * rho_vertex)
        grad_face = surface_gradient(u, faces, rho_next)
        grad_vertex = conv @ grad_face
        vel = -grad_vertex / rho_next[:, None]
        vel -= np.einsum("ij,ij->i", vel, u)[:, None] * u
        # cap each move at a fraction of the shortest incident edge; sharp
        # population contrasts otherwise invert whole neighborhoods at once
        edge = np.vstack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        lengths = np.linalg.norm(u[edge[:, 0]] - u[edge[:, 1]], axis=1)
        min_edge = np.full(n, np.inf)
        np.minimum.at(min_edge, edge[:, 0], lengths)
        np.minimum.at(min_edge, edge[:, 1], lengths)
        move = dt * np.linalg.norm(vel, axis=1)
        vel *= np.minimum(1.0, 0.4 * min_edge / np.maximum(move, 1e-300))[:, None]
        u = normalize_rows(u + dt * vel)
        if spherical_flips(u, faces).any():
            u = correct_spherical_flips(last_valid, u, faces,
                                        budget=correction_budget)
        last_valid = u.copy()
    return u


def compute_boundary_sphere_map(mesh: TetMesh, mode: str = "conformal",
                                population: np.ndarray | None = None,
                                smooth_iters: int = 10, dt: float = 0.1,
                                eps: float = 1e-2, max_iter: int = 100) -> BoundaryMap:
    """Spherical map of the boundary of a solid mesh.

    mode "conformal" stops after the smoothed embedding (with Moebius
    centering); mode "density_equalizing" continues with the surface flow,
    equalizing the given per-boundary-face population (defaults to the
    original face areas). The result is always flip-free with unit norms.
    """
    if mode not in ("conformal", "density_equalizing"):
        raise ValueError(f"unknown boundary map mode {mode!r}")
    vertex_ids, faces = mesh.boundary_surface()
    surf = mesh.vertices[vertex_ids]
    u = spherical_embedding(surf, faces, smooth_iters=smooth_iters)
    if mode == "density_equalizing":
        if population is None:
            _, population = face_normals_areas(surf, faces)
        u = surface_density_equalize(u, faces, population, dt=dt, eps=eps,
                                     max_iter=max_iter)
    flips = int(spherical_flips(u, faces).sum())
    if flips:
        raise SphereMapError(f"boundary map has {flips} flipped triangles")
    u = normalize_rows(u)
    u.setflags(write=False)
    return BoundaryMap(vertex_ids, u)
