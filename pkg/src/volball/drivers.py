"""End-to-end solid ball parameterization drivers.

Three variational flavors share one pipeline: map the boundary to the unit
sphere, fill the interior harmonically, then iterate on the ball. ``3dqc``
shrinks the per-tet anisotropy ratio by residual descent, ``3ddem`` advects
vertices along the density-equalizing diffusion flow, and ``3ddeq`` blends the
two through per-tet eigenvalue updates. Every iteration ends fold-free thanks
to a three-pass overlap correction (spherical boundary repair, interior
reconstruction with the boundary fixed, boundary reconstruction with the
interior fixed).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import density as dem
from .distortion import (TetFrameField, flip_eigenvalues, frame_decompose,
                         jacobian_per_tet, reconstruct_map, residual_step,
                         truncate_eigenvalues)
from .laplace import harmonic_fill
from .report import RunReport
from .sphere_map import (SphereMapError, compute_boundary_sphere_map,
                         correct_spherical_flips, normalize_rows,
                         spherical_flips, vertex_rings)
from .tetmesh import TetMesh, signed_volumes

METHODS = ("3dqc", "3ddem", "3ddeq")


NEAR_FOLD_RATIO = 1e3


class CorrectionError(RuntimeError):
    def __init__(self, folds: int):
        super().__init__(f"overlap correction budget exhausted: {folds} folds remain")
        self.folds = folds


@dataclass
class SolverConfig:
    """Shared knobs of the parameterization drivers.

    dt and eps drive the diffusion flow and its stopping rules, k_threshold
    caps the anisotropy ratio during truncation, residual_constant weights the
    residual descent, and alpha balances the density and geometry terms of the
    combined flow.
    """

    dt: float = 0.1
    eps: float = 1e-2
    n_max: int = 100
    k_threshold: float = 10.0
    residual_constant: float = 50.0
    alpha: float = 0.01
    boundary_mode: str = "auto"  # auto | conformal | dem
    correction: bool = True
    boundary_smooth_iters: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.eps <= 0 or self.n_max < 1:
            raise ValueError("dt, eps must be positive and n_max >= 1")
        if self.k_threshold <= 1 or self.residual_constant <= 0 or self.alpha < 0:
            raise ValueError("need k_threshold > 1, residual_constant > 0, alpha >= 0")
        if self.boundary_mode not in ("auto", "conformal", "dem"):
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")

    def resolved_boundary_mode(self, method: str) -> str:
        if self.boundary_mode != "auto":
            return "conformal" if self.boundary_mode == "conformal" else "density_equalizing"
        return "conformal" if method == "3dqc" else "density_equalizing"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    positions: np.ndarray
    report: RunReport
    converged: bool
    initial_positions: np.ndarray


def _boundary_cone_volumes(mesh: TetMesh) -> np.ndarray:
    """Volume of the cone spanned by each boundary face and the mesh centroid.

    Used as the default surface population of the density-equalizing boundary
    map: equalizing it allocates sphere area in proportion to the volume each
    boundary column carries, which for affine images of a ball reproduces the
    volume-fair boundary layout exactly. Falls back to plain face areas when
    the solid is not star-shaped about its centroid (cones then overlap and
    signed volumes change sign).
    """
    tri = mesh.vertices[mesh.boundary_faces]
    c = mesh.vertices.mean(axis=0)
    signed = np.einsum("ij,ij->i", tri[:, 0] - c,
                       np.cross(tri[:, 1] - c, tri[:, 2] - c)) / 6.0
    if signed.min() <= 1e-14 * signed.max():
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0],
                                             tri[:, 2] - tri[:, 0]), axis=1)
    return signed


def _boundary_owners(mesh: TetMesh) -> np.ndarray:
    owner_of = {}
    for t, tet in enumerate(mesh.tets):
        for local in ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1)):
            owner_of[tuple(sorted(tet[list(local)]))] = t
    return np.array([owner_of[tuple(sorted(f))] for f in mesh.boundary_faces],
                    dtype=np.int64)


def initial_ball(mesh: TetMesh, config: SolverConfig | None = None,
                 method: str = "3dqc", refine_rounds: int = 2) -> np.ndarray:
    """Initial unit ball map: spherical boundary plus harmonic interior.

    In density-equalizing boundary mode the surface population starts from the
    boundary cone volumes and is refined a few rounds against the measured
    volumetric compression of the fill (solids with concave-prone corners,
    like cubes, otherwise start with a strong density spike at the corner
    images). The best fold-free fill is kept.
    """
    config = config or SolverConfig()
    mode = config.resolved_boundary_mode(method)
    if mode != "density_equalizing":
        bmap = compute_boundary_sphere_map(
            mesh, mode=mode, smooth_iters=config.boundary_smooth_iters,
            dt=config.dt, eps=config.eps, max_iter=config.n_max)
        return harmonic_fill(mesh, bmap.points, bmap.vertex_indices)

    cone = _boundary_cone_volumes(mesh)
    owners = _boundary_owners(mesh)
    rest_vols = np.abs(mesh.volumes)
    face_population = cone.copy()
    best = None
    best_var = np.inf
    for _ in range(max(1, refine_rounds + 1)):
        bmap = compute_boundary_sphere_map(
            mesh, mode=mode, population=face_population,
            smooth_iters=config.boundary_smooth_iters, dt=config.dt,
            eps=config.eps, max_iter=config.n_max)
        pos = harmonic_fill(mesh, bmap.points, bmap.vertex_indices)
        if mesh.count_folds(pos):
            break
        geo_rho = rest_vols / signed_volumes(pos, mesh.tets)
        field = dem.recouple_density(mesh, pos, rest_vols)
        var = normalized_density_variance(field.rho_vertex)
        if var >= best_var:
            break
        best, best_var = pos, var
        face_population = cone * geo_rho[owners]
    if best is None:
        # every refinement fill folded; fall back to the plain fill and let
        # the caller's overlap correction deal with it
        best = pos
    return best


def correct_overlaps(mesh: TetMesh, positions: np.ndarray, k_threshold: float = 10.0,
                     budget: int = 10,
                     reference_boundary: np.ndarray | None = None,
                     near_fold_ratio: float | None = None) -> np.ndarray:
    """Remove inverted tets from a ball map, preserving the spherical boundary.

    Rounds of three passes run until the map is fold-free: (1) repair flipped
    spherical triangles on the boundary surface, (2) rebuild the interior with
    the boundary fixed after flipping and truncating the eigenvalues of folded
    tets, (3) rebuild the boundary with the interior fixed to release folds
    pinned against the sphere, then project the boundary back to unit norm.

    ``mesh`` provides the rest geometry; ``reference_boundary`` must be a
    flip-free spherical configuration of the boundary vertices and defaults to
    the normalized rest boundary (exact when the rest mesh is itself a ball).
    With ``near_fold_ratio`` set, tets whose anisotropy ratio exceeds it are
    truncated alongside the truly folded ones (they are one flow step away
    from folding and otherwise escape all relief).
    """
    b_ids, b_faces = mesh.boundary_surface()
    if reference_boundary is None:
        reference_boundary = normalize_rows(mesh.vertices[b_ids])
    pos = np.array(positions, dtype=np.float64)

    def folds(p):
        return mesh.count_folds(p)

    def needs_relief(p):
        if near_fold_ratio is None:
            return False
        frames = frame_decompose(jacobian_per_tet(mesh, p))
        return bool(np.any(np.abs(frames.ratios) > near_fold_ratio))

    if folds(pos) == 0 and not spherical_flips(pos[b_ids], b_faces).any() \
            and not needs_relief(pos):
        return pos

    boundary_adj = vertex_rings(b_faces, len(b_ids))
    degree = np.asarray(boundary_adj.sum(axis=1)).ravel()
    compact = np.full(len(mesh.vertices), -1, dtype=np.int64)
    compact[b_ids] = np.arange(len(b_ids))
    all_boundary_tet = mesh.boundary_vertex_mask[mesh.tets].all(axis=1)

    def score(p):
        return folds(p) + int(spherical_flips(normalize_rows(p[b_ids]),
                                              b_faces).sum())

    def sphere_repair(p):
        sphere = normalize_rows(p[b_ids])
        if spherical_flips(sphere, b_faces).any():
            try:
                sphere = correct_spherical_flips(reference_boundary, sphere,
                                                 b_faces)
            except SphereMapError:
                return p
            p = p.copy()
            p[b_ids] = sphere
        return p

    def smooth_slivers(p, w):
        # tets with all four vertices on the sphere are invisible to the
        # interior solve and survive radial projection; only tangential
        # motion unfolds them
        slivers = (signed_volumes(p, mesh.tets) <= 0) & all_boundary_tet
        if not slivers.any():
            return p
        patch = np.zeros(len(b_ids), dtype=bool)
        patch[compact[np.unique(mesh.tets[slivers])]] = True
        patch |= (boundary_adj @ patch) > 0
        sphere = normalize_rows(p[b_ids])
        for _ in range(3):
            mean = (boundary_adj @ sphere) / degree[:, None]
            target = normalize_rows((1.0 - w) * sphere + w * mean)
            sphere[patch] = target[patch]
        p = p.copy()
        p[b_ids] = sphere
        return p

    def free_boundary_patch(p, k_cap):
        # release only the boundary vertices pinning the remaining folds
        # (freeing the whole sphere lets it contract and fold further)
        folded = signed_volumes(p, mesh.tets) <= 0
        if not folded.any():
            return p
        patch = np.zeros(len(b_ids), dtype=bool)
        seeds = compact[np.unique(mesh.tets[folded])]
        patch[seeds[seeds >= 0]] = True
        if not patch.any():
            return p
        for _ in range(2):
            patch |= (boundary_adj @ patch) > 0
        free_b = b_ids[patch]
        fixed = np.setdiff1d(np.arange(len(mesh.vertices)), free_b)
        p = _rebuild(mesh, p, k_cap, fixed_ids=fixed)
        p[free_b] = normalize_rows(p[free_b])
        return p

    best = pos.copy()
    best_score = score(best)
    if best_score == 0 and not needs_relief(best):
        return best
    state = pos
    for round_no in range(budget):
        # tighter truncation targets for stubborn rounds
        k_cap = k_threshold if round_no < 2 else max(
            2.0, k_threshold * 0.7 ** (round_no - 1))
        state = sphere_repair(state)
        state = _rebuild(mesh, state, k_cap, fixed_ids=b_ids,
                         near_fold_ratio=near_fold_ratio)
        if folds(state):
            state = smooth_slivers(state, w=min(0.25 + 0.1 * round_no, 0.8))
            state = free_boundary_patch(state, k_cap)
            state = _rebuild(mesh, state, k_cap, fixed_ids=b_ids,
                             near_fold_ratio=near_fold_ratio)
        current = score(state)
        if current < best_score:
            best, best_score = state.copy(), current
        if best_score == 0:
            break
    if best_score:
        raise CorrectionError(best_score)
    pos = best
    pos[b_ids] = normalize_rows(pos[b_ids])
    return pos


def _rebuild(mesh, pos, k_threshold, fixed_ids, near_fold_ratio=None):
    """Flip + truncate the folded tets' eigenvalues and re-solve the map."""
    frames = frame_decompose(jacobian_per_tet(mesh, pos))
    folded = frames.lambdas[:, 2] <= 0
    lam = flip_eigenvalues(frames.lambdas)
    # a numerically collapsed tet can leave c at zero after the flip; floor
    # it so the truncation below is well defined (it rescales to k_threshold)
    lam[:, 1:] = np.maximum(lam[:, 1:], 1e-12 * lam[:, :1])
    if near_fold_ratio is not None:
        folded = folded | (lam[:, 0] / lam[:, 2] > near_fold_ratio)
    if folded.any():
        lam[folded] = truncate_eigenvalues(lam[folded], k_threshold)
    return reconstruct_map(mesh, TetFrameField(frames.frames, lam),
                           fixed_ids, pos[fixed_ids])


def compute_energies(ball_mesh: TetMesh, positions: np.ndarray,
                     density_field: dem.DensityField | None,
                     frames: TetFrameField, alpha: float):
    """(geometry, density, combined) energies with initial-ball volume weights.

    A collapsed tet (zero eigenvalue) makes the geometry energy infinite,
    which disqualifies the candidate in the drivers' comparisons.
    """
    w = ball_mesh.volumes
    lam = flip_eigenvalues(frames.lambdas)
    with np.errstate(divide="ignore", invalid="ignore"):
        logk = np.log(lam[:, 0] / lam[:, 2])
    if not np.all(np.isfinite(logk)):
        e_qc = float("inf")
    else:
        e_qc = float(w @ logk ** 2)
    if density_field is None:
        return e_qc, None, None
    grad = dem.density_gradient(ball_mesh.tets, positions, density_field.rho_vertex)
    e_dem = float(w @ np.einsum("ij,ij->i", grad, grad))
    return e_qc, e_dem, e_dem + alpha * e_qc


def _max_ratio(mesh, positions):
    frames = frame_decompose(jacobian_per_tet(mesh, positions))
    k = np.abs(frames.ratios)
    return float("inf") if np.any(np.isnan(k)) else float(np.max(k))


def _k_stats(frames: TetFrameField):
    lam = flip_eigenvalues(frames.lambdas)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = lam[:, 0] / lam[:, 2]
    # a numerically collapsed tet (eigenvalue rounded to zero) would poison
    # the statistics with an infinity; report over the finite entries
    k = k[np.isfinite(k)]
    if len(k) == 0:
        return float("inf"), float("inf")
    return float(np.mean(k)), float(np.std(k))


def normalized_density_variance(rho: np.ndarray) -> float:
    """Variance of rho / mean(rho)."""
    return float(np.var(rho / np.mean(rho)))


def _prepare(mesh, config, method, init_positions):
    pos0 = initial_ball(mesh, config, method) if init_positions is None \
        else np.array(init_positions, dtype=np.float64)
    b_ids, _ = mesh.boundary_surface()
    ref_boundary = normalize_rows(pos0[b_ids])
    if mesh.count_folds(pos0):
        pos0 = correct_overlaps(mesh, pos0, config.k_threshold,
                                reference_boundary=ref_boundary)
    ball_vols = signed_volumes(pos0, mesh.tets)
    ball_rest = TetMesh.from_arrays(pos0, mesh.tets)
    return pos0, ball_rest, ball_vols, ref_boundary


def _min_incident_edge(mesh, pos):
    from .tetmesh import EDGE_LOCAL
    pairs = mesh.tets[:, EDGE_LOCAL].reshape(-1, 2)
    lengths = np.linalg.norm(pos[pairs[:, 0]] - pos[pairs[:, 1]], axis=1)
    out = np.full(len(pos), np.inf)
    np.minimum.at(out, pairs[:, 0], lengths)
    np.minimum.at(out, pairs[:, 1], lengths)
    return out


def _flow_step(mesh, pos, rho_vertex, dt, step_limit: float = 0.4):
    """One density-equalizing advection: returns the moved positions.

    Per-vertex displacements are capped at ``step_limit`` times the shortest
    incident edge; sharp density jumps otherwise produce single-step moves
    that invert whole neighborhoods. The cap is inactive near convergence.
    """
    vols = signed_volumes(pos, mesh.tets)
    if np.any(vols <= 0):
        raise dem.DensityError("flow step requires fold-free positions")
    ops = dem.build_operators(mesh, pos)
    rho_next = dem.diffusion_step(ops, rho_vertex, dt)
    grad_tet = dem.density_gradient(mesh.tets, pos, rho_next)
    conv = dem.tet_to_vertex_matrix(mesh.tets, vols, len(mesh.vertices))
    vel = dem.velocity_field(rho_next, conv @ grad_tet)
    vel = dem.project_boundary_velocity(pos, vel, mesh.boundary_vertex_mask)
    if step_limit:
        move = dt * np.linalg.norm(vel, axis=1)
        cap = step_limit * _min_incident_edge(mesh, pos)
        scale = np.minimum(1.0, cap / np.maximum(move, 1e-300))
        vel = vel * scale[:, None]
    return dem.advect_and_renormalize(pos, vel, dt, mesh.boundary_vertex_mask)


def run_3dqc(mesh: TetMesh, config: SolverConfig | None = None,
             init_positions: np.ndarray | None = None) -> RunResult:
    """Quasi-conformal ball map: residual descent on the anisotropy ratios.

    Iterates until the weighted energy sum(vol0 * ln(K)^2) stops decreasing or
    n_max is reached; every accepted iterate is fold-free.
    """
    config = config or SolverConfig()
    pos0, ball_rest, _, ref_boundary = _prepare(mesh, config, "3dqc", init_positions)
    b_ids = mesh.boundary_vertices

    pos = pos0.copy()
    frames = frame_decompose(jacobian_per_tet(mesh, pos))
    energy, _, _ = compute_energies(ball_rest, pos, None, frames, config.alpha)
    report = RunReport("3dqc", config.to_dict())
    mean_k, sd_k = _k_stats(frames)
    report.add_iteration(iteration=0, E_3DQC=energy, mean_K=mean_k, sd_K=sd_k,
                         folds_pre=mesh.count_folds(pos), folds_post=mesh.count_folds(pos))

    converged = False
    for n in range(1, config.n_max + 1):
        lam = residual_step(flip_eigenvalues(frames.lambdas), config.residual_constant)
        cand = reconstruct_map(mesh, TetFrameField(frames.frames, lam),
                               b_ids, pos[b_ids])
        folds_pre = mesh.count_folds(cand)
        if folds_pre and config.correction:
            cand = correct_overlaps(mesh, cand, config.k_threshold,
                                    reference_boundary=ref_boundary)
        folds_post = mesh.count_folds(cand)
        cand_frames = frame_decompose(jacobian_per_tet(mesh, cand))
        cand_energy, _, _ = compute_energies(ball_rest, cand, None, cand_frames,
                                             config.alpha)
        # stop once the energy no longer decreases (up to relative stagnation)
        if cand_energy >= energy * (1.0 - 1e-5):
            converged = True
            break
        pos, frames, energy = cand, cand_frames, cand_energy
        mean_k, sd_k = _k_stats(frames)
        report.add_iteration(iteration=n, E_3DQC=energy, mean_K=mean_k, sd_K=sd_k,
                             folds_pre=folds_pre, folds_post=folds_post)

    mean_k, sd_k = _k_stats(frames)
    rho = dem.recouple_density(mesh, pos, np.abs(mesh.volumes)).rho_vertex
    report.final = {"var_rho": normalized_density_variance(rho),
                    "mean_K": mean_k, "sd_K": sd_k,
                    "folds": mesh.count_folds(pos)}
    return RunResult(pos, report, converged, pos0)


def run_3ddem(mesh: TetMesh, population: np.ndarray,
              config: SolverConfig | None = None,
              init_positions: np.ndarray | None = None) -> RunResult:
    """Density-equalizing ball map driven by the diffusion flow.

    Stops when sd/mean of the vertex density drops below eps or after n_max
    iterations. With ``config.correction`` disabled the run is aborted as soon
    as folds appear (the flow cannot continue on inverted volumes).
    """
    config = config or SolverConfig()
    population = np.asarray(population, dtype=np.float64)
    pos0, ball_rest, _, ref_boundary = _prepare(mesh, config, "3ddem", init_positions)

    pos = pos0.copy()
    field = dem.recouple_density(mesh, pos, population)
    report = RunReport("3ddem", config.to_dict())
    report.final["var_rho0"] = normalized_density_variance(field.rho_vertex)

    b_ids = mesh.boundary_vertices
    converged = False
    for n in range(1, config.n_max + 1):
        if np.std(field.rho_vertex) / np.mean(field.rho_vertex) < config.eps:
            converged = True
            break
        ref_boundary = normalize_rows(pos[b_ids])
        cand = _flow_step(mesh, pos, field.rho_vertex, config.dt)
        folds_pre = mesh.count_folds(cand)
        strained = folds_pre == 0 and _max_ratio(mesh, cand) > NEAR_FOLD_RATIO
        if (folds_pre or strained) and config.correction:
            cand = correct_overlaps(mesh, cand, config.k_threshold,
                                    reference_boundary=ref_boundary,
                                    near_fold_ratio=NEAR_FOLD_RATIO)
        folds_post = mesh.count_folds(cand)
        if folds_post and not config.correction:
            frames = frame_decompose(jacobian_per_tet(mesh, cand))
            mean_k, sd_k = _k_stats(frames)
            report.add_iteration(iteration=n, var_rho=None, mean_K=mean_k,
                                 sd_K=sd_k, folds_pre=folds_pre,
                                 folds_post=folds_post)
            pos = cand
            break
        field = dem.recouple_density(mesh, cand, population)
        frames = frame_decompose(jacobian_per_tet(mesh, cand))
        e_qc, e_dem, e_deq = compute_energies(ball_rest, cand, field, frames,
                                              config.alpha)
        mean_k, sd_k = _k_stats(frames)
        report.add_iteration(iteration=n, E_3DQC=e_qc, E_3DDEM=e_dem, E_3DDEQ=e_deq,
                             var_rho=normalized_density_variance(field.rho_vertex),
                             mean_K=mean_k, sd_K=sd_k,
                             folds_pre=folds_pre, folds_post=folds_post)
        pos = cand

    frames = frame_decompose(jacobian_per_tet(mesh, pos))
    mean_k, sd_k = _k_stats(frames)
    report.final.update({"var_rho": normalized_density_variance(field.rho_vertex),
                         "mean_K": mean_k, "sd_K": sd_k,
                         "folds": mesh.count_folds(pos)})
    return RunResult(pos, report, converged, pos0)


def run_3ddeq(mesh: TetMesh, population: np.ndarray,
              config: SolverConfig | None = None,
              init_positions: np.ndarray | None = None) -> RunResult:
    """Balanced map: density-equalizing flow with anisotropy control.

    Each iteration advects along the diffusion flow, converts the move into
    per-tet eigenvalue increments, adds an alpha-weighted residual-descent
    increment, truncates the result at k_threshold, and rebuilds the map from
    the prescribed eigenvalues. Stops when the maximum vertex displacement
    falls below eps.
    """
    config = config or SolverConfig()
    population = np.asarray(population, dtype=np.float64)
    pos0, ball_rest, _, ref_boundary = _prepare(mesh, config, "3ddeq", init_positions)
    b_ids = mesh.boundary_vertices

    pos = pos0.copy()
    field = dem.recouple_density(mesh, pos, population)
    frames = frame_decompose(jacobian_per_tet(mesh, pos))
    report = RunReport("3ddeq", config.to_dict())
    report.final["var_rho0"] = normalized_density_variance(field.rho_vertex)

    converged = False
    for n in range(1, config.n_max + 1):
        ref_boundary = normalize_rows(pos[b_ids])
        advected = _flow_step(mesh, pos, field.rho_vertex, config.dt)
        adv_frames = frame_decompose(jacobian_per_tet(mesh, advected))
        lam_cur = flip_eigenvalues(frames.lambdas)
        lam_adv = flip_eigenvalues(adv_frames.lambdas)
        # floor numerically collapsed eigenvalues so the ratios stay finite
        lam_cur[:, 1:] = np.maximum(lam_cur[:, 1:], 1e-12 * lam_cur[:, :1])
        lam_adv[:, 1:] = np.maximum(lam_adv[:, 1:], 1e-12 * lam_adv[:, :1])
        d_lam1 = lam_adv - lam_cur
        a, b, c = lam_cur[:, 0], lam_cur[:, 1], lam_cur[:, 2]
        theta = ((a / c) - 1.0) / (((a / c) - 1.0) + config.residual_constant)
        d_lam2 = np.column_stack([-theta * (a - b), np.zeros_like(b),
                                  theta * (b - c)])
        lam_bar = lam_cur + d_lam1 + config.alpha * d_lam2
        lam_bar = np.sort(lam_bar, axis=1)[:, ::-1]
        lam_bar = np.sort(flip_eigenvalues(lam_bar), axis=1)[:, ::-1]
        bad = lam_bar[:, 2] <= 0
        if bad.any():
            # combined increment collapsed the triple; fall back to the pure
            # flow's eigenvalues for those tets
            lam_bar[bad] = lam_adv[bad]
        lam_bar = truncate_eigenvalues(lam_bar, config.k_threshold)

        cand = reconstruct_map(mesh, TetFrameField(adv_frames.frames, lam_bar),
                               b_ids, advected[b_ids])
        folds_pre = mesh.count_folds(cand)
        strained = folds_pre == 0 and _max_ratio(mesh, cand) > NEAR_FOLD_RATIO
        if (folds_pre or strained) and config.correction:
            cand = correct_overlaps(mesh, cand, config.k_threshold,
                                    reference_boundary=ref_boundary,
                                    near_fold_ratio=NEAR_FOLD_RATIO)
        folds_post = mesh.count_folds(cand)
        field = dem.recouple_density(mesh, cand, population)
        frames = frame_decompose(jacobian_per_tet(mesh, cand))
        e_qc, e_dem, e_deq = compute_energies(ball_rest, cand, field, frames,
                                              config.alpha)
        displacement = float(np.max(np.linalg.norm(cand - pos, axis=1)))
        mean_k, sd_k = _k_stats(frames)
        report.add_iteration(iteration=n, E_3DQC=e_qc, E_3DDEM=e_dem, E_3DDEQ=e_deq,
                             var_rho=normalized_density_variance(field.rho_vertex),
                             mean_K=mean_k, sd_K=sd_k, folds_pre=folds_pre,
                             folds_post=folds_post, displacement=displacement)
        pos = cand
        if displacement < config.eps:
            converged = True
            break

    mean_k, sd_k = _k_stats(frames)
    report.final.update({"var_rho": normalized_density_variance(field.rho_vertex),
                         "mean_K": mean_k, "sd_K": sd_k,
                         "folds": mesh.count_folds(pos)})
    return RunResult(pos, report, converged, pos0)


def run_method(method: str, mesh: TetMesh, population: np.ndarray | None = None,
               config: SolverConfig | None = None,
               init_positions: np.ndarray | None = None) -> RunResult:
    if method == "3dqc":
        return run_3dqc(mesh, config, init_positions)
    if method == "3ddem":
        return run_3ddem(mesh, population, config, init_positions)
    if method == "3ddeq":
        return run_3ddeq(mesh, population, config, init_positions)
    raise ValueError(f"unknown method {method!r}")
