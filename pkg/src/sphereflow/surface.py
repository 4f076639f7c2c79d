"""Discrete immersed 2-spheres in the model ambients.

Positions are extrinsic coordinate arrays over an icosphere mesh.  Mean
curvature uses the cotan area gradient with an extrinsic correction for
sphere ambients: for a surface in S^n sitting in flat (n+1)-space,
H_sphere = H_flat + position (the round sphere's shape operator).  Second
fundamental forms come from per-vertex quadratic fits in exponential
coordinates.
"""

import numpy as np
from dataclasses import dataclass, field

from . import ambient as amb
from . import kernels
from .mesh import TriangleMesh

MIN_FACE_ANGLE_DEG = 5.0
FOCAL_MARGIN = 0.2


class SurfaceError(ValueError):
    pass


class DegenerateFaceError(SurfaceError):
    def __init__(self, face_id, msg):
        super().__init__(f"face {face_id}: {msg}")
        self.face_id = face_id


class BlowUpSignal(RuntimeError):
    """Section magnitude reached the focal threshold; graph flow must stop."""


class GaugeLossError(RuntimeError):
    """Surface left the tubular neighborhood of its base."""


@dataclass
class ImmersedSurface:
    mesh: TriangleMesh
    positions: np.ndarray              # (V, coord_dim)
    ambient: amb.AmbientModel
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self):
        return self.positions.shape[0]

    def validate(self, point_tol=1e-12, min_angle_deg=MIN_FACE_ANGLE_DEG):
        amb.check_point(self.ambient, self.positions, tol=point_tol)
        check_face_quality(self, min_angle_deg)
        return self

    def mean_edge_length(self):
        e = self.mesh.edges
        return float(np.mean(np.linalg.norm(
            self.positions[e[:, 0]] - self.positions[e[:, 1]], axis=1)))


@dataclass
class Frame:
    """Per-vertex orthonormal bases of the normal space inside the ambient."""

    base: ImmersedSurface
    vectors: np.ndarray                # (V, k, coord_dim)

    @property
    def rank(self):
        return self.vectors.shape[1]


@dataclass
class SecondFundamentalData:
    """Quadratic-fit second fundamental form in frame coordinates.

    tensor[v, a, i, j] is the a-th frame coefficient of B(t_i, t_j) at
    vertex v for the fitted tangent pair (t_1, t_2).  The trace identity
    mean = (tensor_11 + tensor_22) / 2 and traceless = tensor - mean * id
    hold exactly by construction.
    """

    tensor: np.ndarray                 # (V, k, 2, 2)
    mean: np.ndarray                   # (V, k) frame coefficients of H
    traceless: np.ndarray              # (V, k, 2, 2)
    tangents: np.ndarray               # (V, 2, coord_dim)

    def traceless_norm_sq(self):
        return np.einsum("vkij,vkij->v", self.traceless, self.traceless)


# ------------------------------------------------------------- constructors

def embed_latitude(mesh, n, s, direction=0):
    """Latitude 2-sphere p -> (cos(s) p, sin(s) q) in S^n.

    s = 0 is the totally geodesic equator; the complementary unit direction
    q is the coordinate axis 3 + direction.
    """
    if n < 3:
        raise SurfaceError("ambient dimension must be >= 3")
    if not 0.0 <= s < np.pi / 2:
        raise SurfaceError(f"latitude parameter s={s} outside [0, pi/2)")
    model = amb.round_sphere(n)
    v = mesh.n_vertices
    positions = np.zeros((v, n + 1))
    positions[:, :3] = np.cos(s) * mesh.ref_positions
    positions[:, 3 + direction] = np.sin(s)
    return ImmersedSurface(mesh=mesh, positions=positions, ambient=model)


def embed_equator(mesh, n):
    return embed_latitude(mesh, n, 0.0)


def embed_euclidean_sphere(mesh, radius=1.0, center=None, n=3):
    """Round sphere of given radius in Euclidean R^n."""
    model = amb.euclidean(n)
    v = mesh.n_vertices
    positions = np.zeros((v, n))
    positions[:, :3] = radius * mesh.ref_positions
    if center is not None:
        positions += np.asarray(center, dtype=np.float64)
    return ImmersedSurface(mesh=mesh, positions=positions, ambient=model)


# ------------------------------------------------------------------- areas

def face_areas(surface):
    """Per-face ambient areas.

    Round sphere: geodesic-triangle (spherical excess) areas, conformal
    model additionally weighted by e^{2*phi} at face centroids, Euclidean:
    flat areas.
    """
    model = surface.ambient
    if model.kind == amb.EUCLIDEAN:
        _, areas = kernels.face_corner_cots(surface.positions, surface.mesh.faces)
        return areas
    areas = kernels.spherical_face_areas(surface.positions, surface.mesh.faces)
    if model.kind == amb.CONFORMAL_SPHERE3:
        centroids = surface.positions[surface.mesh.faces].mean(axis=1)
        centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
        areas = areas * amb.metric_density(model, centroids)
    return areas


def area(surface):
    return float(face_areas(surface).sum())


def vertex_areas(surface, scheme="mixed"):
    """Lumped per-vertex areas (mixed Voronoi by default)."""
    _, va = kernels.cotan_mc_terms(surface.positions, surface.mesh.faces,
                                   surface.n_vertices, mixed=(scheme == "mixed"))
    return va


def check_face_quality(surface, min_angle_deg=MIN_FACE_ANGLE_DEG):
    angles = corner_angles(surface.positions, surface.mesh.faces)
    worst = np.min(angles, axis=1)
    bad = np.where(worst < np.deg2rad(min_angle_deg))[0]
    if bad.size:
        raise DegenerateFaceError(
            int(bad[0]),
            f"minimum corner angle {np.rad2deg(worst[bad[0]]):.2f} deg "
            f"below {min_angle_deg} deg")
    return True


def corner_angles(positions, faces):
    """Flat corner angles (F, 3) of each triangle."""
    corners = positions[faces]
    out = np.empty(faces.shape, dtype=np.float64)
    for c in range(3):
        u = corners[:, (c + 1) % 3] - corners[:, c]
        v = corners[:, (c + 2) % 3] - corners[:, c]
        nu = np.linalg.norm(u, axis=1)
        nv = np.linalg.norm(v, axis=1)
        cosang = np.einsum("fd,fd->f", u, v) / np.maximum(nu * nv, 1e-300)
        out[:, c] = np.arccos(np.clip(cosang, -1.0, 1.0))
    return out


def gauss_bonnet_defect(surface):
    """Total angle defect minus 4*pi; identically zero for closed genus 0."""
    angles = corner_angles(surface.positions, surface.mesh.faces)
    angle_sum = np.zeros(surface.n_vertices)
    for c in range(3):
        angle_sum += np.bincount(surface.mesh.faces[:, c],
                                 weights=angles[:, c],
                                 minlength=surface.n_vertices)
    total_defect = float(np.sum(2.0 * np.pi - angle_sum))
    return total_defect - 4.0 * np.pi


# ----------------------------------------------------------- mean curvature

def mean_curvature_vector(surface, scheme="mixed", vertex_area=None):
    """Per-vertex mean curvature vectors (V, coord_dim).

    Cotan area gradient over twice the lumped vertex area, plus the
    position-vector correction and tangency projection on sphere ambients.
    """
    model = surface.ambient
    if model.kind == amb.CONFORMAL_SPHERE3:
        raise SurfaceError("mean curvature not available on the conformal model")
    acc, va = kernels.cotan_mc_terms(surface.positions, surface.mesh.faces,
                                     surface.n_vertices,
                                     mixed=(scheme == "mixed"))
    if vertex_area is not None:
        va = vertex_area
    if np.any(va <= 0.0):
        bad = int(np.argmin(va))
        raise SurfaceError(f"degenerate vertex star at vertex {bad}")
    h = -acc / (2.0 * va[:, None])
    if model.kind == amb.ROUND_SPHERE:
        h = h + surface.positions
        h = amb.project_tangent(model, surface.positions, h)
    return h


# ------------------------------------------------------- tangents and frames

def _padded_neighbors(mesh):
    indptr, indices = mesh.vertex_neighbors
    counts = np.diff(indptr)
    smax = int(counts.max())
    nv = mesh.n_vertices
    padded = np.repeat(np.arange(nv)[:, None], smax, axis=1)
    mask = np.zeros((nv, smax), dtype=bool)
    for i in range(nv):
        c = counts[i]
        padded[i, :c] = indices[indptr[i]:indptr[i + 1]]
        mask[i, :c] = True
    return padded, mask


def tangent_basis(surface):
    """Orthonormal pair spanning the discrete tangent plane at each vertex.

    Top-2 principal directions of the 1-ring chords projected to the
    ambient tangent space.
    """
    if "tangent_basis" in surface._cache:
        return surface._cache["tangent_basis"]
    mesh = surface.mesh
    padded, mask = _padded_neighbors(mesh)
    x = surface.positions
    chords = x[padded] - x[:, None, :]
    chords = np.where(mask[:, :, None], chords, 0.0)
    if surface.ambient.is_spherical:
        ip = np.einsum("vsd,vd->vs", chords, x)
        chords = chords - ip[:, :, None] * x[:, None, :]
    _, _, vt = np.linalg.svd(chords, full_matrices=False)
    basis = vt[:, :2, :]
    surface._cache["tangent_basis"] = basis
    return basis


def normal_frame(surface):
    """Orthonormal frame of the normal space at each vertex.

    Gram-Schmidt of constant candidate directions against the position
    vector (sphere ambients) and the discrete tangent plane.  For the
    equatorial sphere the candidates are already exactly normal, so the
    frame is the constant coordinate complement (a parallel frame).
    """
    model = surface.ambient
    d = model.coord_dim
    k = model.dim - 2
    x = surface.positions
    tans = tangent_basis(surface)
    if model.kind == amb.EUCLIDEAN:
        # radial candidate first: robust for sphere-like surfaces
        centroid = x.mean(axis=0)
        radial = x - centroid
        nrm = np.linalg.norm(radial, axis=1, keepdims=True)
        radial = np.where(nrm > 1e-12, radial / np.maximum(nrm, 1e-300),
                          np.eye(d)[0])
        candidates = [radial] + [np.broadcast_to(np.eye(d)[i], x.shape)
                                 for i in range(d)]
        span = [tans[:, 0], tans[:, 1]]
    else:
        candidates = [np.broadcast_to(np.eye(d)[3 + a], x.shape)
                      for a in range(k)]
        candidates += [np.broadcast_to(np.eye(d)[i], x.shape) for i in range(3)]
        span = [x, tans[:, 0], tans[:, 1]]
    frame = np.empty((x.shape[0], k, d))
    produced = 0
    for cand in candidates:
        if produced == k:
            break
        v = np.array(cand, dtype=np.float64)
        for s in span:
            v = v - np.einsum("vd,vd->v", v, s)[:, None] * s
        for b in range(produced):
            v = v - np.einsum("vd,vd->v", v, frame[:, b])[:, None] * frame[:, b]
        nrm = np.linalg.norm(v, axis=1)
        if np.min(nrm) < 1e-6:
            continue
        frame[:, produced] = v / nrm[:, None]
        produced += 1
    if produced < k:
        raise SurfaceError("could not build a normal frame (degenerate span)")
    return Frame(base=surface, vectors=frame)


# ------------------------------------------------------- sections and graphs

def section_to_vector(frame, section):
    """Frame coefficients (V, k) -> ambient vectors (V, d)."""
    return np.einsum("vk,vkd->vd", section, frame.vectors)


def vector_to_section(frame, vectors):
    return np.einsum("vd,vkd->vk", vectors, frame.vectors)


def section_sup_norm(section):
    return float(np.max(np.linalg.norm(np.atleast_2d(section), axis=-1)))


def graph_positions(base, frame, section, margin=FOCAL_MARGIN):
    sup = section_sup_norm(section)
    if base.ambient.is_spherical and sup >= np.pi / 2 - margin:
        raise BlowUpSignal(
            f"section sup norm {sup:.4f} at the focal threshold "
            f"{np.pi / 2 - margin:.4f}")
    v = section_to_vector(frame, section)
    return amb.exp_map(base.ambient, base.positions, v, check=False)


def graph_immersion(base, frame, section, margin=FOCAL_MARGIN):
    """Surface p -> exp_p(sum_a U^a(p) nu_a(p)) over the base."""
    pos = graph_positions(base, frame, section, margin)
    return ImmersedSurface(mesh=base.mesh, positions=pos, ambient=base.ambient)


def extract_section(surface, base, frame, margin=FOCAL_MARGIN):
    """Frame coefficients of the per-vertex log of surface over base.

    Inverse of graph_immersion up to the tangential reparametrization
    freedom (positions are reproduced after nearest-base-point projection).
    """
    dist = amb.distance(base.ambient, base.positions, surface.positions)
    limit = np.pi / 2 - margin
    if base.ambient.is_spherical and np.max(dist) >= limit:
        raise GaugeLossError(
            f"surface left the tubular neighborhood: max distance "
            f"{np.max(dist):.4f} >= {limit:.4f}")
    v = amb.log_map(base.ambient, base.positions, surface.positions, check=False)
    return vector_to_section(frame, v)


# ------------------------------------------------- second fundamental form

def _padded_two_ring(mesh):
    key = "two_ring_padded"
    if key in mesh._cache:
        return mesh._cache[key]
    rings = [mesh.two_ring(i) for i in range(mesh.n_vertices)]
    smax = max(len(r) for r in rings)
    padded = np.repeat(np.arange(mesh.n_vertices)[:, None], smax, axis=1)
    mask = np.zeros((mesh.n_vertices, smax), dtype=bool)
    for i, r in enumerate(rings):
        padded[i, :len(r)] = r
        mask[i, :len(r)] = True
    mesh._cache[key] = (padded, mask)
    return padded, mask


def second_fundamental_form(surface, frame=None):
    """Quadratic fit of the neighborhood in exponential coordinates.

    The two-ring of each vertex is written as a graph over the fitted
    tangent plane; the Hessian of the normal heights is B in frame
    coordinates.
    """
    if frame is None:
        frame = normal_frame(surface)
    mesh = surface.mesh
    x = surface.positions
    tans = tangent_basis(surface)
    nu = frame.vectors
    k = nu.shape[1]
    padded, mask = _padded_two_ring(mesh)
    logs = amb.log_map(surface.ambient, x[:, None, :], x[padded], check=False)
    logs = np.where(mask[:, :, None], logs, 0.0)
    a = np.einsum("vsd,vd->vs", logs, tans[:, 0])
    b = np.einsum("vsd,vd->vs", logs, tans[:, 1])
    heights = np.einsum("vsd,vkd->vsk", logs, nu)
    # condition: scale tangential coordinates by the local chord scale
    scale = np.sqrt(np.maximum((a * a + b * b).sum(axis=1)
                               / np.maximum(mask.sum(axis=1), 1), 1e-30))
    a = a / scale[:, None]
    b = b / scale[:, None]
    design = np.stack([np.ones_like(a), a, b,
                       0.5 * a * a, a * b, 0.5 * b * b], axis=2)
    design = np.where(mask[:, :, None], design, 0.0)
    ata = np.einsum("vsi,vsj->vij", design, design)
    aty = np.einsum("vsi,vsk->vik", design, heights)
    coef = np.linalg.solve(ata, aty)                 # (V, 6, k)
    inv_sq = 1.0 / (scale * scale)
    tensor = np.empty((x.shape[0], k, 2, 2))
    tensor[:, :, 0, 0] = coef[:, 3] * inv_sq[:, None]
    tensor[:, :, 0, 1] = coef[:, 4] * inv_sq[:, None]
    tensor[:, :, 1, 0] = tensor[:, :, 0, 1]
    tensor[:, :, 1, 1] = coef[:, 5] * inv_sq[:, None]
    mean = 0.5 * (tensor[:, :, 0, 0] + tensor[:, :, 1, 1])
    traceless = tensor.copy()
    traceless[:, :, 0, 0] -= mean
    traceless[:, :, 1, 1] -= mean
    return SecondFundamentalData(tensor=tensor, mean=mean,
                                 traceless=traceless, tangents=tans)
