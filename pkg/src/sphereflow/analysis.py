"""Rigidity diagnostics and the closed-form latitude flow oracle.

The excess functional  F = area + integral |H|^2 - 4*pi  is nonnegative for
2-spheres in ambients with sectional curvature at most 1 and vanishes only
for totally umbilic, curvature-pinched spheres; along mean curvature flow it
satisfies  dF/dt <= 4 sup|H|^2 F.  These are checked discretely with a mesh
tolerance eps_mesh = 10 h^2 (h the mean edge length), calibrated against the
latitude family where everything is known in closed form.
"""

import numpy as np
from dataclasses import dataclass, field

from . import ambient as amb
from .surface import (area, mean_curvature_vector, normal_frame,
                      second_fundamental_form, vertex_areas,
                      embed_latitude, embed_euclidean_sphere, graph_immersion)


def mesh_tolerance(surface_or_mesh):
    """Discretization tolerance 10 h^2 for F-type quantities."""
    mesh = getattr(surface_or_mesh, "mesh", surface_or_mesh)
    return 10.0 * mesh.mean_edge_length ** 2


def f_functional(surface):
    """Area plus integrated squared mean curvature, minus 4*pi."""
    h = mean_curvature_vector(surface)
    va = vertex_areas(surface)
    willmore = float(np.sum(va * np.einsum("vd,vd->v", h, h)))
    return area(surface) + willmore - 4.0 * np.pi


def umbilicity_and_pinch(surface, frame=None):
    """Umbilic defect, curvature pinch and the F lower-bound gap.

    umbilic_defect = integral |traceless B|^2; curvature_pinch is the max
    over face tangent planes of |K_ambient - 1| sampled from the closed-form
    curvature at face centroids.
    """
    if frame is None:
        frame = normal_frame(surface)
    b = second_fundamental_form(surface, frame)
    va = vertex_areas(surface)
    defect = float(np.sum(va * b.traceless_norm_sq()))
    pinch = _curvature_pinch(surface)
    return {
        "umbilic_defect": defect,
        "curvature_pinch": pinch,
        "f_value": f_functional(surface),
        "eps_mesh": mesh_tolerance(surface),
    }


def _curvature_pinch(surface):
    model = surface.ambient
    faces = surface.mesh.faces
    x = surface.positions
    centroids = x[faces].mean(axis=1)
    if model.is_spherical:
        centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    e1 = x[faces[:, 1]] - x[faces[:, 0]]
    e2 = x[faces[:, 2]] - x[faces[:, 0]]
    if model.is_spherical:
        e1 = amb.project_tangent(model, centroids, e1)
        e2 = amb.project_tangent(model, centroids, e2)
    if model.kind == amb.CONFORMAL_SPHERE3:
        raise ValueError("curvature sampling unavailable on the conformal model")
    k_ts = amb.sectional(model, centroids, e1, e2, check=False)
    return float(np.max(np.abs(k_ts - 1.0)))


@dataclass
class RigidityReport:
    f_value: float
    umbilic_defect: float
    curvature_pinch: float
    eps_mesh: float
    gronwall_residuals: np.ndarray = field(default_factory=lambda: np.array([]))
    gronwall_times: np.ndarray = field(default_factory=lambda: np.array([]))

    def check_lower_bounds(self):
        """F >= -eps and F >= 0.5 * umbilic defect - eps (curvature <= 1)."""
        ok = self.f_value >= -self.eps_mesh
        ok = ok and (self.f_value >= 0.5 * self.umbilic_defect - self.eps_mesh)
        return bool(ok)

    def to_dict(self):
        return {
            "f_value": self.f_value,
            "umbilic_defect": self.umbilic_defect,
            "curvature_pinch": self.curvature_pinch,
            "eps_mesh": self.eps_mesh,
            "gronwall_residuals": list(map(float, self.gronwall_residuals)),
            "gronwall_times": list(map(float, self.gronwall_times)),
        }


def rigidity_report(surface, trajectory=None):
    parts = umbilicity_and_pinch(surface)
    report = RigidityReport(
        f_value=parts["f_value"], umbilic_defect=parts["umbilic_defect"],
        curvature_pinch=parts["curvature_pinch"], eps_mesh=parts["eps_mesh"])
    if trajectory is not None:
        t, r = gronwall_monotonicity(trajectory)
        report.gronwall_times = t
        report.gronwall_residuals = r
    return report


def gronwall_monotonicity(trajectory, min_samples=3):
    """Residual series  dF/dt - 4 sup|H|^2 F  along a flow.

    Centered differences inside the record grid, one-sided at the ends.
    Nonpositive residuals (up to discretization noise) witness the decay
    inequality for the excess functional.
    """
    t = np.asarray(trajectory.times, dtype=np.float64)
    f = np.asarray(trajectory.diagnostic("f_value"), dtype=np.float64)
    sup_h = np.asarray(trajectory.diagnostic("sup_h"), dtype=np.float64)
    # terminal gauge-loss records carry NaN diagnostics (no graph there)
    valid = np.isfinite(f) & np.isfinite(sup_h)
    t, f, sup_h = t[valid], f[valid], sup_h[valid]
    if t.size < min_samples:
        raise ValueError(f"need at least {min_samples} recorded samples")
    dfdt = np.gradient(f, t)
    residuals = dfdt - 4.0 * sup_h ** 2 * f
    return t, residuals


# ------------------------------------------------------------------ oracle

@dataclass
class LatitudeOracle:
    """Closed forms for the latitude flow in S^3.

    s(t) = arcsin(sin(s0) e^{2t}), area 4 pi cos^2 s, |H| = tan s, and the
    excess functional vanishes identically along the family.
    """

    s0: float

    @property
    def blow_up_time(self):
        return -0.5 * np.log(np.sin(self.s0))

    def sin_s(self, t):
        return np.sin(self.s0) * np.exp(2.0 * np.asarray(t, dtype=np.float64))

    def s(self, t):
        val = self.sin_s(t)
        if np.any(val >= 1.0):
            raise ValueError("time beyond the blow-up of the latitude flow")
        return np.arcsin(val)

    def area(self, t):
        return 4.0 * np.pi * np.cos(self.s(t)) ** 2

    def mean_curvature(self, t):
        return np.tan(self.s(t))

    def self_consistency(self, n_samples=200):
        """max |ds/dt - 2 tan(s)| on a sample grid (identically zero)."""
        t = np.linspace(self.blow_up_time - 6.0, self.blow_up_time - 1e-3,
                        n_samples)
        e = self.sin_s(t)
        ds_dt = 2.0 * e / np.sqrt(1.0 - e * e)
        return float(np.max(np.abs(ds_dt - 2.0 * np.tan(np.arcsin(e)))))


# --------------------------------------------------- randomized test suites

def perturbed_sphere_suite(mesh, count, seed=0, amplitude=0.15):
    """Seeded random perturbed spheres in S^3 and Euclidean R^3.

    Euclidean entries are radial graphs r = 1 + f over the round sphere,
    spherical entries are normal graphs over the equator; f is smoothed
    white noise so the surfaces stay in the resolvable band of the mesh.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        f = smooth_random_field(mesh, rng, amplitude=amplitude)
        if i % 2 == 0:
            surf = embed_euclidean_sphere(mesh)
            surf.positions = surf.positions * (1.0 + f)[:, None]
        else:
            eq = embed_equator_cached(mesh)
            frame = normal_frame(eq)
            section = f[:, None]
            surf = graph_immersion(eq, frame, section)
        out.append(surf)
    return out


_EQ_CACHE = {}


def embed_equator_cached(mesh):
    key = id(mesh)
    if key not in _EQ_CACHE:
        _EQ_CACHE[key] = embed_latitude(mesh, 3, 0.0)
    return _EQ_CACHE[key]


def smooth_random_field(mesh, rng, amplitude=0.15, max_degree=3):
    """Random low-frequency field: seeded polynomial in the S^2 coordinates.

    Restrictions of degree <= max_degree polynomials only carry spherical
    modes the mesh resolves, so derived quantities (B, H) stay in the
    convergent band.  Sup norm scaled to `amplitude`.
    """
    p = mesh.ref_positions
    monomials = [np.ones(mesh.n_vertices)]
    base = [p[:, 0], p[:, 1], p[:, 2]]
    current = list(base)
    monomials.extend(base)
    for _ in range(max_degree - 1):
        nxt = []
        for term in current:
            for b in base:
                nxt.append(term * b)
        monomials.extend(nxt)
        current = nxt
    coeffs = rng.standard_normal(len(monomials))
    coeffs[0] = 0.0
    u = sum(c * mterm for c, mterm in zip(coeffs, monomials))
    u = u - u.mean()
    sup = np.max(np.abs(u))
    if sup > 0:
        u = u * (amplitude / sup)
    return u
