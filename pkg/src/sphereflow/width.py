"""Sweep-outs of S^3 by 2-spheres and width upper bounds.

A sweep-out is the horizontal family x4 = t composed with a parametrized
diffeomorphism family: two closed-form conformal (Moebius) flows plus an
RK4-integrated axial squeeze field, at most 10 parameters.  The reported
quantity L is the max slice area over the t-grid; minimizing over the
parameter family gives width UPPER BOUNDS only (the family is a strict
subset of all isotopies), which is how every report is labeled.
"""

import numpy as np
from dataclasses import dataclass, field

from . import ambient as amb
from . import kernels
from .mesh import TriangleMesh, build_icosphere
from .surface import ImmersedSurface, check_face_quality, DegenerateFaceError

N_PARAMS = 10
NECK_WIDTH_RANGE = (0.15, 0.8)
NECK_RK4_STEPS = 8
MAX_SLICE_EDGE_GEODESIC = np.pi / 2   # resolution guard on distorted meshes


class SliceError(RuntimeError):
    def __init__(self, slice_index, msg):
        super().__init__(f"slice {slice_index}: {msg}")
        self.slice_index = slice_index


@dataclass
class SweepOut:
    metric: amb.AmbientModel
    t_grid: np.ndarray
    mesh: TriangleMesh
    params: np.ndarray

    def __post_init__(self):
        if self.metric.kind not in (amb.ROUND_SPHERE, amb.CONFORMAL_SPHERE3) \
                or self.metric.dim != 3:
            raise ValueError("sweep-outs are defined on round or conformal S^3")
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.params.shape != (N_PARAMS,):
            raise ValueError(f"expected {N_PARAMS} parameters")

    def slice_positions(self, i):
        """Vertex positions of slice i, or None for the point slices."""
        t = float(self.t_grid[i])
        if abs(t) >= 1.0 - 1e-12:
            return None
        radius = np.sqrt(1.0 - t * t)
        pos = np.empty((self.mesh.n_vertices, 4))
        pos[:, :3] = radius * self.mesh.ref_positions
        pos[:, 3] = t
        return _apply_diffeos(pos, t, self.params)

    def slice_surface(self, i):
        pos = self.slice_positions(i)
        if pos is None:
            return None
        return ImmersedSurface(mesh=self.mesh, positions=pos,
                               ambient=self.metric)


@dataclass
class WidthReport:
    value: float                      # L = max slice area (upper bound)
    argmax_t: float
    params: np.ndarray
    slice_areas: np.ndarray
    bound_kind: str = "upper_bound"
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "value": float(self.value),
            "argmax_t": float(self.argmax_t),
            "params": [float(p) for p in self.params],
            "slice_areas": [float(a) for a in self.slice_areas],
            "bound_kind": self.bound_kind,
            "trace": [{"iteration": int(i), "params": [float(p) for p in pp],
                       "value": float(v)} for i, pp, v in self.trace],
        }


# ------------------------------------------------------------ diffeo family

def conformal_flow(points, direction):
    """Time-1 flow of the conformal field  x -> a - (a.x) x  on S^3.

    Moves points along meridians toward +direction; closed form through
    artanh of the axis height.
    """
    speed = float(np.linalg.norm(direction))
    if speed < 1e-14:
        return points
    axis = np.asarray(direction, dtype=np.float64) / speed
    u = np.clip(points @ axis, -1.0, 1.0)
    w = points - u[:, None] * axis[None, :]
    wn = np.linalg.norm(w, axis=1)
    u_safe = np.clip(u, -1.0 + 1e-15, 1.0 - 1e-15)
    u_new = np.tanh(speed + np.arctanh(u_safe))
    scale = np.sqrt(np.maximum(1.0 - u_new ** 2, 0.0)) / np.maximum(wn, 1e-300)
    out = u_new[:, None] * axis[None, :] + scale[:, None] * w
    pole = wn <= 1e-13
    if np.any(pole):
        out[pole] = points[pole]
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def axial_squeeze_flow(points, beta, band_width, n_steps=NECK_RK4_STEPS):
    """RK4 time-1 flow of  Y = -beta x4 exp(-x4^2 / (2 w^2)) P(e4).

    Pulls a band around the equatorial plane toward it (beta > 0) or pushes
    away (beta < 0); divergence-style neck deformation.
    """
    if abs(beta) < 1e-14:
        return points
    w2 = 2.0 * band_width * band_width

    def vel(x):
        x4 = x[:, 3]
        amp = -beta * x4 * np.exp(-x4 * x4 / w2)
        e4 = np.zeros_like(x)
        e4[:, 3] = 1.0
        tang = e4 - x4[:, None] * x
        return amp[:, None] * tang

    x = points.copy()
    h = 1.0 / n_steps
    for _ in range(n_steps):
        k1 = vel(x)
        k2 = vel(_unit(x + 0.5 * h * k1))
        k3 = vel(_unit(x + 0.5 * h * k2))
        k4 = vel(_unit(x + h * k3))
        x = _unit(x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
    return x


def _unit(x):
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _apply_diffeos(pos, t, params):
    a = params[0:4]
    b = params[4:8] * (1.0 - t * t)
    beta = params[8]
    lo, hi = NECK_WIDTH_RANGE
    band = lo + (hi - lo) / (1.0 + np.exp(-params[9]))
    out = conformal_flow(pos, a)
    out = conformal_flow(out, b)
    out = axial_squeeze_flow(out, beta, band)
    return out


# ------------------------------------------------------------ L evaluation

def standard_sweepout(metric, n_slices=41, mesh_level=3, mesh=None):
    """Horizontal-sphere family with the identity diffeomorphism."""
    if mesh is None:
        mesh = build_icosphere(mesh_level)
    t_grid = np.linspace(-1.0, 1.0, n_slices)
    return SweepOut(metric=metric, t_grid=t_grid, mesh=mesh,
                    params=np.zeros(N_PARAMS))


def evaluate_width(sweepout, validate=True):
    """Max slice area over the grid; point slices contribute zero.

    Slice validity covers face quality and mesh resolution: a diffeomorphism
    that concentrates most vertices in one region leaves geodesic triangles
    too large to represent the slice, and such slices are rejected rather
    than silently under-measured.
    """
    areas = np.zeros(sweepout.t_grid.size)
    max_chord = 2.0 * np.sin(MAX_SLICE_EDGE_GEODESIC / 2.0)
    edges = sweepout.mesh.edges
    for i in range(sweepout.t_grid.size):
        pos = sweepout.slice_positions(i)
        if pos is None:
            continue
        if validate:
            surf = ImmersedSurface(mesh=sweepout.mesh, positions=pos,
                                   ambient=sweepout.metric)
            try:
                check_face_quality(surf)
            except DegenerateFaceError as exc:
                raise SliceError(i, str(exc)) from exc
            longest = float(np.max(np.linalg.norm(
                pos[edges[:, 0]] - pos[edges[:, 1]], axis=1)))
            if longest > max_chord:
                raise SliceError(
                    i, f"unresolved slice: edge length {longest:.3f} exceeds "
                       f"the chordal limit {max_chord:.3f}")
        fa = kernels.spherical_face_areas(pos, sweepout.mesh.faces)
        if sweepout.metric.kind == amb.CONFORMAL_SPHERE3:
            centroids = pos[sweepout.mesh.faces].mean(axis=1)
            centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
            fa = fa * amb.metric_density(sweepout.metric, centroids)
        areas[i] = fa.sum()
    imax = int(np.argmax(areas))
    return WidthReport(value=float(areas[imax]),
                       argmax_t=float(sweepout.t_grid[imax]),
                       params=sweepout.params.copy(),
                       slice_areas=areas)


def optimize_width_upper(metric, param_bound=1.0, budget=60, seed=0,
                         n_slices=41, mesh_level=3, initial_step=None):
    """Seeded pattern search over the diffeomorphism parameters.

    Minimizes L starting from the standard sweep-out; only improvements are
    accepted so the trace is nonincreasing.  Budget counts L evaluations;
    budget 1 returns the standard sweep-out value.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1 evaluation")
    mesh = build_icosphere(mesh_level)
    t_grid = np.linspace(-1.0, 1.0, n_slices)
    rng = np.random.default_rng(seed)

    def evaluate(params):
        so = SweepOut(metric=metric, t_grid=t_grid, mesh=mesh, params=params)
        return evaluate_width(so, validate=True)

    params = np.zeros(N_PARAMS)
    best = evaluate(params)
    evals = 1
    trace = [(0, params.copy(), best.value)]
    step = initial_step if initial_step is not None else 0.25 * param_bound
    min_step = 1e-3 * param_bound
    while evals < budget and step >= min_step:
        improved = False
        order = rng.permutation(N_PARAMS)
        for axis in order:
            for sign in (1.0, -1.0):
                if evals >= budget:
                    break
                trial = params.copy()
                trial[axis] = np.clip(trial[axis] + sign * step,
                                      -param_bound, param_bound)
                if trial[axis] == params[axis]:
                    continue
                try:
                    cand = evaluate(trial)
                except SliceError:
                    evals += 1           # unresolvable trial: rejected
                    continue
                evals += 1
                if cand.value < best.value:
                    params = trial
                    best = cand
                    trace.append((evals, params.copy(), best.value))
                    improved = True
                    break
            if improved or evals >= budget:
                break
        if not improved:
            step *= 0.5
    best.trace = trace
    best.params = params
    return best


# ----------------------------------------------------------- metric builders

def constant_conformal_metric(c):
    return amb.conformal_sphere3(lambda x: np.full(np.shape(x)[:-1], float(c)))


def bump_conformal_metric(amplitude, center, sigma):
    """phi(x) = amplitude * exp(-|x - center|^2 / (2 sigma^2)) on S^3."""
    center = np.asarray(center, dtype=np.float64)
    center = center / np.linalg.norm(center)

    def phi(x):
        d2 = np.sum((np.asarray(x) - center) ** 2, axis=-1)
        return amplitude * np.exp(-d2 / (2.0 * sigma * sigma))

    return amb.conformal_sphere3(phi)
