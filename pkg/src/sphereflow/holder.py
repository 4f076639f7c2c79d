"""Discrete parabolic Hölder norms and the estimate experiments built on them.

Seminorms are maxima of difference quotients over sampled vertex pairs
(within the injectivity radius, parallel frames assumed so coefficients
compare directly) and over time pairs; second space derivatives come from
the discrete Laplacian.  All quantities are therefore lower-bound estimators
of the continuum norms; the experiments are trend checks, not certificates.

Fields are arrays (T, V) or (T, V, k) sampled on the unit-sphere base mesh
times a uniform time grid.
"""

import numpy as np
from dataclasses import dataclass

from . import kernels
from .jacobi import stiffness_matrix
from .flow import solve_cauchy
from .surface import vertex_areas
from .analysis import embed_equator_cached

INJECTIVITY_MARGIN = 1e-3


@dataclass
class HolderNorms:
    alpha: float
    sup: float                      # ||u||_0
    space: float                    # [u]_{alpha,x}
    space_d2: float                 # [d2 u]_{alpha,x}
    time: float                     # [u]_{alpha/2,t}
    time_d1: float                  # [du]_{(1+alpha)/2,t}
    c0_alpha: float                 # ||u||_{0,alpha}
    c2_alpha: float                 # ||u||_{2,alpha}

    def to_dict(self):
        return {k: float(v) for k, v in self.__dict__.items()}


class _MeshCalculus:
    """Per-mesh sampling structure shared by all norm evaluations."""

    def __init__(self, mesh, pair_budget=200_000, seed=0):
        self.mesh = mesh
        eq = embed_equator_cached(mesh)
        self.va = vertex_areas(eq)
        self.stiff = stiffness_matrix(eq.positions, mesh.faces,
                                      mesh.n_vertices)
        self.pairs_i, self.pairs_j, self.dist = self._sample_pairs(
            mesh, pair_budget, seed)
        self.grad_ops = self._face_gradients(mesh)

    @staticmethod
    def _sample_pairs(mesh, budget, seed):
        p = mesh.ref_positions
        nv = mesh.n_vertices
        two_hop = []
        for i in range(nv):
            ring2 = mesh.two_ring(i)
            two_hop.append(np.stack([np.full(ring2.size, i), ring2], axis=1))
        pairs = np.concatenate([mesh.edges] + two_hop)
        pairs = np.unique(np.sort(pairs, axis=1), axis=0)
        n_extra = max(budget - pairs.shape[0], 0)
        if n_extra:
            rng = np.random.default_rng(seed)
            ri = rng.integers(0, nv, size=n_extra)
            rj = rng.integers(0, nv, size=n_extra)
            keep = ri != rj
            extra = np.sort(np.stack([ri[keep], rj[keep]], axis=1), axis=1)
            pairs = np.unique(np.concatenate([pairs, extra]), axis=0)
        cosd = np.clip(np.einsum("pd,pd->p", p[pairs[:, 0]], p[pairs[:, 1]]),
                       -1.0, 1.0)
        dist = np.arccos(cosd)
        keep = (dist > 1e-12) & (dist < np.pi - INJECTIVITY_MARGIN)
        pairs, dist = pairs[keep], dist[keep]
        return (pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64),
                dist)

    @staticmethod
    def _face_gradients(mesh):
        """P1 gradient: per-face 3x3 operator rows mapped to vertex averages."""
        p = mesh.ref_positions
        f = mesh.faces
        corners = p[f]
        normal = np.cross(corners[:, 1] - corners[:, 0],
                          corners[:, 2] - corners[:, 0])
        double_area = np.linalg.norm(normal, axis=1)
        nhat = normal / double_area[:, None]
        grads = np.empty((f.shape[0], 3, 3))
        for c in range(3):
            edge = corners[:, (c + 2) % 3] - corners[:, (c + 1) % 3]
            grads[:, c] = np.cross(nhat, edge) / double_area[:, None]
        return grads, double_area / 2.0

    def gradient_field(self, values):
        """Vertex-averaged P1 gradients, (V, 3*k) from (V, k)."""
        grads, fa = self.grad_ops
        f = self.mesh.faces
        k = values.shape[1]
        face_grad = np.einsum("fcx,fck->fxk", grads, values[f])
        out = np.zeros((self.mesh.n_vertices, 3, k))
        wsum = np.zeros(self.mesh.n_vertices)
        for c in range(3):
            wsum += np.bincount(f[:, c], weights=fa,
                                minlength=self.mesh.n_vertices)
            for x in range(3):
                for kk in range(k):
                    out[:, x, kk] += np.bincount(
                        f[:, c], weights=fa * face_grad[:, x, kk],
                        minlength=self.mesh.n_vertices)
        out /= wsum[:, None, None]
        return out.reshape(self.mesh.n_vertices, 3 * k)

    def laplacian_field(self, values):
        return -(self.stiff @ values) / self.va[:, None]


_CALCULUS_CACHE = {}


def mesh_calculus(mesh, pair_budget=200_000):
    key = (id(mesh), pair_budget)
    if key not in _CALCULUS_CACHE:
        _CALCULUS_CACHE[key] = _MeshCalculus(mesh, pair_budget)
    return _CALCULUS_CACHE[key]


def _as_tvk(field_values):
    a = np.asarray(field_values, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise ValueError("field must be (T, V) or (T, V, k)")
    return a


def _space_seminorm(calc, values_tvk, beta):
    inv = calc.dist ** (-beta)
    best = 0.0
    for t in range(values_tvk.shape[0]):
        best = max(best, kernels.max_pair_quotient(
            values_tvk[t], calc.pairs_i, calc.pairs_j, inv))
    return best


def _time_seminorm(values_tvk, times, beta):
    t_count = values_tvk.shape[0]
    if t_count < 2:
        return 0.0
    offsets = set()
    offset = 1
    while offset < t_count:
        offsets.add(offset)
        offset *= 2
    offsets.add(t_count - 1)            # extremal pair always sampled
    best = 0.0
    for offset in sorted(offsets):
        diff = values_tvk[offset:] - values_tvk[:-offset]
        dt = times[offset:] - times[:-offset]
        mag = np.linalg.norm(diff, axis=2).max(axis=1)
        best = max(best, float(np.max(mag / dt ** beta)))
    return best


def _time_derivative(values_tvk, times):
    return np.gradient(values_tvk, times, axis=0)


def _sup(values_tvk):
    return float(np.max(np.linalg.norm(values_tvk, axis=2)))


def holder_norms(field_values, times, mesh, alpha, pair_budget=200_000):
    """Discrete parabolic Hölder norm bundle of a space-time field.

    The full norm includes the lower-order norm so the monotonicity
    ||u||_{2,alpha} >= ||u||_{0,alpha} >= ||u||_0 holds by construction.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    u = _as_tvk(field_values)
    times = np.asarray(times, dtype=np.float64)
    if times.size != u.shape[0] or times.size == 0:
        raise ValueError("times and field samples disagree")
    calc = mesh_calculus(mesh, pair_budget)

    sup0 = _sup(u)
    sx = _space_seminorm(calc, u, alpha)
    st = _time_seminorm(u, times, alpha / 2.0) if times.size > 1 else 0.0
    c0a = sup0 + sx + st

    grad = np.stack([calc.gradient_field(u[t]) for t in range(u.shape[0])])
    lap = np.stack([calc.laplacian_field(u[t]) for t in range(u.shape[0])])
    if times.size > 1:
        dudt = _time_derivative(u, times)
        time_d1 = _time_seminorm(grad, times, (1.0 + alpha) / 2.0)
        s2t = (time_d1
               + _time_seminorm(lap, times, alpha / 2.0)
               + _time_seminorm(dudt, times, alpha / 2.0))
        dudt_sup = _sup(dudt)
        dt_space = _space_seminorm(calc, dudt, alpha)
    else:
        dudt = None
        time_d1 = 0.0
        s2t = 0.0
        dudt_sup = 0.0
        dt_space = 0.0
    sx2 = _space_seminorm(calc, lap, alpha)
    s2x = sx2 + dt_space
    c2a = (c0a + _sup(grad) + _sup(lap) + dudt_sup + s2x + s2t)
    return HolderNorms(alpha=alpha, sup=sup0, space=sx, space_d2=sx2,
                       time=st, time_d1=time_d1, c0_alpha=c0a, c2_alpha=c2a)


def spatial_holder_norms(values, mesh, alpha, pair_budget=200_000):
    """|u|_{0,alpha} and |u|_{2,alpha} of a time-independent field."""
    u = _as_tvk(values[None] if np.asarray(values).ndim <= 2 else values)
    calc = mesh_calculus(mesh, pair_budget)
    sup0 = _sup(u)
    sx = _space_seminorm(calc, u, alpha)
    grad = calc.gradient_field(u[0])[None]
    lap = calc.laplacian_field(u[0])[None]
    c0a = sup0 + sx
    c2a = (c0a + _sup(grad) + _sup(lap)
           + _space_seminorm(calc, lap, alpha))
    return {"c0_alpha": c0a, "c2_alpha": c2a, "sup": sup0}


def space_time_l2(field_values, times, mesh):
    u = _as_tvk(field_values)
    calc = mesh_calculus(mesh)
    spatial = np.einsum("tvk,v->t", u * u, calc.va)
    if times is None or len(times) < 2:
        return float(np.sqrt(spatial.mean()))
    return float(np.sqrt(np.trapezoid(spatial, np.asarray(times))))


# ----------------------------------------------------------- experiments

def schauder_ratio_experiment(problem_builder, horizons, alpha=0.5,
                              time_step=2e-3, record_every=None):
    """Ratio ||U||_{2,a} / (||F||_{0,a} + |U0|_{2,a} + ||U||_L2) across T.

    `problem_builder()` returns (problem, u0, mesh, source_sampler|None);
    the operator must be time independent.  A T-independent constant in the
    estimate shows up as a flat ratio column.
    """
    rows = []
    for horizon in horizons:
        problem, u0, mesh, source = problem_builder()
        if not problem.time_independent:
            raise ValueError("the T-independence experiment requires a "
                             "time-independent operator")
        rec = record_every or max(int(round(horizon / time_step / 128)), 1)
        traj = solve_cauchy(problem, u0, horizon, time_step,
                            record_every=rec)
        norms = holder_norms(traj.sections, traj.times, mesh, alpha)
        u0n = spatial_holder_norms(np.asarray(u0), mesh, alpha)
        l2 = space_time_l2(traj.sections, traj.times, mesh)
        if source is None:
            f_norm = 0.0
        else:
            f_samples = np.stack([np.atleast_2d(source(t))
                                  for t in traj.times])
            f_norm = holder_norms(f_samples, traj.times, mesh,
                                  alpha).c0_alpha
        denom = f_norm + u0n["c2_alpha"] + l2
        rows.append({
            "horizon": float(horizon),
            "u_c2_alpha": norms.c2_alpha,
            "f_c0_alpha": f_norm,
            "u0_c2_alpha": u0n["c2_alpha"],
            "l2": l2,
            "ratio": norms.c2_alpha / denom,
        })
    return rows


_SEMINORM_ORDERS = (0, 1, 2)


def _order_seminorm(calc, u, grad, lap, dudt, times, order, expo):
    """[u]_{l,expo} combined space+time seminorm at derivative order l."""
    if order == 0:
        s = _space_seminorm(calc, u, expo)
        t = _time_seminorm(u, times, expo / 2.0)
        return s + t
    if order == 1:
        s = _space_seminorm(calc, grad, expo)
        t = (_time_seminorm(u, times, (1.0 + expo) / 2.0)
             + _time_seminorm(grad, times, expo / 2.0))
        return s + t
    s = (_space_seminorm(calc, lap, expo)
         + _space_seminorm(calc, dudt, expo))
    t = (_time_seminorm(grad, times, (1.0 + expo) / 2.0)
         + _time_seminorm(lap, times, expo / 2.0)
         + _time_seminorm(dudt, times, expo / 2.0))
    return s + t


def _order_norm(calc, u, grad, lap, dudt, times, order, expo):
    out = _sup(u)
    if order >= 1:
        out += _sup(grad)
    if order >= 2:
        out += _sup(lap) + _sup(dudt)
    return out + _order_seminorm(calc, u, grad, lap, dudt, times, order, expo)


def interpolation_check(fields, times, mesh, high=(2, 0.5), low=(0, 0.0),
                        eps_list=(0.1, 0.01)):
    """Minimal C(eps) with ||u||_{m,b} <= C ||u||_L2 + eps [u]_{l,a}.

    Requires l + a > m + b.  Returns per-eps constants over the probe
    family plus the per-probe norm table; C(eps) is nonincreasing in eps.
    """
    l_ord, l_exp = high
    m_ord, m_exp = low
    if l_ord not in _SEMINORM_ORDERS or m_ord not in _SEMINORM_ORDERS:
        raise ValueError("derivative orders must be 0, 1 or 2")
    if l_ord + l_exp <= m_ord + m_exp:
        raise ValueError("interpolation requires l + alpha > m + beta")
    calc = mesh_calculus(mesh)
    times = np.asarray(times, dtype=np.float64)
    table = []
    for values in fields:
        u = _as_tvk(values)
        grad = np.stack([calc.gradient_field(u[t]) for t in range(u.shape[0])])
        lap = np.stack([calc.laplacian_field(u[t]) for t in range(u.shape[0])])
        dudt = (_time_derivative(u, times) if times.size > 1
                else np.zeros_like(u))
        lhs = _order_norm(calc, u, grad, lap, dudt, times, m_ord, m_exp)
        semi = _order_seminorm(calc, u, grad, lap, dudt, times, l_ord, l_exp)
        l2 = space_time_l2(u, times, mesh)
        table.append({"lhs": lhs, "seminorm": semi, "l2": l2})
    constants = {}
    for eps in eps_list:
        c = 0.0
        for row in table:
            c = max(c, (row["lhs"] - eps * row["seminorm"])
                    / max(row["l2"], 1e-300))
        constants[eps] = max(c, 0.0)
    eps_sorted = sorted(eps_list)
    monotone = all(constants[eps_sorted[i + 1]] <= constants[eps_sorted[i]]
                   + 1e-12
                   for i in range(len(eps_sorted) - 1))
    return {"constants": constants, "probes": table, "monotone": monotone,
            "high": high, "low": low}
