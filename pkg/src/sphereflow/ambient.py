"""Closed-form model ambient geometries.

Three models: the round unit n-sphere (extrinsic unit vectors in R^{n+1}),
Euclidean R^n, and a conformally deformed round 3-sphere e^{2*phi} g_{S^3}
used for area/width experiments only.

Curvature sign convention: riemann(p, x, y, z, w) = K [(x.z)(y.w) - (y.z)(x.w)],
fixed so that riemann(p, e, v, e, v) = +1 for orthonormal e, v on the unit
sphere.  All maps accept batched inputs (leading axes broadcast).
"""

import numpy as np
from dataclasses import dataclass, field
from typing import Callable, Optional

ROUND_SPHERE = "round_sphere"
EUCLIDEAN = "euclidean"
CONFORMAL_SPHERE3 = "conformal_sphere3"

TANGENCY_TOL = 1e-8
ANTIPODAL_MARGIN = 1e-6


class AmbientError(ValueError):
    """Invalid input to an ambient-geometry operation."""


class NonTangentError(AmbientError):
    """Vector is not tangent at its base point."""


class AntipodalError(AmbientError):
    """Points are (numerically) antipodal; log/transport undefined."""


@dataclass(frozen=True)
class AmbientModel:
    kind: str
    dim: int
    conformal_factor: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in (ROUND_SPHERE, EUCLIDEAN, CONFORMAL_SPHERE3):
            raise AmbientError(f"unknown ambient kind {self.kind!r}")
        if self.dim < 3:
            raise AmbientError("ambient dimension must be >= 3")
        if self.kind == CONFORMAL_SPHERE3:
            if self.dim != 3:
                raise AmbientError("conformal model is three dimensional")
            if self.conformal_factor is None:
                raise AmbientError("conformal model needs a factor callable")

    @property
    def coord_dim(self):
        """Number of extrinsic coordinates points carry."""
        return self.dim if self.kind == EUCLIDEAN else self.dim + 1

    @property
    def curvature_scale(self):
        """Constant sectional curvature of the model (round metrics only)."""
        if self.kind == EUCLIDEAN:
            return 0.0
        if self.kind == ROUND_SPHERE:
            return 1.0
        raise AmbientError("conformal model has no constant curvature")

    @property
    def is_spherical(self):
        return self.kind in (ROUND_SPHERE, CONFORMAL_SPHERE3)


def round_sphere(n):
    return AmbientModel(ROUND_SPHERE, n)


def euclidean(n):
    return AmbientModel(EUCLIDEAN, n)


def conformal_sphere3(phi):
    """Round S^3 with metric e^{2*phi} g; phi maps (..., 4) points to scalars."""
    return AmbientModel(CONFORMAL_SPHERE3, 3, phi)


def _require_round(model, op):
    if model.kind == CONFORMAL_SPHERE3:
        raise AmbientError(
            f"{op} is not available on the conformal model (areas only)")


def _norm(v):
    return np.linalg.norm(v, axis=-1)


def check_point(model, p, tol=1e-12):
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] != model.coord_dim:
        raise AmbientError(
            f"point has {p.shape[-1]} coordinates, expected {model.coord_dim}")
    if model.is_spherical:
        err = np.max(np.abs(_norm(p) - 1.0))
        if err > tol:
            raise AmbientError(f"point off the unit sphere by {err:.3e}")
    return p


def check_tangent(model, p, v, tol=TANGENCY_TOL):
    v = np.asarray(v, dtype=np.float64)
    if model.is_spherical:
        ip = np.max(np.abs(np.einsum("...d,...d->...", p, v)))
        if ip > tol:
            raise NonTangentError(f"vector not tangent: (p,v) = {ip:.3e}")
    return v


def project_tangent(model, p, w):
    """Orthogonal projection of w onto the tangent space at p."""
    if model.kind == EUCLIDEAN:
        return np.asarray(w, dtype=np.float64)
    ip = np.einsum("...d,...d->...", p, w)
    return w - ip[..., None] * p


def renormalize(model, p):
    if model.kind == EUCLIDEAN:
        return p
    return p / _norm(p)[..., None]


def exp_map(model, p, v, check=True):
    """Geodesic endpoint exp_p(v); closed form on each model."""
    p = np.asarray(p, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if model.kind == EUCLIDEAN:
        return p + v
    _require_round(model, "exp_map")
    if check:
        check_point(model, p)
        check_tangent(model, p, v)
    r = _norm(v)
    # sin(r)/r, exact limit 1 at r = 0
    sinc = np.sinc(r / np.pi)
    out = np.cos(r)[..., None] * p + sinc[..., None] * v
    return renormalize(model, out)


def log_map(model, p, q, check=True):
    """Inverse of exp_map along the minimizing geodesic."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if model.kind == EUCLIDEAN:
        return q - p
    _require_round(model, "log_map")
    if check:
        check_point(model, p)
        check_point(model, q)
    c = np.clip(np.einsum("...d,...d->...", p, q), -1.0, 1.0)
    theta = np.arccos(c)
    if np.any(theta > np.pi - ANTIPODAL_MARGIN):
        raise AntipodalError("log_map at an (almost) antipodal pair")
    w = q - c[..., None] * p
    wn = _norm(w)
    scale = np.where(wn > 1e-14, theta / np.maximum(wn, 1e-300), 1.0)
    return scale[..., None] * w


def distance(model, p, q):
    if model.kind == EUCLIDEAN:
        return _norm(np.asarray(q, dtype=np.float64) - p)
    c = np.clip(np.einsum("...d,...d->...",
                          np.asarray(p, dtype=np.float64),
                          np.asarray(q, dtype=np.float64)), -1.0, 1.0)
    return np.arccos(c)


def parallel_transport(model, p, q, v, check=True):
    """Transport v from p to q along the minimizing geodesic."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if model.kind == EUCLIDEAN:
        return v.copy()
    _require_round(model, "parallel_transport")
    if check:
        check_point(model, p)
        check_point(model, q)
        check_tangent(model, p, v)
    c = np.clip(np.einsum("...d,...d->...", p, q), -1.0, 1.0)
    theta = np.arccos(c)
    if np.any(theta > np.pi - ANTIPODAL_MARGIN):
        raise AntipodalError("transport to an (almost) antipodal point")
    w = q - c[..., None] * p
    wn = _norm(w)
    small = wn <= 1e-14
    u = w / np.maximum(wn, 1e-300)[..., None]
    a = np.einsum("...d,...d->...", v, u)
    out = (v
           + a[..., None] * ((np.cos(theta) - 1.0)[..., None] * u
                             - np.sin(theta)[..., None] * p))
    if np.any(small):
        out = np.where(np.broadcast_to(small[..., None], out.shape), v, out)
    return out


def riemann(model, p, x, y, z, w, check=True):
    """(R(x,y)z, w) for the constant-curvature models."""
    _require_round(model, "riemann")
    if check and model.kind == ROUND_SPHERE:
        p = check_point(model, p)
        for vec in (x, y, z, w):
            check_tangent(model, p, vec)
    k = model.curvature_scale
    if k == 0.0:
        return np.zeros(np.broadcast(np.asarray(x)[..., 0],
                                     np.asarray(y)[..., 0]).shape)[()]
    xz = np.einsum("...d,...d->...", x, z)
    yw = np.einsum("...d,...d->...", y, w)
    yz = np.einsum("...d,...d->...", y, z)
    xw = np.einsum("...d,...d->...", x, w)
    return k * (xz * yw - yz * xw)


def sectional(model, p, x, y, check=True):
    """Sectional curvature of the plane span(x, y) at p."""
    _require_round(model, "sectional")
    num = riemann(model, p, x, y, x, y, check=check)
    xx = np.einsum("...d,...d->...", x, x)
    yy = np.einsum("...d,...d->...", y, y)
    xy = np.einsum("...d,...d->...", x, y)
    return num / (xx * yy - xy * xy)


def metric_density(model, points):
    """Area scaling factor of the metric relative to the round one.

    For the conformal model a 2D area element picks up e^{2*phi}; the round
    models return 1.
    """
    points = np.asarray(points, dtype=np.float64)
    if model.kind == CONFORMAL_SPHERE3:
        return np.exp(2.0 * np.asarray(model.conformal_factor(points),
                                       dtype=np.float64))
    return np.ones(points.shape[:-1])
