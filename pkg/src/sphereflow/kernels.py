"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The flow stepper calls `cotan_mc_terms` thousands of times per run and the
Hölder estimators call `max_pair_quotient` over millions of vertex pairs, so
these carry @njit loops.  The numpy fallbacks are plain vectorized versions
selected via SPHEREFLOW_BACKEND (see _backend).
"""

import numpy as np

from ._backend import USING_NUMBA

_EPS = 1e-300


# ---------------------------------------------------------------- numpy path

def _face_corner_cots_numpy(positions, faces):
    """Cotangent at each face corner and flat face areas.

    cot at corner c uses the two edges leaving c; area from the Gram
    determinant so any ambient dimension works.
    """
    corners = positions[faces]                       # (F, 3, d)
    cots = np.empty(faces.shape, dtype=np.float64)
    u = corners[:, 1] - corners[:, 0]
    v = corners[:, 2] - corners[:, 0]
    w = corners[:, 2] - corners[:, 1]
    uu = np.einsum("fd,fd->f", u, u)
    vv = np.einsum("fd,fd->f", v, v)
    uv = np.einsum("fd,fd->f", u, v)
    cross_sq = np.maximum(uu * vv - uv * uv, 0.0)
    double_area = np.sqrt(cross_sq)
    areas = 0.5 * double_area
    ww = np.einsum("fd,fd->f", w, w)
    # corner 0: edges u, v ; corner 1: −u, w ; corner 2: −v, −w
    denom = np.maximum(double_area, _EPS)
    cots[:, 0] = uv / denom
    cots[:, 1] = (uu - uv) / denom          # (−u)·w = u·u − u·v
    cots[:, 2] = (vv - uv) / denom          # (−v)·(−w) = v·v − u·v
    del ww
    return cots, areas


def _mc_accumulate_numpy(positions, faces, cots, n_vertices):
    """Sum_j w_ij (x_i - x_j) with cotan weights; the flat-area gradient."""
    d = positions.shape[1]
    acc = np.zeros((n_vertices, d))
    idx_a = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0]])
    idx_b = np.concatenate([faces[:, 2], faces[:, 0], faces[:, 1]])
    w = 0.5 * np.concatenate([cots[:, 0], cots[:, 1], cots[:, 2]])
    diff = w[:, None] * (positions[idx_a] - positions[idx_b])
    for c in range(d):
        acc[:, c] += np.bincount(idx_a, weights=diff[:, c], minlength=n_vertices)
        acc[:, c] -= np.bincount(idx_b, weights=diff[:, c], minlength=n_vertices)
    return acc


def _barycentric_areas_numpy(faces, face_areas, n_vertices):
    third = face_areas / 3.0
    out = np.zeros(n_vertices)
    for c in range(3):
        out += np.bincount(faces[:, c], weights=third, minlength=n_vertices)
    return out


def _mixed_areas_numpy(positions, faces, cots, face_areas, n_vertices):
    """Meyer mixed Voronoi areas (circumcentric, obtuse-safe)."""
    corners = positions[faces]
    e_sq = np.empty(faces.shape, dtype=np.float64)   # squared edge opposite corner c
    e_sq[:, 0] = np.einsum("fd,fd->f", corners[:, 1] - corners[:, 2],
                           corners[:, 1] - corners[:, 2])
    e_sq[:, 1] = np.einsum("fd,fd->f", corners[:, 2] - corners[:, 0],
                           corners[:, 2] - corners[:, 0])
    e_sq[:, 2] = np.einsum("fd,fd->f", corners[:, 0] - corners[:, 1],
                           corners[:, 0] - corners[:, 1])
    obtuse_at = cots < 0.0                            # angle > pi/2
    any_obtuse = obtuse_at.any(axis=1)
    out = np.zeros(n_vertices)
    contrib = np.empty(faces.shape, dtype=np.float64)
    for c in range(3):
        j, k = (c + 1) % 3, (c + 2) % 3
        contrib[:, c] = (e_sq[:, k] * cots[:, k] + e_sq[:, j] * cots[:, j]) / 8.0
    for c in range(3):
        vals = np.where(
            any_obtuse,
            np.where(obtuse_at[:, c], face_areas / 2.0, face_areas / 4.0),
            contrib[:, c],
        )
        out += np.bincount(faces[:, c], weights=vals, minlength=n_vertices)
    return out


def _cotan_mc_terms_numpy(positions, faces, n_vertices, mixed):
    cots, areas = _face_corner_cots_numpy(positions, faces)
    acc = _mc_accumulate_numpy(positions, faces, cots, n_vertices)
    if mixed:
        va = _mixed_areas_numpy(positions, faces, cots, areas, n_vertices)
    else:
        va = _barycentric_areas_numpy(faces, areas, n_vertices)
    return acc, va


def _spherical_face_areas_numpy(positions, faces):
    """Geodesic-triangle areas for unit-sphere vertices (L'Huilier)."""
    corners = positions[faces]
    chords = np.empty((faces.shape[0], 3))
    chords[:, 0] = np.linalg.norm(corners[:, 1] - corners[:, 2], axis=1)
    chords[:, 1] = np.linalg.norm(corners[:, 2] - corners[:, 0], axis=1)
    chords[:, 2] = np.linalg.norm(corners[:, 0] - corners[:, 1], axis=1)
    arcs = 2.0 * np.arcsin(np.clip(chords / 2.0, 0.0, 1.0))
    s = 0.5 * arcs.sum(axis=1)
    prod = np.tan(s / 2.0)
    for c in range(3):
        prod = prod * np.tan(np.maximum(s - arcs[:, c], 0.0) / 2.0)
    return 4.0 * np.arctan(np.sqrt(np.maximum(prod, 0.0)))


def _max_pair_quotient_numpy(values, pairs_i, pairs_j, inv_pow):
    """max over pairs of |u_i - u_j| * dist^-beta; values (V, k)."""
    diff = values[pairs_i] - values[pairs_j]
    if diff.ndim == 1:
        mag = np.abs(diff)
    else:
        mag = np.sqrt(np.einsum("pk,pk->p", diff, diff))
    if mag.size == 0:
        return 0.0
    return float(np.max(mag * inv_pow))


# ---------------------------------------------------------------- numba path

if USING_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _cotan_mc_terms_numba(positions, faces, n_vertices, mixed):
        nf = faces.shape[0]
        d = positions.shape[1]
        acc = np.zeros((n_vertices, d))
        va = np.zeros(n_vertices)
        for f in range(nf):
            i0, i1, i2 = faces[f, 0], faces[f, 1], faces[f, 2]
            uu = 0.0
            vv = 0.0
            uv = 0.0
            e0 = 0.0  # |x1-x2|^2, opposite corner 0
            for c in range(d):
                u = positions[i1, c] - positions[i0, c]
                v = positions[i2, c] - positions[i0, c]
                uu += u * u
                vv += v * v
                uv += u * v
                w = positions[i1, c] - positions[i2, c]
                e0 += w * w
            cross_sq = uu * vv - uv * uv
            if cross_sq < 0.0:
                cross_sq = 0.0
            double_area = np.sqrt(cross_sq)
            area = 0.5 * double_area
            denom = double_area if double_area > _EPS else _EPS
            c0 = uv / denom
            c1 = (uu - uv) / denom
            c2 = (vv - uv) / denom
            # edge (i1,i2) weighted by cot at corner 0, etc.
            for c in range(d):
                d12 = positions[i1, c] - positions[i2, c]
                d20 = positions[i2, c] - positions[i0, c]
                d01 = positions[i0, c] - positions[i1, c]
                acc[i1, c] += 0.5 * c0 * d12
                acc[i2, c] -= 0.5 * c0 * d12
                acc[i2, c] += 0.5 * c1 * d20
                acc[i0, c] -= 0.5 * c1 * d20
                acc[i0, c] += 0.5 * c2 * d01
                acc[i1, c] -= 0.5 * c2 * d01
            if mixed:
                e1 = vv  # opposite corner 1 is edge (i2,i0)
                e2 = uu  # opposite corner 2 is edge (i0,i1)
                if c0 < 0.0 or c1 < 0.0 or c2 < 0.0:
                    for c in range(3):
                        ic = faces[f, c]
                        cc = c0 if c == 0 else (c1 if c == 1 else c2)
                        if cc < 0.0:
                            va[ic] += area / 2.0
                        else:
                            va[ic] += area / 4.0
                else:
                    va[i0] += (e2 * c2 + e1 * c1) / 8.0
                    va[i1] += (e0 * c0 + e2 * c2) / 8.0
                    va[i2] += (e1 * c1 + e0 * c0) / 8.0
            else:
                va[i0] += area / 3.0
                va[i1] += area / 3.0
                va[i2] += area / 3.0
        return acc, va

    @njit(cache=True)
    def _spherical_face_areas_numba(positions, faces):
        nf = faces.shape[0]
        d = positions.shape[1]
        out = np.empty(nf)
        for f in range(nf):
            i0, i1, i2 = faces[f, 0], faces[f, 1], faces[f, 2]
            q0 = 0.0
            q1 = 0.0
            q2 = 0.0
            for c in range(d):
                w0 = positions[i1, c] - positions[i2, c]
                w1 = positions[i2, c] - positions[i0, c]
                w2 = positions[i0, c] - positions[i1, c]
                q0 += w0 * w0
                q1 += w1 * w1
                q2 += w2 * w2
            a0 = 2.0 * np.arcsin(min(np.sqrt(q0) / 2.0, 1.0))
            a1 = 2.0 * np.arcsin(min(np.sqrt(q1) / 2.0, 1.0))
            a2 = 2.0 * np.arcsin(min(np.sqrt(q2) / 2.0, 1.0))
            s = 0.5 * (a0 + a1 + a2)
            prod = (np.tan(s / 2.0)
                    * np.tan(max(s - a0, 0.0) / 2.0)
                    * np.tan(max(s - a1, 0.0) / 2.0)
                    * np.tan(max(s - a2, 0.0) / 2.0))
            out[f] = 4.0 * np.arctan(np.sqrt(max(prod, 0.0)))
        return out

    @njit(cache=True)
    def _max_pair_quotient_numba(values, pairs_i, pairs_j, inv_pow):
        best = 0.0
        k = values.shape[1]
        for p in range(pairs_i.shape[0]):
            i = pairs_i[p]
            j = pairs_j[p]
            mag = 0.0
            for c in range(k):
                dv = values[i, c] - values[j, c]
                mag += dv * dv
            q = np.sqrt(mag) * inv_pow[p]
            if q > best:
                best = q
        return best


# ---------------------------------------------------------------- dispatch

def cotan_mc_terms(positions, faces, n_vertices, mixed=True):
    """Cotan area-gradient accumulator and lumped vertex areas."""
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    if USING_NUMBA:
        return _cotan_mc_terms_numba(positions, faces, n_vertices, mixed)
    return _cotan_mc_terms_numpy(positions, faces, n_vertices, mixed)


def face_corner_cots(positions, faces):
    return _face_corner_cots_numpy(
        np.ascontiguousarray(positions, dtype=np.float64), faces)


def spherical_face_areas(positions, faces):
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    if USING_NUMBA:
        return _spherical_face_areas_numba(positions, faces)
    return _spherical_face_areas_numpy(positions, faces)


def max_pair_quotient(values, pairs_i, pairs_j, inv_pow):
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if USING_NUMBA:
        return float(_max_pair_quotient_numba(values, pairs_i, pairs_j, inv_pow))
    return _max_pair_quotient_numpy(values, pairs_i, pairs_j, inv_pow)


def barycentric_vertex_areas(faces, face_areas, n_vertices):
    return _barycentric_areas_numpy(faces, face_areas, n_vertices)
