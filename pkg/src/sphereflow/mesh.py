"""Geodesic icosphere meshes of S^2, adjacency structure and OFF files."""

import numpy as np
from dataclasses import dataclass, field


class MeshError(ValueError):
    pass


_PHI = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTS = np.array([
    [-1.0, _PHI, 0.0], [1.0, _PHI, 0.0], [-1.0, -_PHI, 0.0], [1.0, -_PHI, 0.0],
    [0.0, -1.0, _PHI], [0.0, 1.0, _PHI], [0.0, -1.0, -_PHI], [0.0, 1.0, -_PHI],
    [_PHI, 0.0, -1.0], [_PHI, 0.0, 1.0], [-_PHI, 0.0, -1.0], [-_PHI, 0.0, 1.0],
])

_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


@dataclass
class TriangleMesh:
    """Closed oriented genus-0 triangle mesh with reference S^2 positions."""

    ref_positions: np.ndarray          # (V, 3) unit vectors
    faces: np.ndarray                  # (F, 3) int64
    level: int = -1
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self):
        return self.ref_positions.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def edges(self):
        """(E, 2) sorted unique vertex pairs."""
        if "edges" not in self._cache:
            e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]],
                                self.faces[:, [2, 0]]])
            e = np.sort(e, axis=1)
            self._cache["edges"] = np.unique(e, axis=0)
        return self._cache["edges"]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def vertex_neighbors(self):
        """CSR adjacency (indptr, indices), neighbors sorted per vertex."""
        if "adj" not in self._cache:
            e = self.edges
            pairs = np.concatenate([e, e[:, ::-1]])
            order = np.lexsort((pairs[:, 1], pairs[:, 0]))
            pairs = pairs[order]
            counts = np.bincount(pairs[:, 0], minlength=self.n_vertices)
            indptr = np.concatenate([[0], np.cumsum(counts)])
            self._cache["adj"] = (indptr.astype(np.int64),
                                  pairs[:, 1].copy())
        return self._cache["adj"]

    def neighbor_list(self, i):
        indptr, indices = self.vertex_neighbors
        return indices[indptr[i]:indptr[i + 1]]

    def two_ring(self, i):
        """Vertex ids within graph distance 2 of i (excluding i)."""
        first = self.neighbor_list(i)
        out = set(first.tolist())
        for j in first:
            out.update(self.neighbor_list(j).tolist())
        out.discard(i)
        return np.array(sorted(out), dtype=np.int64)

    @property
    def mean_edge_length(self):
        """Mean chordal edge length of the reference S^2 embedding."""
        if "h" not in self._cache:
            e = self.edges
            self._cache["h"] = float(np.mean(np.linalg.norm(
                self.ref_positions[e[:, 0]] - self.ref_positions[e[:, 1]],
                axis=1)))
        return self._cache["h"]

    def validate_closed(self):
        """Every edge in exactly two faces and Euler characteristic 2."""
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]],
                            self.faces[:, [2, 0]]])
        e = np.sort(e, axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        if not np.all(counts == 2):
            raise MeshError("mesh is not closed: edge shared by != 2 faces")
        if self.euler_characteristic != 2:
            raise MeshError(
                f"Euler characteristic {self.euler_characteristic}, expected 2")
        return True


def build_icosphere(level):
    """Icosahedron subdivided `level` times, projected to the unit sphere.

    Vertex count is 10 * 4**level + 2.
    """
    if level < 0:
        raise MeshError("subdivision level must be >= 0")
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
    faces = _ICO_FACES.copy()
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    verts = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    mesh = TriangleMesh(ref_positions=verts, faces=faces, level=level)
    mesh.validate_closed()
    return mesh


def _subdivide(verts, faces):
    verts = list(verts)
    midpoint = {}

    def mid(i, j):
        key = (i, j) if i < j else (j, i)
        if key not in midpoint:
            m = verts[i] + verts[j]
            verts.append(m / np.linalg.norm(m))
            midpoint[key] = len(verts) - 1
        return midpoint[key]

    new_faces = np.empty((4 * faces.shape[0], 3), dtype=np.int64)
    for f, (a, b, c) in enumerate(faces):
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_faces[4 * f + 0] = (a, ab, ca)
        new_faces[4 * f + 1] = (b, bc, ab)
        new_faces[4 * f + 2] = (c, ca, bc)
        new_faces[4 * f + 3] = (ab, bc, ca)
    return np.array(verts), new_faces


def save_off(path, positions, faces):
    """Write an OFF file; vertex lines carry as many floats as coordinates."""
    positions = np.asarray(positions, dtype=np.float64)
    faces = np.asarray(faces)
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{positions.shape[0]} {faces.shape[0]} 0\n")
        for row in positions:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")
        for row in faces:
            fh.write("3 " + " ".join(str(int(i)) for i in row) + "\n")


def load_off(path):
    """Read an OFF file; returns (positions, faces)."""
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError("not an OFF file (missing header)")
    nv, nf = int(tokens[1]), int(tokens[2])
    cursor = 4
    # vertex lines may have any fixed coordinate count; infer from layout
    n_numbers = len(tokens) - cursor
    face_numbers = 4 * nf
    coord_dim, rem = divmod(n_numbers - face_numbers, nv)
    if rem != 0 or coord_dim < 2:
        raise MeshError("OFF file has inconsistent counts")
    flat = np.array(tokens[cursor:cursor + nv * coord_dim], dtype=np.float64)
    positions = flat.reshape(nv, coord_dim)
    cursor += nv * coord_dim
    faces = np.empty((nf, 3), dtype=np.int64)
    for f in range(nf):
        row = tokens[cursor:cursor + 4]
        if int(row[0]) != 3:
            raise MeshError("only triangle faces supported")
        faces[f] = [int(row[1]), int(row[2]), int(row[3])]
        cursor += 4
    return positions, faces
