import numpy as np
import pytest

from sphereflow.mesh import TriangleMesh, MeshError, build_icosphere, load_off, save_off


def test_icosahedron_counts():
    m = build_icosphere(0)
    assert m.n_vertices == 12
    assert m.n_faces == 20
    assert m.n_edges == 30
    assert m.euler_characteristic == 2


def test_level_one_counts():
    m = build_icosphere(1)
    assert m.n_vertices == 42              # 12 + 30 edge midpoints


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_vertex_count_formula(level):
    m = build_icosphere(level)
    assert m.n_vertices == 10 * 4 ** level + 2
    assert m.euler_characteristic == 2
    m.validate_closed()


def test_vertices_on_unit_sphere(mesh3):
    norms = np.linalg.norm(mesh3.ref_positions, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-14


def test_negative_level_rejected():
    with pytest.raises(MeshError):
        build_icosphere(-1)


def test_edges_shared_by_two_faces(mesh2):
    e = np.concatenate([mesh2.faces[:, [0, 1]], mesh2.faces[:, [1, 2]],
                        mesh2.faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert np.all(counts == 2)


def test_orientation_consistency(mesh2):
    # outward orientation: positive signed volume
    p = mesh2.ref_positions
    f = mesh2.faces
    vol = np.einsum("fd,fd->f", p[f[:, 0]],
                    np.cross(p[f[:, 1]], p[f[:, 2]])).sum() / 6.0
    assert vol > 0


def test_neighbors_and_two_ring(mesh2):
    nbrs = mesh2.neighbor_list(0)
    assert len(nbrs) in (5, 6)
    ring2 = mesh2.two_ring(0)
    assert 0 not in ring2
    assert set(nbrs).issubset(set(ring2.tolist()))


def test_off_round_trip(tmp_path, mesh2):
    path = tmp_path / "m.off"
    save_off(path, mesh2.ref_positions, mesh2.faces)
    pos, faces = load_off(path)
    assert np.array_equal(faces, mesh2.faces)
    assert np.allclose(pos, mesh2.ref_positions, atol=0.0)
    # header counts line
    lines = path.read_text().splitlines()
    assert lines[0] == "OFF"
    nv, nf, _ = map(int, lines[1].split())
    assert (nv, nf) == (mesh2.n_vertices, mesh2.n_faces)


def test_off_higher_dim_round_trip(tmp_path, mesh2):
    pos4 = np.concatenate([mesh2.ref_positions,
                           np.zeros((mesh2.n_vertices, 1))], axis=1)
    path = tmp_path / "m4.off"
    save_off(path, pos4, mesh2.faces)
    pos, faces = load_off(path)
    assert pos.shape == (mesh2.n_vertices, 4)
    assert np.allclose(pos, pos4)


def test_off_rejects_garbage(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("NOT_OFF\n1 1 0\n")
    with pytest.raises(MeshError):
        load_off(path)


def test_open_mesh_rejected():
    m = build_icosphere(0)
    broken = TriangleMesh(ref_positions=m.ref_positions,
                          faces=m.faces[:-1], level=0)
    with pytest.raises(MeshError):
        broken.validate_closed()
