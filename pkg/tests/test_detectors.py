import math
import warnings

import numpy as np
import pytest

from qfractal import detectors as det
from qfractal import oracle

SIZES = {"tetrahedron": 4, "octahedron": 6, "cube": 8, "icosahedron": 12,
         "dodecahedron": 20, "double_tetrahedron": 8, "icosidodecahedron": 30}


def test_radicals():
    a = det.A
    assert a[3] == 1 / 3
    assert a[17] == 2 * math.sqrt(2) / 3
    assert a[15] == pytest.approx(2 / math.sqrt(5), abs=0)
    assert a[5] ** 2 + a[15] ** 2 == pytest.approx(1.0, abs=1e-15)
    assert a[8] ** 2 + a[12] ** 2 == pytest.approx(1.0, abs=1e-15)
    assert a[10] ** 2 + a[7] ** 2 + a[5] ** 2 == pytest.approx(1.0, abs=1e-15)
    assert len(a) == 18


def test_tetrahedron_example():
    d = det.builtin("tetrahedron").directions
    expected = [(0, 0, 1), (2 * math.sqrt(2) / 3, 0, -1 / 3),
                (-math.sqrt(2) / 3, math.sqrt(2 / 3), -1 / 3),
                (-math.sqrt(2) / 3, -math.sqrt(2 / 3), -1 / 3)]
    np.testing.assert_allclose(d, expected, atol=1e-16)


def test_octahedron_is_signed_axes():
    d = det.builtin("octahedron").directions
    assert sorted(map(tuple, d)) == sorted(map(tuple, np.vstack([np.eye(3), -np.eye(3)])))


@pytest.mark.parametrize("name", det.BUILTIN_NAMES)
def test_builtin_invariants(name):
    cfg = det.builtin(name)
    assert cfg.count == SIZES[name]
    np.testing.assert_array_equal(cfg.directions[0], [0, 0, 1])
    norms = np.linalg.norm(cfg.directions, axis=1)
    assert np.max(np.abs(norms - 1)) <= 2 * np.finfo(float).eps
    report = det.validate(cfg)
    assert report.ok, report.failures()
    assert report.sum_norm < 1e-12
    assert cfg.zero_sum


def test_dodecahedron_norms_tight():
    assert det.validate(det.builtin("dodecahedron")).max_norm_deviation < 1e-15


def test_default_epsilons():
    expected = {"tetrahedron": 0.5, "octahedron": 0.58, "cube": 0.7, "icosahedron": 0.75,
                "dodecahedron": 0.78, "double_tetrahedron": 0.7, "icosidodecahedron": 0.85}
    assert {n: det.builtin(n).default_epsilon for n in det.BUILTIN_NAMES} == expected


def test_unknown_solid():
    with pytest.raises(KeyError):
        det.builtin("rhombicuboctahedron")


def _dots(d):
    g = d @ d.T
    return g[np.triu_indices(len(d), 1)]


def test_dot_spectra():
    t = _dots(det.builtin("tetrahedron").directions)
    np.testing.assert_allclose(t, -1 / 3, atol=1e-14)
    o = np.round(_dots(det.builtin("octahedron").directions), 12)
    assert set(o.tolist()) <= {0.0, 1.0, -1.0}
    c = np.round(_dots(det.builtin("cube").directions), 12)
    assert set(c.tolist()) == {round(1 / 3, 12), round(-1 / 3, 12), -1.0}


def _spectrum(d):
    return np.sort(np.round(_dots(d), 9))


def _dodecahedron_face_centers(d):
    edge = det.edge_lengths(d).min()
    dist = np.linalg.norm(d[:, None] - d[None], axis=-1)
    adj = np.abs(dist - edge) < 1e-9
    centers = []
    for i in range(len(d)):
        for j in np.flatnonzero(adj[i]):
            for k in np.flatnonzero(adj[j]):
                if k == i:
                    continue
                normal = np.cross(d[j] - d[i], d[k] - d[j])
                normal /= np.linalg.norm(normal)
                if np.dot(normal, d[i]) < 0:
                    normal = -normal
                ring = np.argsort(d @ normal)[-5:]
                c = d[ring].mean(axis=0)
                c /= np.linalg.norm(c)
                if not any(np.allclose(c, e, atol=1e-9) for e in centers):
                    centers.append(c)
    return np.array(centers)


def test_dodecahedron_faces_match_icosahedron_spectrum():
    centers = _dodecahedron_face_centers(det.builtin("dodecahedron").directions)
    assert len(centers) == 12
    np.testing.assert_allclose(_spectrum(centers),
                               _spectrum(det.builtin("icosahedron").directions), atol=1e-9)


def test_double_tetrahedron_closed_under_negation():
    d = det.builtin("double_tetrahedron").directions
    for v in d:
        assert np.min(np.linalg.norm(d + v, axis=1)) < 1e-15


def test_icosidodecahedron_edges():
    # at unit circumradius the nearest-neighbour distance is 1/phi, and there
    # are 60 such edges (each vertex touches four)
    d = det.builtin("icosidodecahedron").directions
    edges = det.edge_lengths(d)
    assert len(edges) == 60
    np.testing.assert_allclose(edges, 1 / det.PHI, atol=1e-12)
    # scaled to circumradius phi the edges have unit length
    np.testing.assert_allclose(det.edge_lengths(d * det.PHI), 1.0, atol=1e-12)


@pytest.mark.parametrize("name", det.BUILTIN_NAMES)
def test_generator_proportional_to_identity(name):
    cfg = det.builtin(name)
    for eps in (0.0, 0.3, 0.5, 0.99):
        lam = oracle.projector_square_sum(cfg.directions, eps)
        np.testing.assert_allclose(lam, cfg.count * (1 + eps ** 2) / 4 * np.eye(2), atol=1e-12)


@pytest.mark.parametrize("name,size", [("tetrahedron", 12), ("octahedron", 24), ("cube", 24),
                                       ("icosahedron", 60), ("dodecahedron", 60),
                                       ("double_tetrahedron", 24), ("icosidodecahedron", 60)])
def test_rotation_groups(name, size):
    rots = det.symmetry_rotations(det.builtin(name).directions)
    assert len(rots) == size
    np.testing.assert_array_equal(rots[0], np.eye(3))


def test_validate_single_direction_fails_zero_sum():
    report = det.validate(det.DetectorConfig("pole", np.array([[0.0, 0, 1]])))
    assert not report.zero_sum
    assert not report.ok


def test_validate_reports_duplicates():
    report = det.validate(det.DetectorConfig("dup", np.array([[0.0, 0, 1], [0, 0, 1.0]])))
    assert report.duplicates == [(0, 1)]


@pytest.mark.parametrize("name", det.BUILTIN_NAMES)
def test_save_load_round_trip(tmp_path, name):
    cfg = det.builtin(name)
    path = tmp_path / f"{name}.cfg"
    det.save(cfg, path)
    back = det.load(path)
    assert back == cfg
    assert back.directions.tobytes() == cfg.directions.tobytes()


def test_load_comments_and_missing_epsilon(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# two poles\npoles 2 -\n0 0 1  # north\n0 0 -1\n")
    cfg = det.load(path)
    assert cfg.default_epsilon is None and cfg.count == 2 and cfg.zero_sum


def test_load_rejects_non_unit_vector(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("bad 2 0.5\n0 0 2\n0 0 -1\n")
    with pytest.raises(det.ConfigError, match=r"direction 0 has norm 2"):
        det.load(path)


def test_load_warns_on_nonzero_sum(tmp_path):
    path = tmp_path / "lop.cfg"
    path.write_text("lop 2 0.5\n0 0 1\n1 0 0\n")
    with pytest.warns(UserWarning, match="sum"):
        cfg = det.load(path)
    assert not cfg.zero_sum


@pytest.mark.parametrize("text", ["x 2\n0 0 1\n0 0 -1\n", "x 3 0.5\n0 0 1\n0 0 -1\n",
                                  "x 2 0.5\n0 0 one\n0 0 -1\n", "x 2 0.5\n0 0\n0 0 -1\n", ""])
def test_load_parse_errors(tmp_path, text):
    path = tmp_path / "p.cfg"
    path.write_text(text)
    with pytest.raises(det.ConfigError):
        det.load(path)


def test_load_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        det.load(tmp_path / "absent.cfg")


def test_config_is_immutable():
    cfg = det.builtin("cube")
    with pytest.raises(ValueError):
        cfg.directions[0, 0] = 2.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert hash(cfg) == hash(det.builtin("cube"))
