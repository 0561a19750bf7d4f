import numpy as np
import pytest

from qfractal import cli, detectors, render


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def small_render(tmp_path, name, *extra):
    out = tmp_path / f"{name}.pgm"
    return out, ["render", "--iterations", "2e5", "--chains", "4", "--width", "64",
                 "--height", "64", "-o", out, *extra]


def test_list(capsys):
    code, out, _ = run(capsys, "list", "--csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "name,detectors,default_epsilon"
    assert "tetrahedron,4,0.5" in lines and "icosidodecahedron,30,0.85" in lines


def test_validate_builtins(capsys):
    code, out, _ = run(capsys, "validate", "--solid", "dodecahedron", "--solid", "cube")
    assert code == 0
    assert "ok=True" in out


def test_validate_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("bad 2 0.5\n0 0 2\n0 0 -1\n")
    code, _, err = run(capsys, "validate", bad)
    assert code == cli.EXIT_CONFIG
    assert "direction 0 has norm 2" in err


def test_validate_missing_file(tmp_path, capsys):
    code, _, _ = run(capsys, "validate", tmp_path / "nope.cfg")
    assert code == cli.EXIT_IO


def test_validate_nonzero_sum_warns(tmp_path, capsys):
    f = tmp_path / "lop.cfg"
    f.write_text("lop 2 0.5\n0 0 1\n1 0 0\n")
    code, out, err = run(capsys, "validate", f)
    assert code == 0 and "warning" in err and "zero_sum=False" in out


def test_bad_arguments_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["render", "--epsilon", "1.5"])
    assert info.value.code == cli.EXIT_ARGS
    with pytest.raises(SystemExit) as info:
        cli.main(["render", "--solid", "sphere"])
    assert info.value.code == cli.EXIT_ARGS
    with pytest.raises(SystemExit) as info:
        cli.main(["render", "--iterations", "lots"])
    assert info.value.code == cli.EXIT_ARGS


def test_custom_config_needs_epsilon(tmp_path, capsys):
    f = tmp_path / "t.cfg"
    detectors.save(detectors.builtin("tetrahedron"), f)
    with pytest.raises(SystemExit) as info:
        cli.main(["render", "--config", str(f), "-o", str(tmp_path / "x.pgm")])
    assert info.value.code == cli.EXIT_ARGS


def test_custom_config_render(tmp_path, capsys):
    f = tmp_path / "t.cfg"
    detectors.save(detectors.builtin("tetrahedron"), f)
    out, argv = small_render(tmp_path, "c", "--config", f, "--epsilon", "0.5")
    code, _, _ = run(capsys, *argv)
    assert code == 0
    manifest = cli.read_manifest(str(out) + ".manifest")
    assert manifest["resolved.config_sha256"] != "-"


def test_invalid_config_exit_three(tmp_path, capsys):
    f = tmp_path / "bad.cfg"
    f.write_text("bad 2 0.5\n0 0 2\n0 0 -1\n")
    out, argv = small_render(tmp_path, "b", "--config", f, "--epsilon", "0.5")
    code, _, _ = run(capsys, *argv)
    assert code == cli.EXIT_CONFIG


def test_unwritable_output_exit_four(tmp_path, capsys):
    _, argv = small_render(tmp_path, "x")
    argv[-1] = tmp_path / "missing-dir" / "x.pgm"
    code, _, _ = run(capsys, *argv)
    assert code == cli.EXIT_IO


@pytest.mark.parametrize("solid", detectors.BUILTIN_NAMES)
def test_render_uses_default_epsilon(tmp_path, capsys, solid):
    out, argv = small_render(tmp_path, solid, "--solid", solid)
    code, _, _ = run(capsys, *argv)
    assert code == 0
    m = cli.read_manifest(str(out) + ".manifest")
    assert float(m["resolved.epsilon"]) == detectors.builtin(solid).default_epsilon
    assert int(m["points_emitted"]) == 200_000
    assert int(m["total_in"]) + int(m["total_dropped"]) == 200_000
    img = render.read_pgm(out)
    assert img.shape == (64, 64) and img.max() == 255


def test_rerun_from_manifest_is_byte_identical(tmp_path, capsys):
    out, argv = small_render(tmp_path, "a", "--projection", "equirectangular",
                             "--zoom-center", "0.2,0.3,0.9", "--zoom-radius", "30",
                             "--tonemap", "loglog", "--seed", "17", "--workers", "3")
    assert run(capsys, *argv)[0] == 0
    again = tmp_path / "again.pgm"
    code, _, _ = run(capsys, "render", "--from-manifest", str(out) + ".manifest",
                     "--workers", "1", "-o", again)
    assert code == 0
    assert again.read_bytes() == out.read_bytes()


def test_render_csv_and_points(tmp_path, capsys):
    pts = tmp_path / "p.bin"
    table = tmp_path / "h.csv"
    out, argv = small_render(tmp_path, "p", "--csv", table, "--points-out", pts)
    assert run(capsys, *argv)[0] == 0
    assert np.fromfile(pts, dtype="<f8").size == 3 * 200_000
    counts = render.read_csv(table, (64, 64))
    m = cli.read_manifest(str(out) + ".manifest")
    assert int(counts.sum()) == int(m["total_in"])


def test_empty_view(tmp_path, capsys):
    # eps = 1 sends every state onto a vertex; a tiny window away from all
    # vertices stays empty
    out, argv = small_render(tmp_path, "e", "--epsilon", "1", "--zoom-center", "1,1,1",
                             "--zoom-radius", "1")
    code, _, err = run(capsys, *argv)
    assert code == 1 and "no points" in err


def test_dimension_reference(capsys):
    code, out, _ = run(capsys, "dimension", "--reference", "great-circle", "--points", "1e6",
                       "--csv")
    assert code == 0
    row = out.strip().splitlines()[1].split(",")
    assert row[0] == "great-circle" and abs(float(row[3]) - 1.0) < 0.05


def test_dimension_sierpinski(capsys):
    code, out, _ = run(capsys, "dimension", "--reference", "sierpinski", "--points", "1e6")
    assert code == 0 and "sierpinski" in out


def test_dimension_from_points(tmp_path, capsys):
    pts = tmp_path / "p.txt"
    np.savetxt(pts, np.tile([[0.0, 0.0, 1.0]], (10, 1)))
    # fewer than 10^6 points is an argument-level precondition failure
    with pytest.raises(SystemExit) as info:
        cli.main(["dimension", "--input", str(pts), "--input-format", "text"])
    assert info.value.code == cli.EXIT_ARGS
    assert "need at least" in capsys.readouterr().err


def test_dimension_bad_levels(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["dimension", "--levels", "x"])
    assert info.value.code == cli.EXIT_ARGS


def test_liouville(tmp_path, capsys):
    table = tmp_path / "m.csv"
    code, out, _ = run(capsys, "liouville", "--csv", table)
    assert code == 0
    assert "measured_rate=0.33333333333" in out
    assert "closed_form_rate=0.333333333333" in out
    assert "2N kappa/3" in out
    assert len(table.read_text().splitlines()) == 3002


def test_count_parser():
    assert cli.count("1e7") == 10 ** 7
    assert cli.count("12") == 12
    with pytest.raises(Exception):
        cli.count("1.5")
