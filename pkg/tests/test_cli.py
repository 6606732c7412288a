import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from symbergman import __version__, config
from symbergman.cli import main, parse_k, parse_points
from symbergman.diastatic import diastasis_jet
from symbergman.errors import ConfigError
from symbergman.geometry import catalog_model, chart_from_model

GOLDEN = Path(__file__).parent / "golden"


def run(*args):
    return subprocess.run([sys.executable, "-m", "symbergman", *args], capture_output=True, text=True)


def read_table(text):
    lines = text.splitlines()
    header = [l for l in lines if l.startswith("#")]
    rows = list(csv.DictReader(l for l in lines if not l.startswith("#")))
    return header, rows


def assert_tables_close(got, want):
    hg, rg = read_table(got)
    hw, rw = read_table(want)
    assert hg[1:] == hw[1:]
    assert len(rg) == len(rw)
    for a, b in zip(rg, rw):
        assert list(a) == list(b)
        for key in a:
            try:
                x, y = float(a[key]), float(b[key])
            except ValueError:
                assert a[key] == b[key]
                continue
            if np.isnan(y):
                assert np.isnan(x)
            else:
                assert x == pytest.approx(y, rel=1e-8, abs=1e-12), key


def test_help():
    cp = run("--help")
    assert cp.returncode == 0
    for cmd in ("coeffs", "recursion", "bergman", "compare", "rr", "reproduce", "selftest"):
        assert cmd in cp.stdout


def test_version():
    assert run("--version").stdout.strip() == f"symbergman {__version__}"


def test_header_lines(capsys):
    assert main(["rr", "--model", "fs1", "--k", "2", "--quad-radial", "16", "--quad-angular", "8"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == f"# symbergman {__version__}"
    assert out[2] == "# seed 42"
    assert out[3] == f"# conventions {config.conventions_hash()}"
    assert out[4] == "model,k,d_k,predicted,error,error_times_k_over_rk"


def test_compare_columns_contract(capsys):
    main(["compare", "--model", "fs1", "--k", "3", "--points", "0,0.5", "--quad-radial", "16", "--quad-angular", "8"])
    _, rows = read_table(capsys.readouterr().out)
    assert list(rows[0]) == ["model", "k", "x_re", "x_im", "residual_op_norm", "b0k_norm", "fitted_exponent"]
    # single k: one row per point
    assert len(rows) == 2


def test_byte_identical_outputs(tmp_path):
    args = ["compare", "--model", "twisted0", "--k-range", "2:3", "--points", "0.1,0.3j", "--quad-radial", "24", "--quad-angular", "24", "--format"]
    for fmt in ("csv", "json"):
        a, b = tmp_path / f"a_{fmt}", tmp_path / f"b_{fmt}"
        assert main(args + [fmt, "--out", str(a)]) == 0
        assert main(args + [fmt, "--out", str(b)]) == 0
        for f in sorted(a.iterdir()):
            assert f.read_bytes() == (b / f.name).read_bytes()


def test_json_mirror(tmp_path):
    base = ["rr", "--model", "fs2", "--k-range", "1:3", "--quad-radial", "24", "--quad-angular", "16", "--out", str(tmp_path)]
    main(base)
    main(base + ["--format", "json"])
    _, rows = read_table((tmp_path / "rr.csv").read_text())
    doc = json.loads((tmp_path / "rr.json").read_text())
    assert doc["header"]["seed"] == 42
    assert [r["d_k"] for r in doc["rows"]] == [int(r["d_k"]) for r in rows]


def test_compare_plot_file(tmp_path):
    main(["compare", "--model", "fs1_pert", "--k-range", "4:8:4", "--points", "0.2", "--quad-radial", "32", "--quad-angular", "32", "--out", str(tmp_path)])
    _, rows = read_table((tmp_path / "compare_plot.csv").read_text())
    assert [int(r["k"]) for r in rows] == [4, 8]
    assert float(rows[1]["log_residual"]) < float(rows[0]["log_residual"])


def test_coeffs_bargmann_fock_b0_one(capsys):
    assert main(["coeffs", "--model", "bargmann_fock", "--rank", "1", "--k-range", "1:3"]) == 0
    _, rows = read_table(capsys.readouterr().out)
    b0 = [float(r["recursion_norm"]) for r in rows if r["m"] == "0"]
    assert b0 == pytest.approx([1.0, 1.0, 1.0], abs=1e-12)


def test_coeffs_he_scalar(capsys):
    assert main(["coeffs", "--model", "he_chart", "--order", "3", "--k", "2"]) == 0
    _, rows = read_table(capsys.readouterr().out)
    assert all(float(r["scalar_defect"]) < 1e-8 for r in rows)


def test_coeffs_json_has_matrices(tmp_path):
    main(["coeffs", "--model", "random_chart", "--k", "2", "--format", "json", "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "coeffs.json").read_text())
    M = np.array(doc["matrices"][0]["recursion"])
    assert M.shape == (3, 3, 2)  # complex entries as [re, im]


def test_recursion_and_bergman_and_reproduce(capsys):
    assert main(["recursion", "--model", "twisted", "--order", "2", "--k", "2", "--points", "0.1"]) == 0
    assert main(["bergman", "--model", "twisted", "--k", "2", "--points", "0.1", "--quad-radial", "24", "--quad-angular", "24"]) == 0
    assert main(["reproduce", "--model", "fs1", "--k", "8", "--points", "0.1"]) == 0
    out = capsys.readouterr().out
    assert "relative_residual" in out and "op_norm_over_k" in out


def test_malformed_model_file(tmp_path, capsys):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"kind": "fs_line", "degre": 2}))
    assert main(["bergman", "--model", str(bad)]) == 2
    assert "unknown keys" in capsys.readouterr().err
    bad.write_text("{not json")
    assert main(["bergman", "--model", str(bad)]) == 2


def test_exit_codes_subprocess(tmp_path):
    assert run("rr", "--model", "nope").returncode == 2
    assert run("rr", "--k-range", "5:2").returncode == 2
    assert run("compare", "--order", "9").returncode == 2
    # a point at infinity leaves the affine chart
    assert run("recursion", "--model", "fs1", "--points", "1e9").returncode == 3


def test_selftest_filter_and_negative_control():
    cp = run("selftest", "--filter", "sympow")
    assert cp.returncode == 0
    assert "sympow" in cp.stdout and "matjet" not in cp.stdout
    cp = run("selftest", "--filter", "diastatic", "--debug-flip-sign")
    assert cp.returncode == 1
    assert "FAIL diastatic.curvature_link" in cp.stdout


def test_selftest_full():
    cp = run("selftest")
    assert cp.returncode == 0, cp.stdout
    assert "checks passed" in cp.stdout


def test_selftest_unknown_filter():
    assert main(["selftest", "--filter", "nothing"]) == 2


def test_parsers():
    assert parse_k(None, "5:30:5") == [5, 10, 15, 20, 25, 30]
    assert parse_k(7, None) == [7]
    assert parse_points("0, 0.2+0.1j,-1j") == [0, 0.2 + 0.1j, -1j]
    with pytest.raises(ConfigError):
        parse_points("abc")
    with pytest.raises(ConfigError):
        parse_k(None, "1:2:0")


@pytest.mark.parametrize(
    "golden,args",
    [
        ("compare_fs1_pert.csv", ["compare", "--model", "fs1_pert", "--points", "0.2+0.1j", "--k-range", "5:15:5", "--quad-radial", "48", "--quad-angular", "64"]),
        ("coeffs_he_chart.csv", ["coeffs", "--model", "he_chart", "--order", "2", "--k", "2"]),
        ("rr_o1o2.csv", ["rr", "--model", "o1o2", "--k-range", "1:4", "--quad-radial", "48", "--quad-angular", "48"]),
    ],
)
def test_golden_tables(golden, args, capsys):
    assert main(args) == 0
    assert_tables_close(capsys.readouterr().out, (GOLDEN / golden).read_text())


def test_golden_diastasis_dump():
    got = diastasis_jet(chart_from_model(catalog_model("fs1_pert"), 0.2, 4)).D_jet.dump().splitlines()
    want = (GOLDEN / "diastasis_fs1_pert.txt").read_text().splitlines()
    assert len(got) == len(want)
    for g, w in zip(got, want):
        assert g.split(" norm=")[0] == w.split(" norm=")[0]
        ng = float(g.split("norm=")[1].split()[0])
        nw = float(w.split("norm=")[1].split()[0])
        assert ng == pytest.approx(nw, rel=1e-9, abs=1e-14)
