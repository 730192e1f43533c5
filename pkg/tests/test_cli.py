import csv
import hashlib
import json

import numpy as np
import pytest

from qgraph import cli
from qgraph.determinant import expand_determinant, find_roots
from qgraph.graph import assemble_bond_scattering, load_builtin


def _run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _csv_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    return list(csv.reader(lines[1:]))


def _manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


@pytest.fixture
def two_bond_file(tmp_path):
    p = tmp_path / "two_bond.json"
    p.write_text(json.dumps(load_builtin("two_bond_r04").to_dict()))
    return p


def test_spectrum_thousand_roots(two_bond_file, tmp_path, capsys):
    out = tmp_path / "spec"
    code, stdout, _ = _run(["spectrum", "--config", str(two_bond_file), "--n-roots", "1000",
                            "--out", str(out)], capsys)
    assert code == 0
    rows = _csv_rows(out / "roots.csv")
    assert rows[0] == ["n", "k", "delta"]
    k = np.array([float(r[1]) for r in rows[1:]])
    assert k.size == 1000
    S = assemble_bond_scattering(load_builtin("two_bond_r04"))
    oracle = find_roots(expand_determinant(S).secular, 1e-6, 1005 * np.pi / S.total_length)
    assert np.max(np.abs(k - oracle[:1000])) < 1e-10
    assert [int(r[0]) for r in rows[1:4]] == [1, 2, 3]
    assert json.loads(stdout)["command"] == "spectrum"


def test_compare_errors_non_increasing(tmp_path, capsys):
    out = tmp_path / "cmp"
    code, _, _ = _run(["compare", "--config", "builtin:two_bond_r04", "--n-roots", "500",
                       "--m-max", "4,8,12", "--out", str(out)], capsys)
    assert code == 0
    rows = _csv_rows(out / "compare.csv")[1:]
    errs = [float(r[2]) for r in rows]
    assert [int(r[0]) for r in rows] == [4, 8, 12]
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[2] < float(rows[2][3])


def test_report_free_graph(tmp_path, capsys):
    out = tmp_path / "rep"
    code, _, _ = _run(["report", "--config", "builtin:two_bond_r0", "--n-roots", "200",
                       "--out", str(out)], capsys)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["regularity_degree"] == 0
    assert rep["fluctuation_spread"] < 1e-12
    assert rep["version"] == cli.__version__
    assert rep["config"]["n_roots"] == 200
    assert "config_sha256" in rep


def test_orbits_table(tmp_path, capsys):
    out = tmp_path / "orb"
    code, _, _ = _run(["orbits", "--config", "builtin:quadrangle", "--m-max", "5",
                       "--out", str(out)], capsys)
    assert code == 0
    summary = json.loads((out / "orbits.json").read_text())
    assert summary["census_match"] is True
    assert len(_csv_rows(out / "orbits.csv")) - 1 == summary["orbits"]


def test_hierarchy_export_stamped(tmp_path, capsys):
    out = tmp_path / "hier"
    code, _, _ = _run(["hierarchy", "--config", "builtin:two_bond_r08", "--n-roots", "100",
                       "--emit-plot-data", "--out", str(out)], capsys)
    assert code == 0
    files = {e["path"] for e in _manifest(out)["files"]}
    assert {"level_0.csv", "level_1.csv", "level_2.csv", "hierarchy.json"} <= files
    assert "plot_level_0_delta.csv" in files
    for name in files:
        p = out / name
        if p.suffix == ".csv":
            _csv_rows(p)
        else:
            assert "config_sha256" in json.loads(p.read_text())


def test_minimal_config_gets_defaults(two_bond_file, tmp_path):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({"graph": two_bond_file.name}))
    cfg = cli.load_config(cfg_path, "spectrum")
    assert cfg.n_roots == 1000 and cfg.m_max == [4, 8, 12] and cfg.seed is None
    assert cfg.echo()["graph_source"] == str(two_bond_file.resolve())


def test_stats_requires_seed(tmp_path, capsys):
    with pytest.raises(cli.ConfigError, match="seed"):
        cli.load_config("builtin:two_bond_r04", "stats")
    code, _, err = _run(["stats", "--config", "builtin:two_bond_r04",
                         "--out", str(tmp_path / "s")], capsys)
    assert code == cli.EXIT_CONFIG
    assert json.loads(err)["error"] == "config"


def test_unknown_key_warns(two_bond_file, tmp_path):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({"graph": two_bond_file.name, "colour": "blue"}))
    with pytest.warns(UserWarning, match="colour"):
        cfg = cli.load_config(cfg_path, "spectrum")
    assert cfg.n_roots == 1000


def test_all_violations_reported(tmp_path):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({"graph": "missing.json", "n_roots": 0, "seed": -3,
                                    "m_max": [0]}))
    with pytest.raises(cli.ConfigError) as exc:
        cli.load_config(cfg_path, "stats")
    assert len(exc.value.problems) == 4


def test_parse_error_position(tmp_path, capsys):
    cfg_path = tmp_path / "broken.json"
    cfg_path.write_text('{\n  "graph": "x.json",\n  "n_roots" 5\n}\n')
    code, _, err = _run(["spectrum", "--config", str(cfg_path)], capsys)
    assert code == cli.EXIT_CONFIG
    assert "line 3, column 13" in json.loads(err)["message"]


def test_missing_config_is_io_error(tmp_path, capsys):
    code, _, err = _run(["spectrum", "--config", str(tmp_path / "nope.json")], capsys)
    assert code == cli.EXIT_IO
    assert json.loads(err)["error"] == "io"


def test_numeric_failure_exit_code(tmp_path, capsys):
    p = tmp_path / "split.json"
    spec = load_builtin("two_bond_r04").to_dict()
    spec["bonds"][0]["length"], spec["bonds"][1]["length"] = 0.5, 1.0
    spec["vertices"][1]["scattering"] = {"r": 1.0}
    p.write_text(json.dumps(spec))
    with pytest.warns(UserWarning):
        code, _, err = _run(["hierarchy", "--config", str(p), "--n-roots", "20",
                             "--out", str(tmp_path / "h")], capsys)
    assert code == cli.EXIT_NUMERIC
    assert json.loads(err)["error"] == "numeric"


def test_reruns_are_bit_stable(tmp_path, capsys):
    args = ["stats", "--config", "builtin:two_bond_r04", "--n-roots", "3000", "--seed", "7",
            "--samples", "4096", "--emit-plot-data"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(args + ["--out", str(a)], capsys)[0] == 0
    assert _run(args + ["--out", str(b)], capsys)[0] == 0
    assert _manifest(a)["files"] == _manifest(b)["files"]
    names = {e["path"] for e in _manifest(a)["files"]}
    assert {"hist_delta.csv", "r2.csv", "charfn_delta.csv"} <= names
    # plot data repeats the histogram outputs row for row
    for kind in ("delta", "spacing", "ximean"):
        assert _csv_rows(a / f"plot_{kind}_histogram.csv") == _csv_rows(a / f"hist_{kind}.csv")


def test_different_seed_changes_hash(tmp_path):
    c1 = cli.load_config("builtin:two_bond_r04", "stats", {"seed": 1})
    c2 = cli.load_config("builtin:two_bond_r04", "stats", {"seed": 2})
    assert c1.digest() != c2.digest()


def test_empty_manifest(tmp_path):
    path = cli.write_report([], tmp_path)
    manifest = json.loads(path.read_text())
    assert manifest["files"] == []
    assert cli.write_report([], tmp_path).read_bytes() == path.read_bytes()


def test_manifest_hashes(tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("a\n")
    manifest = json.loads(cli.write_report([f], tmp_path).read_text())
    assert manifest["files"][0]["sha256"] == hashlib.sha256(b"a\n").hexdigest()
