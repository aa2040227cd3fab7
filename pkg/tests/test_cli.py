import json

import pytest

from rotaset.cli import EXIT_CONFIG, EXIT_MAP, EXIT_NUMERIC, EXIT_OK, main

FAST = ["--grid", "12", "--schedule", "1,10", "--workers", "1"]


@pytest.fixture(autouse=True)
def _no_env_out(monkeypatch):
    monkeypatch.delenv("ROTASET_OUT", raising=False)


def run(*argv):
    return main([str(a) for a in argv])


def test_estimate_translation(tmp_path):
    out = tmp_path / "t"
    assert run("estimate", "--builtin", "translation v=(0.3 0.7)", *FAST, "--out", out) == EXIT_OK
    summary = (out / "summary.txt").read_text()
    assert "map translation(0.3 0.7)" in summary
    assert "hull 10 area 0 vertices (" in summary
    csv = (out / "hull_depth_10.csv").read_text().splitlines()
    assert csv[:2] == ["# depth 10", "x,y"] and len(csv) == 3
    x, y = csv[2].split(",")
    # 17 significant digits survive the round trip
    assert len(x.replace(".", "").lstrip("0")) == 17
    assert float(x) == pytest.approx(0.3, abs=1e-15) and float(y) == pytest.approx(0.7, abs=1e-15)
    assert (out / "hulls.svg").read_text().startswith("<svg")


def test_reruns_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert run("estimate", "--builtin", "dissipative", *FAST, "--rho", "0,0,1",
                   "--out", tmp_path / name) == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "hulls.svg" in files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_workers_do_not_change_output(tmp_path):
    args = ["estimate", "--builtin", "dissipative", "--grid", "12", "--schedule", "1,10"]
    run(*args, "--workers", "1", "--out", tmp_path / "one")
    run(*args, "--workers", "3", "--out", tmp_path / "three")
    assert (tmp_path / "one" / "summary.txt").read_bytes() == \
        (tmp_path / "three" / "summary.txt").read_bytes()


def test_bad_map_file_reports_position(tmp_path, capsys):
    m = tmp_path / "bad.map"
    m.write_text("# a comment\ncompose(translation(0 ))\n")
    assert run("estimate", "--map", m, *FAST, "--out", tmp_path) == EXIT_MAP
    err = capsys.readouterr().err
    assert "2:" in err


def test_unknown_primitive(tmp_path, capsys):
    assert run("estimate", "--builtin", "nosuch(1)", *FAST, "--out", tmp_path) == EXIT_MAP
    assert "unknown primitive" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [["--schedule", "10,1"], ["--grid", "1"], ["--tol", "0"]])
def test_config_errors(tmp_path, extra):
    argv = ["estimate", "--builtin", "identity", "--workers", "1", "--out", tmp_path, *extra]
    assert run(*argv) == EXIT_CONFIG


def test_config_file_errors(tmp_path):
    bad = tmp_path / "c.json"
    bad.write_text(json.dumps({"grdi": 3}))
    assert run("estimate", "--builtin", "identity", "--config", bad) == EXIT_CONFIG
    bad.write_text("{not json")
    assert run("estimate", "--builtin", "identity", "--config", bad) == EXIT_CONFIG
    assert run("classify", "--builtin", "identity", *FAST, "--out", tmp_path) == EXIT_CONFIG


def test_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": 5, "schedule": [1, 2], "seed": 4, "workers": 1,
                               "out": str(tmp_path / "from_cfg")}))
    assert run("estimate", "--builtin", "identity", "--config", cfg) == EXIT_OK
    s = (tmp_path / "from_cfg" / "summary.txt").read_text()
    assert "grid_density 5\n" in s and "seed 4\n" in s and "schedule 1,2\n" in s
    # flags beat the file
    assert run("estimate", "--builtin", "identity", "--config", cfg, "--grid", "7",
               "--out", tmp_path / "flags") == EXIT_OK
    s = (tmp_path / "flags" / "summary.txt").read_text()
    assert "grid_density 7\n" in s and "seed 4\n" in s
    # the environment beats both for the output directory
    monkeypatch.setenv("ROTASET_OUT", str(tmp_path / "env"))
    assert run("estimate", "--builtin", "identity", "--config", cfg,
               "--out", tmp_path / "ignored") == EXIT_OK
    assert (tmp_path / "env" / "summary.txt").exists()
    assert not (tmp_path / "ignored").exists()


def test_classify(tmp_path, capsys):
    assert run("classify", "--builtin", "translation v=(0 0)", *FAST, "--rho", "1,0,2",
               "--out", tmp_path) == EXIT_OK
    text = (tmp_path / "classification.txt").read_text()
    assert "rho 1,0,2\n" in text and "verdict OUTSIDE\n" in text


def test_circle_command(tmp_path, capsys):
    assert run("circle", "--builtin", "locked", "--out", tmp_path) == EXIT_OK
    assert capsys.readouterr().out.strip() == "SIGN_CHANGE_LOCKED"
    s = (tmp_path / "circle_summary.txt").read_text()
    assert "verdict SIGN_CHANGE_LOCKED\n" in s
    assert (tmp_path / "circle_g.csv").read_text().startswith("x,g\n")
    assert run("circle", "--builtin", "circle_trig(shift=0.3)", "--out", tmp_path) == EXIT_OK
    assert capsys.readouterr().out.strip() == "NO_ZERO_EXCLUDED"
    assert run("circle", "--builtin", "dissipative", "--out", tmp_path) == EXIT_MAP


def test_circle_identity_case(tmp_path):
    assert run("circle", "--builtin", "circle_trig(shift=1)", "--p", "1",
               "--out", tmp_path) == EXIT_NUMERIC


def test_fixed_points_command(tmp_path):
    assert run("fixed-points", "--builtin", "dissipative", "--out", tmp_path) == EXIT_OK
    rows = (tmp_path / "fixed_points.csv").read_text().splitlines()
    assert rows[0] == "x,y,p,r,q,residual" and len(rows) == 2
    x, y, p, r, q, res = rows[1].split(",")
    assert (p, r, q) == ("0", "0", "1") and float(res) <= 1e-9
    assert (tmp_path / "unresolved.csv").read_text() == "x,y,half_side\n"


def test_index_command(tmp_path, capsys):
    assert run("index", "--builtin", "dissipative", "--radius", "0.05",
               "--out", tmp_path) == EXIT_OK
    assert capsys.readouterr().out.strip() == "0"
    assert "index 0\n" in (tmp_path / "index.txt").read_text()


def test_lock_experiment_small(tmp_path):
    assert run("experiment", "lock", "--grid", "20", "--schedule", "1,10,100",
               "--workers", "1", "--out", tmp_path) == EXIT_OK
    v = (tmp_path / "verdict_lock.txt").read_text()
    assert "observed OUTSIDE\n" in v and "fixed_points 0\n" in v and "status PASS\n" in v
    assert (tmp_path / "baseline_summary.txt").exists()
    assert (tmp_path / "perturbed_hulls.svg").exists()
