import json
import textwrap

import pytest

from biewos.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_SOLVER, Config, compare, main, parse_tolerance
from biewos.errors import ConfigError

SMALL = """\
[run]
method = biewos_point
output = out.csv
seed = 3

[scene]
kind = half_space_charge

[point]
x = 0.5, 0, 0
n_g1 = 4
n_g2 = 6
reference = 0.7155417527999327

[wos]
n_path = 50

[sweep]
point.a = 0.2, 0.5
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_solve_writes_csv_and_record(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["solve", str(cfg)]) == EXIT_OK
    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert lines[0].startswith("# biewos") and "biewos_point/v1" in lines[0]
    header = lines[2].split(",")
    assert header[:2] == ["a", "delta_rel"] and "bw_total" in header and "seconds" not in ",".join(header)
    assert len(lines) == 5
    rec = json.loads((tmp_path / "out.json").read_text())
    assert rec["total_paths"] == 2 * 16 * 50
    assert rec["config"]["sweep"]["point.a"] == "0.2, 0.5"
    assert all(t["seconds"] >= 0 for t in rec["timings"])


def test_identical_runs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, SMALL)
    main(["solve", str(cfg), "--output", str(tmp_path / "a.csv")])
    main(["solve", str(cfg), "--output", str(tmp_path / "b.csv"), "--workers", "1"])
    assert body(tmp_path / "a.csv") == body(tmp_path / "b.csv")
    main(["solve", str(cfg), "--output", str(tmp_path / "c.csv"), "--seed", "4"])
    assert body(tmp_path / "a.csv") != body(tmp_path / "c.csv")


def test_set_override(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["solve", str(cfg), "--set", "point.n_g1=2", "--set", "sweep.point.a=0.3"]) == EXIT_OK
    lines = body(tmp_path / "out.csv")
    assert len(lines) == 2 and lines[1].startswith("0.3,")


def test_empty_sweep_gives_header_only(tmp_path):
    cfg = write(tmp_path, SMALL.replace("point.a = 0.2, 0.5", "point.a ="))
    assert main(["solve", str(cfg)]) == EXIT_OK
    lines = body(tmp_path / "out.csv")
    assert len(lines) == 1 and "bw_total" in lines[0]


def test_config_error_reports_line(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.replace("n_g1 = 4", "n_g1 = four"))
    assert main(["solve", str(cfg)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "[point] n_g1 (line 11)" in err


@pytest.mark.parametrize("bad, fragment", [
    ("[bogus]\n", "unknown section"),
    ("[run]\nmethod = magic\n", "unknown method"),
    ("[run]\nmethod = biewos_point\n[scene]\nkind = torus\n", "expected one of"),
    ("[run]\nmethod = biewos_point\n[wos]\nn_path = 0\n", "must be >= 1"),
])
def test_config_validation(tmp_path, capsys, bad, fragment):
    assert main(["solve", str(write(tmp_path, bad))]) == EXIT_CONFIG
    assert fragment in capsys.readouterr().err


def test_solver_error_exit_code(tmp_path, capsys):
    text = SMALL.replace("method = biewos_point", "method = last_passage")
    assert main(["solve", str(write(tmp_path, text))]) == EXIT_SOLVER
    assert "ApplicabilityError" in capsys.readouterr().err


def test_compare(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    main(["solve", str(cfg)])
    out = tmp_path / "out.csv"
    assert main(["compare", str(out), str(out), "0"]) == EXIT_OK
    # perturb one value
    lines = out.read_text().splitlines()
    cols = lines[3].split(",")
    cols[8] = repr(float(cols[8]) * 1.1)
    lines[3] = ",".join(cols)
    pert = tmp_path / "pert.csv"
    pert.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["compare", str(out), str(pert), "1%"]) == EXIT_FAIL
    assert "row 1 bw_total" in capsys.readouterr().out
    assert main(["compare", str(out), str(pert), "bw_sigma1=1%"]) == EXIT_OK


def test_compare_schema_mismatch(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("x,y\n1,2\n")
    b.write_text("x,z\n1,2\n")
    assert main(["compare", str(a), str(b), "0"]) == EXIT_CONFIG
    b.write_text("x\n1\n2\n")
    with pytest.raises(ConfigError):
        compare(a, b, "0")


def test_tolerance_parsing():
    assert parse_tolerance("1.5%") == ({}, ("rel", 0.015))
    assert parse_tolerance("abs:1e-3") == ({}, ("abs", 1e-3))
    per, d = parse_tolerance("bw_total=2%, a=abs:0")
    assert d is None and per == {"bw_total": ("rel", 0.02), "a": ("abs", 0.0)}
    with pytest.raises(ConfigError):
        parse_tolerance("lots")


def test_config_sweep_keys_validated():
    cfg = Config("[sweep]\nnot_dotted = 1, 2\n")
    with pytest.raises(ConfigError):
        cfg.sweep()


def test_example_configs_parse():
    from pathlib import Path

    from biewos.cli import build_scene
    for p in sorted((Path(__file__).parent.parent / "configs").glob("*.cfg")):
        cfg = Config.load(p)
        cfg.methods()
        build_scene(cfg)
