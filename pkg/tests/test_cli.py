import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from dualburgers import cli
from dualburgers.cli import ConfigError, RunConfig, load_config, main, parse_run_args
from dualburgers.exact import constant_problem, get_problem
from dualburgers.marcher import StageConfig, march
from dualburgers.report import (RunRecord, TimelineSample, compare, compare_record, csv_columns, emit_csv,
                                oracle_average, read_csv, read_key_values)

FAST = ["--nx", "10", "--nt", "10", "--stage-duration", "0.05", "--n-cut", "2", "--t-final", "0.1"]


def _run(tmp_path, *extra, form="conservation", problem="shock"):
    out = tmp_path / "out"
    code = main(["--form", form, "--problem", problem, *FAST, "--out", str(out), *extra])
    return code, out


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# demo\nform = hj\nproblem=fan\nnx = 12  # elements\nemit=csv,svg\ncompare=0.1,0.2\n")
    assert load_config(cfg)["nx"] == 12
    rc, _ = parse_run_args(["--config", str(cfg), "--nx", "20", "--t-final", "0.3"])
    assert (rc.form, rc.problem, rc.nx, rc.t_final) == ("hj", "fan", 20, 0.3)
    assert rc.emit == ("csv", "svg") and rc.compare == (0.1, 0.2)
    # per-form defaults fill unset sizes
    assert (rc.nt, rc.stage_duration) == (10, 5e-5)
    assert RunConfig().resolved().nt == 50


@pytest.mark.parametrize("argv", [
    ["--form", "spectral"],
    ["--nx", "ten"],
    ["--emit", "csv,pdf"],
    ["--form", "hj", "--nu", "0.1"],
    ["--form", "hj_viscous"],
    ["--n-cut", "50", "--nt", "50"],
    ["--t-final", "-1"],
    ["--base-state", "viscous_exact", "--nu-base", "0"],
    ["--config", "/nonexistent/run.cfg"],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_config_file_lines(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("nx 10\n")
    with pytest.raises(ConfigError):
        load_config(p)
    p.write_text("colour=blue\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_csv_schema_and_row_count(tmp_path):
    code, out = _run(tmp_path)
    assert code == 0
    lines = (out / "shock_conservation.csv").read_text().splitlines()
    assert lines[0] == "problem,form,stage,t,x,u"
    meta = read_key_values(out / "shock_conservation.meta")
    stages = int(meta["stages_completed"])
    assert len(lines) - 1 == stages * 2 * (10 - 2) * 10
    rows = [r.split(",") for r in lines[1:]]
    keys = [(float(r[3]), float(r[4])) for r in rows]
    assert keys == sorted(keys)
    assert all(f"{float(r[k]):.17g}" == r[k] for r in rows for k in (3, 4, 5))


def test_hj_csv_columns(tmp_path):
    code, out = _run(tmp_path, form="hj", problem="fan")
    assert code == 0
    assert (out / "fan_hj.csv").read_text().splitlines()[0] == ",".join(csv_columns("hj"))


def test_constant_run_two_elements(tmp_path):
    cfg = StageConfig(stage_duration=0.05, nx=2, nt=4, n_cut=1)
    traj = march(cfg, "conservation", constant_problem(0.4), 0.01)
    path = emit_csv(traj, tmp_path / "c.csv")
    rows = path.read_text().splitlines()[1:]
    assert len(rows) == 2 * 3 * 2
    assert all(float(r.split(",")[-1]) == pytest.approx(0.4, abs=1e-12) for r in rows)


def test_deterministic_bytes(tmp_path):
    _, a = _run(tmp_path / "a")
    _, b = _run(tmp_path / "b")
    assert (a / "shock_conservation.csv").read_bytes() == (b / "shock_conservation.csv").read_bytes()


def test_csv_roundtrip_reproduces_report(tmp_path):
    cfg = StageConfig(stage_duration=0.05, nx=10, nt=10, n_cut=2)
    for form, prob in (("conservation", "shock"), ("hj", "fan")):
        traj = march(cfg, form, prob, 0.1)
        times = (0.03, 0.08)
        mem = compare(None, traj, times)
        path = emit_csv(traj, tmp_path / f"{form}.csv")
        disk = compare_record(read_csv(path, times))
        assert mem.as_dict() == disk.as_dict()
        assert mem.as_dict()["l1_error[u@t0.03]"] > 0


def test_diagnostics_file_matches_csv(tmp_path):
    code, out = _run(tmp_path, "--compare", "0.05")
    assert code == 0
    diag = read_key_values(out / "shock_conservation.diagnostics")
    rep = compare_record(read_csv(out / "shock_conservation.csv", (0.05,))).as_dict()
    assert {k: str(v) for k, v in rep.items()} == diag


def test_exact_data_gives_zero_error():
    prob = get_problem("fan")
    x = (np.arange(20) + 0.5) / 20
    rec = RunRecord("hj", "fan", (0.1, 0.2))
    for k, t in enumerate((0.05, 0.1, 0.2)):
        rec.add(TimelineSample(k + 1, t, x, oracle_average(prob, "u", x, t), oracle_average(prob, "Y", x, t)), True)
    rep = compare_record(rec)
    assert all(e.l1_error == 0 and e.linf_error == 0 for e in rep.timelines)
    assert [e.t for e in rep.timelines] == [0.1, 0.1, 0.2, 0.2]


def test_constant_run_error_small():
    cfg = StageConfig(stage_duration=0.05, nx=10, nt=10, n_cut=2)
    traj = march(cfg, "conservation", constant_problem(0.4), 0.1)
    rep = compare_record(RunRecord.from_trajectory(traj, (0.05, 0.1)), problem=constant_problem(0.4))
    assert max(e.linf_error for e in rep.timelines) < 1e-6
    assert rep.conservation_drift < 1e-6


def test_svg_and_metadata(tmp_path):
    code, out = _run(tmp_path, "--emit", "csv,svg,diagnostics", "--compare", "0.05,0.1",
                     form="hj", problem="fan")
    assert code == 0
    for name in ("Y", "u"):
        root = ET.parse(out / f"fan_hj_{name}.svg").getroot()
        assert root.tag == "{http://www.w3.org/2000/svg}svg" and root.get("version") == "1.1"
        assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 4
    meta = read_key_values(out / "fan_hj.meta")
    for f in RunConfig.__dataclass_fields__:
        assert f in meta
    for key in ("flux_sign", "stage1_base_state", "smoothing_eta", "cutoff_advance", "newton_iterations",
                "backend", "newton_stagnation", "lateral_lambda", "status"):
        assert key in meta
    assert meta["status"] == "ok"
    assert len(meta["newton_iterations"].split(",")) == int(meta["stages_completed"])


def test_failure_writes_manifest(tmp_path):
    code, out = _run(tmp_path, "--max-stages", "2")
    assert code == 1
    man = read_key_values(out / "MANIFEST")
    assert man["failed_stage"] == "3"
    assert man["stages_completed"] == "2"
    assert "shock_conservation.csv" in man["files"]
    rows = (out / "shock_conservation.csv").read_text().splitlines()
    assert len(rows) - 1 == 2 * 16 * 10


def test_circle_line_subcommand(capsys):
    assert main(["circle-line", "--alpha", "0.5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "lambda,gamma,x,y,family"
    ys = sorted(float(l.split(",")[3]) for l in lines[1:])
    np.testing.assert_allclose(ys, [-np.sqrt(0.75), np.sqrt(0.75)])
    assert main(["circle-line", "--alpha", "2"]) == 1
    assert main(["circle-line"]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "dualburgers", "circle-line", "--alpha", "0"],
                         capture_output=True, text=True, check=True)
    rows = [l.split(",") for l in res.stdout.strip().splitlines()[1:]]
    assert sorted(float(r[3]) for r in rows) == [-1.0, 1.0]


def test_run_subcommand_and_backend_flag(tmp_path):
    from dualburgers import _accel
    try:
        code = main(["run", "--backend", "numpy", *FAST, "--out", str(tmp_path), "--emit", "diagnostics"])
        assert code == 0
        assert read_key_values(tmp_path / "shock_conservation.meta")["backend"] == "numpy"
        assert not (tmp_path / "shock_conservation.csv").exists()
    finally:
        _accel.set_backend("numba")
