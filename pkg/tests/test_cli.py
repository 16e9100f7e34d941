import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from icesec.cli import ConfigError, load_pmf_table, main, num, parse_config

ROOT = Path(__file__).resolve().parents[1]
FIG3 = {"type": "gaussian", "c12": 1.9, "c21": 1.9, "c1e": 0.5, "c2e": 0.5, "P1": 10, "P2": 10}
COARSE = {"levels": 3, "alpha_steps": 5, "weight_count": 17}


def write_config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj, indent=2))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_num_formatting():
    assert num(0.1 + 0.2) == "0.3"
    assert num(1 / 3) == "0.333333333333"
    assert num(0.0) == "0"


def test_empty_task_list(tmp_path, capsys):
    cfg = write_config(tmp_path, {"channel": FIG3, "tasks": []})
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary == {"artifacts": [], "errors": 0, "tasks": []}


def test_figure3_style_run(tmp_path):
    tasks = [{"kind": "frontier", "family": f, **COARSE} for f in ("G2", "G2-ncp", "G2-b-or-cp")]
    tasks += [{"kind": "ctdma", **COARSE}, {"kind": "ctdma", "ncp": True, **COARSE}]
    cfg = write_config(tmp_path, {"channels": {"fig3": FIG3}, "tasks": tasks})
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    csvs = sorted(out.glob("*.csv"))
    assert len(csvs) == 5
    for path in csvs:
        raw = path.read_bytes()
        assert b"\r" not in raw
        rows = read_csv(path)
        assert rows[0] == ["r1_bits", "r2_bits", "scheme", "params_id"]
        pts = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
        assert np.all(np.isfinite(pts)) and np.all(pts >= 0)
        assert np.all(np.diff(pts[:, 0]) > 0) and np.all(np.diff(pts[:, 1]) <= 0)
    assert {p.stem for p in csvs} == {"00-fig3-frontier-G2", "01-fig3-frontier-G2-ncp",
                                      "02-fig3-frontier-G2-b-or-cp", "03-fig3-ctdma",
                                      "04-fig3-ctdma-ncp"}


def test_reruns_are_byte_identical(tmp_path):
    tasks = [{"kind": "frontier", "family": "full-G", **COARSE}, {"kind": "ctdma", **COARSE},
             {"kind": "prefix-rate", "user": 1, "Ps": 10, "peer_Pj": 10}]
    cfg = write_config(tmp_path, {"channel": FIG3, "tasks": tasks})
    main(["run", str(cfg), "--out", str(tmp_path / "a"), "--jobs", "1"])
    main(["run", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "2"])
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_unknown_kind(tmp_path, capsys):
    cfg = write_config(tmp_path, {"channel": FIG3, "tasks": [{"kind": "plot"}]})
    assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 2
    assert "unknown task kind 'plot'" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_bad_json_reports_line_and_column(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "tasks": [\n    {"kind": "frontier",}\n  ]\n}\n')
    assert main(["run", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert f"{cfg}:3:" in err


@pytest.mark.parametrize("obj,needle", [
    ({"channel": FIG3, "tasks": [{"kind": "check-case", "case": "C1"}]}, "seed"),
    ({"channels": {"a": FIG3}, "tasks": [{"kind": "ctdma", "channel": "b"}]}, "undefined channel"),
    ({"channel": {**FIG3, "c12": -1}, "tasks": []}, "channel"),
    ({"channel": {"type": "optical"}, "tasks": []}, "gaussian"),
    ({"channel": FIG3, "tasks": [{"kind": "ctdma", "name": "x"}, {"kind": "nf", "name": "x"}]},
     "duplicate"),
])
def test_config_validation(obj, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(json.dumps(obj))


def test_failed_task_keeps_partial_outputs(tmp_path):
    tasks = [{"kind": "ctdma", **COARSE},
             {"kind": "prefix-rate", "user": 1, "Ps": 50},
             {"kind": "check-case", "case": "C1", "seed": 1}]
    cfg = write_config(tmp_path, {"channel": FIG3, "tasks": tasks})
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 1
    summary = json.loads((out / "summary.json").read_text())
    assert [t["status"] for t in summary["tasks"]] == ["ok", "error", "error"]
    assert summary["errors"] == 2
    assert (out / "00-default-ctdma.csv").exists()


def test_pmf_table_loading(tmp_path):
    path = tmp_path / "ch.csv"
    path.write_text("x1,x2,y1,y2,ye,prob\n0,0,0,0,0,1\n0,1,1,1,0,1\n1,0,1,1,1,1\n1,1,0,0,1,1\n")
    ch = load_pmf_table(path)
    assert ch.shape == (2, 2, 2, 2, 2)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError, match="header"):
        load_pmf_table(tmp_path / "bad.csv")


def test_relay_fixture(tmp_path):
    out = tmp_path / "relay"
    assert main(["run", str(ROOT / "configs" / "relay.json"), "--out", str(out)]) == 0
    check = json.loads((out / "00-relay-check-case-C8.json").read_text())
    assert check["verdict"] == "no-counterexample" and check["samples"] == 200
    nf = json.loads((out / "01-relay-nf.json").read_text())
    assert nf["max_original_bits"] >= nf["max_simplified_bits"] >= 0
    outer = json.loads((out / "02-relay-outer-bound.json").read_text())
    assert outer["draws"] == 50 and outer["sum_condition"]["samples"] >= 1


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, {"channel": FIG3, "tasks": []})
    res = subprocess.run([sys.executable, "-m", "icesec", "run", str(cfg), "--out",
                          str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "0 artifacts" in res.stdout
