import csv
import json
from pathlib import Path

import pytest

from cqsum.cli import COMMANDS, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FAST = [
    "example1.json",
    "example1_search.json",
    "optimize.json",
    "optimize_or.json",
    "rates.json",
    "simulate_end_to_end.json",
    "simulate_mac_sum.json",
    "simulate_ptp.json",
    "verify_coverage.json",
    "verify_pinching.json",
]


def run_cli(cfg, out, *extra):
    cmd = json.loads(Path(cfg).read_text())["command"]
    return main([cmd, "--config", str(cfg), "--out", str(out), "--no-timestamp", *extra])


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


@pytest.mark.parametrize("name", FAST)
def test_command_runs_and_reports(tmp_path, name):
    assert run_cli(CONFIGS / name, tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["schema"] == "cqsum-report/1"
    assert rep["command"] in COMMANDS
    assert "generated_at" not in rep
    assert "wall_time" not in json.dumps(rep)
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert rows


def test_deterministic_reports(tmp_path):
    for name in ("simulate_ptp.json", "verify_coverage.json", "simulate_mac_sum.json"):
        a, b = tmp_path / (name + "a"), tmp_path / (name + "b")
        assert run_cli(CONFIGS / name, a) == 0 and run_cli(CONFIGS / name, b) == 0
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    run_cli(CONFIGS / "verify_coverage.json", tmp_path / "a", "--seed", "7")
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["seed"] == 7


def test_timestamp_present_by_default(tmp_path):
    assert main(["example1", "--config", str(CONFIGS / "example1.json"), "--out", str(tmp_path)]) == 0
    assert "generated_at" in json.loads((tmp_path / "report.json").read_text())


def test_malformed_json_exit_2(tmp_path, capsys):
    assert main(["rates", "--config", str(write(tmp_path, "{not json")), "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "malformed_json"


def test_validation_exit_3(tmp_path):
    bad_state = {"schema": "cqsum-config/1", "command": "verify-pinching", "p_AB": [[1.0]], "states": [[[0.5, 0], [0, 0.6]]], "n": 2, "delta": 0.1}
    assert main(["verify-pinching", "--config", str(write(tmp_path, bad_state)), "--out", str(tmp_path)]) == 3
    wrong_schema = {"schema": "other/0", "command": "rates"}
    assert main(["rates", "--config", str(write(tmp_path, wrong_schema)), "--out", str(tmp_path)]) == 3
    missing = {"schema": "cqsum-config/1", "command": "km"}
    assert main(["km", "--config", str(write(tmp_path, missing)), "--out", str(tmp_path)]) == 3
    mismatch = {"schema": "cqsum-config/1", "command": "km"}
    assert main(["rates", "--config", str(write(tmp_path, mismatch)), "--out", str(tmp_path)]) == 3


def test_budget_exit_4(tmp_path):
    cfg = CONFIGS / "verify_pinching.json"
    assert run_cli(cfg, tmp_path, "--budget-dim", "64") == 4


def test_tol_flag(tmp_path):
    doc = json.loads((CONFIGS / "verify_pinching.json").read_text())
    doc["n"] = [4]
    doc["states"][0] = [[0.9 + 1e-6, 0], [0, 0.1]]
    cfg = write(tmp_path, doc)
    assert main(["verify-pinching", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    assert main(["verify-pinching", "--config", str(cfg), "--out", str(tmp_path), "--tol", "1e-5"]) == 0


def test_file_reference_resolved(tmp_path):
    (tmp_path / "chan.json").write_text(json.dumps({"type": "example1", "q_noise": 0.1, "overlap": 0.3}))
    doc = {"schema": "cqsum-config/1", "command": "example1", "p": 0.1, "channel": {"file": "chan.json"}, "theta_points": 101}
    assert main(["example1", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 0


def test_floats_round_trip(tmp_path):
    run_cli(CONFIGS / "rates.json", tmp_path)
    rep = json.loads((tmp_path / "report.json").read_text())
    r = rep["result"]["rate_report"]
    for key in ("H_V1", "H_U", "chi_U", "R"):
        v = r[key]
        assert float(repr(v)) == v
        assert float(f"{v:.17g}") == v
    row = next(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert float(row["R"]) == r["R"]


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "cqsum" in capsys.readouterr().out
