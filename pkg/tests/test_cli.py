import json

import numpy as np
import pytest

from qpermute.cli import main
from qpermute.config import config_from_dict, config_to_dict, dump_config, load_config
from qpermute.errors import ConfigurationError
from qpermute.network import SwitchId
from qpermute.schedule import build_schedule, loads_schedule
from qpermute.verify import random_config

BASE = {
    "n": 2, "m": 2, "seed": 5, "operators": "haar",
    "inputPolarization": [[1, 0], [0, 0]],
    "controlAmplitudes": "uniform-permutations",
    "timing": {"binSpacing_ps": 40, "loopDelay_ps": 200},
}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


# config parsing


def test_uniform_permutations_forces_m_equal_n():
    cfg = config_from_dict({**BASE, "n": 4, "m": 2, "timing": {}})
    assert cfg.m == 4
    assert len(cfg.occupied_bins) == 24
    assert sum(abs(a) ** 2 for a in cfg.control.values()) == pytest.approx(1)


def test_explicit_matrices_and_gate_names():
    doc = {**BASE, "operators": [[[[0, 0], [1, 0]], [[1, 0], [0, 0]]], "h"],
           "controlAmplitudes": {"1": [3, 0], "2": [0, 4]}}
    cfg = config_from_dict(doc)
    np.testing.assert_array_equal(cfg.operators[0].matrix, [[0, 1], [1, 0]])
    assert cfg.normalized_control() == {1: pytest.approx(0.6), 2: pytest.approx(0.8j)}


@pytest.mark.parametrize("patch,where", [
    ({"n": 3}, "n:"),
    ({"operators": [[[[1, 0], [1, 0]], [[0, 0], [1, 0]]], "I"]}, "operators[0]"),
    ({"operators": ["I", "Q"]}, "operators[1]"),
    ({"operators": ["I"]}, "operators:"),
    ({"controlAmplitudes": {"9": [1, 0]}, "m": 2}, "controlAmplitudes"),
    ({"controlAmplitudes": {"x": [1, 0]}}, "controlAmplitudes"),
    ({"controlAmplitudes": {"0": [0, 0]}}, "controlAmplitudes"),
    ({"inputPolarization": [[1, 0]]}, "inputPolarization"),
    ({"timing": {"binSpacing": 40}}, "timing"),
    ({"bogus": 1}, "unknown field"),
    ({"driftSigma": -1}, "driftSigma"),
])
def test_config_errors_name_the_field(patch, where):
    with pytest.raises(ConfigurationError) as info:
        config_from_dict({**BASE, **patch})
    assert where in str(info.value)


def test_config_round_trip(tmp_path):
    cfg = random_config(4, 2, seed=3)
    path = tmp_path / "c.json"
    dump_config(cfg, path)
    again = load_config(path)
    assert config_to_dict(again) == config_to_dict(cfg)
    for a, b in zip(again.operators, cfg.operators):
        np.testing.assert_array_equal(a.matrix, b.matrix)


def test_parse_error_reports_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 2,\n "m": }')
    with pytest.raises(ConfigurationError, match=r"bad.json:2:\d+"):
        load_config(path)


def test_default_loop_delay_is_smallest_feasible():
    cfg = config_from_dict({**BASE, "timing": {"binSpacing_ps": 25}})
    p = cfg.scheduler_params()
    assert p.loop_delay == 25 * 4
    p.validate()


# schedule subcommand


def test_schedule_feasible(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "sched.json"
    assert main(["schedule", "--config", str(cfg), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "switches=2" in text
    doc = json.loads(out.read_text())
    assert set(doc) == {"params", "rule", "logical", "timeline"}
    assert {e["switch"] for e in doc["logical"]} == {"S[0,0]", "S'[0,0]"}


def test_schedule_round_trip_through_file(tmp_path):
    cfg_path = write(tmp_path, BASE)
    out = tmp_path / "sched.json"
    main(["schedule", "--config", str(cfg_path), "--out", str(out)])
    cfg = load_config(cfg_path)
    direct = build_schedule(cfg.scheduler_params(), occupied_bins=cfg.occupied_bins)
    assert loads_schedule(out.read_text()).logical == direct.logical


def test_schedule_machine_format_to_stdout(tmp_path, capsys):
    assert main(["schedule", "--config", str(write(tmp_path, BASE)), "--format", "machine"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert SwitchId.parse(doc["timeline"][0]["switch"])


def test_schedule_bin_spacing_infeasible(tmp_path, capsys):
    cfg = write(tmp_path, {**BASE, "timing": {"binSpacing_ps": 12, "loopDelay_ps": 200}})
    assert main(["schedule", "--config", str(cfg)]) == 1
    assert "binSpacing >= switchWindow + transition" in capsys.readouterr().err


def test_schedule_loop_delay_infeasible(tmp_path, capsys):
    cfg = write(tmp_path, {**BASE, "timing": {"binSpacing_ps": 40, "loopDelay_ps": 100}})
    assert main(["schedule", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "loopDelay >= N^M * binSpacing" in err and "160" in err


def test_schedule_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{")
    assert main(["schedule", "--config", str(path)]) == 1
    assert "broken.json:1:" in capsys.readouterr().err


def test_schedule_compare_literal(tmp_path, capsys):
    assert main(["schedule", "--config", str(write(tmp_path, BASE)), "--compare-literal"]) == 0
    out = capsys.readouterr().out
    assert "literal-rule disagreements" in out and "S[2,2]" in out


def test_schedule_literal_rule_compiles(tmp_path, capsys):
    doc = {**BASE, "n": 4, "m": 2, "controlAmplitudes": {str(i): [1, 0] for i in range(16)}, "timing": {}}
    assert main(["schedule", "--config", str(write(tmp_path, doc)), "--rule", "literal"]) == 0


# simulate subcommand


def test_simulate_reports_fidelity(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    assert main(["simulate", "--config", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert "fidelity vs oracle" in text
    report = json.loads((tmp_path / "cfg.report.json").read_text())
    assert report["fidelity"] >= 1 - 1e-9
    assert report["norm_residual"] <= 1e-9
    assert [row["bin"] for row in report["output"]] == [1, 2]


def test_simulate_identity_operators(tmp_path, capsys):
    doc = {**BASE, "operators": ["I", "I"], "inputPolarization": [[0.6, 0], [0, 0.8]]}
    out = tmp_path / "r.json"
    assert main(["simulate", "--config", str(write(tmp_path, doc)), "--out", str(out), "--format", "machine"]) == 0
    report = json.loads(out.read_text())
    assert report["fidelity"] == pytest.approx(1, abs=1e-12)
    for row in report["output"]:
        (hr, hi), (vr, vi) = row["spinor"]
        assert complex(hr, hi) == pytest.approx(0.6 / np.sqrt(2))
        assert complex(vr, vi) == pytest.approx(0.8j / np.sqrt(2))


def test_simulate_n4_uniform_permutations(tmp_path, capsys):
    doc = {**BASE, "n": 4, "timing": {"binSpacing_ps": 20}}
    out = tmp_path / "r.json"
    assert main(["simulate", "--config", str(write(tmp_path, doc)), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["m"] == 4 and report["occupied_bins"] == 24 and len(report["output"]) == 24
    assert report["fidelity"] >= 1 - 1e-9


def test_simulate_with_drift(tmp_path):
    out = tmp_path / "r.json"
    assert main(["simulate", "--config", str(write(tmp_path, {**BASE, "driftSigma": 0.2})), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["fidelity"] < 1 - 1e-6
    assert report["norm_residual"] <= 1e-9


def test_simulate_is_deterministic(tmp_path):
    cfg = write(tmp_path, {**BASE, "driftSigma": 0.05})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["simulate", "--config", str(cfg), "--out", str(a)])
    main(["simulate", "--config", str(cfg), "--out", str(b)])
    assert a.read_text() == b.read_text()


# verify subcommand


def test_verify_small(capsys):
    assert main(["verify", "--n", "2", "--m", "2", "--trials", "20", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out and "FAIL" not in out


def test_verify_machine_format(capsys):
    assert main(["verify", "--n", "4", "--m", "2", "--trials", "5", "--format", "machine"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["ok"] is True
    assert all(c["failed"] == 0 for c in summary["checks"].values())


def test_verify_budget_refusal(capsys):
    assert main(["verify", "--n", "16", "--m", "16", "--trials", "1"]) == 1
    assert "bin budget" in capsys.readouterr().err


def test_verify_failure_dumps_config(tmp_path, monkeypatch, capsys):
    import qpermute.verify as verify

    monkeypatch.setattr(verify, "FIDELITY_TOL", -1.0)  # impossible threshold forces a failure
    dump = tmp_path / "fail.json"
    assert main(["verify", "--n", "2", "--m", "2", "--trials", "2", "--out", str(dump)]) == 2
    cfg = load_config(dump)
    assert cfg.n == 2 and cfg.m == 2


# drift-sweep subcommand


def test_drift_sweep_table(tmp_path, capsys):
    assert main(["drift-sweep", "--config", str(write(tmp_path, BASE)), "--sigmas", "0,0.05", "--trials", "4"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "sigma,mean_fidelity,std_fidelity,trials"
    assert lines[1].startswith("0,1.0000000000")


def test_drift_sweep_machine_to_file(tmp_path):
    out = tmp_path / "sweep.json"
    args = ["drift-sweep", "--config", str(write(tmp_path, BASE)), "--sigmas", "0.01,0.1",
            "--trials", "3", "--format", "machine", "--out", str(out)]
    assert main(args) == 0
    rows = json.loads(out.read_text())
    assert [r["sigma"] for r in rows] == [0.01, 0.1]
    assert rows[0]["mean_fidelity"] > rows[1]["mean_fidelity"]
