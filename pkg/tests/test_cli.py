import csv
import io
import json

import pytest

from cqcoding import cli
from cqcoding.channels import channel_to_dict
from cqcoding.errors import DomainError

NOISELESS = {"kind": "memoryless", "labels": ["0", "1"],
             "signals": {"0": [[1, 0], [0, 0]], "1": [[0, 0], [0, 1]]}}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_capacity_noiseless(tmp_path):
    cfg = {"schema": 1, "channel": NOISELESS, "params": {"n": [1, 2, 3]}}
    assert cli.main(["capacity", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "capacity.csv")
    assert [float(r["C_n_per_site"]) for r in rows] == pytest.approx([1, 1, 1], abs=1e-8)
    report = json.loads((tmp_path / "capacity_report.json").read_text())
    assert report["config_hash"] == cli.config_hash(json.loads(json.dumps(
        dict(cfg, params=cfg["params"]))))
    assert not report["partial"]


def test_mixing_memoryless_zero(tmp_path):
    cfg = {"schema": 1, "channel": NOISELESS, "params": {"x": [0, 1, 0, 1, 0, 1, 0, 1, 0, 1,
                                                              0, 1, 0], "gaps": [1, 2, 3]}}
    assert cli.run(cfg, "mixing", tmp_path) == 0
    assert all(float(r["defect"]) == pytest.approx(0.0, abs=1e-12)
               for r in read_csv(tmp_path / "mixing.csv"))


def test_code_on_markov_fixture(tmp_path):
    from conftest import markov_fixture

    cfg = {"schema": 1, "channel": channel_to_dict(markov_fixture()),
           "params": {"n": [2, 4], "eps": 1.0, "lambda": 0.2}}
    assert cli.run(cfg, "code", tmp_path, fmt="json") == 0
    rows = json.loads((tmp_path / "code.json").read_text())
    assert [r["M"] for r in rows] == [1, 2]
    assert all(r["max_err"] <= 0.2 + 1e-9 for r in rows)


def test_typicality_and_aep_and_converse(tmp_path):
    cfg = {"schema": 1, "channel": NOISELESS, "process": {"kind": "iid", "probs": [0.5, 0.5]},
           "params": {"n": [2], "eps": 0.5}}
    assert cli.run(cfg, "typicality", tmp_path) == 0
    assert read_csv(tmp_path / "typicality.csv")[0]["size_T"] == "4"
    cfg["params"] = {"n": [2, 3], "eps": 0.1}
    assert cli.run(cfg, "aep", tmp_path) == 0
    assert float(read_csv(tmp_path / "aep.csv")[1]["gap"]) < 0.1
    conv = {"schema": 1, "params": {"n": [10], "eps_list": [0.5], "capacity": 1.0}}
    assert cli.run(conv, "converse", tmp_path) == 0
    assert float(read_csv(tmp_path / "converse.csv")[0]["floor"]) == pytest.approx(4 / 15)


def test_byte_identical_reruns(tmp_path):
    cfg = {"schema": 1, "channel": NOISELESS, "params": {"n": [1, 2], "eps": 0.5,
                                                         "order": "shuffle"}}
    a, b = tmp_path / "a", tmp_path / "b"
    path = write(tmp_path, cfg)
    for d in (a, b):
        assert cli.main(["code", "--config", path, "--out", str(d), "--seed", "3"]) == 0
    for name in ("code.csv", "code_report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert b"\r\n" not in (a / "code.csv").read_bytes()


def test_pointer_diagnostics(tmp_path, capsys):
    cfg = {"schema": 1, "channel": NOISELESS, "params": {"lambda": 2.0}}
    assert cli.main(["code", "--config", write(tmp_path, cfg)]) == 2
    assert "/params/lambda" in capsys.readouterr().err
    with pytest.raises(cli.ConfigError) as info:
        cli.validate_config({"schema": 2}, "capacity")
    assert info.value.pointer == "/schema"
    with pytest.raises(cli.ConfigError) as info:
        cli.validate_config({"schema": 1}, "capacity")
    assert info.value.pointer == "/channel"
    with pytest.raises(cli.ConfigError) as info:
        cli.validate_config({"schema": 1, "kind": "aep", "channel": NOISELESS}, "capacity")
    assert info.value.pointer == "/kind"
    bad = {"schema": 1, "channel": {"kind": "memoryless", "signals": {"0": [[1, 0], [0, 2]]}}}
    with pytest.raises(cli.ConfigError) as info:
        cli.run(bad, "capacity", tmp_path)
    assert info.value.pointer == "/channel"
    assert cli.main(["capacity", "--config", str(tmp_path / "missing.json")]) == 2


def test_dim_cap_partial_output(tmp_path):
    cfg = {"schema": 1, "channel": NOISELESS, "params": {"n": [1, 2, 3], "dim_cap": 4}}
    assert cli.run(cfg, "capacity", tmp_path) == 3
    report = json.loads((tmp_path / "capacity_report.json").read_text())
    assert report["partial"] and report["rows"] == 2
    assert len(read_csv(tmp_path / "capacity.csv")) == 2


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise DomainError("forced")

    monkeypatch.setattr(cli.cap, "holevo_cn", boom)
    cfg = {"schema": 1, "channel": NOISELESS}
    assert cli.main(["capacity", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 4


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "cqcoding", "--help"], capture_output=True,
                         text=True, check=True)
    assert "capacity" in out.stdout
