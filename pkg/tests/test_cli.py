import json
from pathlib import Path

import pytest

from universality.cli import RunConfig, dumps_report, run_command
from universality.exceptions import ConfigError

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.json"))
FAST = ["order_estimate", "orthogonality", "find_shift", "verify", "plan_th1", "fit_target", "zeros"]


def _run(tmp_path, name, *extra, cfg_path=None):
    cfg_path = cfg_path or next(p for p in CONFIGS if p.stem == name)
    cmd = json.loads(cfg_path.read_text())["command"]
    return run_command([cmd, "--config", str(cfg_path), "--out", str(tmp_path), *extra])


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_configs_round_trip(path):
    cfg = RunConfig.load(path)
    text = cfg.emit()
    again = RunConfig.parse(text, path.parent)
    assert again.emit() == text
    assert again == cfg


def test_all_commands_have_configs():
    cmds = {json.loads(p.read_text())["command"] for p in CONFIGS}
    assert cmds == {"order-estimate", "orthogonality", "steer", "find-shift", "verify",
                    "plan-th1", "zeros", "fit-target"}


@pytest.mark.parametrize("text,field,line", [
    ('{\n  "command": "steer",\n  "sede": 1\n}\n', "sede", 3),
    ('{\n  "command": "steer",\n  "seed": -1\n}\n', "seed", 3),
    ('{\n  "command": "fly"\n}\n', "command", 2),
    ('{\n  "command": "steer",\n  "budgets": {\n    "prime_limit": 0\n  }\n}\n', "budgets.prime_limit", 4),
    ('{\n  "command": "steer",\n  "series": [\n    {"kind": "nope"}\n  ]\n}\n', "series[0].kind", 4),
    ('{\n  "command": "steer",\n', "<json>", 3),
])
def test_config_diagnostics(text, field, line):
    with pytest.raises(ConfigError) as info:
        RunConfig.parse(text)
    assert info.value.field == field
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_missing_referenced_file(tmp_path):
    text = json.dumps({"command": "order-estimate", "series": [{"kind": "file", "path": "nope.txt"}]})
    with pytest.raises(ConfigError, match="does not exist"):
        RunConfig.parse(text, tmp_path)


def test_report_canonical_form():
    text = dumps_report({"b": 1j, "a": [1.5, 2]})
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [1.5, 2], "b": [0.0, 1.0]}
    assert text.index('"a"') < text.index('"b"')


def test_inadmissible_steer_exit_one(tmp_path, capsys):
    cfg = json.loads(next(p for p in CONFIGS if p.stem == "steer").read_text())
    cfg["targets"] = [{"A": 0.0, "B": 1.0, "kind": "flat", "value": 0.3}]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert _run(tmp_path, None, cfg_path=path) == 1
    err = capsys.readouterr().err
    assert "AdmissibilityError" in err and "0.125" in err


def test_command_mismatch(tmp_path):
    path = next(p for p in CONFIGS if p.stem == "zeros")
    assert run_command(["steer", "--config", str(path), "--out", str(tmp_path)]) == 1


def test_prime_ceiling_enforced(tmp_path):
    assert _run(tmp_path, "verify", "--prime-ceiling", "1000") == 1


def test_verify_self_consistent_passes(tmp_path):
    assert _run(tmp_path, "verify") == 0
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert rep["exit_code"] == 0 and rep["ledger"]["sup_log_error"]["within"]


def test_zeros_inconclusive(tmp_path):
    assert _run(tmp_path, "zeros") == 2
    assert (tmp_path / "zeros_tiles.csv").exists() or any(tmp_path.glob("*.csv"))


@pytest.mark.parametrize("name", FAST)
def test_deterministic_outputs(tmp_path, name):
    a, b = tmp_path / "a", tmp_path / "b"
    ca = _run(a, name)
    cb = _run(b, name)
    assert ca == cb and ca in (0, 2)
    files_a = sorted(p.name for p in a.iterdir())
    assert files_a == sorted(p.name for p in b.iterdir())
    for f in files_a:
        assert (a / f).read_bytes() == (b / f).read_bytes()
    rep = json.loads(next(a.glob("*report*.json")).read_text())
    assert "time" not in json.dumps(rep).lower()


def test_seed_override_changes_report(tmp_path):
    _run(tmp_path / "a", "find_shift")
    _run(tmp_path / "b", "find_shift", "--seed", "8")
    ra = json.loads(next((tmp_path / "a").glob("*report*.json")).read_text())
    rb = json.loads(next((tmp_path / "b").glob("*report*.json")).read_text())
    assert ra["seed"] != rb["seed"]
