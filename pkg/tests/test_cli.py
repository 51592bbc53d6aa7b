import json
import subprocess
import sys

import pytest

from ftbell.cli import main


def run(*args):
    p = subprocess.run([sys.executable, "-m", "ftbell.cli", *args], capture_output=True, text=True)
    return p.returncode, p.stdout, p.stderr


def test_validate_bundled_codes(capsys):
    assert main(["validate-css", "steane", "shor9"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("code,n,valid")
    assert "\r\n" in out


def test_invalid_code_exits_one(tmp_path, capsys):
    f = tmp_path / "bad.css"
    f.write_text("X:\nXXII\nZ:\nZIII\nLX:\nXXXX\nLZ:\nZZZZ\n")
    assert main(["validate-css", str(f)]) == 1


def test_malformed_code_exits_two(tmp_path, capsys):
    f = tmp_path / "bad.css"
    f.write_text("X:\nXQ\n")
    assert main(["validate-css", str(f)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_usage_errors_exit_two():
    assert run("no-such-command")[0] == 2
    assert run("simulate", "ebit-level1", "--shots", "10")[0] == 2     # seed is required


def test_domain_errors_exit_three(capsys):
    assert main(["mpm", "ec", "--samples", "0"]) == 3
    assert main(["resources", "theorem", "--delta-grid", "1e-1:1e-2"]) == 3


def test_json_output_is_sorted(capsys):
    assert main(["bounds", "fixed-point", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert list(data) == sorted(data)
    assert data["spectral_radius"] < 1


def test_config_defaults_lose_to_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("delta_grid=1e-3:1e-5\n")
    assert main(["resources", "theorem", "--config", str(cfg)]) == 0
    rows_cfg = capsys.readouterr().out.strip().splitlines()
    assert main(["resources", "theorem", "--config", str(cfg), "--delta-grid", "1e-3:1e-4"]) == 0
    rows_flag = capsys.readouterr().out.strip().splitlines()
    assert len(rows_flag) < len(rows_cfg)


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus=1\n")
    assert main(["resources", "theorem", "--config", str(cfg)]) == 2


def test_output_file_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["simulate", "ebit-level1", "--method", "direct", "--shots", "2000", "--seed", "7"]
    assert main(base + ["-o", str(a), "--threads", "1"]) == 0
    assert main(base + ["-o", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_flow_enumeration_json(capsys):
    assert main(["flow", "enumerate", "--error-type", "X", "--max-order", "2", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)


def test_game_verify(capsys):
    assert main(["game", "verify", "--shots", "20"]) == 0
    assert capsys.readouterr().out
