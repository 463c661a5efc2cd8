import math
from pathlib import Path
import subprocess
import sys

import pytest

from ddsim import cli
from ddsim.config import ConfigError, load_config, parse_config, preset_text

ZERO_ERRORS = """
[error_model]
delta_omega_fwhm_khz = 0
eps0_deg = 0
n0_deg = 0

[simulation]
n_samples = 50
seed = 3

[sequence]
families = XYXY, XZXZ
cycles = 1-2
levels = 1-2
"""


def test_preset_values():
    cfg = parse_config(preset_text("paper.config"))
    em = cfg.error_model
    assert em.delta_omega_fwhm == pytest.approx(2 * math.pi * 140e3)
    assert em.eps0 == pytest.approx(math.radians(7.5))
    assert em.tau == pytest.approx(11e-6) and em.t_pulse == pytest.approx(180e-9)
    assert cfg.seed == 42 and cfg.n_samples == 20000
    assert cfg.t1 == pytest.approx(46e-3) and cfg.t2 == pytest.approx(4.6e-3)
    assert any(s.cancel_adjacent for s in cfg.sequences)
    assert len(cfg.digest) == 16


def test_repo_copy_matches_preset():
    root = Path(__file__).resolve().parents[1] / "paper.config"
    assert root.read_text() == preset_text("paper.config")


@pytest.mark.parametrize("text", [
    "[error_model]\ntau_ms = 11\n",
    "[bogus]\nx = 1\n",
    "[error_model]\neps0_deg = seven\n",
    "[simulation]\nn_samples = 0\n",
    "[sequence]\nfamilies = XXXX\n",
    "[relaxation]\nt1_ms = 1\nt2_ms = 2\n",
])
def test_bad_configs_are_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/other.config")


def test_cli_rejects_unknown_key(tmp_path, capsys):
    bad = tmp_path / "bad.config"
    bad.write_text("[error_model]\ntau_ms = 11\n")
    assert cli.main(["fidelity", "--config", str(bad)]) == 1
    assert "unknown key" in capsys.readouterr().err


@pytest.mark.parametrize("args,summary", [
    (["--family", "XYXY", "--size", "4"], "pulses=340 delays=256"),
    (["--family", "XZXZ", "--size", "4"], "pulses=510 delays=256"),
    (["--family", "XYXY", "--size", "2", "--cancel-adjacent"], "pulses=16 delays=16"),
])
def test_dump_program_summary(args, summary, capsys):
    assert cli.main(["dump-program", *args]) == 0
    assert capsys.readouterr().out.splitlines()[-1].startswith(summary)


def test_dump_periodic_one_cycle(capsys):
    cli.main(["dump-program", "--family", "XYXY", "--construction", "periodic", "--size", "1"])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 9
    assert lines[:2] == ["D 1.1e-05", "P X"]


def test_zero_error_fidelity_is_one(tmp_path):
    cfg = tmp_path / "zero.config"
    cfg.write_text(ZERO_ERRORS)
    out = tmp_path / "out.csv"
    assert cli.main(["fidelity", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# ddsim ") and "config_sha256=" in lines[0] and "seed=3" in lines[0]
    assert lines[1].split(",") == list(cli.FIDELITY_COLUMNS)
    rows = [l.split(",") for l in lines[2:]]
    assert len(rows) == 2 * 2 * 2 * 3
    assert all(r[5] == "1.0000000000" for r in rows)


def test_fidelity_dump_program_flag(tmp_path, capsys):
    cfg = tmp_path / "zero.config"
    cfg.write_text(ZERO_ERRORS)
    assert cli.main(["fidelity", "--config", str(cfg), "--dump-program"]) == 0
    out = capsys.readouterr().out
    assert "# XYXY concatenated 2" in out and "pulses=20 delays=16" in out


def test_verify_passes_on_preset(capsys):
    assert cli.main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 15


def test_verify_failure_exit_code(tmp_path):
    cfg = tmp_path / "wrong.config"
    cfg.write_text("[verify]\nchecks = XYXY:phase_error:1:3.0\n")
    assert cli.main(["verify", "--config", str(cfg)]) == 2


def test_noise_command(tmp_path):
    cfg = tmp_path / "noise.config"
    cfg.write_text("[simulation]\nseed = 1\n[noise]\nn_shots = 5\ntotal_times_ms = 0.1, 0.2\n"
                   "sequences = CPMG:periodic:1, XYXY:concatenated:2\n")
    out = tmp_path / "noise.csv"
    assert cli.main(["noise", "--config", str(cfg), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.count("tau_s,") == 1 and text.count("# sequence=") == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ddsim.cli", "dump-program", "--family", "XYXY",
                          "--size", "1"], capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[-1].startswith("pulses=4 delays=4")
