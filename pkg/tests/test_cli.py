"""Command-line interface: subcommands, formats, exit codes."""

import json

import numpy as np
import pytest

from rfsn.cli import main
from rfsn.waveform import Waveform


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_params_reports_derived_quantities(capsys):
    code, out = run_cli(capsys, "params", "--sf", "7", "--fosc", "32768")
    assert code == 0
    d = dict(line.split(",", 1) for line in out.splitlines()[1:])
    assert float(d["bw_hz"]) == 4096.0
    assert float(d["ds_s"]) == 0.03125
    assert float(d["rd_bps"]) == 224.0


def test_modulate_demodulate_roundtrip(tmp_path, capsys):
    wav = tmp_path / "w.bin"
    code, _ = run_cli(
        capsys,
        "modulate",
        "--sf", "7", "--fosc", "32768",
        "--symbols", "3,17,90",
        "--out", str(wav),
    )
    assert code == 0
    w = Waveform.load(str(wav))
    assert set(np.unique(w.samples)) <= {0.0, 1.0}
    code, out = run_cli(
        capsys, "demodulate", "--sf", "7", "--fosc", "32768", "--in", str(wav)
    )
    assert code == 0
    detected = [int(line.split(",")[1]) for line in out.splitlines()[1:]]
    assert detected == [3, 17, 90]


def test_spectrum_csv(tmp_path, capsys):
    wav = tmp_path / "w.bin"
    run_cli(capsys, "modulate", "--sf", "7", "--fosc", "32768",
            "--symbols", "8", "--out", str(wav))
    code, out = run_cli(capsys, "spectrum", "--in", str(wav))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "freq_hz,psd"
    freqs = [float(l.split(",")[0]) for l in lines[1:]]
    assert freqs == sorted(freqs)


def test_theory_json_format(capsys):
    code, out = run_cli(capsys, "theory", "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert [r["fosc_hz"] for r in rows] == [32768.0, 1e6, 2e6, 4e6]


def test_ber_sweep_from_config(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(
        "scenario = tiny\n"
        "sweep_axis = pr_dbm\n"
        "sweep_values = -95\n"
        "n_symbols = 200\n"
        "composite_gain_db = 0\n"
        "template = complex\n"
    )
    code, out = run_cli(capsys, "ber-sweep", "--config", str(cfg))
    assert code == 0
    assert out.splitlines()[0].startswith("axis,")
    assert len(out.splitlines()) == 2


def test_charge_sweep_reports_never(tmp_path, capsys):
    cfg = tmp_path / "charge.cfg"
    cfg.write_text(
        "scenario = charge\n"
        "charge_variant = passive\n"
        "sweep_values = -2.3, -20\n"
    )
    code, out = run_cli(capsys, "charge-sweep", "--config", str(cfg))
    assert code == 0
    assert "never" in out


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("scenario = bad\nsf = 99\n")
    code, _ = run_cli(capsys, "ber-sweep", "--config", str(cfg))
    assert code == 2


def test_missing_input_file_exits_3(capsys):
    code, _ = run_cli(capsys, "demodulate", "--sf", "7", "--fosc", "32768",
                      "--in", "/nonexistent/w.bin")
    assert code == 3
