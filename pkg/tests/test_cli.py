"""
End-to-end tests of the command line.
"""

import csv
import json

from conftest import HAMMING
from eqml.cli import main

SMALL_RUN = ["--code", str(HAMMING), "--min-frames", "100", "--max-frames", "100", "--batch-frames", "50", "--quiet"]


def test_validate(capsys):
    assert main(["validate", str(HAMMING)]) == 0
    out = capsys.readouterr().out
    assert "dimension" in out and "four_cycles" in out


def test_validate_reports_broken_files(tmp_path, capsys):
    broken = tmp_path / "broken.alist"
    broken.write_text("7 3\n3 4\n")
    assert main(["validate", str(HAMMING), str(broken)]) == 1
    assert "broken.alist" in capsys.readouterr().out


def test_simulate(tmp_path):
    out = tmp_path / "ms.csv"
    assert main(["simulate", *SMALL_RUN, "--decoder", "ms", "--ebn0", "1:2:1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["ebn0_db"] for r in rows] == ["1", "2"]
    assert all(r["frames"] == "100" for r in rows)
    assert (tmp_path / "ms.csv.meta.json").exists()


def test_simulate_with_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"code = {HAMMING}\ndecoder = sms\njmax = 2\nebn0 = 2.0\n")
    out = tmp_path / "sms.csv"
    assert main(["simulate", "--config", str(cfg), "--min-frames", "50", "--max-frames", "50", "--quiet", "--out", str(out)]) == 0
    assert len(list(csv.DictReader(out.open()))) == 1


def test_decode_with_trace(tmp_path, capsys):
    llr = tmp_path / "frame.txt"
    llr.write_text("1.0 2.4 -0.7 2.0 3.0 -1.2 2.1\n")
    prefix = tmp_path / "trace"
    args = ["decode", "--code", str(HAMMING), "--llr", str(llr), "--decoder", "eqml-ews", "--stop-rule", "lds", "--jmax", "3", "--trace", str(prefix)]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "recovered" in out and "0000000" in out
    tests = list(csv.DictReader(open(f"{prefix}_tests.csv")))
    assert len(tests) == 14
    picks = list(csv.DictReader(open(f"{prefix}_selections.csv")))
    assert [p["vn"] for p in picks][0] == "6"


def test_decode_length_mismatch(tmp_path, capsys):
    llr = tmp_path / "frame.txt"
    llr.write_text("1 2 3\n")
    assert main(["decode", "--code", str(HAMMING), "--llr", str(llr)]) == 1
    assert "3 LLRs" in capsys.readouterr().err


def test_invalid_settings_exit_code(tmp_path, capsys):
    assert main(["simulate", *SMALL_RUN, "--jmax", "0", "--out", str(tmp_path / "x.csv")]) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_diagnose_flips(tmp_path):
    out = tmp_path / "flips.csv"
    assert main(["diagnose-flips", "--code", str(HAMMING), "--frames", "20", "--imax", "10", "--quiet", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 20 * 9
    assert rows[0]["iter"] == "2"
    assert (tmp_path / "flips_mean.csv").exists()


def test_oracle_compare(tmp_path):
    out = tmp_path / "oracle.csv"
    args = ["oracle-compare", *SMALL_RUN, "--decoder", "spa", "--ebn0", "3", "--out", str(out)]
    assert main(args) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["frames"] == "100"


def test_default_output_follows_the_configured_decoder(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"code = {HAMMING}\ndecoder = ms\nebn0 = 2.0\n")
    assert main(["simulate", "--config", str(cfg), "--min-frames", "50", "--max-frames", "50", "--quiet"]) == 0
    assert (tmp_path / "results" / "ms.csv").exists()
    assert not (tmp_path / "results" / "eqml-ews.csv").exists()


def test_oracle_compare_writes_event_agreement(tmp_path, capsys):
    out = tmp_path / "oracle.csv"
    assert main(["oracle-compare", *SMALL_RUN, "--decoder", "eqml-ews", "--ebn0", "2", "--out", str(out)]) == 0
    assert "agree" in capsys.readouterr().out
    meta = json.loads((tmp_path / "oracle.csv.meta.json").read_text())
    assert 0.0 <= meta["points"][0]["event_agreement_rate"] <= 1.0
