import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from alchemical.cli import agreement, main, read_trace
from alchemical.config import RunConfig, read_config, write_config
from alchemical.errors import ParseError
from alchemical.oracle import ScanTable


def _config(tmp_path, data_dir, name="quick.ini", **extra):
    body = {"scaffold": data_dir / "hlina_dimer.scaffold", "charges": data_dir / "bipyramid_case2.charges",
            "active_orbitals": 2, "depth": 1, "iterations": 40, "restarts": 1, **extra}
    path = tmp_path / name
    path.write_text("[run]\n" + "".join(f"{k} = {v}\n" for k, v in body.items()))
    return path


@pytest.fixture
def out_dir(tmp_path, dimer_integrals):
    """Output folder pre-seeded with the case-2 integral cache."""
    out = tmp_path / "out"
    out.mkdir()
    dimer_integrals[2].save(out / "integrals.alch")
    return out


def test_config_defaults_and_round_trip(tmp_path, data_dir):
    cfg, base = read_config(data_dir / "case2.ini")
    assert base == data_dir
    assert (cfg.active_orbitals, cfg.depth, cfg.entangler, cfg.scale, cfg.restarts) == (2, 2, "full", 1e3, 3)
    assert cfg.charge_model == "all_electron"
    write_config(cfg, tmp_path / "copy.ini")
    assert read_config(tmp_path / "copy.ini")[0] == cfg


def test_hardware_mimic_overrides():
    cfg = RunConfig(scaffold="x", hardware_mimic=True)
    eff = cfg.effective
    assert (eff.iterations, eff.shots, eff.entangler) == (100, 8192, "linear")
    assert cfg.optimizer().shots == 8192
    assert RunConfig(scaffold="x").effective.shots == 0


@pytest.mark.parametrize("text", [
    "[run]\nscaffold = a\nfoo = 1\n",
    "[run]\nscaffold = a\ndepth = two\n",
    "[run]\nscaffold = a\nentangler = ring\n",
    "[run]\nscaffold = a\nhardware_mimic = maybe\n",
    "[other]\nscaffold = a\n",
    "[run]\ncharges = b\n",
    "no section header\n",
])
def test_bad_configs_raise_parse_errors(tmp_path, text):
    (tmp_path / "bad.ini").write_text(text)
    with pytest.raises(ParseError):
        read_config(tmp_path / "bad.ini")


def test_run_scan_report(tmp_path, data_dir, out_dir, capsys):
    cfg = _config(tmp_path, data_dir)
    stamp = (out_dir / "integrals.alch").stat().st_mtime_ns
    assert main(["run", "--config", str(cfg), "--out", str(out_dir), "--seed", "3"]) == 0
    assert (out_dir / "integrals.alch").stat().st_mtime_ns == stamp  # cache reused
    assert main(["scan", "--config", str(cfg), "--out", str(out_dir)]) == 0
    capsys.readouterr()
    assert main(["report", str(out_dir)]) == 0
    text = capsys.readouterr().out
    report = json.loads((out_dir / "report.json").read_text())
    assert report["schema"] == "alchemical.report/1"
    assert report["n_qubits"] == 4 and report["charge_model"] == "all_electron"
    assert "approximation" in report and report["ecp_supplied"] is False
    assert sum(report["joint_weights"].values()) == pytest.approx(1.0)
    table = ScanTable.read_csv(out_dir / "scan.csv")
    assert f"agreement: {agreement(report, table)}" in text
    assert f"selected: {report['selected']}" in text

    records, bad = read_trace(out_dir / "trace.jsonl")
    assert bad == 0 and len(records) == report["iterations"]
    assert json.loads((out_dir / "trace.jsonl").read_text().splitlines()[0]) == {"schema": "alchemical.trace/1"}
    with open(out_dir / "alpha_evolution.csv") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    assert rows[0][:3] == ["iteration", "restart", "site0_H"] and len(rows) == len(records) + 1
    with open(out_dir / "distribution.csv") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    assert [r[0] for r in rows[1:]] == ["initial", "final"]
    assert np.allclose([float(x) for x in rows[2][1:]], np.concatenate(report["alpha_opt"]))

    snap, _ = read_config(out_dir / "config.ini")
    assert snap.scaffold == "inputs/hlina_dimer.scaffold" and (out_dir / "inputs" / "bipyramid_case2.charges").exists()
    assert snap.seed == 3


def test_stale_cache_is_rebuilt(tmp_path, data_dir, out_dir):
    cfg = _config(tmp_path, data_dir, charges=data_dir / "bipyramid_case3.charges", iterations=1)
    before = (out_dir / "integrals.alch").read_bytes()
    assert main(["integrals", "--config", str(cfg), "--out", str(out_dir)]) == 0
    assert (out_dir / "integrals.alch").read_bytes() != before


def test_report_tolerates_malformed_trace_lines(tmp_path, data_dir, out_dir, capsys):
    cfg = _config(tmp_path, data_dir, iterations=3)
    assert main(["run", "--config", str(cfg), "--out", str(out_dir)]) == 0
    with open(out_dir / "trace.jsonl", "a") as fh:
        fh.write("{not json\n[1, 2]\n")
    capsys.readouterr()
    assert main(["report", str(out_dir)]) == 0
    out = capsys.readouterr().out
    assert "2 malformed lines skipped" in out and "agreement: n/a" in out


def test_exit_codes(tmp_path, data_dir, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "o")]) == 2
    assert main(["report", str(tmp_path / "nowhere")]) == 2
    (tmp_path / "bad.ini").write_text("[run]\nscaffold = x\nbogus = 1\n")
    assert main(["scan", "--config", str(tmp_path / "bad.ini"), "--out", str(tmp_path / "o")]) == 2
    # an external charge on top of a nucleus is a numerical failure
    (tmp_path / "clash.charges").write_text("0 0 1.0683 0.5\n")
    cfg = _config(tmp_path, data_dir, "clash.ini", charges=tmp_path / "clash.charges")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "clash")]) == 3
    err = capsys.readouterr().err
    assert "numerical failure" in err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "alchemical", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "integrals" in out.stdout and "report" in out.stdout
