import json
import shutil
import subprocess
import sys

import pytest

from mineral_gap.cli import main
from mineral_gap.model import shipped_data_dir


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_optimal_capacity(capsys):
    rc, out, _ = run(capsys, "capacity", "--mode", "optimal", "--format", "json")
    assert rc == 0
    rows = {r["row"]: r["value"] for r in json.loads(out)[0]["rows"]}
    assert rows["chemistry"] == "NMC811"
    assert rows["ceiling"] == pytest.approx(848_804, rel=1e-3)
    assert rows["cumulative 2027-2032"] == pytest.approx(5_092_824, rel=1e-3)


def test_capacity_modes(capsys):
    for args in (["--mode", "per-chemistry"], ["--mode", "mix", "--year", "2030"],
                 ["--mode", "joint", "--basis", "reserves"], ["--assumption", "added-supply", "--fleet", "mixed"]):
        rc, out, _ = run(capsys, "capacity", *args)
        assert rc == 0 and out


def test_scenarios_and_emissions(capsys):
    rc, out, _ = run(capsys, "scenarios", "--kind", "low", "--format", "csv")
    assert rc == 0 and "scenarios:low,2032,ev_sales,5711810" in out
    rc, out, _ = run(capsys, "emissions", "--year", "2030", "--powertrain", "EV LFP")
    assert rc == 0 and "LFP 2030" in out


def test_pathway_modes(capsys):
    for mode in ("thresholds", "ramp", "hev-only", "supplement"):
        rc, out, _ = run(capsys, "pathways", "--mode", mode, "--scenario", "medium")
        assert rc == 0 and out


def test_report_and_plot_series(capsys):
    rc, out, _ = run(capsys, "report", "--table", "T3.2", "--table", "t4_2")
    assert rc == 0 and "T3.2" in out and "T4.2" in out
    rc, out, _ = run(capsys, "report", "--plot-series", "T6.5")
    assert rc == 0 and out.startswith("x,y,series")


def test_diff_exit_codes(capsys, tmp_path):
    rc, out, _ = run(capsys, "diff")
    assert rc == 0 and "FAIL" not in out
    gold = tmp_path / "g"
    shutil.copytree(shipped_data_dir() / "golden", gold)
    p = gold / "T2_1.csv"
    head, first, *rest = p.read_text().splitlines()
    cells = first.split(",")
    cells[1] = cells[1] + "9"
    p.write_text("\n".join([head, ",".join(cells), *rest]) + "\n")
    rc, out, _ = run(capsys, "diff", "--golden", str(gold), "--table", "T2.1")
    assert rc == 1 and "FAIL" in out


def test_output_file_is_written(tmp_path, capsys):
    target = tmp_path / "r.json"
    assert main(["report", "--table", "H1", "--format", "json", "--output", str(target)]) == 0
    assert json.loads(target.read_text())[0]["table_id"] == "H1"
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]


def test_data_error_exit_and_no_partial_output(tmp_path, capsys):
    d = tmp_path / "data"
    shutil.copytree(shipped_data_dir(), d)
    p = d / "intensity.csv"
    lines = p.read_text().splitlines()
    idx = next(i for i, ln in enumerate(lines) if ln.startswith("LFP,cobalt"))
    lines[idx] = "LFP,cobalt,1.5,,"
    p.write_text("\n".join(lines) + "\n")
    out = tmp_path / "out.csv"
    rc = main(["capacity", "--data-dir", str(d), "--output", str(out)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "intensity.csv" in err and "LFP" in err
    assert not out.exists()
    assert [x.name for x in tmp_path.iterdir()] == ["data"]


def test_bad_line_is_located(tmp_path, capsys, monkeypatch):
    d = tmp_path / "data"
    shutil.copytree(shipped_data_dir(), d)
    p = d / "reserves.csv"
    p.write_text(p.read_text() + "cobalt,Nowhere,us_mining,lots,\n")
    n = len(p.read_text().splitlines())
    monkeypatch.setenv("MINERAL_GAP_DATA_DIR", str(d))
    rc = main(["scenarios"])
    assert rc == 2
    assert f"reserves.csv:{n}" in capsys.readouterr().err


def test_console_script_subprocess():
    res = subprocess.run([sys.executable, "-m", "mineral_gap.cli", "capacity"], capture_output=True, text=True)
    assert res.returncode == 0 and "NMC811" in res.stdout
