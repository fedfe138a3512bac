import json
import math

import pytest

from mineral_gap.ids import DataError, ScenarioKind
from mineral_gap.reports import (
    TABLE_IDS, Table, Tolerance, build_report, diff_against_golden, emit_plot_series, normalize_table_id, render,
)


def test_every_table_builds(report):
    assert tuple(report.tables) == TABLE_IDS


def test_golden_diff_passes(report):
    d = diff_against_golden(report)
    assert d.passed, d.summary()
    assert not d.missing_cells


def test_table_ids_normalise():
    assert normalize_table_id("t3_2") == "T3.2"
    assert normalize_table_id("3.2") == "T3.2"
    with pytest.raises(DataError):
        normalize_table_id("T9.9")


def test_scenario_filter(model):
    b = build_report(model, ["T5.3"], "low")
    labels = b["T5.3"].labels()
    assert "low desired" in labels and not any(lab.startswith("medium") for lab in labels)
    assert diff_against_golden(b).passed


def test_json_has_no_nan(report):
    data = json.loads(render(report, "json"))
    assert {t["table_id"] for t in data} == set(TABLE_IDS)


def test_csv_and_text_render(report):
    csv_text = render(report, "csv")
    assert csv_text.splitlines()[0].startswith("table_id,row,column,value")
    assert "T3.2" in render(report, "table")
    with pytest.raises(DataError):
        render(report, "xml")


def test_plot_series_rows(report):
    rows = emit_plot_series(report, "T6.5")
    assert all(isinstance(x, str) and isinstance(y, float) for x, y, _ in rows)


def test_tolerance_kinds():
    assert Tolerance("rel", 0.01).deviation(101, 100) == pytest.approx(0.01)
    assert Tolerance("abs", 0.01).deviation(1.005, 1.0) == pytest.approx(0.005)
    assert Tolerance("ratio", 3).deviation(10, 30) == pytest.approx(3)
    assert math.isinf(Tolerance("ratio", 3).deviation(0, 30))
    assert Tolerance("exact").deviation("graphite", "graphite") == 0


def test_table_row_width_checked():
    t = Table("X", "x", ["a", "b"])
    with pytest.raises(ValueError):
        t.add("r", [1])


def test_diff_detects_a_wrong_cell(model, tmp_path):
    from mineral_gap.model import shipped_data_dir
    import shutil
    gold = tmp_path / "golden"
    shutil.copytree(shipped_data_dir() / "golden", gold)
    p = gold / "T3_3.csv"
    text = p.read_text().splitlines()
    head, first = text[0], text[1].split(",")
    first[1] = str(float(first[1]) + 1)
    p.write_text("\n".join([head, ",".join(first)] + text[2:]) + "\n")
    d = diff_against_golden(build_report(model, ["T3.3"]), gold)
    assert not d.passed and len(d.failures()) == 1
