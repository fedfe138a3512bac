import csv
from pathlib import Path

import pytest

from mineral_gap.model import load_model, shipped_data_dir
from mineral_gap.reports import build_report

GOLDEN = shipped_data_dir() / "golden"

# filled by test_acceptance; printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def model():
    return load_model(shipped_data_dir()).load_all()


@pytest.fixture(scope="session")
def report(model):
    return build_report(model)


def golden(table_id: str) -> dict[tuple[str, str], str]:
    path = Path(GOLDEN) / (table_id.replace(".", "_") + ".csv")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0][1:]
    return {(r[0], c): v for r in rows[1:] for c, v in zip(head, r[1:]) if v.strip()}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
