"""Battery-mineral supply gap model: pack ceilings, EV shortfalls and their emissions cost."""
from .ids import CHEMISTRIES, MINERALS, REPORT_YEARS, SCENARIOS, Chemistry, DataError, Mineral, ScenarioKind
from .model import Model, load_model
from .reports import ReportBundle, build_report, diff_against_golden

__all__ = [
    "CHEMISTRIES", "MINERALS", "REPORT_YEARS", "SCENARIOS", "Chemistry", "DataError", "Mineral", "ScenarioKind",
    "Model", "load_model", "ReportBundle", "build_report", "diff_against_golden",
]
__version__ = "0.1.0"
