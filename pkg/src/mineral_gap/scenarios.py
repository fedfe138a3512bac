"""EV share required by the tailpipe standard and the low/medium/high sales paths."""
from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .ids import DataError, ScenarioKind

FIRST_YEAR = 2022
TARGET_YEAR = 2032
YEARS = tuple(range(FIRST_YEAR, TARGET_YEAR + 1))


@dataclass(frozen=True)
class FuelAssumptions:
    fuel_emissions_rate: float = 73.0  # g CO2 / MJ
    icev_mpg: float = 66.40
    hev_mpg: float = 75.0
    gasoline_energy: float = 119.9552217  # MJ / gal, calibrated
    target_gpm: float = 82.0

    def __post_init__(self):
        for name in ("fuel_emissions_rate", "icev_mpg", "hev_mpg", "gasoline_energy", "target_gpm"):
            if not getattr(self, name) > 0:
                raise DataError(f"{name} must be positive")

    @property
    def tailpipe_gpm(self) -> float:
        return self.fuel_emissions_rate * self.gasoline_energy / self.icev_mpg


def solve_penetration(assumptions: FuelAssumptions) -> float:
    """EV share of new sales that brings the fleet average down to the target.

    EVs count as zero tailpipe grams and every other new vehicle is an ICEV.
    A target the ICEV fleet already meets needs no EVs.
    """
    tailpipe = assumptions.tailpipe_gpm
    if tailpipe <= assumptions.target_gpm:
        return 0.0
    return 1.0 - assumptions.target_gpm / tailpipe


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SalesScenario:
    kind: ScenarioKind
    total_sales: Mapping[int, int]
    ev_share: Mapping[int, float]
    ev_sales: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.ev_sales:
            object.__setattr__(
                self, "ev_sales",
                {y: _round_half_up(self.ev_share[y] * self.total_sales[y]) for y in self.years},
            )
        for y, s in self.ev_share.items():
            if not 0.0 <= s <= 1.0:
                raise DataError(f"EV share {s} outside [0, 1] in {y}")

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(sorted(self.ev_share))


def build_scenario(
    kind,
    total_sales: Mapping[int, int],
    base_share_2022: float,
    target_share: float,
    anchors: Mapping[int, float] | None = None,
) -> SalesScenario:
    """EV share path for one scenario kind.

    ``anchors`` maps an intermediate year to a multiple of the base share and
    only shapes the medium path (default: doubling in 2024 and again in 2027).
    """
    kind = ScenarioKind.parse(kind) if isinstance(kind, str) else ScenarioKind(kind)
    missing = [y for y in YEARS if y not in total_sales]
    if missing:
        raise DataError(f"total_sales missing year(s) {missing}")
    if not 0.0 < base_share_2022 < target_share < 1.0:
        raise DataError(f"need 0 < base share ({base_share_2022}) < target ({target_share}) < 1")

    if kind is ScenarioKind.LOW:
        share = {y: base_share_2022 for y in YEARS}
    elif kind is ScenarioKind.HIGH:
        share = {y: target_share for y in YEARS}
        share[FIRST_YEAR] = base_share_2022
    else:
        anchors = {2024: 2.0, 2027: 4.0} if anchors is None else anchors
        points = {FIRST_YEAR: base_share_2022, TARGET_YEAR: target_share}
        points.update({int(y): base_share_2022 * float(k) for y, k in anchors.items()})
        share = _interpolate(points)
    share[TARGET_YEAR] = target_share
    return SalesScenario(kind, {y: int(total_sales[y]) for y in YEARS}, share)


def _interpolate(points: Mapping[int, float]) -> dict[int, float]:
    xs = sorted(points)
    out = {}
    for lo, hi in zip(xs, xs[1:]):
        for y in range(lo, hi + 1):
            out[y] = points[lo] + (points[hi] - points[lo]) * (y - lo) / (hi - lo)
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    fuel: FuelAssumptions
    total_sales: Mapping[int, int]
    base_share_2022: float
    anchors: Mapping[int, float]
    target_override: float | None = None

    @property
    def target_share(self) -> float:
        if self.target_override is not None:
            return self.target_override
        return solve_penetration(self.fuel)

    def scenario(self, kind) -> SalesScenario:
        return build_scenario(kind, self.total_sales, self.base_share_2022, self.target_share, self.anchors)

    def all_scenarios(self) -> dict[ScenarioKind, SalesScenario]:
        return {k: self.scenario(k) for k in ScenarioKind}


def read_scenario_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError("file not found", str(path)) from None
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}") from None
    try:
        fuel = FuelAssumptions(**raw.get("fuel", {}))
        total = {int(y): int(v) for y, v in raw["total_sales"].items()}
        if "base_share_2022" in raw:
            base = float(raw["base_share_2022"])
        else:
            base = int(raw["ev_sales_2022"]) / total[FIRST_YEAR]
        anchors = {int(y): float(k) for y, k in raw.get("anchors", {"2024": 2, "2027": 4}).items()}
        target = raw.get("target_share")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise DataError(str(exc), str(path)) from None
        raise DataError(f"bad scenario config: {exc!r}", str(path)) from None
    return ScenarioConfig(fuel, total, base, anchors, None if target is None else float(target))
