"""Battery-pack ceilings implied by mineral supply.

Supplies enter as kilograms per mineral (``SupplyTable.kg``); pack contents
are kilograms per pack. A pack ceiling is supply / content for the scarcest
mineral, floored to whole packs.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np
from scipy.optimize import nnls

from . import simplex
from .ids import CHEMISTRIES, MINERALS, Chemistry, DataError, Mineral, ScenarioKind
from .scenarios import SalesScenario
from .supply import _rows, parse_decimal

REFERENCE_PACK_KWH = 75.0
REFERENCE_RANGE_MILES = 300.0
MIX_SUM_TOLERANCE = 1e-2


@dataclass(frozen=True)
class ChemistryIntensity:
    chemistry: Chemistry
    content: Mapping[Mineral, float]
    pack_kwh: float = REFERENCE_PACK_KWH
    range_miles: float = REFERENCE_RANGE_MILES
    lower: Mapping[Mineral, float] | None = None
    upper: Mapping[Mineral, float] | None = None

    def __post_init__(self):
        content = {m: float(self.content.get(m, 0.0)) for m in MINERALS}
        if any(v < 0 for v in content.values()):
            raise DataError(f"{self.chemistry}: negative mineral content")
        object.__setattr__(self, "content", MappingProxyType(content))

    def scaled(self, factor: float) -> "ChemistryIntensity":
        """Contents for a pack ``factor`` times the kWh (content is linear in kWh)."""
        def sc(d):
            return None if d is None else {m: v * factor for m, v in d.items()}
        return replace(
            self, content=sc(self.content), pack_kwh=self.pack_kwh * factor,
            lower=sc(self.lower), upper=sc(self.upper),
        )


def check_intensity(intensity: ChemistryIntensity, tol: float = 0.005 + 1e-9) -> None:
    """Composition rules of the six chemistries; bounded contents sit at the bound midpoint."""
    c, chem = intensity.content, intensity.chemistry
    zero = {
        Chemistry.LFP: (Mineral.COBALT, Mineral.NICKEL, Mineral.MANGANESE),
        Chemistry.NCA: (Mineral.MANGANESE,),
    }.get(chem, ())
    for m in zero:
        if c[m] != 0:
            raise DataError(f"{chem} must contain no {m}")
    if chem is not Chemistry.LFP and c[Mineral.PHOSPHATE] != 0:
        raise DataError(f"{chem}: phosphate is only used by LFP")
    if intensity.lower and intensity.upper:
        for m, lo in intensity.lower.items():
            mid = (lo + intensity.upper[m]) / 2
            if abs(c[m] - mid) > tol:
                raise DataError(f"{chem} {m}: content {c[m]} is not the mean of bounds {lo}-{intensity.upper[m]}")


def read_intensities(path) -> dict[Chemistry, ChemistryIntensity]:
    content: dict[Chemistry, dict] = {}
    lower: dict[Chemistry, dict] = {}
    upper: dict[Chemistry, dict] = {}
    for origin, row in _rows(path, ("chemistry", "mineral", "kg")):
        try:
            chem, m = Chemistry.parse(row["chemistry"]), Mineral.parse(row["mineral"])
        except DataError as exc:
            raise DataError(str(exc), origin) from None
        if m in content.setdefault(chem, {}):
            raise DataError(f"duplicate content for {chem}/{m}", origin)
        content[chem][m] = float(parse_decimal(row["kg"], origin))
        lo, hi = row.get("low", ""), row.get("high", "")
        if lo or hi:
            if not (lo and hi):
                raise DataError("bounds need both low and high", origin)
            lower.setdefault(chem, {})[m] = float(parse_decimal(lo, origin))
            upper.setdefault(chem, {})[m] = float(parse_decimal(hi, origin))
    out = {}
    for chem, c in content.items():
        missing = [m for m in MINERALS if m not in c]
        if missing:
            raise DataError(f"{chem} missing content for {', '.join(map(str, missing))}", str(path))
        out[chem] = ChemistryIntensity(chem, c, lower=lower.get(chem), upper=upper.get(chem))
        try:
            check_intensity(out[chem])
        except DataError as exc:
            raise DataError(str(exc), str(path)) from None
    return out


# ------------------------------------------------------------ market mix


@dataclass(frozen=True)
class MixSchedule:
    """Chemistry shares per year.

    Published schedules are rounded to 0.1 pp and several years sum to
    0.994-1.001; they are kept as given and only checked against
    ``sum_tolerance``.
    """

    shares: Mapping[int, Mapping[Chemistry, float]]
    sum_tolerance: float = MIX_SUM_TOLERANCE

    def __post_init__(self):
        clean = {}
        for year, row in self.shares.items():
            row = {c: float(row.get(c, 0.0)) for c in CHEMISTRIES}
            if any(v < 0 for v in row.values()):
                raise DataError(f"negative chemistry share in {year}")
            total = sum(row.values())
            if abs(total - 1.0) > self.sum_tolerance:
                raise DataError(f"shares for {year} sum to {total:.6f}")
            clean[int(year)] = MappingProxyType(row)
        object.__setattr__(self, "shares", MappingProxyType(dict(sorted(clean.items()))))

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(self.shares)

    def share(self, year: int, chem: Chemistry) -> float:
        return self.shares[year][chem]

    def weighted_content(self, intensities: Mapping[Chemistry, ChemistryIntensity], year: int) -> dict[Mineral, float]:
        """Per-vehicle kg of each mineral for the year's chemistry mix."""
        try:
            row = self.shares[year]
        except KeyError:
            raise DataError(f"mix has no shares for {year}") from None
        return {
            m: sum(intensities[c].content[m] * s for c, s in row.items() if s)
            for m in MINERALS
        }


def read_mix(path, sum_tolerance: float = MIX_SUM_TOLERANCE) -> MixSchedule:
    shares: dict[int, dict[Chemistry, float]] = {}
    for origin, row in _rows(path, ("year", "chemistry", "share")):
        try:
            year = int(row["year"])
            chem = Chemistry.parse(row["chemistry"])
        except (ValueError, DataError) as exc:
            raise DataError(str(exc), origin) from None
        if chem in shares.setdefault(year, {}):
            raise DataError(f"duplicate share for {year}/{chem}", origin)
        shares[year][chem] = float(parse_decimal(row["share"], origin))
    try:
        return MixSchedule(shares, sum_tolerance)
    except DataError as exc:
        raise DataError(str(exc), str(path)) from None


# ------------------------------------------------------------ ceilings


@dataclass(frozen=True)
class CapacityResult:
    """Ceiling for one chemistry (or a market mix when ``chemistry`` is None)."""

    chemistry: Chemistry | None
    per_mineral_ceiling: Mapping[Mineral, float]
    ceiling: int
    limiting_mineral: Mineral


def _bottleneck(supply_kg: Mapping[Mineral, float], content: Mapping[Mineral, float], chem) -> CapacityResult:
    per = {m: supply_kg[m] / content[m] for m in MINERALS if content.get(m, 0) > 0}
    if not per:
        raise DataError("no mineral has nonzero content; the ceiling is unconstrained")
    limiting = min(per, key=lambda m: (per[m], MINERALS.index(m)))
    return CapacityResult(chem, MappingProxyType(per), math.floor(per[limiting]), limiting)


def chemistry_ceiling(supply_kg: Mapping[Mineral, float], intensity: ChemistryIntensity) -> CapacityResult:
    return _bottleneck(supply_kg, intensity.content, intensity.chemistry)


def all_ceilings(supply_kg, intensities: Mapping[Chemistry, ChemistryIntensity]) -> dict[Chemistry, CapacityResult]:
    return {c: chemistry_ceiling(supply_kg, intensities[c]) for c in CHEMISTRIES if c in intensities}


def optimal_chemistry(supply_kg, intensities) -> tuple[Chemistry, CapacityResult]:
    best = None
    for chem, res in all_ceilings(supply_kg, intensities).items():
        if best is None or res.ceiling > best[1].ceiling:
            best = (chem, res)
    if best is None:
        raise DataError("no chemistries supplied")
    return best


def joint_allocation(
    supply_kg: Mapping[Mineral, float],
    intensities: Mapping[Chemistry, ChemistryIntensity],
    allowed: Iterable[Chemistry],
) -> dict[Chemistry, int]:
    """Packs per chemistry maximising the total pack count under every mineral limit.

    Solved as a continuous LP; counts are floored for reporting, which keeps
    the floored allocation feasible.
    """
    sol = solve_allocation(supply_kg, intensities, allowed)
    return {c: math.floor(v) for c, v in sol.items()}


def solve_allocation(supply_kg, intensities, allowed) -> dict[Chemistry, float]:
    chems = [c for c in CHEMISTRIES if c in set(allowed)]
    if not chems:
        raise DataError("joint allocation needs at least one chemistry")
    rows = [m for m in MINERALS if any(intensities[c].content[m] > 0 for c in chems)]
    A = [[intensities[c].content[m] for c in chems] for m in rows]
    b = [supply_kg[m] for m in rows]
    sol = simplex.maximize([1.0] * len(chems), A, b)
    return {c: float(v) for c, v in zip(chems, sol.x)}


# ------------------------------------------------------------ demand


@dataclass(frozen=True)
class DemandTable:
    scenario: ScenarioKind
    demand: Mapping[tuple[Mineral, int], float]  # metric tons
    years: tuple[int, ...]
    mix: MixSchedule = field(repr=False, compare=False)

    def row(self, mineral: Mineral) -> list[float]:
        return [self.demand[mineral, y] for y in self.years]

    def annual_average(self, mineral: Mineral) -> float:
        return sum(self.row(mineral)) / len(self.years)


def mix_demand(
    scenario: SalesScenario,
    mix: MixSchedule,
    intensities: Mapping[Chemistry, ChemistryIntensity],
    years: Iterable[int] | None = None,
) -> DemandTable:
    years = tuple(mix.years if years is None else years)
    if not years:
        raise DataError("no demand years")
    gaps = [y for y in range(min(years), max(years) + 1) if y not in mix.shares]
    if gaps:
        raise DataError(f"mix has a gap at {gaps}")
    missing = [y for y in years if y not in scenario.ev_sales]
    if missing:
        raise DataError(f"scenario has no EV sales for {missing}")
    demand = {}
    for y in years:
        w = mix.weighted_content(intensities, y)
        for m in MINERALS:
            demand[m, y] = w[m] * scenario.ev_sales[y] / 1000.0
    return DemandTable(scenario.kind, MappingProxyType(demand), years, mix)


def mix_bottleneck(supply_kg, mix: MixSchedule, intensities, year: int) -> CapacityResult:
    return _bottleneck(supply_kg, mix.weighted_content(intensities, year), None)


def mix_ceiling(supply_kg, mix: MixSchedule, intensities, year: int) -> int:
    return mix_bottleneck(supply_kg, mix, intensities, year).ceiling


def recover_mix_shares(
    per_vehicle: Mapping[int, Mapping[Mineral, float]],
    intensities: Mapping[Chemistry, ChemistryIntensity],
) -> MixSchedule:
    """Chemistry shares that best explain observed per-vehicle mineral loads.

    Non-negative least squares on relative residuals, one year at a time.
    Used to recover the unrounded shares behind published demand tables.
    """
    C = np.array([[intensities[c].content[m] for c in CHEMISTRIES] for m in MINERALS])
    out = {}
    for year, loads in per_vehicle.items():
        w = np.array([loads[m] for m in MINERALS])
        keep = w > 0
        s, _ = nnls(C[keep] / w[keep, None], np.ones(keep.sum()))
        out[year] = dict(zip(CHEMISTRIES, (float(v) for v in s)))
    return MixSchedule(out)


# ------------------------------------------------------------ shortfall


@dataclass(frozen=True)
class ShortfallRecord:
    scenario: ScenarioKind
    year: int | None  # None for the multi-year aggregate
    desired_evs: int
    possible_evs: int

    @property
    def shortfall(self) -> int:
        return max(0, self.desired_evs - self.possible_evs)


def compute_shortfall(
    scenario: SalesScenario,
    possible_per_year: Mapping[int, int],
    years: Iterable[int] | None = None,
) -> tuple[list[ShortfallRecord], ShortfallRecord]:
    """Per-year EV shortfall plus the aggregate over the same years."""
    years = tuple(possible_per_year if years is None else years)
    records = []
    for y in years:
        possible = possible_per_year[y]
        if possible < 0:
            raise DataError(f"negative possible EVs in {y}")
        records.append(ShortfallRecord(scenario.kind, y, scenario.ev_sales[y], int(possible)))
    total = ShortfallRecord(
        scenario.kind, None,
        sum(r.desired_evs for r in records), sum(r.possible_evs for r in records),
    )
    return records, total


def aggregate_shortfall(records: Iterable[ShortfallRecord]) -> int:
    return sum(r.shortfall for r in records)


# ------------------------------------------------------------ sensitivities


@dataclass(frozen=True)
class DownsizeResult:
    per_mineral_intensity: Mapping[Mineral, float]  # kg per vehicle
    binding_mineral: Mineral
    implied_pack_kwh: float


def downsize(supply_kg: Mapping[Mineral, float], desired_evs: float, reference: ChemistryIntensity) -> DownsizeResult:
    """Largest pack of the reference chemistry that lets ``desired_evs`` packs be built."""
    if desired_evs <= 0:
        raise DataError("desired_evs must be positive")
    allowed = {m: supply_kg[m] / desired_evs for m in MINERALS}
    used = [m for m in MINERALS if reference.content[m] > 0]
    binding = min(used, key=lambda m: allowed[m] / reference.content[m])
    kwh = reference.pack_kwh * allowed[binding] / reference.content[binding]
    return DownsizeResult(MappingProxyType(allowed), binding, kwh)


@dataclass(frozen=True)
class FleetMix:
    sedan_fraction: float = 0.29
    truck_fraction: float = 0.71
    truck_pack_kwh: float = 100.0

    def __post_init__(self):
        if min(self.sedan_fraction, self.truck_fraction) < 0:
            raise DataError("fleet fractions must be non-negative")
        if abs(self.sedan_fraction + self.truck_fraction - 1.0) > 1e-9:
            raise DataError("sedan and truck fractions must sum to 1")
        if self.truck_pack_kwh < REFERENCE_PACK_KWH:
            raise DataError("truck pack cannot be smaller than the sedan reference pack")


SEDAN_FLEET = FleetMix(1.0, 0.0, REFERENCE_PACK_KWH)
MIXED_FLEET = FleetMix()


def heavier_fleet_intensity(base: ChemistryIntensity, fleet: FleetMix) -> ChemistryIntensity:
    factor = fleet.sedan_fraction + fleet.truck_fraction * fleet.truck_pack_kwh / base.pack_kwh
    return base.scaled(factor)


def fleet_intensities(intensities, fleet: FleetMix) -> dict[Chemistry, ChemistryIntensity]:
    return {c: heavier_fleet_intensity(i, fleet) for c, i in intensities.items()}
