"""Resolution pathways: production thresholds, the graphite ramp, HEV substitution."""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from .capacity import MixSchedule, mix_bottleneck
from .emissions import HEV
from .ids import MINERALS, REPORT_YEARS, Chemistry, DataError, Mineral, ScenarioKind
from .scenarios import SalesScenario
from .supply import SupplyTable, _rows, parse_decimal

# cancellation condition number above which a supplement value is reported as unstable
ILL_CONDITIONED = 50.0


@dataclass(frozen=True)
class ProductionThreshold:
    mineral: Mineral
    current: float  # t/yr
    required_min: float
    required_max: float
    multiplier: float  # at required_max; see multiplier_range

    multiplier_range: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if min(self.current, self.required_min, self.required_max) < 0:
            raise DataError(f"negative threshold for {self.mineral}")
        if self.required_min > self.required_max:
            raise DataError("required_min above required_max")

    @property
    def exceeds_current(self) -> bool:
        return self.required_max > self.current

    @property
    def min_exceeds_current(self) -> bool:
        return self.required_min > self.current


def required_production(
    target_evs: float,
    max_evs,
    supply: SupplyTable,
    minerals: Iterable[Mineral] = MINERALS,
) -> list[ProductionThreshold]:
    """Production each mineral needs so that ``target_evs`` packs can be built.

    ``max_evs`` is either one deployment ceiling shared by every mineral or a
    per-mineral map (supply divided by per-vehicle content). Minerals absent
    from a per-mineral map are unconstrained and skipped.
    """
    out = []
    for m in minerals:
        if isinstance(max_evs, Mapping):
            if m not in max_evs:
                continue
            cap = max_evs[m]
        else:
            cap = max_evs
        if not cap > 0:
            raise DataError(f"max deployment for {m} must be positive")
        current = float(supply.production[m])
        k = target_evs / cap
        out.append(ProductionThreshold(m, current, k * current, k * current, k, (k, k)))
    return out


def threshold_range(
    target_evs: float,
    supply: SupplyTable,
    mix: MixSchedule,
    intensities,
    years: Iterable[int] = REPORT_YEARS,
    minerals: Iterable[Mineral] = (Mineral.GRAPHITE, Mineral.COBALT),
) -> dict[Mineral, ProductionThreshold]:
    """Smallest and largest requirement per mineral across the mix years."""
    per_year = {}
    for y in years:
        caps = mix_bottleneck(supply.kg(), mix, intensities, y).per_mineral_ceiling
        per_year[y] = {t.mineral: t for t in required_production(target_evs, caps, supply, minerals)}
    out = {}
    for m in minerals:
        rows = [per_year[y][m] for y in per_year if m in per_year[y]]
        if not rows:
            continue
        lo = min(rows, key=lambda t: t.required_max)
        hi = max(rows, key=lambda t: t.required_max)
        out[m] = ProductionThreshold(m, lo.current, lo.required_max, hi.required_max, hi.multiplier,
                                     (lo.multiplier, hi.multiplier))
    return out


def threshold_years(target_evs, supply, mix, intensities, mineral: Mineral, years=REPORT_YEARS) -> dict[int, float]:
    """Per-year requirement for one mineral (the series behind threshold_range)."""
    out = {}
    for y in years:
        caps = mix_bottleneck(supply.kg(), mix, intensities, y).per_mineral_ceiling
        out[y] = required_production(target_evs, caps, supply, [mineral])[0].required_max
    return out


@dataclass(frozen=True)
class GraphiteRamp:
    schedule: Mapping[int, float]  # t/yr
    monotone_through: int = 2028

    def __post_init__(self):
        sched = {int(y): float(v) for y, v in sorted(self.schedule.items())}
        if any(v < 0 for v in sched.values()):
            raise DataError("negative ramp value")
        head = [v for y, v in sched.items() if y <= self.monotone_through]
        if any(b < a for a, b in zip(head, head[1:])):
            raise DataError(f"ramp must not fall before {self.monotone_through}")
        object.__setattr__(self, "schedule", MappingProxyType(sched))


def read_ramp(path) -> GraphiteRamp:
    sched = {}
    for origin, row in _rows(path, ("year", "tons")):
        try:
            year = int(row["year"])
        except ValueError:
            raise DataError(f"bad year {row['year']!r}", origin) from None
        if year in sched:
            raise DataError(f"duplicate year {year}", origin)
        sched[year] = float(parse_decimal(row["tons"], origin))
    try:
        return GraphiteRamp(sched)
    except DataError as exc:
        raise DataError(str(exc), str(path)) from None


def ramp_sufficiency(ramp: GraphiteRamp, required: float) -> dict[int, bool]:
    return {y: v >= required for y, v in ramp.schedule.items()}


# ------------------------------------------------------------ HEV substitution


def _benefit(benefits, key, year):
    try:
        return benefits[key][year]
    except KeyError:
        raise DataError(f"no {key} benefit for {year}") from None


def desired_benefit(scenario: SalesScenario, benefits, reference_ev=Chemistry.NMC811, years=REPORT_YEARS) -> dict[int, float]:
    return {y: scenario.ev_sales[y] * _benefit(benefits, reference_ev, y) for y in years}


def hev_only_requirement(
    scenario: SalesScenario,
    benefits: Mapping,
    reference_ev=Chemistry.NMC811,
    years: Iterable[int] = REPORT_YEARS,
) -> dict[int, float | None]:
    """HEVs that replace the reference EVs one benefit-for-benefit.

    ``benefits`` maps powertrain -> year -> t CO2e per vehicle. Years with a
    non-positive HEV benefit are infeasible and map to None.
    """
    desired = desired_benefit(scenario, benefits, reference_ev, years)
    out = {}
    for y, eb in desired.items():
        h = _benefit(benefits, HEV, y)
        out[y] = eb / h if h > 0 else None
    return out


def min_ev_supplement(
    scenario: SalesScenario,
    benefits: Mapping,
    light_duty_sales: Mapping[int, float],
    reference_ev=Chemistry.NMC811,
    years: Iterable[int] = REPORT_YEARS,
) -> dict[int, float | None]:
    """Fewest EVs that, with HEVs making up the rest of sales, keep the desired benefit.

    The balance v*EB_ev + (LD - v)*EB_hev = EB_desired is linear in v, so the
    minimum is its root clamped to [0, LD]. None marks a degenerate year
    (EV benefit not above HEV benefit).
    """
    desired = desired_benefit(scenario, benefits, reference_ev, years)
    out = {}
    for y, eb in desired.items():
        e, h, ld = _benefit(benefits, reference_ev, y), _benefit(benefits, HEV, y), light_duty_sales[y]
        if e <= h:
            out[y] = None
            continue
        out[y] = min(max(0.0, (eb - ld * h) / (e - h)), float(ld))
    return out


def supplement_condition(
    scenario: SalesScenario,
    benefits: Mapping,
    light_duty_sales: Mapping[int, float],
    reference_ev=Chemistry.NMC811,
    years: Iterable[int] = REPORT_YEARS,
) -> dict[int, float]:
    """Relative condition number of the supplement root.

    Sum of the cancellation factors of numerator and denominator; a value of
    100 means a 0.01% error in a benefit can move the answer by about 1%.
    A clamped zero is insensitive and scores 0.
    """
    desired = desired_benefit(scenario, benefits, reference_ev, years)
    out = {}
    for y, eb in desired.items():
        e, h, ld = _benefit(benefits, reference_ev, y), _benefit(benefits, HEV, y), light_duty_sales[y]
        num = eb - ld * h
        if e <= h:
            out[y] = float("inf")
        elif num <= 0:
            out[y] = 0.0
        else:
            out[y] = (abs(eb) + abs(ld * h)) / abs(num) + (abs(e) + abs(h)) / (e - h)
    return out


def substitution_residual(ev_count, light_duty: float, eb_ev: float, eb_hev: float, eb_desired: float) -> float:
    """Relative imbalance of the benefit identity for a supplement value."""
    achieved = ev_count * eb_ev + (light_duty - ev_count) * eb_hev
    return abs(achieved - eb_desired) / abs(eb_desired) if eb_desired else abs(achieved)


@dataclass(frozen=True)
class HevPlan:
    scenario: ScenarioKind
    desired_hevs: Mapping[int, float | None]
    min_evs: Mapping[int, float | None]
    feasible: Mapping[int, bool]  # desired HEVs fit within projected sales
    condition: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for y, v in self.desired_hevs.items():
            if v is not None and v < 0:
                raise DataError(f"negative desired HEVs in {y}")

    @property
    def ill_conditioned(self) -> tuple[int, ...]:
        return tuple(y for y, k in self.condition.items() if k > ILL_CONDITIONED)


def plan_hev_pathway(
    scenario: SalesScenario,
    benefits: Mapping,
    light_duty_sales: Mapping[int, float] | None = None,
    reference_ev=Chemistry.NMC811,
    years: Iterable[int] = REPORT_YEARS,
) -> HevPlan:
    years = tuple(years)
    ld = scenario.total_sales if light_duty_sales is None else light_duty_sales
    hevs = hev_only_requirement(scenario, benefits, reference_ev, years)
    evs = min_ev_supplement(scenario, benefits, ld, reference_ev, years)
    for y, v in evs.items():
        if v is not None and v > ld[y]:
            raise DataError(f"supplement exceeds sales in {y}")
    feasible = {y: v is not None and v <= ld[y] for y, v in hevs.items()}
    cond = supplement_condition(scenario, benefits, ld, reference_ev, years)
    return HevPlan(scenario.kind, MappingProxyType(hevs), MappingProxyType(evs), MappingProxyType(feasible),
                   MappingProxyType(cond))

