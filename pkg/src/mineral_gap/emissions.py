"""Per-mile and per-vehicle lifecycle emissions by powertrain and year.

Manufacturing, disposal and maintenance emissions are spread over the
aggregate utilisation ``au``; the fuel term is either the gasoline fuel cycle
(ICEV, HEV) or grid electricity (EVs, one per battery chemistry).
"""
from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType

import numpy as np
from scipy.optimize import least_squares

from .capacity import ShortfallRecord
from .ids import CHEMISTRIES, REPORT_YEARS, Chemistry, DataError

ICEV = "ICEV"
HEV = "HEV"
POWERTRAINS: tuple = (ICEV, HEV) + CHEMISTRIES
HEV_MPG_CAP = 75.0
KWH_PER_MJ = 1 / 3.6


def parse_powertrain(name):
    """'ICEV', 'HEV', a chemistry name, or 'EV <chemistry>'."""
    if isinstance(name, Chemistry) or name in (ICEV, HEV):
        return name
    key = str(name).strip()
    if key.upper() in (ICEV, HEV):
        return key.upper()
    if key.upper().startswith("EV"):
        key = key[2:].strip(" -_")
    return Chemistry.parse(key)


def _label(p) -> str:
    return p if isinstance(p, str) and p in (ICEV, HEV) else str(p)


@dataclass(frozen=True)
class EmissionsParams:
    e_vm: Mapping  # powertrain -> t CO2e per vehicle
    au: float  # miles
    ec_g: float  # MJ/gal
    e_fp: float  # g CO2e / MJ
    e_fu: float  # g CO2e / MJ
    e_vd: float = 0.0  # g CO2e per vehicle
    e_mr: float = 0.0

    def __post_init__(self):
        e_vm = {parse_powertrain(k): float(v) for k, v in self.e_vm.items()}
        if any(v < 0 for v in e_vm.values()):
            raise DataError("negative manufacturing emissions")
        for name in ("ec_g", "e_fp", "e_fu", "e_vd", "e_mr"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be non-negative")
        if not self.au > 0:
            raise DataError("au must be positive")
        object.__setattr__(self, "e_vm", MappingProxyType(e_vm))


@dataclass(frozen=True)
class Trajectories:
    icev_mpg: Mapping[int, float]
    hev_mpg: Mapping[int, float]
    ev_mpge: Mapping[int, float]
    grid_rate: Mapping[int, float]  # g CO2e / kWh
    grid_baseline_2005: float | None = None
    grid_reduction: float = 0.5

    def __post_init__(self):
        for name in ("icev_mpg", "hev_mpg", "ev_mpge", "grid_rate"):
            clean = {int(y): float(v) for y, v in getattr(self, name).items()}
            if any(v <= 0 for v in clean.values()):
                raise DataError(f"{name} must be positive")
            object.__setattr__(self, name, MappingProxyType(dict(sorted(clean.items()))))
        over = {y: v for y, v in self.hev_mpg.items() if v > HEV_MPG_CAP + 1e-9}
        if over:
            raise DataError(f"HEV fuel economy above the {HEV_MPG_CAP:g} mpg cap in {sorted(over)}")
        window = [self.grid_rate[y] for y in REPORT_YEARS if y in self.grid_rate]
        if any(b >= a for a, b in zip(window, window[1:])):
            raise DataError("grid rate must fall every year 2027-2032")
        if self.grid_baseline_2005 is not None and 2030 in self.grid_rate:
            want = (1 - self.grid_reduction) * self.grid_baseline_2005
            if abs(self.grid_rate[2030] - want) > 0.005 + 1e-9:
                raise DataError(f"grid rate 2030 {self.grid_rate[2030]} is not {want:.2f}")

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.icev_mpg) & set(self.hev_mpg) & set(self.ev_mpge) & set(self.grid_rate)))


def grid_trajectory(
    mode: str,
    years: Iterable[int],
    baseline_2005: float,
    reduction: float = 0.5,
    annual_change: float | None = None,
    anchor_year: int = 2030,
) -> dict[int, float]:
    """Grid intensity path through ``(1 - reduction) * baseline`` in ``anchor_year``.

    ``linear`` falls by a constant g/kWh each year; ``geometric`` by a
    constant ratio. ``annual_change`` is the decrement (linear) or ratio
    (geometric); left as None, the linear decrement is the one that starts
    from the baseline in 2005.
    """
    target = (1 - reduction) * baseline_2005
    if not 0 < reduction < 1:
        raise DataError("reduction must lie strictly between 0 and 1")
    if mode == "linear":
        step = (baseline_2005 - target) / (anchor_year - 2005) if annual_change is None else annual_change
        return {y: target - step * (y - anchor_year) for y in years}
    if mode == "geometric":
        if annual_change is None or not 0 < annual_change < 1:
            raise DataError("geometric mode needs an annual ratio in (0, 1)")
        return {y: target * annual_change ** (y - anchor_year) for y in years}
    raise DataError(f"unknown grid trajectory mode {mode!r}")


@dataclass(frozen=True)
class LifecycleResult:
    powertrain: object
    year: int
    per_mile: float  # g CO2e / mi
    per_vehicle: float  # t CO2e
    benefit_vs_icev: float  # t CO2e


def _fuel_term(params: EmissionsParams, traj: Trajectories, powertrain, year: int) -> float:
    try:
        if powertrain == ICEV:
            return (params.e_fp + params.e_fu) * params.ec_g / traj.icev_mpg[year]
        if powertrain == HEV:
            return (params.e_fp + params.e_fu) * params.ec_g / traj.hev_mpg[year]
        return traj.grid_rate[year] * KWH_PER_MJ * params.ec_g / traj.ev_mpge[year]
    except KeyError:
        raise DataError(f"no trajectory values for {year}") from None


def per_mile_emissions(params: EmissionsParams, traj: Trajectories, powertrain, year: int) -> float:
    powertrain = parse_powertrain(powertrain)
    try:
        e_vm = params.e_vm[powertrain]
    except KeyError:
        raise DataError(f"no manufacturing emissions for {_label(powertrain)}") from None
    fixed = (e_vm * 1e6 + params.e_vd + params.e_mr) / params.au
    return fixed + _fuel_term(params, traj, powertrain, year)


def lifecycle(params: EmissionsParams, traj: Trajectories, powertrain, year: int) -> LifecycleResult:
    powertrain = parse_powertrain(powertrain)
    pm = per_mile_emissions(params, traj, powertrain, year)
    pv = params.au / 1e6 * pm
    icev = params.au / 1e6 * per_mile_emissions(params, traj, ICEV, year)
    return LifecycleResult(powertrain, year, pm, pv, 0.0 if powertrain == ICEV else icev - pv)


def benefit_schedule(params, traj, powertrain, years: Iterable[int]) -> dict[int, float]:
    return {y: lifecycle(params, traj, powertrain, y).benefit_vs_icev for y in years}


def weighted_ev(params, traj, shares: Mapping[Chemistry, float], year: int) -> float:
    """Share-weighted EV lifecycle emissions; shares are normalised to sum to 1."""
    total = sum(shares.values())
    if total <= 0:
        raise DataError("chemistry shares sum to zero")
    return sum(s * lifecycle(params, traj, c, year).per_vehicle for c, s in shares.items()) / total


def emissions_shortfall(
    shortfalls: Iterable[ShortfallRecord],
    benefit: Mapping[int, float],
) -> tuple[dict[int, float], float]:
    """Tons of CO2e forgone per year, plus the total over the same years."""
    out = {}
    for rec in shortfalls:
        if rec.year is None:
            continue
        if rec.year not in benefit:
            raise DataError(f"no emissions benefit for {rec.year}")
        out[rec.year] = rec.shortfall * benefit[rec.year]
    return out, sum(out.values())


# ------------------------------------------------------------ calibration


@dataclass(frozen=True)
class Observation:
    kind: str  # per_mile | lifecycle | benefit
    powertrain: object
    year: int
    value: float


@dataclass
class CalibrationResult:
    params: EmissionsParams
    trajectories: Trajectories
    max_rel_error: float
    fitted_trajectory: dict = field(default_factory=dict)


def _predict(params, traj, obs: Observation) -> float:
    res = lifecycle(params, traj, obs.powertrain, obs.year)
    return {"per_mile": res.per_mile, "lifecycle": res.per_vehicle, "benefit": res.benefit_vs_icev}[obs.kind]


def calibrate(
    observations: list[Observation],
    partial: Trajectories,
    free_years: Mapping[str, Iterable[int]],
    ec_g: float,
    e_fu: float,
    start: Mapping | None = None,
) -> CalibrationResult:
    """Fit au, e_fp, per-powertrain e_vm and any missing trajectory points.

    ``free_years`` names trajectory entries (``icev_mpg``, ``hev_mpg``,
    ``grid_rate``) that are unknown and fitted alongside the parameters.
    Residuals are relative, so large and small table cells weigh alike.
    HEV fuel economy is bounded by the cap.
    """
    observations = [replace(o, powertrain=parse_powertrain(o.powertrain)) for o in observations]
    start = dict(start or {})
    used = [p for p in POWERTRAINS if any(o.powertrain == p for o in observations)]
    slots = [(name, y) for name, ys in free_years.items() for y in ys]
    guess = {"icev_mpg": 35.0, "hev_mpg": 50.0, "grid_rate": 330.0}

    x0 = [start.get("au", 170_000.0), start.get("e_fp", 20.0)]
    x0 += [start.get(_label(p), 10.0) for p in used]
    x0 += [guess[name] for name, _ in slots]
    lo = [1.0, 0.0] + [0.0] * len(used) + [1.0] * len(slots)
    hi = [np.inf, np.inf] + [np.inf] * len(used) + [HEV_MPG_CAP if n == "hev_mpg" else np.inf for n, _ in slots]

    def unpack(x):
        params = EmissionsParams(dict(zip(used, x[2:2 + len(used)])), x[0], ec_g, x[1], e_fu)
        series = {n: dict(getattr(partial, n)) for n in ("icev_mpg", "hev_mpg", "grid_rate")}
        for (name, y), v in zip(slots, x[2 + len(used):]):
            series[name][y] = v
        # bypass the monotone-grid check while iterating; it is applied on the result
        traj = object.__new__(Trajectories)
        for n, v in series.items():
            object.__setattr__(traj, n, v)
        object.__setattr__(traj, "ev_mpge", partial.ev_mpge)
        return params, traj, series

    def resid(x):
        params, traj, _ = unpack(x)
        return [(_predict(params, traj, o) - o.value) / o.value for o in observations]

    sol = least_squares(resid, x0, bounds=(lo, hi), x_scale="jac", xtol=1e-12, ftol=1e-12, gtol=1e-12)
    params, _, series = unpack(sol.x)
    traj = Trajectories(series["icev_mpg"], series["hev_mpg"], partial.ev_mpge, series["grid_rate"],
                        partial.grid_baseline_2005, partial.grid_reduction)
    fitted = {f"{n}:{y}": series[n][y] for n, y in slots}
    return CalibrationResult(params, traj, float(np.max(np.abs(sol.fun))), fitted)


# ------------------------------------------------------------ config file


def read_emissions_config(path) -> tuple[EmissionsParams, Trajectories]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError("file not found", str(path)) from None
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}") from None
    try:
        p = raw["params"]
        params = EmissionsParams(
            p["e_vm"], p["au"], p["ec_g"], p["e_fp"], p["e_fu"], p.get("e_vd", 0.0), p.get("e_mr", 0.0)
        )
        t = raw["trajectories"]
        grid = t["grid"]
        mode = grid.get("mode", "table")
        rates = {int(y): v for y, v in grid.get("table", {}).items()}
        if mode != "table":
            years = sorted({int(y) for y in t["icev_mpg"]})
            built = grid_trajectory(mode, years, grid["baseline_2005"], grid.get("reduction", 0.5),
                                    grid.get("annual_change"))
            # explicitly tabulated years (e.g. calibrated history) stay as given
            built.update({y: v for y, v in rates.items() if y < 2027})
            rates = built
        traj = Trajectories(
            {int(y): v for y, v in t["icev_mpg"].items()},
            {int(y): v for y, v in t["hev_mpg"].items()},
            {int(y): v for y, v in t["ev_mpge"].items()},
            rates,
            grid.get("baseline_2005"),
            grid.get("reduction", 0.5),
        )
    except DataError as exc:
        raise DataError(str(exc), str(path)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad emissions config: {exc!r}", str(path)) from None
    return params, traj
