"""Reference-table reproductions, plot series and golden-file diffs."""
from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from . import capacity as cap
from . import emissions as em
from . import pathways as pw
from .ids import CHEMISTRIES, MINERALS, REPORT_YEARS, SCENARIOS, Chemistry, DataError, Mineral, ScenarioKind
from .model import Model, shipped_data_dir
from .supply import Measure, SourceKind

DEMAND_YEARS = tuple(range(2024, 2033))
DOWNSIZE_TARGET_YEAR = 2032


@dataclass
class Table:
    table_id: str
    title: str
    columns: list[str]
    rows: list[tuple[str, list]] = field(default_factory=list)
    units: str = ""
    row_units: dict[str, str] = field(default_factory=dict)
    footnotes: list[str] = field(default_factory=list)
    flags: dict[tuple[str, str], str] = field(default_factory=dict)

    def add(self, label: str, values, unit: str | None = None):
        values = list(values)
        if len(values) != len(self.columns):
            raise ValueError(f"{self.table_id}/{label}: {len(values)} values for {len(self.columns)} columns")
        self.rows.append((label, values))
        if unit is not None:
            self.row_units[label] = unit

    def unit(self, label: str) -> str:
        return self.row_units.get(label, self.units)

    def cell(self, label: str, column: str):
        for lab, vals in self.rows:
            if lab == label:
                return vals[self.columns.index(column)]
        raise KeyError((label, column))

    def row(self, label: str) -> dict:
        for lab, vals in self.rows:
            if lab == label:
                return dict(zip(self.columns, vals))
        raise KeyError(label)

    def labels(self) -> list[str]:
        return [lab for lab, _ in self.rows]

    def for_scenario(self, kind: ScenarioKind) -> "Table":
        """Rows for one scenario plus the rows shared by all scenarios."""
        names = {k.value for k in SCENARIOS}
        keep = [(lab, v) for lab, v in self.rows if lab.split()[0] not in names or lab.split()[0] == kind.value]
        return Table(self.table_id, self.title, list(self.columns), keep, self.units, dict(self.row_units),
                     list(self.footnotes), dict(self.flags))

    def to_dict(self) -> dict:
        rows = []
        for lab, vals in self.rows:
            rec = {"row": lab, "unit": self.unit(lab)}
            rec.update({c: _jsonable(v) for c, v in zip(self.columns, vals)})
            rows.append(rec)
        return {
            "table_id": self.table_id,
            "title": self.title,
            "units": self.units,
            "columns": list(self.columns),
            "rows": rows,
            "flags": [{"row": r, "column": c, "flag": f} for (r, c), f in sorted(self.flags.items())],
            "footnotes": list(self.footnotes),
        }


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "value") and not isinstance(v, (int, float, str)):
        return v.value
    return v


@dataclass
class ReportBundle:
    tables: dict[str, Table] = field(default_factory=dict)

    def __getitem__(self, table_id: str) -> Table:
        try:
            return self.tables[table_id]
        except KeyError:
            raise DataError(f"unknown table id {table_id!r}") from None

    def __contains__(self, table_id):
        return table_id in self.tables

    def add(self, table: Table):
        self.tables[table.table_id] = table

    def to_json(self) -> str:
        return json.dumps([t.to_dict() for t in self.tables.values()], indent=2, allow_nan=False) + "\n"


# ------------------------------------------------------------ table builders


def _years(ys):
    return [str(y) for y in ys]


def t1_1(m: Model) -> Table:
    f = m.scenario_config.fuel
    t = Table("T1.1", "Fuel emissions rate and fuel economy", ["emissions_rate", "mpg"], units="")
    t.add("ICEV", [f.fuel_emissions_rate, f.icev_mpg], "g CO2/MJ | mi/gal")
    t.add("HEV", [None, f.hev_mpg], "mi/gal")
    t.add("ev_target_share_pct", [m.scenario_config.target_share * 100, None], "%")
    t.footnotes.append(f"gasoline energy content {f.gasoline_energy} MJ/gal is a calibration constant")
    return t


def t1_2(m: Model) -> Table:
    sc = m.scenarios
    years = sc[ScenarioKind.LOW].years
    t = Table("T1.2", "EV sales by scenario", _years(years), units="vehicles")
    t.add("total_sales", [sc[ScenarioKind.LOW].total_sales[y] for y in years])
    for k in SCENARIOS:
        t.add(f"{k} share_pct", [sc[k].ev_share[y] * 100 for y in years], "%")
        t.add(f"{k} ev_sales", [sc[k].ev_sales[y] for y in years])
    t.footnotes.append("medium 2027 EV sales also appear as 3,645,234 in the reference shortfall table; "
                       "this table keeps 3,645,029")
    t.footnotes.append("base 2022 share is 5.89% (809,739 of 13,754,300); a rounded 6% is not used")
    return t


def t2_1(m: Model) -> Table:
    src = m.supply.by_source(Measure.PRODUCTION)
    t = Table("T2.1", "Annual production", ["us_mining", "us_total", "allies"], units="t/yr")
    for mn in MINERALS:
        s = src[mn]
        us = s[SourceKind.US_MINING]
        t.add(mn.value, [int(us), int(us + s[SourceKind.US_RECYCLING]), int(s[SourceKind.ALLY_MINING])])
    t.footnotes.append("ally lithium kept at the rounded 101,000 t; the country sum is 101,100 t")
    t.footnotes.append("aluminum mine output converted from bauxite at 4:1")
    return t


def t2_2(m: Model) -> Table:
    src = m.supply.by_source(Measure.RESERVES)
    t = Table("T2.2", "Reserves", ["us", "allies"], units="t")
    for mn in MINERALS:
        s = src[mn]
        t.add(mn.value, [int(s[SourceKind.US_MINING] + s[SourceKind.US_RECYCLING]), int(s[SourceKind.ALLY_MINING])])
    t.footnotes.append("negligible US manganese and graphite reserves are stored as 0")
    return t


def t3_1(m: Model) -> Table:
    t = Table("T3.1", "Mineral content per sedan pack", [c.value for c in CHEMISTRIES], units="kg/pack")
    for mn in MINERALS:
        t.add(mn.value, [m.intensities[c].content[mn] for c in CHEMISTRIES])
    t.footnotes.append("NMC111 values are the midpoints of their lower and upper bounds")
    return t


def _ceiling_table(tid, title, supply_kg, intensities, footnotes=()) -> Table:
    res = cap.all_ceilings(supply_kg, intensities)
    t = Table(tid, title, [c.value for c in CHEMISTRIES], units="packs/yr")
    for mn in MINERALS:
        t.add(mn.value, [res[c].per_mineral_ceiling.get(mn) for c in CHEMISTRIES])
    t.add("ceiling", [res[c].ceiling for c in CHEMISTRIES])
    t.add("limiting_mineral", [res[c].limiting_mineral.value for c in CHEMISTRIES], "")
    for c in CHEMISTRIES:
        t.flags[(res[c].limiting_mineral.value, c.value)] = "limiting"
    t.footnotes.extend(footnotes)
    return t


_ROUNDING_NOTE = "contents carried at 2 decimals; reference cells differ by up to 0.1% (848,806 vs 848,804 for NMC811)"


def t3_2(m):
    return _ceiling_table("T3.2", "Packs per chemistry, current production", m.supply.kg(), m.intensities,
                          [_ROUNDING_NOTE])


def t3_3(m: Model) -> Table:
    years = m.mix.years
    t = Table("T3.3", "Chemistry market share", _years(years), units="%")
    for c in CHEMISTRIES:
        t.add(c.value, [m.mix.share(y, c) * 100 for y in years])
    t.footnotes.append("shares are rounded to 0.1 pp and do not all sum to 100%")
    return t


def _demand_table(m: Model, tid: str, kind: ScenarioKind) -> Table:
    d = cap.mix_demand(m.scenarios[kind], m.demand_mix, m.intensities, DEMAND_YEARS)
    t = Table(tid, f"Mineral demand, {kind} scenario", _years(DEMAND_YEARS) + ["Annual Average"], units="t")
    for mn in MINERALS:
        t.add(mn.value, d.row(mn) + [d.annual_average(mn)])
    t.footnotes.append("demand uses shares recovered from the reference per-vehicle loads (mix_demand.csv); "
                       "the rounded share table misses some cells by up to 0.8%")
    t.footnotes.append("the recovered 2032 shares sum to 0.9945, i.e. the reference 2032 column carries "
                       "about 0.5% less material per vehicle than 2031")
    return t


def t4_1(m: Model) -> Table:
    t = Table("T4.1", "Added supply", ["top_producer", "annual_supply", "added_supply", "added_supply_total"],
              units="t/yr")
    spec = m.added_spec
    for mn in MINERALS:
        base = m.supply.production[mn]
        add = spec.additions.get(mn, 0)
        t.add(mn.value, [spec.top_producer.get(mn, ""), int(base), int(add), int(base + add)])
    return t


def t4_2(m):
    return _ceiling_table("T4.2", "Packs per chemistry, added supply", m.added.kg(), m.intensities, [_ROUNDING_NOTE])


def t4_3(m: Model) -> Table:
    desired = m.scenarios[ScenarioKind.LOW].ev_sales[DOWNSIZE_TARGET_YEAR]
    ref = m.intensities[Chemistry.NMC811]
    cur = cap.downsize(m.supply.kg(), desired, ref)
    add = cap.downsize(m.added.kg(), desired, ref)
    t = Table("T4.3", "Requisite mineral intensity", ["current_production", "added_supply"], units="kg/vehicle")
    for mn in MINERALS:
        t.add(mn.value, [cur.per_mineral_intensity[mn], add.per_mineral_intensity[mn]])
    t.add("binding_mineral", [cur.binding_mineral.value, add.binding_mineral.value], "")
    t.add("implied_pack_kwh", [cur.implied_pack_kwh, add.implied_pack_kwh], "kWh")
    t.footnotes.append(f"added-supply pack computes to {add.implied_pack_kwh:.1f} kWh of NMC811; "
                       "the reference text states 48 kWh")
    return t


def t4_4(m: Model) -> Table:
    heavy = m.intensities_for("mixed")
    t = Table("T4.4", "Fleet-weighted mineral content", [c.value for c in CHEMISTRIES], units="kg/pack")
    for mn in MINERALS:
        t.add(mn.value, [heavy[c].content[mn] for c in CHEMISTRIES])
    return t


def t4_5(m):
    return _ceiling_table("T4.5", "Packs per chemistry, heavier fleet", m.supply.kg(), m.intensities_for("mixed"))


def t4_6(m):
    return _ceiling_table("T4.6", "Packs per chemistry, heavier fleet and added supply", m.added.kg(),
                          m.intensities_for("mixed"))


def t5_1(m: Model) -> Table:
    p, tr = m.emissions
    t = Table("T5.1", "Emissions in 2023", ["per_mile_g", "lifecycle_t", "benefit_t"], units="")
    for pt in em.POWERTRAINS:
        r = em.lifecycle(p, tr, pt, 2023)
        t.add(em._label(pt), [r.per_mile, r.per_vehicle, r.benefit_vs_icev], "g CO2e/mi | t CO2e | t CO2e")
    t.footnotes.append("LFP 2023 has no reference cell; its value comes from the same calibration and is an extrapolation")
    return t


def t5_2(m: Model) -> Table:
    p, tr = m.emissions
    years = REPORT_YEARS
    t = Table("T5.2", "Lifecycle emissions", _years(years), units="t CO2e/vehicle")
    t.add("icev_mpg", [tr.icev_mpg[y] for y in years], "mi/gal")
    t.add("hev_mpg", [tr.hev_mpg[y] for y in years], "mi/gal")
    t.add("ev_mpge", [tr.ev_mpge[y] for y in years], "mi/gal-equivalent")
    t.add("grid_g_per_kwh", [tr.grid_rate[y] for y in years], "g CO2e/kWh")
    for pt in em.POWERTRAINS:
        t.add(em._label(pt), [em.lifecycle(p, tr, pt, y).per_vehicle for y in years])
    if mm := _maybe_weighted(m, years):
        t.add("EV weighted average", mm)
    t.footnotes.append("grid rates fall by a constant ratio (about 1.83%/yr), not a constant step")
    t.footnotes.append("au, e_fp and e_vm are calibrated; e_vd and e_mr are folded into e_vm")
    return t


def _maybe_weighted(m: Model, years):
    p, tr = m.emissions
    if not all(y in m.mix.shares for y in years):
        return None
    return [em.weighted_ev(p, tr, m.mix.shares[y], y) for y in years]


def _benefits(m: Model, years=REPORT_YEARS) -> dict:
    p, tr = m.emissions
    return {pt: em.benefit_schedule(p, tr, pt, years) for pt in em.POWERTRAINS}


def t5_3(m: Model) -> Table:
    years = REPORT_YEARS
    sc = m.scenarios
    chem, best = cap.optimal_chemistry(m.supply.kg(), m.intensities)
    benefit = _benefits(m)[chem]
    t = Table("T5.3", "EV shortfall and emissions shortfall", _years(years), units="vehicles")
    t.add("light_duty_sales", [sc[ScenarioKind.LOW].total_sales[y] for y in years])
    for k in SCENARIOS:
        recs, _ = cap.compute_shortfall(sc[k], {y: best.ceiling for y in years}, years)
        tons, total = em.emissions_shortfall(recs, benefit)
        t.add(f"{k} desired", [r.desired_evs for r in recs])
        t.add(f"{k} possible", [r.possible_evs for r in recs])
        t.add(f"{k} optimal_chemistry", [chem.value] * len(years), "")
        t.add(f"{k} shortfall_evs", [r.shortfall for r in recs])
        t.add(f"{k} shortfall_t", [tons[y] for y in years], "t CO2e")
    t.footnotes.append("medium 2027 uses 3,645,029 desired EVs; the reference cell uses 3,645,234")
    return t


def t6_1(m: Model) -> Table:
    target = m.scenarios[ScenarioKind.LOW].ev_sales[2032]
    rng = pw.threshold_range(target, m.supply, m.mix, m.intensities)
    t = Table("T6.1", "Production needed for the 2032 target under the market mix",
              ["current", "required_min", "required_max"], units="t/yr")
    for mn, th in rng.items():
        t.add(mn.value, [th.current, th.required_min, th.required_max])
        for col, v in (("required_min", th.required_min), ("required_max", th.required_max)):
            if v > th.current:
                t.flags[(mn.value, col)] = "exceeds_current"
    t.footnotes.append("min/max are taken over the 2027-2032 market-mix years")
    t.footnotes.append("reference graphite minimum 431,520 and cobalt maximum 31,174 match no single mix year "
                       "(computed ranges 458k-474k and 18.6k-23.2k)")
    return t


def t6_2(m: Model) -> Table:
    sched = m.ramp.schedule
    t = Table("T6.2", "Announced graphite production", _years(sched), units="t/yr")
    t.add("graphite_tons", list(sched.values()))
    req = pw.threshold_range(m.scenarios[ScenarioKind.LOW].ev_sales[2032], m.supply, m.mix, m.intensities,
                             minerals=[Mineral.GRAPHITE])[Mineral.GRAPHITE]
    ok = pw.ramp_sufficiency(m.ramp, req.required_min)
    t.add("sufficient_for_min_requirement", [ok[y] for y in sched], "")
    return t


def _ceiling_series(m: Model, fleet: str) -> Table:
    years = REPORT_YEARS
    ints = m.intensities_for(fleet)
    chem, best = cap.optimal_chemistry(m.added.kg(), ints)
    mix = [cap.mix_ceiling(m.added.kg(), m.mix, ints, y) for y in years]
    tid = "T6.3" if fleet == "sedan" else "T6.4"
    title = "Packs under added supply" + ("" if fleet == "sedan" else " and a heavier fleet")
    t = Table(tid, title, _years(years), units="packs/yr")
    t.add("optimal", [best.ceiling] * len(years))
    t.add("mix", mix)
    t.footnotes.append(f"optimal chemistry {chem.value}; market-mix ceilings use the rounded share table")
    return t


def t6_5(m: Model) -> Table:
    p, tr = m.emissions
    years = tr.years
    t = Table("T6.5", "Emissions benefit over ICEV", _years(years), units="t CO2e/vehicle")
    for pt in CHEMISTRIES + (em.HEV,):
        t.add(em._label(pt), [em.lifecycle(p, tr, pt, y).benefit_vs_icev for y in years])
    t.footnotes.append("2024-2026 are not modelled: fitting them to the reference benefits requires a rising grid rate")
    return t


def t6_6(m: Model) -> Table:
    years = REPORT_YEARS
    ben = _benefits(m)
    ld = m.scenarios[ScenarioKind.LOW].total_sales
    t = Table("T6.6", "HEVs needed to replace the reference EVs", _years(years) + ["Total"], units="vehicles")
    t.add("light_duty_sales", [ld[y] for y in years] + [sum(ld[y] for y in years)])
    for k in SCENARIOS:
        req = pw.hev_only_requirement(m.scenarios[k], ben)
        vals = [req[y] for y in years]
        t.add(k.value, vals + [sum(v for v in vals if v is not None)])
        for y in years:
            if req[y] is None:
                t.flags[(k.value, str(y))] = "infeasible"
            elif req[y] > ld[y]:
                t.flags[(k.value, str(y))] = "exceeds_sales"
    return t


def t6_7(m: Model) -> Table:
    years = REPORT_YEARS
    ben = _benefits(m)
    t = Table("T6.7", "Minimum EVs with HEVs filling the remaining sales", _years(years), units="vehicles")
    for k in SCENARIOS:
        plan = pw.plan_hev_pathway(m.scenarios[k], ben)
        t.add(k.value, [plan.min_evs[y] for y in years])
        t.add(f"{k} condition", [plan.condition[y] for y in years], "")
        for y in plan.ill_conditioned:
            t.flags[(k.value, str(y))] = "ill_conditioned"
        for y, v in plan.min_evs.items():
            if v is None:
                t.flags[(k.value, str(y))] = "degenerate"
    t.footnotes.append(f"cells with condition number above {pw.ILL_CONDITIONED:g} are flagged ill_conditioned; "
                       "small benefit differences move them by large factors")
    t.footnotes.append("the reference 2032 value 4,905,031 is about 0.4% off its own rounded benefit inputs")
    return t


def r1(m: Model) -> Table:
    rk = m.supply.kg(Measure.RESERVES)
    t = Table("R1", "Packs supported by reserves", ["packs"], units="packs")
    singles = cap.all_ceilings(rk, m.intensities)
    for c in sorted(CHEMISTRIES, key=lambda c: -singles[c].ceiling):
        t.add(c.value, [singles[c].ceiling])
    joint = cap.joint_allocation(rk, m.intensities, {Chemistry.LFP, Chemistry.NCA})
    t.add("joint LFP", [joint[Chemistry.LFP]])
    t.add("joint NCA", [joint[Chemistry.NCA]])
    t.add("joint total", [sum(joint.values())])
    return t


def h1(m: Model) -> Table:
    years = REPORT_YEARS
    n = len(years)
    cur, add = m.supply.kg(), m.added.kg()
    heavy = m.intensities_for("mixed")
    sc = m.scenarios
    t = Table("H1", "Headline cumulative figures, 2027-2032", ["value"], units="vehicles")
    t.add("ev_target_share_pct", [m.scenario_config.target_share * 100], "%")
    t.add("optimal cumulative current", [cap.optimal_chemistry(cur, m.intensities)[1].ceiling * n])
    t.add("optimal cumulative added", [cap.optimal_chemistry(add, m.intensities)[1].ceiling * n])
    t.add("heavier optimal cumulative current", [cap.optimal_chemistry(cur, heavy)[1].ceiling * n])
    t.add("heavier optimal cumulative added", [cap.optimal_chemistry(add, heavy)[1].ceiling * n])
    t.add("mix cumulative current", [sum(cap.mix_ceiling(cur, m.mix, m.intensities, y) for y in years)])
    t.add("mix cumulative added", [sum(cap.mix_ceiling(add, m.mix, m.intensities, y) for y in years)])
    t.add("heavier mix cumulative added", [sum(cap.mix_ceiling(add, m.mix, heavy, y) for y in years)])
    for k in SCENARIOS:
        t.add(f"{k} desired 2027-2032", [sum(sc[k].ev_sales[y] for y in years)])
    t53 = t5_3(m)
    for k in SCENARIOS:
        t.add(f"{k} emissions shortfall 2027-2032", [sum(t53.row(f"{k} shortfall_t").values())], "t CO2e")
    return t


BUILDERS = {
    "T1.1": t1_1, "T1.2": t1_2, "T2.1": t2_1, "T2.2": t2_2,
    "T3.1": t3_1, "T3.2": t3_2, "T3.3": t3_3,
    "T3.4": lambda m: _demand_table(m, "T3.4", ScenarioKind.LOW),
    "T3.5": lambda m: _demand_table(m, "T3.5", ScenarioKind.MEDIUM),
    "T3.6": lambda m: _demand_table(m, "T3.6", ScenarioKind.HIGH),
    "T4.1": t4_1, "T4.2": t4_2, "T4.3": t4_3, "T4.4": t4_4, "T4.5": t4_5, "T4.6": t4_6,
    "T5.1": t5_1, "T5.2": t5_2, "T5.3": t5_3,
    "T6.1": t6_1, "T6.2": t6_2,
    "T6.3": lambda m: _ceiling_series(m, "sedan"),
    "T6.4": lambda m: _ceiling_series(m, "mixed"),
    "T6.5": t6_5, "T6.6": t6_6, "T6.7": t6_7,
    "R1": r1, "H1": h1,
}
TABLE_IDS = tuple(BUILDERS)


def normalize_table_id(tid: str) -> str:
    key = tid.strip().upper().replace("_", ".")
    if not key.startswith(("T", "R", "H")):
        key = "T" + key
    if key not in BUILDERS:
        raise DataError(f"unknown table id {tid!r} (known: {', '.join(TABLE_IDS)})")
    return key


def build_report(model: Model, table_ids: Iterable[str] | None = None, scenario=None) -> ReportBundle:
    ids = TABLE_IDS if not table_ids else [normalize_table_id(t) for t in table_ids]
    bundle = ReportBundle()
    kind = ScenarioKind.parse(scenario) if isinstance(scenario, str) else scenario
    for tid in ids:
        table = BUILDERS[tid](model)
        bundle.add(table.for_scenario(kind) if kind is not None else table)
    return bundle


# ------------------------------------------------------------ rendering


def _fmt(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, int):
        return f"{v:,}"
    if isinstance(v, float):
        if not math.isfinite(v):
            return "inf"
        return f"{v:,.0f}" if abs(v) >= 1000 else f"{v:,.2f}"
    return str(v)


def render_text(bundle: ReportBundle) -> str:
    out = []
    for t in bundle.tables.values():
        head = ["", *t.columns, "unit"]
        body = [[lab, *(_fmt(v) + ("*" if (lab, c) in t.flags else "") for c, v in zip(t.columns, vals)), t.unit(lab)]
                for lab, vals in t.rows]
        widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
        out.append(f"{t.table_id}  {t.title}")
        for r in [head] + body:
            out.append("  ".join(s.ljust(w) if i == 0 else s.rjust(w) for i, (s, w) in enumerate(zip(r, widths))).rstrip())
        if t.flags:
            kinds = sorted(set(t.flags.values()))
            out.append(f"  * flagged: {', '.join(kinds)}")
        for note in t.footnotes:
            out.append(f"  note: {note}")
        out.append("")
    return "\n".join(out)


def render_csv(bundle: ReportBundle) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table_id", "row", "column", "value", "unit", "flag"])
    for t in bundle.tables.values():
        for lab, vals in t.rows:
            for c, v in zip(t.columns, vals):
                w.writerow([t.table_id, lab, c, "" if v is None else _jsonable(v), t.unit(lab), t.flags.get((lab, c), "")])
    return buf.getvalue()


def render(bundle: ReportBundle, fmt: str) -> str:
    if fmt == "json":
        return bundle.to_json()
    if fmt == "csv":
        return render_csv(bundle)
    if fmt == "table":
        return render_text(bundle)
    raise DataError(f"unknown output format {fmt!r}")


def emit_plot_series(bundle: ReportBundle, table_id: str) -> list[tuple[str, float, str]]:
    """(x, y, series) triples in table order; non-numeric cells are skipped."""
    t = bundle[normalize_table_id(table_id)]
    out = []
    for lab, vals in t.rows:
        for c, v in zip(t.columns, vals):
            if isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v):
                out.append((c, float(v), lab))
    return out


def plot_series_csv(series) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "series"])
    for x, y, s in series:
        w.writerow([x, repr(y), s])
    return buf.getvalue()


# ------------------------------------------------------------ golden diff


@dataclass(frozen=True)
class Tolerance:
    kind: str = "rel"  # rel | abs | ratio | exact
    value: float = 0.0

    def deviation(self, got, want) -> float:
        if self.kind == "exact" and (isinstance(got, str) or isinstance(want, str)):
            return 0.0 if str(got) == str(want) else math.inf
        if self.kind == "abs":
            return abs(got - want)
        if self.kind == "ratio":
            if got == want:
                return 1.0
            if got <= 0 or want <= 0:
                return math.inf
            return max(got / want, want / got)
        if want == 0:
            return 0.0 if abs(got) < 0.5 else math.inf
        return abs(got - want) / abs(want)

    def passes(self, dev: float) -> bool:
        if self.kind == "ratio":
            return dev <= self.value
        return dev <= self.value + 1e-12


EXACT = Tolerance("exact", 0.0)
TOLERANCES: dict[str, Tolerance] = {
    "T1.1": Tolerance("abs", 0.05), "T1.2": Tolerance("rel", 1e-3),
    "T2.1": EXACT, "T2.2": EXACT, "T3.1": Tolerance("abs", 0.005), "T3.3": EXACT, "T4.1": EXACT, "T6.2": EXACT,
    "T3.2": Tolerance("rel", 1e-3), "T3.4": Tolerance("rel", 1e-3), "T3.5": Tolerance("rel", 1e-3),
    "T3.6": Tolerance("rel", 1e-3), "T4.2": Tolerance("rel", 1e-3),
    "T4.3": Tolerance("abs", 0.01), "T4.4": Tolerance("abs", 0.01),
    "T4.5": Tolerance("rel", 1e-3), "T4.6": Tolerance("rel", 1e-3),
    "T5.1": Tolerance("rel", 0.01), "T5.2": Tolerance("rel", 0.01), "T5.3": Tolerance("rel", 0.01),
    "T6.1": Tolerance("rel", 0.02), "T6.3": Tolerance("rel", 1e-3), "T6.4": Tolerance("rel", 1e-3),
    "T6.5": Tolerance("rel", 0.01), "T6.6": Tolerance("rel", 0.02), "T6.7": Tolerance("ratio", 3.0),
    "R1": Tolerance("rel", 5e-3), "H1": Tolerance("rel", 5e-3),
}
# reference columns the model does not cover; reported as skipped, not missing
SKIPPED_COLUMNS: dict[str, frozenset[str]] = {"T6.5": frozenset({"2024", "2025", "2026"})}
# per-cell overrides: tighter anchors and reference cells known not to be reproducible
CELL_TOLERANCES: dict[tuple[str, str, str], Tolerance | None] = {
    ("T6.7", "low", "2032"): Tolerance("rel", 0.02),
    ("T6.7", "medium", "2032"): Tolerance("rel", 0.02),
    ("T6.7", "high", "2032"): Tolerance("rel", 0.02),
    ("T6.1", "graphite", "required_min"): None,
    ("T6.1", "cobalt", "required_max"): None,
    ("H1", "ev_target_share_pct", "value"): Tolerance("abs", 0.05),
    ("H1", "low emissions shortfall 2027-2032", "value"): Tolerance("rel", 0.02),
    ("H1", "medium emissions shortfall 2027-2032", "value"): Tolerance("rel", 0.01),
}


@dataclass(frozen=True)
class CellDiff:
    table_id: str
    row: str
    column: str
    got: object
    want: object
    deviation: float
    tolerance: Tolerance | None
    flag: str = ""

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            return True  # known discrepancy, reported only
        if self.flag in ("ill_conditioned",):
            return True
        return self.tolerance.passes(self.deviation)


@dataclass
class DiffReport:
    cells: list[CellDiff]
    missing_cells: list[tuple[str, str, str]] = field(default_factory=list)

    def for_table(self, table_id: str) -> list[CellDiff]:
        return [c for c in self.cells if c.table_id == table_id]

    def max_deviation(self, table_id: str) -> float:
        devs = [c.deviation for c in self.for_table(table_id) if c.tolerance is not None and c.tolerance.kind != "exact"]
        return max(devs, default=0.0)

    def table_passed(self, table_id: str) -> bool:
        return all(c.passed for c in self.for_table(table_id)) and not [
            m for m in self.missing_cells if m[0] == table_id]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cells) and not self.missing_cells

    def failures(self) -> list[CellDiff]:
        return [c for c in self.cells if not c.passed]

    def summary(self) -> str:
        lines = []
        for tid in dict.fromkeys(c.table_id for c in self.cells):
            cells = self.for_table(tid)
            bad = [c for c in cells if not c.passed]
            lines.append(f"{tid}: {'PASS' if not bad else 'FAIL'} cells={len(cells)} "
                         f"max_dev={self.max_deviation(tid):.3g} tol={TOLERANCES.get(tid)}")
            for c in bad:
                lines.append(f"  {c.row}/{c.column}: got {c.got} want {c.want} dev {c.deviation:.3g}")
        for m in self.missing_cells:
            lines.append(f"{m[0]}: missing cell {m[1]}/{m[2]}")
        return "\n".join(lines)


def golden_path(golden_dir, table_id: str) -> Path:
    return Path(golden_dir) / (table_id.replace(".", "_") + ".csv")


def read_golden(golden_dir, table_id: str) -> list[tuple[str, str, str]]:
    path = golden_path(golden_dir, table_id)
    if not path.exists():
        raise DataError(f"missing golden table {table_id}", str(path))
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    head = rows[0][1:]
    return [(r[0], c, v) for r in rows[1:] for c, v in zip(head, r[1:]) if v.strip() != ""]


def _coerce(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def diff_against_golden(bundle: ReportBundle, golden_dir=None) -> DiffReport:
    golden_dir = Path(golden_dir) if golden_dir else shipped_data_dir() / "golden"
    cells, missing = [], []
    for tid, table in bundle.tables.items():
        tol = TOLERANCES.get(tid, Tolerance("rel", 1e-3))
        index = {(lab, c): v for lab, vals in table.rows for c, v in zip(table.columns, vals)}
        skipped = SKIPPED_COLUMNS.get(tid, frozenset())
        for row, col, raw in read_golden(golden_dir, tid):
            if col in skipped:
                continue
            want = _coerce(raw)
            if (row, col) not in index:
                # scenario-filtered bundles legitimately omit other scenarios' rows
                if not _filtered_out(table, row):
                    missing.append((tid, row, col))
                continue
            got = index[row, col]
            t = CELL_TOLERANCES.get((tid, row, col), tol)
            if got is None:
                cells.append(CellDiff(tid, row, col, got, want, math.inf, t))
                continue
            if isinstance(want, str) or isinstance(got, str):
                t_use = EXACT if t is not None else None
                dev = (t_use or EXACT).deviation(str(got), str(want))
                cells.append(CellDiff(tid, row, col, got, want, dev, t_use))
                continue
            dev = (t or tol).deviation(float(got), want)
            cells.append(CellDiff(tid, row, col, got, want, dev, t, table.flags.get((row, col), "")))
    return DiffReport(cells, missing)


def _filtered_out(table: Table, row: str) -> bool:
    names = {k.value for k in SCENARIOS}
    first = row.split()[0]
    present = {lab.split()[0] for lab in table.labels()}
    return first in names and first not in present
