"""Command-line entry point: ``mineral-gap <command> [options]``."""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

from . import capacity as cap
from . import emissions as em
from . import pathways as pw
from .ids import CHEMISTRIES, REPORT_YEARS, SCENARIOS, Chemistry, DataError, Mineral, ScenarioKind
from .model import DATA_ENV, Model, load_model
from .reports import (
    ReportBundle, Table, build_report, diff_against_golden, emit_plot_series, normalize_table_id,
    plot_series_csv, render,
)


def _kinds(value) -> list[ScenarioKind]:
    return list(SCENARIOS) if value in (None, "all") else [ScenarioKind.parse(value)]


def cmd_scenarios(m: Model, args) -> ReportBundle:
    bundle = ReportBundle()
    for k in _kinds(args.kind):
        s = m.scenarios[k]
        t = Table(f"scenarios:{k}", f"EV sales, {k} scenario", ["total_sales", "ev_share_pct", "ev_sales"],
                  units="vehicles")
        for y in s.years:
            t.add(str(y), [s.total_sales[y], s.ev_share[y] * 100, s.ev_sales[y]])
        t.row_units = {}
        t.footnotes.append(f"target share {m.scenario_config.target_share * 100:.4f}% in 2032")
        bundle.add(t)
    return bundle


def cmd_capacity(m: Model, args) -> ReportBundle:
    supply = m.supply_for(args.basis, args.assumption)
    ints = m.intensities_for(args.fleet)
    label = f"{args.basis}, {args.assumption}, {args.fleet} fleet"
    unit = "packs" if args.basis == "reserves" else "packs/yr"
    years = [args.year] if args.year else list(REPORT_YEARS)
    bundle = ReportBundle()

    if args.mode == "per-chemistry":
        res = cap.all_ceilings(supply, ints)
        t = Table("capacity", f"Ceiling per chemistry ({label})", [c.value for c in CHEMISTRIES], units=unit)
        for mn in Mineral:
            t.add(mn.value, [res[c].per_mineral_ceiling.get(mn) for c in CHEMISTRIES])
        t.add("ceiling", [res[c].ceiling for c in CHEMISTRIES])
        t.add("limiting_mineral", [res[c].limiting_mineral.value for c in CHEMISTRIES], "")
    elif args.mode == "optimal":
        chem, res = cap.optimal_chemistry(supply, ints)
        t = Table("capacity", f"Optimal chemistry ({label})", ["value"], units=unit)
        t.add("chemistry", [chem.value], "")
        t.add("ceiling", [res.ceiling])
        t.add("limiting_mineral", [res.limiting_mineral.value], "")
        if args.basis == "production":
            t.add(f"cumulative {years[0]}-{years[-1]}", [res.ceiling * len(years)], "packs")
    elif args.mode == "mix":
        t = Table("capacity", f"Market-mix ceiling ({label})", ["ceiling", "limiting_mineral"], units=unit)
        total = 0
        for y in years:
            r = cap.mix_bottleneck(supply, m.mix, ints, y)
            total += r.ceiling
            t.add(str(y), [r.ceiling, r.limiting_mineral.value])
        if len(years) > 1:
            t.add("cumulative", [total, None], "packs")
    else:
        allowed = [Chemistry.parse(c) for c in args.chemistries.split(",")]
        alloc = cap.joint_allocation(supply, ints, allowed)
        t = Table("capacity", f"Joint allocation ({label})", ["packs"], units=unit)
        for c, n in alloc.items():
            t.add(c.value, [n])
        t.add("total", [sum(alloc.values())])
    bundle.add(t)
    return bundle


def cmd_emissions(m: Model, args) -> ReportBundle:
    p, tr = m.emissions
    years = [args.year] if args.year else list(tr.years)
    pts = [em.parse_powertrain(args.powertrain)] if args.powertrain else list(em.POWERTRAINS)
    t = Table("emissions", "Lifecycle emissions", ["per_mile", "per_vehicle", "benefit_vs_icev"],
              units="g CO2e/mi | t CO2e | t CO2e")
    for y in years:
        for pt in pts:
            r = em.lifecycle(p, tr, pt, y)
            t.add(f"{em._label(pt)} {y}", [r.per_mile, r.per_vehicle, r.benefit_vs_icev])
    b = ReportBundle()
    b.add(t)
    return b


def cmd_pathways(m: Model, args) -> ReportBundle:
    bundle = ReportBundle()
    target = args.target or m.scenarios[ScenarioKind.LOW].ev_sales[2032]
    if args.mode in ("thresholds", "ramp"):
        rng = pw.threshold_range(target, m.supply, m.mix, m.intensities)
        if args.mode == "thresholds":
            t = Table("thresholds", f"Production needed for {target:,} EVs/yr",
                      ["current", "required_min", "required_max", "multiplier_min", "multiplier_max"], units="t/yr")
            for mn, th in rng.items():
                t.add(mn.value, [th.current, th.required_min, th.required_max, *th.multiplier_range])
        else:
            need = args.required if args.required is not None else rng[Mineral.GRAPHITE].required_min
            ok = pw.ramp_sufficiency(m.ramp, need)
            t = Table("ramp", f"Announced graphite production vs {need:,.0f} t/yr", ["tons", "sufficient"],
                      units="t/yr")
            for y, v in m.ramp.schedule.items():
                t.add(str(y), [v, ok[y]])
        bundle.add(t)
        return bundle

    p, tr = m.emissions
    benefits = {pt: em.benefit_schedule(p, tr, pt, REPORT_YEARS) for pt in em.POWERTRAINS}
    for k in _kinds(args.scenario):
        plan = pw.plan_hev_pathway(m.scenarios[k], benefits)
        sales = m.scenarios[k].total_sales
        if args.mode == "hev-only":
            t = Table(f"hev-only:{k}", f"HEVs needed, {k} scenario", ["desired_hevs", "light_duty_sales", "feasible"],
                      units="vehicles")
            for y in REPORT_YEARS:
                t.add(str(y), [plan.desired_hevs[y], sales[y], plan.feasible[y]])
        else:
            t = Table(f"supplement:{k}", f"Minimum EVs alongside HEVs, {k} scenario",
                      ["min_evs", "condition", "ill_conditioned"], units="vehicles")
            for y in REPORT_YEARS:
                t.add(str(y), [plan.min_evs[y], plan.condition[y], y in plan.ill_conditioned])
        bundle.add(t)
    return bundle


def cmd_report(m: Model, args) -> ReportBundle:
    return build_report(m, args.table, args.scenario)


def _write(text: str, output: str | None):
    if not output:
        sys.stdout.write(text)
        return
    # write-then-rename so a failure never leaves a partial file
    target = Path(output)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-dir", help=f"data directory (default: ${DATA_ENV} or the shipped data)")
    common.add_argument("--emissions-config", help="emissions calibration file (default: <data-dir>/emissions.json)")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--output", "-o", help="write to this file instead of stdout")

    p = argparse.ArgumentParser(prog="mineral-gap", description="Critical-mineral supply gap model.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scenarios", parents=[common], help="EV sales scenarios")
    s.add_argument("--kind", choices=("low", "medium", "high", "all"), default="all")

    c = sub.add_parser("capacity", parents=[common], help="battery-pack ceilings")
    c.add_argument("--basis", choices=("production", "reserves"), default="production")
    c.add_argument("--assumption", choices=("baseline", "added-supply"), default="baseline")
    c.add_argument("--fleet", choices=("sedan", "mixed"), default="sedan")
    c.add_argument("--mode", choices=("per-chemistry", "optimal", "mix", "joint"), default="optimal")
    c.add_argument("--year", type=int, help="single market-mix year (default 2027-2032)")
    c.add_argument("--chemistries", default="LFP,NCA", help="comma-separated set for --mode joint")

    e = sub.add_parser("emissions", parents=[common], help="lifecycle emissions")
    e.add_argument("--year", type=int)
    e.add_argument("--powertrain", help="ICEV, HEV or a chemistry")

    w = sub.add_parser("pathways", parents=[common], help="resolution pathways")
    w.add_argument("--mode", choices=("thresholds", "ramp", "hev-only", "supplement"), default="thresholds")
    w.add_argument("--scenario", choices=("low", "medium", "high", "all"), default="all")
    w.add_argument("--target", type=int, help="target EVs/yr for thresholds (default: 2032 target sales)")
    w.add_argument("--required", type=float, help="graphite requirement for --mode ramp, t/yr")

    r = sub.add_parser("report", parents=[common], help="reference-table reproductions")
    r.add_argument("--table", action="append", help="table id such as T3.2 (repeatable; default all)")
    r.add_argument("--scenario", choices=("low", "medium", "high"))
    r.add_argument("--plot-series", metavar="TABLE", help="emit (x, y, series) rows for one table instead")

    d = sub.add_parser("diff", parents=[common], help="compare reproductions with golden tables")
    d.add_argument("--golden", help="golden directory (default: shipped)")
    d.add_argument("--table", action="append")
    return p


COMMANDS = {
    "scenarios": cmd_scenarios, "capacity": cmd_capacity, "emissions": cmd_emissions,
    "pathways": cmd_pathways, "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = load_model(args.data_dir, args.emissions_config).load_all()
        if args.command == "diff":
            rep = diff_against_golden(build_report(model, args.table), args.golden)
            _write(rep.summary() + "\n", args.output)
            return 0 if rep.passed else 1
        bundle = COMMANDS[args.command](model, args)
        if args.command == "report" and args.plot_series:
            tid = normalize_table_id(args.plot_series)
            if tid not in bundle:
                bundle = build_report(model, [tid], args.scenario)
            text = plot_series_csv(emit_plot_series(bundle, tid))
        else:
            text = render(bundle, args.format)
        _write(text, args.output)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
