import itertools
import math
import random

import pytest

from mineral_gap import capacity as cap
from mineral_gap.ids import CHEMISTRIES, MINERALS, Chemistry, DataError, Mineral, ScenarioKind

BIG = 1e18


def supply(**kg):
    out = {m: BIG for m in MINERALS}
    out.update({Mineral.parse(k): float(v) for k, v in kg.items()})
    return out


def intensity(chem, **kg):
    return cap.ChemistryIntensity(chem, {Mineral.parse(k): v for k, v in kg.items()})


def test_ceiling_floors_scarcest_mineral():
    r = cap.chemistry_ceiling(supply(lithium=100, cobalt=1000), intensity(Chemistry.NMC811, lithium=3, cobalt=2))
    assert r.ceiling == 33
    assert r.limiting_mineral is Mineral.LITHIUM
    assert r.per_mineral_ceiling[Mineral.COBALT] == 500
    assert Mineral.NICKEL not in r.per_mineral_ceiling


def test_no_content_is_an_error():
    with pytest.raises(DataError):
        cap.chemistry_ceiling(supply(), intensity(Chemistry.LFP))


def test_optimal_tie_break_follows_chemistry_order():
    ints = {c: intensity(c, lithium=1) for c in CHEMISTRIES}
    chem, res = cap.optimal_chemistry(supply(lithium=10), ints)
    assert chem is Chemistry.NMC111 and res.ceiling == 10


def test_shipped_intensities_pass_composition_rules(model):
    ints = model.intensities
    assert set(ints) == set(CHEMISTRIES)
    assert ints[Chemistry.LFP].content[Mineral.COBALT] == 0
    assert ints[Chemistry.NCA].content[Mineral.MANGANESE] == 0
    lo, hi = ints[Chemistry.NMC111].lower, ints[Chemistry.NMC111].upper
    for m in lo:
        assert abs(ints[Chemistry.NMC111].content[m] - (lo[m] + hi[m]) / 2) <= 0.005 + 1e-9


def test_composition_rule_violation():
    bad = intensity(Chemistry.LFP, lithium=1, cobalt=1)
    with pytest.raises(DataError):
        cap.check_intensity(bad)


def test_mix_sum_tolerance():
    cap.MixSchedule({2030: {Chemistry.LFP: 0.5, Chemistry.NCA: 0.495}})
    with pytest.raises(DataError):
        cap.MixSchedule({2030: {Chemistry.LFP: 0.5, Chemistry.NCA: 0.45}})


def test_mix_weighted_content_and_ceiling():
    ints = {Chemistry.LFP: intensity(Chemistry.LFP, lithium=4), Chemistry.NCA: intensity(Chemistry.NCA, lithium=2)}
    mix = cap.MixSchedule({2030: {Chemistry.LFP: 0.5, Chemistry.NCA: 0.5}})
    assert mix.weighted_content(ints, 2030)[Mineral.LITHIUM] == 3
    assert cap.mix_ceiling(supply(lithium=30), mix, ints, 2030) == 10
    with pytest.raises(DataError):
        mix.weighted_content(ints, 2031)


def test_mix_demand_units_and_gaps(model):
    s = model.scenarios[ScenarioKind.LOW]
    ints = {Chemistry.LFP: intensity(Chemistry.LFP, lithium=4)}
    mix = cap.MixSchedule({2030: {Chemistry.LFP: 1.0}, 2031: {Chemistry.LFP: 1.0}})
    d = cap.mix_demand(s, mix, ints)
    assert d.demand[Mineral.LITHIUM, 2030] == pytest.approx(4 * s.ev_sales[2030] / 1000)
    gap = cap.MixSchedule({2030: {Chemistry.LFP: 1.0}, 2032: {Chemistry.LFP: 1.0}})
    with pytest.raises(DataError):
        cap.mix_demand(s, gap, ints)


def test_recover_mix_shares_roundtrip(model):
    ints = model.intensities
    truth = {2030: {Chemistry.LFP: 0.4, Chemistry.NMC811: 0.35, Chemistry.NCA: 0.25}}
    mix = cap.MixSchedule(truth)
    loads = {2030: mix.weighted_content(ints, 2030)}
    got = cap.recover_mix_shares(loads, ints)
    for c in CHEMISTRIES:
        assert got.share(2030, c) == pytest.approx(truth[2030].get(c, 0.0), abs=1e-6)


def _grid_best(contents, sup, step=1):
    """Best integer allocation found by exhaustive search over a unit grid."""
    limits = [min(sup[i] // row[j] for i, row in enumerate(contents) if row[j] > 0) for j in range(2)]
    best = 0
    for a in range(0, int(limits[0]) + 1, step):
        for b in range(0, int(limits[1]) + 1, step):
            if all(row[0] * a + row[1] * b <= sup[i] for i, row in enumerate(contents)):
                best = max(best, a + b)
    return best


@pytest.mark.parametrize("seed", range(12))
def test_lp_matches_brute_force_grid(seed):
    rng = random.Random(seed)
    minerals = MINERALS[:3]
    contents = [[rng.randint(1, 9), rng.randint(1, 9)] for _ in minerals]
    sup = [rng.randint(20, 160) for _ in minerals]
    ints = {
        Chemistry.LFP: cap.ChemistryIntensity(Chemistry.LFP, {m: row[0] for m, row in zip(minerals, contents)}),
        Chemistry.NCA: cap.ChemistryIntensity(Chemistry.NCA, {m: row[1] for m, row in zip(minerals, contents)}),
    }
    s = supply(**{m.value: v for m, v in zip(minerals, sup)})
    cont = cap.solve_allocation(s, ints, [Chemistry.LFP, Chemistry.NCA])
    lp = sum(cont.values())
    best = _grid_best(contents, sup)
    # continuous optimum sits within one grid cell per variable of the integer optimum
    assert best <= lp + 1e-9
    assert lp - best < 2
    floored = cap.joint_allocation(s, ints, [Chemistry.LFP, Chemistry.NCA])
    assert all(
        sum(ints[c].content[m] * n for c, n in floored.items()) <= s[m] for m in minerals
    )


def test_joint_allocation_uses_complementary_minerals():
    ints = {
        Chemistry.LFP: intensity(Chemistry.LFP, lithium=1, phosphate=1),
        Chemistry.NCA: intensity(Chemistry.NCA, lithium=1, cobalt=1),
    }
    alloc = cap.joint_allocation(supply(lithium=100, phosphate=60, cobalt=30), ints, ints)
    assert alloc == {Chemistry.NCA: 30, Chemistry.LFP: 60}


def test_shortfall_records():
    class S:
        kind = ScenarioKind.LOW
        ev_sales = {2027: 10, 2028: 5}
    recs, total = cap.compute_shortfall(S, {2027: 6, 2028: 8})
    assert [r.shortfall for r in recs] == [4, 0]
    assert cap.aggregate_shortfall(recs) == 4
    assert total.year is None and total.desired_evs == 15 and total.possible_evs == 14
    with pytest.raises(DataError):
        cap.compute_shortfall(S, {2027: -1})


def test_downsize_hand_case():
    ref = intensity(Chemistry.NMC811, lithium=10, graphite=50)
    r = cap.downsize(supply(lithium=1000, graphite=2000), 100, ref)
    # graphite allows 20 kg per vehicle = 0.4 of the 75 kWh pack
    assert r.binding_mineral is Mineral.GRAPHITE
    assert r.implied_pack_kwh == pytest.approx(30.0)
    assert r.per_mineral_intensity[Mineral.LITHIUM] == 10


def test_heavier_fleet_factor():
    base = intensity(Chemistry.NMC811, lithium=75)
    heavy = cap.heavier_fleet_intensity(base, cap.MIXED_FLEET)
    assert heavy.content[Mineral.LITHIUM] == pytest.approx(75 * (0.29 + 0.71 * 100 / 75))
    assert cap.heavier_fleet_intensity(base, cap.SEDAN_FLEET).content == base.content
    with pytest.raises(DataError):
        cap.FleetMix(0.5, 0.6)


def test_shipped_optimal_and_floor(model):
    chem, res = cap.optimal_chemistry(model.supply_for(), model.intensities)
    assert chem is Chemistry.NMC811
    assert res.limiting_mineral is Mineral.GRAPHITE
    assert res.ceiling == math.floor(48_000_000 / model.intensities[chem].content[Mineral.GRAPHITE])
