import json

import pytest

from mineral_gap import emissions as em
from mineral_gap.capacity import ShortfallRecord
from mineral_gap.ids import REPORT_YEARS, Chemistry, DataError, ScenarioKind

YEARS = REPORT_YEARS
PARAMS = em.EmissionsParams({"ICEV": 10, "HEV": 11, "NMC811": 12, "LFP": 11.5}, 100_000, 120, 20, 73)
TRAJ = em.Trajectories(
    {y: 30.0 for y in YEARS}, {y: 50.0 for y in YEARS}, {y: 120.0 for y in YEARS},
    {y: 360.0 - (y - 2027) for y in YEARS},
)


def test_per_mile_hand_values():
    # fixed 10e6 / 1e5 = 100 g/mi; fuel 93 * 120 / 30 = 372 g/mi
    assert em.per_mile_emissions(PARAMS, TRAJ, "ICEV", 2027) == pytest.approx(472.0)
    # fixed 120 g/mi; grid 360 / 3.6 * 120 / 120 = 100 g/mi
    assert em.per_mile_emissions(PARAMS, TRAJ, "EV NMC811", 2027) == pytest.approx(220.0)


def test_lifecycle_and_benefit():
    r = em.lifecycle(PARAMS, TRAJ, Chemistry.NMC811, 2027)
    assert r.per_vehicle == pytest.approx(22.0)
    assert r.benefit_vs_icev == pytest.approx(47.2 - 22.0)
    assert em.lifecycle(PARAMS, TRAJ, "ICEV", 2027).benefit_vs_icev == 0.0


def test_per_vehicle_is_utilisation_times_per_mile():
    for pt in ("ICEV", "HEV", "NMC811", "LFP"):
        r = em.lifecycle(PARAMS, TRAJ, pt, 2030)
        assert r.per_vehicle == PARAMS.au / 1e6 * r.per_mile


def test_powertrain_names():
    assert em.parse_powertrain("ev-lfp") is Chemistry.LFP
    assert em.parse_powertrain("hev") == "HEV"
    with pytest.raises(DataError):
        em.parse_powertrain("diesel")


def test_missing_year_and_powertrain():
    with pytest.raises(DataError):
        em.per_mile_emissions(PARAMS, TRAJ, "ICEV", 2040)
    with pytest.raises(DataError):
        em.per_mile_emissions(PARAMS, TRAJ, "NCA", 2027)


def test_trajectory_rules():
    with pytest.raises(DataError, match="cap"):
        em.Trajectories({2027: 30}, {2027: 80}, {2027: 100}, {2027: 300})
    with pytest.raises(DataError, match="fall"):
        em.Trajectories({}, {}, {}, {2027: 300, 2028: 300})
    with pytest.raises(DataError):
        em.Trajectories({}, {}, {}, {2030: 300}, grid_baseline_2005=500)
    em.Trajectories({}, {}, {}, {2030: 250}, grid_baseline_2005=500)


def test_grid_trajectory_modes():
    lin = em.grid_trajectory("linear", [2005, 2030], 600.0)
    assert lin == {2005: pytest.approx(600.0), 2030: pytest.approx(300.0)}
    geo = em.grid_trajectory("geometric", [2029, 2030, 2031], 600.0, annual_change=0.9)
    assert geo[2031] == pytest.approx(270.0)
    assert geo[2029] == pytest.approx(300 / 0.9)
    with pytest.raises(DataError):
        em.grid_trajectory("geometric", [2030], 600.0)
    with pytest.raises(DataError):
        em.grid_trajectory("cubic", [2030], 600.0)


def test_weighted_ev_normalises():
    a = em.weighted_ev(PARAMS, TRAJ, {Chemistry.NMC811: 1, Chemistry.LFP: 1}, 2027)
    b = em.weighted_ev(PARAMS, TRAJ, {Chemistry.NMC811: 0.5, Chemistry.LFP: 0.5}, 2027)
    assert a == pytest.approx(b)


def test_emissions_shortfall():
    recs = [ShortfallRecord(ScenarioKind.LOW, 2027, 10, 4), ShortfallRecord(ScenarioKind.LOW, 2028, 3, 9),
            ShortfallRecord(ScenarioKind.LOW, None, 13, 13)]
    per, total = em.emissions_shortfall(recs, {2027: 2.0, 2028: 5.0})
    assert per == {2027: 12.0, 2028: 0.0}
    assert total == 12.0


def test_calibration_recovers_parameters():
    truth = em.EmissionsParams({"ICEV": 8.0, "NMC811": 11.0}, 170_000, 120, 20.0, 73)
    # fuel economy must vary by year or e_vm and e_fp trade off exactly
    traj = em.Trajectories({2027: 30.0, 2030: 40.0}, {}, {2027: 110.0, 2030: 120.0}, {2027: 350.0, 2030: 300.0})
    obs = [em.Observation(k, pt, y, v)
           for y in (2027, 2030) for pt in ("ICEV", "NMC811")
           for k, v in (("per_mile", em.per_mile_emissions(truth, traj, pt, y)),
                        ("lifecycle", em.lifecycle(truth, traj, pt, y).per_vehicle))]
    res = em.calibrate(obs, traj, {}, 120, 73, start={"au": 150_000, "e_fp": 15})
    assert res.max_rel_error < 1e-8
    assert res.params.au == pytest.approx(170_000, rel=1e-6)
    assert res.params.e_fp == pytest.approx(20.0, rel=1e-6)


def test_config_errors(tmp_path):
    p = tmp_path / "e.json"
    p.write_text("{not json")
    with pytest.raises(DataError, match=r"e\.json:1"):
        em.read_emissions_config(p)
    p.write_text(json.dumps({"params": {}}))
    with pytest.raises(DataError):
        em.read_emissions_config(p)


def test_shipped_config(model):
    params, traj = model.emissions
    assert traj.years == (2023,) + REPORT_YEARS
    assert traj.grid_rate[2030] == pytest.approx(0.5 * traj.grid_baseline_2005, abs=0.005)
