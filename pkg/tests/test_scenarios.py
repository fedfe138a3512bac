import pytest

from mineral_gap.ids import DataError, ScenarioKind
from mineral_gap.scenarios import YEARS, FuelAssumptions, build_scenario, solve_penetration


def test_penetration_hand_value():
    # 1 - 82 * 66.4 / (73 * 120)
    share = solve_penetration(FuelAssumptions(gasoline_energy=120.0))
    assert share == pytest.approx(0.378447, abs=1e-6)


def test_penetration_zero_when_target_already_met():
    assert solve_penetration(FuelAssumptions(target_gpm=500.0)) == 0.0


def test_rejects_nonpositive_inputs():
    with pytest.raises(DataError):
        FuelAssumptions(icev_mpg=0)


SALES = {y: 1_000_000 for y in YEARS}


def test_low_is_flat_until_target_year():
    s = build_scenario("low", SALES, 0.05, 0.4)
    assert all(s.ev_share[y] == 0.05 for y in YEARS[:-1])
    assert s.ev_share[2032] == 0.4
    assert s.ev_sales[2032] == 400_000


def test_high_reaches_target_from_2023():
    s = build_scenario(ScenarioKind.HIGH, SALES, 0.05, 0.4)
    assert s.ev_share[2022] == 0.05
    assert all(s.ev_share[y] == 0.4 for y in YEARS[1:])


def test_medium_interpolates_between_anchors():
    b = 0.06
    s = build_scenario("medium", SALES, b, 0.4)
    assert s.ev_share[2023] == pytest.approx(1.5 * b)
    assert s.ev_share[2024] == pytest.approx(2 * b)
    assert s.ev_share[2025] == pytest.approx(8 / 3 * b)
    assert s.ev_share[2026] == pytest.approx(10 / 3 * b)
    assert s.ev_share[2027] == pytest.approx(4 * b)
    assert s.ev_share[2030] == pytest.approx(4 * b + (0.4 - 4 * b) * 3 / 5)


def test_ev_sales_round_half_up():
    s = build_scenario("low", {y: 10 for y in YEARS}, 0.05, 0.25)
    assert s.ev_sales[2022] == 1  # 0.5 rounds up
    assert s.ev_sales[2032] == 3  # 2.5 rounds up


def test_missing_year_and_bad_shares():
    with pytest.raises(DataError):
        build_scenario("low", {2022: 1}, 0.05, 0.4)
    with pytest.raises(DataError):
        build_scenario("low", SALES, 0.5, 0.4)


def test_shipped_config(model):
    cfg = model.scenario_config
    assert cfg.target_share == pytest.approx(0.3782, abs=5e-5)
    low = model.scenarios[ScenarioKind.LOW]
    assert low.ev_sales[2022] == 809739
