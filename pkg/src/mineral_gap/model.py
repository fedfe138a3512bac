"""Loads the shipped (or user-supplied) data directory into one bundle of inputs."""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

from . import capacity as cap
from .emissions import EmissionsParams, Trajectories, read_emissions_config
from .ids import Chemistry, ScenarioKind
from .pathways import GraphiteRamp, read_ramp
from .scenarios import SalesScenario, ScenarioConfig, read_scenario_config
from .supply import SupplyTable, apply_added_supply, read_added_supply, read_supply

DATA_ENV = "MINERAL_GAP_DATA_DIR"

FILES = {
    "production": "production.csv",
    "reserves": "reserves.csv",
    "added_supply": "added_supply.csv",
    "intensity": "intensity.csv",
    "mix": "mix.csv",
    "mix_demand": "mix_demand.csv",
    "scenarios": "scenarios.json",
    "emissions": "emissions.json",
    "graphite_ramp": "graphite_ramp.csv",
}


def shipped_data_dir() -> Path:
    return Path(str(resources.files("mineral_gap") / "data"))


def default_data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    return Path(env) if env else shipped_data_dir()


@dataclass
class Model:
    data_dir: Path
    emissions_path: Path | None = None

    def path(self, key: str) -> Path:
        if key == "emissions" and self.emissions_path is not None:
            return Path(self.emissions_path)
        return Path(self.data_dir) / FILES[key]

    @cached_property
    def supply(self) -> SupplyTable:
        return read_supply(self.path("production"), self.path("reserves"))

    @cached_property
    def added_spec(self):
        return read_added_supply(self.path("added_supply"))

    @cached_property
    def added(self) -> SupplyTable:
        return apply_added_supply(self.supply, self.added_spec)

    @cached_property
    def intensities(self) -> dict[Chemistry, cap.ChemistryIntensity]:
        return cap.read_intensities(self.path("intensity"))

    @cached_property
    def mix(self) -> cap.MixSchedule:
        return cap.read_mix(self.path("mix"))

    @cached_property
    def demand_mix(self) -> cap.MixSchedule:
        # falls back to the ceiling schedule when no demand-specific file is present
        p = self.path("mix_demand")
        return cap.read_mix(p) if p.exists() else self.mix

    @cached_property
    def scenario_config(self) -> ScenarioConfig:
        return read_scenario_config(self.path("scenarios"))

    @cached_property
    def scenarios(self) -> dict[ScenarioKind, SalesScenario]:
        return self.scenario_config.all_scenarios()

    @cached_property
    def emissions(self) -> tuple[EmissionsParams, Trajectories]:
        return read_emissions_config(self.path("emissions"))

    @cached_property
    def ramp(self) -> GraphiteRamp:
        return read_ramp(self.path("graphite_ramp"))

    def load_all(self) -> "Model":
        """Parse every input now so data errors surface before any output."""
        for name in ("supply", "added", "intensities", "mix", "demand_mix", "scenarios", "emissions", "ramp"):
            getattr(self, name)
        return self

    def supply_for(self, basis: str = "production", assumption: str = "baseline") -> dict:
        table = self.added if assumption == "added-supply" else self.supply
        return table.kg(basis)

    def intensities_for(self, fleet: str = "sedan"):
        if fleet == "mixed":
            return cap.fleet_intensities(self.intensities, cap.MIXED_FLEET)
        return self.intensities


def load_model(data_dir=None, emissions_path=None) -> Model:
    return Model(Path(data_dir) if data_dir else default_data_dir(), emissions_path)
