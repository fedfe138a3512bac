"""Canonical identifiers shared by every module: minerals, chemistries, scenarios."""
from __future__ import annotations

from enum import Enum


class DataError(ValueError):
    """Bad input data. ``origin`` points at the offending file/line when known."""

    def __init__(self, message: str, origin: str | None = None):
        self.origin = origin
        super().__init__(f"{origin}: {message}" if origin else message)


class _Named(str, Enum):
    @classmethod
    def parse(cls, name: str):
        key = _normalize(name)
        for member in cls:
            if _normalize(member.value) == key:
                return member
        alias = cls._aliases().get(key)
        if alias is not None:
            return cls(alias)
        raise DataError(f"unknown {cls.__name__.lower()} {name!r}")

    @classmethod
    def _aliases(cls) -> dict[str, str]:
        return {}

    def __str__(self) -> str:
        return self.value


def _normalize(name: str) -> str:
    return "".join(str(name).split()).lower()


class Mineral(_Named):
    LITHIUM = "lithium"
    COBALT = "cobalt"
    NICKEL = "nickel"
    MANGANESE = "manganese"
    GRAPHITE = "graphite"
    ALUMINUM = "aluminum"
    COPPER = "copper"
    PHOSPHATE = "phosphate"

    @classmethod
    def _aliases(cls):
        return {"aluminium": "aluminum"}


class Chemistry(_Named):
    NMC111 = "NMC111"
    NMC523 = "NMC523"
    NMC622 = "NMC622"
    NMC811 = "NMC811"
    NCA = "NCA"
    LFP = "LFP"

    @classmethod
    def _aliases(cls):
        # the literature writes NMC 523 and NMC 532 interchangeably
        return {"nmc532": "NMC523"}


class ScenarioKind(_Named):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @classmethod
    def _aliases(cls):
        return {"med": "medium", "middle": "medium"}


MINERALS: tuple[Mineral, ...] = tuple(Mineral)
# Fixed order, also the tie-break order for optimal chemistry.
CHEMISTRIES: tuple[Chemistry, ...] = tuple(Chemistry)
SCENARIOS: tuple[ScenarioKind, ...] = tuple(ScenarioKind)

REPORT_YEARS = tuple(range(2027, 2033))
