"""Country-level production and reserve records and their aggregation.

Quantities are metric tons held as ``Decimal`` so the shipped tables add up
exactly; conversion to kilograms happens only in :meth:`SupplyTable.kg`.
"""
from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from types import MappingProxyType

from .ids import MINERALS, DataError, Mineral

BAUXITE_PER_ALUMINUM = Decimal(4)


class SourceKind(str, Enum):
    US_MINING = "us_mining"
    US_RECYCLING = "us_recycling"
    ALLY_MINING = "ally_mining"
    # only created by apply_added_supply, never read from data files
    ADDED_SUPPLY = "added_supply"

    def __str__(self) -> str:
        return self.value


class Measure(str, Enum):
    PRODUCTION = "production"
    RESERVES = "reserves"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SupplyRecord:
    mineral: Mineral
    country: str
    source_kind: SourceKind
    quantity: Decimal
    basis_note: str = ""
    measure: Measure = Measure.PRODUCTION
    bauxite: bool = False
    origin: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.country.strip():
            raise DataError("empty country", self.origin)
        if self.quantity < 0:
            raise DataError(f"negative quantity {self.quantity}", self.origin)
        if self.bauxite:
            if self.mineral is not Mineral.ALUMINUM:
                raise DataError("bauxite flag on a non-aluminum record", self.origin)
            if "bauxite" not in self.basis_note.lower():
                raise DataError("bauxite record must document the 4:1 conversion", self.origin)

    @property
    def key(self):
        return (self.mineral, self.country, self.source_kind, self.measure)

    @property
    def tons(self) -> Decimal:
        """Contribution in tons of the mineral itself (bauxite converted)."""
        return bauxite_to_aluminum(self.quantity) if self.bauxite else self.quantity


def bauxite_to_aluminum(bauxite_tons) -> Decimal:
    bauxite_tons = Decimal(bauxite_tons)
    if bauxite_tons < 0:
        raise ValueError(f"negative bauxite tonnage {bauxite_tons}")
    return bauxite_tons / BAUXITE_PER_ALUMINUM


def _zero_map() -> dict[Mineral, Decimal]:
    return {m: Decimal(0) for m in MINERALS}


@dataclass(frozen=True)
class SupplyTable:
    production: Mapping[Mineral, Decimal]
    reserves: Mapping[Mineral, Decimal]
    provenance: tuple[SupplyRecord, ...] = ()

    def __post_init__(self):
        for name in ("production", "reserves"):
            values = getattr(self, name)
            missing = [m for m in MINERALS if m not in values]
            if missing:
                raise DataError(f"{name} missing {', '.join(map(str, missing))}")
            if any(v < 0 for v in values.values()):
                raise DataError(f"negative {name} total")
            object.__setattr__(self, name, MappingProxyType(dict(values)))

    def totals(self, measure) -> Mapping[Mineral, Decimal]:
        return self.reserves if Measure(measure) is Measure.RESERVES else self.production

    def kg(self, measure=Measure.PRODUCTION) -> dict[Mineral, float]:
        return {m: float(t * 1000) for m, t in self.totals(measure).items()}

    def by_source(self, measure=Measure.PRODUCTION) -> dict[Mineral, dict[SourceKind, Decimal]]:
        measure = Measure(measure)
        out = {m: {k: Decimal(0) for k in SourceKind} for m in MINERALS}
        for rec in self.provenance:
            if rec.measure is measure:
                out[rec.mineral][rec.source_kind] += rec.tons
        return out


def load_supply(records: Iterable[SupplyRecord]) -> SupplyTable:
    """Aggregate production and reserve records into per-mineral totals.

    Raises DataError on a duplicate (mineral, country, source kind) within the
    same measure, naming the record's origin.
    """
    production, reserves = _zero_map(), _zero_map()
    seen: dict[tuple, SupplyRecord] = {}
    kept = []
    for rec in records:
        if rec.key in seen:
            first = seen[rec.key].origin or "earlier record"
            raise DataError(
                f"duplicate {rec.measure} record for {rec.mineral}/{rec.country}/{rec.source_kind} "
                f"(first seen at {first})",
                rec.origin,
            )
        seen[rec.key] = rec
        kept.append(rec)
        target = reserves if rec.measure is Measure.RESERVES else production
        target[rec.mineral] += rec.tons
    return SupplyTable(production, reserves, tuple(kept))


@dataclass(frozen=True)
class AddedSupplySpec:
    additions: Mapping[Mineral, Decimal]
    top_producer: Mapping[Mineral, str] = field(default_factory=dict)

    def __post_init__(self):
        for m, v in self.additions.items():
            if Decimal(v) < 0:
                raise DataError(f"negative addition for {m}")


def apply_added_supply(base: SupplyTable, spec: AddedSupplySpec) -> SupplyTable:
    production = dict(base.production)
    extra = []
    for m, amount in spec.additions.items():
        amount = Decimal(amount)
        production[m] += amount
        producer = spec.top_producer.get(m, "top producer")
        extra.append(
            SupplyRecord(
                m, producer, SourceKind.ADDED_SUPPLY, amount,
                f"20% of {producer} 2022 output",
            )
        )
    return SupplyTable(production, base.reserves, base.provenance + tuple(extra))


# ---------------------------------------------------------------- file I/O


def _rows(path: Path, required: tuple[str, ...]):
    """Yield (origin, row) from a comma-delimited file with a header; '#' lines are comments."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError("file not found", str(path)) from None
    with fh:
        lines = ((i, line) for i, line in enumerate(fh, 1) if line.strip() and not line.lstrip().startswith("#"))
        numbered = list(lines)
    if not numbered:
        return
    reader = csv.DictReader([line for _, line in numbered], skipinitialspace=True)
    header = reader.fieldnames or []
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"missing column(s) {', '.join(missing)}", f"{path}:{numbered[0][0]}")
    for (lineno, _), row in zip(numbered[1:], reader):
        yield f"{path}:{lineno}", {k: (v or "").strip() for k, v in row.items() if k}


def parse_decimal(text: str, origin: str | None = None) -> Decimal:
    try:
        return Decimal(text.replace("_", ""))
    except (InvalidOperation, AttributeError):
        raise DataError(f"not a number: {text!r}", origin) from None


_SUPPLY_COLUMNS = ("mineral", "country", "source_kind", "quantity", "basis_note")


def read_supply_records(path, measure=Measure.PRODUCTION) -> list[SupplyRecord]:
    """Parse a supply file. A mineral cell of ``bauxite`` marks an aluminum record given as ore."""
    measure = Measure(measure)
    out = []
    for origin, row in _rows(path, _SUPPLY_COLUMNS):
        name = row["mineral"]
        bauxite = name.strip().lower() == "bauxite"
        mineral = Mineral.ALUMINUM if bauxite else _parse_mineral(name, origin)
        try:
            kind = SourceKind(row["source_kind"].strip().lower())
        except ValueError:
            raise DataError(f"unknown source_kind {row['source_kind']!r}", origin) from None
        if kind is SourceKind.ADDED_SUPPLY:
            raise DataError("added_supply records belong in the added-supply file", origin)
        out.append(
            SupplyRecord(
                mineral, row["country"], kind, parse_decimal(row["quantity"], origin),
                row["basis_note"], measure, bauxite, origin,
            )
        )
    return out


def read_added_supply(path) -> AddedSupplySpec:
    additions, producers = {}, {}
    for origin, row in _rows(path, ("mineral", "top_producer", "addition")):
        m = _parse_mineral(row["mineral"], origin)
        if m in additions:
            raise DataError(f"duplicate added-supply row for {m}", origin)
        additions[m] = parse_decimal(row["addition"], origin)
        if additions[m] < 0:
            raise DataError("negative addition", origin)
        producers[m] = row["top_producer"]
    return AddedSupplySpec(additions, producers)


def _parse_mineral(name: str, origin: str) -> Mineral:
    try:
        return Mineral.parse(name)
    except DataError as exc:
        raise DataError(str(exc), origin) from None


def read_supply(production_path, reserves_path=None) -> SupplyTable:
    records = read_supply_records(production_path, Measure.PRODUCTION)
    if reserves_path is not None:
        records += read_supply_records(reserves_path, Measure.RESERVES)
    return load_supply(records)
