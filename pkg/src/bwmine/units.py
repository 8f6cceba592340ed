"""Unit attribute table: costs and combat flags per unit type.

The table is plain config data loaded from CSV with columns

    unit_type,race,minerals,gas,supply,is_military,is_flying,is_cloaked,
    is_transport,max_weapon_range_px[,is_worker,is_static_defense]

The two trailing columns are optional (default 0); they mark the unit
classes that the "ws" composition scope adds on top of military units.
A default table covering a representative unit subset ships with the
package; costs are game constants and carry no semantics beyond the
value formula, so replacing the CSV never changes code behaviour.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Iterator

from .errors import UnknownUnitType, ValidationError

RACES = ("Protoss", "Terran", "Zerg")
RACE_LETTER = {"Protoss": "P", "Terran": "T", "Zerg": "Z"}

_REQUIRED_COLUMNS = (
    "unit_type", "race", "minerals", "gas", "supply", "is_military",
    "is_flying", "is_cloaked", "is_transport", "max_weapon_range_px",
)
_OPTIONAL_COLUMNS = ("is_worker", "is_static_defense")


def matchup(race_a: str, race_b: str) -> str:
    """Canonical match-up string, e.g. ('Terran', 'Protoss') -> 'PvT'."""
    a, b = RACE_LETTER[race_a], RACE_LETTER[race_b]
    return f"{min(a, b)}v{max(a, b)}"


@dataclass(frozen=True)
class UnitAttributes:
    name: str
    race: str
    minerals: int
    gas: int
    supply: float
    is_military: bool
    is_flying: bool
    is_cloaked: bool
    is_transport: bool
    max_weapon_range_px: int
    is_worker: bool = False
    is_static_defense: bool = False

    def __post_init__(self):
        if self.race not in RACES:
            raise ValidationError(f"unknown race {self.race!r} for unit {self.name!r}")
        if self.minerals < 0 or self.gas < 0 or self.supply < 0:
            raise ValidationError(f"negative cost for unit {self.name!r}")
        if self.max_weapon_range_px < 0:
            raise ValidationError(f"negative weapon range for unit {self.name!r}")


class UnitTable:
    """Immutable lookup of :class:`UnitAttributes` by type name."""

    def __init__(self, attrs: Iterable[UnitAttributes]):
        self._by_name: dict[str, UnitAttributes] = {}
        for a in attrs:
            if a.name in self._by_name:
                raise ValidationError(f"duplicate unit type {a.name!r}")
            self._by_name[a.name] = a

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self) -> Iterator[UnitAttributes]:
        return iter(self._by_name.values())

    def __len__(self) -> int:
        return len(self._by_name)

    def __getitem__(self, name: str) -> UnitAttributes:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownUnitType(f"unit type {name!r} not in attribute table") from None

    def get(self, name: str) -> UnitAttributes | None:
        return self._by_name.get(name)

    def types_for_race(self, race: str) -> tuple[str, ...]:
        """All unit types of one race, lexicographic: the frozen vector basis."""
        return tuple(sorted(a.name for a in self._by_name.values() if a.race == race))

    @classmethod
    def loads(cls, text: str) -> "UnitTable":
        reader = csv.DictReader(io.StringIO(text))
        fields = tuple(reader.fieldnames or ())
        missing = [c for c in _REQUIRED_COLUMNS if c not in fields]
        if missing:
            raise ValidationError(f"unit table missing columns: {', '.join(missing)}")
        attrs = []
        for row in reader:
            attrs.append(UnitAttributes(
                name=row["unit_type"],
                race=row["race"],
                minerals=int(row["minerals"]),
                gas=int(row["gas"]),
                supply=float(row["supply"]),
                is_military=row["is_military"] == "1",
                is_flying=row["is_flying"] == "1",
                is_cloaked=row["is_cloaked"] == "1",
                is_transport=row["is_transport"] == "1",
                max_weapon_range_px=int(row["max_weapon_range_px"]),
                is_worker=row.get("is_worker", "0") == "1",
                is_static_defense=row.get("is_static_defense", "0") == "1",
            ))
        return cls(attrs)

    @classmethod
    def load(cls, path) -> "UnitTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def default(cls) -> "UnitTable":
        text = resources.files("bwmine").joinpath("data/units.csv").read_text("utf-8")
        return cls.loads(text)
