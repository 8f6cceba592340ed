"""Army compositions: proportion vectors, unit values, battle records.

A composition is a fixed-basis vector of unit-type proportions for one
army (one player's units in one battle). Bases are frozen per race as
the lexicographic ordering of the attribute table's types; models carry
the basis they were trained on and reject anything else.

Two counting scopes exist: "m" keeps military units only, "ws" adds
static defenses and workers.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .attacktrack import Attack
from .errors import (
    EmptyArmy,
    UnknownUnitType,
    ValidationError,
    ZeroValueArmy,
)
from .units import UnitAttributes, UnitTable, matchup as _matchup

SCOPE_MILITARY = "m"
SCOPE_WITH_SUPPORT = "ws"
SCOPES = (SCOPE_MILITARY, SCOPE_WITH_SUPPORT)

OWN = "own"
ENEMY = "enemy"

GAS_WEIGHT = 4.0 / 3.0
SUPPLY_WEIGHT = 50.0


@dataclass(frozen=True)
class CompositionVector:
    race: str
    basis: tuple[str, ...]
    u: tuple[float, ...]
    total_units: int

    def __post_init__(self):
        if len(self.u) != len(self.basis):
            raise ValidationError("proportion vector does not match basis")
        if any(v < 0 for v in self.u):
            raise ValidationError("negative proportion")
        if self.total_units > 0 and abs(sum(self.u) - 1.0) > 1e-9:
            raise ValidationError(f"proportions sum to {sum(self.u)}, not 1")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.u, dtype=float)


@dataclass(frozen=True)
class BattleRecord:
    """One battle seen from one side, under one counting scope."""

    game_id: str
    frame: int
    scope: str
    own: CompositionVector
    enemy: CompositionVector
    own_value: float
    enemy_value: float
    winner: str                      # "own" | "enemy"
    own_pid: int = -1

    def __post_init__(self):
        if self.winner not in (OWN, ENEMY):
            raise ValidationError(f"bad winner tag {self.winner!r}")
        if self.own_value <= 0 or self.enemy_value <= 0:
            raise ValidationError("battle values must be positive")
        if self.scope not in SCOPES:
            raise ValidationError(f"bad scope {self.scope!r}")

    @property
    def matchup(self) -> str:
        return _matchup(self.own.race, self.enemy.race)

    @property
    def disparity(self) -> float:
        return disparity(self.own_value, self.enemy_value)


def in_scope(attrs: UnitAttributes, scope: str) -> bool:
    if scope == SCOPE_MILITARY:
        return attrs.is_military
    if scope == SCOPE_WITH_SUPPORT:
        return attrs.is_military or attrs.is_worker or attrs.is_static_defense
    raise ValidationError(f"unknown scope {scope!r}")


def unit_value(unit_type: str, table: UnitTable) -> float:
    """Resource value of one unit: minerals + 4/3 gas + 50 supply."""
    a = table[unit_type]
    return a.minerals + GAS_WEIGHT * a.gas + SUPPLY_WEIGHT * a.supply


def army_value(unit_types: Iterable[str], table: UnitTable) -> float:
    """Summed unit values of an army given as a unit-type multiset."""
    return sum(unit_value(t, table) for t in unit_types)


def disparity(a_value: float, b_value: float) -> float:
    """Strength ratio of the stronger army over the weaker, >= 1."""
    if a_value <= 0 or b_value <= 0:
        raise ZeroValueArmy(f"cannot compare values {a_value} and {b_value}")
    return max(a_value, b_value) / min(a_value, b_value)


def extract_composition(attack: Attack, player_id: int, scope: str,
                        table: UnitTable, types: Mapping[int, str],
                        race: str) -> CompositionVector:
    """Proportion vector of one player's in-scope units in one battle.

    Unit ids without a known type are skipped; types of another race
    (mind control and the like) are ignored; an army that filters down
    to nothing raises EmptyArmy.
    """
    basis = table.types_for_race(race)
    index = {t: i for i, t in enumerate(basis)}
    counts = [0] * len(basis)
    for uid in attack.units_involved.get(player_id, set()):
        utype = types.get(uid)
        if utype is None:
            continue
        if utype not in table:
            raise UnknownUnitType(f"unit type {utype!r} not in attribute table")
        if utype not in index:
            continue
        if in_scope(table[utype], scope):
            counts[index[utype]] += 1
    total = sum(counts)
    if total == 0:
        raise EmptyArmy(f"player {player_id} has no {scope!r}-scope units in battle")
    return CompositionVector(race, basis, tuple(c / total for c in counts), total)


def scoped_value(attack: Attack, player_id: int, scope: str,
                 table: UnitTable, types: Mapping[int, str]) -> float:
    """Army value over the player's in-scope involved units."""
    total = 0.0
    for uid in attack.units_involved.get(player_id, set()):
        utype = types.get(uid)
        if utype is None or utype not in table:
            continue
        if in_scope(table[utype], scope):
            total += unit_value(utype, table)
    return total


def battle_winner_pid(attack: Attack, table: UnitTable,
                      types: Mapping[int, str]) -> int:
    """Winner = side with the smaller value lost; ties go to the defender."""
    losses = {}
    for pid in (attack.attacker_pid, attack.defender_pid):
        value = 0.0
        for uid in attack.units_lost.get(pid, set()):
            utype = types.get(uid)
            if utype is not None and utype in table:
                value += unit_value(utype, table)
        losses[pid] = value
    if losses[attack.attacker_pid] < losses[attack.defender_pid]:
        return attack.attacker_pid
    if losses[attack.defender_pid] < losses[attack.attacker_pid]:
        return attack.defender_pid
    return attack.defender_pid


def attack_to_battles(attack: Attack, game_id: str, races: Mapping[int, str],
                      table: UnitTable, types: Mapping[int, str],
                      scopes: Sequence[str] = SCOPES) -> list[BattleRecord]:
    """All (perspective, scope) battle records for one finished attack.

    Perspectives whose army is empty under a scope are dropped, so a
    battle yields at most len(scopes) * 2 records.
    """
    winner_pid = battle_winner_pid(attack, table, types)
    records = []
    pids = sorted(races)
    for scope in scopes:
        comps: dict[int, CompositionVector] = {}
        values: dict[int, float] = {}
        ok = True
        for pid in pids:
            try:
                comps[pid] = extract_composition(attack, pid, scope, table, types, races[pid])
            except EmptyArmy:
                ok = False
                break
            values[pid] = scoped_value(attack, pid, scope, table, types)
            if values[pid] <= 0:
                ok = False
                break
        if not ok:
            continue
        for pid in pids:
            other = pids[0] if pid == pids[1] else pids[1]
            records.append(BattleRecord(
                game_id=game_id,
                frame=attack.start_frame,
                scope=scope,
                own=comps[pid],
                enemy=comps[other],
                own_value=values[pid],
                enemy_value=values[other],
                winner=OWN if winner_pid == pid else ENEMY,
                own_pid=pid,
            ))
    return records


def stack_compositions(comps: Sequence[CompositionVector]) -> np.ndarray:
    """M x N data matrix from same-basis composition vectors."""
    if not comps:
        return np.zeros((0, 0))
    basis = comps[0].basis
    for c in comps:
        if c.basis != basis:
            raise ValidationError("mixed bases in composition stack")
    return np.asarray([c.u for c in comps], dtype=float)


# ---------------------------------------------------------------------------
# battles CSV
# ---------------------------------------------------------------------------

BATTLES_COLUMNS = ("game", "frame", "scope", "race", "own_vector", "enemy_race",
                   "enemy_vector", "own_value", "enemy_value", "winner", "own_pid")


def _fmt_vector(u: Sequence[float]) -> str:
    return "|".join(repr(float(v)) for v in u)


def battles_to_csv(battles: Sequence[BattleRecord]) -> str:
    """Battle rows with '|'-packed vectors; per-race bases are recorded in
    leading comment lines so the file is self-describing."""
    bases: dict[str, tuple[str, ...]] = {}
    for b in battles:
        for comp in (b.own, b.enemy):
            existing = bases.get(comp.race)
            if existing is not None and existing != comp.basis:
                raise ValidationError(f"conflicting bases for race {comp.race}")
            bases[comp.race] = comp.basis
    out = io.StringIO()
    for race in sorted(bases):
        out.write(f"# basis;{race};{'|'.join(bases[race])}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(BATTLES_COLUMNS)
    for b in battles:
        w.writerow([
            b.game_id, b.frame, b.scope, b.own.race, _fmt_vector(b.own.u),
            b.enemy.race, _fmt_vector(b.enemy.u),
            repr(b.own_value), repr(b.enemy_value), b.winner, b.own_pid,
        ])
    return out.getvalue()


def parse_battles_csv(text: str) -> tuple[BattleRecord, ...]:
    bases: dict[str, tuple[str, ...]] = {}
    data_lines = []
    for line in text.split("\n"):
        if line.startswith("# basis;"):
            _, race, types = line[2:].split(";", 2)
            bases[race] = tuple(types.split("|")) if types else ()
        elif line.strip():
            data_lines.append(line)
    reader = csv.reader(io.StringIO("\n".join(data_lines)))
    rows = list(reader)
    if not rows or tuple(rows[0]) != BATTLES_COLUMNS:
        raise ValidationError("battles CSV missing or wrong header")
    battles = []
    for row in rows[1:]:
        if len(row) != len(BATTLES_COLUMNS):
            raise ValidationError(f"battles CSV row has {len(row)} fields")
        game, frame, scope, race, ownv, erace, ev, oval, eval_, winner, pid = row
        for r in (race, erace):
            if r not in bases:
                raise ValidationError(f"battles CSV lacks basis for race {r}")

        def vec(race: str, packed: str) -> CompositionVector:
            vals = tuple(float(v) for v in packed.split("|")) if packed else ()
            return CompositionVector(race, bases[race], vals, total_units=1)

        battles.append(BattleRecord(
            game_id=game, frame=int(frame), scope=scope,
            own=vec(race, ownv), enemy=vec(erace, ev),
            own_value=float(oval), enemy_value=float(eval_),
            winner=winner, own_pid=int(pid),
        ))
    return tuple(battles)
