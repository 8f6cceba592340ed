"""Battle reconstruction from the event stream.

A unit death inside a live battle's reach extends that battle; a death
with enough military company starts a new one; battles expire after a
configurable number of frames without deaths. The battle footprint is a
convex hull grown from death positions, and a unit belongs to a battle's
context when it stands within its own weapon range of that hull (the
hull is inflated per unit). A finished battle is annotated with the
attacking side, the defender, an attack type and its map region.

Unit ids that only ever appear through discovery events carry no type:
they are treated as inert (no range, not military) rather than rejected,
since nothing about them can be decided.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import geometry
from .errors import NoAttackerUnits, UnknownUnit, UnknownUnitType
from .logmodel import (
    CREATION,
    DESTRUCTION,
    DISCOVERY,
    MORPH,
    OWNERSHIP_CHANGE,
    GameLog,
)
from .mapregions import RegionMap, locate
from .units import UnitTable

GROUND = "Ground"
AIR_RAID = "AirRaid"
INVISIBLE = "Invisible"
DROP = "Drop"
ATTACK_TYPES = (GROUND, AIR_RAID, INVISIBLE, DROP)

DEFAULT_TIMEOUT_FRAMES = 480      # 20 s: merges reinforcement lulls, splits skirmishes
DEFAULT_CONTEXT_RADIUS_PX = 400.0
DEFAULT_ORDER_WINDOW_FRAMES = 240


@dataclass(frozen=True)
class TrackerConfig:
    timeout_frames: int = DEFAULT_TIMEOUT_FRAMES
    context_radius_px: float = DEFAULT_CONTEXT_RADIUS_PX
    order_window_frames: int = DEFAULT_ORDER_WINDOW_FRAMES
    attack_order_types: tuple[str, ...] = ("AttackUnit", "AttackMove")


@dataclass
class Attack:
    """One tracked battle; mutable while live, stable once finished."""

    attack_id: int
    start_frame: int
    end_frame: int
    hull: tuple[tuple[float, float], ...]
    units_involved: dict[int, set[int]]
    units_lost: dict[int, set[int]]
    tick: int
    attack_type: str | None = None
    attacker_pid: int | None = None
    defender_pid: int | None = None
    region_id: int = -1
    cdr_id: int = -1

    @property
    def position(self) -> tuple[float, float]:
        return geometry.hull_centroid(self.hull)

    def involved(self, pid: int) -> set[int]:
        return self.units_involved.setdefault(pid, set())

    def lost(self, pid: int) -> set[int]:
        return self.units_lost.setdefault(pid, set())

    def all_involved(self) -> set[int]:
        out: set[int] = set()
        for s in self.units_involved.values():
            out |= s
        return out


@dataclass
class TrackerState:
    tracked: list[Attack] = field(default_factory=list)
    finished: list[Attack] = field(default_factory=list)
    next_id: int = 0


@dataclass
class _Unit:
    uid: int
    utype: str | None
    owner: int | None
    x: float
    y: float


class WorldView:
    """Live-unit registry replayed from a GameLog, frame by frame."""

    def __init__(self, table: UnitTable):
        self._table = table
        self.units: dict[int, _Unit] = {}

    def apply_event(self, ev) -> None:
        if ev.kind in (CREATION, MORPH):
            u = self.units.get(ev.unit_id)
            if u is None:
                self.units[ev.unit_id] = _Unit(ev.unit_id, ev.unit_type,
                                               ev.player_id, ev.x, ev.y)
            else:
                u.utype = ev.unit_type
                u.owner = ev.player_id
                u.x, u.y = ev.x, ev.y
        elif ev.kind == DISCOVERY:
            self.units.setdefault(ev.unit_id, _Unit(ev.unit_id, None, None, 0.0, 0.0))
        elif ev.kind == OWNERSHIP_CHANGE:
            u = self.units.get(ev.unit_id)
            if u is not None:
                u.owner = ev.player_id
        elif ev.kind == DESTRUCTION:
            self.units.pop(ev.unit_id, None)

    def apply_position(self, sample) -> None:
        u = self.units.get(sample.unit_id)
        if u is not None:
            u.x, u.y = float(sample.x), float(sample.y)

    def range_of(self, u: _Unit) -> float:
        attrs = self._table.get(u.utype) if u.utype else None
        return float(attrs.max_weapon_range_px) if attrs else 0.0

    def is_military(self, u: _Unit) -> bool:
        attrs = self._table.get(u.utype) if u.utype else None
        return bool(attrs and attrs.is_military)


# ---------------------------------------------------------------------------
# the tracking heuristic
# ---------------------------------------------------------------------------

def update(attack: Attack, unit_id: int, frame: int, world: WorldView,
           config: TrackerConfig = TrackerConfig()) -> set[int]:
    """Fold one death into a live battle; returns the context unit set.

    The hull grows to contain the death position; every live unit within
    its own weapon range of the new hull joins the involved sets; the
    expiry tick resets.
    """
    victim = world.units.get(unit_id)
    if victim is None:
        raise UnknownUnit(f"unit {unit_id} not alive at frame {frame}")
    pos = (victim.x, victim.y)
    attack.hull = geometry.hull_insert(attack.hull, pos)
    if victim.owner is not None:
        attack.lost(victim.owner).add(unit_id)
        attack.involved(victim.owner).add(unit_id)
    context = _context_units(attack.hull, world)
    for u in context:
        if u.owner is not None:
            attack.involved(u.owner).add(u.uid)
    attack.tick = config.timeout_frames
    attack.end_frame = max(attack.end_frame, frame)
    return {u.uid for u in context}


def _context_units(hull, world: WorldView) -> list[_Unit]:
    out = []
    for uid in sorted(world.units):
        u = world.units[uid]
        if geometry.distance_to_hull(hull, (u.x, u.y)) <= world.range_of(u):
            out.append(u)
    return out


def unit_death_event(state: TrackerState, unit_id: int, frame: int,
                     world: WorldView, config: TrackerConfig = TrackerConfig()) -> Attack | None:
    """Route one unit death: extend the containing battle, else open a new
    one when at least two military units stand within the context radius."""
    victim = world.units.get(unit_id)
    if victim is None:
        raise UnknownUnit(f"unit {unit_id} not alive at frame {frame}")
    pos = (victim.x, victim.y)
    reach = world.range_of(victim)
    for attack in state.tracked:
        if geometry.distance_to_hull(attack.hull, pos) <= reach:
            update(attack, unit_id, frame, world, config)
            return attack

    nearby = []
    military = 0
    for uid in sorted(world.units):
        u = world.units[uid]
        if u.uid == unit_id:
            continue
        d = ((u.x - pos[0]) ** 2 + (u.y - pos[1]) ** 2) ** 0.5
        if d <= config.context_radius_px:
            nearby.append(u)
            if world.is_military(u):
                military += 1
    if military < 2:
        return None

    attack = Attack(
        attack_id=state.next_id,
        start_frame=frame,
        end_frame=frame,
        hull=(pos,),
        units_involved={},
        units_lost={},
        tick=config.timeout_frames,
    )
    state.next_id += 1
    if victim.owner is not None:
        attack.lost(victim.owner).add(unit_id)
        attack.involved(victim.owner).add(unit_id)
    for u in nearby:
        if u.owner is not None:
            attack.involved(u.owner).add(u.uid)
    state.tracked.append(attack)
    return attack


def tick_update(state: TrackerState, frame: int) -> None:
    """Advance one frame: decrement ticks, retire expired battles."""
    still = []
    for attack in state.tracked:
        attack.tick -= 1
        if attack.tick <= 0:
            attack.end_frame = frame
            state.finished.append(attack)
        else:
            still.append(attack)
    state.tracked = still


def _advance_ticks(state: TrackerState, first_frame: int, last_frame: int) -> None:
    """Equivalent to tick_update on every frame in [first_frame, last_frame]."""
    if last_frame < first_frame:
        return
    span = last_frame - first_frame + 1
    still = []
    for attack in state.tracked:
        if attack.tick <= span:
            attack.end_frame = first_frame + attack.tick - 1
            attack.tick = 0
            state.finished.append(attack)
        else:
            attack.tick -= span
            still.append(attack)
    state.tracked = still
    state.finished.sort(key=lambda a: (a.end_frame, a.attack_id))


def classify_type(attack: Attack, types: Mapping[int, str], table: UnitTable) -> str:
    """Attack type from the attacker's involved units.

    Precedence: Drop (transport plus a ground unit) > Invisible (every
    damage dealer cloaked) > AirRaid (every military unit flying) >
    Ground.
    """
    if attack.attacker_pid is None:
        raise NoAttackerUnits(f"attack {attack.attack_id} has no attacker resolved")
    uids = attack.units_involved.get(attack.attacker_pid, set())
    attrs = []
    for uid in sorted(uids):
        utype = types.get(uid)
        if utype is None:
            continue
        if utype not in table:
            raise UnknownUnitType(f"unit type {utype!r} not in attribute table")
        attrs.append(table[utype])
    if not attrs:
        raise NoAttackerUnits(f"attack {attack.attack_id}: attacker has no usable units")
    military = [a for a in attrs if a.is_military]
    if any(a.is_transport for a in attrs) and any(not a.is_flying for a in attrs):
        return DROP
    if military and all(a.is_cloaked for a in military):
        return INVISIBLE
    if military and all(a.is_flying for a in military):
        return AIR_RAID
    return GROUND


def _resolve_sides(attack: Attack, log: GameLog, config: TrackerConfig) -> tuple[int, int]:
    """Attacker = side with more involved units issuing attack orders into
    the battle footprint shortly before/while it ran; ties fall back to
    the most recent arrival inside the hull, then the lower player id."""
    pids = sorted(log.player_ids())
    window_start = attack.start_frame - config.order_window_frames
    orderers: dict[int, set[int]] = {p: set() for p in pids}
    involved_all = attack.all_involved()
    for o in log.orders:
        if o.frame > attack.end_frame:
            break
        if o.frame < window_start or o.order_type not in config.attack_order_types:
            continue
        if o.player_id not in orderers or o.unit_id not in involved_all:
            continue
        targeted = geometry.distance_to_hull(
            attack.hull, (float(o.target_x), float(o.target_y))) <= config.context_radius_px
        if not targeted and o.target_unit_id is not None:
            targeted = o.target_unit_id in involved_all
        if targeted:
            orderers[o.player_id].add(o.unit_id)

    counts = {p: len(orderers[p]) for p in pids}
    if counts[pids[0]] != counts[pids[1]]:
        attacker = max(pids, key=lambda p: counts[p])
        return attacker, _other(pids, attacker)

    # tie: latest first-arrival of an involved unit inside the hull
    first_inside: dict[int, dict[int, int]] = {p: {} for p in pids}
    owner_of: dict[int, int] = {}
    for p in pids:
        for uid in attack.units_involved.get(p, set()):
            owner_of[uid] = p
    for s in log.positions:
        if s.frame > attack.end_frame:
            break
        p = owner_of.get(s.unit_id)
        if p is None or s.unit_id in first_inside[p]:
            continue
        if geometry.point_in_hull(attack.hull, (float(s.x), float(s.y))):
            first_inside[p][s.unit_id] = s.frame
    arrival = {p: max(first_inside[p].values(), default=-1) for p in pids}
    if arrival[pids[0]] != arrival[pids[1]]:
        attacker = max(pids, key=lambda p: arrival[p])
        return attacker, _other(pids, attacker)
    return pids[0], pids[1]


def _other(pids: Sequence[int], pid: int) -> int:
    return pids[0] if pid == pids[1] else pids[1]


def _annotate_region(attack: Attack, log: GameLog, region_map: RegionMap | None) -> None:
    if region_map is not None:
        cx, cy = attack.position
        attack.region_id, attack.cdr_id = locate(region_map, cx, cy)
        return
    # no map available: borrow the labels of the closest sample of a lost unit
    lost = {uid for s in attack.units_lost.values() for uid in s}
    cx, cy = attack.position
    best: tuple[float, int, int, int] | None = None
    last_sample: dict[int, object] = {}
    for s in log.positions:
        if s.frame > attack.end_frame:
            break
        if s.unit_id in lost:
            last_sample[s.unit_id] = s
    for uid in sorted(last_sample):
        s = last_sample[uid]
        d = (s.x - cx) ** 2 + (s.y - cy) ** 2
        key = (d, uid, s.region_id, s.cdr_id)
        if best is None or key < best:
            best = key
    if best is not None:
        attack.region_id, attack.cdr_id = best[2], best[3]


def run_tracker(log: GameLog, region_map: RegionMap | None = None,
                config: TrackerConfig = TrackerConfig(),
                table: UnitTable | None = None) -> list[Attack]:
    """Track every battle in one game; deterministic given log and config.

    Returns finished attacks ordered by start frame, annotated with
    attacker/defender, attack type and region labels.
    """
    if table is None:
        table = UnitTable.default()
    world = WorldView(table)
    state = TrackerState()

    frames = sorted({e.frame for e in log.events} | {s.frame for s in log.positions})
    ev_idx = 0
    pos_idx = 0
    last_ticked = -1
    for f in frames:
        _advance_ticks(state, last_ticked + 1, f - 1)
        while pos_idx < len(log.positions) and log.positions[pos_idx].frame == f:
            world.apply_position(log.positions[pos_idx])
            pos_idx += 1
        while ev_idx < len(log.events) and log.events[ev_idx].frame == f:
            ev = log.events[ev_idx]
            ev_idx += 1
            if ev.kind == DESTRUCTION:
                unit_death_event(state, ev.unit_id, f, world, config)
            world.apply_event(ev)
        _advance_ticks(state, f, f)
        last_ticked = f
    _advance_ticks(state, last_ticked + 1, log.duration_frames)
    for attack in state.tracked:       # game ended mid-battle
        attack.end_frame = log.duration_frames
        attack.tick = 0
        state.finished.append(attack)
    state.tracked = []

    types = _final_types(log)
    attacks = sorted(state.finished, key=lambda a: (a.start_frame, a.attack_id))
    for i, attack in enumerate(attacks):
        attack.attack_id = i
        attack.attacker_pid, attack.defender_pid = _resolve_sides(attack, log, config)
        attack.attack_type = classify_type(attack, types, table)
        _annotate_region(attack, log, region_map)
    return attacks


def _final_types(log: GameLog) -> dict[int, str]:
    types: dict[int, str] = {}
    for ev in log.events:
        if ev.kind in (CREATION, MORPH) and ev.unit_type is not None:
            types[ev.unit_id] = ev.unit_type
    return types


# ---------------------------------------------------------------------------
# attacks CSV
# ---------------------------------------------------------------------------

ATTACKS_COLUMNS = (
    "attack_id", "start_frame", "end_frame", "type", "attacker_pid",
    "defender_pid", "x", "y", "region", "cdr", "unitsA", "unitsB", "lostA", "lostB",
)


def attacks_to_csv(attacks: Iterable[Attack], pids: Sequence[int]) -> str:
    """Attack rows; unit-id lists joined with '|', players in pid order."""
    import csv as _csv
    import io as _io

    a_pid, b_pid = sorted(pids)
    buf = _io.StringIO()
    w = _csv.writer(buf, lineterminator="\n")
    w.writerow(ATTACKS_COLUMNS)
    for a in attacks:
        cx, cy = a.position
        w.writerow([
            a.attack_id, a.start_frame, a.end_frame, a.attack_type,
            a.attacker_pid, a.defender_pid, repr(cx), repr(cy),
            a.region_id, a.cdr_id,
            "|".join(str(u) for u in sorted(a.units_involved.get(a_pid, set()))),
            "|".join(str(u) for u in sorted(a.units_involved.get(b_pid, set()))),
            "|".join(str(u) for u in sorted(a.units_lost.get(a_pid, set()))),
            "|".join(str(u) for u in sorted(a.units_lost.get(b_pid, set()))),
        ])
    return buf.getvalue()
