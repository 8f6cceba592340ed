"""Seeded synthetic data: maps, game logs, battles, planted mixtures.

Everything here is an oracle for the rest of the pipeline: generated
logs carry a ground-truth attack list the tracker must recover exactly,
battles carry planted cluster labels and outcome probabilities, and all
output is a pure function of the config (PCG64 via numpy's default_rng;
per-game streams are derived with SeedSequence.spawn, so corpora are
reproducible game by game).

Scripted battles follow a strict timeline around a start frame t0 = fs+8
(fs a multiple of 100): participants spawn on a staging ring 400 frames
earlier, converge over the next samples, victims stand exactly on the
battle site from frame fs and die there every 16 frames, survivors hold
an 80 px ring and retreat home afterwards. Bases sit far enough from
every site (> 600 px) that home units never enter a battle context.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .attacktrack import AIR_RAID, DROP, GROUND, INVISIBLE
from .composition import ENEMY, OWN, BattleRecord, CompositionVector
from .errors import ValidationError
from .gmm import SPHERICAL, GmmModel
from .logmodel import (
    CREATION,
    DESTRUCTION,
    ECONOMY_PERIOD,
    POSITION_PERIOD,
    EconomySample,
    GameLog,
    Order,
    PlayerInfo,
    PositionSample,
    UnitEvent,
    write_game,
)
from .mapregions import GridMap, RegionMap, WalkGrid, build_region_map, locate, \
    ground_distance_matrix, write_grid_file
from .units import UnitTable

DEFAULT_BATTLE_SPACING = 2880          # 2 game minutes between scripted battles
_STAGING_RADIUS = 160.0
_RING_RADIUS = 80.0
_DEATH_STEP = 16
_START_OFFSET = 8                      # battles start at fs + 8, fs % 100 == 0


# ---------------------------------------------------------------------------
# planted parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantedMixture:
    """Ground-truth mixture: per-component weight, mean and scalar std."""

    weights: tuple[float, ...]
    means: tuple[tuple[float, ...], ...]
    stds: tuple[float, ...]

    def __post_init__(self):
        K = len(self.weights)
        if len(self.means) != K or len(self.stds) != K:
            raise ValidationError("planted mixture fields disagree on K")
        if abs(sum(self.weights) - 1.0) > 1e-9 or any(w < 0 for w in self.weights):
            raise ValidationError("planted weights must form a simplex")
        if any(s < 0 for s in self.stds):
            raise ValidationError("negative planted std")
        n = len(self.means[0])
        if any(len(m) != n for m in self.means):
            raise ValidationError("planted means differ in dimension")

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def n(self) -> int:
        return len(self.means[0])

    def to_model(self, basis: tuple[str, ...] = (), race: str = "",
                 scope: str = "") -> GmmModel:
        """Exact spherical GmmModel with the planted parameters."""
        variances = np.asarray([max(s * s, 1e-9) for s in self.stds])
        return GmmModel(structure=SPHERICAL,
                        weights=np.asarray(self.weights, dtype=float),
                        means=np.asarray(self.means, dtype=float),
                        covariances=variances,
                        basis=basis, race=race, scope=scope)


def simplex_corners_mixture(K: int, N: int, std: float,
                            weights: tuple[float, ...] | None = None) -> PlantedMixture:
    """Well-separated planted mixture: component k concentrates mass on
    coordinates around k, leaving a small floor elsewhere."""
    if K > N:
        raise ValidationError("need at least as many dimensions as components")
    floor = 0.05
    means = []
    for k in range(K):
        m = [floor] * N
        m[k] = 0.6
        m[(k + 1) % N] += 0.4 - floor * N + floor   # rebalance onto a second type
        s = sum(m)
        means.append(tuple(v / s for v in m))
    if weights is None:
        weights = tuple(1.0 / K for _ in range(K))
    return PlantedMixture(weights=weights, means=tuple(means), stds=tuple([std] * K))


def cyclic_counter_matrix(K: int, beat: float = 0.9) -> tuple[tuple[float, ...], ...]:
    """Rock-paper-scissors planted win probabilities: component (j+1) % K
    beats component j with probability ``beat``; mirrors are fair."""
    mat = [[0.5] * K for _ in range(K)]
    for j in range(K):
        i = (j + 1) % K
        mat[i][j] = beat
        mat[j][i] = 1.0 - beat
    return tuple(tuple(row) for row in mat)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    races: tuple[str, str] = ("Protoss", "Terran")
    games: int = 5
    battles_per_game: int = 3
    template: str = "tworooms"
    attack_kinds: tuple[str, ...] = (GROUND,)
    planted: PlantedMixture | None = None
    planted_counter: tuple[tuple[float, ...], ...] | None = None
    value_noise: float = 0.0                      # chance a battle is value-determined
    disparity_range: tuple[float, float] = (1.0, 1.5)
    scopes: tuple[str, ...] = ("m", "ws")
    battle_spacing: int = DEFAULT_BATTLE_SPACING


def synth_basis(race: str, n: int, table: UnitTable | None = None) -> tuple[str, ...]:
    """First n military unit types of the race, in the frozen ordering."""
    if table is None:
        table = UnitTable.default()
    mil = [t for t in table.types_for_race(race) if table[t].is_military]
    if n > len(mil):
        raise ValidationError(f"race {race} offers only {len(mil)} military types")
    return tuple(mil[:n])


# ---------------------------------------------------------------------------
# compositions and battles
# ---------------------------------------------------------------------------

def gen_compositions(mix: PlantedMixture, m: int,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample m simplex points from the planted mixture; returns (data,
    true labels).

    The Gaussian noise is drawn in the simplex tangent space (zero-sum
    direction removed), then clamped to >= 0 and renormalized. Keeping
    the draw on the sum-one hyperplane means renormalization almost
    never distorts the component shape, so planted parameters stay
    recoverable by a same-family fit.
    """
    K, N = mix.k, mix.n
    means = np.asarray(mix.means)
    stds = np.asarray(mix.stds)
    weights = np.asarray(mix.weights)
    labels = rng.choice(K, size=m, p=weights)
    data = np.empty((m, N))
    for i in range(m):
        k = labels[i]
        x = _tangent_draw(means[k], stds[k], rng)
        np.clip(x, 0.0, None, out=x)
        s = x.sum()
        while s <= 1e-12:
            x = _tangent_draw(means[k], stds[k], rng)
            np.clip(x, 0.0, None, out=x)
            s = x.sum()
        data[i] = x / s
    return data, labels


def _tangent_draw(mean: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    z = std * rng.standard_normal(len(mean))
    return mean + z - z.mean()


@dataclass(frozen=True)
class BattleTruth:
    own_label: int
    enemy_label: int
    own_won: bool


def gen_battles(cfg: SynthConfig, m: int,
                table: UnitTable | None = None,
                ) -> tuple[list[BattleRecord], list[BattleTruth]]:
    """Draw m synthetic battles (mirror match-up on cfg.races[0]).

    Each battle yields one record per perspective and scope. The winner
    follows the planted counter matrix, except that with probability
    ``value_noise`` the bigger army value wins instead.
    """
    if cfg.planted is None:
        raise ValidationError("gen_battles needs a planted mixture")
    mix = cfg.planted
    counter = cfg.planted_counter
    if counter is None:
        counter = tuple(tuple(0.5 for _ in range(mix.k)) for _ in range(mix.k))
    if len(counter) != mix.k or any(len(r) != mix.k for r in counter):
        raise ValidationError("planted counter matrix must be K x K")
    race = cfg.races[0]
    basis = synth_basis(race, mix.n, table)
    rng = np.random.default_rng(cfg.seed)

    records: list[BattleRecord] = []
    truths: list[BattleTruth] = []
    lo, hi = cfg.disparity_range
    for i in range(m):
        (u, eu), (c, ec) = _draw_pair(mix, rng)
        base = float(rng.uniform(400.0, 2400.0))
        ratio = float(rng.uniform(lo, hi))
        own_stronger = bool(rng.random() < 0.5)
        v_own, v_enemy = (base * ratio, base) if own_stronger else (base, base * ratio)
        value_winner_own = v_own >= v_enemy
        comp_winner_own = bool(rng.random() < counter[c][ec])
        use_value = bool(rng.random() < cfg.value_noise)
        own_won = value_winner_own if use_value else comp_winner_own
        truths.append(BattleTruth(int(c), int(ec), own_won))

        game_id = f"g{i // cfg.battles_per_game:05d}"
        frame = 1000 + (i % cfg.battles_per_game) * cfg.battle_spacing
        own_cv = CompositionVector(race, basis, tuple(float(v) for v in u), 10)
        enemy_cv = CompositionVector(race, basis, tuple(float(v) for v in eu), 10)
        for scope in cfg.scopes:
            records.append(BattleRecord(
                game_id=game_id, frame=frame, scope=scope,
                own=own_cv, enemy=enemy_cv, own_value=v_own, enemy_value=v_enemy,
                winner=OWN if own_won else ENEMY, own_pid=0))
            records.append(BattleRecord(
                game_id=game_id, frame=frame, scope=scope,
                own=enemy_cv, enemy=own_cv, own_value=v_enemy, enemy_value=v_own,
                winner=ENEMY if own_won else OWN, own_pid=1))
    return records, truths


def _draw_pair(mix: PlantedMixture,
               rng: np.random.Generator) -> tuple[tuple[np.ndarray, np.ndarray],
                                                  tuple[int, int]]:
    data, labels = gen_compositions(mix, 2, rng)
    return (data[0], data[1]), (int(labels[0]), int(labels[1]))


def gen_label_sequences(mix: PlantedMixture, n_sequences: int, length: int,
                        change_prob: float, dt_frames: int,
                        rng: np.random.Generator,
                        ) -> list[list[tuple[int, np.ndarray]]]:
    """Battle sequences for dynamics learning: each sequence keeps its
    component label, resampling it with ``change_prob`` at every step."""
    weights = np.asarray(mix.weights)
    out = []
    for _ in range(n_sequences):
        label = int(rng.choice(mix.k, p=weights))
        seq = []
        frame = 1000
        for _ in range(length):
            if seq and rng.random() < change_prob:
                label = int(rng.choice(mix.k, p=weights))
            x = _tangent_draw(np.asarray(mix.means[label]), mix.stds[label], rng)
            np.clip(x, 0.0, None, out=x)
            seq.append((frame, x / x.sum()))
            frame += dt_frames
        out.append(seq)
    return out


# ---------------------------------------------------------------------------
# map templates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MapTemplate:
    name: str
    grid_map: GridMap
    region_map: RegionMap
    home_tiles: tuple[tuple[int, int], tuple[int, int]]
    site_tiles: tuple[tuple[int, int], ...]

    def home_px(self, pid: int) -> tuple[float, float]:
        return self.region_map.grid.pixel_center(self.home_tiles[pid])

    def site_px(self, index: int) -> tuple[float, float]:
        return self.region_map.grid.pixel_center(self.site_tiles[index])


def _two_rooms(room_w: int, room_h: int, corridor: int,
               tile_size: int = 32) -> tuple[GridMap, tuple, tuple]:
    width = 2 * room_w + corridor
    height = room_h
    mid = height // 2
    rows = []
    region_of = {}
    for ty in range(height):
        row = []
        for tx in range(width):
            in_left = tx < room_w
            in_right = tx >= room_w + corridor
            in_corr = (not in_left and not in_right) and (mid - 1 <= ty <= mid + 1)
            walk = in_left or in_right or in_corr
            row.append(walk)
            if walk:
                region_of[(tx, ty)] = 0 if tx < room_w + corridor // 2 else 1
        rows.append(tuple(row))
    grid = WalkGrid(width, height, tile_size, tuple(rows))
    cx = room_w + corridor // 2
    choke = frozenset({(cx, mid - 1), (cx, mid), (cx, mid + 1)})
    homes = ((1, mid), (width - 2, mid))
    sites = ((cx, mid),)
    return GridMap(grid, region_of, ((0, choke),)), homes, sites


def _rooms_row(n_rooms: int, room_w: int, room_h: int, corridor: int,
               tile_size: int = 32) -> tuple[GridMap, tuple, tuple]:
    width = n_rooms * room_w + (n_rooms - 1) * corridor
    height = room_h
    mid = height // 2
    rows = []
    region_of = {}
    bounds = []
    for r in range(n_rooms):
        start = r * (room_w + corridor)
        bounds.append((start, start + room_w))
    for ty in range(height):
        row = []
        for tx in range(width):
            room = next((i for i, (a, b) in enumerate(bounds) if a <= tx < b), None)
            in_corr = room is None and (mid - 1 <= ty <= mid + 1)
            walk = room is not None or in_corr
            row.append(walk)
            if walk:
                if room is not None:
                    region_of[(tx, ty)] = room
                else:
                    left = tx // (room_w + corridor)
                    gap_start = bounds[left][1]
                    region_of[(tx, ty)] = left if tx < gap_start + corridor // 2 else left + 1
        rows.append(tuple(row))
    grid = WalkGrid(width, height, tile_size, tuple(rows))
    chokes = []
    for i in range(n_rooms - 1):
        cx = bounds[i][1] + corridor // 2
        chokes.append((i, frozenset({(cx, mid - 1), (cx, mid), (cx, mid + 1)})))
    homes = ((1, mid), (width - 2, mid))
    centers = tuple((a + room_w // 2, mid) for a, _ in bounds[1:-1])
    sites = centers + tuple((b + corridor // 2, mid) for _, b in
                            [bounds[i] for i in range(n_rooms - 1)])
    return GridMap(grid, region_of, tuple(chokes)), homes, sites


def _four_rooms(room: int, corridor: int, tile_size: int = 32) -> tuple[GridMap, tuple, tuple]:
    side = 2 * room + corridor
    rows = []
    region_of = {}
    mid_lo = room + corridor // 2 - 1
    mid_hi = room + corridor // 2 + 1

    def room_index(tx: int, ty: int) -> int | None:
        col = 0 if tx < room else (1 if tx >= room + corridor else None)
        rw = 0 if ty < room else (1 if ty >= room + corridor else None)
        if col is None or rw is None:
            return None
        return rw * 2 + col

    for ty in range(side):
        row = []
        for tx in range(side):
            r = room_index(tx, ty)
            in_vert = r is None and room <= tx < room + corridor and \
                (mid_lo <= ty <= mid_hi or ty < room or ty >= room + corridor)
            in_horz = r is None and room <= ty < room + corridor and \
                (mid_lo <= tx <= mid_hi or tx < room or tx >= room + corridor)
            walk = r is not None or in_vert or in_horz
            row.append(walk)
            if walk:
                if r is not None:
                    region_of[(tx, ty)] = r
                else:
                    col = 0 if tx < side // 2 else 1
                    rw = 0 if ty < side // 2 else 1
                    region_of[(tx, ty)] = rw * 2 + col
        rows.append(tuple(row))
    grid = WalkGrid(side, side, tile_size, tuple(rows))
    c = room + corridor // 2
    half = room // 2
    chokes = (
        (0, frozenset({(c, half)})),            # between rooms 0 and 1
        (1, frozenset({(half, c)})),            # between rooms 0 and 2
        (2, frozenset({(side - 1 - half, c)})),  # between rooms 1 and 3
        (3, frozenset({(c, side - 1 - half)})),  # between rooms 2 and 3
    )
    homes = ((1, 1), (side - 2, side - 2))
    sites = ((c, c),)
    return GridMap(grid, region_of, chokes), homes, sites


def _template(name: str) -> MapTemplate:
    if name == "tworooms":
        gm, homes, sites = _two_rooms(24, 19, 9)
    elif name == "tworooms-large":
        gm, homes, sites = _two_rooms(30, 25, 11)
    elif name == "threerooms":
        gm, homes, sites = _rooms_row(3, 18, 17, 7)
    elif name == "fourrooms-row":
        gm, homes, sites = _rooms_row(4, 16, 15, 7)
    elif name == "fourrooms":
        gm, homes, sites = _four_rooms(22, 5)
    else:
        raise ValidationError(f"unknown map template {name!r}")
    rm = build_region_map(gm)
    tpl = MapTemplate(name=name, grid_map=gm, region_map=rm,
                      home_tiles=homes, site_tiles=sites)
    # base units must stay outside every battle's creation context
    ts = gm.grid.tile_size
    for s in sites:
        for h in homes:
            d = math.hypot((s[0] - h[0]) * ts, (s[1] - h[1]) * ts)
            if d <= 560.0:
                raise ValidationError(
                    f"template {name}: site {s} too close to home {h} ({d:.0f} px)")
    return tpl


TEMPLATE_NAMES = ("tworooms", "tworooms-large", "threerooms", "fourrooms-row", "fourrooms")


def map_template(name: str) -> MapTemplate:
    return _template(name)


# ---------------------------------------------------------------------------
# scripted game logs
# ---------------------------------------------------------------------------

_GROUND_POOL = {
    "Protoss": ("Zealot", "Dragoon"),
    "Terran": ("Marine", "Firebat", "Vulture"),
    "Zerg": ("Zergling", "Hydralisk"),
}
_AIR_POOL = {
    "Protoss": ("Corsair", "Scout"),
    "Terran": ("Wraith",),
    "Zerg": ("Mutalisk",),
}
_CLOAKED_POOL = {
    "Protoss": ("Dark Templar",),
    "Terran": ("Ghost",),
    "Zerg": ("Lurker",),
}
_TRANSPORT = {"Protoss": "Shuttle", "Terran": "Dropship", "Zerg": "Overlord"}
_TOWNHALL = {"Protoss": "Nexus", "Terran": "Command Center", "Zerg": "Hatchery"}
_WORKER = {"Protoss": "Probe", "Terran": "SCV", "Zerg": "Drone"}


@dataclass(frozen=True)
class TruthAttack:
    """What the tracker must recover for one scripted battle."""

    start_frame: int
    attack_type: str
    attacker_pid: int
    site_px: tuple[float, float]
    units: tuple[tuple[int, tuple[int, ...]], ...]     # (pid, sorted uids)
    losses: tuple[tuple[int, tuple[int, ...]], ...]

    def units_of(self, pid: int) -> set[int]:
        return set(dict(self.units).get(pid, ()))

    def losses_of(self, pid: int) -> set[int]:
        return set(dict(self.losses).get(pid, ()))


@dataclass
class _ScriptUnit:
    uid: int
    pid: int
    utype: str
    battle: int
    spawn_frame: int
    death_frame: int | None          # None = survives
    site: tuple[float, float]
    angle: float
    home: tuple[float, float]
    is_victim: bool


def _attacker_group(kind: str, race: str, rng: np.random.Generator) -> list[str]:
    if kind == GROUND:
        pool = _GROUND_POOL[race]
        n = 3 + int(rng.integers(0, 3))
        return [pool[int(rng.integers(0, len(pool)))] for _ in range(n)]
    if kind == AIR_RAID:
        pool = _AIR_POOL[race]
        n = 3 + int(rng.integers(0, 3))
        return [pool[int(rng.integers(0, len(pool)))] for _ in range(n)]
    if kind == INVISIBLE:
        pool = _CLOAKED_POOL[race]
        n = 3 + int(rng.integers(0, 2))
        return [pool[0] for _ in range(n)]
    if kind == DROP:
        pool = _GROUND_POOL[race]
        n = 3 + int(rng.integers(0, 2))
        return [_TRANSPORT[race]] + [pool[int(rng.integers(0, len(pool)))]
                                     for _ in range(n)]
    raise ValidationError(f"unknown attack kind {kind!r}")


def _ring_position(site: tuple[float, float], angle: float,
                   radius: float) -> tuple[int, int]:
    return (int(round(site[0] + radius * math.cos(angle))),
            int(round(site[1] + radius * math.sin(angle))))


def gen_gamelog(cfg: SynthConfig, game_index: int = 0,
                rng: np.random.Generator | None = None,
                table: UnitTable | None = None,
                ) -> tuple[GameLog, list[TruthAttack], MapTemplate]:
    """One scripted game: base units, converging movement, battles with a
    known participant/loss/type ground truth."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(
            game_index + 1)[game_index])
    if table is None:
        table = UnitTable.default()
    tpl = map_template(cfg.template)
    rm = tpl.region_map
    players = (PlayerInfo(0, "alpha", cfg.races[0]), PlayerInfo(1, "bravo", cfg.races[1]))

    uid_counter = [1]

    def new_uid() -> int:
        uid_counter[0] += 1
        return uid_counter[0] - 1

    script_units: list[_ScriptUnit] = []
    truths: list[TruthAttack] = []

    # base: townhall + 4 workers per player, present the whole game
    base_units: list[tuple[int, int, str, tuple[float, float]]] = []
    for pid in (0, 1):
        home = tpl.home_px(pid)
        race = cfg.races[pid]
        base_units.append((new_uid(), pid, _TOWNHALL[race], home))
        for w in range(4):
            pos = (home[0] + 20.0 * (w - 1.5), home[1] + 24.0)
            base_units.append((new_uid(), pid, _WORKER[race], pos))

    n_battles = cfg.battles_per_game
    for b in range(n_battles):
        fs = 1000 + b * cfg.battle_spacing
        fs -= fs % 100
        t0 = fs + _START_OFFSET
        site = tpl.site_px(b % len(tpl.site_tiles))
        kind = cfg.attack_kinds[b % len(cfg.attack_kinds)]
        attacker_pid = int(rng.integers(0, 2))
        defender_pid = 1 - attacker_pid

        att_types = _attacker_group(kind, cfg.races[attacker_pid], rng)
        def_pool = _GROUND_POOL[cfg.races[defender_pid]]
        def_n = 2 + int(rng.integers(0, 3))
        def_types = [def_pool[int(rng.integers(0, len(def_pool)))] for _ in range(def_n)]

        def_losses = 1 + int(rng.integers(0, def_n))
        att_military = [t for t in att_types if table[t].is_military]
        att_losses = int(rng.integers(0, len(att_military)))

        group: list[_ScriptUnit] = []
        angle_step = 2.0 * math.pi / (len(att_types) + len(def_types))
        idx = 0
        victims: list[_ScriptUnit] = []
        for pid, types, losses in ((defender_pid, def_types, def_losses),
                                   (attacker_pid, att_types, att_losses)):
            lost = 0
            for t in types:
                is_transport = table[t].is_transport
                is_victim = lost < losses and not is_transport
                if is_victim:
                    lost += 1
                u = _ScriptUnit(
                    uid=new_uid(), pid=pid, utype=t, battle=b,
                    spawn_frame=fs - 400, death_frame=None,
                    site=site, angle=idx * angle_step,
                    home=tpl.home_px(pid), is_victim=is_victim)
                idx += 1
                group.append(u)
                if is_victim:
                    victims.append(u)
        # defender victims first, then attacker victims: creation death is a defender's
        victims.sort(key=lambda u: (u.pid != defender_pid, u.uid))
        for i, v in enumerate(victims):
            v.death_frame = t0 + i * _DEATH_STEP
        script_units.extend(group)

        truths.append(TruthAttack(
            start_frame=t0,
            attack_type=kind,
            attacker_pid=attacker_pid,
            site_px=site,
            units=tuple(sorted(
                (pid, tuple(sorted(u.uid for u in group if u.pid == pid)))
                for pid in (0, 1))),
            losses=tuple(sorted(
                (pid, tuple(sorted(u.uid for u in group
                                   if u.pid == pid and u.is_victim)))
                for pid in (0, 1))),
        ))

    last_battle_frame = max((t.start_frame for t in truths), default=0)
    duration = last_battle_frame + 1600
    duration -= duration % 100

    # --- events -----------------------------------------------------------
    events: list[UnitEvent] = []
    for uid, pid, utype, pos in base_units:
        events.append(UnitEvent(0, CREATION, uid, utype, pid,
                                int(round(pos[0])), int(round(pos[1]))))
    for u in script_units:
        x, y = _ring_position(u.site, u.angle, _STAGING_RADIUS)
        events.append(UnitEvent(u.spawn_frame, CREATION, u.uid, u.utype, u.pid, x, y))
    for u in script_units:
        if u.death_frame is not None:
            events.append(UnitEvent(u.death_frame, DESTRUCTION, u.uid))
    events.sort(key=lambda e: (e.frame, 0 if e.kind == CREATION else 1, e.unit_id))

    # --- orders: attacker units aim at the site shortly before the fight ---
    orders: list[Order] = []
    for bi, t in enumerate(truths):
        fs = t.start_frame - _START_OFFSET
        for u in script_units:
            if u.battle == bi and u.pid == t.attacker_pid:
                orders.append(Order(fs - 200, u.pid, u.uid, "AttackMove",
                                    int(t.site_px[0]), int(t.site_px[1]), None))
    orders.sort(key=lambda o: (o.frame, o.unit_id))

    # --- position samples ---------------------------------------------------
    def unit_position(u: _ScriptUnit, frame: int) -> tuple[int, int]:
        fs = u.spawn_frame + 400
        if frame <= u.spawn_frame:
            return _ring_position(u.site, u.angle, _STAGING_RADIUS)
        if frame < fs:
            # converge from staging ring to the battle ring
            steps = (frame - u.spawn_frame) // POSITION_PERIOD
            radius = _STAGING_RADIUS - (_STAGING_RADIUS - _RING_RADIUS) * steps / 4.0
            return _ring_position(u.site, u.angle, radius)
        last_death = fs + _START_OFFSET + 600
        if u.is_victim or frame <= last_death:
            if u.is_victim:
                return (int(round(u.site[0])), int(round(u.site[1])))
            return _ring_position(u.site, u.angle, _RING_RADIUS)
        return (int(round(u.home[0])), int(round(u.home[1])))

    samples: list[PositionSample] = []
    mobile_base = [b for b in base_units if table[b[2]].is_worker]
    for frame in range(0, duration + 1, POSITION_PERIOD):
        for uid, pid, utype, pos in mobile_base:
            samples.append(_sample_at(rm, frame, uid, int(pos[0]), int(pos[1])))
        for u in script_units:
            if frame < u.spawn_frame:
                continue
            if u.death_frame is not None and frame > u.death_frame:
                continue
            x, y = unit_position(u, frame)
            samples.append(_sample_at(rm, frame, u.uid, x, y))
    samples.sort(key=lambda s: (s.frame, s.unit_id))

    # --- economy -------------------------------------------------------------
    economy: list[EconomySample] = []
    for frame in range(0, duration + 1, ECONOMY_PERIOD):
        for pid in (0, 1):
            economy.append(EconomySample(
                frame, pid,
                minerals=500 + (frame * 3) // 50 + 17 * pid,
                gas=200 + frame // 50,
                supply=10 + frame // 2000,
                max_supply=40 + 10 * (frame // 5000)))

    region_d = ground_distance_matrix(rm.grid, rm.region_centers)
    cdr_d = ground_distance_matrix(rm.grid, rm.cdr_centers)

    log = GameLog(
        map_name=f"synth-{cfg.template}",
        players=players,
        events=tuple(events),
        economy=tuple(economy),
        orders=tuple(orders),
        positions=tuple(samples),
        region_distances=region_d,
        cdr_distances=cdr_d,
        duration_frames=duration,
    )
    log.validate()
    return log, truths, tpl


def _sample_at(rm: RegionMap, frame: int, uid: int, x: int, y: int) -> PositionSample:
    region, cdr = locate(rm, float(x), float(y))
    return PositionSample(frame, uid, x, y, region, cdr)


# ---------------------------------------------------------------------------
# corpus emission
# ---------------------------------------------------------------------------

def truth_to_json(truths: Sequence[TruthAttack]) -> str:
    payload = [{
        "start_frame": t.start_frame,
        "attack_type": t.attack_type,
        "attacker_pid": t.attacker_pid,
        "site_px": list(t.site_px),
        "units": {str(pid): list(uids) for pid, uids in t.units},
        "losses": {str(pid): list(uids) for pid, uids in t.losses},
    } for t in truths]
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def gen_corpus(cfg: SynthConfig, out_dir: str | Path,
               table: UnitTable | None = None) -> list[Path]:
    """Write cfg.games scripted games (dump triples + .truth sidecars) and
    the map grid file; returns the game stems."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.games)
    stems = []
    tpl_written = False
    for g in range(cfg.games):
        rng = np.random.default_rng(seeds[g])
        log, truths, tpl = gen_gamelog(cfg, game_index=g, rng=rng, table=table)
        if not tpl_written:
            (out / f"{tpl.name}.grid").write_text(
                write_grid_file(tpl.grid_map), encoding="utf-8")
            tpl_written = True
        stem = out / f"game{g:04d}"
        write_game(log, stem)
        stem.with_suffix(".truth").write_text(truth_to_json(truths), encoding="utf-8")
        stems.append(stem)
    return stems
