"""Replay telemetry: domain types plus parsers/writers for the dump files.

One game is described by three line-oriented, semicolon-separated UTF-8
files sharing a basename (LF endings, full-line ``#`` comments and blank
lines ignored):

``.rgd``
    ``Map;<name>``, one ``Player;<id>;<name>;<race>`` per player, an
    optional ``Duration;<frames>`` line, then interleaved records::

        <frame>;Created;<uid>;<utype>;<pid>;<x>;<y>
        <frame>;Morphed;<uid>;<utype>;<pid>;<x>;<y>
        <frame>;Destroyed;<uid>
        <frame>;Discovered;<uid>;<pid>
        <frame>;Owned;<uid>;<pid>
        <frame>;R;<pid>;<minerals>;<gas>;<supply>;<maxsupply>

``.rod``
    ``<frame>;<pid>;<uid>;<order_type>;<tx>;<ty>;<target_uid|->``

``.rld``
    ``Regions;<n>`` + n rows of n space-separated pixel distances
    (``-1`` = unreachable), ``ChokeDepReg;<m>`` + m rows, then samples
    ``<frame>;<uid>;<x>;<y>;<region_id>;<cdr_id>``.

Writers are the exact inverses: ``parse(write(log))`` reproduces the log
field for field, and output is byte-stable. Time is always in frames
(24 frames per game second); minutes appear only in reports.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from .errors import (
    DuplicateUnitCreation,
    EmptyCorpus,
    MalformedLine,
    MatrixSizeMismatch,
    UnknownEventTag,
    ValidationError,
)
from .units import RACES, matchup

FRAMES_PER_SECOND = 24
ECONOMY_PERIOD = 25
POSITION_PERIOD = 100
UNREACHABLE = -1

CREATION = "Creation"
MORPH = "Morph"
DESTRUCTION = "Destruction"
DISCOVERY = "Discovery"
OWNERSHIP_CHANGE = "OwnershipChange"

_TAG_TO_KIND = {
    "Created": CREATION,
    "Morphed": MORPH,
    "Destroyed": DESTRUCTION,
    "Discovered": DISCOVERY,
    "Owned": OWNERSHIP_CHANGE,
}
_KIND_TO_TAG = {v: k for k, v in _TAG_TO_KIND.items()}


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlayerInfo:
    id: int
    name: str
    race: str

    def __post_init__(self):
        if self.race not in RACES:
            raise ValidationError(f"unknown race {self.race!r}")
        if ";" in self.name or not self.name:
            raise ValidationError(f"bad player name {self.name!r}")


@dataclass(frozen=True)
class UnitEvent:
    frame: int
    kind: str
    unit_id: int
    unit_type: str | None = None
    player_id: int | None = None
    x: int | None = None
    y: int | None = None


@dataclass(frozen=True)
class EconomySample:
    frame: int
    player_id: int
    minerals: int
    gas: int
    supply: int
    max_supply: int


@dataclass(frozen=True)
class Order:
    frame: int
    player_id: int
    unit_id: int
    order_type: str
    target_x: int
    target_y: int
    target_unit_id: int | None = None


@dataclass(frozen=True)
class PositionSample:
    frame: int
    unit_id: int
    x: int
    y: int
    region_id: int
    cdr_id: int


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pixel ground-distance matrix; -1 marks unreachable pairs."""

    n: int
    d: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.d) != self.n or any(len(row) != self.n for row in self.d):
            raise MatrixSizeMismatch(f"expected {self.n}x{self.n} matrix")
        for i in range(self.n):
            if self.d[i][i] != 0:
                raise ValidationError(f"nonzero diagonal at {i}")
            for j in range(self.n):
                if self.d[i][j] != self.d[j][i]:
                    raise ValidationError(f"asymmetric at ({i},{j})")
                if self.d[i][j] < 0 and self.d[i][j] != UNREACHABLE:
                    raise ValidationError(f"negative distance at ({i},{j})")

    def check_triangle_inequality(self) -> None:
        """Raise unless d[i][j] <= d[i][k] + d[k][j] for all reachable triples."""
        d = self.d
        for i in range(self.n):
            for k in range(self.n):
                if d[i][k] == UNREACHABLE:
                    continue
                for j in range(self.n):
                    if d[k][j] == UNREACHABLE or d[i][j] == UNREACHABLE:
                        continue
                    if d[i][j] > d[i][k] + d[k][j]:
                        raise ValidationError(
                            f"triangle inequality violated at ({i},{k},{j})")

    def mean_reachable(self) -> float | None:
        """Mean distance over unordered reachable pairs i<j, or None."""
        vals = [self.d[i][j]
                for i in range(self.n) for j in range(i + 1, self.n)
                if self.d[i][j] != UNREACHABLE]
        return sum(vals) / len(vals) if vals else None

    @classmethod
    def empty(cls) -> "DistanceMatrix":
        return cls(0, ())


@dataclass(frozen=True)
class GameLog:
    """Full parsed telemetry of one 1v1 game. Immutable and thread-safe."""

    map_name: str
    players: tuple[PlayerInfo, ...]
    events: tuple[UnitEvent, ...] = ()
    economy: tuple[EconomySample, ...] = ()
    orders: tuple[Order, ...] = ()
    positions: tuple[PositionSample, ...] = ()
    region_distances: DistanceMatrix = field(default_factory=DistanceMatrix.empty)
    cdr_distances: DistanceMatrix = field(default_factory=DistanceMatrix.empty)
    duration_frames: int = 0

    @property
    def matchup(self) -> str:
        return matchup(self.players[0].race, self.players[1].race)

    def player_ids(self) -> tuple[int, ...]:
        return tuple(p.id for p in self.players)

    def validate(self) -> None:
        """Enforce the cross-stream invariants; raise ValidationError."""
        if len(self.players) != 2:
            raise ValidationError(f"expected 2 players, got {len(self.players)}")
        if len({p.id for p in self.players}) != 2:
            raise ValidationError("duplicate player ids")
        if self.duration_frames < 0:
            raise ValidationError("negative duration")
        pids = set(self.player_ids())

        for name, stream in (("events", self.events), ("economy", self.economy),
                             ("orders", self.orders), ("positions", self.positions)):
            last = 0
            for rec in stream:
                if rec.frame < last:
                    raise ValidationError(f"{name} stream frame decreases at {rec.frame}")
                if rec.frame > self.duration_frames:
                    raise ValidationError(f"{name} frame {rec.frame} beyond duration")
                last = rec.frame

        # first appearance per unit id (creation or discovery)
        first_seen: dict[int, int] = {}
        alive: set[int] = set()
        for ev in self.events:
            if ev.kind in (CREATION, DISCOVERY):
                first_seen.setdefault(ev.unit_id, ev.frame)
                alive.add(ev.unit_id)
            elif ev.unit_id not in first_seen or ev.frame < first_seen[ev.unit_id]:
                raise ValidationError(
                    f"event on unit {ev.unit_id} before its creation/discovery")
            if ev.kind == DESTRUCTION:
                alive.discard(ev.unit_id)
            if ev.player_id is not None and ev.player_id not in pids:
                raise ValidationError(f"event references unknown player {ev.player_id}")

        for s in self.economy:
            if s.frame % ECONOMY_PERIOD != 0:
                raise ValidationError(f"economy sample at frame {s.frame} not mod {ECONOMY_PERIOD}")
            if s.player_id not in pids:
                raise ValidationError(f"economy sample for unknown player {s.player_id}")

        def check_ref(uid: int, frame: int, what: str) -> None:
            if uid not in first_seen or first_seen[uid] > frame:
                raise ValidationError(f"{what} references unit {uid} before it exists")

        for o in self.orders:
            if o.player_id not in pids:
                raise ValidationError(f"order for unknown player {o.player_id}")
            check_ref(o.unit_id, o.frame, "order")
            if o.target_unit_id is not None:
                check_ref(o.target_unit_id, o.frame, "order target")

        prev_label: dict[int, tuple[int, int]] = {}
        for s in self.positions:
            check_ref(s.unit_id, s.frame, "position sample")
            if s.region_id >= self.region_distances.n or s.region_id < 0:
                raise ValidationError(f"position sample region {s.region_id} out of range")
            if s.cdr_id >= self.cdr_distances.n or s.cdr_id < 0:
                raise ValidationError(f"position sample cdr {s.cdr_id} out of range")
            if s.frame % POSITION_PERIOD != 0:
                before = prev_label.get(s.unit_id)
                if before is not None and before == (s.region_id, s.cdr_id):
                    raise ValidationError(
                        f"off-period sample at frame {s.frame} without region change")
            prev_label[s.unit_id] = (s.region_id, s.cdr_id)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _iter_lines(text: str | bytes) -> Iterator[tuple[int, str]]:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLine(0, f"not valid UTF-8: {exc}") from None
    for no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line or line.startswith("#"):
            continue
        yield no, line


def _int(value: str, no: int, line: str, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise MalformedLine(no, f"{what} is not an integer", line) from None


@dataclass(frozen=True)
class RgdData:
    """Header plus the two .rgd record streams."""

    map_name: str
    players: tuple[PlayerInfo, ...]
    duration_frames: int | None
    events: tuple[UnitEvent, ...]
    economy: tuple[EconomySample, ...]


def parse_rgd(text: str | bytes) -> RgdData:
    """Parse a .rgd dump; every line maps to one record or raises."""
    map_name: str | None = None
    players: list[PlayerInfo] = []
    duration: int | None = None
    events: list[UnitEvent] = []
    economy: list[EconomySample] = []
    header_open = True
    seen: dict[int, bool] = {}          # uid -> alive
    last_event_frame = 0
    last_econ_frame = 0

    for no, line in _iter_lines(text):
        parts = line.split(";")
        tag = parts[0]
        if tag == "Map":
            if not header_open or map_name is not None:
                raise MalformedLine(no, "unexpected Map line", line)
            if len(parts) < 2:
                raise MalformedLine(no, "Map line needs a name", line)
            map_name = ";".join(parts[1:])
            continue
        if tag == "Player":
            if not header_open or map_name is None:
                raise MalformedLine(no, "Player line outside header", line)
            if len(parts) != 4:
                raise MalformedLine(no, "Player line needs id;name;race", line)
            pid = _int(parts[1], no, line, "player id")
            if parts[3] not in RACES:
                raise MalformedLine(no, f"unknown race {parts[3]!r}", line)
            if any(p.id == pid for p in players):
                raise MalformedLine(no, f"duplicate player id {pid}", line)
            players.append(PlayerInfo(pid, parts[2], parts[3]))
            continue
        if tag == "Duration":
            if not header_open:
                raise MalformedLine(no, "Duration line after records", line)
            if len(parts) != 2:
                raise MalformedLine(no, "Duration line needs a frame count", line)
            duration = _int(parts[1], no, line, "duration")
            if duration < 0:
                raise MalformedLine(no, "negative duration", line)
            continue

        # first record line closes the header
        if map_name is None or len(players) != 2:
            raise MalformedLine(no, "record before complete header (Map + 2 Players)", line)
        header_open = False

        frame = _int(parts[0], no, line, "frame")
        if frame < 0:
            raise MalformedLine(no, "negative frame", line)
        kind_tag = parts[1] if len(parts) > 1 else ""
        pids = {p.id for p in players}

        if kind_tag == "R":
            if len(parts) != 7:
                raise MalformedLine(no, "R record needs 7 fields", line)
            if frame % ECONOMY_PERIOD != 0:
                raise MalformedLine(no, f"economy frame not mod {ECONOMY_PERIOD}", line)
            if frame < last_econ_frame:
                raise MalformedLine(no, "economy frame decreases", line)
            last_econ_frame = frame
            pid = _int(parts[2], no, line, "player id")
            if pid not in pids:
                raise MalformedLine(no, f"unknown player {pid}", line)
            nums = [_int(p, no, line, "economy value") for p in parts[3:7]]
            if any(v < 0 for v in nums):
                raise MalformedLine(no, "negative economy value", line)
            economy.append(EconomySample(frame, pid, *nums))
            continue

        if kind_tag not in _TAG_TO_KIND:
            raise UnknownEventTag(no, f"unknown event tag {kind_tag!r}", line)
        kind = _TAG_TO_KIND[kind_tag]
        if frame < last_event_frame:
            raise MalformedLine(no, "event frame decreases", line)
        last_event_frame = frame

        if kind in (CREATION, MORPH):
            if len(parts) != 7:
                raise MalformedLine(no, f"{kind_tag} record needs 7 fields", line)
            uid = _int(parts[2], no, line, "unit id")
            utype = parts[3]
            if not utype:
                raise MalformedLine(no, "empty unit type", line)
            pid = _int(parts[4], no, line, "player id")
            if pid not in pids:
                raise MalformedLine(no, f"unknown player {pid}", line)
            x = _int(parts[5], no, line, "x")
            y = _int(parts[6], no, line, "y")
            if kind == CREATION:
                if uid in seen:
                    raise DuplicateUnitCreation(no, f"unit {uid} created twice", line)
                seen[uid] = True
            elif not seen.get(uid, False):
                raise MalformedLine(no, f"morph of unknown or dead unit {uid}", line)
            events.append(UnitEvent(frame, kind, uid, utype, pid, x, y))
        elif kind == DESTRUCTION:
            if len(parts) != 3:
                raise MalformedLine(no, "Destroyed record needs 3 fields", line)
            uid = _int(parts[2], no, line, "unit id")
            if not seen.get(uid, False):
                raise MalformedLine(no, f"destruction of unknown or dead unit {uid}", line)
            seen[uid] = False
            events.append(UnitEvent(frame, DESTRUCTION, uid))
        else:  # Discovery / OwnershipChange
            if len(parts) != 4:
                raise MalformedLine(no, f"{kind_tag} record needs 4 fields", line)
            uid = _int(parts[2], no, line, "unit id")
            pid = _int(parts[3], no, line, "player id")
            if pid not in pids:
                raise MalformedLine(no, f"unknown player {pid}", line)
            if kind == DISCOVERY:
                seen.setdefault(uid, True)
            elif not seen.get(uid, False):
                raise MalformedLine(no, f"ownership change of unknown or dead unit {uid}", line)
            events.append(UnitEvent(frame, kind, uid, None, pid))

    if map_name is None or len(players) != 2:
        raise MalformedLine(0, "missing header (Map + 2 Players)")
    return RgdData(map_name, tuple(players), duration, tuple(events), tuple(economy))


def parse_rod(text: str | bytes) -> tuple[Order, ...]:
    """Parse a .rod dump into the order stream."""
    orders: list[Order] = []
    last_frame = 0
    for no, line in _iter_lines(text):
        parts = line.split(";")
        if len(parts) != 7:
            raise MalformedLine(no, "order record needs 7 fields", line)
        frame = _int(parts[0], no, line, "frame")
        if frame < 0:
            raise MalformedLine(no, "negative frame", line)
        if frame < last_frame:
            raise MalformedLine(no, "order frame decreases", line)
        last_frame = frame
        pid = _int(parts[1], no, line, "player id")
        uid = _int(parts[2], no, line, "unit id")
        otype = parts[3]
        if not otype:
            raise MalformedLine(no, "empty order type", line)
        tx = _int(parts[4], no, line, "target x")
        ty = _int(parts[5], no, line, "target y")
        target = None if parts[6] == "-" else _int(parts[6], no, line, "target unit id")
        orders.append(Order(frame, pid, uid, otype, tx, ty, target))
    return tuple(orders)


@dataclass(frozen=True)
class RldData:
    region_distances: DistanceMatrix
    cdr_distances: DistanceMatrix
    positions: tuple[PositionSample, ...]


def parse_rld(text: str | bytes) -> RldData:
    """Parse a .rld dump: two distance matrices, then position samples."""
    lines = list(_iter_lines(text))
    idx = 0

    def read_matrix(tag: str) -> DistanceMatrix:
        nonlocal idx
        if idx >= len(lines):
            raise MalformedLine(0, f"missing {tag} header")
        no, line = lines[idx]
        parts = line.split(";")
        if len(parts) != 2 or parts[0] != tag:
            raise MalformedLine(no, f"expected {tag};<n> header", line)
        n = _int(parts[1], no, line, "matrix size")
        if n < 0:
            raise MalformedLine(no, "negative matrix size", line)
        idx += 1
        rows: list[tuple[int, ...]] = []
        for _ in range(n):
            if idx >= len(lines):
                raise MatrixSizeMismatch(f"{tag} matrix truncated: expected {n} rows")
            rno, row_line = lines[idx]
            cells = row_line.split()
            if len(cells) != n:
                raise MatrixSizeMismatch(
                    f"{tag} row {len(rows)} has {len(cells)} cells, expected {n}")
            rows.append(tuple(_int(c, rno, row_line, "distance") for c in cells))
            idx += 1
        try:
            return DistanceMatrix(n, tuple(rows))
        except MatrixSizeMismatch:
            raise
        except ValidationError as exc:
            raise MalformedLine(no, f"bad {tag} matrix: {exc}", line) from None

    regions = read_matrix("Regions")
    cdr = read_matrix("ChokeDepReg")

    samples: list[PositionSample] = []
    last_frame = 0
    for no, line in lines[idx:]:
        parts = line.split(";")
        if len(parts) != 6:
            raise MalformedLine(no, "position sample needs 6 fields", line)
        frame = _int(parts[0], no, line, "frame")
        if frame < 0:
            raise MalformedLine(no, "negative frame", line)
        if frame < last_frame:
            raise MalformedLine(no, "sample frame decreases", line)
        last_frame = frame
        uid = _int(parts[1], no, line, "unit id")
        x = _int(parts[2], no, line, "x")
        y = _int(parts[3], no, line, "y")
        region = _int(parts[4], no, line, "region id")
        cdr_id = _int(parts[5], no, line, "cdr id")
        if not (0 <= region < regions.n):
            raise MalformedLine(no, f"region id {region} out of range", line)
        if not (0 <= cdr_id < cdr.n):
            raise MalformedLine(no, f"cdr id {cdr_id} out of range", line)
        samples.append(PositionSample(frame, uid, x, y, region, cdr_id))
    return RldData(regions, cdr, tuple(samples))


def assemble_game(rgd: RgdData, orders: tuple[Order, ...], rld: RldData) -> GameLog:
    """Join the three parsed streams into a validated GameLog."""
    frames = [0]
    frames += [e.frame for e in rgd.events]
    frames += [s.frame for s in rgd.economy]
    frames += [o.frame for o in orders]
    frames += [p.frame for p in rld.positions]
    duration = rgd.duration_frames if rgd.duration_frames is not None else max(frames)
    log = GameLog(
        map_name=rgd.map_name,
        players=rgd.players,
        events=rgd.events,
        economy=rgd.economy,
        orders=orders,
        positions=rld.positions,
        region_distances=rld.region_distances,
        cdr_distances=rld.cdr_distances,
        duration_frames=duration,
    )
    log.validate()
    return log


def read_game(stem: str | Path) -> GameLog:
    """Read ``<stem>.rgd/.rod/.rld`` and assemble the GameLog."""
    stem = Path(stem)
    rgd = parse_rgd(stem.with_suffix(".rgd").read_bytes())
    orders = parse_rod(stem.with_suffix(".rod").read_bytes())
    rld = parse_rld(stem.with_suffix(".rld").read_bytes())
    return assemble_game(rgd, orders, rld)


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------

def _event_line(ev: UnitEvent) -> str:
    tag = _KIND_TO_TAG[ev.kind]
    if ev.kind in (CREATION, MORPH):
        return f"{ev.frame};{tag};{ev.unit_id};{ev.unit_type};{ev.player_id};{ev.x};{ev.y}"
    if ev.kind == DESTRUCTION:
        return f"{ev.frame};{tag};{ev.unit_id}"
    return f"{ev.frame};{tag};{ev.unit_id};{ev.player_id}"


def write_rgd(log: GameLog) -> str:
    """Serialize header, events and economy; inverse of parse_rgd."""
    out = [f"Map;{log.map_name}"]
    for p in log.players:
        out.append(f"Player;{p.id};{p.name};{p.race}")
    out.append(f"Duration;{log.duration_frames}")
    # stable merge of the two record streams by frame, events first
    ei = ci = 0
    ev, ec = log.events, log.economy
    while ei < len(ev) or ci < len(ec):
        if ci >= len(ec) or (ei < len(ev) and ev[ei].frame <= ec[ci].frame):
            out.append(_event_line(ev[ei]))
            ei += 1
        else:
            s = ec[ci]
            out.append(f"{s.frame};R;{s.player_id};{s.minerals};{s.gas};{s.supply};{s.max_supply}")
            ci += 1
    return "\n".join(out) + "\n"


def write_rod(log: GameLog) -> str:
    out = []
    for o in log.orders:
        target = "-" if o.target_unit_id is None else str(o.target_unit_id)
        out.append(f"{o.frame};{o.player_id};{o.unit_id};{o.order_type};"
                   f"{o.target_x};{o.target_y};{target}")
    return "\n".join(out) + "\n" if out else ""


def write_rld(log: GameLog) -> str:
    out = [f"Regions;{log.region_distances.n}"]
    out += [" ".join(str(v) for v in row) for row in log.region_distances.d]
    out.append(f"ChokeDepReg;{log.cdr_distances.n}")
    out += [" ".join(str(v) for v in row) for row in log.cdr_distances.d]
    for s in log.positions:
        out.append(f"{s.frame};{s.unit_id};{s.x};{s.y};{s.region_id};{s.cdr_id}")
    return "\n".join(out) + "\n"


def write_game(log: GameLog, stem: str | Path) -> None:
    """Write all three dump files for one game under ``<stem>.*``."""
    log.validate()
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".rgd").write_bytes(write_rgd(log).encode("utf-8"))
    stem.with_suffix(".rod").write_bytes(write_rod(log).encode("utf-8"))
    stem.with_suffix(".rld").write_bytes(write_rld(log).encode("utf-8"))


# ---------------------------------------------------------------------------
# unit timelines
# ---------------------------------------------------------------------------

class TypeTimeline:
    """Per-unit (frame, type) history with point-in-time lookup.

    Morphing units count as whichever type they carry at the queried
    frame, so compositions reflect the army as it fought.
    """

    def __init__(self, log: GameLog):
        self._hist: dict[int, list[tuple[int, str]]] = {}
        for ev in log.events:
            if ev.kind in (CREATION, MORPH) and ev.unit_type is not None:
                self._hist.setdefault(ev.unit_id, []).append((ev.frame, ev.unit_type))

    def at(self, unit_id: int, frame: int) -> str | None:
        hist = self._hist.get(unit_id)
        if not hist:
            return None
        current = None
        for f, t in hist:
            if f > frame:
                break
            current = t
        return current


# ---------------------------------------------------------------------------
# corpus statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatchupStats:
    matchup: str
    games: int
    attacks: int
    mean_attacks_per_game: float
    mean_frames_per_game: float
    mean_minutes_per_game: float
    mean_orders_per_game: float
    mean_regions_per_game: float
    mean_cdr_per_game: float
    mean_region_distance_px: float | None
    mean_cdr_distance_px: float | None


STATS_COLUMNS = (
    "matchup", "games", "attacks", "mean_attacks_per_game",
    "mean_frames_per_game", "mean_minutes_per_game", "mean_orders_per_game",
    "mean_regions_per_game", "mean_cdr_per_game",
    "mean_region_distance_px", "mean_cdr_distance_px",
)


@dataclass(frozen=True)
class StatsTable:
    rows: tuple[MatchupStats, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STATS_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.matchup, r.games, r.attacks,
                repr(r.mean_attacks_per_game),
                repr(r.mean_frames_per_game), repr(r.mean_minutes_per_game),
                repr(r.mean_orders_per_game),
                repr(r.mean_regions_per_game), repr(r.mean_cdr_per_game),
                "" if r.mean_region_distance_px is None else repr(r.mean_region_distance_px),
                "" if r.mean_cdr_distance_px is None else repr(r.mean_cdr_distance_px),
            ])
        return buf.getvalue()

    def format_table(self) -> str:
        header = f"{'matchup':8} {'games':>6} {'attacks':>8} {'atk/game':>9} " \
                 f"{'frames':>9} {'minutes':>8} {'orders':>9} {'regions':>8} " \
                 f"{'CDR':>7} {'reg dist':>9} {'cdr dist':>9}"
        lines = [header]
        for r in self.rows:
            rd = "-" if r.mean_region_distance_px is None else f"{r.mean_region_distance_px:.0f}"
            cd = "-" if r.mean_cdr_distance_px is None else f"{r.mean_cdr_distance_px:.0f}"
            lines.append(
                f"{r.matchup:8} {r.games:>6} {r.attacks:>8} {r.mean_attacks_per_game:>9.2f} "
                f"{r.mean_frames_per_game:>9.0f} {r.mean_minutes_per_game:>8.2f} "
                f"{r.mean_orders_per_game:>9.1f} {r.mean_regions_per_game:>8.2f} "
                f"{r.mean_cdr_per_game:>7.2f} {rd:>9} {cd:>9}")
        return "\n".join(lines)


def corpus_stats(games: Sequence[GameLog], attack_counts: Sequence[int]) -> StatsTable:
    """Per-match-up corpus statistics (games, attacks, durations, distances)."""
    if not games:
        raise EmptyCorpus("no games")
    if len(games) != len(attack_counts):
        raise ValidationError("attack_counts must align with games")

    grouped: dict[str, list[tuple[GameLog, int]]] = {}
    for log, n_attacks in zip(games, attack_counts):
        grouped.setdefault(log.matchup, []).append((log, n_attacks))

    rows = []
    for mu in sorted(grouped):
        pairs = grouped[mu]
        n = len(pairs)
        attacks = sum(a for _, a in pairs)
        mean_frames = sum(g.duration_frames for g, _ in pairs) / n
        region_means = [m for m in
                        (g.region_distances.mean_reachable() for g, _ in pairs)
                        if m is not None]
        cdr_means = [m for m in
                     (g.cdr_distances.mean_reachable() for g, _ in pairs)
                     if m is not None]
        rows.append(MatchupStats(
            matchup=mu,
            games=n,
            attacks=attacks,
            mean_attacks_per_game=attacks / n,
            mean_frames_per_game=mean_frames,
            mean_minutes_per_game=mean_frames / FRAMES_PER_SECOND / 60.0,
            mean_orders_per_game=sum(len(g.orders) for g, _ in pairs) / n,
            mean_regions_per_game=sum(g.region_distances.n for g, _ in pairs) / n,
            mean_cdr_per_game=sum(g.cdr_distances.n for g, _ in pairs) / n,
            mean_region_distance_px=(sum(region_means) / len(region_means)
                                     if region_means else None),
            mean_cdr_distance_px=(sum(cdr_means) / len(cdr_means)
                                  if cdr_means else None),
        ))
    return StatsTable(tuple(rows))
