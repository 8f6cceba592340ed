"""Choke-dependent regions and pathfinding distances on walkability grids.

Base regions and chokes are inputs (terrain analysis proper is out of
scope here); this module refines them into choke-dependent labels and
computes ground distances. Grid files look like::

    8 3 32
    000#111
    000#111
    0001111
    Choke;0;3;2

Header is ``W H tile_size``; rows use ``#`` for unwalkable tiles and an
alphanumeric region label otherwise (0-9, then a-z, then A-Z). Each
``Choke;<id>;<tx>;<ty>`` line adds one tile to a choke's tile set.

All ground distances are 8-connected shortest paths in pixels: an axial
step costs ``tile_size``, a diagonal one ``round(tile_size * sqrt(2))``;
diagonal moves between walkable tiles are always permitted.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    CenterOffGrid,
    ChokeOffGrid,
    ChokeOnUnwalkable,
    MalformedLine,
    OffGrid,
    ValidationError,
)
from .logmodel import UNREACHABLE, DistanceMatrix

Tile = tuple[int, int]

_LABEL_CHARS = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
_CHAR_TO_LABEL = {c: i for i, c in enumerate(_LABEL_CHARS)}

DEFAULT_CDR_RADIUS_TILES = 10


@dataclass(frozen=True)
class WalkGrid:
    width: int
    height: int
    tile_size: int
    walkable: tuple[tuple[bool, ...], ...]   # [ty][tx]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError("grid must be at least 1x1")
        if self.tile_size < 1:
            raise ValidationError("tile_size must be positive")
        if len(self.walkable) != self.height or any(len(r) != self.width for r in self.walkable):
            raise ValidationError("walkable mask does not match grid dimensions")

    def in_bounds(self, t: Tile) -> bool:
        return 0 <= t[0] < self.width and 0 <= t[1] < self.height

    def is_walkable(self, t: Tile) -> bool:
        return self.in_bounds(t) and self.walkable[t[1]][t[0]]

    def walkable_tiles(self) -> list[Tile]:
        return [(x, y) for y in range(self.height) for x in range(self.width)
                if self.walkable[y][x]]

    def tile_of_pixel(self, x: float, y: float) -> Tile:
        return (int(x // self.tile_size), int(y // self.tile_size))

    def pixel_center(self, t: Tile) -> tuple[float, float]:
        return ((t[0] + 0.5) * self.tile_size, (t[1] + 0.5) * self.tile_size)


@dataclass(frozen=True)
class GridMap:
    """Parsed grid file: walkability plus given base regions and chokes."""

    grid: WalkGrid
    region_of: Mapping[Tile, int]
    chokes: tuple[tuple[int, frozenset[Tile]], ...]

    @property
    def n_regions(self) -> int:
        return max(self.region_of.values(), default=-1) + 1


@dataclass(frozen=True)
class RegionMap:
    """Walkable-tile labeling by base region and choke-dependent region."""

    grid: WalkGrid
    region_of: Mapping[Tile, int]
    cdr_of: Mapping[Tile, int]
    chokes: tuple[tuple[int, frozenset[Tile]], ...]
    region_centers: tuple[Tile, ...]       # index = region id
    cdr_centers: tuple[Tile, ...]          # index = cdr label
    region_cdr_label: tuple[int, ...]      # base region id -> its cdr label, -1 if fully claimed
    choke_cdr_label: tuple[int, ...]       # choke id -> its cdr label

    @property
    def n_regions(self) -> int:
        return len(self.region_centers)

    @property
    def n_cdr(self) -> int:
        return len(self.cdr_centers)


# ---------------------------------------------------------------------------
# grid file io
# ---------------------------------------------------------------------------

def parse_grid_file(text: str) -> GridMap:
    # note: no comment lines here, '#' is the unwalkable-tile character
    lines = [(no, ln.rstrip("\r")) for no, ln in enumerate(text.split("\n"), start=1)
             if ln.strip()]
    if not lines:
        raise MalformedLine(0, "empty grid file")
    no, header = lines[0]
    parts = header.split()
    if len(parts) != 3:
        raise MalformedLine(no, "header must be 'W H tile_size'", header)
    try:
        width, height, tile_size = (int(p) for p in parts)
    except ValueError:
        raise MalformedLine(no, "non-integer header field", header) from None
    if len(lines) < 1 + height:
        raise MalformedLine(no, f"expected {height} grid rows")

    walkable: list[tuple[bool, ...]] = []
    labels: dict[Tile, int] = {}
    for ty in range(height):
        rno, row = lines[1 + ty]
        if len(row) != width:
            raise MalformedLine(rno, f"row has {len(row)} tiles, expected {width}", row)
        mask = []
        for tx, ch in enumerate(row):
            if ch == "#":
                mask.append(False)
            elif ch in _CHAR_TO_LABEL:
                mask.append(True)
                labels[(tx, ty)] = _CHAR_TO_LABEL[ch]
            else:
                raise MalformedLine(rno, f"bad tile character {ch!r}", row)
        walkable.append(tuple(mask))
    grid = WalkGrid(width, height, tile_size, tuple(walkable))

    # dense region ids in label order
    used = sorted(set(labels.values()))
    rank = {v: i for i, v in enumerate(used)}
    region_of = {t: rank[v] for t, v in labels.items()}

    choke_tiles: dict[int, set[Tile]] = {}
    for cno, line in lines[1 + height:]:
        parts = line.split(";")
        if len(parts) != 4 or parts[0] != "Choke":
            raise MalformedLine(cno, "expected 'Choke;<id>;<tx>;<ty>'", line)
        try:
            cid, tx, ty = int(parts[1]), int(parts[2]), int(parts[3])
        except ValueError:
            raise MalformedLine(cno, "non-integer choke field", line) from None
        choke_tiles.setdefault(cid, set()).add((tx, ty))

    seen: dict[Tile, int] = {}
    chokes = []
    for i, cid in enumerate(sorted(choke_tiles)):
        tiles = choke_tiles[cid]
        for t in tiles:
            if not grid.in_bounds(t):
                raise ChokeOffGrid(f"choke {cid} tile {t} off grid")
            if not grid.is_walkable(t):
                raise ChokeOnUnwalkable(f"choke {cid} tile {t} unwalkable")
            if t in seen:
                raise ValidationError(f"tile {t} in chokes {seen[t]} and {cid}")
            seen[t] = cid
        chokes.append((i, frozenset(tiles)))
    return GridMap(grid, region_of, tuple(chokes))


def write_grid_file(gm: GridMap) -> str:
    rows = []
    for ty in range(gm.grid.height):
        row = []
        for tx in range(gm.grid.width):
            if not gm.grid.walkable[ty][tx]:
                row.append("#")
            else:
                rid = gm.region_of[(tx, ty)]
                if rid >= len(_LABEL_CHARS):
                    raise ValidationError(f"region id {rid} beyond label alphabet")
                row.append(_LABEL_CHARS[rid])
        rows.append("".join(row))
    out = [f"{gm.grid.width} {gm.grid.height} {gm.grid.tile_size}"] + rows
    for cid, tiles in gm.chokes:
        for tx, ty in sorted(tiles):
            out.append(f"Choke;{cid};{tx};{ty}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------

def _steps(tile_size: int) -> tuple[tuple[int, int, int], ...]:
    diag = round(tile_size * math.sqrt(2.0))
    return ((1, 0, tile_size), (-1, 0, tile_size), (0, 1, tile_size), (0, -1, tile_size),
            (1, 1, diag), (1, -1, diag), (-1, 1, diag), (-1, -1, diag))


def _dijkstra(grid: WalkGrid, sources: Iterable[tuple[Tile, int]],
              max_dist: int | None = None) -> dict[Tile, tuple[int, int]]:
    """Multi-source shortest paths; returns tile -> (distance_px, tag).

    Ties in distance settle on the lowest tag, so Voronoi assignment by
    (nearest source, lowest id) falls out of the priority order.
    """
    steps = _steps(grid.tile_size)
    best: dict[Tile, tuple[int, int]] = {}
    heap: list[tuple[int, int, int, int]] = []
    for (tx, ty), tag in sorted(sources, key=lambda s: (s[1], s[0])):
        heapq.heappush(heap, (0, tag, tx, ty))
    while heap:
        dist, tag, tx, ty = heapq.heappop(heap)
        if (tx, ty) in best:
            continue
        best[(tx, ty)] = (dist, tag)
        for dx, dy, w in steps:
            nt = (tx + dx, ty + dy)
            nd = dist + w
            if nt in best or not grid.is_walkable(nt):
                continue
            if max_dist is not None and nd > max_dist:
                continue
            heapq.heappush(heap, (nd, tag, nt[0], nt[1]))
    return best


def ground_distance_matrix(grid: WalkGrid, centers: Sequence[Tile]) -> DistanceMatrix:
    """Pairwise pathfinding distance between center tiles, in pixels."""
    for c in centers:
        if not grid.in_bounds(c) or not grid.is_walkable(c):
            raise CenterOffGrid(f"center {c} off grid or unwalkable")
    n = len(centers)
    rows = [[UNREACHABLE] * n for _ in range(n)]
    for i, c in enumerate(centers):
        reach = _dijkstra(grid, [(c, 0)])
        for j, other in enumerate(centers):
            if other in reach:
                rows[i][j] = reach[other][0]
    # symmetrize: path costs are symmetric, but be explicit about it
    for i in range(n):
        rows[i][i] = 0
        for j in range(i + 1, n):
            d = min(x for x in (rows[i][j], rows[j][i]) if x != UNREACHABLE) \
                if (rows[i][j] != UNREACHABLE or rows[j][i] != UNREACHABLE) else UNREACHABLE
            rows[i][j] = rows[j][i] = d
    return DistanceMatrix(n, tuple(tuple(r) for r in rows))


# ---------------------------------------------------------------------------
# choke-dependent regions
# ---------------------------------------------------------------------------

def _center_of(tiles: Sequence[Tile]) -> Tile:
    """Tile of the set nearest its centroid (ties: lowest row-major index)."""
    n = len(tiles)
    cx = sum(t[0] for t in tiles) / n
    cy = sum(t[1] for t in tiles) / n
    return min(tiles, key=lambda t: ((t[0] - cx) ** 2 + (t[1] - cy) ** 2, t[1], t[0]))


def build_cdr(grid: WalkGrid, region_of: Mapping[Tile, int],
              chokes: Sequence[tuple[int, frozenset[Tile]]],
              radius_px: int) -> RegionMap:
    """Refine base regions with a radius-limited tessellation grown from chokes.

    Every walkable tile within ground distance <= radius_px of a choke
    joins that choke's label (nearest choke wins, ties to the lowest
    choke id); the rest keep their base region's label. Labels are
    renumbered densely: surviving regions first, then chokes.
    """
    if radius_px <= 0:
        raise ValidationError("radius must be positive")
    walkable = grid.walkable_tiles()
    for t in walkable:
        if t not in region_of:
            raise ValidationError(f"walkable tile {t} has no base region")
    for cid, tiles in chokes:
        for t in tiles:
            if not grid.in_bounds(t):
                raise ChokeOffGrid(f"choke {cid} tile {t} off grid")
            if not grid.is_walkable(t):
                raise ChokeOnUnwalkable(f"choke {cid} tile {t} unwalkable")

    sources = [(t, cid) for cid, tiles in chokes for t in tiles]
    claimed = _dijkstra(grid, sources, max_dist=radius_px)

    n_regions = max((region_of[t] for t in walkable), default=-1) + 1
    n_chokes = len(chokes)

    # provisional labels: 0..R-1 regions, R..R+C-1 chokes
    provisional: dict[Tile, int] = {}
    for t in walkable:
        if t in claimed:
            provisional[t] = n_regions + claimed[t][1]
        else:
            provisional[t] = region_of[t]

    used = sorted(set(provisional.values()))
    dense = {v: i for i, v in enumerate(used)}
    cdr_of = {t: dense[v] for t, v in provisional.items()}

    region_cdr_label = tuple(dense.get(r, -1) for r in range(n_regions))
    choke_cdr_label = tuple(dense[n_regions + c] for c in range(n_chokes))

    members: dict[int, list[Tile]] = {}
    for t in sorted(cdr_of):
        members.setdefault(cdr_of[t], []).append(t)
    cdr_centers = tuple(_center_of(members[lbl]) for lbl in range(len(used)))

    region_members: dict[int, list[Tile]] = {}
    for t in sorted(walkable):
        region_members.setdefault(region_of[t], []).append(t)
    region_centers = tuple(_center_of(region_members[r]) for r in range(n_regions))

    return RegionMap(
        grid=grid,
        region_of=dict(region_of),
        cdr_of=cdr_of,
        chokes=tuple(chokes),
        region_centers=region_centers,
        cdr_centers=cdr_centers,
        region_cdr_label=region_cdr_label,
        choke_cdr_label=choke_cdr_label,
    )


def build_region_map(gm: GridMap, radius_px: int | None = None) -> RegionMap:
    """Convenience wrapper: CDR radius defaults to 10 tiles."""
    if radius_px is None:
        radius_px = DEFAULT_CDR_RADIUS_TILES * gm.grid.tile_size
    return build_cdr(gm.grid, gm.region_of, gm.chokes, radius_px)


def locate(rm: RegionMap, x: float, y: float) -> tuple[int, int]:
    """(region id, cdr id) of the pixel; unwalkable pixels snap to the
    nearest walkable tile (Euclidean, ties to the lowest tile index)."""
    grid = rm.grid
    if not (0 <= x < grid.width * grid.tile_size and 0 <= y < grid.height * grid.tile_size):
        raise OffGrid(f"pixel ({x},{y}) outside the map")
    t = grid.tile_of_pixel(x, y)
    if not grid.is_walkable(t):
        t = min(
            grid.walkable_tiles(),
            key=lambda w: ((grid.pixel_center(w)[0] - x) ** 2
                           + (grid.pixel_center(w)[1] - y) ** 2,
                           w[1] * grid.width + w[0]),
        )
    return rm.region_of[t], rm.cdr_of[t]
