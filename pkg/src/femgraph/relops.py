"""Frontier-select, expand and merge operators over a visited-node table.

A visited table stores one row per search key. For shortest-path queries the
row is ``(nid, d2s, p2s, f, d2t, p2t, b)``: distance, parent and flag for the
forward direction followed by the same triple for the backward direction.
Flag values: 0 candidate, 1 expanded, 2 selected for the running expansion.

The SegTable builder reuses the operators on ``(src, nid, d2s, p2s, f)`` rows
keyed by ``(src, nid)``; a :class:`Direction` describes which columns an
operator reads and writes, so one implementation serves every layout.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any, NamedTuple, Union

from .storage import INF, NULL, Database, Table

VISITED_FIELDS = ("nid", "d2s", "p2s", "f", "d2t", "p2t", "b")

CANDIDATE, EXPANDED, SELECTED = 0, 1, 2


@dataclass(frozen=True)
class Direction:
    """Column layout for one search direction.

    ``join`` is the edge-table field matched against the frontier node and
    ``reach`` the field holding the node reached through that edge.
    """

    name: str
    dist: int
    parent: int
    flag: int
    other_dist: int | None
    other_parent: int | None
    other_flag: int | None
    join: str
    reach: str
    key_len: int = 1

    def node_of(self, row) -> int:
        return row[self.key_len - 1]


FORWARD = Direction("forward", 1, 2, 3, 4, 5, 6, join="fid", reach="tid")
BACKWARD = Direction("backward", 4, 5, 6, 1, 2, 3, join="tid", reach="fid")


class ExpandedRow(NamedTuple):
    nid: Any
    cost: int
    parent: int


# -- frontier criteria ---------------------------------------------------


@dataclass(frozen=True)
class SingleMin:
    """The one candidate with minimal distance (smallest key on ties)."""


@dataclass(frozen=True)
class SetMin:
    """Every candidate sharing the minimal distance."""


@dataclass(frozen=True)
class Selective:
    """Candidates with ``dist <= k * l_thd``, or the minimal ones if none qualify."""

    k: int
    l_thd: int


@dataclass(frozen=True)
class BelowStep:
    """Candidates with ``dist < k * step``, or the minimal ones (index construction)."""

    k: int
    step: int


@dataclass(frozen=True)
class AllCandidates:
    """Every candidate."""


FrontierCriterion = Union[SingleMin, SetMin, Selective, BelowStep, AllCandidates]


class VisitedTable:
    """A unique-keyed storage table plus a candidate index per direction.

    The candidate index is a heap of ``(dist, key)`` with lazy deletion and a
    map of the keys whose flag is 0 with a finite distance. It answers the
    auxiliary queries "minimal candidate distance" and "candidates under a
    threshold" without scanning the table.
    """

    def __init__(self, table: Table, directions: Sequence[Direction], db: Database | None = None):
        if not table.unique:
            raise ValueError("visited table needs a unique key")
        self.table = table
        self.db = db
        self.directions = tuple(directions)
        self._heap: dict[str, list] = {d.name: [] for d in directions}
        self._open: dict[str, dict] = {d.name: {} for d in directions}
        self._frontier: dict[str, list] = {d.name: [] for d in directions}
        self._pairs = [(d.dist, d.other_dist) for d in directions
                       if d.other_dist is not None][:1]
        self._min_cost = INF
        for row in table:
            self._note(row)

    @classmethod
    def create(cls, db: Database, fields=VISITED_FIELDS, key="nid",
               directions: Sequence[Direction] = (FORWARD, BACKWARD),
               name: str = "visited") -> VisitedTable:
        table = db.create_table(name, fields, key, unique=True, temporary=True)
        return cls(table, directions, db)

    def __len__(self) -> int:
        return len(self.table)

    def get(self, key):
        return self.table.get(key)

    def rows(self) -> list:
        return self.table.scan()

    def _note(self, row) -> None:
        key = self.table.key_of(row)
        for d in self.directions:
            dist = row[d.dist]
            opened = self._open[d.name]
            if row[d.flag] == CANDIDATE and dist < INF:
                if opened.get(key) != dist:
                    opened[key] = dist
                    heapq.heappush(self._heap[d.name], (dist, key))
            else:
                opened.pop(key, None)
        for a, b in self._pairs:
            total = row[a] + row[b]
            if total < self._min_cost:
                self._min_cost = total

    def insert(self, row) -> None:
        self.table.insert(row)
        self._note(tuple(row))

    def bulk_insert(self, rows: Iterable) -> None:
        for row in rows:
            self.table._append(tuple(row))
            self._note(row)

    def _peek(self, d: Direction):
        heap = self._heap[d.name]
        opened = self._open[d.name]
        while heap:
            dist, key = heap[0]
            if opened.get(key) == dist:
                return dist, key
            heapq.heappop(heap)
        return None

    def min_open(self, d: Direction) -> int:
        """Minimal distance among candidates of direction ``d`` (INF if none)."""
        top = self._peek(d)
        return INF if top is None else top[0]

    def open_count(self, d: Direction) -> int:
        return len(self._open[d.name])

    def min_cost(self) -> int:
        """min(d2s + d2t) over all rows, maintained as rows change."""
        return self._min_cost

    def meeting_node(self):
        """Smallest key whose row attains :meth:`min_cost` (INF: None)."""
        if self._min_cost >= INF or not self._pairs:
            return None
        a, b = self._pairs[0]
        target = self._min_cost
        hits = [self.table.key_of(r) for r in self.table if r[a] + r[b] == target]
        return min(hits) if hits else None

    def _take(self, d: Direction, keys: list) -> list:
        opened = self._open[d.name]
        rows = []
        flag = d.flag
        for key in sorted(keys):
            del opened[key]
            row = self.table.get(key)
            row = row[:flag] + (SELECTED,) + row[flag + 1:]
            self.table.replace(key, row)
            rows.append(row)
        self._frontier[d.name] = [self.table.key_of(r) for r in rows]
        return rows

    def select(self, d: Direction, criterion) -> list:
        """Pick frontier keys per ``criterion`` and flag them SELECTED."""
        if isinstance(criterion, AllCandidates):
            return self._take(d, list(self._open[d.name]))
        top = self._peek(d)
        if top is None:
            self._frontier[d.name] = []
            return []
        heap = self._heap[d.name]
        opened = self._open[d.name]
        low = top[0]
        if isinstance(criterion, SingleMin):
            return self._take(d, [top[1]])
        if isinstance(criterion, SetMin):
            limit, strict = low, False
        elif isinstance(criterion, Selective):
            limit, strict = max(criterion.k * criterion.l_thd, low), False
        elif isinstance(criterion, BelowStep):
            bound = criterion.k * criterion.step
            limit, strict = (bound, True) if low < bound else (low, False)
        else:
            raise TypeError(f"unknown frontier criterion {criterion!r}")
        keys = []
        seen = set()
        while heap:
            dist, key = heap[0]
            if opened.get(key) != dist or key in seen:
                heapq.heappop(heap)
                continue
            if dist > limit or (strict and dist == limit):
                break
            heapq.heappop(heap)
            seen.add(key)
            keys.append(key)
        return self._take(d, keys)

    def close_frontier(self, d: Direction) -> int:
        """Flag 2 -> 1 for the rows selected last, if still flagged 2."""
        count = 0
        flag = d.flag
        for key in self._frontier[d.name]:
            row = self.table.get(key)
            if row[flag] == SELECTED:
                self.table.replace(key, row[:flag] + (EXPANDED,) + row[flag + 1:])
                count += 1
        self._frontier[d.name] = []
        return count

    def drop(self) -> None:
        if self.db is not None:
            self.db.drop_table(self.table.name)
        else:
            self.table.drop()


# -- operators -----------------------------------------------------------


def window_min_dedup(rows: Iterable[ExpandedRow]) -> list[ExpandedRow]:
    """Keep one row per nid: minimal cost, then smallest parent.

    Equivalent to ``row_number() over (partition by nid order by cost,
    parent) = 1``. Output is ordered by nid.
    """
    best: dict[Any, tuple[int, int]] = {}
    for nid, cost, parent in rows:
        cur = best.get(nid)
        if cur is None or (cost, parent) < cur:
            best[nid] = (cost, parent)
    return [ExpandedRow(nid, c, p) for nid, (c, p) in sorted(best.items())]


def f_select(visited: VisitedTable, criterion, direction: Direction = FORWARD) -> list:
    """Return the frontier rows chosen by ``criterion``; they are left flagged 2.

    An empty result means the direction has no candidates left.
    """
    return visited.select(direction, criterion)


def e_expand(frontier: Iterable, edges: Table, direction: Direction = FORWARD,
             prune: tuple[int, int] | None = None,
             max_dist: int | None = None) -> list[ExpandedRow]:
    """Join frontier rows with their adjacency lists and dedup per reached key.

    ``prune=(l_other, min_cost)`` drops a candidate whose distance plus
    ``l_other`` is not below ``min_cost``. ``max_dist`` drops candidates
    farther than the bound (SegTable construction).
    """
    reach, cost_i = edges.col(direction.reach), edges.col("cost")
    if edges.key != (direction.join,):
        raise ValueError(f"{edges.name} is clustered on {edges.key}, "
                         f"{direction.name} expansion needs {direction.join!r}")
    dist_i = direction.dist
    kl = direction.key_len
    cutoff = INF
    if prune is not None:
        l_other, min_cost = prune
        if min_cost < INF:
            cutoff = min_cost - l_other if l_other < INF else -1
    if max_dist is not None:
        cutoff = min(cutoff, max_dist + 1)
    out = []
    for row in sorted(frontier, key=lambda r: r[kl - 1]):
        node = row[kl - 1]
        base = row[dist_i]
        prefix = row[:kl - 1]
        for e in edges.lookup(node):
            c = base + e[cost_i]
            if c >= cutoff:
                continue
            out.append(ExpandedRow(e[reach] if kl == 1 else prefix + (e[reach],), c, node))
    return window_min_dedup(out)


def new_row(width: int, direction: Direction, key, cost: int, parent: int) -> tuple:
    """Row for a key first reached in ``direction``; the other side starts unknown."""
    row = [0] * width
    if direction.key_len == 1:
        row[0] = key
    else:
        row[:direction.key_len] = key
    row[direction.dist] = cost
    row[direction.parent] = parent
    row[direction.flag] = CANDIDATE
    if direction.other_dist is not None:
        row[direction.other_dist] = INF
        row[direction.other_parent] = NULL
        row[direction.other_flag] = CANDIDATE
    return tuple(row)


def m_merge(visited: VisitedTable, expanded: Iterable[ExpandedRow],
            direction: Direction = FORWARD) -> int:
    """Merge expanded rows into the visited table; returns affected rows.

    A stored row is replaced only when the new distance is strictly smaller
    (its flag goes back to 0); unknown keys are inserted.
    """
    d = direction
    width = len(visited.table.fields)
    changed = []

    def improves(target, src):
        return target[d.dist] > src.cost

    def update(target, src):
        row = list(target)
        row[d.dist] = src.cost
        row[d.parent] = src.parent
        row[d.flag] = CANDIDATE
        row = tuple(row)
        changed.append(row)
        return row

    def project(src):
        row = new_row(width, d, src.nid, src.cost, src.parent)
        changed.append(row)
        return row

    affected = visited.table.merge(expanded, 0, improves, update, project)
    for row in changed:
        visited._note(row)
    return affected
