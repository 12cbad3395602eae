"""SegTable: pre-computed shortest segments up to ``l_thd`` plus residual edges.

Two orientations are kept. ``outsegs`` rows ``(fid, tid, pid, cost)`` are
clustered on ``fid``; ``pid`` is the predecessor of ``tid`` on the segment.
``insegs`` rows have the same layout clustered on ``tid``; there ``pid`` is the
successor of ``fid`` toward ``tid``. A row either records a shortest distance
``cost <= l_thd`` or, when the pair is farther apart, an original edge whose
``pid`` is its own start (outsegs) or end (insegs).

Construction runs a bounded multi-source search with the same frontier /
expand / merge operators the queries use, over a working table keyed by
``(src, nid)``.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import NamedTuple

from .relops import (BelowStep, Direction, VisitedTable, e_expand, f_select,
                     m_merge)
from .storage import (INF, SEGMENT_MAGIC, Database, EdgeTuple, Graph,
                      SchemaError, StorageError, Table)

log = logging.getLogger(__name__)

SEG_FIELDS = ("fid", "tid", "pid", "cost")
WORK_FIELDS = ("src", "nid", "d2s", "p2s", "f")
SEG_SUFFIX = ".seg"

OUT, IN = "out", "in"

# (src, nid) keyed rows; forward walks edges_out, backward walks edges_in
_WORK_OUT = Direction("seg-out", 2, 3, 4, None, None, None, join="fid", reach="tid", key_len=2)
_WORK_IN = Direction("seg-in", 2, 3, 4, None, None, None, join="tid", reach="fid", key_len=2)


class SegTuple(NamedTuple):
    fid: int
    tid: int
    pid: int
    cost: int


class SegmentError(StorageError):
    """A segment is missing or its pid chain is corrupt."""


@dataclass
class SegBuildStats:
    l_thd: int
    segment_count: int = 0
    residual_count: int = 0
    build_iterations: int = 0
    build_time: float = 0.0
    index_pages: int = 0


@dataclass
class SegTable:
    out: Table
    inc: Table
    l_thd: int
    stats: tuple[SegBuildStats, ...] = ()

    @property
    def segment_count(self) -> int:
        return len(self.out)

    @property
    def index_pages(self) -> int:
        return self.out.page_count + self.inc.page_count


def table_name(orientation: str, l_thd: int) -> str:
    return f"{orientation}segs_{l_thd}"


def _check_threshold(graph: Graph, l_thd: int) -> None:
    if l_thd < 0:
        raise ValueError(f"l_thd must be non-negative, got {l_thd}")
    w_min = graph.stats.w_min
    if w_min is not None and l_thd < w_min:
        raise ValueError(f"l_thd={l_thd} is below the minimal edge weight {w_min}")


def _build(graph: Graph, l_thd: int, orientation: str) -> tuple[Table, SegBuildStats]:
    _check_threshold(graph, l_thd)
    start = time.perf_counter()
    db = graph.db
    outward = orientation == OUT
    direction = _WORK_OUT if outward else _WORK_IN
    edges = graph.out_edges if outward else graph.in_edges
    stats = SegBuildStats(l_thd)
    w_min = graph.stats.w_min or 1

    work = VisitedTable.create(db, WORK_FIELDS, ("src", "nid"), (direction,), name="segwork")
    try:
        work.bulk_insert((v, v, 0, v, 0) for v in graph.node_ids())
        k = 1
        while True:
            frontier = f_select(work, BelowStep(k, w_min), direction)
            if not frontier:
                break
            expanded = e_expand(frontier, edges, direction, max_dist=l_thd)
            m_merge(work, expanded, direction)
            work.close_frontier(direction)
            stats.build_iterations += 1
            k += 1
            low = work.min_open(direction)
            if low >= INF or low + w_min > l_thd:
                break

        if outward:
            rows = [SegTuple(src, nid, p, d) for src, nid, d, p, _ in work.table if src != nid]
        else:
            rows = [SegTuple(nid, src, p, d) for src, nid, d, p, _ in work.table if src != nid]
    finally:
        work.drop()
    stats.segment_count = len(rows)

    # residual edges: keep an original edge only if no segment covers its pair
    covered = {(r.fid, r.tid) for r in rows}
    for fid, tid, cost in graph.edges():
        if (fid, tid) not in covered:
            rows.append(SegTuple(fid, tid, fid if outward else tid, cost))
            stats.residual_count += 1

    key = "fid" if outward else "tid"
    table = db.create_table(table_name(orientation, l_thd), SEG_FIELDS, key, magic=SEGMENT_MAGIC,
                            meta=l_thd, suffix=SEG_SUFFIX, replace=True)
    table.bulk_load(rows)
    table.flush()
    stats.index_pages = table.page_count
    stats.build_time = time.perf_counter() - start
    log.info("built %s l_thd=%d: %d segments, %d residual, %d iterations",
             table.name, l_thd, stats.segment_count, stats.residual_count, stats.build_iterations)
    return table, stats


def build_outsegs(graph: Graph, l_thd: int) -> tuple[Table, SegBuildStats]:
    """Outgoing segments, persisted as ``outsegs_<l_thd>`` in the graph's database."""
    return _build(graph, l_thd, OUT)


def build_insegs(graph: Graph, l_thd: int) -> tuple[Table, SegBuildStats]:
    """Incoming segments, persisted as ``insegs_<l_thd>``."""
    return _build(graph, l_thd, IN)


def build_segtable(graph: Graph, l_thd: int) -> SegTable:
    out, out_stats = build_outsegs(graph, l_thd)
    inc, in_stats = build_insegs(graph, l_thd)
    return SegTable(out, inc, l_thd, (out_stats, in_stats))


def has_segtable(graph: Graph, l_thd: int) -> bool:
    return all(graph.db.has_table(table_name(o, l_thd), SEG_SUFFIX) for o in (OUT, IN))


def load_segtable(graph: Graph, l_thd: int) -> SegTable:
    """Open both persisted orientations built for ``l_thd``."""
    tables = []
    for orientation in (OUT, IN):
        name = table_name(orientation, l_thd)
        if not graph.db.has_table(name, SEG_SUFFIX):
            raise StorageError(f"no SegTable for l_thd={l_thd} in {graph.db.path}; run build-seg first")
        table = graph.db.open_table(name, SEG_SUFFIX, expect_magic=SEGMENT_MAGIC)
        if table.meta != l_thd:
            raise SchemaError(f"{name} records l_thd={table.meta}, expected {l_thd}")
        tables.append(table)
    return SegTable(tables[0], tables[1], l_thd)


def list_segtables(graph: Graph) -> list[int]:
    found = []
    for path in graph.db.path.glob(f"outsegs_*{SEG_SUFFIX}"):
        try:
            l_thd = int(path.stem.split("_", 1)[1])
        except ValueError:
            continue
        if has_segtable(graph, l_thd):
            found.append(l_thd)
    return sorted(found)


# -- segment expansion ---------------------------------------------------


def expand_segment(table: Table, u: int, v: int) -> list[EdgeTuple]:
    """Original edges of the segment ``u -> v``, in path order.

    Works on either orientation; the table's clustering key tells which.
    """
    if table.fields != SEG_FIELDS or table.key not in (("fid",), ("tid",)):
        raise SchemaError(f"{table.name} is not a segment table")
    outward = table.key == ("fid",)
    if outward:
        by_node = {r[1]: r for r in table.lookup(u)}
        start, stop = v, u
    else:
        by_node = {r[0]: r for r in table.lookup(v)}
        start, stop = u, v
    if start not in by_node:
        raise SegmentError(f"no segment {u}->{v} in {table.name}")

    edges = []
    cur = start
    for _ in range(len(by_node) + 1):
        if cur == stop:
            break
        row = by_node.get(cur)
        if row is None:
            raise SegmentError(f"segment {u}->{v}: chain reaches {cur}, which has no entry")
        nxt = row[2]
        if nxt != stop and nxt not in by_node:
            raise SegmentError(f"segment {u}->{v}: chain reaches {nxt}, which has no entry")
        cost = row[3] - (0 if nxt == stop else by_node[nxt][3])
        edges.append(EdgeTuple(nxt, cur, cost) if outward else EdgeTuple(cur, nxt, cost))
        cur = nxt
    if cur != stop:
        raise SegmentError(f"segment {u}->{v}: pid chain does not terminate")
    if outward:
        edges.reverse()
    return edges


# -- text export / import ------------------------------------------------


def export_segments(table: Table, path) -> int:
    orientation = OUT if table.key == ("fid",) else IN
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# orientation={orientation} l_thd={table.meta}\n")
        for row in table:
            fh.write("%d %d %d %d\n" % row)
            n += 1
    return n


def read_segments(path) -> tuple[dict[str, str], list[SegTuple]]:
    """Parse ``fid tid pid cost`` lines; ``key=value`` pairs in comments are returned too."""
    meta: dict[str, str] = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                for item in text[1:].split():
                    if "=" in item:
                        k, _, val = item.partition("=")
                        meta[k] = val
                continue
            parts = text.split()
            try:
                if len(parts) != 4:
                    raise ValueError
                rows.append(SegTuple(*(int(p) for p in parts)))
            except ValueError:
                raise ValueError(f"line {line_no}: expected 'fid tid pid cost', got {text!r}") from None
    return meta, rows


def import_segments(db: Database, path, orientation: str | None = None,
                    l_thd: int | None = None) -> Table:
    meta, rows = read_segments(path)
    orientation = orientation or meta.get("orientation")
    if orientation not in (OUT, IN):
        raise ValueError(f"unknown orientation {orientation!r}")
    if l_thd is None:
        if "l_thd" not in meta:
            raise ValueError(f"{path} does not record l_thd")
        l_thd = int(meta["l_thd"])
    key = "fid" if orientation == OUT else "tid"
    table = db.create_table(table_name(orientation, l_thd), SEG_FIELDS, key, magic=SEGMENT_MAGIC,
                            meta=l_thd, suffix=SEG_SUFFIX, replace=True)
    table.bulk_load(rows)
    table.flush()
    return table


# -- validation ----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    orientation: str
    kind: str
    fid: int
    tid: int
    detail: str


@dataclass
class SegReport:
    l_thd: int
    checked: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for v in self.violations:
            counts[v.kind] = counts.get(v.kind, 0) + 1
        return counts


def _check_rows(rows: Iterable, orientation: str, l_thd: int, dist: dict,
                weights: dict, report: SegReport) -> None:
    seen = set()

    def flag(kind, fid, tid, detail):
        report.violations.append(Violation(orientation, kind, fid, tid, detail))

    for fid, tid, pid, cost in rows:
        report.checked += 1
        pair = (fid, tid)
        if pair in seen:
            flag("duplicate", fid, tid, "pair stored twice")
            continue
        seen.add(pair)
        if fid == tid:
            flag("self", fid, tid, "self segment")
            continue
        delta = dist.get(pair)
        if cost <= l_thd:
            if delta != cost:
                flag("soundness", fid, tid, f"cost {cost}, shortest distance {delta}")
                continue
            # pid must lie on a shortest path next to the far end
            if orientation == OUT:
                before = 0 if pid == fid else dist.get((fid, pid))
                w = weights.get((pid, tid))
            else:
                before = 0 if pid == tid else dist.get((pid, tid))
                w = weights.get((fid, pid))
            if before is None or w is None or before + w != cost:
                flag("pid", fid, tid, f"pid {pid} is not on a shortest path")
        else:
            expected_pid = fid if orientation == OUT else tid
            if weights.get(pair) != cost or pid != expected_pid:
                flag("residual", fid, tid, f"({fid},{tid},{pid},{cost}) is not an original edge")
            elif delta is not None:
                flag("residual", fid, tid, f"edge kept though distance {delta} <= {l_thd}")
    for pair, delta in dist.items():
        if pair not in seen:
            flag("completeness", pair[0], pair[1], f"missing segment of distance {delta}")
    for pair, w in weights.items():
        if pair not in dist and pair not in seen:
            flag("residual", pair[0], pair[1], f"edge of weight {w} dropped")


def validate_segtable(segtable: SegTable, edges: Iterable[tuple[int, int, int]],
                      l_thd: int | None = None) -> SegReport:
    """Check both orientations against brute-force distances bounded by ``l_thd``."""
    from .testkit import oracle_apsp

    l_thd = segtable.l_thd if l_thd is None else l_thd
    edges = list(edges)
    weights: dict[tuple[int, int], int] = {}
    for fid, tid, cost in edges:
        if fid != tid and ((fid, tid) not in weights or cost < weights[(fid, tid)]):
            weights[(fid, tid)] = cost
    dist = oracle_apsp(edges, l_thd)
    report = SegReport(l_thd)
    _check_rows(segtable.out, OUT, l_thd, dist, weights, report)
    _check_rows(segtable.inc, IN, l_thd, dist, weights, report)
    return report
