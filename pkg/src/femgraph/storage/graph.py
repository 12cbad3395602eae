"""Relational representation of a weighted directed graph.

``nodes`` holds TNodes(nid). Edges are stored twice: ``edges_out`` clustered on
``fid`` (forward expansion) and ``edges_in`` clustered on ``tid`` (backward
expansion).
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

from .database import Database
from .table import StorageError

log = logging.getLogger(__name__)

EDGE_FIELDS = ("fid", "tid", "cost")
NODES = "nodes"
EDGES_OUT = "edges_out"
EDGES_IN = "edges_in"
META_FILE = "graph.json"


class EdgeTuple(NamedTuple):
    fid: int
    tid: int
    cost: int


@dataclass(frozen=True)
class GraphStats:
    n: int
    m: int
    w_min: int | None

    def __str__(self) -> str:
        w = "-" if self.w_min is None else self.w_min
        return f"n={self.n} m={self.m} w_min={w}"


class EdgeListError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NodeNotFound(KeyError):
    pass


def parse_edge_list(lines: Iterable[str]) -> list[EdgeTuple]:
    """Parse ``fid tid cost`` lines; blank lines and ``#`` comments are skipped."""
    edges = []
    for line_no, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise EdgeListError(line_no, f"expected 'fid tid cost', got {text!r}")
        try:
            fid, tid, cost = (int(p) for p in parts)
        except ValueError:
            raise EdgeListError(line_no, f"non-numeric field in {text!r}") from None
        if fid < 0 or tid < 0:
            raise EdgeListError(line_no, "node ids must be non-negative")
        if cost < 0:
            raise EdgeListError(line_no, f"negative cost {cost}")
        edges.append(EdgeTuple(fid, tid, cost))
    return edges


def read_edge_list(path) -> list[EdgeTuple]:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def write_edge_list(path, edges: Iterable[tuple[int, int, int]], header: str | None = None) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for fid, tid, cost in edges:
            fh.write(f"{fid} {tid} {cost}\n")
            n += 1
    return n


def collapse_edges(edges: Iterable[tuple[int, int, int]]) -> list[EdgeTuple]:
    """Drop self-loops and keep the cheapest of parallel edges, sorted by (fid, tid)."""
    best: dict[tuple[int, int], int] = {}
    for fid, tid, cost in edges:
        if fid == tid:
            continue
        key = (fid, tid)
        if key not in best or cost < best[key]:
            best[key] = cost
    return [EdgeTuple(f, t, c) for (f, t), c in sorted(best.items())]


class Graph:
    """TNodes plus both TEdges orientations inside one database directory."""

    def __init__(self, db: Database, stats: GraphStats, graph_id: str):
        self.db = db
        self.stats = stats
        self.graph_id = graph_id
        self.nodes = db.open_table(NODES)
        self.out_edges = db.open_table(EDGES_OUT)
        self.in_edges = db.open_table(EDGES_IN)

    def __repr__(self) -> str:
        return f"<Graph {self.graph_id} {self.stats}>"

    @classmethod
    def create(cls, path, edges: Iterable[tuple[int, int, int]], graph_id: str | None = None,
               buffer_pages: int | None = None, nodes: Iterable[int] = ()) -> Graph:
        """Load an edge list into fresh tables under ``path``."""
        db = Database(path, buffer_pages)
        for name in (NODES, EDGES_OUT, EDGES_IN):
            if db.has_table(name):
                raise StorageError(f"{path} already holds a graph")
        edges = collapse_edges(edges)
        node_ids = set(nodes)
        for fid, tid, _ in edges:
            node_ids.add(fid)
            node_ids.add(tid)
        db.create_table(NODES, ("nid",), "nid", unique=True).bulk_load((v,) for v in sorted(node_ids))
        db.create_table(EDGES_OUT, EDGE_FIELDS, "fid").bulk_load(edges)
        db.create_table(EDGES_IN, EDGE_FIELDS, "tid").bulk_load(edges)
        stats = GraphStats(len(node_ids), len(edges), min((e.cost for e in edges), default=None))
        graph_id = graph_id or Path(path).name
        meta = {"graph_id": graph_id, **asdict(stats)}
        (db.path / META_FILE).write_text(json.dumps(meta, indent=2) + "\n")
        db.reset_io_stats()
        return cls(db, stats, graph_id)

    @classmethod
    def open(cls, path, buffer_pages: int | None = None) -> Graph:
        path = Path(path)
        meta_path = path / META_FILE
        if not meta_path.exists():
            raise StorageError(f"{path} does not hold a loaded graph (no {META_FILE})")
        meta = json.loads(meta_path.read_text())
        db = Database(path, buffer_pages, create=False)
        graph = cls(db, GraphStats(meta["n"], meta["m"], meta["w_min"]), meta["graph_id"])
        db.reset_io_stats()
        return graph

    def has_node(self, nid: int) -> bool:
        return nid in self.nodes

    def require_node(self, nid: int) -> None:
        if nid not in self.nodes:
            raise NodeNotFound(f"node {nid} is not in graph {self.graph_id}")

    def node_ids(self) -> list[int]:
        return sorted(self.nodes.keys())

    def edges(self) -> list[EdgeTuple]:
        return [EdgeTuple(*row) for row in self.out_edges]

    def out_edge(self, fid: int, tid: int) -> EdgeTuple | None:
        for row in self.out_edges.lookup(fid):
            if row[1] == tid:
                return EdgeTuple(*row)
        return None

    def close(self) -> None:
        self.db.close()
