"""Shortest-path searches assembled from the frontier/expand/merge operators.

Five algorithms share one visited-table layout:

``dijkstra``            single direction, one frontier node per expansion
``bidir_dijkstra``      both directions, one node per expansion
``bidir_set_dijkstra``  both directions, all minimal-distance candidates
``bidir_bfs``           both directions, every candidate
``bidir_seg``           both directions over a SegTable, selective frontier

The bidirectional loop expands the side whose last merge touched fewer rows
and stops once ``l_f + l_b >= minCost``, where ``l_f``/``l_b`` are the
smallest open candidate distances on each side.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field

from .relops import (BACKWARD, FORWARD, AllCandidates, Direction, Selective,
                     SetMin, SingleMin, VisitedTable, e_expand, f_select,
                     m_merge)
from .storage import INF, NULL, EdgeTuple, Graph, Table

log = logging.getLogger(__name__)

ALGORITHMS = ("dj", "bdj", "bsdj", "bbfs", "bseg")

Hop = Callable[[int, int], list]


class PathRecoveryError(RuntimeError):
    """Parent links in the visited table do not form a valid path."""


@dataclass
class SearchStats:
    expansions: int = 0
    visited: int = 0
    page_reads: int = 0
    wall_time: float = 0.0
    forward: int = 0
    backward: int = 0
    discovered: int = 0  # expansions done when minCost last improved


@dataclass
class SearchState:
    l_f: int = 0
    l_b: int = 0
    min_cost: int = INF
    n_f: int = 1
    n_b: int = 1
    fwd: int = 1
    bwd: int = 1


@dataclass
class PathResult:
    found: bool
    distance: int
    edges: list[EdgeTuple] = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def length(self) -> int:
        return sum(e.cost for e in self.edges)

    def nodes(self) -> list[int]:
        if not self.edges:
            return []
        return [self.edges[0].fid] + [e.tid for e in self.edges]


def should_stop(state: SearchState) -> bool:
    """No unexplored path can beat ``minCost`` once ``l_f + l_b >= minCost``."""
    return state.l_f + state.l_b >= state.min_cost


def set_dijkstra_bound(distance: int, w_min: int, n: int) -> int:
    """Largest expansion count allowed for a found set-Dijkstra run."""
    return min(math.ceil(distance / w_min) + 1, n)


def seg_bound(distance: int, l_thd: int, w_min: int, n: int) -> int:
    """Strict upper bound on expansions of a found SegTable run."""
    return min(n, math.ceil(2 * (distance + l_thd) / (l_thd + w_min)) + 1)


# -- path recovery -------------------------------------------------------


def recover_path(visited: VisitedTable, meet: int, forward_hop: Hop | None = None,
                 backward_hop: Hop | None = None) -> list[EdgeTuple]:
    """Concatenate the p2s chain ending at ``meet`` and the p2t chain leaving it.

    A side whose parent at ``meet`` is NULL contributes nothing, which covers
    single-direction runs. Each hop is turned into original edges by the hop
    callbacks (default: one edge costed by the distance difference). The
    result must be contiguous and cost exactly ``d2s + d2t`` at ``meet``.
    """
    row = visited.get(meet)
    if row is None:
        raise PathRecoveryError(f"meeting node {meet} is not in the visited table")
    limit = len(visited) + 1

    def fwd_default(u, v):
        return [EdgeTuple(u, v, visited.get(v)[1] - visited.get(u)[1])]

    def bwd_default(x, y):
        return [EdgeTuple(x, y, visited.get(x)[4] - visited.get(y)[4])]

    forward_hop = forward_hop or fwd_default
    backward_hop = backward_hop or bwd_default

    def chain(start, dist_i, parent_i):
        nodes = [start]
        r = visited.get(start)
        if r[parent_i] == NULL:
            return nodes, 0
        expected = r[dist_i]
        while True:
            parent = r[parent_i]
            if parent == nodes[-1]:
                return nodes, expected
            if parent == NULL or len(nodes) > limit:
                raise PathRecoveryError(f"broken parent chain at node {nodes[-1]}")
            r = visited.get(parent)
            if r is None:
                raise PathRecoveryError(f"parent {parent} of {nodes[-1]} is not visited")
            nodes.append(parent)

    back_nodes, d_s = chain(meet, 1, 2)
    ahead_nodes, d_t = chain(meet, 4, 5)
    edges: list[EdgeTuple] = []
    back_nodes.reverse()
    for u, v in zip(back_nodes, back_nodes[1:]):
        edges.extend(forward_hop(u, v))
    for x, y in zip(ahead_nodes, ahead_nodes[1:]):
        edges.extend(backward_hop(x, y))
    for a, b in zip(edges, edges[1:]):
        if a.tid != b.fid:
            raise PathRecoveryError(f"edges {a} and {b} are not contiguous")
    if edges and (edges[0].fid != back_nodes[0] or edges[-1].tid != ahead_nodes[-1]):
        raise PathRecoveryError("recovered path does not span the chain ends")
    total = sum(e.cost for e in edges)
    if total != d_s + d_t:
        raise PathRecoveryError(f"path costs {total}, visited table says {d_s + d_t}")
    return edges


def _edge_hop(graph: Graph) -> Hop:
    def hop(u, v):
        e = graph.out_edge(u, v)
        if e is None:
            raise PathRecoveryError(f"no edge {u}->{v} in the graph")
        return [e]
    return hop


# -- searches ------------------------------------------------------------


def _finish(result: PathResult, graph: Graph, visited: VisitedTable, start: float, io0) -> PathResult:
    result.stats.visited = len(visited)
    result.stats.page_reads = graph.db.io_stats().page_reads - io0.page_reads
    result.stats.wall_time = time.perf_counter() - start
    return result


def dijkstra(graph: Graph, s: int, t: int,
             on_finalize: Callable[[tuple], None] | None = None) -> PathResult:
    """Single-direction search, finalizing one minimal node per iteration."""
    graph.require_node(s)
    graph.require_node(t)
    start, io0 = time.perf_counter(), graph.db.io_stats()
    visited = VisitedTable.create(graph.db, directions=(FORWARD,))
    try:
        visited.insert((s, 0, s, 0, INF, NULL, 0))
        result = PathResult(False, INF)
        if s == t:
            result = PathResult(True, 0)
            return _finish(result, graph, visited, start, io0)
        stats = result.stats
        while True:
            frontier = f_select(visited, SingleMin(), FORWARD)
            if not frontier:
                break
            expanded = e_expand(frontier, graph.out_edges, FORWARD)
            m_merge(visited, expanded, FORWARD)
            visited.close_frontier(FORWARD)
            stats.expansions += 1
            stats.forward += 1
            mid = frontier[0]
            if on_finalize is not None:
                on_finalize(mid)
            if mid[0] == t:
                break
        target = visited.get(t)
        if target is not None and target[3] == 1:
            result.found = True
            result.distance = target[1]
            result.edges = recover_path(visited, t, _edge_hop(graph))
        return _finish(result, graph, visited, start, io0)
    finally:
        visited.drop()


def _bidirectional(graph: Graph, s: int, t: int, criterion: Callable[[int], object],
                   out_table: Table, in_table: Table, prune: bool,
                   forward_hop: Hop, backward_hop: Hop) -> PathResult:
    graph.require_node(s)
    graph.require_node(t)
    start, io0 = time.perf_counter(), graph.db.io_stats()
    visited = VisitedTable.create(graph.db)
    try:
        if s == t:
            visited.insert((s, 0, s, 0, 0, s, 0))
        else:
            visited.insert((s, 0, s, 0, INF, NULL, 0))
            visited.insert((t, INF, NULL, 0, 0, t, 0))
        state = SearchState(min_cost=visited.min_cost())
        result = PathResult(False, INF)
        stats = result.stats
        while not should_stop(state):
            forward = state.n_f <= state.n_b
            d: Direction = FORWARD if forward else BACKWARD
            frontier = f_select(visited, criterion(state.fwd if forward else state.bwd), d)
            if not frontier:
                # nothing left to expand on this side; its reachable set is exhausted
                if forward:
                    state.l_f = INF
                else:
                    state.l_b = INF
                continue
            bound = None
            if prune:
                bound = (state.l_b if forward else state.l_f, state.min_cost)
            expanded = e_expand(frontier, out_table if forward else in_table, d, prune=bound)
            affected = m_merge(visited, expanded, d)
            visited.close_frontier(d)
            low = visited.min_open(d)
            stats.expansions += 1
            if forward:
                state.n_f, state.l_f = affected, low
                state.fwd += 1
                stats.forward += 1
            else:
                state.n_b, state.l_b = affected, low
                state.bwd += 1
                stats.backward += 1
            if visited.min_cost() < state.min_cost:
                state.min_cost = visited.min_cost()
                stats.discovered = stats.expansions
        if state.min_cost < INF:
            meet = visited.meeting_node()
            result.found = True
            result.distance = state.min_cost
            result.edges = recover_path(visited, meet, forward_hop, backward_hop)
        return _finish(result, graph, visited, start, io0)
    finally:
        visited.drop()


def bidir_dijkstra(graph: Graph, s: int, t: int) -> PathResult:
    """Bidirectional Dijkstra expanding a single node per iteration."""
    hop = _edge_hop(graph)
    return _bidirectional(graph, s, t, lambda k: SingleMin(), graph.out_edges,
                          graph.in_edges, False, hop, hop)


def bidir_set_dijkstra(graph: Graph, s: int, t: int, prune: bool = True) -> PathResult:
    """Bidirectional set Dijkstra: every minimal-distance candidate per iteration."""
    hop = _edge_hop(graph)
    result = _bidirectional(graph, s, t, lambda k: SetMin(), graph.out_edges,
                            graph.in_edges, prune, hop, hop)
    if result.found and s != t and graph.stats.w_min:
        bound = set_dijkstra_bound(result.distance, graph.stats.w_min, graph.stats.n)
        if result.stats.expansions > bound:
            log.warning("bsdj %s->%s used %d expansions, bound is %d",
                        s, t, result.stats.expansions, bound)
    return result


def bidir_bfs(graph: Graph, s: int, t: int, prune: bool = True) -> PathResult:
    """Bidirectional breadth-first sweeps: every candidate per iteration."""
    hop = _edge_hop(graph)
    return _bidirectional(graph, s, t, lambda k: AllCandidates(), graph.out_edges,
                          graph.in_edges, prune, hop, hop)


def bidir_seg(graph: Graph, s: int, t: int, segtable, l_thd: int | None = None,
              prune: bool = True) -> PathResult:
    """Bidirectional selective search over a SegTable built for ``l_thd``."""
    from .segtable import expand_segment

    if segtable.out.meta != segtable.inc.meta:
        raise ValueError(f"segment tables disagree on l_thd: "
                         f"{segtable.out.meta} vs {segtable.inc.meta}")
    if l_thd is not None and l_thd != segtable.l_thd:
        raise ValueError(f"segment tables were built for l_thd={segtable.l_thd}, not {l_thd}")
    l_thd = segtable.l_thd
    result = _bidirectional(
        graph, s, t, lambda k: Selective(k, l_thd), segtable.out, segtable.inc, prune,
        lambda u, v: expand_segment(segtable.out, u, v),
        lambda x, y: expand_segment(segtable.inc, x, y))
    if result.found and s != t and graph.stats.w_min:
        bound = seg_bound(result.distance, l_thd, graph.stats.w_min, graph.stats.n)
        if result.stats.expansions >= bound:
            log.warning("bseg %s->%s used %d expansions, bound is < %d",
                        s, t, result.stats.expansions, bound)
    return result


def run(algorithm: str, graph: Graph, s: int, t: int, *, prune: bool = True,
        segtable=None) -> PathResult:
    """Dispatch by short algorithm name (dj, bdj, bsdj, bbfs, bseg)."""
    if algorithm == "dj":
        return dijkstra(graph, s, t)
    if algorithm == "bdj":
        return bidir_dijkstra(graph, s, t)
    if algorithm == "bsdj":
        return bidir_set_dijkstra(graph, s, t, prune=prune)
    if algorithm == "bbfs":
        return bidir_bfs(graph, s, t, prune=prune)
    if algorithm == "bseg":
        if segtable is None:
            raise ValueError("bseg needs a SegTable")
        return bidir_seg(graph, s, t, segtable, prune=prune)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
