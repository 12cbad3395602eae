"""Workload generators and in-memory oracles.

The oracles work on plain edge lists with a binary heap and never touch the
storage engine, so they can serve as ground truth for it.
"""

from __future__ import annotations

import heapq
import random
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .storage import INF, EdgeTuple, NodeNotFound, collapse_edges

RANDOM = "random"
POWER = "power"
KINDS = (RANDOM, POWER)

APSP_NODE_LIMIT = 2000


@dataclass(frozen=True)
class GenSpec:
    kind: str
    n: int
    avg_degree: int
    weight_range: tuple[int, int] = (1, 100)
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 2:
            raise ValueError(f"need at least 2 nodes, got n={self.n}")
        if self.avg_degree < 1:
            raise ValueError(f"avg_degree must be >= 1, got {self.avg_degree}")
        lo, hi = self.weight_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad weight range [{lo}, {hi}]")
        if self.kind == POWER and self.n <= self.avg_degree:
            raise ValueError("a power graph needs more nodes than edges per new node")

    @property
    def name(self) -> str:
        return f"{self.kind.capitalize()}{self.n}N{self.avg_degree}d_s{self.seed}"


def _random_edges(spec: GenSpec, rng: random.Random) -> list[tuple[int, int, int]]:
    lo, hi = spec.weight_range
    n = spec.n
    return [(rng.randrange(n), rng.randrange(n), rng.randint(lo, hi))
            for _ in range(n * spec.avg_degree)]


def _power_edges(spec: GenSpec, rng: random.Random) -> list[tuple[int, int, int]]:
    # preferential attachment; each new node links to `deg` distinct earlier nodes
    lo, hi = spec.weight_range
    deg = spec.avg_degree
    edges = []
    ends: list[int] = []  # every edge endpoint once: sampling from it is degree-proportional
    targets = list(range(deg))
    for v in range(deg, spec.n):
        for u in targets:
            w = rng.randint(lo, hi)
            edges.append((v, u, w))
            edges.append((u, v, w))
        ends.extend(targets)
        ends.extend([v] * deg)
        chosen: set[int] = set()
        while len(chosen) < deg:
            chosen.add(rng.choice(ends))
        targets = sorted(chosen)
    return edges


def gen_graph(spec: GenSpec) -> list[EdgeTuple]:
    """Deterministic edge list for ``spec``; self-loops dropped, duplicates collapsed."""
    spec.validate()
    rng = random.Random(spec.seed)
    raw = _random_edges(spec, rng) if spec.kind == RANDOM else _power_edges(spec, rng)
    return collapse_edges(raw)


def _adjacency(edges: Iterable[tuple[int, int, int]]) -> dict[int, dict[int, int]]:
    adj: dict[int, dict[int, int]] = defaultdict(dict)
    for fid, tid, cost in edges:
        adj[tid]
        best = adj[fid].get(tid)
        if best is None or cost < best:
            adj[fid][tid] = cost
    return adj


def _bounded(adj, s: int, bound: int = INF, target: int | None = None):
    dist = {s: 0}
    parent: dict[int, int] = {}
    done = set()
    heap = [(0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == target or d > bound:
            break
        for v, w in adj.get(u, {}).items():
            nd = d + w
            if nd <= bound and nd < dist.get(v, INF):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, parent


def oracle_dijkstra(edges: Iterable[tuple[int, int, int]], s: int, t: int,
                    nodes: Iterable[int] = ()) -> tuple[int, list[EdgeTuple]]:
    """Exact ``(distance, path)``; ``(INF, [])`` if ``t`` is unreachable."""
    adj = _adjacency(edges)
    known = set(adj) | set(nodes)
    for v in (s, t):
        if v not in known:
            raise NodeNotFound(f"node {v} is not in the edge list")
    if s == t:
        return 0, []
    dist, parent = _bounded(adj, s, target=t)
    if t not in dist:
        return INF, []
    path = []
    v = t
    while v != s:
        u = parent[v]
        path.append(EdgeTuple(u, v, adj[u][v]))
        v = u
    path.reverse()
    return dist[t], path


def oracle_apsp(edges: Iterable[tuple[int, int, int]], bound: int = INF,
                nodes: Iterable[int] = (), limit: int = APSP_NODE_LIMIT) -> dict[tuple[int, int], int]:
    """``{(u, v): distance}`` for every pair ``u != v`` with distance <= ``bound``."""
    adj = _adjacency(edges)
    all_nodes = set(adj) | set(nodes)
    if len(all_nodes) > limit:
        raise ValueError(f"all-pairs oracle refuses {len(all_nodes)} nodes (limit {limit})")
    out = {}
    for u in sorted(all_nodes):
        dist, _ = _bounded(adj, u, bound)
        for v, d in dist.items():
            if v != u and d <= bound:
                out[(u, v)] = d
    return out


def sample_queries(nodes, count: int, seed: int = 0) -> list[tuple[int, int]]:
    """``count`` uniform pairs with ``s != t``; ``nodes`` is a Graph or node ids."""
    if hasattr(nodes, "node_ids"):
        nodes = nodes.node_ids()
    pool: Sequence[int] = sorted(set(nodes))
    if count <= 0:
        return []
    if len(pool) < 2:
        raise ValueError("need at least two nodes to sample queries")
    rng = random.Random(seed)
    pairs = []
    while len(pairs) < count:
        s, t = rng.choice(pool), rng.choice(pool)
        if s != t:
            pairs.append((s, t))
    return pairs
