"""Command-line interface: ``femgraph gen|load|build-seg|query|bench``."""

from __future__ import annotations

import argparse
import csv
import logging
import statistics
import sys
from collections.abc import Sequence
from dataclasses import astuple, dataclass
from pathlib import Path

from . import __version__, search
from .segtable import build_segtable, has_segtable, list_segtables, load_segtable
from .storage import (INF, BUFFER_ENV, EdgeListError, Graph, NodeNotFound,
                      StorageError, read_edge_list, write_edge_list)
from .testkit import KINDS, GenSpec, gen_graph, sample_queries

log = logging.getLogger("femgraph")

EXIT_FOUND, EXIT_NO_PATH, EXIT_ERROR = 0, 1, 2

CSV_HEADER = ("graph_id", "algorithm", "lthd", "s", "t", "distance", "expansions",
              "visited", "page_reads", "wall_time_ms")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class BenchRecord:
    graph_id: str
    algorithm: str
    lthd: int | None
    s: int
    t: int
    distance: int
    expansions: int
    visited: int
    page_reads: int
    wall_time_ms: int

    def to_row(self) -> list[str]:
        row = [str(v) for v in astuple(self)]
        row[2] = "" if self.lthd is None else str(self.lthd)
        row[5] = "INF" if self.distance >= INF else str(self.distance)
        return row

    @classmethod
    def from_row(cls, row: Sequence[str]) -> BenchRecord:
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"expected {len(CSV_HEADER)} columns, got {len(row)}")
        values: list = [row[0], row[1]]
        values.append(int(row[2]) if row[2] else None)
        values += [int(row[3]), int(row[4])]
        values.append(INF if row[5] == "INF" else int(row[5]))
        values += [int(v) for v in row[6:]]
        return cls(*values)


def write_records(path, records: Sequence[BenchRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.to_row())


def read_records(path) -> list[BenchRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path} does not start with the bench header")
    return [BenchRecord.from_row(r) for r in rows[1:]]


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _algo_list(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in search.ALGORITHMS]
    if bad or not algos:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s) {bad}; choose from {','.join(search.ALGORITHMS)}")
    return algos


def _open_graph(path, buffer_pages: int | None = None) -> Graph:
    if not Path(path).is_dir():
        raise UsageError(f"database directory {path} does not exist")
    return Graph.open(path, buffer_pages)


def _segtable(graph: Graph, lthd: int | None):
    if lthd is None:
        built = list_segtables(graph)
        if not built:
            raise UsageError("bseg needs a SegTable; run 'femgraph build-seg DB --lthd L' first")
        if len(built) > 1:
            raise UsageError(f"several SegTables exist (l_thd {built}); pick one with --lthd")
        lthd = built[0]
    if not has_segtable(graph, lthd):
        raise UsageError(f"no SegTable with l_thd={lthd}; run 'femgraph build-seg DB --lthd {lthd}' first")
    return load_segtable(graph, lthd)


# -- commands ------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = GenSpec(args.kind, args.n, args.deg, (args.wlo, args.whi), args.seed)
    edges = gen_graph(spec)
    header = f"{spec.name} kind={spec.kind} n={spec.n} deg={spec.avg_degree} seed={spec.seed}"
    write_edge_list(args.output, edges, header)
    nodes = {e.fid for e in edges} | {e.tid for e in edges}
    w_min = min((e.cost for e in edges), default="-")
    print(f"wrote {args.output}: n={len(nodes)} m={len(edges)} w_min={w_min}")
    return 0


def cmd_load(args) -> int:
    edges = read_edge_list(args.edges)
    nodes = range(args.nodes) if args.nodes else ()
    graph = Graph.create(args.db, edges, args.graph_id, nodes=nodes)
    try:
        print(f"loaded {graph.graph_id}: {graph.stats}")
    finally:
        graph.close()
    return 0


def cmd_build_seg(args) -> int:
    graph = _open_graph(args.db, args.buffer_pages)
    try:
        for lthd in args.lthd:
            st = build_segtable(graph, lthd)
            for orientation, s in zip(("out", "in"), st.stats):
                print(f"{orientation}segs l_thd={lthd}: segment_count={s.segment_count} "
                      f"residual={s.residual_count} build_iterations={s.build_iterations} "
                      f"build_time={s.build_time:.3f}s index_pages={s.index_pages}")
    finally:
        graph.close()
    return 0


def cmd_query(args) -> int:
    if args.no_prune and args.algo not in ("bsdj", "bseg"):
        raise UsageError("--no-prune applies to bsdj and bseg only")
    graph = _open_graph(args.db, args.buffer_pages)
    try:
        segtable = _segtable(graph, args.lthd) if args.algo == "bseg" else None
        result = search.run(args.algo, graph, args.s, args.t, prune=not args.no_prune,
                            segtable=segtable)
        st = result.stats
        if result.found:
            print(f"distance {result.distance} ({result.edge_count} edges)")
            if args.path:
                for e in result.edges:
                    print(f"  {e.fid} -> {e.tid}  {e.cost}")
            else:
                print("path " + " ".join(map(str, result.nodes() or [args.s])))
        else:
            print(f"no path from {args.s} to {args.t}")
        print(f"expansions={st.expansions} visited={st.visited} page_reads={st.page_reads} "
              f"wall_time_ms={st.wall_time * 1000:.1f}")
        return EXIT_FOUND if result.found else EXIT_NO_PATH
    finally:
        graph.close()


def cmd_bench(args) -> int:
    graph = _open_graph(args.db)
    try:
        variants: list[tuple[str, int | None]] = []
        for algo in args.algos:
            if algo == "bseg":
                lthds = args.lthd or []
                if not lthds:
                    raise UsageError("bseg in --algos needs --lthd")
                variants += [("bseg", lthd) for lthd in lthds]
            else:
                variants.append((algo, None))
        segtables = {lthd: _segtable(graph, lthd) for algo, lthd in variants if lthd is not None}
        queries = sample_queries(graph, args.queries, args.seed)
        buffers = args.buffer_pages or [graph.db.pool.capacity]
        records: list[BenchRecord] = []
        summary = []
        for pages in buffers:
            graph.db.set_buffer_pages(pages)
            for algo, lthd in variants:
                graph.db.drop_cache()
                batch = []
                for s, t in queries:
                    graph.db.reset_io_stats()
                    r = search.run(algo, graph, s, t, prune=not args.no_prune,
                                   segtable=segtables.get(lthd))
                    batch.append(BenchRecord(graph.graph_id, algo, lthd, s, t, r.distance,
                                             r.stats.expansions, r.stats.visited,
                                             r.stats.page_reads, round(r.stats.wall_time * 1000)))
                records += batch
                summary.append((pages, algo, lthd, batch))
        if args.output:
            write_records(args.output, records)
            print(f"wrote {len(records)} records to {args.output}")
        print(f"{'buffer':>7} {'algorithm':<10} {'lthd':>5} {'expansions':>11} {'visited':>9} "
              f"{'page_reads':>11} {'wall_ms':>9}")
        for pages, algo, lthd, batch in summary:
            if not batch:
                continue

            def mean(attr):
                return statistics.fmean(getattr(b, attr) for b in batch)

            print(f"{pages:>7} {algo:<10} {'' if lthd is None else lthd:>5} {mean('expansions'):>11.1f} "
                  f"{mean('visited'):>9.1f} {mean('page_reads'):>11.1f} {mean('wall_time_ms'):>9.1f}")
        return 0
    finally:
        graph.close()


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="femgraph", description="Disk-backed shortest-path search engine.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic edge list")
    g.add_argument("--kind", choices=KINDS, default="random")
    g.add_argument("--n", type=int, required=True, help="node count")
    g.add_argument("--deg", type=int, default=3, help="average degree")
    g.add_argument("--wlo", type=int, default=1, help="smallest edge weight")
    g.add_argument("--whi", type=int, default=100, help="largest edge weight")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True, help="edge-list file to write")
    g.set_defaults(func=cmd_gen)

    ld = sub.add_parser("load", help="load an edge list into a database directory")
    ld.add_argument("edges", help="edge-list file: 'fid tid cost' per line")
    ld.add_argument("db", help="database directory to create")
    ld.add_argument("--graph-id", help="name recorded for the graph (default: directory name)")
    ld.add_argument("--nodes", type=int, default=0, help="also register node ids 0..N-1")
    ld.set_defaults(func=cmd_load)

    bs = sub.add_parser("build-seg", help="build and persist SegTables")
    bs.add_argument("db")
    bs.add_argument("--lthd", type=int, nargs="+", required=True, help="index threshold(s)")
    bs.add_argument("--buffer-pages", type=int, help=f"buffer size in pages (default ${BUFFER_ENV})")
    bs.set_defaults(func=cmd_build_seg)

    q = sub.add_parser("query", help="run one shortest-path query")
    q.add_argument("db")
    q.add_argument("--algo", choices=search.ALGORITHMS, default="bsdj")
    q.add_argument("--s", type=int, required=True)
    q.add_argument("--t", type=int, required=True)
    q.add_argument("--lthd", type=int, help="SegTable threshold for bseg")
    q.add_argument("--no-prune", action="store_true", help="disable pruning (bsdj, bseg)")
    q.add_argument("--buffer-pages", type=int, help=f"buffer size in pages (default ${BUFFER_ENV})")
    q.add_argument("--path", action="store_true", help="print every edge of the path")
    q.set_defaults(func=cmd_query)

    b = sub.add_parser("bench", help="run a query workload and write CSV")
    b.add_argument("db")
    b.add_argument("--algos", type=_algo_list, default=list(search.ALGORITHMS[:4]),
                   help="comma-separated algorithms")
    b.add_argument("--queries", type=int, default=100)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--lthd", type=_int_list, help="comma-separated thresholds for bseg")
    b.add_argument("--buffer-pages", type=_int_list, help="comma-separated buffer sizes to sweep")
    b.add_argument("--no-prune", action="store_true")
    b.add_argument("-o", "--output", help="CSV file to write")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, StorageError, EdgeListError, NodeNotFound, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
