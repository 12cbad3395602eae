import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from femgraph.storage import (INF, NULL, SEGMENT_MAGIC, BufferPool, Database,
                              DuplicateSourceKey, EdgeListError, FormatError,
                              Graph, KeyMutationError, NodeNotFound, PageFile,
                              SchemaError, StorageError, UniqueViolation,
                              collapse_edges, default_buffer_pages,
                              parse_edge_list, read_edge_list, rows_per_page,
                              sat_add)

VISITED = ("nid", "d2s", "p2s", "f")
EDGES = ("fid", "tid", "cost")


# -- costs ----------------------------------------------------------------


@given(st.integers(0, 10**12))
def test_inf_absorbs_finite_costs(x):
    assert sat_add(INF, x) == INF
    assert sat_add(x, INF) == INF
    assert INF > x


def test_inf_plus_inf_saturates():
    assert sat_add(INF, INF) == INF
    assert sat_add(3, 4) == 7
    assert NULL == -1


# -- tables -------------------------------------------------------------


def test_create_empty_tables(db):
    edges = db.create_table("edges", EDGES, "fid")
    visited = db.create_table("visited", VISITED, "nid", unique=True)
    assert len(edges) == 0 and len(visited) == 0
    assert db.table_path("edges").exists()


def test_create_table_rejects_unknown_key(db):
    with pytest.raises(SchemaError):
        db.create_table("bad", EDGES, "nid")


def test_create_table_rejects_duplicate_name(db):
    db.create_table("edges", EDGES, "fid")
    with pytest.raises(StorageError):
        db.create_table("edges", EDGES, "fid")


def test_create_table_rejects_empty_schema(db):
    with pytest.raises(SchemaError):
        db.create_table("bad", (), "fid")


def test_insert_source_row(db):
    visited = db.create_table("visited", VISITED, "nid", unique=True)
    visited.insert((7, 0, 7, 0))
    assert visited.scan() == [(7, 0, 7, 0)]
    assert visited.get(7) == (7, 0, 7, 0)


def test_insert_duplicate_unique_key(db):
    visited = db.create_table("visited", VISITED, "nid", unique=True)
    visited.insert((7, 0, 7, 0))
    with pytest.raises(UniqueViolation):
        visited.insert((7, 5, 1, 0))


def test_insert_non_unique_same_key(db):
    edges = db.create_table("edges", EDGES, "fid")
    edges.insert((1, 2, 3))
    edges.insert((1, 4, 5))
    assert edges.lookup(1) == [(1, 2, 3), (1, 4, 5)]


def test_insert_wrong_width(db):
    edges = db.create_table("edges", EDGES, "fid")
    with pytest.raises(SchemaError):
        edges.insert((1, 2))


def test_lookup_missing_key(db):
    edges = db.create_table("edges", EDGES, "fid")
    edges.bulk_load([(1, 2, 3)])
    assert edges.lookup(99) == []


def test_lookup_reads_only_matching_pages(tmp_path):
    rpp = rows_per_page(3)
    with Database(tmp_path / "d") as db:
        t = db.create_table("edges", EDGES, "fid")
        t.bulk_load((i // 10, i, 1) for i in range(rpp * 20))
        t.flush()
    with Database(tmp_path / "d", buffer_pages=64) as db:
        t = db.open_table("edges")
        assert db.io_stats().page_reads == t.page_count  # index rebuild reads each page once
        db.drop_cache()
        db.reset_io_stats()
        rows = t.lookup(3)
        assert [r[1] for r in rows] == list(range(30, 40))
        assert db.io_stats().page_reads == 1


def test_scan_with_predicate(db):
    t = db.create_table("edges", EDGES, "fid")
    t.bulk_load([(1, 2, 3), (2, 3, 4), (3, 1, 5)])
    assert t.scan(t.match(tid=3)) == [(2, 3, 4)]
    assert t.scan(lambda r: r[2] > 3) == [(2, 3, 4), (3, 1, 5)]


def test_update_where(db):
    t = db.create_table("visited", VISITED, "nid", unique=True)
    for v in range(5):
        t.insert((v, v, v, 2 if v % 2 else 0))
    assert t.update_where(t.match(f=2), {"f": 1}) == 2
    assert [r[3] for r in t] == [0, 1, 0, 1, 0]
    assert t.update_where(lambda r: False, {"f": 5}) == 0
    assert t.update_where(lambda r: r[0] == 0, {"d2s": lambda r: r[1] + 10}) == 1
    assert t.get(0) == (0, 10, 0, 0)


def test_update_where_refuses_key_change(db):
    t = db.create_table("visited", VISITED, "nid", unique=True)
    t.insert((1, 0, 1, 0))
    with pytest.raises(KeyMutationError):
        t.update_where(lambda r: True, {"nid": 2})
    assert t.get(1) == (1, 0, 1, 0)


def _merge_min(t, source):
    return t.merge(source, 0, lambda tgt, src: tgt[1] > src[1],
                   lambda tgt, src: {"d2s": src[1], "p2s": src[2], "f": 0},
                   lambda src: (src[0], src[1], src[2], 0))


def test_merge_updates_inserts_and_skips(db):
    t = db.create_table("visited", VISITED, "nid", unique=True)
    t.insert((1, 10, 0, 1))
    t.insert((2, 5, 0, 1))
    affected = _merge_min(t, [(1, 7, 9), (2, 5, 9), (3, 4, 9)])
    assert affected == 2
    assert sorted(t) == [(1, 7, 9, 0), (2, 5, 0, 1), (3, 4, 9, 0)]


def test_merge_rejects_repeated_source_key(db):
    t = db.create_table("visited", VISITED, "nid", unique=True)
    with pytest.raises(DuplicateSourceKey):
        _merge_min(t, [(1, 7, 9), (1, 6, 9)])


def test_merge_needs_unique_target(db):
    t = db.create_table("edges", EDGES, "fid")
    with pytest.raises(StorageError):
        t.merge([], 0, None, {}, None)


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.integers(0, 30), st.integers(0, 100), max_size=20),
       st.dictionaries(st.integers(0, 30), st.integers(0, 100), max_size=20))
def test_merge_is_idempotent_and_monotone(tmp_path_factory, target, source):
    with Database(tmp_path_factory.mktemp("m")) as db:
        t = db.create_table("v", VISITED, "nid", unique=True, temporary=True)
        t.insert_many((k, d, 0, 1) for k, d in sorted(target.items()))
        src = [(k, d, 1) for k, d in source.items()]
        _merge_min(t, src)
        after = {r[0]: r[1] for r in t}
        for k, d in target.items():
            assert after[k] <= d
        for k, d in source.items():
            assert after[k] == min(d, target.get(k, INF))
        assert _merge_min(t, src) == 0
        assert {r[0]: r[1] for r in t} == after


def test_flush_reclusters_out_of_order_inserts(tmp_path):
    with Database(tmp_path / "d") as db:
        t = db.create_table("edges", EDGES, "fid")
        for fid in (5, 1, 3, 1):
            t.insert((fid, fid + 1, 1))
        assert not t.is_clustered
        t.flush()
        assert t.is_clustered
        assert [r[0] for r in t] == [1, 1, 3, 5]


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_table_round_trip(tmp_path_factory, data):
    nfields = data.draw(st.integers(1, 6))
    fields = [f"c{i}" for i in range(nfields)]
    key = data.draw(st.lists(st.sampled_from(fields), min_size=1, max_size=nfields, unique=True))
    unique = data.draw(st.booleans())
    rows = data.draw(st.lists(st.tuples(*[st.integers(-2**63, 2**63 - 1)] * nfields), max_size=300))
    path = tmp_path_factory.mktemp("rt")
    with Database(path) as db:
        t = db.create_table("t", fields, key, unique=unique)
        if unique:
            seen, kept = set(), []
            for r in rows:
                if t.key_of(r) not in seen:
                    seen.add(t.key_of(r))
                    kept.append(r)
            rows = kept
        t.insert_many(rows)
        t.flush()
        expected = sorted(rows, key=t.key_of)
    with Database(path, buffer_pages=2) as db:
        t = db.open_table("t")
        assert list(t) == expected
        assert t.fields == tuple(fields) and t.key == tuple(key) and t.unique == unique


def test_open_with_wrong_magic(tmp_path):
    with Database(tmp_path / "d") as db:
        db.create_table("t", EDGES, "fid").flush()
    with Database(tmp_path / "d") as db:
        with pytest.raises(FormatError):
            db.open_table("t", expect_magic=SEGMENT_MAGIC)


def test_open_garbage_file(tmp_path):
    (tmp_path / "d").mkdir()
    (tmp_path / "d" / "t.tbl").write_bytes(b"nope" * 1024)
    with Database(tmp_path / "d") as db:
        with pytest.raises(FormatError):
            db.open_table("t")


def test_temporary_tables_disappear(db):
    t = db.create_table("work", VISITED, "nid", unique=True, temporary=True)
    t.insert((1, 0, 1, 0))
    path = t.file.path
    db.drop_table(t.name)
    assert not path.exists()
    assert t.name not in db.tables


# -- buffer pool --------------------------------------------------------


def test_lru_eviction_is_deterministic(tmp_path):
    pool = BufferPool(2)
    pf = PageFile(tmp_path / "f.tbl", 3)
    for page in (1, 2, 3):
        pf.write(page, [(page, 0, 0)])
    pool.fetch(pf, 1)
    pool.fetch(pf, 2)
    pool.fetch(pf, 1)          # 2 is now least recently used
    pool.fetch(pf, 3)          # evicts 2
    assert pool.stats.page_reads == 3 and pool.stats.buffer_hits == 1
    pool.fetch(pf, 1)
    assert pool.stats.buffer_hits == 2
    pool.fetch(pf, 2)
    assert pool.stats.page_reads == 4
    pf.close()


def test_dirty_pages_are_written_on_eviction(tmp_path):
    pool = BufferPool(1)
    pf = PageFile(tmp_path / "f.tbl", 3)
    pool.create(pf, 1).append((1, 2, 3))
    pool.fetch(pf, 1, write=True)
    pool.create(pf, 2)
    assert pool.stats.page_writes == 1
    assert pf.read(1) == [(1, 2, 3)]
    pf.close()


def test_io_counters_reset_and_resize(db):
    t = db.create_table("edges", EDGES, "fid")
    t.bulk_load((i, i, 1) for i in range(rows_per_page(3) * 8))
    db.drop_cache()
    db.set_buffer_pages(2)
    for i in range(0, len(t), rows_per_page(3)):
        t.lookup(i)
    stats = db.io_stats()
    assert stats.page_reads == 8
    db.reset_io_stats()
    assert db.io_stats().page_reads == 0
    with pytest.raises(SchemaError):
        db.set_buffer_pages(0)


def test_buffer_env_default(monkeypatch):
    monkeypatch.setenv("FEMGRAPH_BUFFER_PAGES", "77")
    assert default_buffer_pages() == 77
    monkeypatch.setenv("FEMGRAPH_BUFFER_PAGES", "x")
    with pytest.raises(ValueError):
        default_buffer_pages()
    monkeypatch.delenv("FEMGRAPH_BUFFER_PAGES")
    assert default_buffer_pages() > 0


# -- edge lists and graphs ----------------------------------------------


def test_parse_edge_list_skips_comments():
    edges = parse_edge_list(["# header", "", "0 1 5", "  1 2 3  "])
    assert edges == [(0, 1, 5), (1, 2, 3)]


def test_parse_edge_list_reports_line():
    with pytest.raises(EdgeListError) as err:
        parse_edge_list(["0 1 5", "a b x"])
    assert err.value.line_no == 2


@pytest.mark.parametrize("line", ["0 1 -4", "0 1", "-1 2 3"])
def test_parse_edge_list_rejects_bad_lines(line):
    with pytest.raises(EdgeListError):
        parse_edge_list([line])


def test_collapse_edges():
    assert collapse_edges([(1, 2, 9), (1, 2, 4), (3, 3, 1), (0, 1, 2)]) == [(0, 1, 2), (1, 2, 4)]


def test_read_edge_list(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1 2\n1 2 3\n")
    assert read_edge_list(p) == [(0, 1, 2), (1, 2, 3)]


def test_graph_tables_and_stats(make_graph):
    g = make_graph([(0, 1, 2), (1, 2, 3), (0, 2, 9), (0, 1, 7)], nodes=[5])
    assert (g.stats.n, g.stats.m, g.stats.w_min) == (4, 3, 2)
    assert g.out_edges.lookup(0) == [(0, 1, 2), (0, 2, 9)]
    assert g.in_edges.lookup(2) == [(0, 2, 9), (1, 2, 3)]
    assert g.out_edge(1, 2) == (1, 2, 3) and g.out_edge(2, 1) is None
    with pytest.raises(NodeNotFound):
        g.require_node(42)


def test_graph_reopen(tmp_path):
    Graph.create(tmp_path / "g", [(0, 1, 2)], graph_id="tiny").close()
    g = Graph.open(tmp_path / "g", buffer_pages=4)
    assert g.graph_id == "tiny" and g.edges() == [(0, 1, 2)]
    g.close()
    with pytest.raises(StorageError):
        Graph.create(tmp_path / "g", [])


def test_empty_graph(make_graph):
    g = make_graph([])
    assert (g.stats.n, g.stats.m, g.stats.w_min) == (0, 0, None)


def test_open_missing_graph(tmp_path):
    os.makedirs(tmp_path / "empty")
    with pytest.raises(StorageError):
        Graph.open(tmp_path / "empty")
