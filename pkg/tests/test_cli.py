import statistics

import pytest
from hypothesis import given
from hypothesis import strategies as st

from femgraph.cli import CSV_HEADER, BenchRecord, main, read_records, write_records
from femgraph.storage import INF
from femgraph.testkit import oracle_dijkstra


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def loaded(tmp_path, capsys):
    edges = tmp_path / "g.txt"
    edges.write_text("0 1 2\n1 2 3\n0 2 9\n3 4 1\n")
    db = tmp_path / "db"
    assert run(capsys, "load", edges, db)[0] == 0
    return db


def test_gen_writes_edge_list(tmp_path, capsys):
    out = tmp_path / "g.txt"
    code, text, _ = run(capsys, "gen", "--kind", "random", "--n", 1000, "--deg", 3, "--seed", 1, "-o", out)
    assert code == 0 and "m=" in text
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert 2900 <= len(lines) <= 3000


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    run(capsys, "gen", "--kind", "power", "--n", 300, "--seed", 4, "-o", a)
    run(capsys, "gen", "--kind", "power", "--n", 300, "--seed", 4, "-o", b)
    assert a.read_bytes() == b.read_bytes()


def test_gen_rejects_single_node(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "--n", 1, "-o", tmp_path / "x.txt")
    assert code == 2 and "error" in err


def test_load_reports_stats(loaded, capsys, tmp_path):
    edges = tmp_path / "three.txt"
    edges.write_text("# c\n0 1 5\n1 2 3\n0 1 4\n")
    code, text, _ = run(capsys, "load", edges, tmp_path / "db3")
    assert code == 0 and "n=3 m=2 w_min=3" in text


def test_load_rejects_malformed_line(tmp_path, capsys):
    edges = tmp_path / "bad.txt"
    edges.write_text("0 1 2\na b x\n")
    code, _, err = run(capsys, "load", edges, tmp_path / "db")
    assert code == 2 and "line 2" in err


def test_load_empty_file(tmp_path, capsys):
    edges = tmp_path / "empty.txt"
    edges.write_text("")
    code, text, _ = run(capsys, "load", edges, tmp_path / "db")
    assert code == 0 and "n=0 m=0" in text


def test_build_seg(loaded, capsys):
    code, text, _ = run(capsys, "build-seg", loaded, "--lthd", 2, 6)
    assert code == 0
    counts = [int(part.split("=")[1]) for line in text.splitlines() if line.startswith("outsegs")
              for part in line.split() if part.startswith("segment_count")]
    assert len(counts) == 2 and counts[0] <= counts[1]


def test_build_seg_errors(loaded, tmp_path, capsys):
    assert run(capsys, "build-seg", tmp_path / "nope", "--lthd", 5)[0] == 2
    assert run(capsys, "build-seg", loaded, "--lthd", 0)[0] == 2


def test_query_exit_codes(loaded, capsys):
    code, text, _ = run(capsys, "query", loaded, "--algo", "bsdj", "--s", 0, "--t", 2)
    assert code == 0 and "distance 5" in text and "path 0 1 2" in text
    code, text, _ = run(capsys, "query", loaded, "--algo", "dj", "--s", 0, "--t", 4)
    assert code == 1 and "no path" in text
    code, _, err = run(capsys, "query", loaded, "--s", 0, "--t", 77)
    assert code == 2 and "77" in err


def test_query_path_dump(loaded, capsys):
    code, text, _ = run(capsys, "query", loaded, "--algo", "bbfs", "--s", 0, "--t", 2, "--path")
    assert code == 0 and "0 -> 1  2" in text and "1 -> 2  3" in text


def test_query_bseg_needs_index(loaded, capsys):
    code, _, err = run(capsys, "query", loaded, "--algo", "bseg", "--s", 0, "--t", 2)
    assert code == 2 and "build-seg" in err
    run(capsys, "build-seg", loaded, "--lthd", 4)
    code, text, _ = run(capsys, "query", loaded, "--algo", "bseg", "--s", 0, "--t", 2, "--no-prune")
    assert code == 0 and "distance 5" in text


def test_query_no_prune_only_for_set_algorithms(loaded, capsys):
    assert run(capsys, "query", loaded, "--algo", "dj", "--s", 0, "--t", 2, "--no-prune")[0] == 2


def test_buffer_pages_from_environment(loaded, capsys, monkeypatch):
    monkeypatch.setenv("FEMGRAPH_BUFFER_PAGES", "0")
    assert run(capsys, "query", loaded, "--s", 0, "--t", 2)[0] == 2
    assert run(capsys, "query", loaded, "--s", 0, "--t", 2, "--buffer-pages", 3)[0] == 0


@pytest.fixture
def random_db(tmp_path, capsys):
    edges = tmp_path / "r.txt"
    run(capsys, "gen", "--n", 400, "--deg", 3, "--seed", 11, "-o", edges)
    db = tmp_path / "rdb"
    run(capsys, "load", edges, db)
    run(capsys, "build-seg", db, "--lthd", 5, 20)
    return edges, db


def test_bench_csv(random_db, tmp_path, capsys):
    edges_path, db = random_db
    out = tmp_path / "bench.csv"
    code, text, _ = run(capsys, "bench", db, "--algos", "dj,bdj,bsdj,bbfs,bseg", "--lthd", "5,20",
                        "--queries", 8, "--seed", 2, "-o", out)
    assert code == 0 and "bsdj" in text
    assert out.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    records = read_records(out)
    assert len(records) == 8 * 6
    from femgraph.storage import read_edge_list
    edges = read_edge_list(edges_path)
    by_query = {}
    for r in records:
        by_query.setdefault((r.s, r.t), set()).add(r.distance)
        assert (r.lthd is None) == (r.algorithm != "bseg")
    for (s, t), distances in by_query.items():
        assert distances == {oracle_dijkstra(edges, s, t)[0]}


def test_bench_buffer_sweep(random_db, tmp_path, capsys):
    _, db = random_db
    out = tmp_path / "sweep.csv"
    run(capsys, "bench", db, "--algos", "bsdj", "--queries", 10, "--buffer-pages", "4,16,64,256", "-o", out)
    records = read_records(out)
    means = [statistics.fmean(r.page_reads for r in records[i:i + 10]) for i in range(0, 40, 10)]
    assert means == sorted(means, reverse=True)


def test_bench_is_deterministic(random_db, tmp_path, capsys):
    _, db = random_db
    outs = []
    for name in ("a.csv", "b.csv"):
        run(capsys, "bench", db, "--algos", "bdj,bseg", "--lthd", "5", "--queries", 5, "-o", tmp_path / name)
        outs.append([r.__class__(**{**r.__dict__, "wall_time_ms": 0}) for r in read_records(tmp_path / name)])
    assert outs[0] == outs[1]


def test_bench_errors(random_db, capsys):
    _, db = random_db
    assert run(capsys, "bench", db, "--algos", "bseg", "--queries", 2)[0] == 2
    assert run(capsys, "bench", db, "--algos", "bseg", "--lthd", "7", "--queries", 2)[0] == 2
    with pytest.raises(SystemExit):
        main(["bench", str(db), "--algos", "astar"])


record_strategy = st.builds(
    BenchRecord, st.text("abcxyz_0123", min_size=1), st.sampled_from(["dj", "bdj", "bsdj", "bbfs", "bseg"]),
    st.one_of(st.none(), st.integers(1, 500)), st.integers(0, 10**6), st.integers(0, 10**6),
    st.one_of(st.just(INF), st.integers(0, 10**9)), st.integers(0, 10**5), st.integers(0, 10**6),
    st.integers(0, 10**6), st.integers(0, 10**6))


@given(st.lists(record_strategy, max_size=20))
def test_csv_round_trip(tmp_path_factory, records):
    path = tmp_path_factory.mktemp("csv") / "r.csv"
    write_records(path, records)
    assert read_records(path) == records
