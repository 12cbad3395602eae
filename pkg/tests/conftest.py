import itertools

import pytest

from femgraph.storage import Database, Graph


@pytest.fixture
def db(tmp_path):
    database = Database(tmp_path / "db")
    yield database
    database.close()


@pytest.fixture
def make_graph(tmp_path):
    graphs = []
    ids = itertools.count()

    def make(edges, nodes=(), buffer_pages=None, graph_id=None):
        g = Graph.create(tmp_path / f"graph{next(ids)}", edges, graph_id=graph_id,
                         buffer_pages=buffer_pages, nodes=nodes)
        graphs.append(g)
        return g

    yield make
    for g in graphs:
        g.close()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
