import itertools
import json
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bisq.graph import build_graph, complete_graph, gen_er, path_graph
from bisq.oracle import OracleError, OracleHandle, QueryLedger, bis, bis_via_ee, ee, is_query, is_via_bis
from conftest import small_graphs

K3 = complete_graph(3)
EMPTY4 = build_graph(4, [])
P3 = path_graph(3)


def test_bis_examples():
    h = OracleHandle(build_graph(2, [(0, 1)]))
    assert bis(h, {0}, {1})
    assert not bis(OracleHandle(EMPTY4), {0, 1}, {2, 3})
    h3 = OracleHandle(K3)
    assert bis(h3, {0}, {1, 2})
    assert h3.ledger.snapshot() == {"bis": 1, "is": 0, "ee": 0}


def test_is_examples():
    assert is_query(OracleHandle(K3), {0, 1})
    assert not is_query(OracleHandle(EMPTY4), {0, 1, 2})
    h = OracleHandle(P3)
    assert not is_query(h, {0, 2})
    assert h.ledger.is_count == 1


def test_ee_examples():
    h = OracleHandle(P3)
    assert ee(h, [(0, 1), (0, 2)])
    assert not ee(h, [(0, 2)])
    assert not ee(OracleHandle(EMPTY4), [(0, 1), (2, 3)])
    assert h.ledger.ee_count == 3 - 1


@pytest.mark.parametrize("call", [
    lambda h: h.bis({0}, {0, 1}),
    lambda h: h.bis(set(), {1}),
    lambda h: h.bis({0}, {7}),
    lambda h: h.is_query({0}),
    lambda h: h.ee([]),
    lambda h: h.ee([(1, 1)]),
])
def test_malformed_queries_rejected_without_charge(call):
    h = OracleHandle(K3)
    with pytest.raises(OracleError):
        call(h)
    assert h.ledger.total == 0


def test_bis_via_ee_charges_ee_only():
    h = OracleHandle(K3)
    assert bis_via_ee(h, {0}, {1, 2})
    assert h.ledger.snapshot() == {"bis": 0, "is": 0, "ee": 1}
    assert not bis_via_ee(OracleHandle(EMPTY4), {0}, {1})


def test_ee_route_sends_bis_calls_to_ee():
    h = OracleHandle(gen_er(10, 0.5, 1), route="ee")
    h.bis({0}, {1, 2})
    h.bis_pairs(np.array([0, 1]), np.array([2, 3]))
    h.grid(np.arange(10)).query([0], [5], [5], [10])
    assert h.ledger.snapshot() == {"bis": 0, "is": 0, "ee": 4}


@pytest.mark.parametrize("seed", range(4))
def test_bis_equals_ee_exhaustively(seed):
    g = gen_er(7, 0.4, seed)
    h = OracleHandle(g)
    for side in itertools.product(range(3), repeat=g.n):
        a = [v for v in range(g.n) if side[v] == 1]
        b = [v for v in range(g.n) if side[v] == 2]
        if a and b:
            pairs = [(x, y) for x in a for y in b]
            assert h.bis(a, b) == h.ee(pairs)


def test_is_via_bis_examples():
    assert not is_via_bis(OracleHandle(EMPTY4), {0, 1, 2, 3}, rounds=5)
    for seed in range(20):
        assert is_via_bis(OracleHandle(build_graph(2, [(0, 1)])), {0, 1}, rounds=1, seed=seed)
    # any proper split of a triangle separates some edge
    assert all(is_via_bis(OracleHandle(K3), {0, 1, 2}, rounds=30, seed=s) for s in range(200))


def test_is_via_bis_single_round_miss_rate():
    # one edge inside a 10-vertex set: 512 of the 1022 proper splits separate it
    g = build_graph(10, [(3, 7)])
    hits = sum(is_via_bis(OracleHandle(g), range(10), rounds=1, seed=s) for s in range(2000))
    p = 512 / 1022
    assert abs(hits / 2000 - p) <= 4 * np.sqrt(p * (1 - p) / 2000)


def test_is_via_bis_defaults_and_errors():
    h = OracleHandle(gen_er(16, 0.3, 2))
    is_via_bis(h, range(16), seed=1)
    assert h.ledger.bis_count <= 12
    with pytest.raises(ValueError):
        is_via_bis(h, {0, 1}, rounds=0)
    with pytest.raises(OracleError):
        is_via_bis(h, {0})


@given(small_graphs(min_n=2), st.integers(0, 2**32), st.data())
def test_is_via_bis_is_one_sided(g, seed, data):
    u = data.draw(st.sets(st.integers(0, g.n - 1), min_size=2))
    h = OracleHandle(g)
    if is_via_bis(h, u, rounds=3, seed=seed):
        assert h.is_query(u)


@given(small_graphs(min_n=2), st.data())
def test_answers_are_pure_and_counted(g, data):
    h = OracleHandle(g)
    u = data.draw(st.sets(st.integers(0, g.n - 1), min_size=1, max_size=g.n - 1))
    rest = sorted(set(range(g.n)) - u)
    w = data.draw(st.sets(st.sampled_from(rest), min_size=1))
    first = h.bis(u, w)
    assert h.bis(u, w) == first
    assert h.ledger.bis_count == 2
    assert first == bool(g.dense()[np.ix_(sorted(u), sorted(w))].any())


def test_grid_queries_match_single_bis():
    g = gen_er(12, 0.3, 5)
    h = OracleHandle(g)
    rows, cols = np.arange(0, 6), np.arange(6, 12)
    grid = h.grid(rows, cols)
    r0, r1, c0, c1 = np.array([0, 2, 5]), np.array([3, 6, 6]), np.array([0, 1, 4]), np.array([6, 2, 5])
    got = grid.query(r0, r1, c0, c1)
    assert h.ledger.bis_count == 3
    for k in range(3):
        assert got[k] == h.bis(rows[r0[k]:r1[k]], cols[c0[k]:c1[k]])


def test_symmetric_grid_rejects_overlap():
    h = OracleHandle(gen_er(8, 0.5, 0))
    grid = h.grid(np.arange(8))
    with pytest.raises(OracleError):
        grid.query([0], [4], [3], [6])
    with pytest.raises(OracleError):
        h.grid(np.arange(4), np.arange(3, 6))
    assert h.ledger.total == 0


def test_ledger_json_and_monotone():
    led = QueryLedger()
    led.charge("bis", 3)
    led.charge("ee")
    assert json.loads(led.to_json()) == {"bis": 3, "is": 0, "ee": 1}
    with pytest.raises(ValueError):
        led.charge("bis", -1)


def test_ledger_is_thread_safe():
    h = OracleHandle(K3)

    def work():
        for _ in range(500):
            h.bis({0}, {1})

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert h.ledger.bis_count == 2000


def test_hidden_graph_not_exposed():
    h = OracleHandle(K3)
    assert not any(isinstance(getattr(h, name), type(K3)) for name in dir(h) if not name.startswith("_"))
