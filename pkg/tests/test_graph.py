import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, cycle_graph, path_graph, star_graph
from forkwatch.graph import (
    GraphError,
    GraphSpec,
    NetworkGraph,
    contract_pool,
    from_json,
    gen_exponential,
    gen_regular,
    gen_regular_clustered,
    generate,
    to_json,
    validate,
)


def test_regular_small_cases_are_unique():
    g = gen_regular(4, 2, seed=7)
    assert validate(g) == []
    assert nx.is_isomorphic(nx.Graph(g.edges()), nx.cycle_graph(4))
    tri = gen_regular(3, 2, seed=7)
    assert sorted(tri.edges()) == [(0, 1), (0, 2), (1, 2)]


def test_regular_1000_4():
    g = gen_regular(1000, 4, seed=1)
    assert validate(g) == []
    assert set(g.degrees) == {4}
    assert g.edge_count == 2000


@pytest.mark.parametrize("n,d", [(5, 3), (4, 4), (3, 0), (1, 1)])
def test_regular_rejects_infeasible(n, d):
    with pytest.raises(GraphError):
        gen_regular(n, d, seed=0)


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(4, 40),
    d=st.integers(2, 6),
    seed=st.integers(0, 2**64 - 1),
)
def test_regular_invariants(n, d, seed):
    if d >= n or (n * d) % 2:
        return
    g = gen_regular(n, d, seed)
    assert validate(g) == []
    assert set(g.degrees) == {d}
    assert gen_regular(n, d, seed) == g


def test_clustered():
    base = gen_regular(10, 2, seed=3)
    assert gen_regular_clustered(10, 2, 0, seed=3) == base
    g = gen_regular_clustered(10, 2, 30, seed=3)
    assert {(0, 1), (0, 2), (1, 2)} <= set(g.edges())
    assert set(base.edges()) <= set(g.edges())
    big = gen_regular_clustered(1000, 4, 10, seed=1)
    assert validate(big) == []
    clique = set(range(100))
    for u in clique:
        assert clique - {u} <= set(big.adjacency[u])


def test_exponential_mean_degree():
    g = gen_exponential(200, 6, seed=5)
    assert validate(g) == []
    assert 5.1 <= sum(g.degrees) / g.n <= 6.9
    big = gen_exponential(1000, 4, seed=1)
    assert validate(big) == []
    assert abs(sum(big.degrees) / 1000 - 4) <= 0.6
    assert max(big.degrees) >= 12


@pytest.mark.parametrize("seed", range(10))
def test_exponential_tiny_graph_repaired(seed):
    g = gen_exponential(3, 2, seed)
    assert validate(g) == []
    assert g.edge_count in (2, 3)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 80), d=st.sampled_from([2, 3, 4, 6]), seed=st.integers(0, 2**32))
def test_exponential_always_connected(n, d, seed):
    if d >= n:
        return
    g = gen_exponential(n, d, seed)
    assert validate(g) == []
    assert gen_exponential(n, d, seed) == g


def test_validate_reports_each_violation():
    assert validate(complete_graph(3)) == []
    two = NetworkGraph.from_edges(4, [(0, 1), (2, 3)])
    assert any("disconnected" in p for p in validate(two))
    asym = NetworkGraph(2, ((1,), ()))
    assert any("asymmetric" in p for p in validate(asym))
    loop = NetworkGraph(2, ((0, 1), (0,)))
    assert any("self-loop" in p for p in validate(loop))


def test_contract_examples():
    star = star_graph(4)
    cg, con = contract_pool(star, {0, 1})
    assert cg.n == 4 and sorted(cg.degrees) == [1, 1, 1, 3]
    assert con.pool == 0

    c4 = cycle_graph(4)
    cg, con = contract_pool(c4, {0})
    assert cg == c4

    p4 = path_graph(4)
    cg, con = contract_pool(p4, {1, 2})
    assert cg.n == 3 and sorted(cg.edges()) == [(0, 1), (1, 2)]
    assert con.old_to_new == (0, 1, 1, 2)

    with pytest.raises(GraphError):
        contract_pool(p4, range(4))
    with pytest.raises(GraphError):
        contract_pool(p4, [])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), data=st.data())
def test_contract_preserves_external_links(seed, data):
    g = gen_regular(20, 4, seed)
    members = data.draw(st.sets(st.integers(0, 19), min_size=1, max_size=19))
    cg, con = contract_pool(g, members)
    assert validate(cg) == []
    assert cg.n == g.n - len(members) + 1
    ext = {v for m in members for v in g.adjacency[m]} - set(members)
    assert len(cg.adjacency[con.pool]) == len(ext)
    for u, v in g.edges():
        if u not in members and v not in members:
            a, b = con.old_to_new[u], con.old_to_new[v]
            assert b in cg.adjacency[a]


def test_contract_joins_labels():
    g = NetworkGraph.from_edges(3, [(0, 1), (1, 2)], labels=["a", "b", "c"])
    cg, _ = contract_pool(g, {1, 2})
    assert cg.labels == ("a", "b+c")


def test_json_roundtrip_is_byte_stable():
    spec = GraphSpec("regular", 30, 4, seed=9)
    g = generate(spec)
    text = to_json(g, spec)
    g2, spec2 = from_json(text)
    assert g2 == g and spec2 == spec
    assert to_json(generate(spec), spec) == text


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="regular", n=5, d=3),
        dict(family="regular", n=4, d=4),
        dict(family="bogus", n=4, d=2),
        dict(family="regular_clustered", n=10, d=2, cluster_pct=120),
        dict(family="regular", n=4, d=2, seed=-1),
    ],
)
def test_graph_spec_rejects(kwargs):
    with pytest.raises(GraphError):
        GraphSpec(**kwargs)
