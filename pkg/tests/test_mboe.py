"""Table-driven access estimation: pruning, provenance, counterfactuals."""

import pytest

from slicenet.contention import ContentionGraph, GraphTooLargeError, Vertex
from slicenet.mboe import (
    TableMissError,
    estimate_access,
    prune_to_mis,
    remove_mno,
    subgraph_for_mno,
    value_of_rights,
)
from slicenet.scenario import (
    BandPlan,
    Link,
    Mno,
    Node,
    Scenario,
    ServiceType,
)


def _path(ids, techs=None):
    techs = techs or ["laa"] * len(ids)
    verts = [
        Vertex(ids[i], techs[i], i + 1 if techs[i] == "laa" else None)
        for i in range(len(ids))
    ]
    edges = [(ids[i], ids[i + 1]) for i in range(len(ids) - 1)]
    return ContentionGraph.build(verts, edges)


def _clique(n, tech="laa"):
    ids = [f"c{i}" for i in range(n)]
    verts = [Vertex(i, tech, k + 1) for k, i in enumerate(ids)]
    edges = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]]
    return ContentionGraph.build(verts, edges)


def test_prune_path_keeps_alternating_vertices():
    g = _path(["a", "b", "c"])
    pruned = prune_to_mis(g)
    assert sorted(pruned.ids) == ["a", "c"]
    assert pruned.edges == frozenset()


def test_prune_star_keeps_leaves():
    verts = [Vertex("hub", "wifi")] + [Vertex(f"l{i}", "laa", i) for i in range(1, 5)]
    g = ContentionGraph.build(verts, [("hub", f"l{i}") for i in range(1, 5)])
    pruned = prune_to_mis(g)
    assert sorted(pruned.ids) == ["l1", "l2", "l3", "l4"]


def test_prune_keeps_every_maximum_set():
    # a 4-cycle has two maximum independent sets; both survive
    ids = ["a", "b", "c", "d"]
    g = ContentionGraph.build(
        [Vertex(i, "laa", k + 1) for k, i in enumerate(ids)],
        [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")],
    )
    assert sorted(prune_to_mis(g).ids) == ids


def test_estimate_small_component_reads_table(table3):
    g = _path(["a", "b", "c"], ["laa", "wifi", "laa"])
    est = estimate_access(g, table3)
    assert set(est.access) == {"a", "b", "c"}
    assert all(kind == "table" for kind in est.provenance.values())
    # ends dominate the middle in an alternating pattern
    assert est.access["a"] > est.access["b"]
    assert est.access["c"] > est.access["b"]


def test_estimate_isolated_vertex_near_full_share(table3):
    g = ContentionGraph.build([Vertex("solo", "laa", 1)], [])
    est = estimate_access(g, table3)
    assert est.provenance["solo"] == "table"
    assert est.access["solo"] > 0.95


def test_estimate_prunes_oversized_component(table3):
    g = _path(["a", "b", "c", "d", "e"])
    est = estimate_access(g, table3)
    assert est.provenance["a"] == "table"
    assert est.provenance["c"] == "table"
    assert est.provenance["e"] == "table"
    assert est.provenance["b"] == "pruned"
    assert est.provenance["d"] == "pruned"
    # dominated vertices get squeezed below their dominating neighbors
    assert est.access["b"] < est.access["a"]
    assert est.access["b"] < est.access["c"]


def test_estimate_miss_raises_without_fallback(table3):
    with pytest.raises(TableMissError):
        estimate_access(_clique(4), table3)


def test_estimate_fallback_equal_share(table3):
    est = estimate_access(_clique(4), table3, fallback=True)
    assert all(kind == "fallback" for kind in est.provenance.values())
    for x in est.access.values():
        assert x == pytest.approx(0.25)


def test_estimate_oversized_clique(table3):
    big = _clique(7)
    with pytest.raises(GraphTooLargeError):
        estimate_access(big, table3)
    est = estimate_access(big, table3, fallback=True)
    for x in est.access.values():
        assert x == pytest.approx(1.0 / 7.0)


def test_subgraph_for_mno_keeps_sensed_neighbors():
    g = _path(["a", "b", "c"], ["laa", "wifi", "laa"])
    view = subgraph_for_mno(g, 1)
    assert sorted(view.ids) == ["a", "b"]
    assert view.edges == frozenset({("a", "b")})


def test_remove_mno_never_touches_wifi():
    g = _path(["a", "b", "c"], ["laa", "wifi", "laa"])
    reduced = remove_mno(g, 1)
    assert sorted(reduced.ids) == ["b", "c"]
    reduced = remove_mno(g, {1, 3})
    assert sorted(reduced.ids) == ["b"]


def _contending_pair_scenario():
    services = (ServiceType(id=1, min_throughput_bps=1e6, price_per_bit=1e-6),)
    mnos = (Mno(id=1, licensed_bandwidth_hz=2e7), Mno(id=2, licensed_bandwidth_hz=2e7))
    nodes = (
        Node(id="b1", kind="laa", position_m=(0.0, 0.0), owner=1),
        Node(id="b2", kind="laa", position_m=(12.0, 0.0), owner=2),
    )
    links = (
        Link(id="b1u1", owner=1, node="b1", ue_position_m=(0.0, 30.0)),
        Link(id="b2u1", owner=2, node="b2", ue_position_m=(12.0, 30.0)),
    )
    return Scenario(
        services=services,
        mnos=mnos,
        nodes=nodes,
        links=links,
        band=BandPlan(unlicensed_bandwidth_hz=2e7),
    )


def test_value_of_rights_gain_positive_under_contention(table3):
    sc = _contending_pair_scenario()
    report = value_of_rights(sc, table3, mno_id=1, removed=2)
    assert report.gain > 0.0
    assert report.value_removed > report.value
    assert report.access_removed["b1u1"] > report.access["b1u1"]


def test_value_of_rights_rejects_self_removal(table3):
    sc = _contending_pair_scenario()
    with pytest.raises(ValueError):
        value_of_rights(sc, table3, mno_id=1, removed=1)
