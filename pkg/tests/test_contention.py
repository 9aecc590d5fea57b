"""Exact graph machinery: independent sets, canonical labels, enumeration."""

import pytest
from hypothesis import given, strategies as st

from slicenet.contention import (
    CANONICAL_MAX_VERTICES,
    ContentionGraph,
    GraphTooLargeError,
    Vertex,
    canonical_form,
    clique_number,
    enumerate_connected_colored_graphs,
    graph_from_canonical,
    independence_number,
    maximum_independent_sets,
)


def _random_graph(rng, n, p, techs=("laa", "wifi")):
    vertices = [Vertex(id=f"v{i}", tech=techs[rng.integers(0, len(techs))]) for i in range(n)]
    edges = [
        (f"v{i}", f"v{j}")
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return ContentionGraph.build(vertices, edges)


def _brute_force_alpha(graph):
    """Largest independent set by scanning all vertex subsets."""
    ids = graph.ids
    n = len(ids)
    index = {vid: i for i, vid in enumerate(ids)}
    adj = [0] * n
    for a, b in graph.edges:
        adj[index[a]] |= 1 << index[b]
        adj[index[b]] |= 1 << index[a]
    best = 0
    for subset in range(1 << n):
        if subset.bit_count() <= best:
            continue
        if all(adj[i] & subset == 0 for i in range(n) if subset >> i & 1):
            best = subset.bit_count()
    return best


def test_independence_number_matches_brute_force():
    import numpy as np

    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(1, 11))
        g = _random_graph(rng, n, float(rng.uniform(0.1, 0.9)))
        assert independence_number(g) == _brute_force_alpha(g)


def test_maximum_independent_sets_path():
    g = ContentionGraph.build(
        [Vertex("a", "laa", 1), Vertex("b", "wifi"), Vertex("c", "laa", 2)],
        [("a", "b"), ("b", "c")],
    )
    assert maximum_independent_sets(g) == [("a", "c")]
    assert independence_number(g) == 2
    assert clique_number(g) == 2


def test_maximum_independent_sets_empty_graph():
    g = ContentionGraph.build([Vertex("a", "laa", 1), Vertex("b", "laa", 2)], [])
    assert maximum_independent_sets(g) == [("a", "b")]


def test_canonical_invariant_under_relabeling():
    import numpy as np

    rng = np.random.default_rng(12)
    for _ in range(30):
        n = int(rng.integers(2, 7))
        g = _random_graph(rng, n, 0.5)
        base = canonical_form(g)
        perm = list(rng.permutation(n))
        mapping = {f"v{i}": f"r{perm[i]}" for i in range(n)}
        relabeled = ContentionGraph.build(
            [Vertex(mapping[v.id], v.tech, v.owner) for v in g.vertices],
            [(mapping[a], mapping[b]) for a, b in g.edges],
        )
        assert canonical_form(relabeled).key == base.key


def test_canonical_distinguishes_tech():
    pair = lambda t1, t2: ContentionGraph.build(
        [Vertex("a", t1, 1 if t1 == "laa" else None),
         Vertex("b", t2, 2 if t2 == "laa" else None)],
        [("a", "b")],
    )
    assert canonical_form(pair("laa", "laa")).key != canonical_form(pair("laa", "wifi")).key
    assert canonical_form(pair("laa", "wifi")).key == canonical_form(pair("wifi", "laa")).key


def test_enumeration_counts():
    # connected, vertex-colored with two colors, up to isomorphism
    for size, expected in ((1, 2), (2, 5), (3, 15), (4, 65), (5, 419)):
        assert len(enumerate_connected_colored_graphs(size)) == expected


def test_enumeration_keys_unique_and_round_trip():
    forms = enumerate_connected_colored_graphs(4)
    keys = [f.key for f in forms]
    assert len(keys) == len(set(keys))
    for form in forms:
        g = graph_from_canonical(form.size, form.colors, form.edge_bits)
        assert canonical_form(g).key == form.key


def test_size_limits():
    big = ContentionGraph.build(
        [Vertex(f"v{i}", "laa", 1) for i in range(CANONICAL_MAX_VERTICES + 1)],
        [],
    )
    with pytest.raises(GraphTooLargeError):
        canonical_form(big)
    with pytest.raises(GraphTooLargeError):
        enumerate_connected_colored_graphs(CANONICAL_MAX_VERTICES + 1)


def test_graph_validation():
    with pytest.raises(ValueError, match="duplicate"):
        ContentionGraph.build([Vertex("a", "laa", 1), Vertex("a", "laa", 1)], [])
    with pytest.raises(ValueError, match="self loop"):
        ContentionGraph.build([Vertex("a", "laa", 1)], [("a", "a")])
    with pytest.raises(ValueError, match="unknown vertex"):
        ContentionGraph.build([Vertex("a", "laa", 1)], [("a", "b")])


@given(st.integers(min_value=0, max_value=2 ** 15 - 1))
def test_independence_equals_complement_clique(edge_bits):
    n = 6
    colors = ["L"] * n
    mask = (1 << (n * (n - 1) // 2)) - 1
    g = graph_from_canonical(n, colors, edge_bits)
    complement = graph_from_canonical(n, colors, ~edge_bits & mask)
    assert independence_number(g) == clique_number(complement)


def test_components_partition_vertices():
    import numpy as np

    rng = np.random.default_rng(13)
    g = _random_graph(rng, 9, 0.2)
    comps = g.components()
    seen = sorted(vid for comp in comps for vid in comp.ids)
    assert seen == sorted(g.ids)
    for comp in comps:
        inner = set(comp.ids)
        for a, b in g.edges:
            # an edge never crosses a component boundary
            assert (a in inner) == (b in inner)
