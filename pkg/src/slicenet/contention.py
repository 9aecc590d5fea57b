"""Contention graphs over unlicensed-band transmitters.

Vertices are saturated transmitters (operator links or plain Wi-Fi
access points) tagged with a technology label; an edge means the two
endpoints hear each other above the clear-channel threshold and defer
to one another.  The module is pure graph machinery: induced
subgraphs, components, exact maximum-independent-set enumeration, and
an exact canonical labeling for small technology-colored graphs used
to key measured access-probability tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product

LAA_TECH = "laa"
WIFI_TECH = "wifi"
_TECH_CHAR = {LAA_TECH: "L", WIFI_TECH: "W"}

# Exhaustive class-respecting relabeling stays cheap up to this order;
# larger graphs must go through the fallback path instead.
CANONICAL_MAX_VERTICES = 6

MIS_MAX_VERTICES = 20


class GraphTooLargeError(ValueError):
    def __init__(self, size: int, bound: int, what: str):
        super().__init__(f"{what} supports at most {bound} vertices, got {size}")
        self.size = size
        self.bound = bound


@dataclass(frozen=True)
class Vertex:
    id: str
    tech: str
    owner: int | None = None

    def __post_init__(self):
        if self.tech not in _TECH_CHAR:
            raise ValueError(f"vertex {self.id}: unknown technology {self.tech!r}")


@dataclass(frozen=True)
class ContentionGraph:
    """Simple undirected graph; edges are sorted id pairs."""

    vertices: tuple[Vertex, ...]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        ids = [v.id for v in self.vertices]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate vertex ids: {ids}")
        known = set(ids)
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self loop on {a}")
            if a > b:
                raise ValueError(f"edge ({a}, {b}) not in sorted order")
            if a not in known or b not in known:
                raise ValueError(f"edge ({a}, {b}) references unknown vertex")

    @staticmethod
    def build(vertices, edges) -> "ContentionGraph":
        """Normalize loose (a, b) pairs into a validated graph."""
        pairs = frozenset(tuple(sorted((a, b))) for a, b in edges)
        return ContentionGraph(vertices=tuple(vertices), edges=pairs)

    # -- basic access ----------------------------------------------------

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.vertices)

    def vertex(self, vid: str) -> Vertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def has_edge(self, a: str, b: str) -> bool:
        return tuple(sorted((a, b))) in self.edges

    def neighbors(self, vid: str) -> frozenset[str]:
        out = set()
        for a, b in self.edges:
            if a == vid:
                out.add(b)
            elif b == vid:
                out.add(a)
        return frozenset(out)

    def degree(self, vid: str) -> int:
        return len(self.neighbors(vid))

    def induced(self, keep) -> "ContentionGraph":
        """Induced subgraph on ``keep``, preserving vertex order."""
        keep = set(keep)
        return ContentionGraph(
            vertices=tuple(v for v in self.vertices if v.id in keep),
            edges=frozenset(e for e in self.edges if e[0] in keep and e[1] in keep),
        )

    def complement(self) -> "ContentionGraph":
        ids = self.ids
        comp = {
            tuple(sorted((a, b)))
            for i, a in enumerate(ids)
            for b in ids[i + 1 :]
            if not self.has_edge(a, b)
        }
        return ContentionGraph(vertices=self.vertices, edges=frozenset(comp))

    def adjacency_masks(self) -> list[int]:
        """Neighbor bitmasks in vertex order."""
        index = {v.id: i for i, v in enumerate(self.vertices)}
        masks = [0] * len(self.vertices)
        for a, b in self.edges:
            ia, ib = index[a], index[b]
            masks[ia] |= 1 << ib
            masks[ib] |= 1 << ia
        return masks

    def components(self) -> list["ContentionGraph"]:
        """Connected components, ordered by first vertex appearance."""
        masks = self.adjacency_masks()
        n = len(self.vertices)
        seen = 0
        out = []
        for start in range(n):
            if seen >> start & 1:
                continue
            frontier = 1 << start
            comp = 0
            while frontier:
                comp |= frontier
                nxt = 0
                f = frontier
                while f:
                    low = f & -f
                    nxt |= masks[low.bit_length() - 1]
                    f ^= low
                frontier = nxt & ~comp
            seen |= comp
            out.append(self.induced(self.vertices[i].id for i in range(n) if comp >> i & 1))
        return out


# -- maximum independent sets ---------------------------------------------


def _independence_number(masks: list[int], cand: int) -> int:
    if cand == 0:
        return 0
    best = 0

    def grow(sub: int, size: int) -> None:
        nonlocal best
        if sub == 0:
            best = max(best, size)
            return
        if size + sub.bit_count() <= best:
            return
        low = sub & -sub
        v = low.bit_length() - 1
        grow(sub & ~(masks[v] | low), size + 1)
        grow(sub ^ low, size)

    grow(cand, 0)
    return best


def independence_number(graph: ContentionGraph) -> int:
    n = len(graph.vertices)
    if n > MIS_MAX_VERTICES:
        raise GraphTooLargeError(n, MIS_MAX_VERTICES, "independence number")
    return _independence_number(graph.adjacency_masks(), (1 << n) - 1)


def clique_number(graph: ContentionGraph) -> int:
    """Largest mutually-sensing group; independence number of the complement."""
    return independence_number(graph.complement())


def maximum_independent_sets(graph: ContentionGraph) -> list[tuple[str, ...]]:
    """Every independent set of maximum cardinality.

    Each set is a tuple of vertex ids in sorted order and the list is
    sorted lexicographically.  Exact branch-and-bound; graphs above
    ``MIS_MAX_VERTICES`` vertices are refused.
    """
    n = len(graph.vertices)
    if n > MIS_MAX_VERTICES:
        raise GraphTooLargeError(n, MIS_MAX_VERTICES, "independent-set enumeration")
    if n == 0:
        return [()]
    masks = graph.adjacency_masks()
    full = (1 << n) - 1
    alpha = _independence_number(masks, full)
    found: list[int] = []

    def collect(sub: int, chosen: int, size: int) -> None:
        if size + sub.bit_count() < alpha:
            return
        if size == alpha:
            found.append(chosen)
            return
        low = sub & -sub
        v = low.bit_length() - 1
        collect(sub & ~(masks[v] | low), chosen | low, size + 1)
        collect(sub ^ low, chosen, size)

    collect(full, 0, 0)
    ids = graph.ids
    sets = [
        tuple(sorted(ids[i] for i in range(n) if mask >> i & 1)) for mask in found
    ]
    sets.sort()
    return sets


# -- canonical labeling of colored graphs ---------------------------------


@dataclass(frozen=True)
class CanonicalForm:
    """Canonical description of a technology-colored graph.

    ``key`` is the lookup string; ``to_canon[i]`` gives the canonical
    position of vertex ``i`` (in graph vertex order); ``orbits[p]`` is
    the automorphism-orbit label of canonical position ``p`` (labels
    are the smallest position in the orbit).
    """

    key: str
    size: int
    to_canon: tuple[int, ...]
    orbits: tuple[int, ...]
    colors: tuple[str, ...]
    edge_bits: int


def _pair_bit(i: int, j: int, n: int) -> int:
    # pairs (i, j), i < j, in lexicographic order
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def canonical_form(graph: ContentionGraph) -> CanonicalForm:
    """Exact canonical form via minimum adjacency bitmap.

    Vertices are first sorted into (technology, degree) classes; the
    bitmap is minimized over all class-respecting relabelings, which
    is invariant under color-preserving isomorphism and exact at
    small orders.
    """
    n = len(graph.vertices)
    if n > CANONICAL_MAX_VERTICES:
        raise GraphTooLargeError(n, CANONICAL_MAX_VERTICES, "canonical labeling")
    techs = [_TECH_CHAR[v.tech] for v in graph.vertices]
    degs = [graph.degree(v.id) for v in graph.vertices]
    order = sorted(range(n), key=lambda i: (techs[i], degs[i]))

    blocks: list[list[int]] = []
    for i in order:
        if blocks and (techs[blocks[-1][0]], degs[blocks[-1][0]]) == (techs[i], degs[i]):
            blocks[-1].append(i)
        else:
            blocks.append([i])

    index = {v.id: i for i, v in enumerate(graph.vertices)}
    adj = [[False] * n for _ in range(n)]
    for a, b in graph.edges:
        ia, ib = index[a], index[b]
        adj[ia][ib] = adj[ib][ia] = True

    best_bits: int | None = None
    best_arrangements: list[tuple[int, ...]] = []
    for parts in product(*(permutations(block) for block in blocks)):
        arrangement = tuple(i for part in parts for i in part)
        bits = 0
        for p in range(n):
            row = adj[arrangement[p]]
            for q in range(p + 1, n):
                if row[arrangement[q]]:
                    bits |= 1 << _pair_bit(p, q, n)
        if best_bits is None or bits < best_bits:
            best_bits = bits
            best_arrangements = [arrangement]
        elif bits == best_bits:
            best_arrangements.append(arrangement)

    base = best_arrangements[0]
    colors = tuple(techs[i] for i in base)
    degseq = "".join(str(degs[i]) for i in base)
    key = f"{n};{''.join(colors)};{degseq};{best_bits:x}"

    to_canon = [0] * n
    for pos, i in enumerate(base):
        to_canon[i] = pos

    # positions related by any two minimizing relabelings share an orbit
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for arr in best_arrangements[1:]:
        for pos in range(n):
            a, b = find(pos), find(to_canon[arr[pos]])
            if a != b:
                parent[max(a, b)] = min(a, b)
    orbits = tuple(find(p) for p in range(n))

    return CanonicalForm(
        key=key,
        size=n,
        to_canon=tuple(to_canon),
        orbits=orbits,
        colors=colors,
        edge_bits=best_bits or 0,
    )


def graph_from_canonical(size: int, colors, edge_bits: int) -> ContentionGraph:
    """Rebuild a concrete graph from canonical data; vertices are v0..v{n-1}."""
    rev = {"L": LAA_TECH, "W": WIFI_TECH}
    verts = [Vertex(id=f"v{i}", tech=rev[c]) for i, c in enumerate(colors)]
    edges = set()
    for i in range(size):
        for j in range(i + 1, size):
            if edge_bits >> _pair_bit(i, j, size) & 1:
                edges.add((f"v{i}", f"v{j}"))
    return ContentionGraph.build(verts, edges)


def enumerate_connected_colored_graphs(max_size: int) -> list[CanonicalForm]:
    """All connected graphs up to ``max_size`` vertices with every
    technology coloring, one canonical representative each.

    Uses the small-graph atlas for the uncolored skeletons and this
    module's canonical labeling to deduplicate colorings.  Sorted by
    (size, key) so table builds enumerate deterministically.
    """
    if max_size > CANONICAL_MAX_VERTICES:
        raise GraphTooLargeError(max_size, CANONICAL_MAX_VERTICES, "graph enumeration")
    import networkx as nx
    from networkx.generators.atlas import graph_atlas_g

    seen: dict[str, CanonicalForm] = {}
    for g in graph_atlas_g():
        n = g.number_of_nodes()
        if n == 0 or n > max_size:
            continue
        if not nx.is_connected(g):
            continue
        edges = [tuple(sorted((f"v{a}", f"v{b}"))) for a, b in g.edges()]
        for coloring in product((LAA_TECH, WIFI_TECH), repeat=n):
            verts = [Vertex(id=f"v{i}", tech=coloring[i]) for i in range(n)]
            form = canonical_form(ContentionGraph.build(verts, edges))
            seen.setdefault(form.key, form)
    return sorted(seen.values(), key=lambda f: (f.size, f.key))
