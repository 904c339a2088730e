"""Undirected graphs and the structural machinery used by the IPS engine.

Covers maximal clique enumeration, chordality testing, min-fill
triangulation, anchored perfect sequences of cliques, and the
decomposition of a graph into maximal prime subgraphs by clique
minimal separators.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence


class Graph:
    """Simple undirected graph with sortable vertex labels.

    Vertices are kept in ascending order so that every traversal is
    deterministic.  Instances are immutable.
    """

    __slots__ = ("_vertices", "_adj")

    def __init__(self, vertices: Iterable[Hashable], edges: Iterable[Sequence] = ()):
        verts = sorted(set(vertices))
        adj: dict = {v: set() for v in verts}
        for e in edges:
            u, v = tuple(e)
            if u == v:
                raise ValueError(f"self-loop on vertex {u!r}")
            if u not in adj or v not in adj:
                raise ValueError(f"edge {(u, v)!r} references an unknown vertex")
            adj[u].add(v)
            adj[v].add(u)
        self._vertices = tuple(verts)
        self._adj = {v: frozenset(n) for v, n in adj.items()}

    @property
    def vertices(self) -> tuple:
        return self._vertices

    @property
    def edges(self) -> list[tuple]:
        """Edges as ``(u, v)`` pairs with ``u < v``, sorted lexicographically."""
        return sorted((u, v) for u in self._vertices for v in self._adj[u] if u < v)

    def __len__(self) -> int:
        return len(self._vertices)

    def __contains__(self, v) -> bool:
        return v in self._adj

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self._adj == other._adj

    def __hash__(self) -> int:
        return hash((self._vertices, tuple(self.edges)))

    def __repr__(self) -> str:
        return f"Graph(vertices={list(self._vertices)}, edges={self.edges})"

    def neighbors(self, v) -> frozenset:
        return self._adj[v]

    def degree(self, v) -> int:
        return len(self._adj[v])

    def has_edge(self, u, v) -> bool:
        return v in self._adj[u]

    def is_clique(self, vs: Iterable) -> bool:
        vs = list(vs)
        return all(self.has_edge(u, v) for u, v in itertools.combinations(vs, 2))

    def subgraph(self, vs: Iterable) -> "Graph":
        keep = set(vs)
        missing = keep - set(self._vertices)
        if missing:
            raise ValueError(f"unknown vertices {sorted(missing)}")
        return Graph(keep, ((u, v) for u, v in self.edges if u in keep and v in keep))

    def with_edges(self, extra: Iterable[Sequence]) -> "Graph":
        return Graph(self._vertices, itertools.chain(self.edges, extra))

    def components(self, within: Iterable | None = None) -> list[tuple]:
        """Connected components (each sorted), optionally of an induced subgraph."""
        pool = set(self._vertices if within is None else within)
        comps = []
        for start in sorted(pool):
            if start not in pool:
                continue
            pool.discard(start)
            comp, stack = [start], [start]
            while stack:
                x = stack.pop()
                for y in self._adj[x]:
                    if y in pool:
                        pool.discard(y)
                        comp.append(y)
                        stack.append(y)
            comps.append(tuple(sorted(comp)))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1


def complete_graph(vertices: Iterable) -> Graph:
    vs = sorted(set(vertices))
    return Graph(vs, itertools.combinations(vs, 2))


def cycle_graph(n: int) -> Graph:
    """The cycle 1-2-...-n-1."""
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return Graph(range(1, n + 1), [(i, i % n + 1) for i in range(1, n + 1)])


# ---------------------------------------------------------------------------
# cliques and simplicial vertices
# ---------------------------------------------------------------------------

def maximal_cliques(g: Graph) -> list[tuple]:
    """All maximal cliques, each sorted, listed in lexicographic order.

    Bron-Kerbosch with Tomita pivoting.  Isolated vertices are singleton
    cliques; the empty graph has no cliques.
    """
    found: list[tuple] = []

    def expand(r: list, p: set, x: set) -> None:
        if not p and not x:
            found.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: (len(p & g.neighbors(u)), u))
        for v in sorted(p - g.neighbors(pivot)):
            nv = g.neighbors(v)
            expand(r + [v], p & nv, x & nv)
            p.discard(v)
            x.add(v)

    if len(g):
        expand([], set(g.vertices), set())
    return sorted(found)


def simplicial_vertices(g: Graph) -> list:
    """Vertices whose neighbourhood is complete, ascending."""
    return [v for v in g.vertices if g.is_clique(g.neighbors(v))]


# ---------------------------------------------------------------------------
# chordality
# ---------------------------------------------------------------------------

def mcs_order(g: Graph, first: Sequence = ()) -> list:
    """Maximum cardinality search visit order.

    Vertices in ``first`` are visited before anything else, in the order
    given; this is a legal MCS run whenever ``first`` is a clique.  Ties
    are broken by ascending label.
    """
    weight = {v: 0 for v in g.vertices}
    visited: list = []
    seen: set = set()

    def visit(v):
        visited.append(v)
        seen.add(v)
        del weight[v]
        for u in g.neighbors(v):
            if u in weight:
                weight[u] += 1

    for v in first:
        visit(v)
    # bucket queue keyed by weight; entries may be stale
    heap = [(-w, v) for v, w in weight.items()]
    heapq.heapify(heap)
    while heap:
        negw, v = heapq.heappop(heap)
        if v in seen or -negw != weight[v]:
            if v not in seen:
                heapq.heappush(heap, (-weight[v], v))
            continue
        visit(v)
        for u in g.neighbors(v):
            if u in weight:
                heapq.heappush(heap, (-weight[u], u))
    return visited


def elimination_fill(g: Graph, order: Sequence) -> set[tuple]:
    """Fill edges produced by eliminating vertices of ``g`` in ``order``."""
    pos = {v: i for i, v in enumerate(order)}
    if len(pos) != len(g) or set(pos) != set(g.vertices):
        raise ValueError("order must be a permutation of the vertices")
    adj = {v: set(g.neighbors(v)) for v in g.vertices}
    fill = set()
    for v in order:
        later = [u for u in adj[v] if pos[u] > pos[v]]
        for a, b in itertools.combinations(later, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                fill.add((min(a, b), max(a, b)))
    return fill


def is_perfect_elimination_order(g: Graph, order: Sequence) -> bool:
    pos = {v: i for i, v in enumerate(order)}
    if set(pos) != set(g.vertices) or len(order) != len(g):
        return False
    for v in order:
        later = [u for u in g.neighbors(v) if pos[u] > pos[v]]
        if not g.is_clique(later):
            return False
    return True


def is_chordal(g: Graph) -> tuple[bool, list | None]:
    """Chordality test via maximum cardinality search.

    Returns ``(True, peo)`` with a perfect elimination order when the graph
    is chordal and ``(False, None)`` otherwise.
    """
    peo = mcs_order(g)[::-1]
    if is_perfect_elimination_order(g, peo):
        return True, peo
    return False, None


# ---------------------------------------------------------------------------
# triangulation and perfect sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChordalStructure:
    """A chordal extension together with one perfect sequence of its cliques.

    ``separators[i]`` belongs to ``perfect_sequence[i + 1]``.  Residuals
    follow the partitioning convention ``R_1 = C_1``, so they cover every
    vertex exactly once and ``peo`` is their concatenation from the last
    clique to the first.
    """

    source: Graph
    extension: Graph
    fill_edges: frozenset
    perfect_sequence: tuple
    separators: tuple
    residuals: tuple
    peo: tuple
    anchor: tuple = ()

    @property
    def cliques(self) -> list[tuple]:
        return sorted(self.perfect_sequence)


def min_fill_order(g: Graph) -> list:
    """Greedy minimum-fill elimination order, ties broken by ascending label."""
    adj = {v: set(g.neighbors(v)) for v in g.vertices}

    def fill_count(v) -> int:
        nb = list(adj[v])
        return sum(1 for a, b in itertools.combinations(nb, 2) if b not in adj[a])

    score = {v: fill_count(v) for v in adj}
    heap = [(s, v) for v, s in score.items()]
    heapq.heapify(heap)
    order = []
    while heap:
        s, v = heapq.heappop(heap)
        if v not in adj or score[v] != s:
            continue
        order.append(v)
        nb = adj.pop(v)
        del score[v]
        for a, b in itertools.combinations(nb, 2):
            adj[a].add(b)
            adj[b].add(a)
        for u in nb:
            adj[u].discard(v)
        touched = set(nb)
        for u in nb:
            touched |= adj[u]
        for u in touched:
            new = fill_count(u)
            if new != score[u]:
                score[u] = new
                heapq.heappush(heap, (new, u))
    return order


def _cliques_from_peo(g: Graph, peo: Sequence) -> list[tuple]:
    pos = {v: i for i, v in enumerate(peo)}
    cand = {v: frozenset([v, *(u for u in g.neighbors(v) if pos[u] > pos[v])]) for v in peo}
    # cand[v] can only sit inside the candidate of an earlier neighbour
    maximal = {
        cand[v] for v in peo
        if not any(pos[u] < pos[v] and cand[v] <= cand[u] for u in g.neighbors(v))
    }
    return sorted(tuple(sorted(c)) for c in maximal)


def _sequence_structure(source: Graph, ext: Graph, fill, anchor: tuple,
                        cliques: Sequence | None = None) -> ChordalStructure:
    if cliques is None:
        cliques = _cliques_from_peo(ext, is_chordal(ext)[1])
    if anchor:
        hosts = [c for c in cliques if set(anchor) <= set(c)]
        if not hosts:
            raise ValueError(f"{anchor} is not a clique of the chordal extension")
        host = hosts[0]
        first = sorted(anchor) + [v for v in host if v not in anchor]
    else:
        first = []
    visit = mcs_order(ext, first)
    rank = {v: i for i, v in enumerate(visit)}
    seq = sorted(cliques, key=lambda c: max(rank[v] for v in c))
    seps, residuals, covered = [], [], set()
    for i, c in enumerate(seq):
        if i:
            s = tuple(v for v in c if v in covered)
            seps.append(s)
            residuals.append(tuple(sorted((v for v in c if v not in covered),
                                          key=lambda v: -rank[v])))
        else:
            # C_1 minus the anchor is eliminated first, the anchor last
            head = sorted((v for v in c if v not in anchor), key=lambda v: -rank[v])
            tail = sorted((v for v in c if v in anchor), key=lambda v: -rank[v])
            residuals.append(tuple(head + tail))
        covered.update(c)
    peo = tuple(v for r in reversed(residuals) for v in r)
    return ChordalStructure(
        source=source,
        extension=ext,
        fill_edges=frozenset(fill),
        perfect_sequence=tuple(seq),
        separators=tuple(seps),
        residuals=tuple(residuals),
        peo=peo,
        anchor=tuple(sorted(anchor)),
    )


def triangulate(g: Graph) -> ChordalStructure:
    """Chordal extension by min-fill elimination, with a perfect sequence.

    A graph that is already chordal is returned unchanged (no fill).
    """
    chordal, _ = is_chordal(g)
    if chordal:
        fill: set = set()
        ext = g
    else:
        fill = elimination_fill(g, min_fill_order(g))
        ext = g.with_edges(fill)
    return _sequence_structure(g, ext, fill, ())


def perfect_sequence_from(cs: ChordalStructure, anchor: Iterable) -> ChordalStructure:
    """Re-derive the perfect sequence so that its first clique contains ``anchor``.

    The returned elimination order removes the residual of the last clique
    first and the anchor's vertices last.
    """
    anchor = tuple(sorted(set(anchor)))
    if not anchor or not all(v in cs.extension for v in anchor):
        raise ValueError(f"{anchor} is not a vertex set of the extension")
    if not cs.extension.is_clique(anchor):
        raise ValueError(f"{anchor} is not a clique of the chordal extension")
    return _sequence_structure(cs.source, cs.extension, cs.fill_edges, anchor, cs.cliques)


def has_running_intersection(sets: Sequence[Iterable]) -> bool:
    """Each set's overlap with its predecessors lies inside one predecessor."""
    sets = [frozenset(s) for s in sets]
    union: set = set()
    for i, s in enumerate(sets):
        if i:
            sep = s & union
            if not any(sep <= sets[j] for j in range(i)):
                return False
        union |= s
    return True


# ---------------------------------------------------------------------------
# clique minimal separator decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimeDecomposition:
    """Vertex sets of the maximal prime subgraphs in a D-order.

    ``separators[i]`` is the intersection of ``parts[i + 1]`` with the union
    of the earlier parts; repeated separator sets are kept, one per
    occurrence.
    """

    parts: tuple
    separators: tuple


def minimal_triangulation(g: Graph) -> Graph:
    """Minimal triangulation by MCS-M (Berry, Blair, Heggernes, Peyton)."""
    weight = {v: 0 for v in g.vertices}
    unnumbered = set(g.vertices)
    fill = []
    while unnumbered:
        v = max(sorted(unnumbered), key=weight.__getitem__)
        unnumbered.discard(v)
        # minimax search: best[u] = smallest possible maximum weight of the
        # interior vertices on a path v ... u through unnumbered vertices
        best = {}
        heap = [(-1, u) for u in g.neighbors(v) if u in unnumbered]
        for _, u in heap:
            best[u] = -1
        heapq.heapify(heap)
        while heap:
            d, x = heapq.heappop(heap)
            if d > best[x]:
                continue
            through = max(d, weight[x])
            for y in g.neighbors(x):
                if y in unnumbered and y != v and through < best.get(y, float("inf")):
                    best[y] = through
                    heapq.heappush(heap, (through, y))
        reached = [u for u, d in best.items() if d < weight[u]]
        for u in reached:
            if not g.has_edge(u, v):
                fill.append((u, v))
        for u in reached:
            weight[u] += 1
    return g.with_edges(fill) if fill else g


def clique_minimal_separators(g: Graph) -> list[tuple]:
    """Minimal separators of ``g`` that are cliques, sorted."""
    h = minimal_triangulation(g)
    cs = _sequence_structure(g, h, (), ())
    seps = {tuple(sorted(s)) for s in cs.separators if s and g.is_clique(s)}
    return sorted(seps)


def mp_decompose(g: Graph) -> PrimeDecomposition:
    """Decompose a connected graph into its maximal prime subgraphs.

    Raises
    ------
    ValueError
        If ``g`` is not connected.
    """
    if not g.is_connected():
        raise ValueError("mp_decompose needs a connected graph; split components first")
    if not len(g):
        return PrimeDecomposition((), ())
    candidates = [frozenset(s) for s in clique_minimal_separators(g)]
    pieces = {frozenset(g.vertices)}
    changed = True
    while changed:
        changed = False
        for s in candidates:
            for p in list(pieces):
                if not s < p:
                    continue
                comps = g.components(p - s)
                if len(comps) < 2:
                    continue
                pieces.discard(p)
                for comp in comps:
                    comp = frozenset(comp)
                    attach = {u for u in s if g.neighbors(u) & comp}
                    pieces.add(comp | attach)
                changed = True
    pieces = list(pieces)
    pieces = [p for p in pieces if not any(p < q for q in pieces)]
    return _d_order(pieces)


def _d_order(pieces: list[frozenset]) -> PrimeDecomposition:
    """Order sets along a maximum-weight spanning tree of their intersection graph."""
    pieces = sorted(pieces, key=lambda p: sorted(p))
    n = len(pieces)
    pairs = sorted(
        ((-len(pieces[i] & pieces[j]), i, j) for i in range(n) for j in range(i + 1, n)
         if pieces[i] & pieces[j]),
    )
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tree: dict[int, list[int]] = {i: [] for i in range(n)}
    for _, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            tree[i].append(j)
            tree[j].append(i)
    order, seen, queue = [], {0}, [0]
    while queue:
        i = queue.pop(0)
        order.append(i)
        for j in sorted(tree[i]):
            if j not in seen:
                seen.add(j)
                queue.append(j)
    parts = [tuple(sorted(pieces[i])) for i in order]
    seps, union = [], set()
    for k, p in enumerate(parts):
        if k:
            seps.append(tuple(v for v in p if v in union))
        union.update(p)
    if not has_running_intersection(parts):
        raise RuntimeError("failed to find a D-ordering of the prime parts")
    return PrimeDecomposition(tuple(parts), tuple(seps))


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def parse_graph(text: str) -> Graph:
    """Parse the ``p N`` / ``e u v`` format with 1-based integer labels."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "p" and len(tok) == 2 and n is None:
            n = int(tok[1])
            if n < 0:
                raise ValueError(f"line {lineno}: negative vertex count")
        elif tok[0] == "e" and len(tok) == 3:
            if n is None:
                raise ValueError(f"line {lineno}: edge before 'p' header")
            u, v = int(tok[1]), int(tok[2])
            if not (1 <= u <= n and 1 <= v <= n):
                raise ValueError(f"line {lineno}: vertex out of range 1..{n}")
            edges.append((u, v))
        else:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
    if n is None:
        raise ValueError("missing 'p <n>' header")
    return Graph(range(1, n + 1), edges)


def format_graph(g: Graph) -> str:
    if list(g.vertices) != list(range(1, len(g) + 1)):
        raise ValueError("graph file format needs vertices labelled 1..n")
    lines = [f"p {len(g)}"] + [f"e {u} {v}" for u, v in g.edges]
    return "\n".join(lines) + "\n"


def read_graph(path) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())


def write_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_graph(g))
