"""Fixture graphs, random model members and brute-force oracles.

The oracles here only use definitions (subset enumeration, full matrix
inversion) and never call into the package's algorithms.
"""
import itertools

import numpy as np

from ggmips.graph import Graph, complete_graph, cycle_graph


def chain_of_cliques(*cliques):
    return Graph(set().union(*map(set, cliques)),
                 [e for c in cliques for e in itertools.combinations(sorted(c), 2)])


# three 4-cliques glued along {3,4} and {5,6}
K4_CHAIN = chain_of_cliques((1, 2, 3, 4), (3, 4, 5, 6), (5, 6, 7, 8))

# same layout with a chordless 4-cycle 3-4-6-5-3 in the middle
K4_CYCLE_K4 = Graph(range(1, 9), [
    *itertools.combinations((1, 2, 3, 4), 2),
    (3, 5), (4, 6), (5, 6),
    *itertools.combinations((5, 6, 7, 8), 2),
])

# five cycle 1-2-4-5-3-1, labelled so that fill {2,3},{3,4} triangulates it
FIVE_CYCLE_ALT = Graph(range(1, 6), [(1, 2), (1, 3), (2, 4), (3, 5), (4, 5)])
FIVE_CYCLE_ALT_FILLED = FIVE_CYCLE_ALT.with_edges([(2, 3), (3, 4)])

# 4-cycles 1-2-3-4-1 and 3-5-6-4-3 sharing the edge {3,4}
FUSED_4_CYCLES = Graph(range(1, 7), [(1, 2), (2, 3), (3, 4), (4, 1), (3, 5), (5, 6), (6, 4)])

TWO_CLIQUE = Graph([1, 2, 3], [(1, 2), (2, 3)])

STAR_TREE = Graph(range(1, 8), [(1, 2), (1, 3), (1, 4), (4, 5), (4, 6), (6, 7)])


def random_connected_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    edges = {(i, i + 1) for i in range(1, n)}  # spanning path keeps it connected
    perm = rng.permutation(np.arange(1, n + 1))
    edges = {(int(min(perm[a - 1], perm[b - 1])), int(max(perm[a - 1], perm[b - 1])))
             for a, b in edges}
    for u, v in itertools.combinations(range(1, n + 1), 2):
        if rng.random() < p:
            edges.add((u, v))
    return Graph(range(1, n + 1), edges)


RANDOM_SPARSE = random_connected_graph(10, 0.15, seed=7)

CYCLES = {n: cycle_graph(n) for n in range(4, 11)}

# ten graphs for the elimination oracle
ORACLE_GRAPHS = {
    **{f"cycle{n}": g for n, g in CYCLES.items()},
    "k4_chain": K4_CHAIN,
    "fused_4_cycles": FUSED_4_CYCLES,
    "random_sparse": RANDOM_SPARSE,
}

CHORDAL_FIXTURES = {
    "k4_chain": K4_CHAIN,
    "two_clique": TWO_CLIQUE,
    "star_tree": STAR_TREE,
    "k4": complete_graph(range(1, 5)),
    "filled_five_cycle": FIVE_CYCLE_ALT_FILLED,
}

SEPARABLE_FIXTURES = {
    "fused_4_cycles": FUSED_4_CYCLES,
    "k4_cycle_k4": K4_CYCLE_K4,
}


def random_member(g, rng, floor=0.1):
    """Random positive definite matrix with zeros at the non-edges of ``g``."""
    labels = g.vertices
    pos = {v: i for i, v in enumerate(labels)}
    p = len(labels)
    k = np.zeros((p, p))
    for u, v in g.edges:
        k[pos[u], pos[v]] = k[pos[v], pos[u]] = rng.uniform(-1, 1)
    k[np.diag_indices(p)] = rng.uniform(0.5, 2.0, p)
    lo = np.linalg.eigvalsh(k)[0]
    if lo < floor:
        k[np.diag_indices(p)] += floor - lo
    return k


def random_scatter(p, dof, rng):
    a = rng.standard_normal((dof, p))
    return a.T @ a


def max_rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = np.max(np.abs(b))
    err = np.max(np.abs(a - b)) if a.size else 0.0
    return err / scale if scale > 0 else err


# --------------------------------------------------------------------------
# brute-force graph oracles
# --------------------------------------------------------------------------

def _is_complete(g, vs):
    return all(g.has_edge(u, v) for u, v in itertools.combinations(vs, 2))


def brute_cliques(g):
    verts = g.vertices
    cliques = [set(s) for r in range(1, len(verts) + 1)
               for s in itertools.combinations(verts, r) if _is_complete(g, s)]
    maximal = [c for c in cliques if not any(c < d for d in cliques)]
    return sorted(tuple(sorted(c)) for c in maximal)


def _connected(g, vs):
    vs = set(vs)
    if not vs:
        return True
    start = next(iter(vs))
    seen, stack = {start}, [start]
    while stack:
        x = stack.pop()
        for y in g.neighbors(x):
            if y in vs and y not in seen:
                seen.add(y)
                stack.append(y)
    return seen == vs


def brute_has_chordless_cycle(g):
    verts = g.vertices
    for r in range(4, len(verts) + 1):
        for s in itertools.combinations(verts, r):
            degs = [sum(1 for u in g.neighbors(v) if u in s) for v in s]
            if all(d == 2 for d in degs) and _connected(g, s):
                return True
    return False


def brute_is_prime(g, vs):
    vs = tuple(vs)
    if not _connected(g, vs):
        return False
    for r in range(0, len(vs) - 1):
        for s in itertools.combinations(vs, r):
            if not _is_complete(g, s):
                continue
            rest = [v for v in vs if v not in s]
            if len(rest) >= 2 and not _connected(g, rest):
                return False
    return True


def brute_mp_parts(g):
    verts = g.vertices
    primes = [frozenset(s) for r in range(1, len(verts) + 1)
              for s in itertools.combinations(verts, r) if brute_is_prime(g, s)]
    maximal = [p for p in primes if not any(p < q for q in primes)]
    return sorted(tuple(sorted(p)) for p in maximal)


def relabel(g, perm):
    """Graph with vertex ``v`` renamed to ``perm[v]``."""
    return Graph([perm[v] for v in g.vertices], [(perm[u], perm[v]) for u, v in g.edges])
