import numpy as np
import pytest

from ggmips.graph import Graph, complete_graph, mp_decompose
from ggmips.linalg import NotPositiveDefiniteError, SymMatrix, inverse_pd
from ggmips.model import (
    ModelSpec,
    SuffStats,
    combine_mp_fits,
    decomposable_mle,
    in_model,
    likelihood_residual,
    loglik,
    suff_stats_from_samples,
)

from helpers import (
    CHORDAL_FIXTURES,
    K4_CHAIN,
    TWO_CLIQUE,
    max_rel,
    random_member,
    random_scatter,
)


def stats_for(g, seed, extra=3):
    rng = np.random.default_rng(seed)
    n = len(g) + extra
    return SuffStats(n, SymMatrix(random_scatter(len(g), n, rng), g.vertices))


class TestSuffStats:
    def test_from_samples(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal((30, 4)) + [1, 2, 3, 4]
        s = suff_stats_from_samples(y)
        c = y - y.mean(axis=0)
        assert s.n == 30
        assert max_rel(s.scatter.values, c.T @ c) <= 1e-14
        assert np.allclose(s.mean, y.mean(axis=0))

    def test_restrict(self):
        s = stats_for(K4_CHAIN, 1)
        r = s.restrict([5, 2])
        assert r.labels == (5, 2) and r.n == s.n
        assert r.scatter[5, 2] == s.scatter[5, 2]

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            suff_stats_from_samples(np.zeros((0, 3)))
        with pytest.raises(ValueError):
            SuffStats(0, np.eye(2))


class TestModelSpec:
    def test_caches(self):
        spec = ModelSpec(K4_CHAIN)
        assert spec.cliques == ((1, 2, 3, 4), (3, 4, 5, 6), (5, 6, 7, 8))
        assert spec.decomposition.separators == ((3, 4), (5, 6))
        assert spec.is_decomposable

    def test_rejects_stale_cache(self):
        with pytest.raises(ValueError):
            ModelSpec(K4_CHAIN, cliques=[(1, 2, 3, 4)])

    def test_disconnected(self):
        spec = ModelSpec(Graph([1, 2, 3], [(1, 2)]))
        assert spec.decomposition is None


def test_in_model():
    g = TWO_CLIQUE
    k = np.array([[2.0, 0.5, 0.0], [0.5, 2.0, 0.3], [0.0, 0.3, 2.0]])
    assert in_model(k, g)
    k[0, 2] = k[2, 0] = 1e-300
    assert not in_model(k, g)


class TestLoglik:
    def test_identity_zero_scatter(self):
        assert loglik(np.eye(3), SuffStats(4, np.zeros((3, 3)))) == 0.0

    def test_formula(self):
        s = stats_for(complete_graph([1, 2, 3]), 2)
        k = random_member(complete_graph([1, 2, 3]), np.random.default_rng(3))
        expected = 0.5 * s.n * np.log(np.linalg.det(k)) - 0.5 * np.trace(k @ s.scatter.values)
        assert loglik(k, s) == pytest.approx(expected, rel=1e-12)

    def test_not_pd(self):
        with pytest.raises(NotPositiveDefiniteError):
            loglik(-np.eye(2), SuffStats(3, np.eye(2)))


class TestDecomposableMle:
    def test_complete_graph(self):
        g = complete_graph(range(1, 5))
        s = stats_for(g, 4)
        k = decomposable_mle(g, s)
        assert max_rel(k.values, s.n * np.linalg.inv(s.scatter.values)) <= 1e-12

    def test_two_cliques_by_hand(self):
        s = stats_for(TWO_CLIQUE, 5)
        w = s.scatter.values
        expected = np.zeros((3, 3))
        expected[:2, :2] += np.linalg.inv(w[:2, :2])
        expected[1:, 1:] += np.linalg.inv(w[1:, 1:])
        expected[1, 1] -= 1.0 / w[1, 1]
        k = decomposable_mle(TWO_CLIQUE, s)
        assert max_rel(k.values, s.n * expected) <= 1e-12
        sigma = np.linalg.inv(k.values)
        for c in ([0, 1], [1, 2]):
            assert max_rel(s.n * sigma[np.ix_(c, c)], w[np.ix_(c, c)]) <= 1e-10

    @pytest.mark.parametrize("name", sorted(CHORDAL_FIXTURES))
    def test_invariants(self, name):
        g = CHORDAL_FIXTURES[name]
        s = stats_for(g, 6)
        k = decomposable_mle(g, s)
        assert in_model(k, g)
        assert np.all(np.linalg.eigvalsh(k.values) > 0)
        scale = np.max(np.abs(s.scatter.values))
        assert likelihood_residual(k, s, ModelSpec(g).cliques) <= 1e-8 * scale

    @pytest.mark.parametrize("name", sorted(CHORDAL_FIXTURES))
    def test_optimality_spot_check(self, name):
        g = CHORDAL_FIXTURES[name]
        s = stats_for(g, 7)
        best = loglik(decomposable_mle(g, s), s)
        rng = np.random.default_rng(8)
        for _ in range(100):
            assert loglik(random_member(g, rng), s) <= best

    def test_separator_multiplicity(self):
        # three leaves on a hub: separator {1} occurs twice
        g = Graph([1, 2, 3, 4], [(1, 2), (1, 3), (1, 4)])
        s = stats_for(g, 9)
        k = decomposable_mle(g, s)
        assert likelihood_residual(k, s, ModelSpec(g).cliques) <= 1e-10 * np.max(s.scatter.values)

    def test_rejects_non_chordal(self):
        g = Graph(range(1, 5), [(1, 2), (2, 3), (3, 4), (4, 1)])
        with pytest.raises(ValueError):
            decomposable_mle(g, stats_for(g, 0))


class TestCombine:
    def test_prime_graph_unchanged(self):
        g = Graph(range(1, 5), [(1, 2), (2, 3), (3, 4), (4, 1)])
        s = stats_for(g, 10)
        k = random_member(g, np.random.default_rng(11))
        out = combine_mp_fits([((1, 2, 3, 4), k)], [], s)
        assert np.array_equal(out.values, SymMatrix(k).values)

    def test_k4_chain_reproduces_closed_form(self):
        s = stats_for(K4_CHAIN, 12)
        dec = mp_decompose(K4_CHAIN)
        fits = [(p, s.n * inverse_pd(s.restrict(p).scatter.values)) for p in dec.parts]
        out = combine_mp_fits(fits, dec.separators, s)
        assert max_rel(out.values, decomposable_mle(K4_CHAIN, s).values) <= 1e-8

    @pytest.mark.parametrize("name", sorted(CHORDAL_FIXTURES))
    def test_route_equivalence(self, name):
        g = CHORDAL_FIXTURES[name]
        s = stats_for(g, 13)
        dec = mp_decompose(g)
        fits = [(p, s.n * inverse_pd(s.restrict(p).scatter.values)) for p in dec.parts]
        out = combine_mp_fits(fits, dec.separators, s)
        assert max_rel(out.values, decomposable_mle(g, s).values) <= 1e-8

    def test_order_independence(self):
        s = stats_for(K4_CHAIN, 14)
        dec = mp_decompose(K4_CHAIN)
        fits = [(p, s.n * inverse_pd(s.restrict(p).scatter.values)) for p in dec.parts]
        a = combine_mp_fits(fits, dec.separators, s)
        b = combine_mp_fits(fits[::-1], dec.separators[::-1], s)
        assert np.max(np.abs(a.values - b.values)) <= 1e-12 * np.max(np.abs(a.values))
