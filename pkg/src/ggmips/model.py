"""Gaussian graphical model: sufficient statistics, likelihood and closed forms."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import (
    Graph,
    PrimeDecomposition,
    is_chordal,
    maximal_cliques,
    mp_decompose,
    triangulate,
)
from .linalg import SymMatrix, _lapack_chol, embed, inverse_pd, submatrix


@dataclass(frozen=True)
class ModelSpec:
    """A graph with its maximal cliques and prime decomposition cached.

    ``decomposition`` is None for a disconnected graph; the fitting code
    handles components one at a time.
    """

    graph: Graph
    cliques: tuple = field(default=None)
    decomposition: PrimeDecomposition | None = field(default=None)

    def __post_init__(self):
        cliques = tuple(maximal_cliques(self.graph))
        if self.cliques is not None and tuple(map(tuple, self.cliques)) != cliques:
            raise ValueError("cached cliques do not match the graph")
        object.__setattr__(self, "cliques", cliques)
        decomp = mp_decompose(self.graph) if self.graph.is_connected() else None
        if self.decomposition is not None and self.decomposition != decomp:
            raise ValueError("cached decomposition does not match the graph")
        object.__setattr__(self, "decomposition", decomp)

    @property
    def labels(self) -> tuple:
        return self.graph.vertices

    @property
    def is_decomposable(self) -> bool:
        return is_chordal(self.graph)[0]


@dataclass(frozen=True)
class SuffStats:
    """Sample size, sample mean and scatter matrix ``sum (y - ybar)(y - ybar)'``."""

    n: int
    scatter: SymMatrix
    mean: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sample size must be at least 1")
        if not isinstance(self.scatter, SymMatrix):
            object.__setattr__(self, "scatter", SymMatrix(self.scatter))

    @property
    def labels(self) -> tuple:
        return self.scatter.labels

    def restrict(self, vs: Sequence) -> "SuffStats":
        vs = list(vs)
        mean = None
        if self.mean is not None:
            mean = self.mean[self.scatter.positions(vs)]
        return SuffStats(self.n, SymMatrix(submatrix(self.scatter, vs, vs), vs), mean)


def suff_stats_from_samples(data, labels: Sequence | None = None) -> SuffStats:
    """Mean and scatter matrix of an ``n x p`` table of samples."""
    y = np.asarray(data, dtype=float)
    if y.ndim != 2 or y.shape[0] == 0:
        raise ValueError("need a non-empty two-dimensional table of samples")
    mean = y.mean(axis=0)
    centred = y - mean
    return SuffStats(y.shape[0], SymMatrix(centred.T @ centred, labels), mean)


def in_model(k, graph: Graph) -> bool:
    """Exact structural zeros at every non-edge."""
    arr = np.asarray(k)
    verts = graph.vertices
    pos = k.positions(verts) if isinstance(k, SymMatrix) else range(len(verts))
    for a, (i, u) in enumerate(zip(pos, verts)):
        nb = graph.neighbors(u)
        for j, v in zip(list(pos)[a + 1:], verts[a + 1:]):
            if v not in nb and (arr[i, j] != 0.0 or arr[j, i] != 0.0):
                return False
    return True


def likelihood_residual(k, stats: SuffStats, cliques: Sequence[Sequence]) -> float:
    """``max_C || n (K^-1)_CC - W_CC ||_max`` over the given cliques."""
    sigma = inverse_pd(_as_sym(k, stats.labels))
    worst = 0.0
    for c in cliques:
        diff = stats.n * submatrix(sigma, c, c) - submatrix(stats.scatter, c, c)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def loglik(k, stats: SuffStats) -> float:
    """Profile log-likelihood ``(n/2) log det K - tr(K W)/2`` at ``mu = ybar``."""
    arr = np.asarray(_as_sym(k, stats.labels))
    logdet = 2.0 * float(np.sum(np.log(np.diag(_lapack_chol(arr)))))
    return 0.5 * stats.n * logdet - 0.5 * float(np.sum(arr * np.asarray(stats.scatter)))


def _as_sym(k, labels) -> SymMatrix:
    if isinstance(k, SymMatrix):
        if k.labels != tuple(labels):
            return SymMatrix(submatrix(k, labels, labels), labels)
        return k
    return SymMatrix(k, labels)


def _margin_inverse(stats: SuffStats, vs) -> np.ndarray:
    return inverse_pd(submatrix(stats.scatter, vs, vs))


def decomposable_mle(spec: ModelSpec | Graph, stats: SuffStats) -> SymMatrix:
    """Closed-form MLE of a decomposable model.

    Sums ``n [(W_CC)^-1]`` over the cliques of a perfect sequence and
    subtracts ``n [(W_SS)^-1]`` once per separator occurrence.
    """
    g = spec.graph if isinstance(spec, ModelSpec) else spec
    if not is_chordal(g)[0]:
        raise ValueError("closed-form MLE needs a chordal graph")
    cs = triangulate(g)
    labels = g.vertices
    k = np.zeros((len(labels), len(labels)))
    for c in cs.perfect_sequence:
        k += embed(_margin_inverse(stats, c), c, c, labels)
    for s in cs.separators:
        if s:
            k -= embed(_margin_inverse(stats, s), s, s, labels)
    return SymMatrix(stats.n * k, labels)


def combine_mp_fits(fits: Sequence[tuple], separators: Sequence[Sequence],
                    stats: SuffStats, labels: Sequence | None = None) -> SymMatrix:
    """Assemble the global MLE from fits on the prime parts.

    ``fits`` holds ``(V, K_VV)`` pairs; each separator occurrence
    contributes ``-n [(W_SS)^-1]``.
    """
    labels = tuple(stats.labels if labels is None else labels)
    k = np.zeros((len(labels), len(labels)))
    for vs, kv in fits:
        k += embed(np.asarray(kv), vs, vs, labels)
    for s in separators:
        if s:
            k -= stats.n * embed(_margin_inverse(stats, s), s, s, labels)
    return SymMatrix(k, labels)
