"""Iterative proportional scaling for the concentration matrix.

Two implementations of the clique update are provided.  The direct one
inverts the complement block ``K_DD`` and costs ``O(|D|^3)`` per step.  The
localized one obtains ``((K^-1)_CC)^-1`` by eliminating the vertices
outside ``C`` one at a time along a perfect elimination order of a chordal
extension, touching only entries inside the extension's cliques.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .graph import (
    ChordalStructure,
    Graph,
    is_chordal,
    maximal_cliques,
    mp_decompose,
    perfect_sequence_from,
    triangulate,
)
from .linalg import (
    Flops,
    NotPositiveDefiniteError,
    SymMatrix,
    _lapack_chol,
    cholesky_flops,
    gram_flops,
    inverse_pd,
    is_pd,
    mirror_lower,
    rank1_downdate,
    submatrix,
    triangular_solve_flops,
)
from .model import (
    ModelSpec,
    SuffStats,
    combine_mp_fits,
    decomposable_mle,
    in_model,
    loglik,
)

log = logging.getLogger(__name__)

MODES = ("direct", "localized")


@dataclass(frozen=True)
class IpsConfig:
    max_sweeps: int = 10000
    tol: float = 1e-6
    mode: str = "localized"
    initial: SymMatrix | None = None  # None means the identity
    decompose: bool = True  # closed form / prime-part localization when possible

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


class EliminationStep(NamedTuple):
    vertex: object
    clique_index: int  # 1-based position m in the anchored perfect sequence
    q: tuple


@dataclass(frozen=True)
class CliquePlan:
    """Elimination schedule for one clique, reusable across sweeps."""

    clique: tuple
    structure: ChordalStructure
    schedule: tuple
    w_cc_inv: np.ndarray | None
    n: int | None
    labels: tuple
    _pos_steps: tuple = field(repr=False, default=())
    _clique_pos: tuple = field(repr=False, default=())

    @property
    def margin_target(self) -> np.ndarray:
        """``n (W_CC)^-1``, the value ``((K^-1)_CC)^-1`` takes after the update."""
        if self.w_cc_inv is None:
            raise ValueError("plan was built without sufficient statistics")
        return self.n * self.w_cc_inv


@dataclass
class FitResult:
    k_hat: SymMatrix
    sigma_hat: SymMatrix
    sweeps: int
    final_change: float
    converged: bool
    flops: Flops
    wall_time_per_step: float
    steps: int = 0
    loglik_trace: list = field(default_factory=list)
    pieces: list = field(default_factory=list)

    @property
    def flops_per_step(self) -> Flops:
        if not self.steps:
            return Flops()
        f = self.flops
        return Flops(f.mults // self.steps, f.divs // self.steps,
                     f.subs // self.steps, f.adds // self.steps)


def _arr_and_labels(k, labels=None):
    if isinstance(k, SymMatrix):
        return np.asarray(k), k.labels
    arr = np.asarray(k, dtype=float)
    return arr, tuple(labels) if labels is not None else tuple(range(1, arr.shape[0] + 1))


def _target(stats: SuffStats, c) -> np.ndarray:
    return stats.n * inverse_pd(submatrix(stats.scatter, c, c))


# ---------------------------------------------------------------------------
# direct updates
# ---------------------------------------------------------------------------

def _direct_update(k: np.ndarray, cpos: list, target: np.ndarray, flops: Flops | None) -> None:
    """In-place ``K_CC <- target + K_CD K_DD^-1 K_DC``."""
    p = k.shape[0]
    chosen = set(cpos)
    dpos = [i for i in range(p) if i not in chosen]
    c = len(cpos)
    if dpos:
        kdd = k[np.ix_(dpos, dpos)]
        l = _lapack_chol(kdd)
        y = scipy.linalg.solve_triangular(l, k[np.ix_(dpos, cpos)], lower=True,
                                          check_finite=False)
        new = target + y.T @ y
        if flops is not None:
            d = len(dpos)
            flops += cholesky_flops(d)
            flops += triangular_solve_flops(d, c)
            flops += gram_flops(d, c)
            flops.adds += c * c
    else:
        new = target.copy()
    k[np.ix_(cpos, cpos)] = mirror_lower(new)


def direct_step(k, stats: SuffStats, c: Sequence, flops: Flops | None = None) -> SymMatrix:
    """One IPS update of the clique ``c`` by inverting the complement block."""
    arr, labels = _arr_and_labels(k, stats.labels)
    out = arr.copy()
    pos = {v: i for i, v in enumerate(labels)}
    _direct_update(out, [pos[v] for v in c], _target(stats, c), flops)
    return SymMatrix(out, labels)


def direct_step_rewritten(k, stats: SuffStats, c: Sequence) -> SymMatrix:
    """The same update written as ``target + K_CC - ((K^-1)_CC)^-1``.

    ``(K^-1)_CC`` is read off a full inverse, so this is an independent
    route to the value produced by :func:`direct_step`.
    """
    arr, labels = _arr_and_labels(k, stats.labels)
    kk = SymMatrix(arr, labels)
    sigma_cc = submatrix(inverse_pd(kk), c, c)
    new = _target(stats, c) + submatrix(kk, c, c) - inverse_pd(sigma_cc)
    out = arr.copy()
    pos = [labels.index(v) for v in c]
    out[np.ix_(pos, pos)] = mirror_lower(new)
    return SymMatrix(out, labels)


# ---------------------------------------------------------------------------
# localized updates
# ---------------------------------------------------------------------------

def build_clique_plan(cs: ChordalStructure, c: Sequence, stats: SuffStats | None = None) -> CliquePlan:
    """Anchor the perfect sequence at ``c`` and lay out the eliminations.

    Cliques are processed from last to first.  Each vertex of a clique's
    residual is removed in turn, ``Q`` being what is left of that clique;
    in the first clique only vertices outside ``c`` are removed.
    """
    c = tuple(sorted(c))
    anchored = perfect_sequence_from(cs, c)
    seq = anchored.perfect_sequence
    steps = []
    for m in range(len(seq), 0, -1):
        current = list(seq[m - 1])
        if m == 1:
            drop = [v for v in anchored.residuals[0] if v not in c]
        else:
            drop = anchored.residuals[m - 1]
        for v in drop:
            current.remove(v)
            steps.append(EliminationStep(v, m, tuple(current)))
    labels = anchored.extension.vertices
    pos = {v: i for i, v in enumerate(labels)}
    pos_steps = tuple((pos[s.vertex], tuple(pos[u] for u in s.q)) for s in steps)
    w_inv = n = None
    if stats is not None:
        w_inv = inverse_pd(submatrix(stats.scatter, c, c))
        n = stats.n
    return CliquePlan(
        clique=c,
        structure=anchored,
        schedule=tuple(steps),
        w_cc_inv=w_inv,
        n=n,
        labels=labels,
        _pos_steps=pos_steps,
        _clique_pos=tuple(pos[v] for v in c),
    )


def _eliminate(arr: np.ndarray, plan: CliquePlan, flops: Flops | None) -> np.ndarray:
    # working copy: only entries rewritten by earlier eliminations are stored
    work: dict = {}

    def get(i, j):
        key = (i, j) if i <= j else (j, i)
        val = work.get(key)
        return arr[i, j] if val is None else val

    for (d, q), step in zip(plan._pos_steps, plan.schedule):
        pivot = get(d, d)
        if not pivot > 0:
            raise NotPositiveDefiniteError(
                f"non-positive pivot {pivot!r} eliminating vertex {step.vertex!r}", step.vertex)
        col = np.array([get(i, d) for i in q])
        block = np.array([[get(i, j) for j in q] for i in q]).reshape(len(q), len(q))
        rank1_downdate(block, col, pivot, flops, out=block)
        for a, i in enumerate(q):
            row = block[a]
            for b in range(len(q)):
                j = q[b]
                if i <= j:
                    work[(i, j)] = row[b]
    cp = plan._clique_pos
    return np.array([[get(i, j) for j in cp] for i in cp])


def localized_marginal_inverse(k, plan: CliquePlan, flops: Flops | None = None) -> np.ndarray:
    """``((K^-1)_CC)^-1`` by successive one-vertex eliminations.

    ``k`` must have zeros at every non-edge of the chordal extension the
    plan was built from; the result is ordered like ``plan.clique``.
    """
    arr = np.asarray(k, dtype=float)
    if isinstance(k, SymMatrix) and k.labels != plan.labels:
        arr = submatrix(k, plan.labels, plan.labels)
    return mirror_lower(_eliminate(arr, plan, flops))


def _localized_update(k: np.ndarray, plan: CliquePlan, flops: Flops | None) -> None:
    kstar = _eliminate(k, plan, flops)
    cp = list(plan._clique_pos)
    block = k[np.ix_(cp, cp)]
    new = plan.margin_target + block - kstar
    if flops is not None:
        c2 = len(cp) ** 2
        flops.adds += c2
        flops.subs += c2
    k[np.ix_(cp, cp)] = mirror_lower(new)


def localized_step(k, stats: SuffStats, plan: CliquePlan, flops: Flops | None = None) -> SymMatrix:
    """The clique update with ``((K^-1)_CC)^-1`` from :func:`localized_marginal_inverse`."""
    if plan.w_cc_inv is None:
        plan = build_clique_plan(plan.structure, plan.clique, stats)
    arr, labels = _arr_and_labels(k, plan.labels)
    out = arr.copy()
    _localized_update(out, plan, flops)
    return SymMatrix(out, labels)


@dataclass(frozen=True)
class FlopReport:
    """Predicted operation counts for one localized step."""

    elimination: Flops
    closed_form: Flops
    update: Flops

    @property
    def total(self) -> Flops:
        return self.elimination + self.update


def _sizes(plan: CliquePlan) -> list[tuple[int, int]]:
    """``(|C*_m|, |R*_m|)`` with the first residual taken relative to the clique."""
    seq = plan.structure.perfect_sequence
    out = []
    for m, cm in enumerate(seq):
        if m == 0:
            r = len([v for v in cm if v not in plan.clique])
        else:
            r = len(plan.structure.residuals[m])
        out.append((len(cm), r))
    return out


def elimination_counts(c: int, r: int) -> tuple[int, int]:
    """(multiplications, divisions) for removing ``r`` vertices from a clique of size ``c``."""
    return (sum((c - j) ** 2 for j in range(1, r + 1)),
            sum(c - j for j in range(1, r + 1)))


def closed_form_counts(c: int, r: int) -> tuple[int, int]:
    """The sums of :func:`elimination_counts` expanded in closed form."""
    mults = r * c * c - r * c - r * r * c + r * (r + 1) * (2 * r + 1) // 6
    divs = r * c - (1 + r) * r // 2
    return mults, divs


def flop_report(plan: CliquePlan) -> FlopReport:
    mults = divs = cf_mults = cf_divs = 0
    for c, r in _sizes(plan):
        m, d = elimination_counts(c, r)
        mults, divs = mults + m, divs + d
        m, d = closed_form_counts(c, r)
        cf_mults, cf_divs = cf_mults + m, cf_divs + d
    c2 = len(plan.clique) ** 2
    return FlopReport(
        elimination=Flops(mults=mults, divs=divs, subs=mults),
        closed_form=Flops(mults=cf_mults, divs=cf_divs, subs=cf_mults),
        update=Flops(adds=c2, subs=c2),
    )


# ---------------------------------------------------------------------------
# the sweep loop
# ---------------------------------------------------------------------------

StepCallback = Callable[[np.ndarray, tuple, tuple], None]


def _ips(g: Graph, stats: SuffStats, k0: np.ndarray, cfg: IpsConfig,
         callback: StepCallback | None) -> FitResult:
    labels = g.vertices
    cliques = maximal_cliques(g)
    flops = Flops()
    if cfg.mode == "localized":
        cs = triangulate(g)
        largest = max(len(c) for c in cs.perfect_sequence)
        _check_n(stats.n, largest)
        plans = [build_clique_plan(cs, c, stats) for c in cliques]
        updates = [lambda k, p=p: _localized_update(k, p, flops) for p in plans]
    else:
        _check_n(stats.n, max(len(c) for c in cliques))
        pos = {v: i for i, v in enumerate(labels)}
        prepared = [([pos[v] for v in c], _target(stats, c)) for c in cliques]
        updates = [lambda k, cp=cp, t=t: _direct_update(k, cp, t, flops) for cp, t in prepared]

    k = np.array(k0, dtype=float)
    trace = [loglik(SymMatrix(k, labels), stats)]
    elapsed = 0.0
    steps = 0
    change = float("inf")
    converged = False
    sweeps = 0
    while sweeps < cfg.max_sweeps:
        prev = k.copy()
        for clique, update in zip(cliques, updates):
            t0 = time.perf_counter()
            update(k)
            elapsed += time.perf_counter() - t0
            steps += 1
            if callback is not None:
                callback(k, labels, clique)
        sweeps += 1
        change = float(np.sum(np.abs(k - prev)))
        trace.append(loglik(SymMatrix(k, labels), stats))
        if change <= cfg.tol:
            converged = True
            break
    if not converged:
        log.warning("IPS stopped after %d sweeps without converging (change %.3g)",
                    sweeps, change)
    k_hat = SymMatrix(k, labels)
    return FitResult(
        k_hat=k_hat,
        sigma_hat=inverse_pd(k_hat),
        sweeps=sweeps,
        final_change=change,
        converged=converged,
        flops=flops,
        wall_time_per_step=elapsed / steps if steps else 0.0,
        steps=steps,
        loglik_trace=trace,
    )


def _check_n(n: int, largest: int) -> None:
    if n < largest:
        raise ValueError(f"sample size {n} is smaller than the largest clique ({largest}); "
                         "clique margins of W would be singular")


def _initial(spec: ModelSpec, cfg: IpsConfig) -> np.ndarray:
    labels = spec.labels
    if cfg.initial is None:
        return np.eye(len(labels))
    k0 = submatrix(cfg.initial, labels, labels) if isinstance(cfg.initial, SymMatrix) \
        else np.array(cfg.initial, dtype=float)
    if k0.shape != (len(labels), len(labels)):
        raise ValueError("initial estimate has the wrong shape")
    if not in_model(k0, spec.graph):
        raise ValueError("initial estimate has non-zeros at non-edges of the graph")
    if not is_pd(k0):
        raise NotPositiveDefiniteError("initial estimate is not positive definite")
    return k0


def _closed_form_result(k: SymMatrix) -> FitResult:
    return FitResult(k_hat=k, sigma_hat=inverse_pd(k), sweeps=0, final_change=0.0,
                     converged=True, flops=Flops(), wall_time_per_step=0.0)


def fit(spec: ModelSpec | Graph, stats: SuffStats, cfg: IpsConfig | None = None,
        callback: StepCallback | None = None) -> FitResult:
    """Maximum likelihood estimate of ``K`` under the graphical model ``spec``.

    With ``cfg.decompose`` (the default) a chordal graph gets the closed
    form, and otherwise each maximal prime part is fitted on its own
    margin, IPS running only on the non-complete parts, before the pieces
    are glued along the clique separators.  With ``decompose=False`` IPS
    runs over all cliques of the whole graph.

    ``callback(k, labels, clique)`` is invoked after every clique update
    with the live iterate of the part being fitted.
    """
    cfg = cfg or IpsConfig()
    if not isinstance(spec, ModelSpec):
        spec = ModelSpec(spec)
    g = spec.graph
    labels = spec.labels
    if tuple(stats.labels) != labels:
        stats = stats.restrict(labels)
    k0 = _initial(spec, cfg)

    if not cfg.decompose:
        return _ips(g, stats, k0, cfg, callback)

    if is_chordal(g)[0]:
        return _closed_form_result(decomposable_mle(g, stats))

    fits, seps, pieces = [], [], []
    pos = {v: i for i, v in enumerate(labels)}
    for comp in g.components():
        dec = spec.decomposition if len(comp) == len(g) else mp_decompose(g.subgraph(comp))
        seps.extend(dec.separators)
        for part in dec.parts:
            sub = g.subgraph(part)
            if sub.is_clique(part):
                fits.append((part, _target(stats, part)))
                continue
            idx = [pos[v] for v in part]
            res = _ips(sub, stats.restrict(part), k0[np.ix_(idx, idx)], cfg, callback)
            fits.append((part, np.asarray(res.k_hat)))
            pieces.append(res)
    k_hat = combine_mp_fits(fits, seps, stats, labels)
    flops = Flops()
    for p in pieces:
        flops += p.flops
    steps = sum(p.steps for p in pieces)
    elapsed = sum(p.wall_time_per_step * p.steps for p in pieces)
    return FitResult(
        k_hat=k_hat,
        sigma_hat=inverse_pd(k_hat),
        sweeps=max((p.sweeps for p in pieces), default=0),
        final_change=max((p.final_change for p in pieces), default=0.0),
        converged=all(p.converged for p in pieces),
        flops=flops,
        wall_time_per_step=elapsed / steps if steps else 0.0,
        steps=steps,
        loglik_trace=pieces[0].loglik_trace if len(pieces) == 1 and len(fits) == 1 else [],
        pieces=pieces,
    )
