"""Maximum likelihood estimation in Gaussian graphical models by
iterative proportional scaling, with a localized clique update driven by
a chordal extension of the model graph."""

from .graph import (
    ChordalStructure,
    Graph,
    PrimeDecomposition,
    complete_graph,
    cycle_graph,
    is_chordal,
    maximal_cliques,
    mp_decompose,
    perfect_sequence_from,
    read_graph,
    simplicial_vertices,
    triangulate,
    write_graph,
)
from .ips import (
    CliquePlan,
    FitResult,
    IpsConfig,
    build_clique_plan,
    direct_step,
    direct_step_rewritten,
    fit,
    flop_report,
    localized_marginal_inverse,
    localized_step,
)
from .linalg import (
    Flops,
    NotPositiveDefiniteError,
    SymMatrix,
    chol_factor,
    embed,
    inverse_pd,
    rank1_downdate,
    schur_inverse_block,
    submatrix,
)
from .model import (
    ModelSpec,
    SuffStats,
    combine_mp_fits,
    decomposable_mle,
    likelihood_residual,
    loglik,
    suff_stats_from_samples,
)

__version__ = "0.1.0"

__all__ = [
    "ChordalStructure",
    "Graph",
    "PrimeDecomposition",
    "complete_graph",
    "cycle_graph",
    "is_chordal",
    "maximal_cliques",
    "mp_decompose",
    "perfect_sequence_from",
    "read_graph",
    "simplicial_vertices",
    "triangulate",
    "write_graph",
    "CliquePlan",
    "FitResult",
    "IpsConfig",
    "build_clique_plan",
    "direct_step",
    "direct_step_rewritten",
    "fit",
    "flop_report",
    "localized_marginal_inverse",
    "localized_step",
    "Flops",
    "NotPositiveDefiniteError",
    "SymMatrix",
    "chol_factor",
    "embed",
    "inverse_pd",
    "rank1_downdate",
    "schur_inverse_block",
    "submatrix",
    "ModelSpec",
    "SuffStats",
    "combine_mp_fits",
    "decomposable_mle",
    "likelihood_residual",
    "loglik",
    "suff_stats_from_samples",
]
