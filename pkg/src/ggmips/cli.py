"""Command line entry point: ``ggmips fit|bench|decompose|probe-inverse``.

Exit codes: 0 success, 1 input error, 2 numerical failure (matrix not
positive definite), 3 fit did not converge.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .graph import is_chordal, maximal_cliques, mp_decompose, read_graph, triangulate
from .harness import BenchSpec, inverse_timing_probe, run_benchmark
from .ips import MODES, IpsConfig, fit
from .io import read_matrix_csv, read_samples_csv, write_fit_summary, write_matrix_csv
from .linalg import NotPositiveDefiniteError, SymMatrix, submatrix
from .model import ModelSpec, SuffStats, likelihood_residual, loglik, suff_stats_from_samples

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NOCONV = 0, 1, 2, 3


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _str_list(text: str) -> list[str]:
    return [x for x in text.replace(",", " ").split()]


def _load_stats(args, labels) -> SuffStats:
    if args.data:
        y, header = read_samples_csv(args.data, True if args.header else None)
        if header is not None:
            order = [header.index(v) for v in labels]
            y = y[:, order]
        if y.shape[1] != len(labels):
            raise ValueError(f"data has {y.shape[1]} columns, graph has {len(labels)} vertices")
        return suff_stats_from_samples(y, labels)
    if args.n is None:
        raise ValueError("--scatter needs --n")
    w = read_matrix_csv(args.scatter)
    if set(w.labels) != set(labels):
        raise ValueError(f"scatter labels {list(w.labels)} do not match the graph's vertices")
    return SuffStats(args.n, SymMatrix(submatrix(w, labels, labels), labels))


def cmd_fit(args) -> int:
    g = read_graph(args.graph)
    spec = ModelSpec(g)
    stats = _load_stats(args, spec.labels)
    cfg = IpsConfig(max_sweeps=args.max_sweeps, tol=args.tol, mode=args.mode)
    res = fit(spec, stats, cfg)
    resid = likelihood_residual(res.k_hat, stats, spec.cliques)
    summary = {
        "n": stats.n,
        "sweeps": res.sweeps,
        "residual": resid,
        "loglik": loglik(res.k_hat, stats),
        "converged": res.converged,
    }
    write_matrix_csv(f"{args.out}.csv", res.k_hat)
    write_fit_summary(f"{args.out}.json", summary)
    print(f"sweeps={res.sweeps} converged={res.converged} residual={resid:.3e}")
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_bench(args) -> int:
    spec = BenchSpec(dims=tuple(args.dims), replications=args.reps, seed=args.seed,
                     modes=tuple(args.modes), tol=args.tol, max_sweeps=args.max_sweeps)
    records = run_benchmark(spec, out=args.out)
    for r in records:
        print(f"dim={r.dim:5d} mode={r.mode:9s} step_s={r.mean_step_seconds:.3e} "
              f"step_flops={r.mean_step_flops:.4g} sweeps={r.mean_sweeps:.1f} "
              f"converged={r.converged_fraction:.2f}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    g = read_graph(args.graph)
    chordal, _ = is_chordal(g)
    print(f"vertices: {len(g)}  edges: {len(g.edges)}  chordal: {chordal}")
    print(f"maximal cliques: {len(maximal_cliques(g))}")
    for comp in g.components():
        dec = mp_decompose(g.subgraph(comp))
        print("prime parts:")
        for part in dec.parts:
            print("  " + " ".join(map(str, part)))
        print("clique minimal separators:")
        for sep in dec.separators:
            print("  " + " ".join(map(str, sep)))
    cs = triangulate(g)
    sizes = [len(c) for c in cs.perfect_sequence]
    print(f"chordal extension: fill edges {len(cs.fill_edges)}, cliques {len(sizes)}, "
          f"largest clique {max(sizes, default=0)}")
    return EXIT_OK


def cmd_probe(args) -> int:
    for dim, t in inverse_timing_probe(args.dims, reps=args.reps, out=args.out):
        print(f"{dim}\t{t:.6e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ggmips", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a Gaussian graphical model by IPS")
    f.add_argument("--graph", required=True)
    src = f.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV of samples (rows)")
    f.add_argument("--header", action="store_true",
                   help="first row of --data holds (possibly numeric) vertex labels")
    src.add_argument("--scatter", help="CSV of a precomputed scatter matrix")
    f.add_argument("--n", type=int, help="sample size for --scatter")
    f.add_argument("--mode", choices=MODES, default="localized")
    f.add_argument("--tol", type=float, default=1e-6)
    f.add_argument("--max-sweeps", type=int, default=10000)
    f.add_argument("--out", required=True, help="output prefix for .csv and .json")
    f.set_defaults(func=cmd_fit)

    b = sub.add_parser("bench", help="per-step cost of both modes on cycle models")
    b.add_argument("--dims", type=_int_list, required=True)
    b.add_argument("--reps", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--modes", type=_str_list, default=list(MODES))
    b.add_argument("--tol", type=float, default=1e-6)
    b.add_argument("--max-sweeps", type=int, default=10000)
    b.add_argument("--out", help="CSV output file")
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("decompose", help="prime parts and chordal extension of a graph")
    d.add_argument("--graph", required=True)
    d.set_defaults(func=cmd_decompose)

    q = sub.add_parser("probe-inverse", help="time dense PD inversion per dimension")
    q.add_argument("--dims", type=_int_list, required=True)
    q.add_argument("--reps", type=int, default=5)
    q.add_argument("--out", help="CSV output file")
    q.set_defaults(func=cmd_probe)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which is reserved here
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NotPositiveDefiniteError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
