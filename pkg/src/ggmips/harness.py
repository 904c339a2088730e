"""Wishart data, cycle-model fixtures and the per-step cost benchmark.

Random streams come from numpy's PCG64 bit generator.  Standard normals
are produced from its uniforms by the Box-Muller transform rather than
numpy's ziggurat sampler, so a seed pins the exact stream independently
of the numpy sampling routines.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .graph import cycle_graph
from .ips import MODES, FitResult, IpsConfig, fit
from .linalg import Flops, SymMatrix, inverse_pd, is_pd
from .model import ModelSpec, SuffStats

log = logging.getLogger(__name__)

BENCH_COLUMNS = (
    "dim", "mode", "reps", "mean_step_seconds", "mean_step_flops_mult",
    "mean_step_flops_div", "mean_step_flops_sub", "mean_sweeps", "converged_fraction",
)


def _normals(rng: np.random.Generator, size: int) -> np.ndarray:
    half = (size + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    theta = 2.0 * np.pi * u2
    return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:size]


def _bartlett(rng: np.random.Generator, dim: int, dof: int) -> np.ndarray:
    a = np.zeros((dim, dim))
    # chi-square with integer degrees of freedom as a sum of squared normals
    for i in range(dim):
        k = dof - i
        a[i, i] = np.sqrt(np.sum(_normals(rng, k) ** 2)) if k > 0 else 0.0
    il = np.tril_indices(dim, -1)
    a[il] = _normals(rng, len(il[0]))
    return a @ a.T


def wishart_sample(dim: int, dof: int, seed, return_redraws: bool = False):
    """Draw ``W ~ Wishart(I_dim, dof)`` by the Bartlett construction.

    ``seed`` is an int or a sequence of ints.  Draws that fail the
    positive definiteness check (only possible when ``dof < dim`` or by
    numerical accident) are repeated from the continuing stream when
    ``dof >= dim``.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    if int(dof) != dof or dof < 1:
        raise ValueError("dof must be a positive integer")
    rng = np.random.Generator(np.random.PCG64(seed))
    redraws = 0
    w = _bartlett(rng, dim, int(dof))
    while dof >= dim and not is_pd(w):
        redraws += 1
        w = _bartlett(rng, dim, int(dof))
    out = SymMatrix(w)
    return (out, redraws) if return_redraws else out


def cycle_model(dim: int) -> ModelSpec:
    """The model whose cliques are ``{1,2}, {2,3}, ..., {dim,1}``."""
    if dim < 3:
        raise ValueError("cycle model needs dim >= 3")
    return ModelSpec(cycle_graph(dim))


@dataclass(frozen=True)
class BenchSpec:
    dims: tuple
    replications: int = 1
    seed: int = 0
    dof: int | None = None  # None means dof = dim
    modes: tuple = MODES
    tol: float = 1e-6
    max_sweeps: int = 10000

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.dof is not None and self.dof < max(self.dims):
            raise ValueError("dof must be at least every requested dim")
        bad = set(self.modes) - set(MODES)
        if bad:
            raise ValueError(f"unknown modes {sorted(bad)}")

    def dof_for(self, dim: int) -> int:
        return dim if self.dof is None else self.dof


@dataclass
class BenchRecord:
    dim: int
    mode: str
    reps: int
    mean_step_seconds: float
    mean_step_flops_mult: float
    mean_step_flops_div: float
    mean_step_flops_sub: float
    mean_sweeps: float
    converged_fraction: float
    mean_step_flops_add: float = 0.0
    failures: int = 0

    @property
    def mean_step_flops(self) -> float:
        return (self.mean_step_flops_mult + self.mean_step_flops_div
                + self.mean_step_flops_sub + self.mean_step_flops_add)


@dataclass
class BenchCell:
    dim: int
    mode: str
    fits: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def replication_seed(seed: int, dim: int, rep: int) -> list[int]:
    return [seed, dim, rep]


def benchmark_fits(spec: BenchSpec) -> list[BenchCell]:
    """Run every (dim, mode, replication) fit; both modes see the same W."""
    cells = []
    for dim in spec.dims:
        model = cycle_model(dim)
        dof = spec.dof_for(dim)
        by_mode = {m: BenchCell(dim, m) for m in spec.modes}
        for rep in range(spec.replications):
            w = wishart_sample(dim, dof, replication_seed(spec.seed, dim, rep))
            stats = SuffStats(dof, w)
            for mode in spec.modes:
                cfg = IpsConfig(max_sweeps=spec.max_sweeps, tol=spec.tol, mode=mode)
                try:
                    by_mode[mode].fits.append(fit(model, stats, cfg))
                except (ArithmeticError, ValueError) as exc:
                    log.warning("dim %d mode %s rep %d failed: %s", dim, mode, rep, exc)
                    by_mode[mode].failures.append((rep, str(exc)))
        cells.extend(by_mode.values())
    return cells


def _record(cell: BenchCell, reps: int) -> BenchRecord:
    fits: list[FitResult] = cell.fits
    steps = sum(f.steps for f in fits)
    flops = Flops()
    for f in fits:
        flops += f.flops
    seconds = sum(f.wall_time_per_step * f.steps for f in fits)
    per = (lambda x: x / steps) if steps else (lambda x: 0.0)
    return BenchRecord(
        dim=cell.dim,
        mode=cell.mode,
        reps=reps,
        mean_step_seconds=per(seconds),
        mean_step_flops_mult=per(flops.mults),
        mean_step_flops_div=per(flops.divs),
        mean_step_flops_sub=per(flops.subs),
        mean_step_flops_add=per(flops.adds),
        mean_sweeps=float(np.mean([f.sweeps for f in fits])) if fits else 0.0,
        converged_fraction=sum(f.converged for f in fits) / reps,
        failures=len(cell.failures),
    )


def run_benchmark(spec: BenchSpec, out=None) -> list[BenchRecord]:
    """One record per (dim, mode); optionally written to CSV at ``out``."""
    records = [_record(c, spec.replications) for c in benchmark_fits(spec)]
    if out is not None:
        write_bench_csv(out, records)
    return records


def write_bench_csv(path, records: Sequence[BenchRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BENCH_COLUMNS)
        for r in records:
            row = asdict(r)
            w.writerow([row[c] if isinstance(row[c], (int, str)) else format(row[c], ".17g")
                        for c in BENCH_COLUMNS])


def read_bench_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        rec = {}
        for k, v in row.items():
            rec[k] = v if k == "mode" else (int(v) if k in ("dim", "reps") else float(v))
        out.append(rec)
    return out


def inverse_timing_probe(dims: Sequence[int], reps: int = 5, seed: int = 0,
                         out=None) -> list[tuple[int, float]]:
    """Median wall time of :func:`inverse_pd` on random PD matrices per dim."""
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = []
    for dim in dims:
        m = rng.standard_normal((dim, dim))
        a = m @ m.T + dim * np.eye(dim)
        inverse_pd(a)  # warm-up
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            inverse_pd(a)
            times.append(time.perf_counter() - t0)
        rows.append((int(dim), float(np.median(times))))
    if out is not None:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("dim", "seconds"))
            for d, t in rows:
                w.writerow((d, format(t, ".17g")))
    return rows


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
