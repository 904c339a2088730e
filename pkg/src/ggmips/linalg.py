"""Dense symmetric matrices indexed by vertex labels.

Everything here works on small dense blocks: clique margins, separator
margins and the frontier of the localized elimination.  Results of
symmetric operations are mirrored from the lower triangle so symmetry
holds bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

# pivot threshold relative to the largest diagonal entry
PD_RTOL = 1e-12


class NotPositiveDefiniteError(ArithmeticError):
    """A factorization or elimination hit a non-positive pivot.

    ``pivot`` is the offending index (a label when the matrix carried
    labels, else a position).
    """

    def __init__(self, message: str, pivot=None):
        super().__init__(message)
        self.pivot = pivot


@dataclass
class Flops:
    """Counters for scalar floating point operations."""

    mults: int = 0
    divs: int = 0
    subs: int = 0
    adds: int = 0

    def __iadd__(self, other: "Flops") -> "Flops":
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def __add__(self, other: "Flops") -> "Flops":
        out = Flops(**self.as_dict())
        out += other
        return out

    @property
    def total(self) -> int:
        return self.mults + self.divs + self.subs + self.adds

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class SymMatrix:
    """Symmetric matrix whose rows and columns are named by vertex labels.

    The upper triangle of ``values`` is discarded and rebuilt from the
    lower one, and the stored array is read-only.
    """

    __slots__ = ("_values", "_labels", "_pos")

    def __init__(self, values, labels: Sequence | None = None):
        a = np.array(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        labels = tuple(range(1, a.shape[0] + 1)) if labels is None else tuple(labels)
        if len(labels) != a.shape[0]:
            raise ValueError("labels length does not match dimension")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        a = mirror_lower(a)
        a.setflags(write=False)
        self._values = a
        self._labels = labels
        self._pos = {v: i for i, v in enumerate(labels)}

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def labels(self) -> tuple:
        return self._labels

    @property
    def dim(self) -> int:
        return len(self._labels)

    def positions(self, labels: Iterable) -> list[int]:
        try:
            return [self._pos[v] for v in labels]
        except KeyError as exc:
            raise KeyError(f"unknown label {exc.args[0]!r}") from None

    def __array__(self, dtype=None, copy=None):
        return self._values if dtype is None else self._values.astype(dtype)

    def __getitem__(self, key):
        i, j = key
        return self._values[self._pos[i], self._pos[j]]

    def __repr__(self) -> str:
        return f"SymMatrix(labels={list(self._labels)},\n{self._values!r})"


def mirror_lower(a: np.ndarray) -> np.ndarray:
    """Copy of ``a`` with the strict upper triangle replaced by the lower."""
    a = np.array(a, dtype=float)
    iu = np.triu_indices(a.shape[0], 1)
    a[iu] = a.T[iu]
    return a


def _positions(a, idx) -> list[int]:
    if isinstance(a, SymMatrix):
        return a.positions(idx)
    return list(idx)


def submatrix(a, rows: Sequence, cols: Sequence) -> np.ndarray:
    """The block ``A[rows, cols]`` in the given orders.

    ``rows`` and ``cols`` are labels for a :class:`SymMatrix` and positions
    for a plain array.
    """
    r, c = _positions(a, rows), _positions(a, cols)
    return np.asarray(a)[np.ix_(r, c)].copy()


def embed(block, rows: Sequence, cols: Sequence, labels: Sequence) -> np.ndarray:
    """Zero-padded ``|labels| x |labels|`` array holding ``block`` at (rows, cols)."""
    block = np.atleast_2d(np.asarray(block, dtype=float))
    if block.shape != (len(rows), len(cols)):
        raise ValueError(f"block shape {block.shape} does not match "
                         f"index sets of sizes ({len(rows)}, {len(cols)})")
    pos = {v: i for i, v in enumerate(labels)}
    try:
        r = [pos[v] for v in rows]
        c = [pos[v] for v in cols]
    except KeyError as exc:
        raise KeyError(f"unknown label {exc.args[0]!r}") from None
    out = np.zeros((len(labels), len(labels)))
    out[np.ix_(r, c)] = block
    return out


def chol_factor(a) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefiniteError
        When a pivot falls below ``PD_RTOL`` times the largest diagonal
        entry; ``pivot`` names the failing row.
    """
    labels = a.labels if isinstance(a, SymMatrix) else None
    l = np.tril(np.array(a, dtype=float))
    n = l.shape[0]
    if n == 0:
        return l
    floor = PD_RTOL * max(np.max(np.abs(np.diag(l))), np.finfo(float).tiny)
    for j in range(n):
        d = l[j, j] - l[j, :j] @ l[j, :j]
        if not d > floor:
            where = labels[j] if labels else j
            raise NotPositiveDefiniteError(f"non-positive pivot at {where!r}", where)
        l[j, j] = np.sqrt(d)
        if j + 1 < n:
            l[j + 1:, j] = (l[j + 1:, j] - l[j + 1:, :j] @ l[j, :j]) / l[j, j]
    return l


def _lapack_chol(a: np.ndarray, labels=None) -> np.ndarray:
    try:
        l = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        chol_factor(SymMatrix(a, labels) if labels else a)  # raises with pivot
        raise
    d = np.diag(l) ** 2
    floor = PD_RTOL * max(np.max(np.abs(np.diag(a))), np.finfo(float).tiny)
    bad = np.flatnonzero(~(d > floor))
    if bad.size:
        j = int(bad[0])
        where = labels[j] if labels else j
        raise NotPositiveDefiniteError(f"non-positive pivot at {where!r}", where)
    return l


def is_pd(a) -> bool:
    try:
        chol_factor(a)
    except NotPositiveDefiniteError:
        return False
    return True


def inverse_pd(a):
    """Inverse of a positive definite matrix via a Cholesky factorization.

    Returns a :class:`SymMatrix` with the same labels when given one, a
    plain array otherwise.
    """
    labels = a.labels if isinstance(a, SymMatrix) else None
    arr = np.asarray(a, dtype=float)
    if arr.size == 0:
        inv = np.zeros_like(arr)
    else:
        l = _lapack_chol(arr, labels)
        inv = mirror_lower(scipy.linalg.cho_solve((l, True), np.eye(arr.shape[0]),
                                                  check_finite=False))
    return SymMatrix(inv, labels) if labels is not None else inv


def schur_inverse_block(a, d1: Sequence) -> np.ndarray:
    """``((A^-1)[d1, d1])^-1`` as the Schur complement of the rest of ``A``.

    Evaluates ``A11 - A12 A22^-1 A21`` with a Cholesky solve on the
    complementary block; the full inverse is never formed.
    """
    arr = np.asarray(a, dtype=float)
    i1 = _positions(a, d1)
    chosen = set(i1)
    i2 = [i for i in range(arr.shape[0]) if i not in chosen]
    a11 = arr[np.ix_(i1, i1)]
    if not i2:
        return mirror_lower(a11)
    a12 = arr[np.ix_(i1, i2)]
    a22 = arr[np.ix_(i2, i2)]
    labels = [a.labels[i] for i in i2] if isinstance(a, SymMatrix) else i2
    l = _lapack_chol(a22, labels)
    y = scipy.linalg.solve_triangular(l, a12.T, lower=True, check_finite=False)
    return mirror_lower(a11 - y.T @ y)


def rank1_downdate(a: np.ndarray, col: np.ndarray, pivot: float,
                   flops: Flops | None = None, out: np.ndarray | None = None) -> np.ndarray:
    """``a - col col' / pivot``, the elimination of one vertex.

    Counts ``|Q|`` divisions, ``|Q|^2`` multiplications and ``|Q|^2``
    subtractions into ``flops`` when given.  ``out`` may alias ``a``.
    """
    if not pivot > 0:
        raise NotPositiveDefiniteError(f"non-positive elimination pivot {pivot!r}")
    col = np.asarray(col, dtype=float).ravel()
    q = col.size
    scaled = col / pivot
    res = np.subtract(a, np.outer(scaled, col), out=out)
    if q > 1:
        iu = _upper(q)
        res[iu] = res.T[iu]
    if flops is not None:
        flops.divs += q
        flops.mults += q * q
        flops.subs += q * q
    return res


@lru_cache(maxsize=64)
def _upper(q: int):
    return np.triu_indices(q, 1)


# flop counts of the dense kernels used by the direct update

def cholesky_flops(d: int) -> Flops:
    """Column Cholesky of a ``d x d`` block; square roots are booked as divisions."""
    inner = d * (d - 1) * (d + 1) // 6  # sum over j of j*(d-j)
    return Flops(mults=inner, subs=inner, divs=d * (d - 1) // 2 + d)


def triangular_solve_flops(d: int, ncols: int) -> Flops:
    tri = d * (d - 1) // 2
    return Flops(mults=ncols * tri, subs=ncols * tri, divs=ncols * d)


def gram_flops(d: int, c: int) -> Flops:
    """``Y' Y`` for ``Y`` of shape ``d x c``."""
    return Flops(mults=c * c * d, adds=c * c * max(d - 1, 0))
