"""Multiplicative and additive compound matrices.

Index subsets are 1-based tuples in lexicographic order, so ``(1, 3)``
labels the minor built from rows/columns one and three. Internally the
arrays are 0-based as usual.

Both compounds accept ``dtype=object`` arrays holding
:class:`fractions.Fraction` entries; the additive compound is then exact,
and so is the multiplicative compound for ``k <= 3``.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

MAX_DIMENSION = 16


class CapacityError(ValueError):
    """Raised when a compound would exceed the supported dimension."""


def lex_subsets(n: int, k: int) -> list[tuple[int, ...]]:
    """All k-subsets of {1, ..., n} in lexicographic order.

    >>> lex_subsets(3, 2)
    [(1, 2), (1, 3), (2, 3)]
    """
    n, k = int(n), int(k)
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    return list(itertools.combinations(range(1, n + 1), k))


@lru_cache(maxsize=256)
def _subsets0(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=256)
def _subset_index(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {s: i for i, s in enumerate(_subsets0(n, k))}


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate a 2-D finite matrix. Object (Fraction) arrays are kept as is."""
    arr = np.asarray(a)
    if arr.dtype != object:
        arr = np.asarray(arr, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if arr.dtype == object:
        finite = all(math.isfinite(float(v)) for v in arr.flat)
    else:
        finite = bool(np.all(np.isfinite(arr)))
    if not finite:
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _check_capacity(*dims: int) -> None:
    if max(dims) > MAX_DIMENSION:
        raise CapacityError(
            f"compounds are supported up to dimension {MAX_DIMENSION}, got {max(dims)}"
        )


def _det(m: np.ndarray):
    k = m.shape[0]
    if k == 1:
        return m[0, 0]
    if k == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if k == 3:
        return (
            m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
        )
    # LAPACK getrf: LU with partial pivoting
    return np.linalg.det(np.asarray(m, dtype=float))


def mult_compound(c, k: int) -> np.ndarray:
    """k-th multiplicative compound: all k x k minors of ``c`` in lex order.

    Parameters
    ----------
    c : array_like, shape (n, m)
    k : int
        ``1 <= k <= min(n, m)``.

    Returns
    -------
    ndarray, shape (binom(n, k), binom(m, k))
    """
    c = as_matrix(c, "C")
    n, m = c.shape
    k = int(k)
    if not 1 <= k <= min(n, m):
        raise ValueError(f"k must satisfy 1 <= k <= min(n, m)={min(n, m)}, got {k}")
    _check_capacity(n, m)
    rows, cols = _subsets0(n, k), _subsets0(m, k)
    exact = c.dtype == object and k <= 3
    out = np.empty((len(rows), len(cols)), dtype=object if exact else float)
    for i, a in enumerate(rows):
        block = c[list(a), :]
        for j, b in enumerate(cols):
            out[i, j] = _det(block[:, list(b)])
    return out


def add_compound(a, k: int) -> np.ndarray:
    """k-th additive compound, ``d/de (I + e A)^(k)`` at ``e = 0``.

    Built entrywise: the diagonal entry for a subset is the sum of the
    corresponding diagonal entries of ``A``; an off-diagonal entry is
    ``(-1)**(s + t) * a[alpha_s, beta_t]`` when the two subsets differ
    only in position ``s`` of the row subset and ``t`` of the column
    subset; everything else is zero.
    """
    a = as_matrix(a, "A")
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError(f"A must be square, got shape {a.shape}")
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    _check_capacity(n)
    subsets = _subsets0(n, k)
    index = _subset_index(n, k)
    size = len(subsets)
    if a.dtype == object:
        out = np.empty((size, size), dtype=object)
        out.fill(0 * a[0, 0])
    else:
        out = np.zeros((size, size))
    for r, alpha in enumerate(subsets):
        diag = a[alpha[0], alpha[0]]
        for i in alpha[1:]:
            diag = diag + a[i, i]
        out[r, r] = diag
        members = set(alpha)
        for s, i in enumerate(alpha):
            rest = alpha[:s] + alpha[s + 1:]
            for j in range(n):
                if j in members:
                    continue
                beta = tuple(sorted(rest + (j,)))
                t = beta.index(j)
                entry = a[i, j]
                out[r, index[beta]] = entry if (s + t) % 2 == 0 else -entry
    return out


def transform_add_compound(v, a, w, k: int, atol: float = 1e-10) -> np.ndarray:
    """``V^(k) A^[k] W^(k)``, which equals ``(V A W)^[k]`` whenever ``V W = I``."""
    v = as_matrix(v, "V")
    a = as_matrix(a, "A")
    w = as_matrix(w, "W")
    m, n = v.shape
    if a.shape != (n, n) or w.shape != (n, m):
        raise ValueError(
            f"incompatible shapes V{v.shape}, A{a.shape}, W{w.shape}; need m x n, n x n, n x m"
        )
    residual = np.max(np.abs(np.asarray(v @ w, dtype=float) - np.eye(m)))
    if residual > atol:
        raise ValueError(f"V W must equal the identity (max deviation {residual:.3e})")
    return mult_compound(v, k) @ add_compound(a, k) @ mult_compound(w, k)
