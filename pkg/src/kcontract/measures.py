"""Matrix measures (logarithmic norms) induced by the 1, 2 and infinity norms."""
from __future__ import annotations

import math

import numpy as np

from .compound import as_matrix

NORMS = (1, 2, math.inf)


def parse_norm(p) -> float:
    """Normalize a norm tag to ``1``, ``2`` or ``math.inf``.

    Accepts ints, floats and the strings ``"1"``, ``"2"``, ``"inf"``.
    """
    if isinstance(p, str):
        key = p.strip().lower()
        table = {"1": 1, "2": 2, "inf": math.inf, "infinity": math.inf, "oo": math.inf}
        if key not in table:
            raise ValueError(f"unsupported norm {p!r}; use 1, 2 or inf")
        return table[key]
    if p in NORMS:
        return math.inf if p == math.inf else int(p)
    raise ValueError(f"unsupported norm {p!r}; use 1, 2 or inf")


def norm_label(p) -> str:
    p = parse_norm(p)
    return "inf" if p == math.inf else str(p)


def _square(a) -> np.ndarray:
    a = np.asarray(as_matrix(a, "A"), dtype=float)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"A must be square, got shape {a.shape}")
    return a


def measure(a, p) -> float:
    """Matrix measure ``mu_p(A)`` for p in {1, 2, inf}."""
    p = parse_norm(p)
    a = _square(a)
    if p == 2:
        return float(np.linalg.eigvalsh((a + a.T) / 2)[-1])
    if p == 1:
        a = a.T
    off = np.abs(a).sum(axis=1) - np.abs(np.diag(a))
    return float(np.max(np.diag(a) + off))


def _pair_terms(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # row-sum form; p=1 callers pass the transpose
    n = a.shape[0]
    d = np.diag(a)
    off = np.abs(a).sum(axis=1) - np.abs(d)
    i, j = np.triu_indices(n, k=1)
    # sum over k != i, j of |a_ik| + |a_jk|
    values = d[i] + d[j] + off[i] - np.abs(a[i, j]) + off[j] - np.abs(a[j, i])
    return values, i, j


def measure_of_second_compound(a, p) -> float:
    """``mu_p(A^[2])`` from closed forms, without building ``A^[2]``.

    For p = inf this is the max over pairs i < j of
    ``a_ii + a_jj + sum_{k != i, j} |a_ik| + |a_jk|``; p = 1 is the same on
    columns; p = 2 is the sum of the two largest eigenvalues of the
    symmetric part.
    """
    p = parse_norm(p)
    a = _square(a)
    if a.shape[0] < 2:
        raise ValueError("second compound needs n >= 2")
    if p == 2:
        lam = np.linalg.eigvalsh((a + a.T) / 2)
        return float(lam[-1] + lam[-2])
    values, _, _ = _pair_terms(a.T if p == 1 else a)
    return float(values.max())


def worst_pair(a, p) -> tuple[int, int] | None:
    """1-based pair (i, j) attaining ``mu_p(A^[2])`` for p in {1, inf}.

    Ties go to the lexicographically smallest pair. Returns ``None`` for
    p = 2, where the value is spectral and no single pair is responsible.
    """
    p = parse_norm(p)
    a = _square(a)
    if p == 2:
        return None
    values, i, j = _pair_terms(a.T if p == 1 else a)
    best = int(np.argmax(values))  # first maximum == lexicographic tie-break
    return int(i[best]) + 1, int(j[best]) + 1
