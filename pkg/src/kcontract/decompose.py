"""Orthogonal splittings R^n = span(U) + span(V) that turn a field into a cascade.

If ``V^T J(t, x) U`` vanishes on the domain, then ``y1 = V^T x`` evolves on
its own and ``y2 = U^T x`` is driven by ``V y1``:

    y1' = V^T f(t, V y1)
    y2' = U^T f(t, U y2 + V y1)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .certificate import Certificate, SamplingGrid, sample_points, sup_over_samples, time_window
from .model import BoxDomain, SerialPair, VectorFieldModel

PAIR_TOL = 1e-10
REDUCIBILITY_TOL = 1e-8


class ReducibilityError(RuntimeError):
    """The reducibility gate failed, so the cascade form does not apply."""


@dataclass(frozen=True)
class SubspacePair:
    """Orthonormal bases ``U`` (n x p) and ``V`` (n x q) with p + q = n."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        u = np.array(self.U, dtype=float)
        v = np.array(self.V, dtype=float)
        # a bare vector is a single basis column
        u = u[:, None] if u.ndim == 1 else u
        v = v[:, None] if v.ndim == 1 else v
        if u.ndim != 2 or v.ndim != 2:
            raise ValueError("U and V must be matrices")
        if u.shape[0] != v.shape[0]:
            raise ValueError(f"U has {u.shape[0]} rows but V has {v.shape[0]}")
        if u.shape[1] < 1 or v.shape[1] < 1 or u.shape[1] + v.shape[1] != u.shape[0]:
            raise ValueError(
                f"need p, q >= 1 with p + q = n; got p={u.shape[1]}, q={v.shape[1]}, n={u.shape[0]}"
            )
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("U and V must be finite")
        u.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "V", v)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def p_dim(self) -> int:
        return self.U.shape[1]

    @property
    def q_dim(self) -> int:
        return self.V.shape[1]

    @property
    def T(self) -> np.ndarray:
        """Orthogonal change of coordinates ``[V^T; U^T]``."""
        return np.vstack([self.V.T, self.U.T])

    def to_dict(self) -> dict:
        return {
            "U": {"rows": self.n, "cols": self.p_dim, "data": self.U.tolist()},
            "V": {"rows": self.n, "cols": self.q_dim, "data": self.V.tolist()},
        }


def validate_pair(pair: SubspacePair, tol: float = PAIR_TOL) -> tuple[bool, dict]:
    """Frobenius residuals of the four orthogonality identities."""
    U, V = pair.U, pair.V
    res = {
        "UtU_minus_I": float(np.linalg.norm(U.T @ U - np.eye(pair.p_dim))),
        "VtV_minus_I": float(np.linalg.norm(V.T @ V - np.eye(pair.q_dim))),
        "UtV": float(np.linalg.norm(U.T @ V)),
        "UUt_plus_VVt_minus_I": float(np.linalg.norm(U @ U.T + V @ V.T - np.eye(pair.n))),
    }
    return all(r <= tol for r in res.values()), res


def _require_valid(pair: SubspacePair) -> None:
    ok, res = validate_pair(pair)
    if not ok:
        raise ValueError(f"U, V do not form an orthogonal splitting: {res}")


def check_reducibility(
    model: VectorFieldModel,
    pair: SubspacePair,
    grid: Optional[SamplingGrid] = None,
    tol: float = REDUCIBILITY_TOL,
) -> Certificate:
    """Sampled check of ``V^T J(t, x) U == 0``.

    The bound is the largest absolute entry of ``V^T J U`` over the
    samples. The equivalent value form ``V^T f(t, x) == V^T f(t, V V^T x)``
    is evaluated on the same samples and reported in ``details``.
    """
    if pair.n != model.n:
        raise ValueError(f"pair is for dimension {pair.n}, model has {model.n}")
    _require_valid(pair)
    grid = grid or SamplingGrid()
    U, V = pair.U, pair.V
    P = V @ V.T
    times, states = sample_points(model, grid)

    bound, t_w, x_w = sup_over_samples(
        times, states, lambda t, x: np.max(np.abs(V.T @ model.jacobian(t, x) @ U))
    )
    value_res, _, _ = sup_over_samples(
        times, states, lambda t, x: np.max(np.abs(V.T @ (model.eval(t, x) - model.eval(t, P @ x))))
    )
    details = {"value_form_residual": value_res, "tolerance": tol}
    if model.time_varying:
        details["t_window"] = list(time_window(model, grid))
    return Certificate.from_bound(
        "reducibility", bound, t_w, x_w, len(times), "inf", tol, model.name,
        details=details, passed=bound <= tol,
    )


def _linear_image(model: VectorFieldModel, m: np.ndarray) -> BoxDomain:
    return model.domain.image_bounds(m)


def serial_reduce(
    model: VectorFieldModel,
    pair: SubspacePair,
    grid: Optional[SamplingGrid] = None,
    certificate: Optional[Certificate] = None,
) -> SerialPair:
    """Cascade form: upstream ``y1 = V^T x`` feeds ``V y1`` into ``y2 = U^T x``.

    Runs :func:`check_reducibility` first (or uses ``certificate``) and
    raises :class:`ReducibilityError` when it fails.
    """
    cert = certificate or check_reducibility(model, pair, grid)
    if cert.kind != "reducibility" or not cert.passed:
        raise ReducibilityError(
            f"{model.name}: reducibility check failed (max |V^T J U| = {cert.bound:.3e})"
        )
    U, V = pair.U, pair.V

    upstream = VectorFieldModel(
        name=f"{model.name}:V",
        n=pair.q_dim,
        f=lambda t, y: V.T @ model.eval(t, V @ y),
        jac=lambda t, y: V.T @ model.jacobian(t, V @ y) @ V,
        domain=_linear_image(model, V.T),
        time_varying=model.time_varying,
        period=model.period,
    )
    downstream = VectorFieldModel(
        name=f"{model.name}:U",
        n=pair.p_dim,
        f=lambda t, y, u: U.T @ model.eval(t, U @ y + u),
        jac=lambda t, y, u: U.T @ model.jacobian(t, U @ y + u) @ U,
        input_jac=lambda t, y, u: U.T @ model.jacobian(t, U @ y + u),
        domain=_linear_image(model, U.T),
        input_arity=pair.n,
        input_domain=_linear_image(model, V @ V.T),
        time_varying=model.time_varying,
        period=model.period,
    )
    return SerialPair(
        upstream=upstream,
        downstream=downstream,
        output_map=lambda y: V @ y,
        output_jac=lambda y: V,
        name=f"{model.name}:cascade",
    )


def reconstruct(cascade_model: VectorFieldModel, pair: SubspacePair) -> Callable:
    """Pull a composed cascade back to the original coordinates.

    Returns ``g(t, x) = T^T F(t, T x)`` where ``F`` is the composed cascade
    field and ``T = [V^T; U^T]``.
    """
    T = pair.T
    return lambda t, x: T.T @ cascade_model.eval(t, T @ np.asarray(x, dtype=float))


def _complete(basis: np.ndarray) -> np.ndarray:
    # Householder QR; trailing columns of Q span the orthogonal complement
    q, _ = np.linalg.qr(basis, mode="complete")
    return q[:, basis.shape[1]:]


def pair_from_first_integral(c) -> SubspacePair:
    """Splitting for a linear first integral ``c^T x``: ``V = c / |c|``."""
    c = np.asarray(c, dtype=float).reshape(-1)
    norm = np.linalg.norm(c)
    if c.size < 2:
        raise ValueError("need n >= 2 for a nontrivial splitting")
    if not np.isfinite(norm) or norm == 0:
        raise ValueError("first-integral direction must be a nonzero finite vector")
    v = (c / norm)[:, None]
    return SubspacePair(U=_complete(v), V=v)


def pair_from_invariant_basis(basis) -> SubspacePair:
    """Splitting with ``U`` an orthonormal basis of the given column span."""
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.shape[0] < basis.shape[1]:
        basis = basis.T
    q, r = np.linalg.qr(basis)
    if np.min(np.abs(np.diag(r))) <= 1e-12 * max(1.0, np.abs(r).max()):
        raise ValueError("basis vectors are linearly dependent")
    return SubspacePair(U=q, V=_complete(q))


class DefectiveEigenproblemError(np.linalg.LinAlgError):
    pass


def lti_invariant_pair(a, prefer: str = "auto", tol: float = 1e-8) -> SubspacePair:
    """Invariant splitting for ``x' = A x`` built from an eigenvector.

    The eigenvalue with the largest real part is used (a real one wins a
    tie): a real eigenvalue gives a one-dimensional ``U`` spanned by its
    eigenvector, a complex pair gives the real plane ``span(Re u, Im u)``.
    ``prefer="real"`` or ``"complex"`` restricts the search to one kind.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("A must be square")
    if n < 3:
        raise ValueError("need n >= 3")
    if prefer not in ("auto", "real", "complex"):
        raise ValueError("prefer must be 'auto', 'real' or 'complex'")
    lam, vecs = np.linalg.eig(a)
    scale = max(1.0, np.abs(lam).max())
    is_real = np.abs(lam.imag) <= 1e-10 * scale
    candidates = [
        i for i in range(n)
        if (prefer == "auto")
        or (prefer == "real" and is_real[i])
        or (prefer == "complex" and not is_real[i] and lam[i].imag > 0)
    ]
    if not candidates:
        raise ValueError(f"A has no {prefer} eigenvalue")
    i = max(candidates, key=lambda j: (round(lam[j].real / scale, 12), bool(is_real[j])))
    u = vecs[:, i]
    if is_real[i]:
        k = np.argmax(np.abs(u))
        basis = (u * np.conj(u[k]) / abs(u[k])).real[:, None]
    else:
        basis = np.column_stack([u.real, u.imag])
    pair = pair_from_invariant_basis(basis)
    residual = np.linalg.norm(a @ pair.U - pair.U @ (pair.U.T @ a @ pair.U))
    if residual > tol * max(1.0, np.linalg.norm(a)):
        raise DefectiveEigenproblemError(
            f"eigenvector basis is not numerically invariant (residual {residual:.2e})"
        )
    return pair


def lti_blocks(a, pair: SubspacePair) -> dict:
    """Blocks of ``T A T^T`` for ``T = [V^T; U^T]``."""
    a = np.asarray(a, dtype=float)
    U, V = pair.U, pair.V
    return {
        "upstream": V.T @ a @ V,
        "downstream": U.T @ a @ U,
        "input": U.T @ a @ V,
        "residual": V.T @ a @ U,
    }


def feedback_model(g: Callable, h: Callable, M, m: int, domain: Optional[BoxDomain] = None,
                   name: str = "feedback") -> VectorFieldModel:
    """The (n + m)-dimensional system ``x' = g(z)``, ``z' = h(M x, z)``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[1]

    def f(t, w):
        x, z = w[:n], w[n:]
        return np.concatenate([np.asarray(g(z), dtype=float), np.asarray(h(M @ x, z), dtype=float)])

    return VectorFieldModel(name=name, n=n + m, f=f, domain=domain or BoxDomain.cube(n + m))


def feedback_form_reduce(g: Callable, h: Callable, M, pair: SubspacePair, m: int,
                         domain: Optional[BoxDomain] = None, tol: float = PAIR_TOL) -> SerialPair:
    """Reduce ``x' = g(z)``, ``z' = h(M x, z)`` when ``M U = 0``.

    Upstream state is ``(y1, y2) = (V^T x, z)`` with
    ``y1' = V^T g(y2)``, ``y2' = h(M V y1, y2)`` and output ``g(y2)``;
    the downstream state ``y3 = U^T x`` obeys ``y3' = U^T u``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _require_valid(pair)
    n = pair.n
    if M.shape[1] != n:
        raise ValueError(f"M has {M.shape[1]} columns, expected {n}")
    mu = np.max(np.abs(M @ pair.U))
    if mu > tol:
        raise ReducibilityError(f"M U must vanish (max entry {mu:.3e})")
    U, V = pair.U, pair.V
    q = pair.q_dim
    full = domain or BoxDomain.cube(n + m)
    lo, hi = full.lower, full.upper
    x_box = BoxDomain(lo[:n], hi[:n])
    up_box = BoxDomain(
        np.concatenate([x_box.image_bounds(V.T).lower, lo[n:]]),
        np.concatenate([x_box.image_bounds(V.T).upper, hi[n:]]),
    )

    def f_up(t, w):
        y1, y2 = w[:q], w[q:]
        return np.concatenate([V.T @ np.asarray(g(y2), dtype=float),
                               np.asarray(h(M @ (V @ y1), y2), dtype=float)])

    upstream = VectorFieldModel(name="feedback:upstream", n=q + m, f=f_up, domain=up_box)
    downstream = VectorFieldModel(
        name="feedback:downstream",
        n=pair.p_dim,
        f=lambda t, y, u: U.T @ u,
        jac=lambda t, y, u: np.zeros((pair.p_dim, pair.p_dim)),
        input_jac=lambda t, y, u: U.T,
        input_arity=n,
        domain=x_box.image_bounds(U.T),
    )
    return SerialPair(
        upstream=upstream,
        downstream=downstream,
        output_map=lambda w: np.asarray(g(w[q:]), dtype=float),
        name="feedback:cascade",
    )


def feedback_transform(pair: SubspacePair, m: int) -> np.ndarray:
    """Orthogonal map ``(x, z) -> (V^T x, z, U^T x)``."""
    n, q, p = pair.n, pair.q_dim, pair.p_dim
    T = np.zeros((n + m, n + m))
    T[:q, :n] = pair.V.T
    T[q:q + m, n:] = np.eye(m)
    T[q + m:, :n] = pair.U.T
    return T
