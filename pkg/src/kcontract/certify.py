"""Sampled k-contraction certificates, on the full state space or on subspaces.

All bounds are suprema over a finite sample set (see
:class:`~kcontract.certificate.SamplingGrid`), so a passing certificate
says the measure condition holds at every sample, nothing more.
Models with an input are certified for every constant input in their
``input_domain``; the input is sampled jointly with the state.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .certificate import (
    DEFAULT_ETA_MIN,
    Certificate,
    SamplingGrid,
    sample_points,
    sup_over_samples,
    time_window,
)
from .compound import add_compound, mult_compound
from .decompose import ReducibilityError, SubspacePair, check_reducibility
from .measures import measure, measure_of_second_compound, norm_label, parse_norm, worst_pair
from .model import BoxDomain, VectorFieldModel

ORTHONORMAL_TOL = 1e-10


class NormMismatchError(ValueError):
    """Sub-certificates of one pipeline were requested in different norms."""


def _sampling_model(model: VectorFieldModel) -> VectorFieldModel:
    # input models: sample (x, u) jointly over domain x input_domain
    if not model.input_arity:
        return model
    if model.input_domain is None:
        raise ValueError(f"{model.name} takes an input; declare input_domain to certify it")
    box = BoxDomain(
        np.concatenate([model.domain.lower, model.input_domain.lower]),
        np.concatenate([model.domain.upper, model.input_domain.upper]),
    )
    return VectorFieldModel(
        name=model.name, n=model.n + model.input_arity, f=lambda t, x: x, domain=box,
        time_varying=model.time_varying, period=model.period,
    )


def _run(kind, model, grid, p, eta_min, quantity, details=None) -> Certificate:
    """Max of ``quantity(J)`` over Jacobians at the sample points."""
    if eta_min <= 0:
        raise ValueError("eta_min must be positive")
    grid = grid or SamplingGrid()
    sampler = _sampling_model(model)
    times, points = sample_points(sampler, grid)
    n = model.n

    def at(t, xu):
        u = xu[n:] if model.input_arity else None
        return quantity(model.jacobian(t, xu[:n], u))

    bound, t_w, xu_w = sup_over_samples(times, points, at)
    details = dict(details or {})
    if model.time_varying:
        details["t_window"] = list(time_window(model, grid))
    if model.input_arity:
        details["worst_input"] = xu_w[n:].tolist()
    return Certificate.from_bound(
        kind, bound, t_w, xu_w[:n], len(times), p, eta_min, model.name, details=details
    )


def _orthonormal_columns(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    dev = np.max(np.abs(m.T @ m - np.eye(m.shape[1])))
    if dev > ORTHONORMAL_TOL:
        raise ValueError(f"{name} must have orthonormal columns (max deviation {dev:.2e})")
    return m


def certify_k_contraction(
    model: VectorFieldModel,
    k: int,
    p=2,
    grid: Optional[SamplingGrid] = None,
    eta_min: float = DEFAULT_ETA_MIN,
) -> Certificate:
    """Sampled check of ``mu_p(J^[k]) <= -eta_min`` for k in {1, 2}."""
    p = parse_norm(p)
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    if model.n < k:
        raise ValueError(f"model dimension {model.n} is smaller than k={k}")
    if k == 1:
        return _run("k_contraction", model, grid, p, eta_min, lambda j: measure(j, p), {"k": 1})
    cert = _run("k_contraction", model, grid, p, eta_min,
                lambda j: measure_of_second_compound(j, p), {"k": 2})
    w = cert.worst_point
    pair = worst_pair(model.jacobian(w["t"], w["x"], _worst_u(cert)), p)
    if pair is not None:
        cert.details["worst_pair"] = list(pair)
    return cert


def _worst_u(cert: Certificate):
    u = cert.details.get("worst_input")
    return None if u is None else np.asarray(u)


def certify_subspace_2contraction(
    model: VectorFieldModel,
    V,
    p=2,
    grid: Optional[SamplingGrid] = None,
    eta_min: float = DEFAULT_ETA_MIN,
) -> Certificate:
    """Sampled check of ``mu_p((V^T)^(2) J^[2] V^(2)) <= -eta_min``."""
    p = parse_norm(p)
    V = _orthonormal_columns(V, "V")
    if V.shape[0] != model.n:
        raise ValueError(f"V has {V.shape[0]} rows, model dimension is {model.n}")
    if V.shape[1] < 2:
        raise ValueError("V needs at least two columns for a second compound")
    left, right = mult_compound(V.T, 2), mult_compound(V, 2)
    return _run(
        "subspace_2contraction", model, grid, p, eta_min,
        lambda j: measure(left @ add_compound(j, 2) @ right, p),
        {"q": V.shape[1], "V2": right.tolist()},
    )


def certify_subspace_1contraction(
    model: VectorFieldModel,
    U,
    p=2,
    grid: Optional[SamplingGrid] = None,
    eta_min: float = DEFAULT_ETA_MIN,
) -> Certificate:
    """Sampled check of ``mu_p(U^T J U) <= -eta_min``."""
    p = parse_norm(p)
    U = _orthonormal_columns(U, "U")
    if U.shape[0] != model.n:
        raise ValueError(f"U has {U.shape[0]} rows, model dimension is {model.n}")
    return _run(
        "subspace_1contraction", model, grid, p, eta_min,
        lambda j: measure(U.T @ j @ U, p), {"p_dim": U.shape[1]},
    )


def _gate(model, U, V, grid) -> tuple[SubspacePair, Certificate]:
    pair = SubspacePair(U=U, V=V)
    red = check_reducibility(model, pair, grid)
    if not red.passed:
        raise ReducibilityError(
            f"{model.name}: reducibility failed (max |V^T J U| = {red.bound:.3e}); "
            "the subspace conditions say nothing without it"
        )
    return pair, red


def certify_nob(
    model: VectorFieldModel,
    U,
    V,
    p=2,
    grid: Optional[SamplingGrid] = None,
    eta_min: float = DEFAULT_ETA_MIN,
) -> Certificate:
    """No non-trivial periodic solutions, for a time-invariant field.

    Requires a one-dimensional ``U`` with ``J U`` inside ``span(U)`` on the
    domain, plus 2-contraction restricted to ``span(V)``. The reducibility
    check runs first and raises :class:`ReducibilityError` on failure.
    """
    p = parse_norm(p)
    pair, red = _gate(model, U, V, grid)
    if pair.p_dim != 1:
        raise ValueError(f"U must be one-dimensional, got {pair.p_dim} columns")
    sub = certify_subspace_2contraction(model, pair.V, p, grid, eta_min)
    details = {"reducibility": red.to_dict(), "subspace_2contraction": sub.to_dict()}
    if model.time_varying:
        details["warning"] = "time-varying field: the sampled conditions do not imply NOB"
    return Certificate.from_bound(
        "nob", sub.bound, sub.worst_point["t"], sub.worst_point["x"], sub.samples, p, eta_min,
        model.name, details=details,
    )


def certify_convergence(
    model: VectorFieldModel,
    U,
    V,
    p=2,
    grid: Optional[SamplingGrid] = None,
    eta_min: float = DEFAULT_ETA_MIN,
    p_u=None,
) -> Certificate:
    """Every bounded trajectory converges to an equilibrium (time-invariant field).

    Needs reducibility, 2-contraction on ``span(V)`` and 1-contraction on
    ``span(U)``, both in the same norm. Passing ``p_u`` different from
    ``p`` raises :class:`NormMismatchError`: mixed norms are not supported.
    """
    p = parse_norm(p)
    if p_u is not None and parse_norm(p_u) != p:
        raise NormMismatchError(
            f"both subspace conditions must use one norm; got {norm_label(p)} and {norm_label(p_u)}"
        )
    pair, red = _gate(model, U, V, grid)
    c2 = certify_subspace_2contraction(model, pair.V, p, grid, eta_min)
    c1 = certify_subspace_1contraction(model, pair.U, p, grid, eta_min)
    worst = c2 if c2.bound >= c1.bound else c1
    details = {
        "reducibility": red.to_dict(),
        "subspace_2contraction": c2.to_dict(),
        "subspace_1contraction": c1.to_dict(),
    }
    if model.time_varying:
        details["warning"] = "time-varying field: the sampled conditions do not imply convergence"
    return Certificate.from_bound(
        "convergence", max(c1.bound, c2.bound), worst.worst_point["t"], worst.worst_point["x"],
        c2.samples, p, eta_min, model.name, details=details, passed=c1.passed and c2.passed,
    )
