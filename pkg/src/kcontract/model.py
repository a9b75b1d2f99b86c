"""Vector fields with box domains, Jacobians and serial composition."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class DomainError(ValueError):
    """A point lies outside the region where an evaluation was requested."""


@dataclass(frozen=True)
class BoxDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper componentwise")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, n: int, half_width: float = 10.0) -> "BoxDomain":
        return cls(-half_width * np.ones(n), half_width * np.ones(n))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x, pad=0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - pad) and np.all(x <= self.upper + pad))

    def image_bounds(self, m) -> "BoxDomain":
        """Bounding box of ``{M x : x in box}``."""
        m = np.atleast_2d(np.asarray(m, dtype=float))
        center = m @ ((self.lower + self.upper) / 2)
        radius = np.abs(m) @ ((self.upper - self.lower) / 2)
        return BoxDomain(center - radius, center + radius)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


def _finite_vector(v, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError(f"{what} produced non-finite values")
    return v


def _central_difference(fun: Callable, x: np.ndarray, h) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    steps = np.broadcast_to(np.asarray(h, dtype=float), x.shape) * (1.0 + np.abs(x))
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = steps[j]
        cols.append((_finite_vector(fun(x + e), "f") - _finite_vector(fun(x - e), "f")) / (2 * steps[j]))
    return np.column_stack(cols)


DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class VectorFieldModel:
    """A vector field ``f(t, x)`` (or ``f(t, x, u)`` when ``input_arity > 0``).

    ``jac`` and ``input_jac`` are optional; missing Jacobians fall back to
    central differences. ``period`` is the forcing period of a
    time-varying field when it has one.
    """

    name: str
    n: int
    f: Callable
    domain: BoxDomain
    jac: Optional[Callable] = None
    time_varying: bool = False
    input_arity: int = 0
    input_jac: Optional[Callable] = None
    input_domain: Optional[BoxDomain] = None
    period: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("state dimension must be positive")
        if self.domain.dim != self.n:
            raise ValueError(f"domain has dimension {self.domain.dim}, model has {self.n}")
        if self.input_arity < 0:
            raise ValueError("input_arity must be nonnegative")
        if self.input_domain is not None and self.input_domain.dim != self.input_arity:
            raise ValueError("input_domain dimension must equal input_arity")

    def _args(self, t, x, u):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n:
            raise ValueError(f"{self.name}: state has length {x.size}, expected {self.n}")
        if self.input_arity:
            if u is None:
                raise ValueError(f"{self.name}: model takes an input of length {self.input_arity}")
            u = np.asarray(u, dtype=float).reshape(-1)
            if u.size != self.input_arity:
                raise ValueError(f"{self.name}: input has length {u.size}, expected {self.input_arity}")
            return (float(t), x, u)
        return (float(t), x)

    def eval(self, t, x, u=None) -> np.ndarray:
        return _finite_vector(self.f(*self._args(t, x, u)), self.name)

    def __call__(self, t, x, u=None) -> np.ndarray:
        return self.eval(t, x, u)

    def jacobian(self, t, x, u=None) -> np.ndarray:
        args = self._args(t, x, u)
        if self.jac is not None:
            j = np.asarray(self.jac(*args), dtype=float).reshape(self.n, self.n)
            if not np.all(np.isfinite(j)):
                raise FloatingPointError(f"{self.name}: non-finite Jacobian")
            return j
        rest = args[2:]
        return _central_difference(lambda y: self.f(args[0], y, *rest), args[1], DEFAULT_FD_STEP)

    def input_jacobian(self, t, x, u) -> np.ndarray:
        """``df/du``, shape (n, input_arity)."""
        if not self.input_arity:
            raise ValueError(f"{self.name} has no input")
        t, x, u = self._args(t, x, u)
        if self.input_jac is not None:
            return np.asarray(self.input_jac(t, x, u), dtype=float).reshape(self.n, self.input_arity)
        return _central_difference(lambda v: self.f(t, x, v), u, DEFAULT_FD_STEP)

    def with_constant_input(self, u) -> "VectorFieldModel":
        """Close an input model with a fixed input value."""
        u = np.asarray(u, dtype=float).reshape(-1)
        self._args(0.0, np.zeros(self.n), u)
        return VectorFieldModel(
            name=f"{self.name}[u={u.tolist()}]",
            n=self.n,
            f=lambda t, x: self.f(t, x, u),
            jac=lambda t, x: self.jacobian(t, x, u),
            domain=self.domain,
            time_varying=self.time_varying,
            period=self.period,
            params=self.params,
        )


def fd_jacobian(model: VectorFieldModel, t, x, h=None, u=None) -> np.ndarray:
    """Central-difference Jacobian of ``model`` with respect to the state.

    Column j is ``(f(t, x + h_j e_j) - f(t, x - h_j e_j)) / (2 h_j)`` with
    ``h_j = h * (1 + |x_j|)``; ``h`` defaults to 1e-5.
    """
    h = DEFAULT_FD_STEP if h is None else float(h)
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != model.n:
        raise ValueError(f"state has length {x.size}, expected {model.n}")
    if not model.domain.contains(x, pad=h * (1 + np.abs(x))):
        raise DomainError(f"{x.tolist()} is outside the domain of {model.name}")
    args = model._args(t, x, u)
    rest = args[2:]
    return _central_difference(lambda y: model.f(args[0], y, *rest), x, h)


@dataclass(frozen=True)
class SerialPair:
    """Cascade ``x1' = f1(t, x1)``, ``x2' = f2(t, x2, h(x1))``."""

    upstream: VectorFieldModel
    downstream: VectorFieldModel
    output_map: Callable
    output_jac: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if self.upstream.input_arity:
            raise ValueError("upstream model must be closed (no input)")
        if not self.downstream.input_arity:
            raise ValueError("downstream model must take an input")
        y = np.asarray(self.output_map(np.zeros(self.upstream.n)), dtype=float).reshape(-1)
        if y.size != self.downstream.input_arity:
            raise ValueError(
                f"output map has dimension {y.size}, downstream input has {self.downstream.input_arity}"
            )

    def output(self, x1) -> np.ndarray:
        return np.asarray(self.output_map(np.asarray(x1, dtype=float)), dtype=float).reshape(-1)

    def output_jacobian(self, x1) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float).reshape(-1)
        if self.output_jac is not None:
            return np.asarray(self.output_jac(x1), dtype=float).reshape(
                self.downstream.input_arity, self.upstream.n
            )
        return _central_difference(self.output_map, x1, DEFAULT_FD_STEP)


def compose_serial(pair: SerialPair) -> VectorFieldModel:
    """Closed model of dimension n1 + n2 stacking the two fields with u = h(x1)."""
    up, down = pair.upstream, pair.downstream
    n1, n2 = up.n, down.n

    def f(t, x):
        x1, x2 = x[:n1], x[n1:]
        return np.concatenate([up.eval(t, x1), down.eval(t, x2, pair.output(x1))])

    def jac(t, x):
        x1, x2 = x[:n1], x[n1:]
        u = pair.output(x1)
        j = np.zeros((n1 + n2, n1 + n2))
        j[:n1, :n1] = up.jacobian(t, x1)
        j[n1:, :n1] = down.input_jacobian(t, x2, u) @ pair.output_jacobian(x1)
        j[n1:, n1:] = down.jacobian(t, x2, u)
        return j

    domain = BoxDomain(
        np.concatenate([up.domain.lower, down.domain.lower]),
        np.concatenate([up.domain.upper, down.domain.upper]),
    )
    return VectorFieldModel(
        name=pair.name or f"{up.name}>{down.name}",
        n=n1 + n2,
        f=f,
        jac=jac,
        domain=domain,
        time_varying=up.time_varying or down.time_varying,
        period=up.period or down.period,
    )
