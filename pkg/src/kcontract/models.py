"""Built-in parameterized example systems, each with an analytic Jacobian.

Every entry lives on the box [-10, 10]^n unless noted. ``build`` returns a
:class:`~kcontract.model.VectorFieldModel`; ``known_pair`` returns the
orthogonal splitting under which the entry reduces to a cascade, when it
has one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .decompose import SubspacePair, lti_invariant_pair, pair_from_invariant_basis
from .model import BoxDomain, VectorFieldModel

DEFAULT_HALF_WIDTH = 10.0


def laplacian(edges, n: Optional[int] = None) -> np.ndarray:
    """Laplacian of a weighted digraph given as 1-based ``(from, to, weight)`` edges.

    An edge ``j -> i`` means agent ``i`` listens to agent ``j``, so row ``i``
    of ``L`` carries ``-w`` in column ``j`` and the rows sum to zero.
    """
    edges = [(int(a), int(b), float(w)) for a, b, w in edges]
    if not edges:
        raise ValueError("graph has no edges")
    top = max(max(a, b) for a, b, _ in edges)
    n = top if n is None else int(n)
    if min(min(a, b) for a, b, _ in edges) < 1 or top > n:
        raise ValueError("edge endpoints must be 1-based agent indices")
    L = np.zeros((n, n))
    for a, b, w in edges:
        if a == b:
            continue
        L[b - 1, a - 1] -= w
        L[b - 1, b - 1] += w
    return L


def directed_cycle(n: int = 4) -> list:
    return [(i, i % n + 1, 1.0) for i in range(1, n + 1)]


_NONLINEARITIES = {
    "linear": (lambda y: -y, lambda y: -np.ones_like(y)),
    "tanh": (lambda y: -np.tanh(y), lambda y: np.tanh(y) ** 2 - 1.0),
}


def _nonlinearity(name):
    try:
        return _NONLINEARITIES[str(name)]
    except KeyError:
        raise ValueError(f"nonlinearity must be one of {sorted(_NONLINEARITIES)}, got {name!r}") from None


def _positive(params, *names, strict=True):
    for k in names:
        v = float(params[k])
        if not math.isfinite(v) or (v <= 0 if strict else v < 0):
            raise ValueError(f"parameter {k} must be {'> 0' if strict else '>= 0'}, got {v}")


def _sin_clock(params) -> VectorFieldModel:
    return VectorFieldModel(
        name="sin-clock",
        n=2,
        f=lambda t, x: np.array([math.sin(t), -x[1]]),
        jac=lambda t, x: np.array([[0.0, 0.0], [0.0, -1.0]]),
        domain=BoxDomain.cube(2, DEFAULT_HALF_WIDTH),
        time_varying=True,
        period=2 * math.pi,
    )


def _duffing(params) -> VectorFieldModel:
    _positive(params, "alpha", "beta", "gamma", "omega", strict=False)
    _positive(params, "delta")
    a, b, g, d, w = (float(params[k]) for k in ("alpha", "beta", "gamma", "delta", "omega"))
    forced = g != 0 and w != 0

    def f(t, x):
        return np.array([x[1], -b * x[0] ** 3 + a * x[0] - d * x[1] + g * math.cos(w * t)])

    def jac(t, x):
        return np.array([[0.0, 1.0], [a - 3 * b * x[0] ** 2, -d]])

    return VectorFieldModel(
        name="duffing", n=2, f=f, jac=jac, domain=BoxDomain.cube(2, DEFAULT_HALF_WIDTH),
        time_varying=forced, period=2 * math.pi / w if forced else None, params=dict(params),
    )


def _graph_laplacian(params) -> np.ndarray:
    n = params.get("n")
    graph = params.get("graph")
    if graph is None:
        graph = directed_cycle(int(n or 4))
    return laplacian(graph, None if n is None else int(n))


def _laplacian_consensus(params) -> VectorFieldModel:
    L = _graph_laplacian(params)
    phi, dphi = _nonlinearity(params["nonlinearity"])
    n = L.shape[0]
    return VectorFieldModel(
        name="laplacian-consensus",
        n=n,
        f=lambda t, x: phi(L @ x),
        jac=lambda t, x: dphi(L @ x)[:, None] * L,
        domain=BoxDomain.cube(n, DEFAULT_HALF_WIDTH),
        params={"nonlinearity": params["nonlinearity"], "laplacian": L.tolist()},
    )


def _consensus_pair(n: int) -> SubspacePair:
    return pair_from_invariant_basis(np.ones((n, 1)))


def _second_order_consensus(params) -> VectorFieldModel:
    _positive(params, "alpha", "beta")
    L = _graph_laplacian(params)
    a, b = float(params["alpha"]), float(params["beta"])
    phi, dphi = _nonlinearity(params["nonlinearity"])
    n = L.shape[0]

    def f(t, s):
        x, v = s[:n], s[n:]
        return np.concatenate([v, phi(b * L @ x + a * L @ v)])

    def jac(t, s):
        x, v = s[:n], s[n:]
        d = dphi(b * L @ x + a * L @ v)[:, None]
        j = np.zeros((2 * n, 2 * n))
        j[:n, n:] = np.eye(n)
        j[n:, :n] = d * (b * L)
        j[n:, n:] = d * (a * L)
        return j

    return VectorFieldModel(
        name="second-order-consensus", n=2 * n, f=f, jac=jac,
        domain=BoxDomain.cube(2 * n, DEFAULT_HALF_WIDTH),
        params={"alpha": a, "beta": b, "nonlinearity": params["nonlinearity"], "laplacian": L.tolist()},
    )


def _second_order_pair(params) -> SubspacePair:
    n = _graph_laplacian(params).shape[0]
    base = _consensus_pair(n)
    U = np.zeros((2 * n, 1))
    U[:n] = base.U
    V = np.zeros((2 * n, 2 * n - 1))
    V[:n, : n - 1] = base.V
    V[n:, n - 1:] = np.eye(n)
    return SubspacePair(U=U, V=V)


def _two_agent_3d(params) -> VectorFieldModel:
    s = float(params["s"])
    if not math.isfinite(s):
        raise ValueError("parameter s must be finite")

    # agents: f(x1, x2) = -x1 + s sin x2, g(x3, x2) = -x3 - s sin x2
    def f(t, x):
        return np.array([-x[0] + s * math.sin(x[1]), x[2] - x[0], -x[2] - s * math.sin(x[1])])

    def jac(t, x):
        c = s * math.cos(x[1])
        return np.array([[-1.0, c, 0.0], [-1.0, 0.0, 1.0], [0.0, -c, -1.0]])

    return VectorFieldModel(name="two-agent-3d", n=3, f=f, jac=jac,
                            domain=BoxDomain.cube(3, DEFAULT_HALF_WIDTH), params={"s": s})


def two_agent_pair() -> SubspacePair:
    r = math.sqrt(2.0)
    U = np.array([[1.0], [0.0], [1.0]]) / r
    V = np.array([[0.0, 1.0], [r, 0.0], [0.0, -1.0]]) / r
    return SubspacePair(U=U, V=V)


def _three_agents(params) -> VectorFieldModel:
    _positive(params, "a")
    _positive(params, "b", strict=False)
    a, b = float(params["a"]), float(params["b"])

    def phi(p):
        return -a * p - b * math.tanh(p)

    def dphi(p):
        return -a - b * (1.0 - math.tanh(p) ** 2)

    def f(t, x):
        x1, x2, x3 = x
        return np.array([
            phi(x1 - x2) + phi(x1 - x3),
            phi(x2 - x1) + phi(x2 - x3),
            phi(x3 - x2) + phi(x3 - x1),
        ])

    def jac(t, x):
        x1, x2, x3 = x
        d12, d13 = dphi(x1 - x2), dphi(x1 - x3)
        d21, d23 = dphi(x2 - x1), dphi(x2 - x3)
        d31, d32 = dphi(x3 - x1), dphi(x3 - x2)
        return np.array([
            [d12 + d13, -d12, -d13],
            [-d21, d21 + d23, -d23],
            [-d31, -d32, d32 + d31],
        ])

    return VectorFieldModel(name="three-agents", n=3, f=f, jac=jac,
                            domain=BoxDomain.cube(3, DEFAULT_HALF_WIDTH), params={"a": a, "b": b})


def three_agents_pair() -> SubspacePair:
    r3, r6 = math.sqrt(3.0), math.sqrt(6.0)
    U = np.ones((3, 1)) / r3
    V = np.array([[2.0, 0.0], [-1.0, -r3], [-1.0, r3]]) / r6
    return SubspacePair(U=U, V=V)


PRESET_MATRIX = np.diag([2.0, -3.0, -1.0, -1.0])


def _lti(params) -> VectorFieldModel:
    A = np.array(params["matrix"], dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.all(np.isfinite(A)):
        raise ValueError("lti needs a finite square matrix")
    A.flags.writeable = False
    n = A.shape[0]
    return VectorFieldModel(name=params.get("_name", "lti"), n=n, f=lambda t, x: A @ x,
                            jac=lambda t, x: A, domain=BoxDomain.cube(n, DEFAULT_HALF_WIDTH),
                            params={"matrix": A.tolist()})


def preset_pair() -> SubspacePair:
    U = np.vstack([np.zeros((2, 2)), np.eye(2)])
    V = np.vstack([np.eye(2), np.zeros((2, 2))])
    return SubspacePair(U=U, V=V)


def _lti_pair(params) -> Optional[SubspacePair]:
    A = np.asarray(params["matrix"], dtype=float)
    return lti_invariant_pair(A) if A.shape[0] >= 3 else None


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    defaults: dict
    builder: Callable[[dict], VectorFieldModel]
    description: str
    pair: Optional[Callable[[dict], Optional[SubspacePair]]] = None


CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry("sin-clock", {}, _sin_clock,
                     "x1' = sin t, x2' = -x2; 2-contracting yet has a non-trivial periodic solution",
                     lambda p: SubspacePair(U=[[0.0], [1.0]], V=[[1.0], [0.0]])),
        CatalogEntry("duffing", {"alpha": 0.0, "beta": 0.1, "gamma": 5.0, "delta": 0.1, "omega": 1.0},
                     _duffing,
                     "forced Duffing oscillator x'' + delta x' + beta x^3 - alpha x = gamma cos(omega t)"),
        CatalogEntry("laplacian-consensus", {"nonlinearity": "linear", "graph": None, "n": None},
                     _laplacian_consensus,
                     "x' = f(L x), f in {-y, -tanh y}; default graph: directed 4-cycle, unit weights",
                     lambda p: _consensus_pair(_graph_laplacian(p).shape[0])),
        CatalogEntry("second-order-consensus",
                     {"alpha": 1.0, "beta": 1.0, "nonlinearity": "linear", "graph": None, "n": None},
                     _second_order_consensus,
                     "x' = v, v' = f(beta L x + alpha L v); feedback form with M = beta L",
                     _second_order_pair),
        CatalogEntry("two-agent-3d", {"s": 1.0}, _two_agent_3d,
                     "x1' = -x1 + s sin x2, x2' = x3 - x1, x3' = -x3 - s sin x2",
                     lambda p: two_agent_pair()),
        CatalogEntry("three-agents", {"a": 1.0, "b": 0.0}, _three_agents,
                     "xi' = sum_j phi(xi - xj), phi(p) = -a p - b tanh p; three synchronizing agents",
                     lambda p: three_agents_pair()),
        CatalogEntry("lti", {"matrix": PRESET_MATRIX.tolist()}, _lti,
                     "x' = A x for a user-supplied A", _lti_pair),
        CatalogEntry("lti-example6", {"matrix": PRESET_MATRIX.tolist(), "_name": "lti-example6"}, _lti,
                     "x' = A x with A = diag(2, -3, -1, -1): convergent but not 2-contracting",
                     lambda p: preset_pair()),
    ]
}


def _resolve(name: str, params: Optional[dict]) -> tuple[CatalogEntry, dict]:
    if name not in CATALOG:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(CATALOG)}")
    entry = CATALOG[name]
    merged = dict(entry.defaults)
    for k, v in (params or {}).items():
        if k not in entry.defaults or k.startswith("_"):
            raise ValueError(f"model {name!r} has no parameter {k!r}")
        merged[k] = v
    return entry, merged


def build(name: str, params: Optional[dict] = None) -> VectorFieldModel:
    """Instantiate a catalog model; unspecified parameters take their defaults."""
    entry, merged = _resolve(name, params)
    return entry.builder(merged)


def known_pair(name: str, params: Optional[dict] = None) -> Optional[SubspacePair]:
    """The splitting that makes ``name`` a cascade, or ``None`` if it has none."""
    entry, merged = _resolve(name, params)
    return entry.pair(merged) if entry.pair else None


def list_models() -> list[dict]:
    return [
        {
            "name": e.name,
            "parameters": {k: v for k, v in e.defaults.items() if not k.startswith("_")},
            "description": e.description,
            "has_pair": e.pair is not None,
        }
        for e in CATALOG.values()
    ]
