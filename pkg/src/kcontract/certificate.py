"""Sampled certificates: sample enumeration, sup-reduction and JSON form.

Every certificate here is sampled, not formal: the checked quantity is
maximized over a finite set of (t, x) points from a dense grid plus
uniform random draws over the domain box.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import __version__
from .measures import norm_label
from .model import VectorFieldModel

KINDS = (
    "k_contraction",
    "subspace_2contraction",
    "subspace_1contraction",
    "reducibility",
    "nob",
    "convergence",
)

DEFAULT_ETA_MIN = 1e-6
DEFAULT_TIME_HORIZON = 10.0
MAX_GRID_POINTS = 50_000


@dataclass(frozen=True)
class SamplingGrid:
    """How to sample a domain box (and a time window for time-varying fields).

    ``points_per_axis`` is reduced when the tensor grid would exceed
    ``max_grid_points``. Random points come from one seeded generator, so
    a grid with more random points contains the smaller one as a prefix.
    """

    points_per_axis: int = 9
    n_random: int = 1000
    seed: int = 0
    t_window: Optional[tuple[float, float]] = None
    max_grid_points: int = MAX_GRID_POINTS

    def __post_init__(self):
        if self.points_per_axis < 0 or self.n_random < 0:
            raise ValueError("sample counts must be nonnegative")
        if self.points_per_axis == 0 and self.n_random == 0:
            raise ValueError("empty sampling grid")
        if self.t_window is not None:
            t0, t1 = self.t_window
            if not t1 >= t0:
                raise ValueError("time window must satisfy t0 <= t1")


def time_window(model: VectorFieldModel, grid: SamplingGrid) -> tuple[float, float]:
    if grid.t_window is not None:
        return tuple(map(float, grid.t_window))
    if model.period:
        return (0.0, float(model.period))
    return (0.0, DEFAULT_TIME_HORIZON)


def sample_points(model: VectorFieldModel, grid: SamplingGrid) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (times, states) arrays: tensor grid first, then random points."""
    lo, hi = model.domain.lower, model.domain.upper
    if model.time_varying:
        t0, t1 = time_window(model, grid)
        lo = np.concatenate([[t0], lo])
        hi = np.concatenate([[t1], hi])
    d = lo.size
    blocks = []
    k = grid.points_per_axis
    while k > 1 and k**d > grid.max_grid_points:
        k -= 1
    if k == 1:
        blocks.append(((lo + hi) / 2)[None, :])
    elif k > 1:
        axes = [np.linspace(a, b, k) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        blocks.append(np.stack([m.ravel() for m in mesh], axis=1))
    if grid.n_random:
        rng = np.random.default_rng(grid.seed)
        blocks.append(lo + (hi - lo) * rng.uniform(size=(grid.n_random, d)))
    pts = np.concatenate(blocks, axis=0)
    if model.time_varying:
        return pts[:, 0].copy(), pts[:, 1:].copy()
    return np.zeros(len(pts)), pts


def sup_over_samples(times, states, fn: Callable[[float, np.ndarray], float]):
    """Max of ``fn`` over the samples and the first sample attaining it."""
    best, arg = -math.inf, 0
    for i, (t, x) in enumerate(zip(times, states)):
        v = float(fn(t, x))
        if math.isnan(v):
            raise FloatingPointError(f"checked quantity is NaN at t={t}, x={x.tolist()}")
        if v > best:
            best, arg = v, i
    return best, float(times[arg]), np.asarray(states[arg], dtype=float)


@dataclass
class Certificate:
    kind: str
    bound: float
    margin_eta: float
    worst_point: dict
    samples: int
    norm: str
    passed: bool
    eta_min: float = DEFAULT_ETA_MIN
    model_id: str = ""
    version: str = __version__
    method: str = "sampled, not formal"
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown certificate kind {self.kind!r}")

    @classmethod
    def from_bound(cls, kind, bound, t, x, samples, norm, eta_min, model_id, details=None, passed=None):
        if passed is None:
            passed = bound <= -eta_min
        return cls(
            kind=kind,
            bound=float(bound),
            margin_eta=float(-bound) if bound < 0 else 0.0,
            worst_point={"t": float(t), "x": [float(v) for v in np.asarray(x).reshape(-1)]},
            samples=int(samples),
            norm=norm_label(norm),
            passed=bool(passed),
            eta_min=float(eta_min),
            model_id=model_id,
            details=dict(details or {}),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        required = {"kind", "bound", "margin_eta", "worst_point", "samples", "norm", "passed"}
        missing = required - set(data)
        if missing:
            raise ValueError(f"certificate is missing fields {sorted(missing)}")
        cert = cls(**{k: data[k] for k in data if k in cls.__dataclass_fields__})
        cert.validate()
        return cert

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        return cls.from_dict(json.loads(text))

    def validate(self) -> None:
        """Re-check the internal consistency of a (possibly re-read) certificate."""
        norm_label(self.norm)
        if self.samples < 1:
            raise ValueError("certificate has no samples")
        expected = float(-self.bound) if self.bound < 0 else 0.0
        if not math.isclose(self.margin_eta, expected, rel_tol=0, abs_tol=1e-15):
            raise ValueError("margin_eta inconsistent with bound")
        if self.kind in ("k_contraction", "subspace_2contraction", "subspace_1contraction"):
            if self.passed != (self.bound <= -self.eta_min):
                raise ValueError("passed flag inconsistent with bound and eta_min")
        if not {"t", "x"} <= set(self.worst_point):
            raise ValueError("worst_point needs t and x")
