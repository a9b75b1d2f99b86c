"""Trajectory integration and asymptotic verdicts (equilibrium, period, undetermined)."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import pdist

from .model import DomainError, SerialPair, VectorFieldModel, compose_serial

VERDICTS = ("converged_to_equilibrium", "periodic", "undetermined")


class IntegrationError(RuntimeError):
    """The integrator could not advance (step underflow or non-finite derivative)."""


@dataclass(frozen=True)
class IntegratorSettings:
    """Dormand-Prince 4(5) with adaptive steps."""

    rtol: float = 1e-7
    atol: float = 1e-9
    max_step: float = math.inf
    first_step: Optional[float] = None


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)
    model_id: str = ""
    x0: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)
    dense: Optional[object] = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.states.shape[0] != self.times.size:
            raise ValueError("times and states have different lengths")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains non-finite states")

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __call__(self, t) -> np.ndarray:
        """States at times ``t`` (shape (len(t), n)), from the dense interpolant."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.dense is not None:
            return np.asarray(self.dense(t)).T
        if self.times.size < 4:
            return np.column_stack([np.interp(t, self.times, c) for c in self.states.T])
        return CubicSpline(self.times, self.states, axis=0)(t)

    def resample(self, n_points: int) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(self.t0, self.t_end, n_points)
        return t, self(t)

    def to_csv(self, path) -> None:
        n = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"x{i + 1}" for i in range(n)])
            for t, x in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x])

    @classmethod
    def from_csv(cls, path, model_id: str = "") -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "t":
            raise ValueError("trajectory CSV must start with a header 't,x1,...'")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        return cls(times=data[:, 0], states=data[:, 1:], model_id=model_id)


@dataclass
class AsymptoticsReport:
    verdict: str
    equilibrium: Optional[list] = None
    period: Optional[float] = None
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def converged(self) -> bool:
        return self.verdict == "converged_to_equilibrium"

    @property
    def periodic(self) -> bool:
        return self.verdict == "periodic"

    def to_dict(self) -> dict:
        return asdict(self)


def _domain_events(model: VectorFieldModel, times, states) -> list:
    events = []
    inside_prev = True
    for t, x in zip(times, states):
        inside = model.domain.contains(x)
        if inside_prev and not inside:
            events.append((float(t), "domain_exit"))
        elif inside and not inside_prev:
            events.append((float(t), "domain_reentry"))
        inside_prev = inside
    return events


def integrate(
    model: VectorFieldModel,
    x0,
    t0: float = 0.0,
    t_end: float = 10.0,
    settings: Optional[IntegratorSettings] = None,
) -> Trajectory:
    """Integrate a closed model from ``x0`` over ``[t0, t_end]``.

    Leaving the domain box does not stop the run; each exit (and re-entry)
    is recorded in ``events``.
    """
    settings = settings or IntegratorSettings()
    if model.input_arity:
        raise ValueError(f"{model.name} has an input; close it before integrating")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != model.n:
        raise ValueError(f"x0 has length {x0.size}, model dimension is {model.n}")
    if not model.domain.contains(x0):
        raise DomainError(f"x0={x0.tolist()} is outside the domain of {model.name}")
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")

    def rhs(t, x):
        try:
            return model.eval(t, x)
        except FloatingPointError as exc:
            raise IntegrationError(f"non-finite derivative at t={t}: {exc}") from exc

    kwargs = {"rtol": settings.rtol, "atol": settings.atol, "max_step": settings.max_step}
    if settings.first_step is not None:
        kwargs["first_step"] = settings.first_step
    sol = solve_ivp(rhs, (t0, t_end), x0, method="RK45", dense_output=True, **kwargs)
    if sol.status != 0:
        raise IntegrationError(f"integration failed at t={sol.t[-1]}: {sol.message}")
    states = sol.y.T
    return Trajectory(
        times=sol.t,
        states=states,
        events=_domain_events(model, sol.t, states),
        model_id=model.name,
        x0=x0.tolist(),
        settings=asdict(settings),
        dense=sol.sol,
    )


def _window_times(traj: Trajectory, start: float, n: int = 256, cap: int = 1024) -> np.ndarray:
    steps = traj.times[traj.times >= start]
    if steps.size > cap:
        steps = steps[:: -(-steps.size // cap)]
    return np.union1d(steps, np.linspace(start, traj.t_end, n))


def detect_equilibrium(
    traj: Trajectory,
    model: VectorFieldModel,
    tol: float = 1e-6,
    window: float = 0.1,
    drift_tol: Optional[float] = None,
) -> AsymptoticsReport:
    """Converged iff ``|f|`` and the state diameter stay within tolerance on the tail.

    ``window`` is the tail length as a fraction of the horizon.
    ``drift_tol`` bounds the diameter and defaults to ``tol``.
    """
    if not 0 < window <= 1:
        raise ValueError("window must be a fraction of the horizon in (0, 1]")
    drift_tol = tol if drift_tol is None else drift_tol
    start = traj.t_end - window * (traj.t_end - traj.t0)
    ts = _window_times(traj, start)
    xs = traj(ts)
    speed = max(float(np.linalg.norm(model.eval(t, x))) for t, x in zip(ts, xs))
    diameter = float(pdist(xs).max()) if len(xs) > 1 else 0.0
    f_end = float(np.linalg.norm(model.eval(traj.t_end, traj.final)))
    residuals = {
        "max_speed_window": speed,
        "window_diameter": diameter,
        "speed_end": f_end,
        "window_start": start,
        "tol": tol,
        "drift_tol": drift_tol,
    }
    if speed <= tol and diameter <= drift_tol:
        return AsymptoticsReport("converged_to_equilibrium", equilibrium=traj.final.tolist(),
                                 residuals=residuals)
    return AsymptoticsReport("undetermined", residuals=residuals)


@dataclass(frozen=True)
class PeriodSettings:
    n_grid: int = 2048
    tol: float = 1e-5
    period_min: float = 1e-3
    equilibrium_tol: float = 1e-6
    window: float = 0.1
    # tails narrower than this cannot be told apart from integrator noise
    min_amplitude: float = 1e-4


def _shift_mismatch(x: np.ndarray, start: int, max_lag: int) -> np.ndarray:
    # d[k] = max_i |x[i + k] - x[i]|_inf over the tail, k = 0..max_lag
    d = np.zeros(max_lag + 1)
    last = len(x) - 1
    for k in range(1, max_lag + 1):
        a = x[start:last - k + 1]
        b = x[start + k:]
        d[k] = np.abs(b - a).max()
    return d


def detect_period(
    traj: Trajectory,
    settings: Optional[PeriodSettings] = None,
    model: Optional[VectorFieldModel] = None,
) -> AsymptoticsReport:
    """Search ``T in (0, horizon/3]`` minimizing ``sup_t |x(t + T) - x(t)|``.

    The sup runs over the last two thirds of the horizon. A coarse scan on
    a uniform grid picks the candidate, which is then refined on the dense
    interpolant. Stationary tails are never reported as periodic: with a
    model, an accepted :func:`detect_equilibrium` verdict is returned
    instead. A tail whose diameter is below ``min_amplitude`` (or
    ``equilibrium_tol``) gives ``undetermined``: such an orbit would be
    indistinguishable from a noisy equilibrium.
    """
    s = settings or PeriodSettings()
    if model is not None:
        eq = detect_equilibrium(traj, model, s.equilibrium_tol, s.window)
        if eq.converged:
            return eq
    horizon = traj.t_end - traj.t0
    if traj.times.size < 8 or horizon <= 3 * s.period_min:
        raise ValueError("trajectory too short for period detection")
    tail_start = traj.t_end - s.window * horizon
    tail = traj(_window_times(traj, tail_start))
    stationary = float(pdist(tail).max()) if len(tail) > 1 else 0.0
    if stationary <= max(s.equilibrium_tol, s.min_amplitude):
        return AsymptoticsReport("undetermined", residuals={"stationary_tail_diameter": stationary})

    t, x = traj.resample(s.n_grid)
    dt = float(t[1] - t[0])
    start = int(np.searchsorted(t, traj.t0 + horizon / 3))
    max_lag = int(math.floor((horizon / 3) / dt + 1e-9))
    d = _shift_mismatch(x, start, max_lag)
    k_min = max(1, int(math.ceil(s.period_min / dt)))
    # skip the rise out of the trivial minimum at T = 0
    k = k_min
    while k < max_lag and d[k + 1] >= d[k]:
        k += 1
    interior = [
        j for j in range(max(k, 1), max_lag)
        if d[j] <= d[j - 1] and d[j] <= d[j + 1]
    ]
    if d[max_lag] <= d[max_lag - 1]:
        interior.append(max_lag)
    residuals = {"grid_step": dt, "coarse_range": [float(d[1:].min()), float(d[1:].max())]}
    if not interior:
        return AsymptoticsReport("undetermined", residuals=residuals)
    vals = d[interior]
    cutoff = vals.min() + 0.1 * (d[1:].max() - vals.min())
    lag = next(j for j in interior if d[j] <= cutoff)

    t_cmp = t[start:]

    def mismatch(T):
        ok = t_cmp + T <= traj.t_end
        return float(np.abs(traj(t_cmp[ok] + T) - x[start:][ok]).max())

    lo, hi = max(s.period_min, (lag - 1) * dt), min(horizon / 3, (lag + 1) * dt)
    res = minimize_scalar(mismatch, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-9 * max(1.0, hi)})
    T, err = float(res.x), float(res.fun)
    residuals.update({"candidate_period": T, "mismatch": err, "tol": s.tol})
    if err <= s.tol and T >= s.period_min:
        return AsymptoticsReport("periodic", period=T, residuals=residuals)
    return AsymptoticsReport("undetermined", residuals=residuals)


@dataclass
class CicsResult:
    reports: list
    n_runs: int
    n_converged: int

    @property
    def all_converged(self) -> bool:
        return self.n_converged == self.n_runs


def cics_probe(
    pair: SerialPair,
    x0_list: Sequence,
    horizon: float,
    settings: Optional[IntegratorSettings] = None,
    tol: float = 1e-6,
) -> CicsResult:
    """Simulate a cascade from several initial states and test each for convergence."""
    if pair.upstream.time_varying:
        raise ValueError("the upstream system must be time-invariant")
    model = compose_serial(pair)
    reports = []
    for x0 in x0_list:
        traj = integrate(model, x0, 0.0, horizon, settings)
        reports.append(detect_equilibrium(traj, model, tol))
    return CicsResult(reports, len(reports), sum(r.converged for r in reports))
