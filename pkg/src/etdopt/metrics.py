"""Post-run diagnostics over traces.

Everything here is pure post-processing: consensus and tracking errors,
the gradient-sum decay that the controller is supposed to enforce, the
finite-time bound it must beat, chattering tolerances, and communication
statistics against an always-broadcast baseline.

Default tolerances for the bundled scenario: TOL_CONS for consensus and
tracking bands, CHATTER_MARGIN * k3 * dt * N for the gradient sum (explicit
Euler leaves each agent's s_i chattering inside a band of roughly
(k3 + fbar) * dt, so the sum over N agents scales accordingly).
"""

import json
from dataclasses import dataclass

import numpy as np

from .controller import GainConfig
from .engine import Trace
from .objectives import QuadraticTrackingObjective

__all__ = [
    "TOL_CONS",
    "CHATTER_MARGIN",
    "NotQuadraticFamilyError",
    "GainConditionViolatedError",
    "ConfigMismatchError",
    "consensus_error",
    "optimal_trajectory_quadratic",
    "gradient_sum_norm",
    "tmax_bound",
    "grad_tolerance",
    "communication_stats",
    "CommunicationStats",
    "MetricsReport",
    "build_report",
]

TOL_CONS = 0.05
CHATTER_MARGIN = 2.0


class NotQuadraticFamilyError(TypeError):
    """Closed-form optimal trajectory requested for a non-quadratic family."""


class GainConditionViolatedError(ValueError):
    """k3 * lambda_min <= fbar: the finite-time bound does not exist."""


class ConfigMismatchError(ValueError):
    """Traces being compared came from different configurations."""


def consensus_error(states):
    """Deviation of each agent from the instantaneous network mean.

    Accepts (N,) scalars or (N, dim) vectors; returns the same shape.
    The outputs sum to zero.
    """
    x = np.asarray(states, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("need at least two agents")
    return x - x.mean(axis=0)


def optimal_trajectory_quadratic(objectives, t):
    """Minimizer of the summed quadratic family at time t: the target mean.

    Solves sum_i (x - g_i(t)) = 0. Scalar t gives a (dim,) vector; a 1-D
    time array gives (len(t), dim).
    """
    for obj in objectives:
        if not isinstance(obj, QuadraticTrackingObjective):
            raise NotQuadraticFamilyError(
                f"no closed-form trajectory for {type(obj).__name__}"
            )
    stacked = np.stack([obj.target(t) for obj in objectives])
    return stacked.mean(axis=0)


def gradient_sum_norm(objectives, states, t: float) -> float:
    """Norm of the summed local gradients at one instant."""
    x = np.asarray(states, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    total = np.zeros(x.shape[1])
    for obj, xi in zip(objectives, x):
        total = total + obj.gradient(xi, t)
    return float(np.linalg.norm(total))


def _gradient_sum_series(trace: Trace, objectives) -> np.ndarray:
    if all(type(o) is QuadraticTrackingObjective for o in objectives):
        opt = optimal_trajectory_quadratic(objectives, trace.t)
        total = trace.n_agents * (trace.x.mean(axis=1) - opt)
        return np.linalg.norm(total, axis=1)
    out = np.empty(trace.records)
    for r in range(trace.records):
        out[r] = gradient_sum_norm(objectives, trace.x[r], float(trace.t[r]))
    return out


def tmax_bound(s0, gains: GainConfig, lambda_min: float, fbar: float) -> float:
    """Worst-agent bound on the time for the gradient sum to vanish:
    max_i ||s_i(0)|| / (k3 * lambda_min - fbar)."""
    denom = gains.k3 * lambda_min - fbar
    if denom <= 0:
        raise GainConditionViolatedError(
            f"k3*lambda_min = {gains.k3 * lambda_min} must exceed fbar = {fbar}"
        )
    s = np.asarray(s0, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    return float(np.linalg.norm(s, axis=1).max() / denom)


def grad_tolerance(gains: GainConfig, dt: float, n_agents: int,
                   margin: float = CHATTER_MARGIN) -> float:
    """Chattering allowance for the post-convergence gradient sum."""
    return margin * gains.k3 * dt * n_agents


@dataclass
class CommunicationStats:
    per_agent_triggered: list
    per_agent_baseline: list
    total_triggered: int
    total_baseline: int

    @property
    def ratio(self) -> float:
        return self.total_triggered / self.total_baseline

    @property
    def savings_percent(self) -> float:
        return 100.0 * (1.0 - self.ratio)


def communication_stats(trace: Trace, baseline: Trace) -> CommunicationStats:
    """Broadcast counts of a triggered run against its reference run."""
    if trace.config_key != baseline.config_key:
        raise ConfigMismatchError("traces come from different configurations")
    return CommunicationStats(
        per_agent_triggered=trace.per_agent_broadcasts(),
        per_agent_baseline=baseline.per_agent_broadcasts(),
        total_triggered=trace.broadcast_total(),
        total_baseline=baseline.broadcast_total(),
    )


def _min_gaps(event_times, horizon: float) -> list:
    gaps = []
    for times in event_times:
        if len(times) < 2:
            gaps.append(horizon)
        else:
            gaps.append(float(np.diff(times).min()))
    return gaps


@dataclass
class MetricsReport:
    """Full-resolution diagnostics for one trace.

    consensus and tracking are signed deviations with shape
    (records, agents, dim); tracking is None for non-quadratic families
    (no closed-form reference). v1 holds 0.5*||s_i||^2 per agent.
    """

    t: np.ndarray
    consensus: np.ndarray
    tracking: np.ndarray | None
    optimal: np.ndarray | None
    gradient_sum: np.ndarray
    v1: np.ndarray
    tmax: float | None
    grad_tol: float
    lambda_min: float
    fbar: float
    gain_floor: float
    event_counts: list
    min_gaps: list
    broadcast_total: int
    comm: CommunicationStats | None
    config_key: str
    baseline_flag: bool
    dt: float
    t_end: float

    @property
    def consensus_max(self) -> np.ndarray:
        return np.linalg.norm(self.consensus, axis=2).max(axis=1)

    @property
    def tracking_max(self) -> np.ndarray | None:
        if self.tracking is None:
            return None
        return np.linalg.norm(self.tracking, axis=2).max(axis=1)

    def window_max(self, series: np.ndarray, t_lo: float, t_hi: float) -> float:
        mask = (self.t >= t_lo) & (self.t <= t_hi)
        return float(series[mask].max())

    def to_dict(self, max_points: int = 1201) -> dict:
        idx = _downsample_indices(len(self.t), max_points)
        cmax = self.consensus_max
        tmax_series = self.tracking_max
        d = {
            "schema": "metrics/1",
            "config_key": self.config_key,
            "baseline": self.baseline_flag,
            "dt": self.dt,
            "t_end": self.t_end,
            "n_agents": self.consensus.shape[1],
            "dim": self.consensus.shape[2],
            "declared": {
                "lambda_min": self.lambda_min,
                "fbar": self.fbar,
                "gain_floor": self.gain_floor,
            },
            "tmax_bound": None if self.tmax is None else float(self.tmax),
            "grad_tolerance": self.grad_tol,
            "events": {
                "per_agent": [int(c) for c in self.event_counts],
                "min_gaps": [float(g) for g in self.min_gaps],
                "total": int(self.broadcast_total),
            },
            "communication": None,
            "final": {
                "consensus_max": float(cmax[-1]),
                "tracking_max": None if tmax_series is None else float(tmax_series[-1]),
                "gradient_sum_norm": float(self.gradient_sum[-1]),
            },
            "series": {
                "t": _jlist(self.t[idx]),
                "consensus_max": _jlist(cmax[idx]),
                "tracking_max": None if tmax_series is None else _jlist(tmax_series[idx]),
                "gradient_sum_norm": _jlist(self.gradient_sum[idx]),
                "v1_max": _jlist(self.v1.max(axis=1)[idx]),
                "optimal": None if self.optimal is None else _jopt(self.optimal[idx]),
            },
        }
        if self.comm is not None:
            d["communication"] = {
                "per_agent_triggered": [int(c) for c in self.comm.per_agent_triggered],
                "per_agent_baseline": [int(c) for c in self.comm.per_agent_baseline],
                "total_triggered": int(self.comm.total_triggered),
                "total_baseline": int(self.comm.total_baseline),
                "ratio": float(self.comm.ratio),
                "savings_percent": float(self.comm.savings_percent),
            }
        return d

    def write_json(self, path, max_points: int = 1201) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(max_points), fh, indent=2)
            fh.write("\n")


def _downsample_indices(n: int, target: int) -> np.ndarray:
    if n <= target:
        return np.arange(n)
    stride = int(np.ceil((n - 1) / (target - 1)))
    idx = np.arange(0, n, stride)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def _jlist(arr) -> list:
    return [float(v) for v in np.asarray(arr).ravel()]


def _jopt(arr) -> list:
    a = np.asarray(arr)
    if a.shape[-1] == 1:
        return [float(v) for v in a[:, 0]]
    return [[float(v) for v in row] for row in a]


def build_report(trace: Trace, objectives, gains: GainConfig,
                 baseline: Trace | None = None,
                 margin: float = CHATTER_MARGIN) -> MetricsReport:
    """Assemble the full diagnostic report for a trace.

    baseline, when given, must come from the same configuration and
    contributes the communication comparison.
    """
    objectives = tuple(objectives)
    if len(objectives) != trace.n_agents:
        raise ConfigMismatchError(
            f"{len(objectives)} objectives for a {trace.n_agents}-agent trace"
        )
    lam = min(obj.declared_lambda_min for obj in objectives)
    fbar = max(obj.declared_fbar for obj in objectives)

    cons = trace.x - trace.x.mean(axis=1, keepdims=True)
    quadratic = all(type(o) is QuadraticTrackingObjective for o in objectives)
    if quadratic:
        opt = optimal_trajectory_quadratic(objectives, trace.t)
        tracking = trace.x - opt[:, None, :]
    else:
        opt = None
        tracking = None

    comm = communication_stats(trace, baseline) if baseline is not None else None
    if gains.satisfies_gain_condition(lam, fbar):
        tmax = tmax_bound(trace.s[0], gains, lam, fbar)
    else:
        tmax = None  # no finite-time guarantee to bound
    return MetricsReport(
        t=trace.t,
        consensus=cons,
        tracking=tracking,
        optimal=opt,
        gradient_sum=_gradient_sum_series(trace, objectives),
        v1=0.5 * (np.linalg.norm(trace.s, axis=2) ** 2),
        tmax=tmax,
        grad_tol=grad_tolerance(gains, trace.dt, trace.n_agents, margin),
        lambda_min=lam,
        fbar=fbar,
        gain_floor=fbar / lam,
        event_counts=trace.per_agent_broadcasts(),
        min_gaps=_min_gaps(trace.event_times, trace.t_end),
        broadcast_total=trace.broadcast_total(),
        comm=comm,
        config_key=trace.config_key,
        baseline_flag=trace.baseline,
        dt=trace.dt,
        t_end=trace.t_end,
    )
