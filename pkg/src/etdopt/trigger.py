"""Event-triggered broadcast scheme.

An agent rebroadcasts its state when the measurement error eps_i = xt_i - x_i
(last broadcast minus current state) outgrows an exponentially decaying
threshold m_i * exp(-a_i * t). The decaying floor keeps inter-event gaps
bounded away from zero, so no agent can fire infinitely often in finite
time; :func:`zeno_report` checks that empirically after a run.
"""

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TriggerConfig",
    "TriggerState",
    "measurement_error",
    "trigger_function",
    "update_trigger",
    "zeno_report",
    "ZenoReport",
    "NonMonotoneTimeError",
]


class NonMonotoneTimeError(ValueError):
    """Raised when a trigger update is attempted at a time before the last event."""


@dataclass(frozen=True)
class TriggerConfig:
    """Per-agent threshold parameters, both strictly positive.

    m: threshold scale at t = 0.
    a: threshold decay rate, 1/time.
    """

    m: float
    a: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")

    def threshold(self, t: float) -> float:
        return self.m * math.exp(-self.a * t)


@dataclass
class TriggerState:
    """Broadcast bookkeeping for one agent.

    x_tilde holds the state frozen at the most recent event; event_times is
    strictly increasing.
    """

    x_tilde: np.ndarray
    last_event_time: float
    event_times: list = field(default_factory=list)

    @classmethod
    def initial(cls, x0: np.ndarray, t0: float = 0.0) -> "TriggerState":
        """Everyone broadcasts once at start: x_tilde(0) = x(0)."""
        return cls(x_tilde=np.array(x0, dtype=float), last_event_time=t0, event_times=[t0])


def measurement_error(state: TriggerState, x) -> np.ndarray:
    """eps_i = xt_i - x_i; identically zero right after an event."""
    return state.x_tilde - np.asarray(x, dtype=float)


def trigger_function(eps, cfg: TriggerConfig, t: float) -> float:
    """G_i(t) = ||eps_i|| - m_i * exp(-a_i * t); an event fires when positive."""
    return float(np.linalg.norm(eps)) - cfg.threshold(t)


def update_trigger(state: TriggerState, x, cfg: TriggerConfig, t: float):
    """Check the trigger at time t against the current state.

    Returns (triggered, new_state). On a trigger the broadcast state is
    set to x and t is appended to the event log; otherwise the input state
    is returned unchanged (same object).

    Raises:
        NonMonotoneTimeError: t is earlier than the last event.
    """
    if t < state.last_event_time:
        raise NonMonotoneTimeError(
            f"trigger checked at t={t} before last event at {state.last_event_time}"
        )
    eps = measurement_error(state, x)
    if trigger_function(eps, cfg, t) > 0:
        new_state = TriggerState(
            x_tilde=np.array(x, dtype=float),
            last_event_time=t,
            event_times=state.event_times + [t],
        )
        return True, new_state
    return False, state


@dataclass
class ZenoReport:
    """Empirical event statistics over a finished run.

    q_estimate is the observed bound on how fast the measurement error can
    grow (max ||u_i|| over the run) when available. An agent is flagged
    zeno_suspicious when its log contains a long run of consecutive gaps
    equal to the integration step, i.e. it fired as fast as the grid allows.
    """

    event_counts: list
    min_gaps: list
    horizon: float
    q_estimate: float | None = None
    zeno_suspicious: list = field(default_factory=list)

    @property
    def any_suspicious(self) -> bool:
        return any(self.zeno_suspicious)

    @property
    def total_events(self) -> int:
        return sum(self.event_counts)


def zeno_report(
    event_logs,
    horizon: float,
    dt: float | None = None,
    q_estimate: float | None = None,
    suspicious_run_length: int = 50,
) -> ZenoReport:
    """Summarize per-agent event logs after a simulation.

    Args:
        event_logs: one ordered list of event times per agent.
        horizon: simulated time span (min gap for an agent with fewer than
            two events is reported as the horizon).
        dt: integration step; enables the suspicious-run check.
        q_estimate: observed max ||u_i||, recorded as the empirical error
            growth bound.
        suspicious_run_length: how many consecutive dt-sized gaps flag an
            agent as firing at the grid limit.
    """
    counts = []
    min_gaps = []
    suspicious = []
    for times in event_logs:
        times = list(times)
        counts.append(len(times))
        gaps = np.diff(times) if len(times) >= 2 else np.array([])
        min_gaps.append(float(gaps.min()) if gaps.size else float(horizon))
        flag = False
        if dt is not None and gaps.size:
            run = 0
            for g in gaps:
                if abs(g - dt) <= 1e-9 * max(1.0, dt):
                    run += 1
                    if run > suspicious_run_length:
                        flag = True
                        break
                else:
                    run = 0
        suspicious.append(flag)
    return ZenoReport(
        event_counts=counts,
        min_gaps=min_gaps,
        horizon=float(horizon),
        q_estimate=q_estimate,
        zeno_suspicious=suspicious,
    )
