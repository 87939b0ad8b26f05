"""Deterministic fixed-step integration of the closed loop.

Each step runs three phases against the step-start snapshot:

  A. every agent's trigger is checked against its current state; agents
     whose measurement error outgrew the threshold rebroadcast, and the
     new broadcast is visible to neighbors within the same step
     (zero-delay model);
  B. sign sums, tracking variables s_i, controls u_i and integral rates
     are computed from the (possibly just-updated) broadcasts;
  C. explicit Euler: x += dt * u, z += dt * dz.

Explicit Euler is deliberate: the right-hand side is discontinuous
(signum terms, piecewise-constant broadcasts), so higher-order schemes buy
nothing and complicate event alignment. Triggers are evaluated on the
fixed grid, so event times are grid-aligned and the trigger-time error is
bounded by dt.

Runs are bit-reproducible: fixed iteration order, no hidden randomness.
When every objective is a :class:`~etdopt.objectives.QuadraticTrackingObjective`
the loop runs on stacked (N, dim) arrays with targets precomputed over the
whole grid; otherwise a generic per-agent path composes the controller and
trigger primitives directly. Both paths implement the same phases and are
cross-checked in the test suite.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .controller import GainConfig, sign_vec, smoothed_sign_vec, neighbor_sign_sum, \
    auxiliary_state, control_input, integral_rate
from .objectives import QuadraticTrackingObjective
from .topology import Topology
from .trigger import TriggerConfig, TriggerState, measurement_error, update_trigger

__all__ = [
    "AgentState",
    "SimConfig",
    "Trace",
    "step",
    "run",
    "run_baseline",
    "seeded_initial_states",
    "write_trace_csv",
    "write_events_csv",
    "NumericalDivergenceError",
]


class NumericalDivergenceError(RuntimeError):
    """A state magnitude exceeded the divergence guard (silent blowup trap)."""

    def __init__(self, step_index: int, time: float, magnitude: float):
        self.step_index = step_index
        self.time = time
        self.magnitude = magnitude
        super().__init__(
            f"state magnitude {magnitude:.3e} exceeded guard at step {step_index} (t={time})"
        )


@dataclass
class AgentState:
    """One agent's integrated state: decision vector x, controller integral z,
    and broadcast bookkeeping."""

    x: np.ndarray
    z: np.ndarray
    trigger: TriggerState


@dataclass
class SimConfig:
    """Full specification of one closed-loop run.

    x0 accepts shape (N,) for scalar agents or (N, dim). The number of
    steps t_end / dt must be an integer within rounding. seed only feeds
    the optional randomized-x0 helper and is recorded for provenance.
    smoothing_delta switches the signum nonlinearity to a boundary layer
    (None or 0 keeps the exact signum).
    """

    topology: Topology
    objectives: tuple
    gains: GainConfig
    trigger_cfgs: tuple
    dt: float
    t_end: float
    x0: np.ndarray
    seed: int | None = None
    smoothing_delta: float | None = None
    record_stride: int = 1
    divergence_guard: float = 1e9
    mode: str = "triggered"

    def __post_init__(self):
        self.objectives = tuple(self.objectives)
        self.trigger_cfgs = tuple(self.trigger_cfgs)
        n = self.topology.n_agents
        if len(self.objectives) != n:
            raise ValueError(f"{len(self.objectives)} objectives for {n} agents")
        if len(self.trigger_cfgs) != n:
            raise ValueError(f"{len(self.trigger_cfgs)} trigger configs for {n} agents")
        dims = {obj.dim for obj in self.objectives}
        if len(dims) != 1:
            raise ValueError(f"objectives disagree on dimension: {sorted(dims)}")
        (dim,) = dims
        x0 = np.array(self.x0, dtype=float)
        if x0.ndim == 1:
            if dim != 1:
                raise ValueError(f"flat x0 needs dim=1 objectives, got dim={dim}")
            x0 = x0[:, None]
        if x0.shape != (n, dim):
            raise ValueError(f"x0 shape {x0.shape}, expected ({n}, {dim})")
        self.x0 = x0
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        steps = round(self.t_end / self.dt)
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(1.0, abs(self.t_end)):
            raise ValueError(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")
        if self.smoothing_delta is not None and self.smoothing_delta <= 0:
            self.smoothing_delta = None
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride}")
        self.record_stride = int(self.record_stride)
        if self.mode not in ("triggered", "baseline", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def n_agents(self) -> int:
        return self.topology.n_agents

    @property
    def dim(self) -> int:
        return self.objectives[0].dim

    @property
    def steps(self) -> int:
        return round(self.t_end / self.dt)

    def fingerprint(self) -> str:
        """Stable digest of everything that determines the dynamics
        (mode excluded, so triggered and baseline runs of one scenario match)."""
        parts = [
            f"n={self.n_agents}",
            f"dim={self.dim}",
            f"edges={sorted(self.topology.edges)}",
            f"gains=({self.gains.k1!r},{self.gains.k2!r},{self.gains.k3!r})",
            "trig=" + ";".join(f"{tc.m!r},{tc.a!r}" for tc in self.trigger_cfgs),
            f"dt={self.dt!r}",
            f"t_end={self.t_end!r}",
            f"x0={self.x0.tobytes().hex()}",
            f"delta={self.smoothing_delta!r}",
            f"stride={self.record_stride}",
            "objs=" + "|".join(_objective_signature(o) for o in self.objectives),
        ]
        return hashlib.sha256("&".join(parts).encode()).hexdigest()


def _objective_signature(obj) -> str:
    if isinstance(obj, QuadraticTrackingObjective):
        sigs = []
        for sig in obj.targets:
            terms = ",".join(
                f"{t.kind}({t.amplitude!r},{t.frequency!r})" for t in sig.terms
            )
            sigs.append(f"({sig.c0!r},{sig.c1!r},[{terms}])")
        return "quad[" + ";".join(sigs) + "]"
    return f"{type(obj).__module__}.{type(obj).__qualname__}:dim={obj.dim}"


def seeded_initial_states(n_agents: int, dim: int, seed: int) -> np.ndarray:
    """Uniform random initial states in [-1, 1]^dim, reproducible by seed."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(n_agents, dim))


@dataclass
class Trace:
    """Time-indexed record of one run.

    Record arrays are indexed (record, agent, component); eps_norm and
    triggered are (record, agent). broadcast_counts covers every step, not
    just recorded ones. config_key ties the trace back to the SimConfig
    fingerprint so post-processing can refuse mismatched comparisons.
    """

    t: np.ndarray
    x: np.ndarray
    s: np.ndarray
    u: np.ndarray
    eps_norm: np.ndarray
    triggered: np.ndarray
    event_times: list
    broadcast_counts: np.ndarray
    dt: float
    t_end: float
    record_stride: int
    baseline: bool
    config_key: str

    @property
    def n_agents(self) -> int:
        return self.x.shape[1]

    @property
    def dim(self) -> int:
        return self.x.shape[2]

    @property
    def records(self) -> int:
        return self.x.shape[0]

    def broadcast_total(self) -> int:
        return int(sum(len(times) for times in self.event_times))

    def per_agent_broadcasts(self) -> list:
        return [len(times) for times in self.event_times]

    def max_control_norm(self) -> float:
        return float(np.linalg.norm(self.u, axis=2).max())


def _initial_states(cfg: SimConfig) -> list:
    states = []
    for i in range(cfg.n_agents):
        x = cfg.x0[i].copy()
        states.append(
            AgentState(x=x, z=np.zeros(cfg.dim), trigger=TriggerState.initial(x))
        )
    return states


def _guard(X, Z, k, t, guard):
    mag = max(float(np.abs(X).max()), float(np.abs(Z).max()))
    if not (np.isfinite(X).all() and np.isfinite(Z).all()):
        raise NumericalDivergenceError(k, t, float("nan"))
    if mag > guard:
        raise NumericalDivergenceError(k, t, mag)


# ---------------------------------------------------------------------------
# Generic path: per-agent composition of the controller/trigger primitives.
# ---------------------------------------------------------------------------

def _phases_ab(states, t, cfg, force_broadcast=False, initial=False, final=False):
    """Phases A and B at time t. Returns (new_trigger_states, info)."""
    n = cfg.n_agents
    delta = cfg.smoothing_delta

    fired = np.zeros(n, dtype=bool)
    new_triggers = []
    if initial:
        # Initial broadcast happened in TriggerState.initial; just flag it.
        fired[:] = True
        new_triggers = [st.trigger for st in states]
    elif final:
        new_triggers = [st.trigger for st in states]
    else:
        for i, st in enumerate(states):
            if force_broadcast:
                nt = TriggerState(
                    x_tilde=np.array(st.x, dtype=float),
                    last_event_time=t,
                    event_times=st.trigger.event_times + [t],
                )
                fired[i] = True
            else:
                fired[i], nt = update_trigger(st.trigger, st.x, cfg.trigger_cfgs[i], t)
            new_triggers.append(nt)

    broadcasts = [nt.x_tilde for nt in new_triggers]
    s_all = np.empty((n, cfg.dim))
    u_all = np.empty((n, cfg.dim))
    zdot_all = np.empty((n, cfg.dim))
    enorm = np.empty(n)
    for i, (st, obj) in enumerate(zip(states, cfg.objectives)):
        ss = neighbor_sign_sum(i + 1, broadcasts, cfg.topology, delta)
        s = auxiliary_state(obj, st.x, st.z, t, cfg.gains)
        s_all[i] = s
        u_all[i] = control_input(obj, st.x, s, ss, t, cfg.gains, delta)
        zdot_all[i] = integral_rate(obj, st.x, t, ss)
        enorm[i] = np.linalg.norm(measurement_error(new_triggers[i], st.x))
    return new_triggers, {
        "fired": fired, "s": s_all, "u": u_all, "zdot": zdot_all, "eps_norm": enorm,
    }


def step(states, t: float, cfg: SimConfig):
    """Advance all agents one step from time t (phases A, B, C).

    States must be finite; returns fresh AgentState objects, inputs are
    not mutated.
    """
    new_triggers, info = _phases_ab(states, t, cfg)
    dt = cfg.dt
    out = []
    for i, st in enumerate(states):
        out.append(
            AgentState(
                x=st.x + dt * info["u"][i],
                z=st.z + dt * info["zdot"][i],
                trigger=new_triggers[i],
            )
        )
    X = np.stack([st.x for st in out])
    Z = np.stack([st.z for st in out])
    _guard(X, Z, 0, t, cfg.divergence_guard)
    return out


def _run_generic(cfg: SimConfig, baseline: bool) -> Trace:
    steps = cfg.steps
    stride = cfg.record_stride
    dt = cfg.dt
    states = _initial_states(cfg)
    rec = _Recorder(cfg, steps)

    broadcast_counts = np.zeros(steps + 1, dtype=np.int64)
    for k in range(steps + 1):
        t = k * dt
        # Broadcasts feed the step that follows, so none fires at t_end.
        new_triggers, info = _phases_ab(
            states, t, cfg,
            force_broadcast=baseline and 0 < k < steps,
            initial=(k == 0),
            final=(k == steps and steps > 0),
        )
        for i, st in enumerate(states):
            st.trigger = new_triggers[i]
        broadcast_counts[k] = int(info["fired"].sum())
        if k % stride == 0:
            rec.write(
                t,
                np.stack([st.x for st in states]),
                info["s"], info["u"], info["eps_norm"], info["fired"],
            )
        if k < steps:
            for i, st in enumerate(states):
                st.x = st.x + dt * info["u"][i]
                st.z = st.z + dt * info["zdot"][i]
            X = np.stack([st.x for st in states])
            Z = np.stack([st.z for st in states])
            _guard(X, Z, k, (k + 1) * dt, cfg.divergence_guard)

    return rec.finish(
        [list(st.trigger.event_times) for st in states], broadcast_counts, baseline
    )


# ---------------------------------------------------------------------------
# Stacked path: vectorized over agents for the quadratic tracking family.
# ---------------------------------------------------------------------------

def _pair_sign(diffs, delta):
    if delta is None:
        return np.sign(diffs)
    norms = np.sqrt((diffs * diffs).sum(axis=-1, keepdims=True))
    return diffs / np.maximum(norms, delta)


def _run_stacked(cfg: SimConfig, baseline: bool) -> Trace:
    steps = cfg.steps
    stride = cfg.record_stride
    dt = cfg.dt
    n, dim = cfg.n_agents, cfg.dim
    delta = cfg.smoothing_delta
    adj = cfg.topology.adjacency
    k1, k2, k3 = cfg.gains.k1, cfg.gains.k2, cfg.gains.k3
    m_arr = np.array([tc.m for tc in cfg.trigger_cfgs])
    a_arr = np.array([tc.a for tc in cfg.trigger_cfgs])
    guard = cfg.divergence_guard

    # Targets over the whole grid: (steps+1, N, dim). Quadratic family only.
    t_grid = np.arange(steps + 1) * dt
    targets = np.stack([obj.target(t_grid) for obj in cfg.objectives], axis=1)

    X = cfg.x0.copy()
    Z = np.zeros((n, dim))
    Xt = X.copy()
    event_times = [[0.0] for _ in range(n)]
    broadcast_counts = np.zeros(steps + 1, dtype=np.int64)
    rec = _Recorder(cfg, steps)

    for k in range(steps + 1):
        t = k * dt
        # Phase A; broadcasts feed the step that follows, so none fires at t_end.
        if k == 0:
            fired = np.ones(n, dtype=bool)
            enorm = np.zeros(n)
        else:
            eps = Xt - X
            enorm = np.sqrt((eps * eps).sum(axis=1))
            if k == steps:
                fired = np.zeros(n, dtype=bool)
            elif baseline:
                fired = np.ones(n, dtype=bool)
            else:
                fired = enorm > m_arr * np.exp(-a_arr * t)
            if fired.any():
                Xt[fired] = X[fired]
                enorm = np.where(fired, 0.0, enorm)
                for i in np.nonzero(fired)[0]:
                    event_times[i].append(t)
        broadcast_counts[k] = int(fired.sum())

        # Phase B; the family Hessian is the identity, so H @ s = s and dz = sign sum.
        sgn = _pair_sign(Xt[:, None, :] - Xt[None, :, :], delta)
        sign_sums = np.einsum("ij,ijk->ik", adj, sgn)
        S = (X - targets[k]) + k2 * Z
        if delta is None:
            k3_term = np.sign(S)
        else:
            s_norms = np.sqrt((S * S).sum(axis=1, keepdims=True))
            k3_term = S / np.maximum(s_norms, delta)
        U = -k1 * S - k2 * sign_sums - k3 * k3_term

        if k % stride == 0:
            rec.write(t, X, S, U, enorm, fired)
        # Phase C
        if k < steps:
            X = X + dt * U
            Z = Z + dt * sign_sums
            _guard(X, Z, k, (k + 1) * dt, guard)

    return rec.finish(event_times, broadcast_counts, baseline)


class _Recorder:
    """Preallocated record arrays shared by both engine paths."""

    def __init__(self, cfg: SimConfig, steps: int):
        self.cfg = cfg
        records = steps // cfg.record_stride + 1
        n, dim = cfg.n_agents, cfg.dim
        self.t = np.empty(records)
        self.x = np.empty((records, n, dim))
        self.s = np.empty((records, n, dim))
        self.u = np.empty((records, n, dim))
        self.eps_norm = np.empty((records, n))
        self.triggered = np.empty((records, n), dtype=bool)
        self.idx = 0

    def write(self, t, x, s, u, eps_norm, fired):
        i = self.idx
        self.t[i] = t
        self.x[i] = x
        self.s[i] = s
        self.u[i] = u
        self.eps_norm[i] = eps_norm
        self.triggered[i] = fired
        self.idx += 1

    def finish(self, event_times, broadcast_counts, baseline) -> Trace:
        assert self.idx == len(self.t)
        cfg = self.cfg
        return Trace(
            t=self.t, x=self.x, s=self.s, u=self.u,
            eps_norm=self.eps_norm, triggered=self.triggered,
            event_times=event_times, broadcast_counts=broadcast_counts,
            dt=cfg.dt, t_end=cfg.t_end, record_stride=cfg.record_stride,
            baseline=baseline, config_key=cfg.fingerprint(),
        )


def _all_quadratic(objectives) -> bool:
    return all(type(o) is QuadraticTrackingObjective for o in objectives)


def run(cfg: SimConfig) -> Trace:
    """Integrate the event-triggered closed loop from 0 to t_end."""
    if _all_quadratic(cfg.objectives):
        return _run_stacked(cfg, baseline=False)
    return _run_generic(cfg, baseline=False)


def run_baseline(cfg: SimConfig) -> Trace:
    """Same dynamics, but every agent broadcasts every step.

    Continuous-communication reference for measuring how much traffic the
    trigger scheme saves.
    """
    if _all_quadratic(cfg.objectives):
        return _run_stacked(cfg, baseline=True)
    return _run_generic(cfg, baseline=True)


# ---------------------------------------------------------------------------
# Trace serialization (schemas documented in the README).
# ---------------------------------------------------------------------------

def _fmt_vec(row) -> str:
    if row.shape[-1] == 1:
        return repr(float(row[0]))
    return ";".join(repr(float(v)) for v in row)


def write_trace_csv(trace: Trace, path) -> None:
    """CSV with header t,agent,x,s,u,eps_norm,triggered, one row per agent
    per recorded step; vector components joined with ';'."""
    lines = ["t,agent,x,s,u,eps_norm,triggered"]
    for r in range(trace.records):
        t_repr = repr(float(trace.t[r]))
        for i in range(trace.n_agents):
            lines.append(
                f"{t_repr},{i + 1},{_fmt_vec(trace.x[r, i])},{_fmt_vec(trace.s[r, i])},"
                f"{_fmt_vec(trace.u[r, i])},{repr(float(trace.eps_norm[r, i]))},"
                f"{int(trace.triggered[r, i])}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_events_csv(trace: Trace, path) -> None:
    """CSV with header agent,event_time; agents in index order, times ascending."""
    lines = ["agent,event_time"]
    for i, times in enumerate(trace.event_times):
        for t in times:
            lines.append(f"{i + 1},{repr(float(t))}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
