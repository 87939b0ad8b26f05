"""Event-triggered distributed tracking of time-varying optima.

A network of agents cooperatively follows the minimizer of a sum of
time-varying local objectives. Each agent integrates a signum-based
controller driven by neighbor broadcasts, and only rebroadcasts its own
state when the deviation from its last broadcast crosses a decaying
threshold. The package bundles the simulation engine, the trigger and
controller primitives, assumption checks, post-run metrics, and a CLI.
"""

from .controller import (
    ControllerState,
    GainConfig,
    auxiliary_state,
    control_input,
    integral_rate,
    neighbor_sign_sum,
    sign_vec,
    smoothed_sign_vec,
)
from .engine import (
    AgentState,
    NumericalDivergenceError,
    SimConfig,
    Trace,
    run,
    run_baseline,
    seeded_initial_states,
    step,
    write_events_csv,
    write_trace_csv,
)
from .metrics import (
    CHATTER_MARGIN,
    TOL_CONS,
    CommunicationStats,
    ConfigMismatchError,
    GainConditionViolatedError,
    MetricsReport,
    NotQuadraticFamilyError,
    build_report,
    communication_stats,
    consensus_error,
    grad_tolerance,
    gradient_sum_norm,
    optimal_trajectory_quadratic,
    tmax_bound,
)
from .objectives import (
    AssumptionReport,
    QuadraticTrackingObjective,
    Sinusoid,
    StepTooSmallError,
    TargetSignal,
    TimeVaryingObjective,
    check_assumptions,
    grad_time_partial_fd,
)
from .scenario import (
    GainConditionWarning,
    ParseError,
    ValidationError,
    dump_scenario,
    load_scenario,
    loads_scenario,
    soc_scenario,
)
from .topology import (
    DisconnectedGraphError,
    IndexOutOfRangeError,
    SelfLoopError,
    Topology,
    build_topology,
    neighbors,
    ring_edges,
)
from .trigger import (
    NonMonotoneTimeError,
    TriggerConfig,
    TriggerState,
    ZenoReport,
    measurement_error,
    trigger_function,
    update_trigger,
    zeno_report,
)

__version__ = "0.1.0"
