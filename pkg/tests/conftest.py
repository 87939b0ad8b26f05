"""Shared fixtures. The bundled benchmark run is expensive (60k steps),
so it is simulated once per session and reused across test modules."""

import numpy as np
import pytest

from etdopt import (
    GainConfig,
    QuadraticTrackingObjective,
    SimConfig,
    Sinusoid,
    TargetSignal,
    TriggerConfig,
    build_report,
    build_topology,
    ring_edges,
    run,
    run_baseline,
    soc_scenario,
)


@pytest.fixture(scope="session")
def soc_config():
    return soc_scenario()


@pytest.fixture(scope="session")
def soc_trace(soc_config):
    return run(soc_config)


@pytest.fixture(scope="session")
def soc_baseline(soc_config):
    return run_baseline(soc_config)


@pytest.fixture(scope="session")
def soc_report(soc_trace, soc_baseline, soc_config):
    return build_report(
        soc_trace, soc_config.objectives, soc_config.gains, baseline=soc_baseline
    )


def short_soc_config(**overrides) -> SimConfig:
    """The benchmark scenario scaled down for cheap unit tests."""
    topo = build_topology(6, ring_edges(6))
    targets = [
        TargetSignal(0.0, 1.0, ()),
        TargetSignal(0.0, 0.2, ()),
        TargetSignal(0.0, 0.0, (Sinusoid(0.5, 2.0, "sin"),)),
        TargetSignal(0.0, 0.0, (Sinusoid(0.1, 2.0, "cos"),)),
        TargetSignal(0.0, 0.5, ()),
        TargetSignal(0.0, 1.2, ()),
    ]
    kwargs = dict(
        topology=topo,
        objectives=tuple(QuadraticTrackingObjective((sig,)) for sig in targets),
        gains=GainConfig(5.0, 1.0, 15.0),
        trigger_cfgs=tuple(
            TriggerConfig(m, a)
            for m, a in zip([3, 2, 3, 3, 2, 2], [0.9, 0.7, 0.9, 0.9, 0.7, 0.7])
        ),
        dt=1e-3,
        t_end=1.0,
        x0=np.zeros((6, 1)),
    )
    kwargs.update(overrides)
    return SimConfig(**kwargs)


@pytest.fixture
def short_cfg():
    return short_soc_config()
