"""Readers for the run-directory artifact formats.

A run directory holds trace.csv (t,agent,x,... rows, vector components
joined with ';'), events.csv (agent,event_time), and metrics.json
(schema "metrics/1"). This module only reads; it never touches the
simulation code that produced the files.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["SchemaMismatch", "RunData", "load_run"]


class SchemaMismatch(ValueError):
    """An artifact file lacks a column or series the figure needs."""


@dataclass(frozen=True)
class RunData:
    """Per-agent series extracted from one run directory.

    x holds the first state component per agent, shape (records, agents).
    optimal is the reference trajectory sampled on optimal_t, or None when
    the metrics file carries no closed-form reference.
    """

    t: np.ndarray
    x: np.ndarray
    agents: list
    events: dict
    optimal_t: np.ndarray | None
    optimal: np.ndarray | None

    @property
    def t_range(self) -> tuple:
        return float(self.t[0]), float(self.t[-1])


def _columns(header, path, needed) -> dict:
    missing = [c for c in needed if c not in header]
    if missing:
        raise SchemaMismatch(f"{path.name}: missing column {missing[0]!r}")
    return {c: header.index(c) for c in needed}


def _first_component(field: str) -> float:
    return float(field.split(";", 1)[0])


def _load_trace(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaMismatch(f"{path.name}: empty file")
        col = _columns(header, path, ("t", "agent", "x"))
        per_agent = {}
        for row in reader:
            agent = int(row[col["agent"]])
            series = per_agent.setdefault(agent, ([], []))
            series[0].append(float(row[col["t"]]))
            series[1].append(_first_component(row[col["x"]]))
    if not per_agent:
        raise SchemaMismatch(f"{path.name}: no data rows")
    agents = sorted(per_agent)
    t = np.asarray(per_agent[agents[0]][0])
    for agent in agents:
        if len(per_agent[agent][0]) != len(t):
            raise SchemaMismatch(f"{path.name}: ragged rows for agent {agent}")
    x = np.column_stack([per_agent[a][1] for a in agents])
    return t, x, agents


def _load_events(path: Path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaMismatch(f"{path.name}: empty file")
        col = _columns(header, path, ("agent", "event_time"))
        events = {}
        for row in reader:
            events.setdefault(int(row[col["agent"]]), []).append(
                float(row[col["event_time"]])
            )
    return events


def _load_optimal(path: Path):
    with open(path) as fh:
        meta = json.load(fh)
    series = meta.get("series")
    if not isinstance(series, dict) or "t" not in series:
        raise SchemaMismatch(f"{path.name}: missing series 't'")
    if "optimal" not in series:
        raise SchemaMismatch(f"{path.name}: missing series 'optimal'")
    opt = series["optimal"]
    if opt is None:
        return None, None
    t = np.asarray(series["t"], dtype=float)
    arr = np.asarray(opt, dtype=float)
    if arr.ndim > 1:  # vector states: first component, matching the trace
        arr = arr[:, 0]
    if len(arr) != len(t):
        raise SchemaMismatch(f"{path.name}: series 't' and 'optimal' lengths differ")
    return t, arr


def load_run(run_dir) -> RunData:
    """Read one run directory. Missing files surface as FileNotFoundError,
    malformed contents as SchemaMismatch."""
    run_dir = Path(run_dir)
    for name in ("trace.csv", "events.csv", "metrics.json"):
        if not (run_dir / name).is_file():
            raise FileNotFoundError(f"{run_dir / name} not found")
    t, x, agents = _load_trace(run_dir / "trace.csv")
    events = _load_events(run_dir / "events.csv")
    optimal_t, optimal = _load_optimal(run_dir / "metrics.json")
    return RunData(
        t=t, x=x, agents=agents, events=events,
        optimal_t=optimal_t, optimal=optimal,
    )
