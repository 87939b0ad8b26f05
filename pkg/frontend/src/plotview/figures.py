"""Render figures from a run directory.

Three figure types: per-agent state trajectories with the reference
trajectory overlaid, per-agent tracking errors against the reference, and
a per-agent broadcast raster. Every render writes both a PNG and an SVG
next to each other and is deterministic for identical inputs and library
versions.
"""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .artifacts import RunData, SchemaMismatch, load_run

__all__ = ["FigureSpec", "FIGURES", "render_figures"]

FIGURES = ("trajectories", "errors", "events")

# Stable ids inside the SVG output, so repeat renders are byte-identical.
matplotlib.rcParams["svg.hashsalt"] = "plotview"


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: which run, which figure, optional time window,
    and the output path (extension is replaced by .png/.svg)."""

    run_dir: Path
    figure: str
    out: Path
    window: tuple | None = None

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ValueError(f"unknown figure {self.figure!r}, want one of {FIGURES}")
        object.__setattr__(self, "run_dir", Path(self.run_dir))
        object.__setattr__(self, "out", Path(self.out))
        if self.window is not None:
            lo, hi = self.window
            if not lo < hi:
                raise ValueError(f"window start {lo} must be below end {hi}")
            object.__setattr__(self, "window", (float(lo), float(hi)))


def _check_window(spec: FigureSpec, data: RunData) -> tuple:
    t0, t1 = data.t_range
    if spec.window is None:
        return t0, t1
    lo, hi = spec.window
    if lo < t0 - 1e-9 or hi > t1 + 1e-9:
        raise ValueError(
            f"window [{lo}, {hi}] outside trace range [{t0}, {t1}]"
        )
    return lo, hi


def _trajectories(ax, data: RunData, lo, hi):
    mask = (data.t >= lo) & (data.t <= hi)
    for j, agent in enumerate(data.agents):
        ax.plot(data.t[mask], data.x[mask, j], lw=1.0, label=f"agent {agent}")
    if data.optimal is not None:
        omask = (data.optimal_t >= lo) & (data.optimal_t <= hi)
        ax.plot(
            data.optimal_t[omask], data.optimal[omask],
            "k--", lw=1.4, label="reference",
        )
    ax.set_ylabel("x")
    ax.legend(loc="best", fontsize=8, ncol=2)


def _errors(ax, data: RunData, lo, hi):
    if data.optimal is None:
        raise SchemaMismatch(
            "metrics.json: series 'optimal' is empty, no reference to plot errors against"
        )
    ref = np.interp(data.t, data.optimal_t, data.optimal)
    mask = (data.t >= lo) & (data.t <= hi)
    for j, agent in enumerate(data.agents):
        ax.plot(data.t[mask], (data.x[:, j] - ref)[mask], lw=1.0, label=f"agent {agent}")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_ylabel("x - reference")
    ax.legend(loc="best", fontsize=8, ncol=2)


def _events(ax, data: RunData, lo, hi):
    agents = sorted(data.events) or data.agents
    for agent in agents:
        times = np.asarray(data.events.get(agent, []), dtype=float)
        times = times[(times >= lo) & (times <= hi)]
        ax.vlines(times, agent - 0.35, agent + 0.35, lw=0.7)
    ax.set_ylabel("agent")
    ax.set_yticks(list(agents))
    ax.set_ylim(min(agents) - 0.6, max(agents) + 0.6)


_RENDERERS = {"trajectories": _trajectories, "errors": _errors, "events": _events}


def _output_paths(out: Path) -> list:
    base = out.with_suffix("") if out.suffix.lower() in (".png", ".svg") else out
    return [base.with_suffix(".png"), base.with_suffix(".svg")]


def render_figures(spec: FigureSpec) -> list:
    """Render one figure, writing PNG and SVG. Returns the written paths."""
    data = load_run(spec.run_dir)
    lo, hi = _check_window(spec, data)

    fig, ax = plt.subplots(figsize=(7.0, 4.0), dpi=150)
    try:
        _RENDERERS[spec.figure](ax, data, lo, hi)
        ax.set_xlabel("t")
        ax.set_xlim(lo, hi)
        fig.tight_layout()
        paths = _output_paths(spec.out)
        paths[0].parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(paths[0], metadata={"Software": None})
        fig.savefig(paths[1], metadata={"Date": None})
    finally:
        plt.close(fig)
    return paths
