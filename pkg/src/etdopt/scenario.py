"""Scenario files: parsing, validation, and the bundled benchmark.

Grammar (INI, '#'/';' comments, no interpolation):

  [sim]        dt, t_end required; x0 (scalar, per-agent list, or "random"),
               seed, mode (triggered|baseline|both), record_stride,
               smoothing_delta optional
  [topology]   n_agents, edges ("1-2 2-3 ..." one-based pairs)
  [gains]      k1, k2, k3
  [trigger]    m, a (space-separated, one per agent)
  [objective K]  target for agent K: poly = c0 c1 (meaning c0 + c1*t) and
               any keys starting with sin/cos = amplitude frequency.
               Agents without a section get the zero target.

Unknown sections or keys are rejected outright; a typo should fail loudly,
not silently change the experiment.
"""

import configparser
import re
import warnings
from importlib import resources

import numpy as np

from .controller import GainConfig
from .engine import SimConfig, seeded_initial_states
from .objectives import QuadraticTrackingObjective, Sinusoid, TargetSignal
from .topology import build_topology
from .trigger import TriggerConfig

__all__ = [
    "ParseError",
    "ValidationError",
    "GainConditionWarning",
    "load_scenario",
    "loads_scenario",
    "soc_scenario",
    "dump_scenario",
]


class ParseError(ValueError):
    """Config text could not be understood (bad syntax, unknown key, bad literal)."""


class ValidationError(ValueError):
    """Config parsed but violates a model invariant."""


class GainConditionWarning(UserWarning):
    """k3 * lambda_min <= fbar: finite-time convergence is not guaranteed."""


_SIM_KEYS = {"dt", "t_end", "x0", "seed", "mode", "record_stride", "smoothing_delta"}
_OBJECTIVE_RE = re.compile(r"^objective\s+([0-9]+)$")


def _floats(section: str, key: str, raw: str, expect: int | None = None) -> list:
    parts = raw.split()
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ParseError(f"[{section}] {key}: {raw!r} is not numeric") from None
    if expect is not None and len(vals) != expect:
        raise ParseError(f"[{section}] {key}: expected {expect} values, got {len(vals)}")
    return vals


def _require(cp, section: str, key: str) -> str:
    if not cp.has_option(section, key):
        raise ParseError(f"[{section}] missing required key {key!r}")
    return cp.get(section, key)


def _check_keys(cp, section: str, allowed) -> None:
    for key in cp.options(section):
        if key not in allowed:
            raise ParseError(f"[{section}] unknown key {key!r}")


def _parse_edges(raw: str) -> list:
    edges = []
    for token in raw.split():
        m = re.fullmatch(r"([0-9]+)-([0-9]+)", token)
        if m is None:
            raise ParseError(f"[topology] edges: bad token {token!r} (want e.g. 1-2)")
        edges.append((int(m.group(1)), int(m.group(2))))
    if not edges:
        raise ParseError("[topology] edges: empty edge list")
    return edges


def _parse_objective(cp, section: str) -> QuadraticTrackingObjective:
    c0, c1 = 0.0, 0.0
    terms = []
    for key in cp.options(section):
        raw = cp.get(section, key)
        if key == "poly":
            vals = _floats(section, key, raw)
            if len(vals) == 1:
                c0 = vals[0]
            elif len(vals) == 2:
                c0, c1 = vals
            else:
                raise ParseError(f"[{section}] poly: expected 'c0' or 'c0 c1'")
        elif key.startswith("sin") or key.startswith("cos"):
            amp, freq = _floats(section, key, raw, expect=2)
            terms.append(Sinusoid(amp, freq, key[:3]))
        else:
            raise ParseError(f"[{section}] unknown key {key!r}")
    return QuadraticTrackingObjective((TargetSignal(c0, c1, tuple(terms)),))


def loads_scenario(text: str, origin: str = "<string>") -> SimConfig:
    """Parse scenario text into a validated SimConfig. See load_scenario."""
    cp = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None
    )
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    if cp.defaults():
        raise ParseError("keys outside any section are not allowed")

    objective_sections = {}
    for section in cp.sections():
        if section in ("sim", "topology", "gains", "trigger"):
            continue
        m = _OBJECTIVE_RE.match(section)
        if m is None:
            raise ParseError(f"unknown section [{section}]")
        objective_sections[int(m.group(1))] = section
    for name in ("sim", "topology", "gains", "trigger"):
        if not cp.has_section(name):
            raise ParseError(f"missing section [{name}]")

    _check_keys(cp, "sim", _SIM_KEYS)
    _check_keys(cp, "topology", {"n_agents", "edges"})
    _check_keys(cp, "gains", {"k1", "k2", "k3"})
    _check_keys(cp, "trigger", {"m", "a"})

    try:
        n_agents = int(_require(cp, "topology", "n_agents"))
    except ValueError:
        raise ParseError("[topology] n_agents must be an integer") from None
    edges = _parse_edges(_require(cp, "topology", "edges"))

    (k1,) = _floats("gains", "k1", _require(cp, "gains", "k1"), 1)
    (k2,) = _floats("gains", "k2", _require(cp, "gains", "k2"), 1)
    (k3,) = _floats("gains", "k3", _require(cp, "gains", "k3"), 1)
    m_vals = _floats("trigger", "m", _require(cp, "trigger", "m"), n_agents)
    a_vals = _floats("trigger", "a", _require(cp, "trigger", "a"), n_agents)

    (dt,) = _floats("sim", "dt", _require(cp, "sim", "dt"), 1)
    (t_end,) = _floats("sim", "t_end", _require(cp, "sim", "t_end"), 1)
    mode = cp.get("sim", "mode", fallback="triggered").strip()
    seed = None
    if cp.has_option("sim", "seed"):
        try:
            seed = int(cp.get("sim", "seed"))
        except ValueError:
            raise ParseError("[sim] seed must be an integer") from None
    stride = 1
    if cp.has_option("sim", "record_stride"):
        try:
            stride = int(cp.get("sim", "record_stride"))
        except ValueError:
            raise ParseError("[sim] record_stride must be an integer") from None
    delta = None
    if cp.has_option("sim", "smoothing_delta"):
        (delta,) = _floats("sim", "smoothing_delta", cp.get("sim", "smoothing_delta"), 1)
        if delta == 0:
            delta = None

    for idx in objective_sections:
        if not 1 <= idx <= n_agents:
            raise ValidationError(
                f"[objective {idx}] references agent {idx} of {n_agents}"
            )
    objectives = []
    for i in range(1, n_agents + 1):
        if i in objective_sections:
            objectives.append(_parse_objective(cp, objective_sections[i]))
        else:
            objectives.append(QuadraticTrackingObjective((TargetSignal(0.0, 0.0, ()),)))

    raw_x0 = cp.get("sim", "x0", fallback="0").strip()
    if raw_x0.lower() == "random":
        x0 = seeded_initial_states(n_agents, 1, 0 if seed is None else seed)
    else:
        vals = _floats("sim", "x0", raw_x0)
        if len(vals) == 1:
            x0 = np.full((n_agents, 1), vals[0])
        elif len(vals) == n_agents:
            x0 = np.array(vals)[:, None]
        else:
            raise ParseError(
                f"[sim] x0: expected 1 or {n_agents} values, got {len(vals)}"
            )

    try:
        topology = build_topology(n_agents, edges)
        gains = GainConfig(k1, k2, k3)
        trigger_cfgs = tuple(TriggerConfig(m, a) for m, a in zip(m_vals, a_vals))
        cfg = SimConfig(
            topology=topology, objectives=tuple(objectives), gains=gains,
            trigger_cfgs=trigger_cfgs, dt=dt, t_end=t_end, x0=x0, seed=seed,
            smoothing_delta=delta, record_stride=stride, mode=mode,
        )
    except ParseError:
        raise
    except (ValueError, IndexError) as exc:
        raise ValidationError(str(exc)) from exc

    lam = min(o.declared_lambda_min for o in cfg.objectives)
    fbar = max(o.declared_fbar for o in cfg.objectives)
    if not cfg.gains.satisfies_gain_condition(lam, fbar):
        warnings.warn(
            f"k3*lambda_min = {cfg.gains.k3 * lam:g} does not exceed fbar = {fbar:g}; "
            "finite-time convergence is not guaranteed",
            GainConditionWarning,
            stacklevel=2,
        )
    return cfg


def load_scenario(path) -> SimConfig:
    """Load and validate a scenario file.

    Raises ParseError for unreadable or malformed text and ValidationError
    when the parsed values break a model invariant (disconnected graph,
    nonpositive gains, mismatched counts). Emits GainConditionWarning when
    the gains cannot guarantee finite-time convergence.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc.strerror}") from None
    return loads_scenario(text, origin=str(path))


def soc_scenario() -> SimConfig:
    """The bundled six-package power balancing benchmark.

    Six scalar agents on a ring track {t, 0.2t, 0.5 sin 2t, 0.1 cos 2t,
    0.5t, 1.2t} with gains (5, 1, 15), per-agent trigger parameters, and
    dt = 1e-4 over [0, 6] from x0 = 0.
    """
    text = resources.files("etdopt").joinpath("configs/soc6.cfg").read_text()
    return loads_scenario(text, origin="soc6.cfg")


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_scenario(cfg: SimConfig) -> str:
    """Canonical scenario text for a SimConfig (provenance echo).

    Requires the quadratic tracking family; x0 is written out resolved,
    so an echoed random start reloads to the same values.
    """
    for obj in cfg.objectives:
        if not isinstance(obj, QuadraticTrackingObjective) or obj.dim != 1:
            raise ValidationError("only scalar quadratic-family configs can be echoed")
    lines = ["[sim]"]
    lines.append(f"dt = {_fmt(cfg.dt)}")
    lines.append(f"t_end = {_fmt(cfg.t_end)}")
    lines.append("x0 = " + " ".join(_fmt(v) for v in cfg.x0[:, 0]))
    if cfg.seed is not None:
        lines.append(f"seed = {cfg.seed}")
    lines.append(f"mode = {cfg.mode}")
    lines.append(f"record_stride = {cfg.record_stride}")
    if cfg.smoothing_delta is not None:
        lines.append(f"smoothing_delta = {_fmt(cfg.smoothing_delta)}")
    lines.append("")
    lines.append("[topology]")
    lines.append(f"n_agents = {cfg.n_agents}")
    lines.append("edges = " + " ".join(f"{i}-{j}" for i, j in sorted(cfg.topology.edges)))
    lines.append("")
    lines.append("[gains]")
    lines.append(f"k1 = {_fmt(cfg.gains.k1)}")
    lines.append(f"k2 = {_fmt(cfg.gains.k2)}")
    lines.append(f"k3 = {_fmt(cfg.gains.k3)}")
    lines.append("")
    lines.append("[trigger]")
    lines.append("m = " + " ".join(_fmt(tc.m) for tc in cfg.trigger_cfgs))
    lines.append("a = " + " ".join(_fmt(tc.a) for tc in cfg.trigger_cfgs))
    for i, obj in enumerate(cfg.objectives, start=1):
        sig = obj.targets[0]
        lines.append("")
        lines.append(f"[objective {i}]")
        lines.append(f"poly = {_fmt(sig.c0)} {_fmt(sig.c1)}")
        counts = {"sin": 0, "cos": 0}
        for term in sig.terms:
            counts[term.kind] += 1
            suffix = "" if counts[term.kind] == 1 else str(counts[term.kind])
            lines.append(
                f"{term.kind}{suffix} = {_fmt(term.amplitude)} {_fmt(term.frequency)}"
            )
    return "\n".join(lines) + "\n"
