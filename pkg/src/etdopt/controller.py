"""Integral-mode event-triggered controller.

Each agent augments its state with an integral accumulator z_i so the
tracking variable s_i = grad f_i(x_i, t) + k2 * z_i is available in O(1)
per step; the running integral is never re-evaluated from scratch. The
control law is

    u_i = -k1 * s_i - k2 * sum_{j in N_i} sign(xt_i - xt_j)
          - k3 * sign(H_i(x_i, t) @ s_i),

where xt are the last broadcast states. Only the local gradient and
Hessian enter; no Hessian inverse and no time derivative of the gradient
is ever formed.
"""

from dataclasses import dataclass

import numpy as np

from .objectives import TimeVaryingObjective
from .topology import Topology

__all__ = [
    "GainConfig",
    "ControllerState",
    "sign_vec",
    "smoothed_sign_vec",
    "neighbor_sign_sum",
    "auxiliary_state",
    "integral_rate",
    "control_input",
]


@dataclass(frozen=True)
class GainConfig:
    """Controller gains, all strictly positive.

    The finite-time settling guarantee additionally needs
    k3 > fbar / lambda_min; check with :meth:`satisfies_gain_condition`.
    """

    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        for name in ("k1", "k2", "k3"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"gain {name} must be positive, got {v}")

    def satisfies_gain_condition(self, lambda_min: float, fbar: float) -> bool:
        return self.k3 * lambda_min > fbar


@dataclass
class ControllerState:
    """Accumulated integral z_i of H_i(x_i, tau) @ sign-sum, starting at zero."""

    z: np.ndarray

    @classmethod
    def initial(cls, dim: int) -> "ControllerState":
        return cls(z=np.zeros(dim))


def sign_vec(v) -> np.ndarray:
    """Componentwise signum, sign(0) = 0 exactly, no deadband."""
    return np.sign(np.asarray(v, dtype=float))


def smoothed_sign_vec(v, delta: float) -> np.ndarray:
    """Boundary-layer signum v / max(||v||, delta).

    Unit direction outside the ||v|| = delta ball, linear inside. Exists to
    study chattering; the analysis covers the exact signum only.
    """
    v = np.asarray(v, dtype=float)
    return v / max(float(np.linalg.norm(v)), delta)


def _sign(v, delta):
    return sign_vec(v) if delta is None else smoothed_sign_vec(v, delta)


def neighbor_sign_sum(
    i: int,
    broadcast_states,
    topology: Topology,
    delta: float | None = None,
) -> np.ndarray:
    """sum_{j in N_i} sign(xt_i - xt_j) for 1-based agent ``i``.

    ``broadcast_states`` is positional: entry k-1 is agent k's last
    broadcast. Depends only on neighbors' broadcasts, changing a
    non-neighbor entry cannot change the result.
    """
    xt_i = np.asarray(broadcast_states[i - 1], dtype=float)
    total = np.zeros_like(xt_i)
    for j in topology.neighbor_indices(i - 1):
        total += _sign(xt_i - np.asarray(broadcast_states[j], dtype=float), delta)
    return total


def auxiliary_state(
    obj: TimeVaryingObjective,
    x: np.ndarray,
    z: np.ndarray,
    t: float,
    gains: GainConfig,
) -> np.ndarray:
    """s_i = grad f_i(x_i, t) + k2 * z_i, with z_i the accumulated integral."""
    return obj.gradient(x, t) + gains.k2 * np.asarray(z, dtype=float)


def integral_rate(
    obj: TimeVaryingObjective,
    x: np.ndarray,
    t: float,
    sign_sum: np.ndarray,
) -> np.ndarray:
    """dz_i/dt = H_i(x_i, t) @ sign_sum."""
    return obj.hessian(x, t) @ np.asarray(sign_sum, dtype=float)


def control_input(
    obj: TimeVaryingObjective,
    x: np.ndarray,
    s: np.ndarray,
    sign_sum: np.ndarray,
    t: float,
    gains: GainConfig,
    delta: float | None = None,
) -> np.ndarray:
    """u_i = -k1*s_i - k2*sign_sum - k3*sign(H_i @ s_i).

    ``s`` must come from :func:`auxiliary_state` at the same (x, t). The
    Hessian enters only through the product H @ s, no factorization.
    """
    s = np.asarray(s, dtype=float)
    hs = obj.hessian(x, t) @ s
    return -gains.k1 * s - gains.k2 * np.asarray(sign_sum, dtype=float) - gains.k3 * _sign(hs, delta)
