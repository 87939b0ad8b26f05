"""Time-varying local objectives with exact gradients and Hessians.

The concrete family is quadratic tracking, f_i(x, t) = 0.5 ||x - g_i(t)||^2,
where the target g_i(t) is a polynomial-plus-sinusoid reference signal per
dimension. Arbitrary objectives plug in by subclassing
:class:`TimeVaryingObjective`; the controller consumes analytic derivatives
only, finite differences exist here purely as checking oracles.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Sinusoid",
    "TargetSignal",
    "TimeVaryingObjective",
    "QuadraticTrackingObjective",
    "grad_time_partial_fd",
    "check_assumptions",
    "AssumptionReport",
    "StepTooSmallError",
]

# Central differences below this step are dominated by rounding.
_MIN_FD_STEP = 1e-12


class StepTooSmallError(ValueError):
    """Raised when a finite-difference step is below the precision guard."""


@dataclass(frozen=True)
class Sinusoid:
    """One sinusoidal term ``amplitude * sin(frequency * t)`` (or cos)."""

    amplitude: float
    frequency: float
    kind: str = "sin"

    def __post_init__(self):
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"kind must be 'sin' or 'cos', got {self.kind!r}")


@dataclass(frozen=True)
class TargetSignal:
    """Scalar reference signal c0 + c1*t plus sinusoidal terms."""

    c0: float = 0.0
    c1: float = 0.0
    terms: tuple = ()

    def value(self, t):
        v = self.c0 + self.c1 * t
        for term in self.terms:
            w = term.frequency * t
            v = v + term.amplitude * (np.sin(w) if term.kind == "sin" else np.cos(w))
        return v

    def derivative(self, t):
        v = self.c1 + 0.0 * t
        for term in self.terms:
            w = term.frequency * t
            aw = term.amplitude * term.frequency
            v = v + (aw * np.cos(w) if term.kind == "sin" else -aw * np.sin(w))
        return v

    def derivative_sup(self) -> float:
        """All-time bound on |d/dt value|: |c1| + sum |amplitude*frequency|.

        Exact whenever the signal is a pure polynomial or a single sinusoid
        observed over at least one period (true for the bundled scenario);
        otherwise a safe over-estimate.
        """
        return abs(self.c1) + sum(
            abs(term.amplitude * term.frequency) for term in self.terms
        )


class TimeVaryingObjective(ABC):
    """One agent's local objective f_i(x, t).

    Subclasses provide the value and exact analytic derivatives, plus the
    declared curvature floor (smallest Hessian eigenvalue over the domain)
    and declared bound on the time derivative of the gradient. Evaluation
    must be pure; instances are safe to share across threads.
    """

    dim: int
    declared_lambda_min: float
    declared_fbar: float

    @abstractmethod
    def evaluate(self, x, t) -> float:
        """Objective value f_i(x, t)."""

    @abstractmethod
    def gradient(self, x, t) -> np.ndarray:
        """Exact gradient with respect to x, shape (dim,)."""

    @abstractmethod
    def hessian(self, x, t) -> np.ndarray:
        """Exact symmetric Hessian with respect to x, shape (dim, dim)."""


class QuadraticTrackingObjective(TimeVaryingObjective):
    """f(x, t) = 0.5 ||x - g(t)||^2 for a per-dimension target signal g.

    The Hessian is the identity, so the curvature floor is exactly 1; the
    gradient's time-derivative bound is the analytic supremum of ||dg/dt||.
    """

    def __init__(self, targets):
        if isinstance(targets, TargetSignal):
            targets = (targets,)
        self.targets = tuple(targets)
        if not self.targets:
            raise ValueError("need at least one target signal")
        self.dim = len(self.targets)
        self.declared_lambda_min = 1.0
        self.declared_fbar = float(
            np.sqrt(sum(sig.derivative_sup() ** 2 for sig in self.targets))
        )
        self._identity = np.eye(self.dim)
        self._identity.setflags(write=False)

    def target(self, t) -> np.ndarray:
        """g(t); accepts scalar t (shape (dim,)) or 1-D t (shape (len(t), dim))."""
        cols = [sig.value(t) for sig in self.targets]
        if np.ndim(t) == 0:
            return np.array(cols, dtype=float)
        return np.stack([np.asarray(c, dtype=float) for c in cols], axis=-1)

    def target_derivative(self, t) -> np.ndarray:
        cols = [sig.derivative(t) for sig in self.targets]
        if np.ndim(t) == 0:
            return np.array(cols, dtype=float)
        return np.stack([np.asarray(c, dtype=float) for c in cols], axis=-1)

    def evaluate(self, x, t) -> float:
        r = np.asarray(x, dtype=float) - self.target(t)
        return 0.5 * float(r @ r)

    def gradient(self, x, t) -> np.ndarray:
        return np.asarray(x, dtype=float) - self.target(t)

    def hessian(self, x, t) -> np.ndarray:
        return self._identity


def grad_time_partial_fd(obj: TimeVaryingObjective, x, t: float, h: float = 1e-5) -> np.ndarray:
    """Central-difference estimate of the time derivative of the gradient.

    Checking oracle only; the controller never needs this quantity.

    Raises:
        StepTooSmallError: h below the machine-precision guard.
        ValueError: h <= 0 or t - h < 0.
    """
    if h <= 0:
        raise ValueError(f"step must be positive, got {h}")
    if h < _MIN_FD_STEP:
        raise StepTooSmallError(f"step {h} below guard {_MIN_FD_STEP}")
    if t - h < 0:
        raise ValueError(f"t - h = {t - h} is negative, objectives are defined for t >= 0")
    return (obj.gradient(x, t + h) - obj.gradient(x, t - h)) / (2.0 * h)


@dataclass
class AssumptionReport:
    """Sampled check of the curvature floor, gradient drift bound, and the
    identical-Hessian condition the convergence guarantee relies on.

    A sampled check over a finite grid, not a proof. Violations are flagged,
    never raised.
    """

    sample_count: int
    min_hessian_eigenvalue: float
    declared_lambda_min: float
    max_grad_time_norm: float
    declared_fbar: float
    max_hessian_deviation: float
    hessian_deviation_tol: float
    gain_floor: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_assumptions(
    objectives,
    sample_grid,
    hessian_deviation_tol: float = 1e-9,
    fd_step: float = 1e-5,
) -> AssumptionReport:
    """Validate declared bounds over a sample grid of (x, t) points.

    Checks, over all sampled points:
      a) min Hessian eigenvalue >= declared curvature floor,
      b) ||time derivative of gradient|| (central differences) <= declared bound,
      c) max pairwise Hessian deviation ||H_i - H_j|| <= tolerance,
    and reports the gain floor fbar / lambda_min that the third controller
    gain must exceed.

    Args:
        objectives: non-empty list of TimeVaryingObjective.
        sample_grid: non-empty list of (x, t) pairs; x may be scalar or vector.
    """
    if not objectives:
        raise ValueError("objective list is empty")
    sample_grid = list(sample_grid)
    if not sample_grid:
        raise ValueError("sample grid is empty")

    lam_declared = min(o.declared_lambda_min for o in objectives)
    fbar_declared = max(o.declared_fbar for o in objectives)

    min_eig = np.inf
    max_dgrad = 0.0
    max_dev = 0.0
    for x, t in sample_grid:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        hessians = []
        for obj in objectives:
            h_mat = obj.hessian(x, t)
            hessians.append(h_mat)
            min_eig = min(min_eig, float(np.linalg.eigvalsh(h_mat).min()))
            step = fd_step if t - fd_step >= 0 else t / 2
            if step >= _MIN_FD_STEP:
                dg = grad_time_partial_fd(obj, x, t, step)
                max_dgrad = max(max_dgrad, float(np.linalg.norm(dg)))
        for a in range(len(hessians)):
            for b in range(a + 1, len(hessians)):
                dev = float(np.linalg.norm(hessians[a] - hessians[b]))
                max_dev = max(max_dev, dev)

    violations = []
    if min_eig < lam_declared - 1e-9:
        violations.append(
            f"sampled Hessian eigenvalue {min_eig} below declared floor {lam_declared}"
        )
    if max_dgrad > fbar_declared + 1e-6:
        violations.append(
            f"sampled gradient drift {max_dgrad} exceeds declared bound {fbar_declared}"
        )
    if max_dev > hessian_deviation_tol:
        violations.append(
            f"Hessians differ across agents by {max_dev} (tol {hessian_deviation_tol}), "
            "the identical-Hessian condition fails"
        )

    return AssumptionReport(
        sample_count=len(sample_grid),
        min_hessian_eigenvalue=float(min_eig),
        declared_lambda_min=float(lam_declared),
        max_grad_time_norm=float(max_dgrad),
        declared_fbar=float(fbar_declared),
        max_hessian_deviation=float(max_dev),
        hessian_deviation_tol=float(hessian_deviation_tol),
        gain_floor=float(fbar_declared / lam_declared),
        violations=violations,
    )
