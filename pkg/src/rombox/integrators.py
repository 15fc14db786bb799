"""Explicit RK4 and Crank-Nicolson time integration.

Linear systems (sparse/dense operator matrices) are stepped by the
selected backend (compiled kernels when available); arbitrary callables
fall back to a plain Python loop.  Both paths share the same blow-up
detection: a step whose max-norm exceeds ``BLOWUP_FACTOR`` times the
initial max-norm (or turns non-finite) marks the trajectory unstable and
stops integration, returning the part computed so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import warnings

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import backend
from .errors import ConfigError, DimensionError, FactorizationError

BLOWUP_FACTOR = 1.0e6

_SCHEMES = ("rk4", "crank_nicolson")


@dataclass(frozen=True)
class StateVector:
    """A spatial state paired with its simulation time."""

    values: np.ndarray
    time: float = 0.0


@dataclass(frozen=True)
class IntegratorSpec:
    """Time-stepping parameters.

    ``t_end`` must be an integer multiple of ``dt`` (to round-off);
    states are recorded every ``snapshot_stride`` steps, always
    including the initial one.
    """

    dt: float
    t_end: float
    scheme: str = "rk4"
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}, expected one of {_SCHEMES}")
        if not np.isfinite(self.dt) or self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0.0:
            raise ConfigError(f"t_end must be non-negative, got {self.t_end}")
        if self.snapshot_stride < 1:
            raise ConfigError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, abs(self.t_end)):
            raise ConfigError(
                f"t_end={self.t_end} is not an integer multiple of dt={self.dt}"
            )

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)


@dataclass
class Trajectory:
    """Recorded states of one integration.

    ``states`` has one row per recorded state (row 0 is the initial
    state); ``times`` are exact step multiples of dt.  ``stable`` is
    False when integration stopped early on blow-up, in which case only
    the states computed before the failing step are present.
    """

    times: np.ndarray
    states: np.ndarray
    stable: bool = True

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def final(self) -> StateVector:
        return StateVector(self.states[-1], float(self.times[-1]))

    def state_matrix(self) -> np.ndarray:
        """States as columns (n, m), the layout snapshot matrices use."""
        return self.states.T


def rk4_step(rhs, u: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step for du/dt = rhs(u)."""
    k1 = rhs(u)
    k2 = rhs(u + 0.5 * dt * k1)
    k3 = rhs(u + 0.5 * dt * k2)
    k4 = rhs(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _blowup_limit(u0: np.ndarray) -> float:
    return BLOWUP_FACTOR * float(np.max(np.abs(u0))) if u0.size else 0.0


def _record_times(dt: float, stride: int, n_recorded: int) -> np.ndarray:
    return dt * stride * np.arange(n_recorded)


def integrate(rhs, state0: StateVector, spec: IntegratorSpec, gram=None) -> Trajectory:
    """Integrate du/dt = rhs(u) (or rhs(u) = G^{-1} M u for matrix rhs).

    Parameters
    ----------
    rhs : callable or matrix
        Either a callable mapping a state to its time derivative, or a
        sparse/dense square matrix M.  In the matrix case the optional
        ``gram`` solver turns the system into G da/dt = M a.
    state0 : StateVector
        Initial state; its time offsets the returned times.
    spec : IntegratorSpec
        Must have scheme "rk4"; Crank-Nicolson runs go through
        :class:`CrankNicolsonStepper`.
    """
    if spec.scheme != "rk4":
        raise ValueError("integrate() only steps rk4; use crank_nicolson_prepare()")
    u0 = np.asarray(state0.values, dtype=float)
    if u0.ndim != 1:
        raise DimensionError(f"state must be a vector, got shape {u0.shape}")

    if callable(rhs):
        if gram is not None:
            raise ValueError("gram solves are only supported for matrix rhs")
        states, stable = _integrate_callable(rhs, u0, spec)
    else:
        op = sp.csr_matrix(rhs)
        if op.shape != (u0.size, u0.size):
            raise DimensionError(
                f"operator shape {op.shape} does not match state size {u0.size}"
            )
        chol = None if gram is None or gram.trivial else gram.cholesky_lower
        states, stable = backend.rk4_integrate(
            op, u0, spec.dt, spec.n_steps, spec.snapshot_stride,
            _blowup_limit(u0), chol=chol,
        )
    times = state0.time + _record_times(spec.dt, spec.snapshot_stride, states.shape[0])
    return Trajectory(times=times, states=states, stable=stable)


def _integrate_callable(rhs, u0, spec):
    limit = _blowup_limit(u0)
    n_steps, stride = spec.n_steps, spec.snapshot_stride
    records = [u0.copy()]
    u = u0.copy()
    for step in range(1, n_steps + 1):
        u = rk4_step(rhs, u, spec.dt)
        if not np.max(np.abs(u)) <= limit:  # catches NaN/Inf too
            return np.array(records), False
        if step % stride == 0:
            records.append(u.copy())
    return np.array(records), True


class CrankNicolsonStepper:
    """Reusable Crank-Nicolson stepper for G da/dt = B a.

    Factors (G - dt/2 B) once; each step solves
    (G - dt/2 B) a_new = (G + dt/2 B) a_old.
    """

    def __init__(self, rhs_matrix, dt: float, gram_matrix=None):
        B = sp.csr_matrix(rhs_matrix)
        r = B.shape[0]
        if B.shape != (r, r):
            raise DimensionError(f"rhs matrix must be square, got {B.shape}")
        if gram_matrix is None:
            G = sp.identity(r, format="csr")
        else:
            G = sp.csr_matrix(gram_matrix)
            if G.shape != (r, r):
                raise DimensionError(
                    f"gram matrix shape {G.shape} does not match rhs {B.shape}"
                )
        half = 0.5 * dt
        minus = (G - half * B).toarray()
        self.plus = (G + half * B).tocsr()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(minus)
        except scipy.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise FactorizationError(f"Crank-Nicolson matrix is singular: {exc}")
        if not np.all(np.isfinite(lu)) or np.any(np.diagonal(lu) == 0.0):
            raise FactorizationError("Crank-Nicolson matrix is singular")
        self.lu = np.asfortranarray(lu)
        self.piv = np.ascontiguousarray(piv, dtype=np.int32)
        self.dt = dt

    def step(self, a: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve((self.lu, self.piv), self.plus @ a)

    def integrate(self, state0: StateVector, spec: IntegratorSpec) -> Trajectory:
        if spec.scheme != "crank_nicolson":
            raise ValueError(f"stepper is Crank-Nicolson but spec says {spec.scheme!r}")
        if abs(spec.dt - self.dt) > 1e-12 * self.dt:
            raise ValueError(f"stepper factored for dt={self.dt}, spec has dt={spec.dt}")
        a0 = np.asarray(state0.values, dtype=float)
        if a0.size != self.plus.shape[0]:
            raise DimensionError(
                f"state size {a0.size} does not match system size {self.plus.shape[0]}"
            )
        states, stable = backend.cn_integrate(
            self.plus, self.lu, self.piv, a0, spec.n_steps, spec.snapshot_stride,
            _blowup_limit(a0),
        )
        times = state0.time + _record_times(spec.dt, spec.snapshot_stride, states.shape[0])
        return Trajectory(times=times, states=states, stable=stable)


def crank_nicolson_prepare(rhs_matrix, dt: float, gram_matrix=None) -> CrankNicolsonStepper:
    """Factor the Crank-Nicolson system matrices for repeated stepping."""
    return CrankNicolsonStepper(rhs_matrix, dt, gram_matrix=gram_matrix)
