"""Input-affine plants, fixed-step integration and windowed sampling.

The systems handled here have the form

    xdot = f(x) + g(x) u + k(x) w

with a nonnegative state cost ``Q(x)``.  Trajectories are chopped into
windows of length ``dt``; each window stores its uniform sub-step states so
that running-cost integrals can be re-evaluated later with policies that did
not exist when the data were recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EngagementTerminal, InsufficientResolution, IntegrationBlowup

__all__ = [
    "AffineDynamics",
    "SampleWindow",
    "EngagementState",
    "R_GUARD",
    "rk4_step",
    "integrate_window",
    "integrate_feedback_window",
    "simulate",
    "quadrature_weights",
    "quadrature_over_window",
    "make_example_a",
    "make_linear_game",
    "engagement_from_geometry",
    "step_engagement",
]

#: Range below which the 1/r terms of the line-of-sight dynamics are not trusted.
R_GUARD = 0.1


@dataclass(frozen=True)
class AffineDynamics:
    """Evaluators for an input-affine system and its state cost.

    Parameters
    ----------
    state_dim, control_dim, disturbance_dim : int
        n, m and q.
    drift : callable
        ``f(x) -> (n,)``.
    control_gain : callable
        ``g(x) -> (n, m)``.
    disturbance_gain : callable
        ``k(x) -> (n, q)``.
    state_cost : callable
        ``Q(x) -> float``, nonnegative with ``Q(0) = 0``.
    """

    state_dim: int
    control_dim: int
    disturbance_dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    control_gain: Callable[[np.ndarray], np.ndarray]
    disturbance_gain: Callable[[np.ndarray], np.ndarray]
    state_cost: Callable[[np.ndarray], float]
    name: str = ""

    def __post_init__(self):
        for label in ("state_dim", "control_dim", "disturbance_dim"):
            if int(getattr(self, label)) < 1:
                raise ValueError(f"{label} must be a positive integer")

    def rhs(self, x, u, w):
        """Right-hand side ``f(x) + g(x) u + k(x) w``."""
        x = np.asarray(x, dtype=float)
        return (
            self.drift(x)
            + self.control_gain(x) @ np.asarray(u, dtype=float)
            + self.disturbance_gain(x) @ np.asarray(w, dtype=float)
        )

    def check_state(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.state_dim,):
            raise ValueError(f"state must have shape ({self.state_dim},), got {x.shape}")
        return x


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SampleWindow:
    """One integration window ``[t_start, t_start + dt]``.

    ``substep_states`` has shape ``(substeps + 1, n)`` and includes both
    endpoints.  The behavior inputs are ``None`` for windows rolled out under
    state feedback, where the input is not constant over the window.
    """

    t_start: float
    dt: float
    substep_states: np.ndarray
    behavior_control: Optional[np.ndarray] = None
    behavior_disturbance: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "substep_states", _readonly(self.substep_states))
        for name in ("behavior_control", "behavior_disturbance"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _readonly(np.atleast_1d(value)))

    @property
    def substeps(self) -> int:
        return self.substep_states.shape[0] - 1

    @property
    def x_start(self) -> np.ndarray:
        return self.substep_states[0]

    @property
    def x_end(self) -> np.ndarray:
        return self.substep_states[-1]

    @property
    def times(self) -> np.ndarray:
        return self.t_start + np.linspace(0.0, self.dt, self.substeps + 1)


def rk4_step(fun, x, h):
    """One classical Runge-Kutta step of ``xdot = fun(x)``."""
    k1 = fun(x)
    k2 = fun(x + 0.5 * h * k1)
    k3 = fun(x + 0.5 * h * k2)
    k4 = fun(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _roll(fun, x0, dt, substeps, t_start):
    if dt <= 0:
        raise ValueError("dt must be positive")
    if substeps < 2:
        raise ValueError("substeps must be at least 2")
    h = dt / substeps
    states = np.empty((substeps + 1, x0.size))
    states[0] = x0
    x = x0
    for j in range(substeps):
        x = rk4_step(fun, x, h)
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowup(t_start + (j + 1) * h)
        states[j + 1] = x
    return states


def integrate_window(dyn: AffineDynamics, x0, u, w, dt: float, substeps: int = 10,
                     t_start: float = 0.0) -> SampleWindow:
    """Integrate one window with inputs held constant.

    Parameters
    ----------
    dyn : AffineDynamics
    x0 : array_like, shape (n,)
    u : array_like, shape (m,)
    w : array_like, shape (q,)
    dt : float
        Window length.
    substeps : int
        Number of RK4 steps inside the window (at least 2).
    t_start : float
        Absolute start time, recorded in the window and in blow-up errors.
    """
    x0 = dyn.check_state(x0)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if u.shape != (dyn.control_dim,) or w.shape != (dyn.disturbance_dim,):
        raise ValueError("input dimensions do not match the dynamics")

    def fun(x):
        return dyn.drift(x) + dyn.control_gain(x) @ u + dyn.disturbance_gain(x) @ w

    states = _roll(fun, x0, dt, substeps, t_start)
    return SampleWindow(t_start, float(dt), states, u, w)


def integrate_feedback_window(dyn: AffineDynamics, x0, control, disturbance, dt: float,
                              substeps: int = 10, t_start: float = 0.0) -> SampleWindow:
    """Integrate one window under state-feedback policies ``u = control(x)``, ``w = disturbance(x)``."""
    x0 = dyn.check_state(x0)

    def fun(x):
        return dyn.rhs(x, control(x), disturbance(x))

    states = _roll(fun, x0, dt, substeps, t_start)
    return SampleWindow(t_start, float(dt), states)


def simulate(dyn: AffineDynamics, x0, control, disturbance, t0: float, t1: float,
             step: float):
    """Fixed-step RK4 simulation with time-varying feedback.

    ``control(t, x)`` and ``disturbance(t, x)`` are evaluated inside every RK4
    stage.  Returns ``(t, x, u, w)`` sampled on the step grid.
    """
    x = dyn.check_state(x0)
    nsteps = int(round((t1 - t0) / step))
    ts = t0 + step * np.arange(nsteps + 1)
    xs = np.empty((nsteps + 1, x.size))
    us = np.empty((nsteps + 1, dyn.control_dim))
    ws = np.empty((nsteps + 1, dyn.disturbance_dim))
    xs[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        _rk4_feedback_loop(dyn, control, disturbance, ts, xs, step)
    for j, t in enumerate(ts):
        us[j] = control(t, xs[j])
        ws[j] = disturbance(t, xs[j])
    return ts, xs, us, ws


def _rk4_feedback_loop(dyn, control, disturbance, ts, xs, step):
    x = xs[0]
    for j in range(len(ts) - 1):
        t = ts[j]
        k1 = dyn.rhs(x, control(t, x), disturbance(t, x))
        xa = x + 0.5 * step * k1
        k2 = dyn.rhs(xa, control(t + 0.5 * step, xa), disturbance(t + 0.5 * step, xa))
        xb = x + 0.5 * step * k2
        k3 = dyn.rhs(xb, control(t + 0.5 * step, xb), disturbance(t + 0.5 * step, xb))
        xc = x + step * k3
        k4 = dyn.rhs(xc, control(t + step, xc), disturbance(t + step, xc))
        x = x + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowup(ts[j + 1])
        xs[j + 1] = x


def quadrature_weights(substeps: int, dt: float) -> np.ndarray:
    """Composite fourth-order weights on ``substeps + 1`` uniform nodes.

    Simpson's rule on pairs of intervals; an odd interval count closes with
    the 3/8 rule on the last three intervals.  Exact for cubics either way.
    """
    if substeps < 2:
        raise InsufficientResolution(
            f"quadrature needs at least 3 sub-step states, got {substeps + 1}")
    h = dt / substeps
    wts = np.zeros(substeps + 1)
    simpson_intervals = substeps if substeps % 2 == 0 else substeps - 3
    for j in range(0, simpson_intervals, 2):
        wts[j:j + 3] += h / 3.0 * np.array([1.0, 4.0, 1.0])
    if substeps % 2:
        j = simpson_intervals
        wts[j:j + 4] += 3.0 * h / 8.0 * np.array([1.0, 3.0, 3.0, 1.0])
    return wts


def quadrature_over_window(win: SampleWindow, integrand):
    """Integrate ``integrand(x)`` over the window along its stored sub-step states.

    Vector-valued integrands are integrated componentwise.
    """
    wts = quadrature_weights(win.substeps, win.dt)
    values = np.array([np.asarray(integrand(x), dtype=float) for x in win.substep_states])
    result = np.tensordot(wts, values, axes=(0, 0))
    return float(result) if result.ndim == 0 else result


def make_example_a() -> AffineDynamics:
    """Two-state nonlinear benchmark with ``z = x`` (so ``Q(x) = |x|^2``)."""

    def drift(x):
        x1, x2 = x
        return np.array([-x1 + x2,
                         -0.5 * x1 - 0.5 * x2 + 0.5 * x2 * np.sin(x1) ** 2])

    def control_gain(x):
        return np.array([[0.0], [np.sin(x[0])]])

    def disturbance_gain(x):
        return np.array([[0.0], [np.cos(x[0])]])

    def state_cost(x):
        return float(x[0] ** 2 + x[1] ** 2)

    return AffineDynamics(2, 1, 1, drift, control_gain, disturbance_gain, state_cost,
                          name="example_a")


def make_linear_game(A, B, D, Qm) -> AffineDynamics:
    """Linear plant ``xdot = A x + B u + D w`` with cost ``x' Qm x``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    Qm = np.atleast_2d(np.asarray(Qm, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or D.shape[0] != n or Qm.shape != (n, n):
        raise ValueError(
            f"dimension mismatch: A {A.shape}, B {B.shape}, D {D.shape}, Qm {Qm.shape}")
    if not np.allclose(Qm, Qm.T, rtol=0.0, atol=1e-10):
        raise ValueError("Qm must be symmetric")
    if np.linalg.eigvalsh(0.5 * (Qm + Qm.T)).min() < -1e-10:
        raise ValueError("Qm must be positive semidefinite")
    for M in (A, B, D, Qm):
        M.setflags(write=False)

    return AffineDynamics(
        n, B.shape[1], D.shape[1],
        drift=lambda x: A @ x,
        control_gain=lambda x: B,
        disturbance_gain=lambda x: D,
        state_cost=lambda x: float(x @ Qm @ x),
        name="linear_game",
    )


@dataclass(frozen=True)
class EngagementState:
    """Planar missile/target geometry.

    Angles are measured counter-clockwise from the x axis.  ``theta`` is the
    line-of-sight angle from missile to target and ``theta_dot`` its rate.
    """

    r: float
    theta: float
    theta_dot: float
    eta: float
    beta: float
    Vm: float
    Vt: float
    missile_pos: np.ndarray = field(repr=False)
    target_pos: np.ndarray = field(repr=False)

    @property
    def closing_velocity(self) -> float:
        """Range rate ``Vt cos(beta - theta) - Vm cos(eta - theta)``."""
        return (self.Vt * np.cos(self.beta - self.theta)
                - self.Vm * np.cos(self.eta - self.theta))

    @property
    def los_state(self) -> np.ndarray:
        return np.array([self.theta, self.theta_dot])


def engagement_from_geometry(missile_pos, target_pos, eta, beta, Vm, Vt) -> EngagementState:
    """Build a consistent state from positions, headings and speeds."""
    mp = np.array(missile_pos, dtype=float)
    tp = np.array(target_pos, dtype=float)
    rel = tp - mp
    r = float(np.hypot(rel[0], rel[1]))
    theta = float(np.arctan2(rel[1], rel[0]))
    theta_dot = (Vt * np.sin(beta - theta) - Vm * np.sin(eta - theta)) / r
    mp.setflags(write=False)
    tp.setflags(write=False)
    return EngagementState(r, theta, float(theta_dot), float(eta), float(beta),
                           float(Vm), float(Vt), mp, tp)


def step_engagement(s: EngagementState, a_M: float, a_T: float, dt: float,
                    r_guard: float = R_GUARD) -> EngagementState:
    """Advance the planar kinematics by ``dt`` with lateral accelerations held.

    Positive acceleration rotates the velocity clockwise (``eta_dot =
    -a_M / Vm``), which is the orientation under which the line-of-sight
    rate obeys ``theta_ddot = -(2 Vr / r) theta_dot + cos(eta - theta) a_M / r
    - cos(beta - theta) a_T / r``.

    Raises
    ------
    EngagementTerminal
        If the range is at or below ``r_guard`` before or after the step.
    """
    if s.r <= r_guard:
        raise EngagementTerminal(s)
    if dt <= 0:
        raise ValueError("dt must be positive")
    Vm, Vt = s.Vm, s.Vt

    def kin(y):
        _, _, eta, _, _, beta = y
        return np.array([Vm * np.cos(eta), Vm * np.sin(eta), -a_M / Vm,
                         Vt * np.cos(beta), Vt * np.sin(beta), -a_T / Vt])

    y0 = np.array([s.missile_pos[0], s.missile_pos[1], s.eta,
                   s.target_pos[0], s.target_pos[1], s.beta])
    y = rk4_step(kin, y0, dt)
    if not np.all(np.isfinite(y)):
        raise IntegrationBlowup(dt)
    new = engagement_from_geometry(y[0:2], y[3:5], y[2], y[5], Vm, Vt)
    if new.r <= r_guard:
        raise EngagementTerminal(new)
    return new
