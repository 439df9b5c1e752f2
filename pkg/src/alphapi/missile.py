"""Planar missile/target engagement guided by periodically re-learned policies.

The learner sees the line-of-sight state ``x = (theta, theta_dot)``, the
missile lateral acceleration as control and the target acceleration as
disturbance.  Data are recorded for one cycle (``N`` windows of ``dt``),
the off-policy learner is re-run on them, and the learned actor flies the
next cycle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet, paper_bases
from .dynamics import (R_GUARD, AffineDynamics, EngagementState, SampleWindow,
                       engagement_from_geometry, step_engagement)
from .errors import AlphaPIError, EngagementTerminal
from .hji import GameSpec
from .offpolicy import Bases, DataSet, StackedWeights, offpolicy_solve

logger = logging.getLogger(__name__)

G0 = 9.81

__all__ = ["ManeuverSpec", "EngagementConfig", "CycleRecord", "EngagementResult",
           "target_maneuver", "los_dynamics", "miss_distance", "run_engagement"]


@dataclass(frozen=True)
class ManeuverSpec:
    """Sinusoidal ("S-type") weave starting at ``start`` seconds.

    ``kind="none"`` gives a non-maneuvering target.
    """

    kind: str = "sine"
    start: float = 1.5
    peak: float = 9.0 * G0
    period: float = 2.0


def target_maneuver(t: float, spec: ManeuverSpec = ManeuverSpec()) -> float:
    """Target lateral acceleration in m/s^2."""
    if spec.kind == "none" or t < spec.start:
        return 0.0
    if spec.kind != "sine":
        raise ValueError(f"unknown maneuver kind {spec.kind!r}")
    return spec.peak * float(np.sin(2.0 * np.pi * (t - spec.start) / spec.period))


@dataclass(frozen=True)
class EngagementConfig:
    missile_pos: tuple = (0.0, 0.0)
    eta_deg: float = 0.0
    Vm: float = 600.0
    target_pos: tuple = (10000.0, 0.0)
    beta_deg: float = 170.0
    Vt: float = 300.0
    q1: float = 0.0
    q2: float = 1e8
    R: float = 1.0
    gamma: float = 10.0
    dt: float = 0.005
    windows_per_cycle: int = 100
    substeps: int = 5
    alpha: float = 0.3
    tolerance: float = 0.0
    rtol: float = 1e-6
    max_iterations: int = 200
    maneuver: ManeuverSpec = ManeuverSpec()
    exploration: float = 20.0
    exploration_cycles: int = 2
    exploration_floor: float = 2.0
    nav_ratio: float = 3.0
    los_reference: str = "cycle"
    rcond: float = 1e-3
    accel_limit: float = 30.0 * G0
    t_max: float = 30.0
    guidance: str = "learned"
    r_guard: float = R_GUARD
    seed: int = 0
    critic: tuple = tuple(paper_bases("missile")[0].terms)
    actor: tuple = tuple(paper_bases("missile")[1].terms)
    disturbance: tuple = tuple(paper_bases("missile")[2].terms)

    @property
    def cycle_period(self) -> float:
        return self.windows_per_cycle * self.dt

    def bases(self) -> Bases:
        return Bases(BasisSet(2, self.critic), BasisSet(2, self.actor), BasisSet(2, self.disturbance))

    def initial_state(self) -> EngagementState:
        return engagement_from_geometry(self.missile_pos, self.target_pos,
                                        np.deg2rad(self.eta_deg), np.deg2rad(self.beta_deg),
                                        self.Vm, self.Vt)


@dataclass
class CycleRecord:
    t_end: float
    iterations: int
    converged: bool
    failed: bool
    actor: np.ndarray
    critic: np.ndarray
    message: str = ""


@dataclass
class EngagementResult:
    """Time histories of one engagement.

    ``trajectory`` columns: t, missile x, missile z, target x, target z, r,
    theta, theta_dot.  ``accel`` columns: t, a_M, a_T (held per window).
    """

    trajectory: np.ndarray
    accel: np.ndarray
    cycles: list = field(default_factory=list)
    miss_distance: float = float("nan")
    intercept_time: float = float("nan")

    @property
    def iteration_counts(self):
        return [c.iterations for c in self.cycles]


def los_dynamics(s: EngagementState, q1: float, q2: float) -> AffineDynamics:
    """Line-of-sight model with range and angles frozen at ``s``.

    The learner never calls the drift or gains; the model carries the cost
    ``q1 x1^2 + q2 x2^2`` and the dimensions, and supports diagnostics.
    """
    r = s.r
    Vr = s.closing_velocity
    cm = np.cos(s.eta - s.theta) / r
    ct = -np.cos(s.beta - s.theta) / r
    return AffineDynamics(
        2, 1, 1,
        drift=lambda x: np.array([x[1], -2.0 * Vr / r * x[1]]),
        control_gain=lambda x: np.array([[0.0], [cm]]),
        disturbance_gain=lambda x: np.array([[0.0], [ct]]),
        state_cost=lambda x: float(q1 * x[0] ** 2 + q2 * x[1] ** 2),
        name="missile_los",
    )


def miss_distance(t, r):
    """Minimum range with a parabola through the three samples around the minimum.

    The parabola is fitted to ``r^2``, which is exactly quadratic in time for
    straight-line relative motion.  Returns ``(miss, time_of_miss)``.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    j = int(np.argmin(r))
    if j == 0 or j == r.size - 1:
        return float(r[j]), float(t[j])
    tt = t[j - 1:j + 2] - t[j]
    c2, c1, c0 = np.polyfit(tt, r[j - 1:j + 2] ** 2, 2)
    if c2 <= 0:
        return float(r[j]), float(t[j])
    ts = -c1 / (2.0 * c2)
    d2 = max(c0 - c1 ** 2 / (4.0 * c2), 0.0)
    return float(np.sqrt(d2)), float(t[j] + ts)


def _row(t, s):
    return [t, s.missile_pos[0], s.missile_pos[1], s.target_pos[0], s.target_pos[1],
            s.r, s.theta, s.theta_dot]


def _admissible(bases, W, data, share=0.9):
    """Whether the critic curves upward in ``theta_dot`` on the recorded states.

    The stabilizing Riccati root penalizes the line-of-sight rate and the
    spurious root rewards it, so the sign of ``d^2 V / d theta_dot^2``
    tells them apart.  Fitted higher-order terms may flip it at a few
    states, so only a ``share`` of the states has to pass.
    """
    X = data.states.reshape(-1, data.state_dim)
    curv = np.zeros(len(X))
    for (a, b), w in zip(bases.critic.terms, W.critic):
        if b >= 2:
            curv += w * b * (b - 1) * X[:, 0] ** a * X[:, 1] ** (b - 2)
    return bool(np.mean(curv > 0.0) >= share)


def run_engagement(cfg: EngagementConfig = EngagementConfig()) -> EngagementResult:
    """Fly one engagement, re-learning the guidance policy every cycle.

    Each cycle records ``windows_per_cycle`` windows under the behavior
    ``a_M = actor(x) + noise``.  The noise amplitude is ``exploration``
    during the first ``exploration_cycles`` cycles and ``exploration_floor``
    afterwards; without it the off-policy regression cannot tell the actor
    weights apart.  The first behavior actor is zero.

    With ``los_reference="cycle"`` the learner sees the line-of-sight angle
    measured from its value at the start of the cycle.  The cost ignores the
    angle (``q1 = 0``), and the shift keeps angle-dependent basis terms from
    extrapolating as the line of sight drifts between cycles.

    The line-of-sight rate is open-loop unstable, so policy iteration started
    from zero weights converges to the anti-stabilizing Riccati root.  The
    first solve starts from a proportional-navigation actor
    ``a_M = -nav_ratio * V_c * theta_dot`` built from the measured closing
    speed; every later solve starts from the last accepted weights.  A cycle
    is flagged, and the previous actor kept, when its solve fails, does not
    converge, was collected without exploration, or returns a critic that
    does not penalize the line-of-sight rate.  The run stops once the range
    starts to grow, the range guard is hit, or ``t_max`` passes.
    """
    if cfg.guidance not in ("learned", "none"):
        raise ValueError(f"unknown guidance {cfg.guidance!r}")
    if cfg.los_reference not in ("cycle", "inertial"):
        raise ValueError(f"unknown los_reference {cfg.los_reference!r}")
    bases = cfg.bases()
    rng = np.random.default_rng(cfg.seed)
    s = cfg.initial_state()
    actor = np.zeros((len(bases.actor), 1))
    nav = np.zeros((len(bases.actor), 1))
    nav[0, 0] = -cfg.nav_ratio * abs(s.closing_velocity)
    W_start = StackedWeights(np.zeros(len(bases.critic)), nav, np.zeros((len(bases.disturbance), 1)))
    t = 0.0
    h = cfg.dt / cfg.substeps
    traj = [_row(t, s)]
    acc = []
    cycles = []
    done = False
    cycle = 0
    while not done and t < cfg.t_max - 1e-12:
        windows = []
        ref = np.array([s.theta, 0.0]) if cfg.los_reference == "cycle" else np.zeros(2)
        for _ in range(cfg.windows_per_cycle):
            x = s.los_state - ref
            a_m = 0.0
            if cfg.guidance == "learned":
                a_m = float(bases.actor.eval(x) @ actor[:, 0])
                amp = cfg.exploration if cycle < cfg.exploration_cycles else cfg.exploration_floor
                a_m += amp * rng.uniform(-1.0, 1.0)
            a_m = float(np.clip(a_m, -cfg.accel_limit, cfg.accel_limit))
            a_t = target_maneuver(t, cfg.maneuver)
            acc.append([t, a_m, a_t])
            states = [x]
            for j in range(cfg.substeps):
                try:
                    s = step_engagement(s, a_m, a_t, h, cfg.r_guard)
                except EngagementTerminal as end:
                    s = end.state
                    done = True
                traj.append(_row(t + (j + 1) * h, s))
                states.append(s.los_state - ref)
                if done or s.closing_velocity > 0.0:
                    done = True
                    break
            if done:
                break
            windows.append(SampleWindow(t, cfg.dt, np.array(states), [a_m], [a_t]))
            t += cfg.dt
        if done:
            break
        cycle += 1
        if cfg.guidance != "learned":
            continue
        spec = GameSpec(los_dynamics(s, cfg.q1, cfg.q2), cfg.gamma, [cfg.R])
        data = DataSet(tuple(windows), 2, 1, 1, cfg.dt, cfg.substeps, cfg.seed, "missile_los")
        try:
            res = offpolicy_solve(spec, data, bases, W_start, cfg.alpha, cfg.tolerance,
                                  cfg.max_iterations, cfg.rtol, cfg.rcond)
        except AlphaPIError as exc:
            logger.warning("cycle ending at t=%.3f failed: %s", t, exc)
            cycles.append(CycleRecord(t, 0, False, True, actor[:, 0].copy(),
                                      np.full(len(bases.critic), np.nan), str(exc)))
            continue
        message = ""
        if not res.converged:
            message = f"no convergence in {res.iterations} iterations"
        elif amp == 0.0:
            message = "no exploration in this cycle; actor weights not identifiable"
        elif not _admissible(bases, res.weights, data):
            message = "critic does not penalize the line-of-sight rate"
        if message:
            logger.warning("cycle ending at t=%.3f rejected: %s", t, message)
        else:
            actor = np.array(res.weights.actor)
            W_start = res.weights
        cycles.append(CycleRecord(t, res.iterations, res.converged, bool(message),
                                  np.array(res.weights.actor[:, 0]),
                                  np.array(res.weights.critic), message))
    traj = np.array(traj)
    miss, t_miss = miss_distance(traj[:, 0], traj[:, 5])
    return EngagementResult(traj, np.array(acc), cycles, miss, t_miss)

