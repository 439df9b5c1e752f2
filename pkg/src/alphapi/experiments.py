"""Drivers for the nonlinear benchmark and the linear-quadratic check.

Each driver takes a frozen config, runs the full protocol and returns plain
arrays; the command-line front end only formats them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .basis import BasisSet, paper_bases
from .dynamics import make_example_a, make_linear_game, simulate
from .errors import IntegrationBlowup
from .hji import GameSpec
from .lq import GareSolution, solve_gare, weights_to_matrix
from .offpolicy import Bases, DataSet, OffPolicyResult, StackedWeights, collect, offpolicy_solve

__all__ = [
    "ExampleAConfig",
    "ExampleAResult",
    "replay_disturbance",
    "running_attenuation",
    "run_example_a",
    "LinearGameConfig",
    "OracleResult",
    "quadratic_terms",
    "linear_terms",
    "linear_spec",
    "run_oracle",
]


def _terms(basis):
    return tuple(tuple(t) for t in basis.terms)


_EXA = paper_bases("example_a")


@dataclass(frozen=True)
class ExampleAConfig:
    gamma: float = 2.0
    R: float = 1.0
    alpha: float = 0.3
    tolerance: float = 1e-7
    rtol: float = 0.0
    max_iterations: int = 100
    x0: tuple = (0.4, 0.5)
    dt: float = 0.05
    windows: int = 50
    substeps: int = 10
    amplitude: float = 1.0
    seed: int = 0
    replay_duration: float = 10.0
    replay_step: float = 0.005
    replay_amplitude: float = 5.0
    replay_decay: float = 0.2
    critic: tuple = _terms(_EXA[0])
    actor: tuple = _terms(_EXA[1])
    disturbance: tuple = _terms(_EXA[2])

    @property
    def replay_start(self) -> float:
        """The replay continues the collected trajectory."""
        return self.windows * self.dt

    def bases(self) -> Bases:
        return Bases(BasisSet(2, self.critic), BasisSet(2, self.actor),
                     BasisSet(2, self.disturbance))

    def spec(self) -> GameSpec:
        return GameSpec(make_example_a(), self.gamma, [self.R])


@dataclass
class ExampleAResult:
    config: ExampleAConfig
    data: DataSet
    solve: OffPolicyResult
    replay_t: np.ndarray
    replay_x: np.ndarray
    replay_u: np.ndarray
    replay_w: np.ndarray
    attenuation: np.ndarray
    replay_error: Optional[str] = None

    @property
    def attenuation_final(self) -> float:
        return float(self.attenuation[-1]) if self.attenuation.size else float("nan")


def replay_disturbance(t, t0, amplitude=5.0, decay=0.2):
    """Decaying cosine ``amplitude * exp(-decay (t - t0)) cos(t - t0)``."""
    s = np.asarray(t, dtype=float) - t0
    return amplitude * np.exp(-decay * s) * np.cos(s)


def running_attenuation(spec: GameSpec, ts, xs, us, ws):
    """Running ratio ``sqrt(int (Q + u'Ru) dt / int w'w dt)`` from ``ts[0]``.

    The first entry, where both integrals vanish, is NaN.
    """
    Q = np.array([spec.dyn.state_cost(x) for x in xs])
    num = cumulative_trapezoid(Q + np.einsum("ti,i,ti->t", us, spec.R_diag, us), ts, initial=0.0)
    den = cumulative_trapezoid(np.einsum("ti,ti->t", ws, ws), ts, initial=0.0)
    out = np.full(len(ts), np.nan)
    ok = den > 0
    out[ok] = np.sqrt(num[ok] / den[ok])
    return out


def run_example_a(cfg: ExampleAConfig = ExampleAConfig()) -> ExampleAResult:
    """Collect, learn from zero weights, then replay the learned actor.

    Data come from ``windows`` windows under inputs drawn uniformly from
    ``[-amplitude, amplitude]`` and held per window.  The replay starts
    where collection ended and runs for ``replay_duration`` seconds under
    :func:`replay_disturbance`.  A replay that blows up leaves empty
    arrays and a message in ``replay_error``.
    """
    spec = cfg.spec()
    bases = cfg.bases()
    data = collect(spec, cfg.x0, cfg.windows, cfg.dt, seed=cfg.seed,
                   substeps=cfg.substeps, amplitude=cfg.amplitude)
    res = offpolicy_solve(spec, data, bases, StackedWeights.zeros(bases, 1, 1), cfg.alpha,
                          cfg.tolerance, cfg.max_iterations, cfg.rtol)
    control = res.weights.control(bases.actor)
    t0 = cfg.replay_start

    def dist(t, x):
        return np.array([replay_disturbance(t, t0, cfg.replay_amplitude, cfg.replay_decay)])

    empty = np.empty((0,))
    try:
        ts, xs, us, ws = simulate(spec.dyn, data.windows[-1].x_end, lambda t, x: control(x),
                                  dist, t0, t0 + cfg.replay_duration, cfg.replay_step)
    except IntegrationBlowup as exc:
        return ExampleAResult(cfg, data, res, empty, empty.reshape(0, 2), empty.reshape(0, 1),
                              empty.reshape(0, 1), empty,
                              f"closed-loop replay blew up at t = {exc.t:.6g} s")
    return ExampleAResult(cfg, data, res, ts, xs, us, ws, running_attenuation(spec, ts, xs, us, ws))


# linear-quadratic check ------------------------------------------------------

def quadratic_terms(n):
    """All degree-2 monomials in ``n`` variables (``x1^2, x1 x2, ..., xn^2``)."""
    out = []
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        e = [0] * n
        e[i] += 1
        e[j] += 1
        out.append(tuple(e))
    return tuple(out)


def linear_terms(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _mat(a):
    return tuple(tuple(float(v) for v in row) for row in np.atleast_2d(np.asarray(a, float)))


@dataclass(frozen=True)
class LinearGameConfig:
    A: tuple = ((0.0, 1.0), (-1.0, -1.0))
    B: tuple = ((0.0,), (1.0,))
    D: tuple = ((0.0,), (1.0,))
    Q: tuple = ((1.0, 0.0), (0.0, 1.0))
    R: tuple = (1.0,)
    gamma: float = 2.0
    alpha: float = 0.3
    tolerance: float = 1e-9
    rtol: float = 0.0
    max_iterations: int = 500
    x0: tuple = (1.0, -0.5)
    dt: float = 0.05
    windows: int = 60
    substeps: int = 10
    amplitude: float = 1.0
    seed: int = 0
    critic: Optional[tuple] = None
    actor: Optional[tuple] = None
    disturbance: Optional[tuple] = None

    def __post_init__(self):
        for name in ("A", "B", "D", "Q"):
            object.__setattr__(self, name, _mat(getattr(self, name)))
        object.__setattr__(self, "R", tuple(float(r) for r in np.atleast_1d(self.R)))

    @property
    def n(self) -> int:
        return len(self.A)

    def bases(self) -> Bases:
        n = self.n
        return Bases(BasisSet(n, self.critic or quadratic_terms(n)),
                     BasisSet(n, self.actor or linear_terms(n)),
                     BasisSet(n, self.disturbance or linear_terms(n)))


def linear_spec(cfg: LinearGameConfig) -> GameSpec:
    return GameSpec(make_linear_game(cfg.A, cfg.B, cfg.D, cfg.Q), cfg.gamma, list(cfg.R))


@dataclass
class OracleResult:
    config: LinearGameConfig
    gare: GareSolution
    solve: OffPolicyResult
    P_learned: np.ndarray
    K_learned: np.ndarray
    L_learned: np.ndarray
    deltas: list = field(default_factory=list)

    @property
    def max_relative_delta(self) -> float:
        return max(row[3] for row in self.deltas)


def run_oracle(cfg: LinearGameConfig = LinearGameConfig()) -> OracleResult:
    """Solve the game Riccati equation and compare with off-policy learning.

    The learner runs on one trajectory under uniform random inputs.  The
    critic basis must be quadratic so that ``P`` can be read back.  Each
    row of ``deltas`` is ``(name, oracle, learned, relative delta)`` with
    the relative delta taken against the largest oracle entry of the same
    matrix (absolute when that matrix is zero, as ``L`` is for ``D = 0``).

    Raises
    ------
    GammaTooSmall
        From the oracle when the instance has no stabilizing solution.
    """
    R = np.diag(cfg.R)
    gare = solve_gare(cfg.A, cfg.B, cfg.D, cfg.Q, R, cfg.gamma)
    spec = linear_spec(cfg)
    bases = cfg.bases()
    m, q = len(cfg.B[0]), len(cfg.D[0])
    data = collect(spec, cfg.x0, cfg.windows, cfg.dt, seed=cfg.seed, substeps=cfg.substeps,
                   amplitude=cfg.amplitude)
    res = offpolicy_solve(spec, data, bases, StackedWeights.zeros(bases, m, q), cfg.alpha,
                          cfg.tolerance, cfg.max_iterations, cfg.rtol)
    n = cfg.n
    P = weights_to_matrix(res.weights.critic, bases.critic.terms, n)
    # actor weights map x to u, so -K = actor' for a linear actor basis
    K = -res.weights.actor.T if bases.actor.terms == linear_terms(n) else np.full_like(gare.K, np.nan)
    L = res.weights.disturbance.T if bases.disturbance.terms == linear_terms(n) else np.full_like(gare.L, np.nan)
    rows = []
    for name, ref, got in (("P", gare.P, P), ("K", gare.K, K), ("L", gare.L, L)):
        scale = float(np.abs(ref).max()) or 1.0
        for idx in np.ndindex(ref.shape):
            label = f"{name}[{idx[0] + 1},{idx[1] + 1}]"
            rows.append((label, float(ref[idx]), float(got[idx]),
                         abs(float(got[idx]) - float(ref[idx])) / scale))
    return OracleResult(cfg, gare, res, P, K, L, rows)
