"""On-policy damped policy iteration.

Every iteration rolls the plant out under the policies extracted from the
current critic ``W_i`` and fits ``W_{i+1}`` to the integrated damped
policy-evaluation equation

    (rho(x(t)) - rho(x(t+dt)))' W_{i+1}
        = (1 - alpha) (rho(x(t)) - rho(x(t+dt)))' W_i
          + alpha * int_t^{t+dt} (Q + u_i'R u_i - gamma^2 w_i'w_i) ds

by batch least squares.  ``alpha = 1`` is plain simultaneous policy update.

The disturbance policy has to be applied to the plant while collecting
data, so this learner is meant for simulation studies.  Use
:mod:`alphapi.offpolicy` when the disturbance cannot be chosen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSet
from .dynamics import integrate_feedback_window, quadrature_weights
from .errors import ExcitationInsufficient
from .hji import CriticFunction, GameSpec, extract_policies
from .lq import solve_lyapunov
from .regression import batch_least_squares

__all__ = [
    "OnPolicyConfig",
    "OnPolicyResult",
    "jittered_grid",
    "rollout_windows",
    "assemble_regression",
    "bellman_targets",
    "onpolicy_iterate",
    "onpolicy_solve",
    "damped_newton_matrix_step",
]


def jittered_grid(lo, hi, num, dim, seed, jitter=0.25):
    """Uniform ``num**dim`` grid over ``[lo, hi]^dim`` with seeded uniform jitter.

    ``jitter`` is a fraction of the grid spacing.
    """
    rng = np.random.default_rng(seed)
    axes = [np.linspace(lo, hi, num)] * dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    spacing = (hi - lo) / max(num - 1, 1)
    return pts + rng.uniform(-jitter, jitter, size=pts.shape) * spacing


@dataclass
class OnPolicyConfig:
    alpha: float
    dt: float
    windows_per_iteration: int
    init_states: np.ndarray
    tolerance: float = 1e-7
    max_iterations: int = 100
    seed: int = 0
    substeps: int = 10

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.dt <= 0 or self.tolerance <= 0:
            raise ValueError("dt and tolerance must be positive")
        self.init_states = np.atleast_2d(np.asarray(self.init_states, dtype=float))

    def check_basis(self, basis: BasisSet):
        if self.windows_per_iteration <= len(basis):
            raise ValueError(
                f"windows_per_iteration ({self.windows_per_iteration}) must exceed the "
                f"number of critic weights ({len(basis)})")


@dataclass
class OnPolicyResult:
    weights: np.ndarray
    converged: bool
    iterations: int
    history: list = field(default_factory=list)
    changes: list = field(default_factory=list)


def rollout_windows(spec: GameSpec, V: CriticFunction, cfg: OnPolicyConfig):
    """Roll out one window per initial state under the policies of ``V``.

    Initial states are reused cyclically until ``windows_per_iteration``
    windows exist.
    """
    pol = extract_policies(spec, V)
    starts = cfg.init_states
    return [
        integrate_feedback_window(spec.dyn, starts[k % len(starts)], pol.control,
                                  pol.disturbance, cfg.dt, cfg.substeps)
        for k in range(cfg.windows_per_iteration)
    ]


def _reward_integrals(spec, V, windows):
    pol = extract_policies(spec, V)
    out = np.empty(len(windows))
    for j, win in enumerate(windows):
        wts = quadrature_weights(win.substeps, win.dt)
        vals = [spec.running_cost(x, pol.control(x), pol.disturbance(x))
                for x in win.substep_states]
        out[j] = wts @ np.asarray(vals)
    return out


def _decrements(basis, windows):
    starts = np.array([w.x_start for w in windows])
    ends = np.array([w.x_end for w in windows])
    return basis.eval(starts) - basis.eval(ends)


def assemble_regression(spec: GameSpec, basis: BasisSet, W_i, windows, alpha: float):
    """Regressors ``rho(x(t)) - rho(x(t+dt))`` (rows) and damped targets."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    V = CriticFunction(basis, W_i)
    X = _decrements(basis, windows)
    y = (1.0 - alpha) * (X @ V.weights) + alpha * _reward_integrals(spec, V, windows)
    return X, y


def bellman_targets(spec: GameSpec, basis: BasisSet, W_i, windows):
    """Undamped policy-evaluation targets ``int (Q + u'Ru - gamma^2 w'w) dt``."""
    return _reward_integrals(spec, CriticFunction(basis, W_i), windows)


def onpolicy_iterate(spec: GameSpec, cfg: OnPolicyConfig, basis: BasisSet, W_i,
                     windows=None):
    """One on-policy step ``W_i -> W_{i+1}``.

    Fresh windows are rolled out under the policies of ``W_i`` unless
    ``windows`` is given (those must have been generated under the same
    policies).
    """
    cfg.check_basis(basis)
    W_i = np.asarray(W_i, dtype=float)
    if not np.all(np.isfinite(W_i)):
        raise ValueError("W_i must be finite")
    if windows is None:
        windows = rollout_windows(spec, CriticFunction(basis, W_i), cfg)
    X, y = assemble_regression(spec, basis, W_i, windows, cfg.alpha)
    try:
        W, _ = batch_least_squares(X, y, names=basis.labels())
    except ExcitationInsufficient as exc:
        raise ExcitationInsufficient(
            f"{exc}; add more or better-spread init_states",
            exc.smallest_singular_value) from exc
    return W


def onpolicy_solve(spec: GameSpec, cfg: OnPolicyConfig, basis: BasisSet, W_0) -> OnPolicyResult:
    """Iterate :func:`onpolicy_iterate` until ``|W_{i+1} - W_i| <= tolerance``.

    Reaching ``max_iterations`` returns the last iterate with
    ``converged=False``.
    """
    W = np.array(W_0, dtype=float)
    result = OnPolicyResult(W.copy(), False, 0, [W.copy()], [])
    for i in range(cfg.max_iterations):
        W_new = onpolicy_iterate(spec, cfg, basis, W)
        change = float(np.linalg.norm(W_new - W))
        W = W_new
        result.history.append(W.copy())
        result.changes.append(change)
        result.iterations = i + 1
        if change <= cfg.tolerance:
            result.converged = True
            break
    result.weights = W
    return result


def damped_newton_matrix_step(A, B, D, Qm, R, gamma, P_i, alpha):
    """Damped Newton step on the game Riccati operator for ``V = x'Px``.

    Solves

        Ac' P+ + P+ Ac = (1 - alpha)(Ac' P_i + P_i Ac)
                         - alpha (Q + P_i S P_i - gamma^-2 P_i D D' P_i)

    with ``S = B R^-1 B'`` and ``Ac = A - S P_i + gamma^-2 D D' P_i``, the
    closed-loop drift under the policies of ``P_i``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    D = np.asarray(D, dtype=float).reshape(n, -1)
    Qm = np.atleast_2d(np.asarray(Qm, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    P_i = np.asarray(P_i, dtype=float)
    S = B @ np.linalg.solve(R, B.T)
    T = D @ D.T / gamma ** 2
    Ac = A - S @ P_i + T @ P_i
    rhs = ((1.0 - alpha) * (Ac.T @ P_i + P_i @ Ac)
           - alpha * (Qm + P_i @ S @ P_i - P_i @ T @ P_i))
    return solve_lyapunov(Ac, rhs)
