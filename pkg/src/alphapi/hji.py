"""Value functions, saddle-point policies and HJI residuals.

For a value function ``V`` with gradient ``p = dV/dx`` the saddle-point
policies are

    u = -1/2 R^-1 g(x)' p,        w = 1/(2 gamma^2) k(x)' p

and the HJI operator is

    G(V)(x) = Q + p'f - 1/4 p' g R^-1 g' p + 1/(4 gamma^2) p' k k' p.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import BasisSet
from .dynamics import AffineDynamics

__all__ = [
    "CriticFunction",
    "GameSpec",
    "PolicyPair",
    "extract_policies",
    "hamiltonian",
    "g_residual",
    "frechet_apply",
    "frechet_apply_closed_loop",
    "bellman_residual",
    "generalized_bellman_residual",
    "state_grid",
    "residual_on_grid",
]


@dataclass(frozen=True)
class CriticFunction:
    """``V(x) = W' rho(x)``."""

    basis: BasisSet
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size != len(self.basis):
            raise ValueError(f"{w.size} weights for a basis of {len(self.basis)} terms")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def state_dim(self) -> int:
        return self.basis.state_dim

    def __call__(self, x):
        return self.basis.eval(x) @ self.weights

    def gradient(self, x) -> np.ndarray:
        return np.einsum("...ln,l->...n", self.basis.eval_gradient(x), self.weights)

    def scaled(self, c):
        return CriticFunction(self.basis, c * self.weights)

    def __add__(self, other):
        if other.basis != self.basis:
            raise ValueError("critics live on different bases")
        return CriticFunction(self.basis, self.weights + other.weights)

    def __sub__(self, other):
        return self + other.scaled(-1.0)


@dataclass(frozen=True)
class GameSpec:
    """Plant plus the game parameters gamma and diag(R)."""

    dyn: AffineDynamics
    gamma: float
    R_diag: np.ndarray

    def __post_init__(self):
        r = np.atleast_1d(np.array(self.R_diag, dtype=float))
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if r.shape != (self.dyn.control_dim,):
            raise ValueError(f"R_diag must have {self.dyn.control_dim} entries")
        if np.any(r <= 0):
            raise ValueError("R_diag entries must be positive")
        r.setflags(write=False)
        object.__setattr__(self, "R_diag", r)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def R(self) -> np.ndarray:
        return np.diag(self.R_diag)

    def running_cost(self, x, u, w) -> float:
        """``Q(x) + u'Ru - gamma^2 w'w``."""
        u = np.atleast_1d(u)
        w = np.atleast_1d(w)
        return float(self.dyn.state_cost(x) + u @ (self.R_diag * u)
                     - self.gamma ** 2 * (w @ w))


@dataclass(frozen=True)
class PolicyPair:
    control: Callable[[np.ndarray], np.ndarray]
    disturbance: Callable[[np.ndarray], np.ndarray]


def _controls(spec, p, x):
    g = spec.dyn.control_gain(x)
    k = spec.dyn.disturbance_gain(x)
    u = -0.5 * (g.T @ p) / spec.R_diag
    w = (k.T @ p) / (2.0 * spec.gamma ** 2)
    return u, w


def extract_policies(spec: GameSpec, V: CriticFunction) -> PolicyPair:
    """Saddle-point policies induced by the critic ``V``."""
    if V.state_dim != spec.dyn.state_dim:
        raise ValueError("critic and plant state dimensions differ")

    def control(x):
        x = np.asarray(x, dtype=float)
        return _controls(spec, V.gradient(x), x)[0]

    def disturbance(x):
        x = np.asarray(x, dtype=float)
        return _controls(spec, V.gradient(x), x)[1]

    return PolicyPair(control, disturbance)


def hamiltonian(spec: GameSpec, V: CriticFunction, x, u, w) -> float:
    x = np.asarray(x, dtype=float)
    return spec.running_cost(x, u, w) + float(V.gradient(x) @ spec.dyn.rhs(x, u, w))


def g_residual(spec: GameSpec, V: CriticFunction, x) -> float:
    """HJI operator ``G(V)`` evaluated at ``x``; zero where V solves the HJI equation."""
    x = np.asarray(x, dtype=float)
    p = V.gradient(x)
    gp = spec.dyn.control_gain(x).T @ p
    kp = spec.dyn.disturbance_gain(x).T @ p
    return float(spec.dyn.state_cost(x) + p @ spec.dyn.drift(x)
                 - 0.25 * gp @ (gp / spec.R_diag)
                 + kp @ kp / (4.0 * spec.gamma ** 2))


def frechet_apply(spec: GameSpec, V: CriticFunction, Z: CriticFunction, x) -> float:
    """Frechet differential ``G'(V) Z`` at ``x``, in its expanded form."""
    x = np.asarray(x, dtype=float)
    pv = V.gradient(x)
    pz = Z.gradient(x)
    g = spec.dyn.control_gain(x)
    k = spec.dyn.disturbance_gain(x)
    gv, gz = g.T @ pv, g.T @ pz
    kv, kz = k.T @ pv, k.T @ pz
    c = 1.0 / (4.0 * spec.gamma ** 2)
    return float(pz @ spec.dyn.drift(x)
                 - 0.25 * gz @ (gv / spec.R_diag)
                 - 0.25 * gv @ (gz / spec.R_diag)
                 + c * kv @ kz + c * kz @ kv)


def frechet_apply_closed_loop(spec: GameSpec, V: CriticFunction, Z: CriticFunction, x) -> float:
    """Same differential written as ``dZ/dx' (f + g u_V + k w_V)``."""
    x = np.asarray(x, dtype=float)
    u, w = _controls(spec, V.gradient(x), x)
    return float(Z.gradient(x) @ spec.dyn.rhs(x, u, w))


def bellman_residual(spec: GameSpec, V_next: CriticFunction, V_cur: CriticFunction, x) -> float:
    """Policy-evaluation residual ``Q + u'Ru - gamma^2 w'w + dV_next/dx' (f + g u + k w)``
    with ``(u, w)`` extracted from ``V_cur``."""
    x = np.asarray(x, dtype=float)
    u, w = _controls(spec, V_cur.gradient(x), x)
    return spec.running_cost(x, u, w) + float(V_next.gradient(x) @ spec.dyn.rhs(x, u, w))


def generalized_bellman_residual(spec: GameSpec, V_next: CriticFunction,
                                 V_cur: CriticFunction, alpha: float, x) -> float:
    """Residual of the damped policy-evaluation equation at ``x``.

    ``dV_next' F - (1 - alpha) dV_cur' F + alpha (Q + u'Ru - gamma^2 w'w)`` where
    ``F = f + g u + k w`` and ``(u, w)`` are the policies of ``V_cur``.  At
    ``alpha = 1`` this is :func:`bellman_residual`.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    x = np.asarray(x, dtype=float)
    p_cur = V_cur.gradient(x)
    u, w = _controls(spec, p_cur, x)
    F = spec.dyn.rhs(x, u, w)
    return float(V_next.gradient(x) @ F - (1.0 - alpha) * (p_cur @ F)
                 + alpha * spec.running_cost(x, u, w))


def state_grid(lo=-1.0, hi=1.0, num=21, dim=2) -> np.ndarray:
    """Tensor grid over ``[lo, hi]^dim`` as an array of shape ``(num**dim, dim)``."""
    axes = [np.linspace(lo, hi, num)] * dim
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)


def residual_on_grid(fun, grid) -> np.ndarray:
    """Evaluate a pointwise residual ``fun(x)`` at every grid row."""
    return np.array([fun(x) for x in grid])
