"""Ground truth for linear-quadratic zero-sum games.

For ``xdot = A x + B u + D w`` and cost ``x'Qx + u'Ru - gamma^2 w'w`` the HJI
equation with ``V = x'Px`` reduces to the game algebraic Riccati equation

    A'P + PA + Q - P B R^-1 B' P + gamma^-2 P D D' P = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_are

from .errors import GammaTooSmall, StepFailure

__all__ = ["GareSolution", "solve_lyapunov", "gare_residual", "solve_gare",
           "quadratic_weights", "weights_to_matrix"]


@dataclass(frozen=True)
class GareSolution:
    P: np.ndarray
    K: np.ndarray
    L: np.ndarray
    iterations: int
    residual: float


def solve_lyapunov(Ac, C):
    """Solve ``Ac' X + X Ac = C`` through the Kronecker-vectorized linear system."""
    Ac = np.atleast_2d(np.asarray(Ac, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = Ac.shape[0]
    eye = np.eye(n)
    op = np.kron(eye, Ac.T) + np.kron(Ac.T, eye)
    if np.linalg.cond(op) > 1e14:
        raise StepFailure("Lyapunov operator is singular (closed loop has eigenvalues "
                          "summing to zero)")
    X = np.linalg.solve(op, C.reshape(-1, order="F")).reshape(n, n, order="F")
    return 0.5 * (X + X.T)


def _matrices(A, B, D, Qm, R):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    D = np.asarray(D, dtype=float).reshape(n, -1)
    Qm = np.atleast_2d(np.asarray(Qm, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    return A, B, D, Qm, R


def gare_residual(A, B, D, Qm, R, gamma, P):
    A, B, D, Qm, R = _matrices(A, B, D, Qm, R)
    return (A.T @ P + P @ A + Qm - P @ B @ np.linalg.solve(R, B.T) @ P
            + P @ D @ D.T @ P / gamma ** 2)


def solve_gare(A, B, D, Qm, R, gamma, tol=1e-12, max_iter=100) -> GareSolution:
    """Newton-Lyapunov iteration for the game Riccati equation.

    Starts from the control-only Riccati solution (gamma -> infinity) and
    repeatedly solves

        Ac' P+ + P+ Ac = -(Q + P B R^-1 B' P - gamma^-2 P D D' P),
        Ac = A - B R^-1 B' P + gamma^-2 D D' P.

    Raises
    ------
    GammaTooSmall
        If the control-only equation has no stabilizing solution, a Lyapunov
        step is singular, the iterate stops being positive semidefinite, or
        the iteration fails to converge.
    """
    A, B, D, Qm, R = _matrices(A, B, D, Qm, R)
    n = A.shape[0]
    S = B @ np.linalg.solve(R, B.T)
    if np.allclose(B, 0.0):
        P = np.zeros((n, n))
    else:
        try:
            P = solve_continuous_are(A, B, Qm, R)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise GammaTooSmall("no stabilizing solution even without disturbance "
                                f"(is (A, B) stabilizable?): {exc}") from exc
    T = D @ D.T / gamma ** 2
    it = 0
    for it in range(1, max_iter + 1):
        Ac = A - S @ P + T @ P
        try:
            P_new = solve_lyapunov(Ac, -(Qm + P @ S @ P - P @ T @ P))
        except StepFailure as exc:
            raise GammaTooSmall(f"Riccati iteration failed at step {it}: {exc}") from exc
        if not np.all(np.isfinite(P_new)) or np.linalg.norm(P_new) > 1e12:
            raise GammaTooSmall(f"Riccati iteration diverged at step {it}")
        step = np.linalg.norm(P_new - P)
        P = P_new
        if step <= tol * (1.0 + np.linalg.norm(P)):
            break
    else:
        raise GammaTooSmall(f"Riccati iteration did not converge in {max_iter} steps")
    if np.linalg.eigvalsh(P).min() < -1e-9 * max(1.0, np.abs(P).max()):
        raise GammaTooSmall("Riccati iterate is not positive semidefinite")
    res = float(np.linalg.norm(gare_residual(A, B, D, Qm, R, gamma, P)))
    K = np.linalg.solve(R, B.T @ P)
    L = D.T @ P / gamma ** 2
    return GareSolution(P, K, L, it, res)


def quadratic_weights(P, terms):
    """Critic weights reproducing ``x'Px`` on a basis of quadratic monomials."""
    P = np.asarray(P, dtype=float)
    out = []
    for t in terms:
        idx = [i for i, e in enumerate(t) for _ in range(e)]
        if len(idx) != 2:
            raise ValueError(f"term {t} is not quadratic")
        i, j = idx
        out.append(P[i, i] if i == j else 2.0 * P[i, j])
    return np.array(out)


def weights_to_matrix(weights, terms, n):
    """Inverse of :func:`quadratic_weights`."""
    P = np.zeros((n, n))
    for w, t in zip(weights, terms):
        idx = [i for i, e in enumerate(t) for _ in range(e)]
        if len(idx) != 2:
            raise ValueError(f"term {t} is not quadratic")
        i, j = idx
        if i == j:
            P[i, i] = w
        else:
            P[i, j] = P[j, i] = 0.5 * w
    return P
