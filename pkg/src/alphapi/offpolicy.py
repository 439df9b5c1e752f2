"""Model-free off-policy damped policy iteration.

Data are collected once under arbitrary behavior inputs ``(u, w)``.  Each
iteration then fits critic, actor and disturbance weights jointly from

    dRho' Wc + 2 sum_j r_j int phi mu_j dt ' Wa_j - 2 gamma^2 sum_k int psi nu_k dt ' Wd_k
        = -alpha int (Q + u_i'R u_i - gamma^2 w_i'w_i) dt + (1 - alpha) [same row] . W_i

with ``mu = u - u_i(x)`` and ``nu = w - w_i(x)`` re-evaluated along the
stored sub-step states for the current actor and disturbance weights.
Neither the drift nor the input gains are used.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .basis import BasisSet
from .dynamics import SampleWindow, integrate_window, quadrature_weights
from .errors import ExcitationInsufficient, IntegrationBlowup, StaleData
from .hji import GameSpec, PolicyPair
from .regression import LstsqInfo, batch_least_squares


__all__ = [
    "DataSet",
    "Bases",
    "StackedWeights",
    "OffPolicyResult",
    "collect",
    "prepare",
    "assemble_features",
    "irl_regression",
    "offpolicy_iterate",
    "offpolicy_solve",
]


class Bases(NamedTuple):
    critic: BasisSet
    actor: BasisSet
    disturbance: BasisSet


@dataclass(frozen=True)
class DataSet:
    """Immutable sequence of windows cut from one or more trajectories."""

    windows: tuple
    state_dim: int
    control_dim: int
    disturbance_dim: int
    dt: float
    substeps: int
    seed: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        for win in self.windows:
            if win.substep_states.shape != (self.substeps + 1, self.state_dim):
                raise ValueError("window shape does not match the data set header")
            if win.behavior_control is None or win.behavior_disturbance is None:
                raise ValueError("off-policy windows must record the behavior inputs")

    def __len__(self):
        return len(self.windows)

    @property
    def fingerprint(self):
        return (self.state_dim, self.control_dim, self.disturbance_dim, self.dt, self.name)

    @property
    def states(self) -> np.ndarray:
        """``(M, substeps + 1, n)`` sub-step states."""
        return np.stack([w.substep_states for w in self.windows])

    @property
    def controls(self) -> np.ndarray:
        return np.stack([w.behavior_control for w in self.windows])

    @property
    def disturbances(self) -> np.ndarray:
        return np.stack([w.behavior_disturbance for w in self.windows])

    def check_compatible(self, spec: GameSpec):
        dyn = spec.dyn
        dims = (dyn.state_dim, dyn.control_dim, dyn.disturbance_dim)
        if dims != (self.state_dim, self.control_dim, self.disturbance_dim):
            raise StaleData(f"data collected for (n, m, q) = {self.fingerprint[:3]}, "
                            f"problem has {dims}")
        if self.name and dyn.name and self.name != dyn.name:
            raise StaleData(f"data collected on plant {self.name!r}, problem is {dyn.name!r}")

    # text round trip -------------------------------------------------------
    def to_text(self) -> str:
        lines = [
            "# alphapi dataset v1",
            f"n {self.state_dim}",
            f"m {self.control_dim}",
            f"q {self.disturbance_dim}",
            f"M {len(self.windows)}",
            f"dt {self.dt!r}",
            f"substeps {self.substeps}",
            f"seed {'none' if self.seed is None else self.seed}",
            f"name {self.name or '-'}",
        ]
        for win in self.windows:
            lines.append(f"window {float(win.t_start)!r}")
            lines.append("u " + " ".join(repr(float(v)) for v in win.behavior_control))
            lines.append("w " + " ".join(repr(float(v)) for v in win.behavior_disturbance))
            for x in win.substep_states:
                lines.append("x " + " ".join(repr(float(v)) for v in x))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DataSet":
        header = {}
        windows = []
        cur = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, rest = line.partition(" ")
            if key == "window":
                if cur is not None:
                    windows.append(cur)
                cur = {"t": float(rest), "x": []}
            elif key in ("u", "w", "x"):
                vals = [float(v) for v in rest.split()]
                if key == "x":
                    cur["x"].append(vals)
                else:
                    cur[key] = vals
            else:
                header[key] = rest.strip()
        if cur is not None:
            windows.append(cur)
        dt = float(header["dt"])
        wins = [SampleWindow(c["t"], dt, np.array(c["x"]), np.array(c["u"]), np.array(c["w"]))
                for c in windows]
        if len(wins) != int(header["M"]):
            raise ValueError(f"header announces {header['M']} windows, found {len(wins)}")
        seed = None if header.get("seed", "none") == "none" else int(header["seed"])
        name = header.get("name", "-")
        return cls(tuple(wins), int(header["n"]), int(header["m"]), int(header["q"]), dt,
                   int(header["substeps"]), seed, "" if name == "-" else name)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "DataSet":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


@dataclass(frozen=True)
class StackedWeights:
    """Critic ``(L1,)``, actor ``(L2, m)`` and disturbance ``(L3, q)`` weights."""

    critic: np.ndarray
    actor: np.ndarray
    disturbance: np.ndarray

    def __post_init__(self):
        for name in ("critic", "actor", "disturbance"):
            a = np.array(getattr(self, name), dtype=float)
            if name == "critic":
                a = a.reshape(-1)
            elif a.ndim == 1:
                a = a[:, None]
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def zeros(cls, bases: Bases, m: int, q: int) -> "StackedWeights":
        return cls(np.zeros(len(bases.critic)), np.zeros((len(bases.actor), m)),
                   np.zeros((len(bases.disturbance), q)))

    def stack(self) -> np.ndarray:
        """``[Wc; Wa_1; ...; Wa_m; Wd_1; ...; Wd_q]``."""
        return np.concatenate([self.critic, self.actor.T.reshape(-1),
                               self.disturbance.T.reshape(-1)])

    @classmethod
    def unstack(cls, vec, bases: Bases, m: int, q: int) -> "StackedWeights":
        vec = np.asarray(vec, dtype=float)
        L1, L2, L3 = len(bases.critic), len(bases.actor), len(bases.disturbance)
        if vec.size != L1 + m * L2 + q * L3:
            raise ValueError("stacked vector has the wrong length")
        wc = vec[:L1]
        wa = vec[L1:L1 + m * L2].reshape(m, L2).T
        wd = vec[L1 + m * L2:].reshape(q, L3).T
        return cls(wc, wa, wd)

    def control(self, actor_basis: BasisSet):
        return lambda x: actor_basis.eval(x) @ self.actor

    def disturbance_policy(self, dist_basis: BasisSet):
        return lambda x: dist_basis.eval(x) @ self.disturbance


@dataclass
class OffPolicyResult:
    weights: StackedWeights
    converged: bool
    iterations: int
    history: list = field(default_factory=list)
    changes: list = field(default_factory=list)
    last_solve: Optional[LstsqInfo] = None


def collect(spec: GameSpec, x0, M: int, dt: float, behavior: Optional[PolicyPair] = None,
            seed: Optional[int] = None, substeps: int = 10, amplitude: float = 1.0,
            t0: float = 0.0) -> DataSet:
    """Record ``M`` consecutive windows of one trajectory.

    Behavior inputs are held constant over each window.  With
    ``behavior=None`` they are drawn uniformly from ``[-amplitude,
    amplitude]``; otherwise the policies are evaluated at the window start
    and ``amplitude`` scales added uniform exploration noise (pass 0 for
    none).  The random stream comes from ``numpy.random.default_rng(seed)``.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    dyn = spec.dyn
    m, q = dyn.control_dim, dyn.disturbance_dim
    rng = np.random.default_rng(seed)
    x = dyn.check_state(x0)
    windows = []
    for j in range(M):
        t = t0 + j * dt
        noise_u = rng.uniform(-1.0, 1.0, size=m) * amplitude
        noise_w = rng.uniform(-1.0, 1.0, size=q) * amplitude
        if behavior is None:
            u, w = noise_u, noise_w
        else:
            u = np.atleast_1d(behavior.control(x)) + noise_u
            w = np.atleast_1d(behavior.disturbance(x)) + noise_w
        try:
            win = integrate_window(dyn, x, u, w, dt, substeps, t_start=t)
        except IntegrationBlowup as exc:
            raise IntegrationBlowup(exc.t, f"data collection blew up at t = {exc.t:.6g} s; "
                                    f"{j} of {M} windows were recorded and discarded") from exc
        windows.append(win)
        x = win.x_end
    return DataSet(tuple(windows), dyn.state_dim, m, q, float(dt), substeps, seed, dyn.name)


@dataclass(frozen=True)
class Prepared:
    """Policy-independent quantities of a data set, computed once per solve."""

    weights: np.ndarray          # (S,) quadrature weights
    drho: np.ndarray             # (M, L1) rho(x_end) - rho(x_start)
    phi: np.ndarray              # (M, S, L2) actor basis along sub-steps
    psi: np.ndarray              # (M, S, L3) disturbance basis along sub-steps
    u: np.ndarray                # (M, m)
    w: np.ndarray                # (M, q)
    q_int: np.ndarray            # (M,) int Q dt


def prepare(spec: GameSpec, data: DataSet, bases: Bases) -> Prepared:
    data.check_compatible(spec)
    for b in bases:
        if b.state_dim != data.state_dim:
            raise StaleData("basis state dimension differs from the data")
    S = data.states
    wts = quadrature_weights(data.substeps, data.dt)
    drho = bases.critic.eval(S[:, -1]) - bases.critic.eval(S[:, 0])
    qvals = np.array([[spec.dyn.state_cost(x) for x in win] for win in S])
    return Prepared(wts, drho, bases.actor.eval(S), bases.disturbance.eval(S),
                    data.controls, data.disturbances, qvals @ wts)


def _columns_and_reward(spec, prep: Prepared, W: StackedWeights):
    u_i = prep.phi @ W.actor                        # (M, S, m)
    w_i = prep.psi @ W.disturbance                  # (M, S, q)
    mu = prep.u[:, None, :] - u_i
    nu = prep.w[:, None, :] - w_i
    r = spec.R_diag
    g2 = spec.gamma ** 2
    # int phi(x) mu_j dt for every j, ordered j-major to match the stacking
    act = 2.0 * r[None, :, None] * np.einsum("s,msl,msj->mjl", prep.weights, prep.phi, mu)
    dis = -2.0 * g2 * np.einsum("s,msl,msk->mkl", prep.weights, prep.psi, nu)
    M = prep.drho.shape[0]
    Pi = np.concatenate([prep.drho, act.reshape(M, -1), dis.reshape(M, -1)], axis=1)
    pol_cost = np.einsum("msj,j,msj->ms", u_i, r, u_i) - g2 * np.einsum("msk,msk->ms", w_i, w_i)
    reward = prep.q_int + pol_cost @ prep.weights
    return Pi, reward


def assemble_features(spec: GameSpec, data: DataSet, bases: Bases, W_i: StackedWeights,
                      alpha: float, prepared: Optional[Prepared] = None):
    """Regression rows and targets for one off-policy iteration.

    Returns
    -------
    Pi : ndarray, shape (M, L1 + m L2 + q L3)
        One row per window: ``[rho(x(t+dt)) - rho(x(t)),
        2 r_j int phi mu_j dt (j = 1..m), -2 gamma^2 int psi nu_k dt (k = 1..q)]``.
    Lam : ndarray, shape (M,)
        ``-alpha int (Q + u_i'R u_i - gamma^2 w_i'w_i) dt + (1 - alpha) Pi @ W_i``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    prep = prepared if prepared is not None else prepare(spec, data, bases)
    if W_i.actor.shape != (len(bases.actor), data.control_dim) or \
            W_i.disturbance.shape != (len(bases.disturbance), data.disturbance_dim) or \
            W_i.critic.shape != (len(bases.critic),):
        raise ValueError("weight shapes do not match the bases")
    Pi, reward = _columns_and_reward(spec, prep, W_i)
    Lam = -alpha * reward + (1.0 - alpha) * (Pi @ W_i.stack())
    return Pi, Lam


def irl_regression(spec: GameSpec, data: DataSet, bases: Bases, W_i: StackedWeights):
    """Undamped off-policy integral-RL regression, assembled window by window.

    Kept deliberately separate from :func:`assemble_features`; it is the
    reference that the ``alpha = 1`` case must reproduce.
    """
    rows, targets = [], []
    u_pol = W_i.control(bases.actor)
    w_pol = W_i.disturbance_policy(bases.disturbance)
    R = spec.R_diag
    g2 = spec.gamma ** 2
    for win in data.windows:
        wts = quadrature_weights(win.substeps, win.dt)
        xs = win.substep_states
        ui = np.array([u_pol(x) for x in xs])
        wi = np.array([w_pol(x) for x in xs])
        mu = win.behavior_control - ui
        nu = win.behavior_disturbance - wi
        phi = bases.actor.eval(xs)
        psi = bases.disturbance.eval(xs)
        row = [bases.critic.eval(win.x_end) - bases.critic.eval(win.x_start)]
        for j in range(data.control_dim):
            row.append(2.0 * R[j] * (wts @ (phi * mu[:, j:j + 1])))
        for k in range(data.disturbance_dim):
            row.append(-2.0 * g2 * (wts @ (psi * nu[:, k:k + 1])))
        rows.append(np.concatenate(row))
        cost = [spec.running_cost(x, a, b) for x, a, b in zip(xs, ui, wi)]
        targets.append(-(wts @ np.array(cost)))
    return np.array(rows), np.array(targets)


def _labels(bases, m, q):
    names = [f"critic[{t}]" for t in bases.critic.labels()]
    for j in range(m):
        names += [f"actor{j + 1}[{t}]" for t in bases.actor.labels()]
    for k in range(q):
        names += [f"disturbance{k + 1}[{t}]" for t in bases.disturbance.labels()]
    return names


def _unknowns(bases, m, q):
    return len(bases.critic) + m * len(bases.actor) + q * len(bases.disturbance)


def offpolicy_iterate(spec: GameSpec, data: DataSet, bases: Bases, W_i: StackedWeights,
                      alpha: float, prepared: Optional[Prepared] = None,
                      return_info: bool = False, rcond: Optional[float] = None):
    """One least-squares step ``W_i -> W_{i+1}`` on stored data.

    The critic, actor and disturbance blocks are each rescaled by their
    largest regressor norm.  ``rcond`` truncates the singular values of the
    rescaled matrix (see :func:`alphapi.regression.batch_least_squares`).

    Actor or disturbance weights whose regressors vanish on the data (for
    instance a disturbance input that stayed at zero while the current
    disturbance policy is zero) are not identifiable; they keep their
    values from ``W_i``.

    Raises
    ------
    ValueError
        If the data set has no more windows than unknown weights.
    ExcitationInsufficient
        If the regression cannot be solved (reports the smallest singular value).
    """
    m, q = data.control_dim, data.disturbance_dim
    K = _unknowns(bases, m, q)
    if len(data) <= K:
        raise ValueError(f"need more than {K} windows for {K} unknown weights, have {len(data)}")
    Pi, Lam = assemble_features(spec, data, bases, W_i, alpha, prepared)
    try:
        L1, L2 = len(bases.critic), len(bases.actor) * m
        groups = np.repeat([0, 1, 2], [L1, L2, K - L1 - L2])
        vec, info = batch_least_squares(Pi, Lam, names=_labels(bases, m, q),
                                        required=groups == 0, groups=groups,
                                        rcond=rcond)
    except ExcitationInsufficient as exc:
        raise ExcitationInsufficient(
            f"{exc} [smallest singular value {exc.smallest_singular_value:.3e}]",
            exc.smallest_singular_value) from exc
    if info.dropped:
        dead = np.array([name in info.dropped for name in _labels(bases, m, q)])
        vec[dead] = W_i.stack()[dead]
    W = StackedWeights.unstack(vec, bases, m, q)
    return (W, info) if return_info else W


def offpolicy_solve(spec: GameSpec, data: DataSet, bases: Bases, W_0: StackedWeights,
                    alpha: float, tolerance: float = 1e-7, cap: int = 200,
                    rtol: float = 0.0, rcond: Optional[float] = None) -> OffPolicyResult:
    """Iterate on the same data until ``|W_{i+1} - W_i| <= tolerance + rtol |W_{i+1}|``.

    The norm is Euclidean on the stacked weight vector.  Hitting ``cap``
    returns the last iterate with ``converged=False``.
    """
    prep = prepare(spec, data, bases)
    W = W_0
    result = OffPolicyResult(W, False, 0, [W], [])
    for i in range(cap):
        W_new, info = offpolicy_iterate(spec, data, bases, W, alpha, prep, return_info=True,
                                         rcond=rcond)
        new_vec = W_new.stack()
        change = float(np.linalg.norm(new_vec - W.stack()))
        W = W_new
        result.history.append(W)
        result.changes.append(change)
        result.iterations = i + 1
        result.last_solve = info
        if change <= tolerance + rtol * float(np.linalg.norm(new_vec)):
            result.converged = True
            break
    result.weights = W
    return result
