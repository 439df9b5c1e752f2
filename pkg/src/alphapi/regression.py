"""Batch least squares shared by the on- and off-policy learners."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExcitationInsufficient

__all__ = ["LstsqInfo", "batch_least_squares"]

COND_LIMIT = 1e12
RIDGE_FACTOR = 1e-10
RANK_FLOOR = 1e-15


@dataclass(frozen=True)
class LstsqInfo:
    condition: float
    smallest_singular_value: float
    ridge: float
    residual_inf: float
    dropped: tuple = ()


def batch_least_squares(features, targets, names=None, required=None, groups=None,
                        rcond=None):
    """Least-squares weights ``W`` minimizing ``|features @ W - targets|``.

    Columns are rescaled group by group: every column of a group is divided
    by the largest column norm in that group, so weights that act in the
    same physical units stay comparable.  When the condition number of the
    rescaled matrix exceeds ``1e12`` a ridge term ``1e-10 * trace(X'X) / N``
    is added, which suppresses weights whose regressors are many orders of
    magnitude weaker than the rest of their group.

    Parameters
    ----------
    features : ndarray, shape (N, L)
        One row per sample window.
    targets : ndarray, shape (N,)
    names : sequence of str, optional
        Column labels used in error messages.
    required : array_like of bool, optional
        Columns that must be excited.  An identically zero column outside
        this mask is dropped and reported in ``LstsqInfo.dropped`` with a
        zero weight; by default every column is required.
    groups : array_like of int, optional
        Group label per column.  By default all columns form one group.
    rcond : float, optional
        Singular values of the rescaled matrix below ``rcond`` times the
        largest are discarded (truncated SVD).  Use it when the data only
        inform a few directions and the rest would be fitted to model error.

    Raises
    ------
    ExcitationInsufficient
        If a required column is identically zero or the columns are linearly
        dependent to machine precision once each is normalized.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    N, L = X.shape
    if N < L:
        raise ExcitationInsufficient(f"{N} samples for {L} unknowns; collect more data")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ExcitationInsufficient("non-finite regression data")
    norms = np.linalg.norm(X, axis=0)
    dead = norms <= np.finfo(float).tiny
    req = np.ones(L, bool) if required is None else np.asarray(required, bool)
    if np.any(dead & req) or dead.all():
        bad = np.flatnonzero(dead & req) if np.any(dead & req) else np.flatnonzero(dead)
        label = [names[j] for j in bad] if names is not None else bad.tolist()
        raise ExcitationInsufficient(
            f"regressor columns {label} are identically zero; the data do not excite "
            "these weights (use richer exploration or more spread initial states)", 0.0)
    live = ~dead
    grp = np.zeros(L, int) if groups is None else np.asarray(groups, int)
    scale = np.empty(L)
    for g in np.unique(grp):
        sel = grp == g
        scale[sel] = norms[sel].max()
    W = np.zeros(L)
    X = X[:, live]
    s_geo = np.linalg.svd(X / norms[live], compute_uv=False)
    if s_geo[-1] <= RANK_FLOOR * s_geo[0]:
        raise ExcitationInsufficient(
            f"regression matrix is rank deficient (smallest singular value {s_geo[-1]:.3e}, "
            f"largest {s_geo[0]:.3e}); collect better-spread data", s_geo[-1])
    scale = scale[live]
    U, s, Vt = np.linalg.svd(X / scale, full_matrices=False)
    cond = s[0] / s[-1] if s[-1] > 0 else np.inf
    ridge = 0.0
    if cond > COND_LIMIT:
        ridge = RIDGE_FACTOR * float(np.sum(s ** 2)) / N
    filt = s / (s ** 2 + ridge)
    if rcond is not None:
        filt[s < rcond * s[0]] = 0.0
    W[live] = (Vt.T @ (filt * (U.T @ y))) / scale
    res = float(np.max(np.abs(X @ W[live] - y)))
    dropped = tuple(names[j] if names is not None else int(j) for j in np.flatnonzero(dead))
    return W, LstsqInfo(float(cond), float(s_geo[-1]), ridge, res, dropped)
