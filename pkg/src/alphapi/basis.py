"""Multivariate monomial bases with exact gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BasisSet", "paper_bases", "parse_terms", "format_terms"]


@dataclass(frozen=True)
class BasisSet:
    """Ordered list of monomials ``prod_i x_i ** e_i``.

    Every term must have total degree at least one so that the span vanishes
    at the origin.

    Parameters
    ----------
    state_dim : int
    terms : sequence of sequence of int
        One exponent multi-index per basis function.
    """

    state_dim: int
    terms: tuple

    def __post_init__(self):
        terms = tuple(tuple(int(e) for e in t) for t in self.terms)
        if not terms:
            raise ValueError("a basis needs at least one term")
        for t in terms:
            if len(t) != self.state_dim:
                raise ValueError(f"term {t} does not have {self.state_dim} exponents")
            if min(t) < 0:
                raise ValueError(f"term {t} has a negative exponent")
            if sum(t) < 1:
                raise ValueError(f"term {t} has total degree 0")
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate terms in basis")
        object.__setattr__(self, "terms", terms)
        exps = np.array(terms, dtype=float)
        exps.setflags(write=False)
        object.__setattr__(self, "_exps", exps)

    def __len__(self):
        return len(self.terms)

    @property
    def exponents(self) -> np.ndarray:
        """``(L, n)`` exponent matrix."""
        return self._exps

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.state_dim,):
            raise ValueError(
                f"expected trailing dimension {self.state_dim}, got shape {x.shape}")
        return x

    def eval(self, x) -> np.ndarray:
        """Basis values; ``x`` of shape ``(..., n)`` gives ``(..., L)``."""
        x = self._check(x)
        return np.prod(x[..., None, :] ** self._exps, axis=-1)

    def eval_gradient(self, x) -> np.ndarray:
        """Jacobian of the basis; ``x`` of shape ``(..., n)`` gives ``(..., L, n)``."""
        x = self._check(x)
        n = self.state_dim
        out = np.empty(x.shape[:-1] + (len(self), n))
        for i in range(n):
            lowered = self._exps.copy()
            lowered[:, i] = np.maximum(lowered[:, i] - 1.0, 0.0)
            out[..., i] = self._exps[:, i] * np.prod(x[..., None, :] ** lowered, axis=-1)
        return out

    def labels(self, names=None):
        names = names or [f"x{i + 1}" for i in range(self.state_dim)]
        out = []
        for t in self.terms:
            parts = [v if e == 1 else f"{v}^{e}" for v, e in zip(names, t) if e]
            out.append("*".join(parts))
        return out

    def to_text(self) -> str:
        return format_terms(self.terms)

    @classmethod
    def from_text(cls, text: str) -> "BasisSet":
        terms = parse_terms(text)
        if not terms:
            raise ValueError("empty basis text")
        return cls(len(terms[0]), tuple(terms))


def parse_terms(text: str):
    """Parse one term per line (or ``;``-separated) of space-separated exponents."""
    terms = []
    for line in text.replace(";", "\n").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            terms.append(tuple(int(tok) for tok in line.split()))
    return terms


def format_terms(terms) -> str:
    return "\n".join(" ".join(str(e) for e in t) for t in terms)


_EXAMPLE_A_CRITIC = ((2, 0), (0, 2), (1, 1), (4, 0), (0, 4))
_EXAMPLE_A_ACTOR = ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1), (1, 2), (3, 0), (0, 3))
_MISSILE_CRITIC = ((4, 0), (3, 1), (2, 2), (1, 3), (0, 4), (2, 0), (1, 1), (0, 2))
_MISSILE_ACTOR = ((0, 1), (2, 1), (0, 3))


def paper_bases(which: str):
    """Critic, actor and disturbance bases of the two benchmark experiments.

    Parameters
    ----------
    which : {"example_a", "missile"}

    Returns
    -------
    (critic, actor, disturbance) : tuple of BasisSet
    """
    if which == "example_a":
        critic, actor = _EXAMPLE_A_CRITIC, _EXAMPLE_A_ACTOR
    elif which == "missile":
        critic, actor = _MISSILE_CRITIC, _MISSILE_ACTOR
    else:
        raise ValueError(f"unknown basis family {which!r}")
    return BasisSet(2, critic), BasisSet(2, actor), BasisSet(2, actor)
