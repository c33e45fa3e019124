"""Potentials on phase space."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class BasePotential:
    """A potential phi on phase space with Hölder data |phi(x)-phi(y)| <= rho d(x,y)^alpha.

    ``func`` is vectorized over arrays of points. ``constant`` is set when
    phi is constant, which lets induced potentials be tabulated exactly.
    """

    func: Callable[[np.ndarray], np.ndarray]
    rho: float = 0.0
    alpha: float = 1.0
    constant: float | None = None
    description: dict = field(default_factory=dict)

    def __call__(self, P) -> np.ndarray:
        return np.asarray(self.func(np.asarray(P, float)), dtype=float)

    def shifted(self, c: float) -> "BasePotential":
        f = self.func
        const = None if self.constant is None else self.constant + c
        desc = dict(self.description, shift=self.description.get("shift", 0.0) + c)
        return BasePotential(lambda P: f(P) + c, self.rho, self.alpha, const, desc)

    def scaled(self, k: float) -> "BasePotential":
        f = self.func
        const = None if self.constant is None else self.constant * k
        desc = dict(self.description, scale=self.description.get("scale", 1.0) * k)
        return BasePotential(lambda P: k * f(P), abs(k) * self.rho, self.alpha, const, desc)

    def holder_check(self, m, samples: int = 2000, seed: int = 0, scale: float = 1e-2) -> dict:
        """Largest |phi(x)-phi(y)| / (rho d(x,y)^alpha) over random close pairs."""
        rng = np.random.default_rng(seed)
        X = m.sample(samples, rng)
        Y = X + scale * (rng.random(X.shape) - 0.5)
        Y = np.clip(Y, m.phase_space[:, 0] if m.dim > 1 else m.phase_space[0, 0],
                    m.phase_space[:, 1] if m.dim > 1 else m.phase_space[0, 1])
        d = m.distance(X, Y)
        diff = np.abs(self(X) - self(Y))
        ok = d > 0
        if self.rho == 0:
            worst = 0.0 if np.all(diff[ok] == 0) else np.inf
        else:
            worst = float(np.max(diff[ok] / (self.rho * d[ok] ** self.alpha)))
        return {"worst_ratio": worst, "pass": worst <= 1.0 + 1e-9}


def constant(c: float) -> BasePotential:
    return BasePotential(lambda P: np.full(np.shape(P)[0], float(c)), 0.0, 1.0, float(c),
                         {"kind": "constant", "value": float(c)})


def coordinate(coef: float = 1.0, index: int = 0) -> BasePotential:
    """phi(p) = coef * p[index] (p itself for interval maps)."""
    def f(P):
        P = np.asarray(P, float)
        return coef * (P if P.ndim == 1 else P[:, index])
    return BasePotential(f, abs(coef), 1.0, None, {"kind": "coordinate", "coef": coef, "index": index})


def geometric(m, t: float = 1.0) -> BasePotential:
    """phi = -t log ||Df^-1||^-1 (Hölder only away from the critical set)."""
    def f(P):
        with np.errstate(divide="ignore"):
            return -t * np.log(m._df(np.asarray(P, float))[1])
    return BasePotential(f, np.inf, 1.0, None, {"kind": "geometric", "t": t})


def from_config(spec: dict, m=None) -> BasePotential:
    kind = spec.get("kind", "constant")
    if kind == "constant":
        pot = constant(spec.get("value", 0.0))
    elif kind == "coordinate":
        pot = coordinate(spec.get("coef", 1.0), spec.get("index", 0))
    elif kind == "geometric":
        pot = geometric(m, spec.get("t", 1.0))
    else:
        from .errors import ConfigError
        raise ConfigError(f"unknown base potential kind {kind!r}")
    if spec.get("shift"):
        pot = pot.shifted(float(spec["shift"]))
    return pot
