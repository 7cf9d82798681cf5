"""Coefficients, reaction terms and parameters of the go-or-grow haptotaxis model.

Unknowns per cell are the migrating cell density ``m``, the proliferating cell
density ``p`` and the tissue (ECM fiber) density ``v``. The scalar functions
here validate their inputs; the array kernels in :mod:`haptofv.kernels` do not.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields

import numpy as np


class DomainError(ValueError):
    """Input outside the physical range of the model."""


class TaxisVariant(str, enum.Enum):
    #: haptotactic sensitivity kappa_v / (1 + v)^2
    CONTINUOUS = "continuous"
    #: haptotactic sensitivity kappa_v / (1 + m + p)^2
    NUMERICS = "numerics"


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.01
    beta: float = 0.2
    kappa_m: float = 0.1
    kappa_v: float = 0.1
    mu_p: float = 0.3
    mu_v: float = 0.021
    eta: float = 1.75
    lam: float = 0.1
    eps1: float = 0.0
    taxis_variant: TaxisVariant = TaxisVariant.CONTINUOUS

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name == "taxis_variant":
                continue
            val = getattr(self, f.name)
            if not val >= 0:
                raise DomainError(f"{f.name} must be nonnegative, got {val}")
        object.__setattr__(self, "taxis_variant", TaxisVariant(self.taxis_variant))

    @property
    def rates(self) -> tuple:
        """``(alpha, beta, mu_p, mu_v, eta, lam)`` in kernel argument order."""
        return (self.alpha, self.beta, self.mu_p, self.mu_v, self.eta, self.lam)


@dataclass
class State:
    """Piecewise-constant fields, one value per cell."""

    m: np.ndarray
    p: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        self.m = np.asarray(self.m)
        self.p = np.asarray(self.p)
        self.v = np.asarray(self.v)
        if not (self.m.shape == self.p.shape == self.v.shape) or self.m.ndim != 1:
            raise ValueError(
                f"m, p, v must be 1-d arrays of equal length, got "
                f"{self.m.shape}, {self.p.shape}, {self.v.shape}"
            )

    def __len__(self) -> int:
        return self.m.size

    @property
    def c(self) -> np.ndarray:
        return self.m + self.p

    def copy(self) -> "State":
        return State(self.m.copy(), self.p.copy(), self.v.copy())

    @classmethod
    def zeros(cls, n: int) -> "State":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))


def total_density(state: State, cell: int) -> float:
    """Tumor burden ``c = m + p`` at one cell."""
    if not 0 <= cell < len(state):
        raise IndexError(f"cell {cell} out of range for {len(state)} cells")
    return state.m[cell] + state.p[cell]


def _check_admissible(m, p, v) -> None:
    if np.any(np.asarray(m) < 0) or np.any(np.asarray(p) < 0):
        raise DomainError(f"densities must be nonnegative, got m={m}, p={p}")
    if np.any(np.asarray(v) < 0) or np.any(np.asarray(v) > 1):
        raise DomainError(f"tissue density must lie in [0, 1], got v={v}")


def diffusion_coefficient(m, p, v, params: ModelParams):
    """``kappa_m v c / (1 + v c) + eps1``; vanishes (up to eps1) where v c = 0."""
    _check_admissible(m, p, v)
    vc = v * (m + p)
    return params.kappa_m * vc / (1.0 + vc) + params.eps1


def drift_velocity_coefficient(m, p, v, params: ModelParams):
    _check_admissible(m, p, v)
    if params.taxis_variant is TaxisVariant.NUMERICS:
        return params.kappa_v / (1.0 + m + p) ** 2
    return params.kappa_v / (1.0 + v) ** 2


def reaction_rhs(m, p, v, params: ModelParams):
    """Right-hand side ``(dm, dp, dv)`` of the cell-wise reaction system."""
    _check_admissible(m, p, v)
    return reaction_terms(m, p, v, params)


def reaction_terms(m, p, v, params: ModelParams):
    # unchecked; works on floats, arrays and mpmath numbers alike
    a, b = params.alpha, params.beta
    switch = -a * m + b * p * v
    dm = switch
    dp = -switch + params.mu_p * p * (1 - (m + p) - params.eta * v)
    dv = params.mu_v * v * (1 - v) - params.lam * v * m
    return dm, dp, dv
