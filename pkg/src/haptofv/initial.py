"""Grate-like tissue and perturbed Gaussian tumor initial data.

Fields are sampled at cell centers. The random perturbation ``d`` is drawn
per cell and per field from a counter-based splitmix64 stream keyed by the
seed, so the result does not depend on evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .model import State

FIELD_M = 0
FIELD_P = 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class InitialConditionSpec:
    tissue_level: float = 0.9
    sigma_m: float = 0.05
    amp_m: float = 0.5
    radius2_m: float = 0.02
    sigma_p: float = 0.1
    amp_p: float = 0.8
    radius2_p: float = 0.01
    center: tuple[float, float] = (0.5, 0.5)
    cap: float = 1.0
    d_low: float = -0.01
    d_high: float = 0.04

    def __post_init__(self) -> None:
        for name in ("sigma_m", "sigma_p", "amp_m", "amp_p", "radius2_m", "radius2_p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.d_low <= self.d_high:
            raise ValueError("d_low must not exceed d_high")


# Tissue strips: (a, b, offsets) meaning |a*x + b*y - offset| < 0.01.
_STRIPS = (
    (1.0, 0.0, (0.4, 0.45, 0.5, 0.55, 0.6, 0.65)),
    (1.0, -1.0, (-0.2, -0.1, 0.0)),
    (1.0, -0.5, (0.5, 0.6)),
)
_BANDS = ((0.35, 0.45), (0.7, 0.8))
STRIP_HALF_WIDTH = 0.01


def psi(sigma: float, s):
    """Gaussian profile ``exp(-s / (2 sigma^2)) / (2 pi sigma)`` of the squared distance ``s``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return np.exp(-np.asarray(s) / (2.0 * sigma * sigma)) / (2.0 * math.pi * sigma)


def in_tissue_support(x, y=None):
    """Membership in the union of the five grate sets (strict inequalities).

    Accepts a point ``(x, y)`` or separate coordinate arrays.
    """
    if y is None:
        x, y = x
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hit = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    for lo, hi in _BANDS:
        hit |= (y > lo) & (y < hi)
    for a, b, offsets in _STRIPS:
        for off in offsets:
            hit |= np.abs(a * x + b * y - off) < STRIP_HALF_WIDTH
    return hit if hit.ndim else bool(hit)


def splitmix64(counter: np.ndarray, seed: int) -> np.ndarray:
    """Output of the splitmix64 stream seeded with ``seed`` at positions ``counter``."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK64) + (np.asarray(counter, dtype=np.uint64) + np.uint64(1)) * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def perturbation(n_cells: int, field_id: int, seed: int, spec: InitialConditionSpec) -> np.ndarray:
    """Uniform draws on ``[d_low, d_high)``, one per cell, keyed by (seed, cell, field)."""
    counter = 2 * np.arange(n_cells, dtype=np.uint64) + np.uint64(field_id)
    u = (splitmix64(counter, seed) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return spec.d_low + (spec.d_high - spec.d_low) * u


def initial_fields(x, y, d_m, d_p, spec: InitialConditionSpec = InitialConditionSpec()):
    """Evaluate ``(m0, p0, v0)`` at points given the perturbations."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tissue = in_tissue_support(x, y)
    r2 = (x - spec.center[0]) ** 2 + (y - spec.center[1]) ** 2
    m0 = np.where((r2 < spec.radius2_m) & tissue,
                  np.minimum(spec.amp_m * psi(spec.sigma_m, r2 + d_m), spec.cap), 0.0)
    p0 = np.where(r2 < spec.radius2_p,
                  np.minimum(spec.amp_p * psi(spec.sigma_p, r2 + d_p), spec.cap), 0.0)
    v_tilde = spec.tissue_level * tissue
    v0 = np.maximum(v_tilde - (m0 + p0), 0.0)
    return m0, p0, v0


def generate_initial_state(grid: Grid, spec: InitialConditionSpec = InitialConditionSpec(),
                           seed: int = 0) -> State:
    x, y = grid.cell_centers()
    d_m = perturbation(grid.n_cells, FIELD_M, seed, spec)
    d_p = perturbation(grid.n_cells, FIELD_P, seed, spec)
    m0, p0, v0 = initial_fields(x, y, d_m, d_p, spec)
    return State(m0, p0, v0)


def tissue_mask(grid: Grid) -> np.ndarray:
    """Cells whose center lies in the grate support (``v_tilde > 0``)."""
    return in_tissue_support(*grid.cell_centers())
