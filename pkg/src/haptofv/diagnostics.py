"""Conserved quantities, physical bounds and estimate functionals of a state."""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import NamedTuple, Optional

import numpy as np

from .grid import Grid
from .model import ModelParams, State

BOUND_TOL = 1e-12


@dataclass
class DiagnosticsRecord:
    time: float
    mass_m: float
    mass_p: float
    mass_v: float
    min_m: float
    max_m: float
    min_p: float
    max_p: float
    min_v: float
    max_v: float
    entropy_m: float
    entropy_m_full: float
    grad_energy_v: float
    p_bound: float
    newton_iters: int
    mass_balance_residual: float

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> tuple:
        return astuple(self)


class Violation(NamedTuple):
    cell: int
    field: str
    value: float


def truncated_entropy(m: np.ndarray, area: float) -> float:
    """``sum |c| m ln m`` over cells with ``m > 1``."""
    big = m[m > 1]
    return float(area * np.sum(big * np.log(big)))


def full_entropy(m: np.ndarray, area: float) -> float:
    """``sum |c| (m ln m - m)`` over cells with ``m > 0``."""
    pos = m[m > 0]
    return float(area * np.sum(pos * np.log(pos) - pos))


def sqrt_tissue_gradient_energy(v: np.ndarray, grid: Grid) -> float:
    """Two-point discrete ``||grad v^(1/2)||^2``: sum over edges of ``|e|/d (dv^(1/2))^2``."""
    s = np.sqrt(np.clip(v, 0.0, None))
    jump = s[grid.edge_right] - s[grid.edge_left]
    return float(np.sum(grid.edge_measure / grid.edge_distance * jump * jump))


def compute_record(state: State, grid: Grid, time: float, step_stats=None,
                   previous: Optional[DiagnosticsRecord] = None) -> DiagnosticsRecord:
    """Diagnostics of ``state``; ``p_bound`` continues the running max of ``previous``."""
    a = grid.cell_area
    m, p, v = (np.asarray(x, dtype=float) for x in (state.m, state.p, state.v))
    p_bound = float(p.max())
    if previous is not None:
        p_bound = max(p_bound, previous.p_bound)
    return DiagnosticsRecord(
        time=float(time),
        mass_m=float(a * m.sum()), mass_p=float(a * p.sum()), mass_v=float(a * v.sum()),
        min_m=float(m.min()), max_m=float(m.max()),
        min_p=float(p.min()), max_p=float(p.max()),
        min_v=float(v.min()), max_v=float(v.max()),
        entropy_m=truncated_entropy(m, a),
        entropy_m_full=full_entropy(m, a),
        grad_energy_v=sqrt_tissue_gradient_energy(v, grid),
        p_bound=p_bound,
        newton_iters=int(step_stats.newton_iters) if step_stats is not None else 0,
        mass_balance_residual=float(step_stats.mass_balance) if step_stats is not None else 0.0,
    )


def p_upper_bound(params: ModelParams, p0_max: float) -> float:
    """``C_p = max(1, alpha / mu_p, p0_max)``; p cannot grow past it under the reactions."""
    ratio = params.alpha / params.mu_p if params.mu_p > 0 else math.inf
    return max(1.0, ratio, float(p0_max))


def check_bounds(state: State, p0_max: float, params: Optional[ModelParams] = None,
                 tol: float = BOUND_TOL) -> list[Violation]:
    params = params or ModelParams()
    cp = p_upper_bound(params, p0_max)
    out = []
    for name, lo, hi in (("m", -tol, math.inf), ("p", -tol, cp + tol), ("v", -tol, 1 + tol)):
        a = np.asarray(getattr(state, name), dtype=float)
        bad = np.flatnonzero(~((a >= lo) & (a <= hi)))
        out.extend(Violation(int(c), name, float(a[c])) for c in bad)
    return out


def mass_balance_check(before: State, after: State, reaction_integral: float, grid: Grid) -> float:
    """Tumor mass change not explained by ``reaction_integral``."""
    a = grid.cell_area
    change = a * ((np.sum(after.m) - np.sum(before.m)) + (np.sum(after.p) - np.sum(before.p)))
    return float(abs(change - reaction_integral))
