"""Time-step refinement studies used by the ``convergence`` command and the tests."""
from __future__ import annotations

import math
from dataclasses import replace

import mpmath
import numpy as np

from .grid import Grid, build_grid
from .initial import generate_initial_state
from .integrate import TimeStepConfig, rk4_reaction_step, run_simulation
from .model import ModelParams, State


def logistic_exact(v0, mu, t):
    """Closed-form solution of ``v' = mu v (1 - v)``."""
    g = mpmath.exp(mu * t) if isinstance(v0, mpmath.mpf) else math.exp(mu * t)
    return v0 * g / (1 - v0 + v0 * g)


def logistic_rk4_errors(dts, t_end=1.0, mu_v=0.021, v0=0.5, digits=50):
    """Global RK4 error on the tissue logistic (``m = p = 0``) for each dt.

    The library's RK4 step runs on mpmath numbers with ``digits`` significant
    digits; at ``mu_v = 0.021`` the truncation error is near 1e-19, far below
    float64 roundoff.
    """
    errors = []
    with mpmath.workdps(digits):
        mpf = mpmath.mpf
        params = ModelParams(mu_v=mpf(str(mu_v)))
        exact = logistic_exact(mpf(str(v0)), params.mu_v, mpf(str(t_end)))
        for dt in dts:
            dt_m = mpf(str(dt))
            n = int(round(float(mpf(str(t_end)) / dt_m)))
            zero = np.array([mpf(0)], dtype=object)
            state = State(zero.copy(), zero.copy(), np.array([mpf(str(v0))], dtype=object))
            for _ in range(n):
                state = rk4_reaction_step(state, params, dt_m)
            errors.append(abs(state.v[0] - exact))
    return [float(e) for e in errors]


def observed_orders(errors) -> list[float]:
    return [math.log2(a / b) for a, b in zip(errors[:-1], errors[1:])]


def default_problem(n: int = 20, seed: int = 0) -> tuple[Grid, State]:
    grid = build_grid(n, n)
    return grid, generate_initial_state(grid, seed=seed)


def weighted_norm(a: State, b: State, grid: Grid) -> float:
    """Cell-measure weighted L2 distance over all three fields."""
    diff = np.concatenate([a.m - b.m, a.p - b.p, a.v - b.v])
    return float(np.sqrt(grid.cell_area * np.sum(diff * diff)))


def imex_solutions(grid: Grid, initial: State, params: ModelParams, dts, t_end: float,
                   base: TimeStepConfig = TimeStepConfig()) -> list[State]:
    return [run_simulation(initial, grid, params, replace(base, dt=dt, t_end=t_end))
            for dt in dts]


def imex_self_convergence(grid: Grid, initial: State, params: ModelParams,
                          dts=(0.04, 0.02, 0.01), t_end: float = 1.0):
    """Differences between successive dt-halvings and their ratios."""
    sols = imex_solutions(grid, initial, params, dts, t_end)
    diffs = [weighted_norm(a, b, grid) for a, b in zip(sols[:-1], sols[1:])]
    ratios = [a / b for a, b in zip(diffs[:-1], diffs[1:])]
    return diffs, ratios
