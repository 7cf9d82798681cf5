"""IMEX time stepping: explicit RK4 on the cell-wise reactions, implicit Euler on
the convection-diffusion of ``m`` solved by Newton."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .diagnostics import DiagnosticsRecord, compute_record
from .fv import ImplicitProblem, NewtonDivergence, SingularJacobian, newton_solve
from .grid import Grid
from .model import ModelParams, State

BOUND_TOL = 1e-12


class BoundViolation(RuntimeError):
    """A field left its physical range after a step."""


class SimulationAborted(RuntimeError):
    """Raised by :func:`run_simulation`; carries the last accepted state."""

    def __init__(self, message: str, state: State, time: float, step: int,
                 cause: BaseException):
        super().__init__(message)
        self.state = state
        self.time = time
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class TimeStepConfig:
    dt: float = 0.01
    t_end: float = 1000.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    linear_tol: float = 1e-12

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        for name in ("newton_tol", "linear_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if int(self.newton_max_iter) != self.newton_max_iter or self.newton_max_iter < 1:
            raise ValueError(f"newton_max_iter must be a positive integer, got {self.newton_max_iter}")

    @property
    def n_steps(self) -> int:
        # tolerate t_end / dt landing a few ulps above an integer
        return max(0, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass
class StepStats:
    newton_iters: int
    residual_norm: float
    mass_balance: float
    residual_history: list[float] = field(default_factory=list)
    active_cells: int = 0


def rk4_reaction_step(state: State, params: ModelParams, dt, *, check: bool = True,
                      backend: Optional[str] = None) -> State:
    """One classical RK4 step of the reaction system in every cell."""
    m, p, v = kernels.rk4_reaction(state.m, state.p, state.v, *params.rates, dt, backend=backend)
    out = State(m, p, v)
    if check:
        _check_reaction_bounds(out)
    return out


def _check_reaction_bounds(state: State) -> None:
    for name, lo, hi in (("m", -BOUND_TOL, math.inf), ("p", -BOUND_TOL, math.inf),
                         ("v", -BOUND_TOL, 1 + BOUND_TOL)):
        a = getattr(state, name)
        bad = np.flatnonzero((a < lo) | (a > hi) | ~np.isfinite(a.astype(float)))
        if bad.size:
            c = int(bad[0])
            raise BoundViolation(
                f"{name}[{c}] = {a[c]!r} outside [{lo}, {hi}] after reaction step "
                f"({bad.size} cells); dt too large for the reaction stiffness")


def imex_step(state: State, grid: Grid, params: ModelParams, cfg: TimeStepConfig, *,
              reactions: bool = True, backend: Optional[str] = None) -> tuple[State, StepStats]:
    """Advance one step: RK4 reactions, then implicit Euler transport of ``m``."""
    if len(state) != grid.n_cells:
        raise ValueError(f"state has {len(state)} cells, grid has {grid.n_cells}")
    stage = rk4_reaction_step(state, params, cfg.dt, backend=backend) if reactions else state.copy()
    problem = ImplicitProblem(grid, params, stage.p, stage.v, stage.m, cfg.dt, backend=backend)
    m_new, nstats = newton_solve(stage.m, problem, cfg)

    mass_stage = float(np.sum(stage.m))
    balance = abs(float(np.sum(m_new)) - mass_stage) / mass_stage if mass_stage > 0 else \
        abs(float(np.sum(m_new)))
    bad = np.flatnonzero(m_new < -BOUND_TOL)
    if bad.size:
        c = int(bad[0])
        raise BoundViolation(f"m[{c}] = {m_new[c]!r} negative after implicit step ({bad.size} cells)")
    stats = StepStats(nstats.iterations, nstats.residual_norm, balance, nstats.history,
                      nstats.active_cells)
    return State(m_new, stage.p, stage.v), stats


Sink = Callable[[int, float, State, DiagnosticsRecord], None]


def run_simulation(initial: State, grid: Grid, params: ModelParams, cfg: TimeStepConfig,
                   sink: Optional[Sink] = None, *, record_every: int = 1,
                   reactions: bool = True, backend: Optional[str] = None) -> State:
    """Advance ``cfg.n_steps`` IMEX steps from ``initial``.

    ``sink(step, time, state, record)`` is called at step 0, every
    ``record_every`` steps, and after the final step. On solver failure or a
    bound violation, :class:`SimulationAborted` is raised with the last
    accepted state.
    """
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    state = initial
    n = cfg.n_steps
    record = compute_record(state, grid, 0.0, None, None)
    if sink is not None:
        sink(0, 0.0, state, record)
    for k in range(1, n + 1):
        try:
            state_new, stats = imex_step(state, grid, params, cfg, reactions=reactions,
                                         backend=backend)
        except (NewtonDivergence, SingularJacobian, BoundViolation) as exc:
            t = (k - 1) * cfg.dt
            raise SimulationAborted(f"step {k} (t={k * cfg.dt:g}) failed: {exc}",
                                    state, t, k - 1, exc) from exc
        state = state_new
        if sink is not None and (k % record_every == 0 or k == n):
            record = compute_record(state, grid, k * cfg.dt, stats, record)
            sink(k, k * cfg.dt, state, record)
    return state
