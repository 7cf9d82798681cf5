"""Two-point flux finite volumes for the implicit m-equation, and its Newton solve.

Per inner edge ``e = (l, r)`` with ``T = 2 |e| / d``:

* diffusive gain of ``l``: ``F = H(D_l, D_r) (m_r - m_l) T``
* drift strength: ``g = H(V_l, V_r) (v_r - v_l) T``; transport ``l -> r`` is
  ``g * m_up`` with ``m_up`` taken from the cell the flow leaves.

``H(a, b) = a b / (a + b)``, defined as 0 when ``a + b <= 1e-300`` or either
argument is negative. The
residual of a cell is ``m - dt / |c| * sum(F_c - drift_c) - rhs``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from . import kernels
from .grid import EdgeRef, Grid
from .model import ModelParams, State, TaxisVariant

HARMONIC_GUARD = 1e-300


class NewtonDivergence(RuntimeError):
    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


class SingularJacobian(RuntimeError):
    pass


def _harmonic(a: float, b: float) -> float:
    s = a + b
    return a * b / s if a >= 0 and b >= 0 and s > HARMONIC_GUARD else 0.0


def edge_diffusive_flux(D_left: float, D_right: float, m_left: float, m_right: float,
                        edge: EdgeRef) -> float:
    """Diffusive flux into the left cell of ``edge``."""
    return _harmonic(D_left, D_right) * (m_right - m_left) * 2.0 * edge.measure / edge.distance


def edge_drift_flux(V_left: float, V_right: float, v_left: float, v_right: float,
                    m_left: float, m_right: float, edge: EdgeRef) -> float:
    """Haptotactic transport from left to right, upwinded."""
    g = _harmonic(V_left, V_right) * (v_right - v_left) * 2.0 * edge.measure / edge.distance
    if g > 0:
        return g * m_left
    if g < 0:
        return g * m_right
    return 0.0


@dataclass
class EdgeFluxes:
    """``diffusive[e]``: gain of the left cell; ``drift[e]``: transport left to right."""

    diffusive: np.ndarray
    drift: np.ndarray

    def cell_gain(self, grid: Grid) -> np.ndarray:
        """Net flux gain of every cell (integrated over its edges)."""
        net = self.diffusive - self.drift
        n = grid.n_cells
        return (np.bincount(grid.edge_left, weights=net, minlength=n)
                - np.bincount(grid.edge_right, weights=net, minlength=n))


def compute_edge_fluxes(state: State, grid: Grid, params: ModelParams) -> EdgeFluxes:
    F, drift = kernels._fallback.edge_fluxes(
        state.m, state.p, state.v, grid.edge_left, grid.edge_right, grid.transmissibility,
        params.kappa_m, params.kappa_v, params.eps1,
        params.taxis_variant is TaxisVariant.NUMERICS,
    )
    return EdgeFluxes(F, drift)


@dataclass
class ImplicitProblem:
    """Residual and Jacobian of one implicit step for the unknown ``m``.

    ``p`` and ``v`` are the post-reaction values, held fixed during the solve.
    """

    grid: Grid
    params: ModelParams
    p: np.ndarray
    v: np.ndarray
    rhs: np.ndarray
    dt: float
    backend: str | None = None
    _trans: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.grid.n_cells
        for name in ("p", "v", "rhs"):
            if np.shape(getattr(self, name)) != (n,):
                raise ValueError(f"{name} has shape {np.shape(getattr(self, name))}, grid has {n} cells")
        self._trans = np.ascontiguousarray(self.grid.transmissibility)

    def _assemble(self, m: np.ndarray, want_jacobian: bool):
        if np.shape(m) != (self.grid.n_cells,):
            raise ValueError(f"m has shape {np.shape(m)}, grid has {self.grid.n_cells} cells")
        st = self.grid.stencil
        prm = self.params
        return kernels.assemble(
            m, self.p, self.v, self.rhs, self.grid.edge_left, self.grid.edge_right,
            self._trans, self.dt / self.grid.cell_area, prm.kappa_m, prm.kappa_v, prm.eps1,
            prm.taxis_variant is TaxisVariant.NUMERICS,
            st.pos_diag, st.pos_ll, st.pos_lr, st.pos_rl, st.pos_rr, st.nnz,
            want_jacobian, backend=self.backend,
        )

    def residual(self, m: np.ndarray) -> np.ndarray:
        return self._assemble(m, False)[0]

    def residual_and_jacobian(self, m: np.ndarray) -> tuple[np.ndarray, sp.csr_matrix]:
        r, data = self._assemble(m, True)
        st = self.grid.stencil
        n = self.grid.n_cells
        return r, sp.csr_matrix((data, st.indices, st.indptr), shape=(n, n))

    def _local_evaluator(self, x: np.ndarray, cells: np.ndarray):
        """``f(y)``: residuals of ``cells`` at ``m[cells] = y``, every other cell held at ``x``."""
        prm = self.params
        numerics = prm.taxis_variant is TaxisVariant.NUMERICS
        coef = kernels._fallback.coefficients
        harm = kernels._fallback._harmonic
        L, R, T = self.grid.edge_left, self.grid.edge_right, self._trans
        n, k = x.size, cells.size
        slot = np.full(n, -1)
        slot[cells] = np.arange(k)
        el = np.flatnonzero(slot[L] >= 0)  # edges whose left cell varies
        er = np.flatnonzero(slot[R] >= 0)
        a, b = slot[L[el]], slot[R[er]]
        Dx, _, Vx, _ = coef(x, self.p, self.v, prm.kappa_m, prm.kappa_v, prm.eps1, numerics)
        x_r, D_r, V_r = x[R[el]], Dx[R[el]], Vx[R[el]]
        x_l, D_l, V_l = x[L[er]], Dx[L[er]], Vx[L[er]]
        dvt_l = (self.v[R[el]] - self.v[L[el]]) * T[el]
        dvt_r = (self.v[R[er]] - self.v[L[er]]) * T[er]
        p, v, rhs = self.p[cells], self.v[cells], self.rhs[cells]
        scale = self.dt / self.grid.cell_area

        def f(y):
            Dy, _, Vy, _ = coef(y, p, v, prm.kappa_m, prm.kappa_v, prm.eps1, numerics)
            g = harm(Vy[a], V_r)[0] * dvt_l
            net_l = harm(Dy[a], D_r)[0] * (x_r - y[a]) * T[el] - g * np.where(g > 0, y[a], x_r)
            g = harm(V_l, Vy[b])[0] * dvt_r
            net_r = harm(D_l, Dy[b])[0] * (y[b] - x_l) * T[er] - g * np.where(g > 0, x_l, y[b])
            div = np.bincount(a, weights=net_l, minlength=k) - np.bincount(b, weights=net_r, minlength=k)
            return y - scale * div - rhs

        return f

    def local_residual(self, y: np.ndarray, x: np.ndarray, cells=None) -> np.ndarray:
        """Residual of each cell ``c`` in ``cells`` (default all) at ``m_c = y_c``,
        with its neighbours held at ``x``."""
        cells = np.arange(x.size) if cells is None else np.asarray(cells)
        return self._local_evaluator(x, cells)(np.asarray(y)[cells])

    def _cell_roots(self, x: np.ndarray, cells: np.ndarray) -> np.ndarray:
        # nonnegative root of each local residual by bisection; f(0) <= 0 when x, rhs >= 0
        f = self._local_evaluator(x, cells)
        lo = np.zeros(cells.size)
        f0 = f(lo)
        hi = np.maximum(x[cells], 1e-3)
        for _ in range(BRACKET_DOUBLINGS):
            short = f(hi) <= 0
            if not short.any():
                break
            hi = np.where(short, 2.0 * hi, hi)
        for _ in range(BISECTIONS):
            mid = 0.5 * (lo + hi)
            below = f(mid) <= 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return np.where(f0 >= 0, 0.0, 0.5 * (lo + hi))

    def smooth(self, m: np.ndarray) -> np.ndarray:
        """One red-black nonlinear Gauss-Seidel sweep on the nonnegative branch.

        Each cell is moved to the nonnegative root of its own residual with the
        neighbours frozen. Unlike a Newton step from the stage value, this
        cannot be trapped on the negative branch at a degenerate front. Cells
        with zero residual are already solved and are skipped.
        """
        x = np.maximum(np.asarray(m, dtype=float), 0.0)
        idx = np.arange(x.size)
        color = (idx % self.grid.nx + idx // self.grid.nx) % 2
        for c in (0, 1):
            cells = np.flatnonzero((color == c) & (self.residual(x) != 0))
            if cells.size:
                x[cells] = self._cell_roots(x, cells)
        return x


BRACKET_DOUBLINGS = 60
BISECTIONS = 60


def assemble_residual(m_new, stage: State, rhs, grid: Grid, params: ModelParams,
                      dt: float) -> np.ndarray:
    return ImplicitProblem(grid, params, stage.p, stage.v, np.asarray(rhs, dtype=float), dt).residual(
        np.asarray(m_new, dtype=float))


def assemble_jacobian(m_new, stage: State, grid: Grid, params: ModelParams,
                      dt: float) -> sp.csr_matrix:
    rhs = np.zeros(grid.n_cells)
    prob = ImplicitProblem(grid, params, stage.p, stage.v, rhs, dt)
    return prob.residual_and_jacobian(np.asarray(m_new, dtype=float))[1]


def sparse_linear_solve(matrix, rhs, tol: float) -> np.ndarray:
    """Solve ``matrix x = rhs`` by sparse LU, with up to two refinement sweeps.

    Raises SingularJacobian when the factorization breaks down or the
    residual bound ``||A x - b|| <= tol ||b||`` cannot be met.
    """
    A = sp.csc_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.size:
        raise ValueError(f"shape mismatch: matrix {A.shape}, rhs {b.shape}")
    if b.size == 0:
        return b.copy()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularJacobian(str(exc)) from exc
    x = lu.solve(b)
    bnorm = np.linalg.norm(b)
    for sweep in range(3):
        if not np.all(np.isfinite(x)):
            raise SingularJacobian("non-finite solution from sparse LU")
        res = b - A @ x
        if np.linalg.norm(res) <= tol * bnorm:
            return x
        if sweep < 2:
            x = x + lu.solve(res)
    raise SingularJacobian(
        f"linear residual {np.linalg.norm(b - A @ x):.3e} above {tol:.1e} * ||b|| = {tol * bnorm:.3e}")


def coupled_cells(jacobian: sp.csr_matrix, residual: np.ndarray) -> np.ndarray:
    """Cells that can carry a nonzero Newton correction.

    This is the union of connected components (through nonzero off-diagonal
    Jacobian entries) that contain a nonzero residual. Outside it the
    correction is exactly zero, so the linear solve can be restricted.
    """
    pattern = jacobian.copy()
    pattern.eliminate_zeros()
    _, labels = connected_components(pattern, directed=False)
    hit = np.zeros(labels.max(initial=-1) + 1, dtype=bool)
    hit[labels[residual != 0]] = True
    return np.flatnonzero(hit[labels])


@dataclass
class NewtonStats:
    iterations: int
    residual_norm: float
    history: list[float]
    active_cells: int = 0
    fallback_steps: int = 0


NEGATIVITY_TOL = 1e-12
DECREASE = 1e-4


def _newton_correction(J, r, cfg, restrict):
    dx = np.zeros_like(r)
    if not restrict:
        return sparse_linear_solve(J, -r, cfg.linear_tol), r.size
    idx = coupled_cells(J, r)
    if idx.size:
        dx[idx] = sparse_linear_solve(J[idx][:, idx], -r[idx], cfg.linear_tol)
    return dx, idx.size


def newton_solve(initial_guess, problem, cfg, restrict: bool = True) -> tuple[np.ndarray, NewtonStats]:
    """Safeguarded Newton iteration on ``problem.residual_and_jacobian``.

    Each iteration tries the full Newton correction. It is kept when the
    max-norm residual decreases and, for problems with a ``smooth`` method,
    the iterate stays nonnegative. Otherwise the iteration takes one
    ``problem.smooth`` sweep instead (or, without one, halves the correction
    until the residual decreases). At least one iteration is always taken.
    Convergence: max-norm residual at most ``cfg.newton_tol``.
    """
    x = np.array(initial_guess, dtype=float)
    r, J = problem.residual_and_jacobian(x)
    history = [float(np.max(np.abs(r), initial=0.0))]
    smooth = getattr(problem, "smooth", None)
    active = 0
    fallbacks = 0
    for it in range(1, cfg.newton_max_iter + 1):
        dx, size = _newton_correction(J, r, cfg, restrict)
        active = max(active, size)
        target = (1.0 - DECREASE) * history[-1]
        trial = x + dx
        norm = float(np.max(np.abs(problem.residual(trial)), initial=0.0))
        positive = smooth is None or trial.min(initial=0.0) >= -NEGATIVITY_TOL
        if not (positive and norm <= target):
            fallbacks += 1
            if smooth is not None:
                trial = smooth(x)
            else:
                lam = 1.0
                for _ in range(12):
                    lam *= 0.5
                    trial = x + lam * dx
                    if np.max(np.abs(problem.residual(trial)), initial=0.0) <= target:
                        break
        x = trial
        r, J = problem.residual_and_jacobian(x)
        norm = float(np.max(np.abs(r), initial=0.0))
        history.append(norm)
        if not np.isfinite(norm):
            break
        if norm <= cfg.newton_tol:
            return x, NewtonStats(it, norm, history, active, fallbacks)
    raise NewtonDivergence(
        f"Newton residual {history[-1]:.3e} above tolerance {cfg.newton_tol:.1e} "
        f"after {len(history) - 1} iterations", history)
