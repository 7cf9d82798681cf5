"""Uniform structured quadrilateral grid on the unit square.

Cells are linearized row-major, ``index = i + nx * j``. Only inner edges are
stored; boundary faces have no record, so the no-flux condition holds by
construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

X_EDGE = 0
Y_EDGE = 1


class DimensionError(ValueError):
    pass


class EdgeRef(NamedTuple):
    """An inner edge seen from ``left``.

    ``index`` is the global edge id; the same edge seen from the other cell
    carries the same id with ``left`` and ``right`` swapped.
    """

    index: int
    left: int
    right: int
    orientation: int
    measure: float
    distance: float


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    hx: float = field(init=False)
    hy: float = field(init=False)
    edge_left: np.ndarray = field(init=False, repr=False)
    edge_right: np.ndarray = field(init=False, repr=False)
    edge_orientation: np.ndarray = field(init=False, repr=False)
    edge_measure: np.ndarray = field(init=False, repr=False)
    edge_distance: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise DimensionError(f"grid sizes must be integers, got {self.nx}x{self.ny}")
        if self.nx < 2 or self.ny < 2:
            raise DimensionError(f"grid needs nx >= 2 and ny >= 2, got {self.nx}x{self.ny}")
        nx, ny = int(self.nx), int(self.ny)
        hx, hy = 1.0 / nx, 1.0 / ny

        # x-edges first (j outer, i inner), then y-edges.
        i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny), indexing="xy")
        xl = (i + nx * j).ravel()
        i, j = np.meshgrid(np.arange(nx), np.arange(ny - 1), indexing="xy")
        yl = (i + nx * j).ravel()
        left = np.concatenate([xl, yl]).astype(np.int64)
        right = np.concatenate([xl + 1, yl + nx]).astype(np.int64)
        orient = np.concatenate(
            [np.full(xl.size, X_EDGE, np.int8), np.full(yl.size, Y_EDGE, np.int8)]
        )
        measure = np.where(orient == X_EDGE, hy, hx)
        distance = np.where(orient == X_EDGE, hx, hy)

        values = dict(
            nx=nx, ny=ny, hx=hx, hy=hy, edge_left=left, edge_right=right,
            edge_orientation=orient, edge_measure=measure, edge_distance=distance,
        )
        for name, val in values.items():
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "_stencil", _StencilPattern(self))

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_edges(self) -> int:
        return self.edge_left.size

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def transmissibility(self) -> np.ndarray:
        """Geometric factor ``2 |e| / d`` of the two-point flux, per edge."""
        return 2.0 * self.edge_measure / self.edge_distance

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Center coordinates of every cell, in linear order."""
        xc = (np.arange(self.nx) + 0.5) * self.hx
        yc = (np.arange(self.ny) + 0.5) * self.hy
        x, y = np.meshgrid(xc, yc, indexing="xy")
        return x.ravel(), y.ravel()

    def cell_index(self, i: int, j: int) -> int:
        return i + self.nx * j

    def to_2d(self, values: np.ndarray) -> np.ndarray:
        """View a per-cell array as ``(ny, nx)``, row ``j`` holding ``y = (j + 0.5) hy``."""
        return np.asarray(values).reshape(self.ny, self.nx)

    @property
    def stencil(self) -> "_StencilPattern":
        return self._stencil  # type: ignore[attr-defined]


class _StencilPattern:
    """CSR sparsity of the 5-point stencil plus scatter positions per edge.

    ``pos_ll[e]`` is the position in ``data`` of entry (left, left) of edge
    ``e``, and likewise for ``pos_lr``, ``pos_rl``, ``pos_rr``.
    """

    def __init__(self, grid: Grid) -> None:
        n = grid.n_cells
        left, right = grid.edge_left, grid.edge_right
        rows = np.concatenate([np.arange(n), left, right])
        cols = np.concatenate([np.arange(n), right, left])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        self.nnz = rows.size
        self.indices = cols.astype(np.int32)
        self.indptr = np.zeros(n + 1, dtype=np.int32)
        np.cumsum(np.bincount(rows, minlength=n), out=self.indptr[1:])

        key = rows.astype(np.int64) * n + cols
        def lookup(r, c):
            return np.searchsorted(key, r.astype(np.int64) * n + c).astype(np.int64)

        diag = np.arange(n)
        self.pos_diag = lookup(diag, diag)
        self.pos_ll = lookup(left, left)
        self.pos_lr = lookup(left, right)
        self.pos_rl = lookup(right, left)
        self.pos_rr = lookup(right, right)
        for arr in (self.indices, self.indptr, self.pos_diag, self.pos_ll,
                    self.pos_lr, self.pos_rl, self.pos_rr):
            arr.setflags(write=False)


def build_grid(nx: int, ny: int) -> Grid:
    """Construct the uniform ``nx`` by ``ny`` grid on ``(0, 1)^2``."""
    return Grid(nx, ny)


def neighbors(grid: Grid, cell: int) -> list[EdgeRef]:
    """Inner edges incident to ``cell``, each oriented away from it."""
    if not 0 <= cell < grid.n_cells:
        raise IndexError(f"cell {cell} out of range for {grid.n_cells} cells")
    nx, ny = grid.nx, grid.ny
    i, j = cell % nx, cell // nx
    n_x_edges = (nx - 1) * ny
    out = []
    if i > 0:
        out.append(EdgeRef((i - 1) + (nx - 1) * j, cell, cell - 1, X_EDGE, grid.hy, grid.hx))
    if i < nx - 1:
        out.append(EdgeRef(i + (nx - 1) * j, cell, cell + 1, X_EDGE, grid.hy, grid.hx))
    if j > 0:
        out.append(EdgeRef(n_x_edges + cell - nx, cell, cell - nx, Y_EDGE, grid.hx, grid.hy))
    if j < ny - 1:
        out.append(EdgeRef(n_x_edges + cell, cell, cell + nx, Y_EDGE, grid.hx, grid.hy))
    return out
