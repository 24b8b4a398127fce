# src/grid_fields.py
"""
Uniform grid on D = (-M, M)^2 with a node/cell dual representation.

Nodal fields (state u, adjoint p, sampled sources) live on the (n-1)^2
interior nodes; the boundary is identically zero and never stored.
Cell fields (potential mu, lower bound nu, gradients) live on the n^2 cells.
Both are stored row-major: row j follows the y axis, column i the x axis.
"""
from dataclasses import dataclass

import numpy as np

from src.errors import InvalidArgumentError


@dataclass(frozen=True)
class Grid:
    M: float
    n: int

    @property
    def h(self) -> float:
        return 2.0 * self.M / self.n

    @property
    def num_cells(self) -> int:
        return self.n * self.n

    @property
    def num_interior(self) -> int:
        return (self.n - 1) * (self.n - 1)

    @property
    def area(self) -> float:
        return 4.0 * self.M * self.M

    def node_coords(self) -> np.ndarray:
        """x_i = -M + i*h for i = 0..n."""
        return -self.M + self.h * np.arange(self.n + 1)

    def cell_centers(self) -> np.ndarray:
        return -self.M + self.h * (np.arange(self.n) + 0.5)

    def interior_xy(self):
        """Meshgrid of interior node coordinates, shape (n-1, n-1), rows = y."""
        c = self.node_coords()[1:-1]
        return np.meshgrid(c, c)

    def cell_xy(self):
        c = self.cell_centers()
        return np.meshgrid(c, c)


def make_grid(M, n) -> Grid:
    if not np.isfinite(M) or M <= 0:
        raise InvalidArgumentError(f"M must be positive, got {M}")
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"n must be an integer >= 2, got {n}")
    if int(n) % 2:
        raise InvalidArgumentError(f"n must be even so the origin is a node, got {n}")
    return Grid(M=float(M), n=int(n))


def _frozen(values, length, what):
    arr = np.array(values, dtype=float).ravel()
    if arr.size != length:
        raise InvalidArgumentError(f"{what} expects {length} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{what} values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NodalField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.num_interior, "NodalField"))

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.n - 1, self.grid.n - 1)

    def full(self) -> np.ndarray:
        """All (n+1)^2 node values, zero on the boundary."""
        out = np.zeros((self.grid.n + 1, self.grid.n + 1))
        out[1:-1, 1:-1] = self.as_array()
        return out

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.num_interior))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.num_interior, float(value)))


@dataclass(frozen=True, eq=False)
class CellField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.num_cells, "CellField"))

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.n, self.grid.n)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.num_cells))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.num_cells, float(value)))


def check_same_grid(grid, *fields):
    for fld in fields:
        if fld.grid != grid:
            raise InvalidArgumentError(f"field lives on {fld.grid}, expected {grid}")


def integrate_cells(grid, c: CellField) -> float:
    check_same_grid(grid, c)
    return float(grid.h ** 2 * np.sum(c.values))


def node_pair_to_cell(grid, a: NodalField, b: NodalField) -> CellField:
    """
    Lumped quadrature of a*b per cell: (h^2/4) * sum of a_k b_k over the
    four corner nodes. This is the exact derivative of the lumped mass term
    sum_k mu_bar_k a_k b_k with respect to mu_c.
    """
    check_same_grid(grid, a, b)
    q = np.zeros((grid.n + 1, grid.n + 1))
    q[1:-1, 1:-1] = a.as_array() * b.as_array()
    corners = q[:-1, :-1] + q[:-1, 1:] + q[1:, :-1] + q[1:, 1:]
    return CellField(grid, 0.25 * grid.h ** 2 * corners)


def cell_to_node_mean(grid, c: CellField) -> np.ndarray:
    """mu_bar_k: mean of the four cells around each interior node."""
    check_same_grid(grid, c)
    arr = c.as_array()
    mean = 0.25 * (arr[:-1, :-1] + arr[:-1, 1:] + arr[1:, :-1] + arr[1:, 1:])
    return mean.ravel()
