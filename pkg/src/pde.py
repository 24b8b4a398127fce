# src/pde.py
"""
State and adjoint solves for -Laplace(u) + mu u = f on D with u = 0 on the
boundary. 5-point stencil plus lumped potential: an SPD M-matrix.
"""
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from src.errors import InvalidArgumentError, SolverFailureError
from src.grid_fields import (
    CellField,
    NodalField,
    cell_to_node_mean,
    check_same_grid,
)

DEFAULT_TOL = 1e-10
SOLVER_METHODS = ("direct", "cg")


@dataclass(frozen=True, eq=False)
class SchrodingerOperator:
    grid: object
    mu: CellField
    matrix: sp.csr_matrix
    mass: np.ndarray  # mu_bar at interior nodes

    def apply(self, values) -> np.ndarray:
        return self.matrix @ np.asarray(values, dtype=float)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    relative_residual: float
    method: str


def laplacian(grid) -> sp.csr_matrix:
    """Finite-difference -Laplace on the interior nodes (Dirichlet boundary)."""
    m = grid.n - 1
    t = sp.diags([-np.ones(m - 1), 2.0 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1], shape=(m, m))
    eye = sp.identity(m)
    return ((sp.kron(eye, t) + sp.kron(t, eye)) / grid.h ** 2).tocsr()


def assemble(grid, mu: CellField) -> SchrodingerOperator:
    check_same_grid(grid, mu)
    if np.any(mu.values < 0):
        raise InvalidArgumentError("potential mu must be nonnegative in every cell")
    mass = cell_to_node_mean(grid, mu)
    matrix = (laplacian(grid) + sp.diags(mass)).tocsr()
    return SchrodingerOperator(grid=grid, mu=mu, matrix=matrix, mass=mass)


def _relative_residual(matrix, x, b, bnorm):
    return float(np.linalg.norm(matrix @ x - b) / bnorm)


def _solve_direct(matrix, b, tol, bnorm):
    lu = splu(matrix.tocsc())
    x = lu.solve(b)
    res = _relative_residual(matrix, x, b, bnorm)
    steps = 1
    # iterative refinement for badly scaled potentials
    while res > tol and steps < 4:
        x = x + lu.solve(b - matrix @ x)
        res = _relative_residual(matrix, x, b, bnorm)
        steps += 1
    return x, steps, res


def _solve_pcg(matrix, b, tol, bnorm, max_iter):
    """Jacobi-preconditioned conjugate gradient (scipy cg with an inverse-diagonal M)."""
    precond = sp.diags(1.0 / matrix.diagonal())
    history = []

    def track(xk):
        history.append(_relative_residual(matrix, xk, b, bnorm))

    x, info = cg(matrix, b, rtol=tol, atol=0.0, maxiter=max_iter, M=precond, callback=track)
    res = _relative_residual(matrix, x, b, bnorm)
    if info != 0:
        best = min(history + [res])
        raise SolverFailureError(
            f"conjugate gradient did not reach tol={tol:g} in {max_iter} iterations "
            f"(best residual {best:.3e})",
            best_residual=best,
        )
    return x, len(history), res


def default_method():
    method = os.getenv("POTENTIAL_SOLVER_METHOD", "direct")
    return method if method in SOLVER_METHODS else "direct"


def solve(op: SchrodingerOperator, rhs: NodalField, tol=DEFAULT_TOL, method=None):
    """Solve op * w = rhs. Returns (w, SolveReport)."""
    if not tol > 0:
        raise InvalidArgumentError(f"solver tol must be positive, got {tol}")
    check_same_grid(op.grid, rhs)
    method = method or default_method()
    if method not in SOLVER_METHODS:
        raise InvalidArgumentError(f"unknown solver method '{method}'")

    b = np.array(rhs.values)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return NodalField.zeros(op.grid), SolveReport(0, 0.0, method)

    if method == "direct":
        x, steps, res = _solve_direct(op.matrix, b, tol, bnorm)
        if res > tol:
            raise SolverFailureError(
                f"direct solve residual {res:.3e} above tol={tol:g}", best_residual=res
            )
        return NodalField(op.grid, x), SolveReport(steps, res, "direct")

    max_iter = 20 * (op.grid.n - 1)
    x, iters, res = _solve_pcg(op.matrix, b, tol, bnorm, max_iter)
    return NodalField(op.grid, x), SolveReport(iters, res, "cg")


def solve_state(grid, mu: CellField, f: NodalField, tol=DEFAULT_TOL, method=None) -> NodalField:
    u, _ = solve(assemble(grid, mu), f, tol, method)
    return u


def solve_adjoint(grid, mu: CellField, g: NodalField, tol=DEFAULT_TOL, method=None) -> NodalField:
    # j = g*u: the adjoint right-hand side is g and the operator is self-adjoint
    p, _ = solve(assemble(grid, mu), g, tol, method)
    return p


def energy(grid, mu: CellField, u: NodalField) -> float:
    """h^2 * u^T A u: discrete Dirichlet energy plus lumped potential energy."""
    check_same_grid(grid, mu, u)
    op = assemble(grid, mu)
    return float(grid.h ** 2 * (u.values @ op.apply(u.values)))


def solve_dirichlet(grid, f: NodalField, frozen, tol=DEFAULT_TOL) -> NodalField:
    """
    Solve -Laplace(u) = f with u = 0 on the frozen interior nodes, by
    eliminating those unknowns.
    """
    check_same_grid(grid, f)
    frozen = np.asarray(frozen, dtype=bool).ravel()
    if frozen.size != grid.num_interior:
        raise InvalidArgumentError("frozen mask must cover every interior node")
    free = np.flatnonzero(~frozen)
    values = np.zeros(grid.num_interior)
    if free.size:
        reduced = laplacian(grid)[free, :][:, free]
        b = np.array(f.values)[free]
        bnorm = float(np.linalg.norm(b))
        if bnorm > 0:
            x, _, res = _solve_direct(reduced, b, tol, bnorm)
            if res > tol:
                raise SolverFailureError(
                    f"reduced solve residual {res:.3e} above tol={tol:g}", best_residual=res
                )
            values[free] = x
    return NodalField(grid, values)


def touching_nodes(grid, cells: CellField) -> np.ndarray:
    """Boolean mask of interior nodes adjacent to at least one nonzero cell."""
    return cell_to_node_mean(grid, CellField(grid, np.abs(cells.values))) > 0
