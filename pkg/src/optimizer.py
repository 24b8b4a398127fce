# src/optimizer.py
"""
Adjoint gradient of J(mu) = h^2 <g, u(mu)> and the constrained descent loop.

Discretize-then-optimize: cost_gradient is the exact derivative of the
discrete cost, so the finite-difference audit is a hard check.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from src.constraint import (
    ExpPsi,
    capacity_gradient,
    capacity_Psi,
    project_feasible,
    solve_multiplier,
)
from src.errors import InfeasibleProblemError, InvalidArgumentError
from src.grid_fields import CellField, NodalField, make_grid, node_pair_to_cell
from src.mma import MovingAsymptotes
from src.pde import DEFAULT_TOL, solve_adjoint, solve_state
from src.physics import cost, material_area, window_cost

STRATEGIES = ("projected_gradient", "mma")
SWEEP_COLUMNS = ("M", "n", "cost", "window_cost", "material_area", "psi", "iterations", "reason")
SMALL_DECREASE_PATIENCE = 10


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 300
    step0: float = 1.0
    backtrack: float = 0.5
    armijo_c1: float = 1e-4
    max_backtracks: int = 40
    tol_step: float = 1e-7
    tol_cost: float = 1e-10
    strategy: str = "projected_gradient"
    solver_tol: float = DEFAULT_TOL
    solver_method: Optional[str] = None

    def __post_init__(self):
        for name in ("max_iters", "step0", "armijo_c1", "max_backtracks", "tol_step", "tol_cost", "solver_tol"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"optimizer.{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise InvalidArgumentError("optimizer.backtrack must lie in (0, 1)")
        if self.strategy not in STRATEGIES:
            raise InvalidArgumentError(f"optimizer.strategy must be one of {STRATEGIES}")


@dataclass
class OptResult:
    mu: CellField
    u: NodalField
    p: NodalField
    costs: List[float] = field(default_factory=list)
    psi_history: List[float] = field(default_factory=list)
    iterations: int = 0
    reason: str = ""

    @property
    def cost(self) -> float:
        return self.costs[-1]


def cost_gradient(grid, u: NodalField, p: NodalField) -> CellField:
    """dJ/dmu_c = -(lumped integral of u*p over cell c). u, p must be solved at the same mu."""
    return CellField(grid, -node_pair_to_cell(grid, u, p).values)


def evaluate_cost(grid, mu, f, g, tol=DEFAULT_TOL, method=None):
    u = solve_state(grid, mu, f, tol, method)
    return cost(grid, g, u), u


def initial_potential(grid, spec) -> CellField:
    """
    Exp: the uniform potential (raised to nu) with Psi = 1, or nu when nu
    already fits the budget. Other variants: the projection of nu.
    """
    if not isinstance(spec.variant, ExpPsi):
        return project_feasible(grid, spec, spec.nu)

    nu = np.array(spec.nu.values)
    top = float(spec.mu_max)

    def level(c):
        return CellField(grid, np.clip(np.maximum(c, nu), 0.0, top))

    if capacity_Psi(grid, spec, level(top)) > 1.0:
        raise InfeasibleProblemError(
            f"budget cannot be met even with mu = mu_max everywhere "
            f"(Psi = {capacity_Psi(grid, spec, level(top)):.6g})"
        )
    c = solve_multiplier(lambda c: capacity_Psi(grid, spec, level(c)) - 1.0)
    return level(c)


def _free_sup(mu, grad, lo, hi):
    blocked = ((mu <= lo) & (grad > 0)) | ((mu >= hi) & (grad < 0))
    free = grad[~blocked]
    return float(np.max(np.abs(free))) if free.size else 0.0


def optimize(grid, spec, f: NodalField, g: NodalField, mu0: CellField,
             cfg: Optional[OptimizerConfig] = None, log_sink=None) -> OptResult:
    """
    Projected gradient (or MMA) descent on mu with Armijo backtracking on the
    true cost. Every iterate satisfies nu <= mu <= mu_max and Psi(mu) <= 1.
    """
    cfg = cfg or OptimizerConfig()
    tol, method = cfg.solver_tol, cfg.solver_method
    lo = np.array(spec.nu.values)
    hi = float(spec.mu_max)

    mu = project_feasible(grid, spec, mu0)
    J, u = evaluate_cost(grid, mu, f, g, tol, method)
    p = solve_adjoint(grid, mu, g, tol, method)
    result = OptResult(mu=mu, u=u, p=p, costs=[J], psi_history=[capacity_Psi(grid, spec, mu)])

    mma = MovingAsymptotes(lo / hi, np.ones_like(lo)) if cfg.strategy == "mma" else None
    step = cfg.step0
    small_decreases = 0
    result.reason = "max_iters"

    for k in range(1, cfg.max_iters + 1):
        result.iterations = k
        grad = cost_gradient(grid, u, p).values
        mu_v = mu.values
        gsup = _free_sup(mu_v, grad, lo, hi)
        if gsup == 0.0:
            result.reason = "stationary"
            break

        target = None
        if mma is not None:
            dpsi = capacity_gradient(grid, spec, mu).values
            x_new = mma.propose(mu_v / hi, grad * hi, result.psi_history[-1] - 1.0, dpsi * hi)
            target = project_feasible(grid, spec, CellField(grid, x_new * hi)).values
            if float(grad @ (target - mu_v)) >= 0.0:
                # not a descent direction: take a projected gradient step instead
                target = None

        if target is not None:
            def candidate(s):
                return CellField(grid, mu_v + s * (target - mu_v))
            s = 1.0
        else:
            direction = hi * grad / gsup

            def candidate(s):
                return project_feasible(grid, spec, CellField(grid, mu_v - s * direction))
            s = min(cfg.step0, 2.0 * step)

        accepted = None
        for _ in range(cfg.max_backtracks):
            trial = candidate(s)
            J_trial, u_trial = evaluate_cost(grid, trial, f, g, tol, method)
            if J_trial <= J + cfg.armijo_c1 * float(grad @ (trial.values - mu_v)):
                accepted = trial
                break
            s *= cfg.backtrack
        if accepted is None:
            result.reason = "stagnation"
            break

        change = float(np.linalg.norm(accepted.values - mu_v) / max(np.linalg.norm(mu_v), 1e-300))
        decrease = J - J_trial
        if mma is not None:
            mma.accept(mu_v / hi)

        mu, u, J = accepted, u_trial, J_trial
        p = solve_adjoint(grid, mu, g, tol, method)
        if target is None:
            step = s
        psi = capacity_Psi(grid, spec, mu)
        result.mu, result.u, result.p = mu, u, p
        result.costs.append(J)
        result.psi_history.append(psi)
        if log_sink is not None:
            log_sink({"iter": k, "cost": J, "psi": psi, "step": s, "residual": change})

        if change <= cfg.tol_step:
            result.reason = "converged"
            break
        small_decreases = small_decreases + 1 if decrease <= cfg.tol_cost * max(abs(J), 1e-300) else 0
        if small_decreases >= SMALL_DECREASE_PATIENCE:
            result.reason = "converged"
            break

    return result


def sweep_M(problem_factory, M_values, cfg: Optional[OptimizerConfig] = None, h=0.1, log_sink=None) -> pd.DataFrame:
    """
    Run optimize for each half-width M at (nearly) fixed cell size h.
    problem_factory(grid) -> (spec, f, g).

    `cost` is the box-wide cost; `window_cost` keeps only the nodes of the
    smallest box. Capped cells far out still carry u ~ f / mu_max, so the
    box-wide cost drifts with M while the window cost does not.
    """
    M_values = [float(M) for M in M_values]
    rows = []
    window = min(M_values, default=0.0)
    for M in M_values:
        n = max(2, 2 * int(round(M / h)))
        grid = make_grid(M, n)
        spec, f, g = problem_factory(grid)
        res = optimize(grid, spec, f, g, initial_potential(grid, spec), cfg, log_sink)
        rows.append({
            "M": float(M),
            "n": n,
            "cost": res.cost,
            "window_cost": window_cost(grid, g, res.u, window),
            "material_area": material_area(grid, res.mu, spec.mu_max),
            "psi": res.psi_history[-1],
            "iterations": res.iterations,
            "reason": res.reason,
        })
    return pd.DataFrame(rows, columns=list(SWEEP_COLUMNS))


def random_instance(n=8, seed=7, M=1.0):
    """Random positive potential and positive data for the gradient audit."""
    rng = np.random.default_rng(seed)
    grid = make_grid(M, n)
    mu = CellField(grid, rng.uniform(1.0, 10.0, grid.num_cells))
    f = NodalField(grid, rng.uniform(0.5, 1.5, grid.num_interior))
    g = NodalField(grid, rng.uniform(0.5, 1.5, grid.num_interior))
    return grid, mu, f, g


def gradient_check(grid, mu, f, g, directions=20, seed=7, t_rel=1e-4,
                   tol=DEFAULT_TOL, method=None) -> np.ndarray:
    """
    Relative errors between <grad J, d> and the central difference
    (J(mu + t d) - J(mu - t d)) / 2t, t = t_rel * max|mu|, over random d
    drawn uniformly from [-0.5, 1] per cell.
    """
    rng = np.random.default_rng(seed)
    u = solve_state(grid, mu, f, tol, method)
    p = solve_adjoint(grid, mu, g, tol, method)
    grad = cost_gradient(grid, u, p).values
    t = t_rel * float(np.max(np.abs(mu.values)))

    errors = []
    for _ in range(directions):
        d = rng.uniform(-0.5, 1.0, grid.num_cells)
        j_plus, _ = evaluate_cost(grid, CellField(grid, mu.values + t * d), f, g, tol, method)
        j_minus, _ = evaluate_cost(grid, CellField(grid, mu.values - t * d), f, g, tol, method)
        fd = (j_plus - j_minus) / (2.0 * t)
        exact = float(grad @ d)
        errors.append(abs(fd - exact) / abs(exact))
    return np.array(errors)
