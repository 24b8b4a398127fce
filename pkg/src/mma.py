# src/mma.py
"""
Method of moving asymptotes for one inequality constraint.

Design variables are scaled to x = mu / mu_max. Each call to `propose`
builds the separable convex approximation around the current point and
returns the minimizer of the approximate subproblem; the dual variable of
the single constraint is found with the same bisection as the projection.
"""
import numpy as np

from src.constraint import solve_multiplier
from src.errors import InfeasibleProblemError


class MovingAsymptotes:
    def __init__(self, lb, ub, move_limit=0.2, init_offset=0.5,
                 relax=1.2, contract=0.7, min_offset=1e-3, max_offset=10.0):
        self.lb = np.asarray(lb, dtype=float)
        self.ub = np.asarray(ub, dtype=float)
        self.move_limit = move_limit
        self.init_offset = init_offset
        self.relax = relax
        self.contract = contract
        self.min_offset = min_offset
        self.max_offset = max_offset

        self.iteration = 0
        self.x1 = None
        self.x2 = None
        self.L = None
        self.U = None

    def _update_asymptotes(self, x):
        diff = np.maximum(self.ub - self.lb, 1e-12)
        if self.iteration < 2:
            self.L = x - self.init_offset * diff
            self.U = x + self.init_offset * diff
            return

        # sign change between the last two moves means oscillation: contract
        indc = (x - self.x1) * (self.x1 - self.x2)
        scale = np.where(indc < 0.0, self.contract, np.where(indc > 0.0, self.relax, 1.0))
        L = x - scale * (self.x1 - self.L)
        U = x + scale * (self.U - self.x1)

        L = np.minimum(L, x - self.min_offset * diff)
        U = np.maximum(U, x + self.min_offset * diff)
        self.L = np.maximum(L, x - self.max_offset * diff)
        self.U = np.minimum(U, x + self.max_offset * diff)

    def propose(self, x, df, c, dc):
        """
        x: current scaled design; df: objective gradient w.r.t. x;
        c: constraint value (<= 0 feasible); dc: constraint gradient w.r.t. x.
        """
        x = np.asarray(x, dtype=float)
        self._update_asymptotes(x)
        L, U = self.L, self.U
        Ux = U - x
        xL = x - L

        alpha = np.maximum.reduce([self.lb, 0.9 * L + 0.1 * x, x - self.move_limit])
        beta = np.minimum.reduce([self.ub, 0.9 * U + 0.1 * x, x + self.move_limit])

        p0 = np.maximum(df, 0.0) * Ux ** 2
        q0 = np.maximum(-df, 0.0) * xL ** 2
        p1 = np.maximum(dc, 0.0) * Ux ** 2
        q1 = np.maximum(-dc, 0.0) * xL ** 2
        b = -c + np.sum(p1 / Ux) + np.sum(q1 / xL)

        def design(y):
            a = np.sqrt(p0 + y * p1)
            d = np.sqrt(q0 + y * q1)
            denom = a + d
            mid = np.where(denom > 0, (a * L + d * U) / np.where(denom > 0, denom, 1.0), x)
            return np.clip(mid, alpha, beta)

        def excess(y):
            z = design(y)
            return float(np.sum(p1 / (U - z)) + np.sum(q1 / (z - L)) - b)

        try:
            y = solve_multiplier(excess, tol=1e-12)
        except InfeasibleProblemError:
            return x.copy()
        return design(y)

    def accept(self, x_old):
        """Shift the design history once a step from x_old has been accepted."""
        self.x2 = self.x1
        self.x1 = np.array(x_old, dtype=float)
        self.iteration += 1
