# tests/test_kkt.py
import math

import numpy as np
import pytest

from src.constraint import ExpPsi, PsiSpec, SquarePsi, psi_prime
from src.grid_fields import CellField, NodalField, make_grid
from src.kkt import cell_up, estimate_multiplier, kkt_report
from src.pde import solve_adjoint, solve_state


def _manufactured(scale=1.0):
    """Exp PsiSpec and (mu, u, p) with (up)_c = 2 psi'(mu_c) on every cell."""
    g = make_grid(1, 8)
    alpha, m = 3e-4, 0.3
    spec = PsiSpec(ExpPsi(m=m, alpha=alpha), CellField.zeros(g))
    u = NodalField.constant(g, -1e-3)
    p = NodalField.constant(g, 1.0)
    up = cell_up(g, u, p)
    # psi'(s) = -(alpha/m) exp(-alpha s) = up/2
    mu = CellField(g, -np.log(-up * m / (2.0 * alpha)) / alpha)
    return g, spec, mu, NodalField(g, scale * u.values), NodalField(g, scale * p.values)


def test_manufactured_multiplier():
    g, spec, mu, u, p = _manufactured()
    assert np.all((mu.values > 0) & (mu.values < spec.mu_max))
    assert estimate_multiplier(g, spec, mu, u, p) == pytest.approx(2.0, rel=1e-9)
    report = kkt_report(g, spec, mu, u, p)
    assert report.stationarity < 1e-9
    assert report.active_cells == g.num_cells


def test_multiplier_scales_quadratically():
    g, spec, mu, u, p = _manufactured(scale=3.0)
    assert estimate_multiplier(g, spec, mu, u, p) == pytest.approx(18.0, rel=1e-9)


def test_report_is_homogeneous_in_the_state():
    g = make_grid(1, 8)
    rng = np.random.default_rng(11)
    spec = PsiSpec(ExpPsi(m=0.3), CellField.zeros(g))
    mu = CellField(g, rng.uniform(100.0, 5000.0, g.num_cells))
    u = NodalField(g, -rng.uniform(0.2, 1.5, g.num_interior))
    p = NodalField(g, rng.uniform(0.5, 1.5, g.num_interior))
    base = kkt_report(g, spec, mu, u, p)
    assert base.psi > 1.0 and base.multiplier > 0.0

    c = 3.0
    scaled = kkt_report(g, spec, mu, NodalField(g, c * u.values), NodalField(g, c * p.values))
    assert scaled.multiplier == pytest.approx(c ** 2 * base.multiplier, rel=1e-9)
    assert scaled.complementarity == pytest.approx(c ** 2 * base.complementarity, rel=1e-9, abs=1e-15)
    # residuals are relative to max|up|, which scales by c^2 as well
    assert scaled.stationarity == pytest.approx(base.stationarity, rel=1e-9)
    assert scaled.inequality == pytest.approx(base.inequality, rel=1e-9, abs=1e-15)
    assert scaled.cap_set == pytest.approx(base.cap_set, rel=1e-9, abs=1e-15)


def test_zero_state_gives_zero_report():
    g = make_grid(1, 8)
    spec = PsiSpec(ExpPsi(m=0.5), CellField.zeros(g))
    mu = CellField.constant(g, 100.0)
    zero = NodalField.zeros(g)
    report = kkt_report(g, spec, mu, zero, zero)
    assert report.multiplier == 0.0
    assert report.complementarity == 0.0
    assert report.stationarity == 0.0
    assert report.inequality == 0.0
    assert report.cap_set == 0.0


def test_slack_budget_forces_zero_multiplier():
    g = make_grid(1, 8)
    spec = PsiSpec(ExpPsi(m=100.0), CellField.zeros(g))
    mu = CellField.constant(g, 500.0)
    f = NodalField.constant(g, 1.0)
    u, p = solve_state(g, mu, f), solve_adjoint(g, mu, f)
    report = kkt_report(g, spec, mu, u, p)
    assert report.psi < 1.0
    assert report.multiplier == 0.0
    assert report.complementarity == 0.0


def test_report_on_infeasible_potential_is_still_computed():
    g = make_grid(1, 8)
    spec = PsiSpec(SquarePsi(budget=1e-3), CellField.constant(g, 1e-6))
    rng = np.random.default_rng(2)
    mu = CellField(g, rng.uniform(0.0, 50.0, g.num_cells))
    f = NodalField(g, rng.uniform(-1.0, 1.0, g.num_interior))
    u, p = solve_state(g, mu, f), solve_adjoint(g, mu, f)
    report = kkt_report(g, spec, mu, u, p)
    assert report.psi > 1.0
    assert report.multiplier >= 0.0
    assert all(math.isfinite(v) for v in (report.stationarity, report.inequality, report.complementarity))
    assert report.cap_set == 0.0


def test_record_format():
    g, spec, mu, u, p = _manufactured()
    record = kkt_report(g, spec, mu, u, p).to_record()
    lines = record.strip().split("\n")
    keys = [line.split("=", 1)[0] for line in lines]
    assert keys[0] == "multiplier"
    assert "complementarity" in keys and "cap_set" in keys
    assert float(lines[0].split("=", 1)[1]) == pytest.approx(2.0, rel=1e-9)


def test_psi_prime_sign_for_exp():
    g, spec, mu, _, _ = _manufactured()
    assert np.all(np.asarray(psi_prime(spec, mu.values)) < 0)
