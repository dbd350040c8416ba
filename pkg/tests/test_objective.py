from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from bilinear_wave.checks import random_admissible_control, smooth_random_field

from bilinear_wave.domain import spacetime_inner, spacetime_norm_l2
from bilinear_wave.objective import (
    CostReport,
    cost,
    derivative_bound_probe,
    directional_derivative,
    directional_derivative_linearized,
    evaluate_cost,
    gradient,
    hessian_apply,
    hessian_terms,
    second_derivative,
    write_reports_csv,
)
from bilinear_wave.optimizer import project
from bilinear_wave.state import march

from conftest import make_problem, tracking_problem


@pytest.fixture
def p(small_problem, rng):
    return small_problem.with_control(0.3 * rng.uniform(-1, 1, small_problem.shape))


def test_cost_parts_by_hand():
    q = make_problem(y0=np.zeros(15), u=0.5, gamma=2.0)
    rep = evaluate_cost(q)
    # zero state, so J = (γ/2) u² T (n h) with n h = 15/16
    assert rep.tracking_part == 0.0
    assert rep.control_part == pytest.approx(0.25 * 2.0 * 15 / 16)
    assert rep.J == rep.tracking_part + rep.control_part


def test_perfect_tracking_cost_is_zero():
    q = make_problem()
    yd = march(q.grid, q.time, np.zeros(q.shape), q.f, q.y0, q.y1)
    assert cost(replace(q, yd=yd)) == 0.0


def test_gradient_against_central_difference(p, rng):
    h = rng.standard_normal(p.shape)
    eps = 1e-4
    fd = (cost(p.with_control(p.u + eps * h)) - cost(p.with_control(p.u - eps * h))) / (2 * eps)
    d = directional_derivative(p, h)
    assert abs(fd - d) / max(1.0, abs(d)) < 1e-7


def test_adjoint_and_linearized_forms_agree(p, rng):
    for _ in range(3):
        h = rng.standard_normal(p.shape)
        a, b = directional_derivative(p, h), directional_derivative_linearized(p, h)
        assert abs(a - b) <= 1e-8 * max(abs(a), abs(b))


def test_taylor_remainder_is_quadratic(p, rng):
    h = rng.standard_normal(p.shape)
    j0, d = cost(p), directional_derivative(p, h)
    rem = [abs(cost(p.with_control(p.u + e * h)) - j0 - e * d) for e in (1e-2, 5e-3)]
    assert rem[0] / rem[1] == pytest.approx(4.0, rel=0.05)


def test_continuous_gradient_converges():
    errs = []
    for n, m in ((15, 64), (31, 128)):
        q = tracking_problem(n, m)
        h = np.ones(q.shape)
        eps = 1e-4
        fd = (cost(q.with_control(eps * h)) - cost(q.with_control(-eps * h))) / (2 * eps)
        d = directional_derivative(q, h, gradient(q, method="continuous"))
        errs.append(abs(fd - d) / max(1.0, abs(d)))
    assert errs[1] < errs[0]


def test_hessian_against_second_difference(p, rng):
    h = rng.standard_normal(p.shape)
    eps = 1e-3
    fd = (cost(p.with_control(p.u + eps * h)) - 2 * cost(p) + cost(p.with_control(p.u - eps * h))) / eps**2
    hess = second_derivative(p, h, h)
    assert abs(fd - hess) / abs(hess) < 5e-3


def test_hessian_symmetry_and_operator(p, rng):
    h1, h2 = rng.standard_normal(p.shape), rng.standard_normal(p.shape)
    grad = gradient(p)
    a, b = second_derivative(p, h1, h2, grad), second_derivative(p, h2, h1, grad)
    assert abs(a - b) <= 1e-12 * abs(a)
    hh = hessian_apply(p, h1, grad)
    assert spacetime_inner(hh, h2, p.time, p.grid) == pytest.approx(a, rel=1e-10)


def test_hessian_is_gamma_when_adjoint_vanishes():
    # at the perfect-tracking optimum φ ≡ 0 and J''[h,h] = ||z||² + γ||h||²
    q = make_problem()
    yd = march(q.grid, q.time, np.zeros(q.shape), q.f, q.y0, q.y1)
    q = replace(q, yd=yd)
    h = np.ones(q.shape)
    a, b, c = hessian_terms(q, h, h)
    assert b == 0.0
    assert c == pytest.approx(q.gamma * spacetime_norm_l2(h, q.time, q.grid) ** 2)
    assert a > 0


def test_derivative_bound_probe(p, rng):
    h1, h2 = rng.standard_normal(p.shape), rng.standard_normal(p.shape)
    ratios = derivative_bound_probe(p, p.u, 0.5 * p.u, h1, h2)
    assert len(ratios) == 4 and all(np.isfinite(r) and r >= 0 for r in ratios)
    zero = np.zeros(p.shape)
    assert derivative_bound_probe(p, p.u, p.u, zero, zero) == (0.0, 0.0, 0.0, 0.0)


def test_cost_report_text_and_csv(tmp_path):
    rep = CostReport(1.5, 1.0, 0.5)
    assert "J=1.5\n" in rep.to_text()
    path = write_reports_csv(tmp_path / "r.csv", [rep, rep], {"T_h": [1.0, 2.0]})
    lines = path.read_text().splitlines()
    assert lines[0] == "T_h,J,tracking_part,control_part,kkt_residual,gradient_norm_l2"
    assert lines[2].startswith("2,1.5,1,0.5,nan")


def test_tracking_part_against_quadrature_oracle():
    w = np.sqrt(np.pi**2 - 0.25)
    amp2 = lambda t: np.exp(-t) * (np.cos(w * t) + np.sin(w * t) / (2 * w)) ** 2
    # ½ ∫ amp² dt · ∫ sin²(πx) dx
    oracle = 0.5 * quad(amp2, 0, 40, limit=400)[0] * 0.5
    rep = evaluate_cost(make_problem(63, 1024, 16.0))
    assert rep.tracking_part == pytest.approx(oracle, rel=2e-3)


def test_doubling_gamma_doubles_control_part(p):
    a, b = evaluate_cost(p), evaluate_cost(replace(p, gamma=2 * p.gamma))
    assert b.control_part == pytest.approx(2 * a.control_part, rel=1e-15)
    assert b.tracking_part == a.tracking_part


def test_perfect_tracking_gradient_vanishes():
    q = make_problem()
    q = replace(q, yd=march(q.grid, q.time, np.zeros(q.shape), q.f, q.y0, q.y1))
    assert not gradient(q).g.any()
    assert directional_derivative(q, np.zeros(q.shape)) == 0.0


def test_projected_step_is_a_descent_direction(p):
    g = gradient(p).g
    for s in (1e-3, 1e-1, 10.0):
        step = project(p.u - s * g, p.alpha, p.beta) - p.u
        assert spacetime_inner(g, step, p.time, p.grid) <= 0.0


def test_gradient_fd_on_unit_mesh(rng):
    # Δx = Δt = 1/64
    q = tracking_problem(63, 64, 1.0)
    q = q.with_control(rng.uniform(-1, 1, q.shape))
    h = rng.standard_normal(q.shape)
    eps = 1e-4
    d = directional_derivative(q, h)
    fd = (cost(q.with_control(q.u + eps * h)) - cost(q.with_control(q.u - eps * h))) / (2 * eps)
    assert abs(fd - d) / max(1.0, abs(d)) <= 5e-3


def test_derivative_bounds_stable_under_refinement():
    out = []
    for n, m in ((15, 64), (31, 128)):
        q = tracking_problem(n, m)
        ratios = []
        for i in range(3):
            r = np.random.default_rng(300 + i)
            u1, u2 = random_admissible_control(q, r), random_admissible_control(q, r)
            h1, h2 = smooth_random_field(q.grid, q.time, r), smooth_random_field(q.grid, q.time, r)
            ratios.append(derivative_bound_probe(q, u1, u2, h1, h2))
        out.append(np.array(ratios))
    assert np.all(np.isfinite(out[1]))
    np.testing.assert_allclose(out[1], out[0], rtol=0.2, atol=1e-4)
