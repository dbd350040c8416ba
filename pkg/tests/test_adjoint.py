from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from bilinear_wave.adjoint import adjoint_for_source, decay_certificate, reverse_time, solve_adjoint
from bilinear_wave.domain import SpatialGrid, inner_l2, spacetime_inner
from bilinear_wave.sensitivity import linearized_source, solve_linearized
from bilinear_wave.state import march, solve_forward

from conftest import make_problem, sine, tracking_problem


def duality_gap(p, h, w):
    tr = solve_forward(p)
    lhs = spacetime_inner(solve_linearized(p, tr, h).z, w, p.time, p.grid)
    rhs = spacetime_inner(linearized_source(tr, h), adjoint_for_source(p, w).phi, p.time, p.grid)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))


@pytest.mark.parametrize("grid", [SpatialGrid.interval(15), SpatialGrid.rectangle(5, 4)])
def test_duality_with_random_data(grid, rng):
    p = make_problem(grid=grid, m=48)
    p = p.with_control(rng.uniform(-1, 1, p.shape))
    for _ in range(3):
        h, w = rng.standard_normal(p.shape), rng.standard_normal(p.shape)
        assert duality_gap(p, h, w) <= 1e-9


def test_terminal_conditions(small_problem):
    adj = solve_adjoint(small_problem, solve_forward(small_problem))
    assert not adj.phi[-1].any()
    assert not adj.dphi[-1].any()
    assert adj.terminal_decay == (0.0, 0.0)


def test_zero_source_gives_zero_adjoint():
    p = make_problem()
    assert not adjoint_for_source(p, np.zeros(p.shape)).phi.any()


def test_unknown_method_rejected(small_problem):
    with pytest.raises(ValueError):
        adjoint_for_source(small_problem, np.zeros(small_problem.shape), method="magic")


def test_reverse_time_is_an_involution(rng):
    w = rng.standard_normal((5, 3))
    np.testing.assert_array_equal(reverse_time(reverse_time(w)), w)
    np.testing.assert_array_equal(reverse_time(w)[0], w[-1])


def mode_amplitude(phi, grid):
    s = sine(grid)
    return np.array([inner_l2(row, s, grid) for row in phi]) / inner_l2(s, s, grid)


def ode_adjoint(horizon, t_eval):
    """a'' - a' = -π² a + b(t), a(T) = a'(T) = 0, with b the free decay of the first mode."""
    lam = np.pi**2
    w = np.sqrt(lam - 0.25)

    def b(t):
        return np.exp(-t / 2) * (np.cos(w * t) + np.sin(w * t) / (2 * w))

    sol = solve_ivp(lambda t, a: [a[1], a[1] - lam * a[0] + b(t)], (horizon, 0.0), [0.0, 0.0],
                    t_eval=t_eval[::-1], rtol=1e-11, atol=1e-13)
    return sol.y[0][::-1]


@pytest.mark.parametrize("method", ["discrete", "continuous"])
def test_adjoint_matches_ode_oracle(method):
    p = make_problem(63, 512, 8.0)
    adj = solve_adjoint(p, solve_forward(p), method)
    a = mode_amplitude(adj.phi, p.grid)
    ref = ode_adjoint(8.0, p.time.nodes)
    assert np.max(np.abs(a - ref)) < 1e-2 * np.max(np.abs(ref))
    # a single mode stays a single mode
    np.testing.assert_allclose(adj.phi, a[:, None] * sine(p.grid)[None, :], atol=1e-10)


def test_discrete_and_continuous_agree_under_refinement():
    gaps = []
    for n, m in ((15, 64), (31, 128)):
        p = tracking_problem(n, m, 2.0)
        tr = solve_forward(p)
        d = solve_adjoint(p, tr, "discrete").phi
        c = solve_adjoint(p, tr, "continuous").phi
        gaps.append(np.max(np.abs(d - c)) / np.max(np.abs(d)))
    assert gaps[1] < 0.5 * gaps[0]


def test_decay_certificate_shrinks_with_horizon():
    def family(T):
        return lambda k: make_problem(15, int(32 * T * k), T * k)

    short, long = decay_certificate(family(2.0)), decay_certificate(family(4.0))
    assert long.tail < 0.5 * short.tail
    assert long.max_difference < short.max_difference
    assert short.tail == pytest.approx(short.tail_phi + short.tail_dphi)
    with pytest.raises(ValueError):
        decay_certificate(family(2.0), factor=1)


def test_perfect_tracking_adjoint_vanishes():
    def problem_at(k):
        p = make_problem(15, 32 * k, 2.0 * k)
        return replace(p, yd=march(p.grid, p.time, np.zeros(p.shape), p.f, p.y0, p.y1))

    p = problem_at(1)
    assert not solve_adjoint(p, solve_forward(p)).phi.any()
    cert = decay_certificate(problem_at)
    assert cert.tail == 0.0 and cert.max_difference == 0.0


def test_slowly_decaying_source_is_flagged():
    # y - y_d = e^{-t} sin(πx) versus (1 + t)^{-1} sin(πx), both with y ≡ 0
    def family(profile):
        def problem_at(k):
            p = make_problem(15, 64 * k, 8.0 * k, y0=np.zeros(15))
            t = p.time.nodes[:, None]
            return replace(p, yd=-profile(t) * sine(p.grid)[None, :])
        return problem_at

    fast = decay_certificate(family(lambda t: np.exp(-t)))
    slow = decay_certificate(family(lambda t: 1.0 / (1.0 + t)))
    assert slow.tail > 100 * fast.tail
    # quasi-static tail ≈ 1/(π²(1+T)), far above any useful tolerance
    assert slow.tail > 5e-3
