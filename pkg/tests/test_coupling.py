"""Fixed-point coupling of transport and the implicit flow, plus the oracle."""

from __future__ import annotations

import numpy as np
import pytest

from advch import (
    Field,
    PicardConfig,
    make_grid,
    quartic_well,
    run_minimizing_movements,
    solve_fixed_point,
    solve_forced,
    solve_monolithic,
    sup_v_distance,
    traj_l2v_distance,
)
from advch.coupling import _first_derivative


def quarter_sine(g, amplitude=0.5):
    return Field(g, amplitude * np.sin(np.pi * g.x / (2.0 * g.length)))


def test_unforced_fixed_point_matches_plain_run():
    g = make_grid(1.0, 81)
    m = quartic_well()
    u0 = quarter_sine(g)
    sol = solve_fixed_point(u0, 0.1, 50, 0.0, m)
    assert sol.converged
    assert sol.picard_iters == 1
    assert sol.residual == 0.0
    plain = run_minimizing_movements(u0, None, 0.1, 50, 0.0, m)
    assert np.array_equal(sol.trajectory.snapshots, plain.snapshots)


def test_monolithic_matches_scheme_without_drift():
    g = make_grid(1.0, 81)
    m = quartic_well()
    u0 = quarter_sine(g)
    traj = run_minimizing_movements(u0, None, 0.1, 50, 0.0, m)
    mono = solve_monolithic(u0, 0.1, 50, 0.0, m)
    assert sup_v_distance(traj, mono) < 1e-10


def test_forced_fixed_point_converges():
    g = make_grid(1.0, 101)
    m = quartic_well()
    u0 = quarter_sine(g)
    cfg = PicardConfig(tol=1e-8)
    sol = solve_fixed_point(u0, 0.1, 100, 0.1, m, cfg)
    assert sol.converged
    assert sol.residual <= 1e-8
    assert sol.picard_iters >= 2
    dists = np.asarray(sol.distances)
    assert np.all(np.diff(dists) < 0.0)


def test_fixed_point_is_self_consistent():
    g = make_grid(1.0, 81)
    m = quartic_well()
    u0 = quarter_sine(g)
    sol = solve_fixed_point(u0, 0.1, 50, 0.2, m)
    traj = sol.trajectory
    replay = solve_forced(u0, traj, 0.1, 50, 0.2, m)
    rel = traj_l2v_distance(replay, traj) / traj.l2v_norm()
    assert rel <= 2e-6


def test_advection_variants_agree():
    g = make_grid(1.0, 101)
    m = quartic_well()
    u0 = quarter_sine(g)
    up = solve_monolithic(u0, 0.1, 100, 0.1, m, advection="upwind")
    ce = solve_monolithic(u0, 0.1, 100, 0.1, m, advection="central")
    assert sup_v_distance(up, ce) < 5e-5
    with pytest.raises(ValueError):
        solve_monolithic(u0, 0.1, 100, 0.1, m, advection="spectral")


def test_first_derivative_exact_for_quadratics():
    g = make_grid(1.0, 41)
    for upwind in (True, False):
        d = _first_derivative(g, upwind=upwind)
        lin = d @ g.x[1:]
        assert np.allclose(lin, 1.0, atol=1e-10)
        quad = d @ (g.x**2)[1:]
        assert np.allclose(quad, 2.0 * g.x[1:], atol=1e-9)


def test_picard_validates_input():
    g = make_grid(1.0, 41)
    u0 = quarter_sine(g)
    m = quartic_well()
    with pytest.raises(ValueError):
        solve_fixed_point(u0, 0.1, 10, -0.1, m)
    with pytest.raises(ValueError):
        solve_fixed_point(u0, -0.1, 10, 0.1, m)


def test_distance_helpers_on_known_pair():
    g = make_grid(1.0, 41)
    times = np.array([0.0, 1.0])
    a = np.outer([0.0, 0.0], g.x)
    b = np.outer([0.0, 1.0], g.x)
    from advch import Trajectory

    ta = Trajectory(grid=g, times=times, snapshots=a)
    tb = Trajectory(grid=g, times=times, snapshots=b)
    # ||x||_V = 1 on [0, 1], reached only at the final knot; the time
    # quadrature is trapezoid on the knots, so the squared gap averages to 1/2.
    assert sup_v_distance(ta, tb) == pytest.approx(1.0, rel=1e-12)
    assert traj_l2v_distance(ta, tb) == pytest.approx(np.sqrt(0.5), rel=1e-12)
