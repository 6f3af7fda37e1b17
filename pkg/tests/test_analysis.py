"""Energy balance, bound checks, and rate studies."""

from __future__ import annotations

import numpy as np
import pytest

from advch import (
    Field,
    apriori_bound_check,
    beta_rate_study,
    continuous_dependence_check,
    dissipativity_check,
    energy_equality_residual,
    energy_refinement_study,
    fit_rate_slope,
    make_grid,
    quartic_well,
    solve_fixed_point,
)


def quarter_sine(g, amplitude=0.5):
    return Field(g, amplitude * np.sin(np.pi * g.x / (2.0 * g.length)))


def test_energy_residual_shrinks_with_tau():
    g = make_grid(1.0, 51)
    m = quartic_well()
    u0 = quarter_sine(g)
    coarse, fine = energy_refinement_study(u0, 0.1, [50, 100], 0.1, m)
    assert 0.0 < fine < coarse
    assert fine / coarse == pytest.approx(0.5, abs=0.2)


def test_energy_residual_endpoint_variants():
    g = make_grid(1.0, 51)
    m = quartic_well()
    traj = solve_fixed_point(quarter_sine(g), 0.1, 80, 0.1, m).trajectory
    right = energy_equality_residual(traj, m, endpoint="right")
    mid = energy_equality_residual(traj, m, endpoint="midpoint")
    assert right.residuals.shape == (traj.steps,)
    assert np.isfinite(right.max_abs) and np.isfinite(mid.max_abs)
    assert right.median_abs <= right.max_abs
    with pytest.raises(ValueError):
        energy_equality_residual(traj, m, endpoint="simpson")


def test_dissipation_terms_are_nonnegative():
    g = make_grid(1.0, 51)
    m = quartic_well()
    traj = solve_fixed_point(quarter_sine(g), 0.1, 80, 0.0, m).trajectory
    report = energy_equality_residual(traj, m)
    assert np.all(report.mu_v_norms >= 0.0)
    # Without drift the balance reduces to energy decay against ||mu||_V^2.
    assert np.all(report.cross_terms == 0.0)


def test_apriori_bound_holds_on_short_run():
    g = make_grid(1.0, 51)
    m = quartic_well()
    traj = solve_fixed_point(quarter_sine(g), 0.2, 100, 0.3, m).trajectory
    report = apriori_bound_check(traj, m)
    assert report.passed
    assert report.margins.shape == (traj.steps + 1,)
    assert report.sup_sq <= report.bound


def test_dissipativity_requires_subcritical_drift():
    g = make_grid(1.0, 41)
    m = quartic_well()
    traj = solve_fixed_point(quarter_sine(g), 0.05, 25, 1.5, m).trajectory
    with pytest.raises(ValueError):
        dissipativity_check(traj, m)


def test_dissipativity_holds_on_short_run():
    g = make_grid(1.0, 51)
    m = quartic_well()
    traj = solve_fixed_point(quarter_sine(g), 1.0, 200, 0.2, m).trajectory
    report = dissipativity_check(traj, m)
    assert report.passed
    assert report.rate == pytest.approx(1.0 - 0.04)
    assert report.offset == pytest.approx(1.0 / 12.0 + 0.04 * 0.25)


def test_fit_rate_slope_on_power_law():
    xs = np.array([0.04, 0.02, 0.01])
    ys = 3.0 * xs**1.0
    assert fit_rate_slope(xs, ys) == pytest.approx(1.0, abs=1e-12)
    ys2 = 0.7 * xs**2.0
    assert fit_rate_slope(xs, ys2) == pytest.approx(2.0, abs=1e-12)


def test_beta_rate_study_small():
    g = make_grid(1.0, 51)
    m = quartic_well()
    report = beta_rate_study(quarter_sine(g), 0.2, 100, m, [0.04, 0.02])
    assert np.all(report.distances > 0.0)
    assert np.all(np.diff(report.distances) < 0.0)
    spread = float(np.max(report.ratios) / np.min(report.ratios))
    assert spread < 2.0
    assert 0.5 < report.slope < 1.5


def test_beta_rate_study_rejects_negative_beta():
    g = make_grid(1.0, 41)
    with pytest.raises(ValueError):
        beta_rate_study(quarter_sine(g), 0.1, 20, quartic_well(), [-0.01])


def test_continuous_dependence_ratios():
    g = make_grid(1.0, 51)
    m = quartic_well()
    u0 = quarter_sine(g)
    phi = Field(g, np.sin(np.pi * g.x / 2.0))
    report = continuous_dependence_check(u0, phi, [1e-2, 1e-3], 0.05, 25, 0.1, m)
    assert report.ratios.shape == (2,)
    # t = 0 is part of the supremum, where the ratio is exactly one.
    assert np.all(report.ratios >= 1.0 - 1e-9)
    assert report.spread < 2.0


def test_continuous_dependence_rejects_degenerate_input():
    g = make_grid(1.0, 41)
    m = quartic_well()
    u0 = quarter_sine(g)
    with pytest.raises(ValueError):
        continuous_dependence_check(
            u0, Field(g, np.zeros(g.n)), [1e-2], 0.05, 10, 0.1, m
        )
    phi = Field(g, np.sin(np.pi * g.x / 2.0))
    with pytest.raises(ValueError):
        continuous_dependence_check(u0, phi, [0.0], 0.05, 10, 0.1, m)
