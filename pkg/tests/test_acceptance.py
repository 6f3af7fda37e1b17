"""Acceptance gate: ten end-to-end criteria with pinned tolerances.

Each test prints one PASS line with its measured numbers so a plain
``pytest -v`` run doubles as the acceptance report.  Tolerances are fixed
here and must not be loosened to make a failing criterion pass.
"""

from __future__ import annotations

import json
import time

import numpy as np
import pytest

from advch import (
    Field,
    LBParams,
    apriori_bound_check,
    beta_rate_study,
    continuous_dependence_check,
    dissipativity_check,
    energy,
    energy_refinement_study,
    get_laplacian,
    l2_norm,
    lb_potential,
    make_grid,
    polynomial_potential,
    quartic_well,
    riesz_lift,
    run_minimizing_movements,
    solve_fixed_point,
    solve_monolithic,
    sup_v_distance,
    uniform_v_bound,
    v_norm,
    vprime_norm,
)
from advch.cli import RunConfig, main, serialize_config


def report(num, name, elapsed, budget, detail):
    assert elapsed < budget, f"criterion {num} overran: {elapsed:.1f}s >= {budget}s"
    print(f"ACCEPTANCE {num:02d} {name}: PASS ({detail}; {elapsed:.2f}s)")


def quarter_sine(g, amplitude):
    return Field(g, amplitude * np.sin(np.pi * g.x / (2.0 * g.length)))


def test_criterion_01_duality_calculus():
    start = time.perf_counter()
    g = make_grid(1.0, 101)
    lap = get_laplacian(g)
    rng = np.random.default_rng(20260814)
    worst = 0.0
    for _ in range(100):
        f = rng.standard_normal(g.n)
        assert vprime_norm(g, f) <= g.length * l2_norm(g, f) + 1e-12
        vals = rng.standard_normal(g.n)
        vals[0] = 0.0
        assert l2_norm(g, vals) <= g.length * v_norm(Field(g, vals)) + 1e-12
        z = riesz_lift(g, f).z
        err = np.max(np.abs(lap.apply(z)[1:] - f[1:]))
        worst = max(worst, float(err / (np.max(np.abs(f[1:])) or 1.0)))
    assert worst <= 1e-10
    report(1, "duality-calculus", time.perf_counter() - start, 1.0,
           f"100 fields, max round-trip {worst:.2e}")


def test_criterion_02_analytic_lift_values():
    start = time.perf_counter()
    exact = 1.0 / np.sqrt(3.0)
    err_coarse = abs(vprime_norm(make_grid(1.0, 101), np.ones(101)) - exact)
    err_fine = abs(vprime_norm(make_grid(1.0, 1001), np.ones(1001)) - exact)
    assert err_coarse <= 1e-3
    assert err_fine <= 1e-5
    report(2, "analytic-lift-values", time.perf_counter() - start, 1.0,
           f"errors {err_coarse:.2e} @101, {err_fine:.2e} @1001")


def test_criterion_03_scheme_minimality():
    start = time.perf_counter()
    g = make_grid(1.0, 101)
    m = quartic_well()
    u0 = quarter_sine(g, 0.5)
    traj = run_minimizing_movements(u0, None, 0.5, 500, 0.0, m)
    energies = np.array(
        [energy(traj.field(k), m) for k in range(traj.steps + 1)]
    )
    worst_rise = float(np.max(np.diff(energies)))
    assert worst_rise <= 1e-9
    bound = uniform_v_bound(u0, None, 0.0, m)
    sup = traj.sup_v_norm()
    assert sup <= bound
    report(3, "scheme-minimality", time.perf_counter() - start, 10.0,
           f"max energy rise {worst_rise:.2e}, sup V {sup:.3f} <= M1 {bound:.3f}")


def test_criterion_04_oracle_equivalence():
    start = time.perf_counter()
    g = make_grid(1.0, 101)
    m = quartic_well()
    u0 = quarter_sine(g, 0.5)
    sol = solve_fixed_point(u0, 0.1, 100, 0.1, m)
    assert sol.converged
    mono = solve_monolithic(u0, 0.1, 100, 0.1, m)
    dist = sup_v_distance(sol.trajectory, mono)
    assert dist <= 5e-5
    report(4, "oracle-equivalence", time.perf_counter() - start, 30.0,
           f"sup-t V distance {dist:.2e} <= 5e-5")


def test_criterion_05_energy_equality_refinement():
    start = time.perf_counter()
    g = make_grid(1.0, 101)
    m = quartic_well()
    u0 = quarter_sine(g, 0.5)
    maxes = energy_refinement_study(u0, 0.1, [100, 200, 400, 800], 0.1, m)
    ratios = [maxes[i + 1] / maxes[i] for i in range(3)]
    for r in ratios:
        assert 0.35 <= r <= 0.65
    report(5, "energy-equality-refinement", time.perf_counter() - start, 120.0,
           "halving ratios " + ", ".join(f"{r:.3f}" for r in ratios))


def test_criterion_06_apriori_bound_all_scenarios():
    start = time.perf_counter()
    g = make_grid(1.0, 101)
    scenarios = [
        ("quartic-rest", quartic_well(), 0.0, 0.5),
        ("quartic-slow-drift", quartic_well(), 0.1, 0.5),
        ("quartic-fast-drift", quartic_well(), 0.5, 0.5),
        ("polynomial", polynomial_potential((0.0, 0.0, -0.5, 0.0, 0.25)), 0.2, 0.5),
        ("lb-transfer", lb_potential(LBParams(c0=-0.9, zeta0=0.2), g), 0.1, 0.5),
    ]
    details = []
    for name, m, beta, amp in scenarios:
        traj = solve_fixed_point(quarter_sine(g, amp), 0.5, 250, beta, m).trajectory
        rep = apriori_bound_check(traj, m)
        assert rep.passed, name
        details.append(f"{name} margin {float(np.min(rep.margins)):.2e}")
    report(6, "apriori-bound", time.perf_counter() - start, 60.0,
           "; ".join(details))


def test_criterion_07_dissipativity():
    start = time.perf_counter()
    g = make_grid(1.0, 101)
    m = quartic_well()
    u0 = quarter_sine(g, 0.5)
    details = []
    for beta in (0.1, 0.5):
        traj = solve_fixed_point(u0, 5.0, 1000, beta, m).trajectory
        rep = dissipativity_check(traj, m)
        assert rep.rate == pytest.approx(1.0 - beta**2)
        assert rep.offset == pytest.approx(1.0 / 12.0 + beta**2 * 0.25)
        assert rep.passed
        details.append(
            f"beta={beta} margin {float(np.min(rep.margins)):.2e}"
        )
    report(7, "dissipativity", time.perf_counter() - start, 120.0,
           "; ".join(details))


def test_criterion_08_drift_rate():
    start = time.perf_counter()
    g = make_grid(1.0, 101)
    m = quartic_well()
    u0 = quarter_sine(g, 0.5)
    rep = beta_rate_study(u0, 0.5, 500, m, [0.04, 0.02, 0.01])
    spread = float(np.max(rep.ratios) / np.min(rep.ratios))
    assert spread <= 2.0
    assert 0.7 <= rep.slope <= 1.3
    report(8, "drift-rate", time.perf_counter() - start, 180.0,
           f"ratio spread {spread:.3f}, slope {rep.slope:.3f}")


def test_criterion_09_continuous_dependence():
    start = time.perf_counter()
    g = make_grid(1.0, 101)
    m = quartic_well()
    u0 = quarter_sine(g, 0.5)
    phi = Field(g, np.sin(np.pi * g.x / 2.0))
    rep = continuous_dependence_check(
        u0, phi, [1e-2, 1e-3, 1e-4], 0.1, 100, 0.1, m
    )
    assert rep.spread < 2.0
    report(9, "continuous-dependence", time.perf_counter() - start, 120.0,
           f"ratios {np.round(rep.ratios, 4).tolist()}, spread {rep.spread:.3f}")


def test_criterion_10_determinism(tmp_path):
    start = time.perf_counter()
    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(serialize_config(RunConfig(seed=123)))
    blobs = []
    for name in ("first", "second"):
        out = tmp_path / name
        code = main(["run", "--config", str(cfg_path), "--out", str(out)])
        assert code == 0
        blobs.append((out / "run_series.csv").read_bytes())
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["converged"] is True
    assert blobs[0] == blobs[1]
    report(10, "determinism", time.perf_counter() - start, 30.0,
           f"{len(blobs[0])} identical CSV bytes")
