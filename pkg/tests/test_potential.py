"""Potential models and their certified lower-bound constants."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advch import (
    LBParams,
    PotentialRangeError,
    certify_constants,
    lb_potential,
    make_grid,
    polynomial_potential,
    quartic_well,
    zero_potential,
)


def test_quartic_values_and_constants():
    m = quartic_well()
    x = np.zeros(3)
    s = np.array([0.0, 1.0, 2.0])
    assert np.allclose(m.w(x, s), [0.0, -0.25, 2.0])
    assert np.allclose(m.dw(x, s), [0.0, 0.0, 6.0])
    assert np.allclose(m.d2w(x, s), [-1.0, 2.0, 11.0])
    assert np.allclose(m.dxw(x, s), 0.0)
    assert m.k0 == 0.25
    assert m.k1 == pytest.approx(1.0 / 12.0)
    m.check_range(np.array([-1e6, 1e6]))


def test_certification_recovers_quartic_constants():
    m = quartic_well()
    k0, k1 = certify_constants(m, (-2.0, 2.0), np.array([0.0]))
    assert k0 == pytest.approx(0.25, abs=1e-9)
    assert k1 == pytest.approx(1.0 / 12.0, abs=1e-9)


def test_certification_requires_finite_window():
    with pytest.raises(ValueError):
        certify_constants(quartic_well(), (-np.inf, np.inf), np.array([0.0]))


def test_lb_spot_value():
    g = make_grid(1.0, 101)
    m = lb_potential(LBParams(c0=0.0, zeta0=0.2, x_s=0.5, l_s=0.05), g)
    # At x = 1 the tilt has saturated at -zeta0, so W(1, 1) = 1/4 - 1/2 - 0.2.
    val = float(m.w(np.array(1.0), np.array(1.0)))
    assert val == pytest.approx(-0.45, abs=1e-6)


def test_lb_range_guard():
    g = make_grid(1.0, 51)
    m = lb_potential(LBParams(c0=-0.9, zeta0=0.2), g)
    lo, hi = m.s_range
    assert lo == pytest.approx(-3.0)
    assert hi == pytest.approx(3.9)
    m.check_range(np.array([lo + 0.01, hi - 0.01]))
    with pytest.raises(PotentialRangeError):
        m.check_range(np.array([0.0, hi + 1.0]))


def test_lb_params_validate_width():
    with pytest.raises(ValueError):
        LBParams(l_s=0.0)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_lb_certified_inequalities_hold(seed):
    g = make_grid(1.0, 21)
    m = lb_potential(LBParams(c0=-0.3, zeta0=0.4, x_s=0.4, l_s=0.1), g)
    rng = np.random.default_rng(seed)
    lo, hi = m.s_range
    s = rng.uniform(lo, hi, size=40)
    x = rng.uniform(0.0, 1.0, size=40)
    assert np.all(m.w(x, s) >= -m.k0 - 1e-9)
    assert np.all(s * m.dw(x, s) - m.w(x, s) >= -m.k1 - 1e-9)


def test_lb_derivatives_consistent():
    g = make_grid(1.0, 21)
    m = lb_potential(LBParams(c0=0.2, zeta0=0.3), g)
    x = np.full(5, 0.6)
    s = np.linspace(-1.0, 1.0, 5)
    eps = 1e-6
    fd = (m.w(x, s + eps) - m.w(x, s - eps)) / (2 * eps)
    assert np.allclose(fd, m.dw(x, s), atol=1e-8)
    fd2 = (m.dw(x, s + eps) - m.dw(x, s - eps)) / (2 * eps)
    assert np.allclose(fd2, m.d2w(x, s), atol=1e-7)
    fdx = (m.w(x + eps, s) - m.w(x - eps, s)) / (2 * eps)
    assert np.allclose(fdx, m.dxw(x, s) * s, atol=1e-7)


def test_polynomial_matches_quartic():
    mq = quartic_well()
    mp = polynomial_potential((0.0, 0.0, -0.5, 0.0, 0.25))
    x = np.zeros(7)
    s = np.linspace(-2.0, 2.0, 7)
    assert np.allclose(mp.w(x, s), mq.w(x, s))
    assert np.allclose(mp.dw(x, s), mq.dw(x, s))
    assert np.allclose(mp.d2w(x, s), mq.d2w(x, s))
    assert mp.k0 == pytest.approx(0.25, abs=1e-6)
    assert mp.k1 == pytest.approx(1.0 / 12.0, abs=1e-6)


def test_polynomial_validates_input():
    with pytest.raises(ValueError):
        polynomial_potential(())
    with pytest.raises(ValueError):
        polynomial_potential(np.ones((2, 2)))


def test_zero_potential_is_flat():
    m = zero_potential()
    x = np.linspace(0, 1, 5)
    s = np.linspace(-3, 3, 5)
    assert np.all(m.w(x, s) == 0.0)
    assert np.all(m.dw(x, s) == 0.0)
    assert m.k0 == 0.0 and m.k1 == 0.0
