"""Discrete V and V' calculus on a grid.

V is the space of H1 functions on (0, L) vanishing at x = 0, normed by
||u||_V^2 = int (u')^2.  A dual element f is represented by its Riesz lift
z_f, the solution of -z'' = f, z(0) = 0, z'(L) = 0, and then
||f||_V' = ||z_f||_V.  The discrete V energy is the forward-difference
(midpoint) form, which pairs exactly with the operator in
:mod:`advch.grid`: (A v, v)_L2 = grad_energy(v) to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, get_laplacian, quadrature


@dataclass(frozen=True)
class Field:
    """Nodal values of a function in V (vanishes at x = 0)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} nodal values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if vals[0] != 0.0:
            raise ValueError("fields in V must vanish at x = 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class DualRep:
    """A V' element stored through its Riesz lift z."""

    grid: Grid
    source: np.ndarray
    z: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.sqrt(grad_energy(self.grid, self.z)))


def grad_energy(g: Grid, vals: np.ndarray) -> float:
    """Discrete int (v')^2 as the forward-difference energy."""
    d = np.diff(vals)
    return float(d @ d) / g.h


def grad_inner(g: Grid, a: np.ndarray, b: np.ndarray) -> float:
    """Discrete int a' b' paired difference-wise."""
    return float(np.diff(a) @ np.diff(b)) / g.h


def v_norm(u: Field) -> float:
    """V norm ||u|| = (int (u')^2)^(1/2)."""
    return float(np.sqrt(grad_energy(u.grid, u.values)))


def v_inner(u1: Field, u2: Field) -> float:
    if u1.grid is not u2.grid:
        raise ValueError("fields live on different grids")
    return grad_inner(u1.grid, u1.values, u2.values)


def riesz_lift(g: Grid, f: np.ndarray) -> DualRep:
    """Lift an L2 density to its V representative."""
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n,):
        raise ValueError(f"expected {g.n} nodal values, got shape {f.shape}")
    z = get_laplacian(g).lift(f)
    return DualRep(grid=g, source=f, z=z)


def vprime_norm(g: Grid, f: np.ndarray) -> float:
    """Dual norm ||f||_V' = ||z_f||_V."""
    z = get_laplacian(g).lift(f)
    return float(np.sqrt(grad_energy(g, z)))


def vprime_inner(g: Grid, f1: np.ndarray, f2: np.ndarray) -> float:
    """Dual inner product (f1, f2)_V' = int f1 z_{f2}."""
    z2 = get_laplacian(g).lift(f2)
    return float((g.w * np.asarray(f1, dtype=float)) @ z2)


def l2_norm(g: Grid, f: np.ndarray) -> float:
    f = np.asarray(f, dtype=float)
    return float(np.sqrt(g.w @ (f * f)))


def duality_pairing(g: Grid, f: np.ndarray, v: np.ndarray) -> float:
    """<f, v> for f in L2 and v in V, i.e. the weighted nodal product."""
    return float((g.w * np.asarray(f, dtype=float)) @ v)


def nodal_derivative(g: Grid, vals: np.ndarray) -> np.ndarray:
    """Second-order derivative: centered inside, one-sided at both ends."""
    vals = np.asarray(vals, dtype=float)
    if vals.shape != (g.n,):
        raise ValueError(f"expected {g.n} nodal values, got shape {vals.shape}")
    if g.n < 4:
        raise ValueError("derivative stencils need at least 4 nodes")
    d = np.empty_like(vals)
    two_h = 2.0 * g.h
    d[1:-1] = (vals[2:] - vals[:-2]) / two_h
    d[0] = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / two_h
    d[-1] = (3.0 * vals[-1] - 4.0 * vals[-2] + vals[-3]) / two_h
    return d


def _affine_eval(times: np.ndarray, snaps: np.ndarray, t: float) -> np.ndarray:
    """Evaluate the piecewise-affine interpolant of snapshot rows at t."""
    idx = int(np.searchsorted(times, t, side="right")) - 1
    idx = min(max(idx, 0), len(times) - 2)
    dt = times[idx + 1] - times[idx]
    lam = 0.0 if dt == 0 else (t - times[idx]) / dt
    lam = min(max(lam, 0.0), 1.0)
    return (1.0 - lam) * snaps[idx] + lam * snaps[idx + 1]


def time_average(q, t_lo: float, t_hi: float) -> np.ndarray:
    """Mean of the affine-in-time interpolant of q over [t_lo, t_hi]."""
    times = np.asarray(q.times, dtype=float)
    snaps = np.asarray(q.snapshots, dtype=float)
    span = t_hi - t_lo
    if span <= 0:
        raise ValueError("time interval must have positive length")
    slack = 1e-9 * max(span, times[-1] - times[0])
    if t_lo < times[0] - slack or t_hi > times[-1] + slack:
        raise ValueError(
            f"interval [{t_lo}, {t_hi}] outside sampled range "
            f"[{times[0]}, {times[-1]}]"
        )
    inside = (times > t_lo) & (times < t_hi)
    knots = np.concatenate(([t_lo], times[inside], [t_hi]))
    rows = np.vstack(
        [_affine_eval(times, snaps, t_lo), snaps[inside], _affine_eval(times, snaps, t_hi)]
    )
    dt = np.diff(knots)
    integral = 0.5 * dt @ (rows[:-1] + rows[1:])
    return integral / span


def average_forcing(q, tau: float, k: int) -> np.ndarray:
    """Mean of q' over the k-th step window ((k-1) tau, k tau].

    Trapezoid in time (exact for the affine interpolant of the samples),
    then the second-order spatial derivative.  Averaging commutes with the
    spatial derivative, so the field is averaged first.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if k < 1:
        raise ValueError("step index k starts at 1")
    avg = time_average(q, (k - 1) * tau, k * tau)
    return nodal_derivative(q.grid, avg)
