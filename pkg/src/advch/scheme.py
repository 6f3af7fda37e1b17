"""Implicit variational time stepping in the dual metric.

One step from u_prev minimizes

    Phi(v) = 1/2 int (v')^2 + int W(x, v) + beta (z_qbar, v)_L2
             + 1/(2 tau) ||v - u_prev||_V'^2

over fields vanishing at x = 0, where qbar is the transport forcing averaged
over the step window and z_qbar its Riesz lift.  Stationarity is the
nonlinear system A v + dW/ds(x, v) + (1/tau) z_{v - u_prev} + beta z_qbar = 0
on the free rows.  Newton runs on the A-premultiplied form

    A^2 v + A dW/ds(x, v) + (v - u_prev)/tau + beta qbar = 0,

whose Jacobian A^2 + A diag(d2W/ds2) + I/tau is pentadiagonal, so each
iteration is O(n).  Convergence is measured on the well-scaled stationarity
residual (the premultiplied residual solved back through A).  An accepted
root must also decrease Phi relative to u_prev; otherwise the step retries
from a damped explicit predictor and finally fails loudly.

Shipped potentials are time independent, so the per-step integral of the
potential term is exact; adding a time-dependent W would need a quadrature
choice here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .grid import Grid, DiscreteLaplacian, get_laplacian, quadrature
from .hilbert import Field, average_forcing, grad_energy
from .potential import PotentialModel


class StepError(RuntimeError):
    """The nonlinear solve for one step failed on every retry."""


@dataclass(frozen=True)
class StepConfig:
    """Solver knobs for a single implicit step."""

    tau: Optional[float] = None
    newton_tol: float = 1e-10
    newton_maxiter: int = 50
    max_backtrack: int = 8
    predictor_dampings: tuple[float, ...] = (0.5, 0.1)
    phi_tol: float = 1e-10


@dataclass
class StepRecord:
    """Per-step diagnostics; k and t are filled by the runner."""

    k: int
    t: float
    energy: float
    mu_v_norm: float
    du_vprime: float
    newton_iters: int
    el_residual: float
    objective_drop: float
    mu_boundary: float
    guess_tag: int


@dataclass
class Trajectory:
    """Snapshots on a time grid plus per-step records.

    ``qbars`` keeps the averaged forcing derivative actually used in each
    step so diagnostics can rebuild the step's lifted chemical potential.
    """

    grid: Grid
    times: np.ndarray
    snapshots: np.ndarray
    beta: float = 0.0
    records: list[StepRecord] = field(default_factory=list)
    qbars: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        snaps = np.asarray(self.snapshots, dtype=float)
        if snaps.shape != (times.size, self.grid.n):
            raise ValueError(
                f"snapshots shape {snaps.shape} does not match "
                f"{times.size} times on a {self.grid.n}-node grid"
            )
        if times.size < 1 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        self.times = times
        self.snapshots = snaps

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> int:
        return self.times.size - 1

    def field(self, k: int) -> Field:
        return Field(self.grid, self.snapshots[k])

    def affine(self, t: float) -> np.ndarray:
        """Piecewise-affine interpolant at time t."""
        times = self.times
        t = float(t)
        slack = 1e-9 * max(1.0, times[-1])
        if t < times[0] - slack or t > times[-1] + slack:
            raise ValueError(f"t={t} outside [{times[0]}, {times[-1]}]")
        idx = int(np.searchsorted(times, t, side="right")) - 1
        idx = min(max(idx, 0), times.size - 2)
        lam = (t - times[idx]) / (times[idx + 1] - times[idx])
        lam = min(max(lam, 0.0), 1.0)
        return (1.0 - lam) * self.snapshots[idx] + lam * self.snapshots[idx + 1]

    def step_value(self, t: float) -> np.ndarray:
        """Right-continuous piecewise-constant interpolant: u_k on ((k-1)tau, k tau]."""
        times = self.times
        t = float(t)
        slack = 1e-9 * max(1.0, times[-1])
        if t < times[0] - slack or t > times[-1] + slack:
            raise ValueError(f"t={t} outside [{times[0]}, {times[-1]}]")
        idx = int(np.searchsorted(times, max(t, times[0]), side="left"))
        idx = min(idx, times.size - 1)
        return self.snapshots[idx]

    def v_norms(self) -> np.ndarray:
        d = np.diff(self.snapshots, axis=1)
        return np.sqrt(np.einsum("ij,ij->i", d, d) / self.grid.h)

    def sup_v_norm(self) -> float:
        return float(np.max(self.v_norms()))

    def l2v_norm(self) -> float:
        """Trapezoid-in-time L2(0,T;V) norm of the snapshot sequence."""
        sq = self.v_norms() ** 2
        dt = np.diff(self.times)
        return float(np.sqrt(0.5 * dt @ (sq[:-1] + sq[1:])))


def constant_trajectory(u0: Field, times: np.ndarray) -> Trajectory:
    """The time-constant trajectory q(t) = u0 on the given knots."""
    times = np.asarray(times, dtype=float)
    snaps = np.tile(u0.values, (times.size, 1))
    return Trajectory(grid=u0.grid, times=times, snapshots=snaps)


def energy(u: Field, m: PotentialModel) -> float:
    """Free energy 1/2 int (u')^2 + int W(x, u) by grid quadrature."""
    g = u.grid
    return 0.5 * grad_energy(g, u.values) + quadrature(g, m.w(g.x, u.values))


def _energy_vals(g: Grid, vals: np.ndarray, m: PotentialModel) -> float:
    return 0.5 * grad_energy(g, vals) + float(g.w @ m.w(g.x, vals))


@dataclass(frozen=True)
class ChemicalPotential:
    """Nodal values of mu = -u'' + dW/ds(x, u).

    Interior rows reuse the operator stencil; both boundary rows use
    one-sided second-order closures.  mu(0) should vanish for solutions of
    the flow, so its magnitude is reported as ``boundary_residual``.
    """

    grid: Grid
    values: np.ndarray
    boundary_residual: float


def chemical_potential(u: Field, m: PotentialModel) -> ChemicalPotential:
    g = u.grid
    if g.n < 4:
        raise ValueError("chemical potential stencils need at least 4 nodes")
    v = u.values
    h2 = g.h * g.h
    mu = np.empty_like(v)
    mu[1:-1] = (-v[:-2] + 2.0 * v[1:-1] - v[2:]) / h2
    mu[0] = -(2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
    mu[-1] = -(2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h2
    mu += m.dw(g.x, v)
    return ChemicalPotential(grid=g, values=mu, boundary_residual=abs(float(mu[0])))


def step_objective(
    vals: np.ndarray,
    u_prev: np.ndarray,
    z_qbar: Optional[np.ndarray],
    tau: float,
    beta: float,
    m: PotentialModel,
    lap: DiscreteLaplacian,
) -> float:
    """The per-step functional Phi at nodal values ``vals``."""
    g = lap.grid
    phi = 0.5 * grad_energy(g, vals) + float(g.w @ m.w(g.x, vals))
    if z_qbar is not None and beta != 0.0:
        phi += beta * float((g.w * z_qbar) @ vals)
    d = vals - u_prev
    zd = lap.lift(d)
    phi += 0.5 / tau * float((g.w * d) @ zd)
    return phi


def _stationarity_residual(
    lap: DiscreteLaplacian,
    m: PotentialModel,
    vals: np.ndarray,
    u_prev: np.ndarray,
    z_qbar: Optional[np.ndarray],
    tau: float,
    beta: float,
) -> np.ndarray:
    """A v + dW/ds + (1/tau) z_{v-u_prev} + beta z_qbar on the free rows.

    Evaluated in this unpremultiplied form the residual is O(1)-scaled, so
    the Newton tolerance is meaningful down to rounding level; the banded
    right-hand side is recovered by one application of A.
    """
    g = lap.grid
    r = lap.mat @ vals[1:]
    r += m.dw(g.x, vals)[1:]
    r += lap.solve_free(vals[1:] - u_prev[1:]) / tau
    if z_qbar is not None and beta != 0.0:
        r += beta * z_qbar[1:]
    return r


def _jacobian_bands(
    lap: DiscreteLaplacian, m: PotentialModel, vals: np.ndarray, tau: float
) -> np.ndarray:
    g = lap.grid
    c = m.d2w(g.x, vals)[1:]
    ab = lap.sq_bands.copy()
    ab[1:4] += lap.tri_bands * c[None, :]
    ab[2] += 1.0 / tau
    return ab


def _newton(
    lap: DiscreteLaplacian,
    m: PotentialModel,
    guess: np.ndarray,
    u_prev: np.ndarray,
    z_qbar: Optional[np.ndarray],
    tau: float,
    beta: float,
    cfg: StepConfig,
) -> tuple[np.ndarray, int, float, bool]:
    """Damped Newton for the stationarity system; returns (u, iters, res, ok).

    The search direction comes from the banded premultiplied Jacobian; since
    the banded right-hand side is exactly A applied to the stationarity
    residual, the direction equals the Newton direction for the latter.
    """
    u = guess.copy()
    res = _stationarity_residual(lap, m, u, u_prev, z_qbar, tau, beta)
    for it in range(cfg.newton_maxiter + 1):
        rnorm = float(np.max(np.abs(res)))
        if rnorm <= cfg.newton_tol:
            return u, it, rnorm, True
        if it == cfg.newton_maxiter:
            return u, it, rnorm, False
        ab = _jacobian_bands(lap, m, u, tau)
        try:
            step = solve_banded((2, 2), ab, -(lap.mat @ res))
        except np.linalg.LinAlgError:
            return u, it, rnorm, False
        alpha = 1.0
        accepted = False
        for _ in range(cfg.max_backtrack):
            trial = u.copy()
            trial[1:] += alpha * step
            trial_res = _stationarity_residual(
                lap, m, trial, u_prev, z_qbar, tau, beta
            )
            if np.all(np.isfinite(trial_res)) and float(
                np.max(np.abs(trial_res))
            ) < rnorm:
                u, res = trial, trial_res
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            return u, it + 1, rnorm, rnorm <= cfg.newton_tol
    raise AssertionError("unreachable")


def mm_step(
    u_prev: Field,
    qbar: Optional[np.ndarray],
    cfg: StepConfig,
    beta: float,
    m: PotentialModel,
) -> tuple[Field, StepRecord]:
    """One implicit step of the dual-metric scheme.

    ``qbar`` is the averaged forcing derivative over the step window (or
    None for an unforced step).  Returns the new field and its diagnostics.
    """
    if cfg.tau is None or cfg.tau <= 0:
        raise ValueError("StepConfig.tau must be set to a positive step size")
    g = u_prev.grid
    lap = get_laplacian(g)
    tau = cfg.tau
    up = u_prev.values
    if qbar is not None:
        qbar = np.asarray(qbar, dtype=float)
        if qbar.shape != (g.n,):
            raise ValueError(f"qbar must have {g.n} nodal values")
    forced = qbar is not None and beta != 0.0
    z_qbar = lap.lift(qbar) if forced else None

    phi_prev = step_objective(up, up, z_qbar, tau, beta, m, lap)

    guesses = [up]
    vel = np.zeros_like(up)
    vel[1:] = -(lap.sq @ up[1:] + lap.mat @ m.dw(g.x, up)[1:])
    if forced:
        vel[1:] -= beta * qbar[1:]
    for damp in cfg.predictor_dampings:
        guesses.append(up + damp * tau * vel)

    failures: list[str] = []
    for tag, guess in enumerate(guesses):
        u_new, iters, residual, ok = _newton(
            lap, m, guess, up, z_qbar, tau, beta, cfg
        )
        if not ok:
            failures.append(f"guess {tag}: newton stalled at residual {residual:.3e}")
            continue
        phi_new = step_objective(u_new, up, z_qbar, tau, beta, m, lap)
        if phi_new > phi_prev + cfg.phi_tol:
            failures.append(
                f"guess {tag}: root increases the step functional by "
                f"{phi_new - phi_prev:.3e}"
            )
            continue
        du = u_new - up
        z_du = lap.lift(du)
        mu = -z_du / tau
        if forced:
            mu = mu - beta * z_qbar
        mu_v = float(np.sqrt(grad_energy(g, mu)))
        du_vp = float(np.sqrt(max((g.w * du) @ z_du, 0.0)))
        out = Field(g, u_new)
        rec = StepRecord(
            k=0,
            t=0.0,
            energy=_energy_vals(g, u_new, m),
            mu_v_norm=mu_v,
            du_vprime=du_vp / tau,
            newton_iters=iters,
            el_residual=residual,
            objective_drop=phi_prev - phi_new,
            mu_boundary=chemical_potential(out, m).boundary_residual,
            guess_tag=tag,
        )
        return out, rec
    raise StepError(
        "implicit step failed for every initial guess: " + "; ".join(failures)
    )


def run_minimizing_movements(
    u0: Field,
    q: Optional[Trajectory],
    T: float,
    N: int,
    beta: float,
    m: PotentialModel,
    cfg: Optional[StepConfig] = None,
) -> Trajectory:
    """March N implicit steps to horizon T with optional transport forcing q.

    With beta = 0 the forcing is never evaluated, so the output matches the
    unforced run exactly.  The solution is monitored against the model's
    certified s-window and the run aborts if it leaves it.
    """
    if T <= 0 or N < 1 or int(N) != N:
        raise ValueError("need a positive horizon and a positive step count")
    if beta < 0:
        raise ValueError("transport coefficient beta must be nonnegative")
    N = int(N)
    tau = T / N
    cfg = replace(cfg or StepConfig(), tau=tau)
    times = np.arange(N + 1) * tau
    g = u0.grid

    forced = beta != 0.0 and q is not None
    qbars: Optional[np.ndarray] = None
    if forced:
        if q.grid is not g:
            raise ValueError("forcing trajectory lives on a different grid")
        if float(np.max(np.diff(q.times))) > tau * (1.0 + 1e-9):
            raise ValueError("forcing must be sampled at least as finely as tau")
        qbars = np.empty((N, g.n))
        for k in range(1, N + 1):
            qbars[k - 1] = average_forcing(q, tau, k)

    m.check_range(u0.values)
    snaps = np.empty((N + 1, g.n))
    snaps[0] = u0.values
    records: list[StepRecord] = []
    u = u0
    for k in range(1, N + 1):
        u, rec = mm_step(u, qbars[k - 1] if forced else None, cfg, beta, m)
        m.check_range(u.values)
        rec.k = k
        rec.t = times[k]
        records.append(rec)
        snaps[k] = u.values
    return Trajectory(
        grid=g,
        times=times,
        snapshots=snaps,
        beta=beta,
        records=records,
        qbars=qbars,
    )


def uniform_v_bound(
    u0: Field, q: Optional[Trajectory], beta: float, m: PotentialModel
) -> float:
    """Step-size-independent bound on sup_k ||u_k||_V along the scheme.

    2 L beta ||q||_{L2(0,T;V)} + 2 sqrt(E(u0) + k0 L); the factor 2 absorbs
    the sqrt(2) of the Young inequalities, so the margin is structural.
    """
    g = u0.grid
    base = 2.0 * np.sqrt(max(energy(u0, m) + m.k0 * g.length, 0.0))
    if beta == 0.0 or q is None:
        return float(base)
    return float(2.0 * g.length * beta * q.l2v_norm() + base)
