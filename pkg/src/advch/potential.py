"""Double-well potentials W(x, s) and certified lower-bound constants.

Every model carries two constants: k0 with W(x, s) >= -k0, and k1 with
s * dW/ds(x, s) - W(x, s) >= -k1.  They feed the a-priori and dissipativity
bounds, so they are either analytic (quartic well) or certified numerically
over a bounded s-window.  Runs monitor the solution against the certified
window and abort on exit rather than extrapolate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import Grid

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


class PotentialRangeError(RuntimeError):
    """The solution left the s-window the constants were certified on."""


@dataclass(frozen=True)
class PotentialModel:
    """Evaluators of W and its s-derivatives plus certified constants.

    All evaluators broadcast over (x, s) arrays.  ``dxw`` is the mixed
    derivative d2W/(ds dx), kept for diagnostics and completeness.
    """

    name: str
    w: Evaluator
    dw: Evaluator
    d2w: Evaluator
    dxw: Evaluator
    k0: float
    k1: float
    s_range: tuple[float, float]

    def check_range(self, vals: np.ndarray) -> None:
        lo, hi = self.s_range
        vmin = float(np.min(vals))
        vmax = float(np.max(vals))
        if vmin < lo or vmax > hi:
            raise PotentialRangeError(
                f"solution range [{vmin:.4g}, {vmax:.4g}] left the certified "
                f"window [{lo:.4g}, {hi:.4g}] of potential {self.name!r}"
            )


@dataclass(frozen=True)
class LBParams:
    """Tilted double well with a spatial step in the tilt.

    W(x, s) = (s + c0)^4/4 - (s + c0)^2/2 + zeta(x) s with
    zeta(x) = -(zeta0/2) (1 + tanh((x - x_s)/l_s)).
    """

    c0: float = 0.0
    zeta0: float = 0.2
    x_s: float = 0.5
    l_s: float = 0.05

    def __post_init__(self):
        if self.l_s <= 0:
            raise ValueError("transition width l_s must be positive")

    def zeta(self, x: np.ndarray) -> np.ndarray:
        return -0.5 * self.zeta0 * (1.0 + np.tanh((x - self.x_s) / self.l_s))

    def dzeta(self, x: np.ndarray) -> np.ndarray:
        sech2 = 1.0 / np.cosh((x - self.x_s) / self.l_s) ** 2
        return -0.5 * self.zeta0 * sech2 / self.l_s


def quartic_well() -> PotentialModel:
    """Space-independent well s^4/4 - s^2/2 with analytic constants.

    The minimum value is -1/4 (at s = +-1) and the minimum of
    s dW/ds - W = (3/4) s^4 - s^2/2 is -1/12 (at s^2 = 1/3), so the
    constants hold on all of R.
    """
    return PotentialModel(
        name="quartic",
        w=lambda x, s: 0.25 * s**4 - 0.5 * s**2 + 0.0 * x,
        dw=lambda x, s: s**3 - s + 0.0 * x,
        d2w=lambda x, s: 3.0 * s**2 - 1.0 + 0.0 * x,
        dxw=lambda x, s: np.zeros(np.broadcast(x, s).shape),
        k0=0.25,
        k1=1.0 / 12.0,
        s_range=(-math.inf, math.inf),
    )


def zero_potential() -> PotentialModel:
    """W identically zero; handy for isolating the metric part of a step."""
    return PotentialModel(
        name="zero",
        w=lambda x, s: np.zeros(np.broadcast(x, s).shape),
        dw=lambda x, s: np.zeros(np.broadcast(x, s).shape),
        d2w=lambda x, s: np.zeros(np.broadcast(x, s).shape),
        dxw=lambda x, s: np.zeros(np.broadcast(x, s).shape),
        k0=0.0,
        k1=0.0,
        s_range=(-math.inf, math.inf),
    )


def lb_potential(p: LBParams, g: Grid) -> PotentialModel:
    """Tilted shifted well; constants certified on a window around the wells."""

    def w(x, s):
        t = s + p.c0
        return 0.25 * t**4 - 0.5 * t**2 + p.zeta(x) * s

    def dw(x, s):
        t = s + p.c0
        return t**3 - t + p.zeta(x) + 0.0 * s

    def d2w(x, s):
        t = s + p.c0
        return 3.0 * t**2 - 1.0 + 0.0 * x

    def dxw(x, s):
        return p.dzeta(x) + 0.0 * s

    lo = min(-1.0, -1.0 - p.c0) - 2.0
    hi = max(1.0, 1.0 - p.c0) + 2.0
    model = PotentialModel(
        name="lb",
        w=w,
        dw=dw,
        d2w=d2w,
        dxw=dxw,
        k0=0.0,
        k1=0.0,
        s_range=(lo, hi),
    )
    k0, k1 = certify_constants(model, (lo, hi), g.x)
    return replace(model, k0=k0, k1=k1)


def polynomial_potential(coeffs, s_range: tuple[float, float] = (-3.0, 3.0)) -> PotentialModel:
    """Space-independent polynomial well W(s) = sum_i coeffs[i] s^i."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size < 1:
        raise ValueError("coefficients must be a non-empty 1-d sequence")
    dc = np.polynomial.polynomial.polyder(c)
    d2c = np.polynomial.polynomial.polyder(dc)
    pv = np.polynomial.polynomial.polyval

    model = PotentialModel(
        name="polynomial",
        w=lambda x, s: pv(s, c) + 0.0 * x,
        dw=lambda x, s: pv(s, dc) + 0.0 * x,
        d2w=lambda x, s: pv(s, d2c) + 0.0 * x,
        dxw=lambda x, s: np.zeros(np.broadcast(x, s).shape),
        k0=0.0,
        k1=0.0,
        s_range=tuple(float(v) for v in s_range),
    )
    k0, k1 = certify_constants(model, model.s_range, np.array([0.0]))
    return replace(model, k0=k0, k1=k1)


def _min_over_window(fn, x_nodes: np.ndarray, lo: float, hi: float) -> float:
    """Minimum of fn(x, s) over x in the node set, s in [lo, hi].

    Dense sampling in s, then a bounded scalar polish around the best sample
    of every x node.  fn must broadcast.
    """
    s = np.linspace(lo, hi, 2001)
    vals = fn(x_nodes[:, None], s[None, :])
    best = float(vals.min())
    ds = s[1] - s[0]
    arg = np.argmin(vals, axis=1)
    for xi, j in zip(x_nodes, arg):
        a = max(lo, s[j] - ds)
        b = min(hi, s[j] + ds)
        if b <= a:
            continue
        res = minimize_scalar(
            lambda t: float(fn(np.asarray(xi), np.asarray(t))),
            bounds=(a, b),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = min(best, float(res.fun))
    return best


def certify_constants(
    m: PotentialModel, s_range: tuple[float, float], x_nodes: np.ndarray
) -> tuple[float, float]:
    """Certify k0 and k1 over an s-window (padded by 10%) and given x nodes."""
    lo, hi = float(s_range[0]), float(s_range[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError(f"certification needs a finite window, got ({lo}, {hi})")
    mid = 0.5 * (lo + hi)
    half = 0.55 * (hi - lo)
    lo, hi = mid - half, mid + half
    x_nodes = np.atleast_1d(np.asarray(x_nodes, dtype=float))

    min_w = _min_over_window(m.w, x_nodes, lo, hi)
    min_coerce = _min_over_window(
        lambda x, s: m.dw(x, s) * s - m.w(x, s), x_nodes, lo, hi
    )
    return max(0.0, -min_w), max(0.0, -min_coerce)
