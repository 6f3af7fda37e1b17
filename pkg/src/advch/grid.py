"""Uniform mesh on [0, L] and the banded second-difference operator.

The operator ``A`` approximates -d2/dx2 acting on functions that vanish at
x = 0 and have zero slope at x = L.  The left end is a strong constraint
(node 0 is never an unknown); the right end is closed by eliminating a
mirrored ghost node.  With trapezoid quadrature weights this closure makes
A symmetric positive definite in the weighted inner product and renders the
discrete summation-by-parts identity (A v, v)_L2 = ||v||_V^2 exact, which
the dual-norm machinery in :mod:`advch.hilbert` relies on.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.linalg import cho_solve_banded, cholesky_banded


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform nodes on [0, L] with trapezoid quadrature weights."""

    length: float
    n: int
    h: float
    x: np.ndarray
    w: np.ndarray


def make_grid(length: float, n: int) -> Grid:
    """Build a uniform grid with ``n`` nodes on [0, length]."""
    if not np.isfinite(length) or length <= 0:
        raise ValueError(f"domain length must be a positive real, got {length!r}")
    if int(n) != n or n < 3:
        raise ValueError(f"grid needs an integer node count >= 3, got {n!r}")
    n = int(n)
    h = length / (n - 1)
    x = np.arange(n) * h
    w = np.full(n, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    x.setflags(write=False)
    w.setflags(write=False)
    return Grid(length=float(length), n=n, h=h, x=x, w=w)


def quadrature(g: Grid, f: np.ndarray) -> float:
    """Trapezoid quadrature of nodal values over [0, L]."""
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n,):
        raise ValueError(f"expected {g.n} nodal values, got shape {f.shape}")
    return float(g.w @ f)


def _csr_to_banded(mat: sps.spmatrix, lower: int, upper: int) -> np.ndarray:
    """Convert a sparse matrix to the ab-layout used by scipy banded solvers."""
    coo = sps.csr_matrix(mat).tocoo()
    m = coo.shape[0]
    ab = np.zeros((lower + upper + 1, m))
    ab[upper + coo.row - coo.col, coo.col] = coo.data
    return ab


class DiscreteLaplacian:
    """Banded form of A restricted to the free nodes 1..n-1.

    Free row i in 1..n-2 carries the centered stencil
    (-v[i-1] + 2 v[i] - v[i+1]) / h^2 with the node-0 coupling dropped
    (the constrained value is zero).  The last row eliminates the mirrored
    ghost node v[n] = v[n-2], giving (2 v[n-1] - 2 v[n-2]) / h^2.

    ``lift`` inverts A row-wise, which is simultaneously the Riesz lift of
    an L2 density onto V: the weighted system W A z = W f is the symmetric
    positive definite stiffness form, factorized once per grid.
    """

    def __init__(self, g: Grid):
        self.grid = g
        n, h = g.n, g.h
        m = n - 1
        inv_h2 = 1.0 / (h * h)
        main = np.full(m, 2.0 * inv_h2)
        below = np.full(m - 1, -inv_h2)
        above = np.full(m - 1, -inv_h2)
        below[-1] = -2.0 * inv_h2
        self.mat = sps.diags([below, main, above], [-1, 0, 1], format="csr")
        self.sq = (self.mat @ self.mat).tocsr()
        self.tri_bands = _csr_to_banded(self.mat, 1, 1)
        self.sq_bands = _csr_to_banded(self.sq, 2, 2)
        wt = g.w[1:]
        sym_upper = np.zeros((2, m))
        sym_upper[1] = main * wt
        sym_upper[0, 1:] = above * wt[:-1]
        self._chol = cholesky_banded(sym_upper, lower=False)

    @property
    def n_free(self) -> int:
        return self.grid.n - 1

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply A to full nodal values; row 0 is the identity constraint."""
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        out[0] = v[0]
        out[1:] = self.mat @ v[1:]
        return out

    def lift(self, f: np.ndarray) -> np.ndarray:
        """Solve A z = f on the free rows with z(0) = 0.

        The value f[0] never enters: it pairs only with the constrained node.
        """
        f = np.asarray(f, dtype=float)
        z = np.zeros_like(f)
        z[1:] = cho_solve_banded((self._chol, False), self.grid.w[1:] * f[1:])
        return z

    def solve_free(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b for reduced right-hand sides (free nodes only)."""
        return cho_solve_banded((self._chol, False), self.grid.w[1:] * b)

    def dense(self) -> np.ndarray:
        """Dense reduced matrix, for tests and small diagnostics."""
        return self.mat.toarray()


_lap_cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def get_laplacian(g: Grid) -> DiscreteLaplacian:
    """Memoized operator assembly; one factorization per grid instance."""
    op = _lap_cache.get(g)
    if op is None:
        op = DiscreteLaplacian(g)
        _lap_cache[g] = op
    return op
