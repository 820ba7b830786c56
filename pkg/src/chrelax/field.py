"""Discrete function spaces on a 1D interval with homogeneous Neumann closure.

The grid is cell-centered with n cells on (0, length): centers at
``(i + 1/2) h``, ``h = length / n``.  Ghost cells are mirror reflections, so
the discrete Laplacian is symmetric, annihilates constants and produces
zero-mean output; its pseudo-inverse on zero-mean data (the operator behind
the dual norm) is then a true self-adjoint inverse.

Fields are plain 1D numpy arrays of length n; the Grid instance carries all
operators.  The pinned tridiagonal factors are built once per grid and only
read afterwards, so a Grid can be shared across threads.
"""

import numpy as np
import scipy.linalg

from .errors import ParameterError

# relative agreement required between the two evaluations of the dual-norm
# gradient term (quadratic form vs duality product)
_CROSSCHECK_RTOL = 1e-10


class Grid:
    """Uniform cell-centered grid on the interval (0, length)."""

    def __init__(self, n, length=1.0):
        if n < 4:
            raise ParameterError(f"need at least 4 cells, got n={n}")
        if length <= 0:
            raise ParameterError(f"interval length must be positive, got {length}")
        self.n = int(n)
        self.length = float(length)
        self.h = self.length / self.n
        self.x = (np.arange(self.n) + 0.5) * self.h

        h2 = self.h * self.h
        diag = np.full(self.n, -2.0 / h2)
        diag[0] = diag[-1] = -1.0 / h2
        off = np.full(self.n - 1, 1.0 / h2)
        self._lap_diag = diag
        self._lap_off = off

        # banded storage of -Laplacian with row 0 replaced by the pin v_0 = 0
        ab = np.zeros((3, self.n))
        ab[0, 1:] = -off
        ab[1, :] = -diag
        ab[2, :-1] = -off
        ab[0, 1] = 0.0
        ab[1, 0] = 1.0
        self._pinned_ab = ab

    def __eq__(self, other):
        return (isinstance(other, Grid)
                and other.n == self.n and other.length == self.length)

    def __repr__(self):
        return f"Grid(n={self.n}, length={self.length})"

    def _check(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n,):
            raise ParameterError(f"field shape {z.shape} does not match grid n={self.n}")
        if not np.all(np.isfinite(z)):
            raise ParameterError("field contains non-finite values")
        return z

    # -- basic functionals ---------------------------------------------------

    def mean(self, z):
        """Cell average (1/n) sum z_i, exact for cell-centered quadrature."""
        z = self._check(z)
        return float(np.mean(z))

    def cell_integral(self, z):
        """h * sum(z), the midpoint quadrature of the integral over the interval."""
        z = self._check(z)
        return float(self.h * np.sum(z))

    def laplacian_neumann(self, z):
        """Second difference with mirror ghosts; output has exactly zero sum."""
        z = self._check(z)
        out = np.empty_like(z)
        out[1:-1] = z[:-2] - 2.0 * z[1:-1] + z[2:]
        out[0] = z[1] - z[0]
        out[-1] = z[-2] - z[-1]
        return out / (self.h * self.h)

    def inv_neumann_laplacian(self, w):
        """Zero-mean solution v of -laplacian_neumann(v) = w.

        The input must have (numerically) zero mean; the rank-deficient
        system is pinned by v_0 = 0 and the result shifted back to zero mean.
        """
        w = self._check(w)
        m = np.mean(w)
        scale = np.max(np.abs(w))
        if abs(m) > 1e-10 * max(scale, 1e-300):
            raise ParameterError(
                f"inv_neumann_laplacian needs zero-mean data, got mean {m:.3e}")
        rhs = w - m
        rhs = rhs.copy()
        rhs[0] = 0.0
        v = scipy.linalg.solve_banded((1, 1), self._pinned_ab, rhs)
        return v - np.mean(v)

    def gradient_faces(self, z):
        """Forward differences on the n-1 interior faces."""
        z = self._check(z)
        return np.diff(z) / self.h

    # -- norms ----------------------------------------------------------------

    def norm_H(self, z):
        """L2 norm (h sum z_i^2)^(1/2)."""
        z = self._check(z)
        return float(np.sqrt(self.h * np.sum(z * z)))

    def grad_norm_sq(self, z):
        """|grad z|^2 with face gradients; boundary faces carry zero flux."""
        g = self.gradient_faces(z)
        return float(self.h * np.sum(g * g))

    def norm_V(self, z):
        """Full H1-type norm (|z|_H^2 + |grad z|^2)^(1/2)."""
        return float(np.sqrt(self.norm_H(z) ** 2 + self.grad_norm_sq(z)))

    def norm_Vstar(self, z):
        """Dual norm (|grad N(z - m)|^2 + m(z)^2)^(1/2).

        The gradient term is computed both as the face-gradient quadratic
        form and as the duality product <z - m, N(z - m)>; the two agree to
        rounding and are cross-checked on every call.
        """
        z = self._check(z)
        m = np.mean(z)
        w = z - m
        # second centering removes the pairwise-summation residue, which for
        # near-constant fields is as large as the field itself
        w = w - np.mean(w)
        v = self.inv_neumann_laplacian(w)
        grad_sq = self.grad_norm_sq(v)
        dual_sq = float(self.h * np.sum(w * v))
        gap = abs(grad_sq - dual_sq)
        if gap > _CROSSCHECK_RTOL * max(grad_sq, dual_sq, 1e-30):
            raise AssertionError(
                f"dual-norm cross-check failed: {grad_sq!r} vs {dual_sq!r}")
        return float(np.sqrt(max(grad_sq, 0.0) + m * m))

    def poincare_constant(self, rtol=1e-12, max_iter=200):
        """Measured constant 1 + 1/lambda_1 from the spectral gap of -Laplacian.

        lambda_1 (the smallest nonzero Neumann eigenvalue) is found by inverse
        power iteration on the zero-mean subspace, started from a fixed
        deterministic vector.
        """
        v = np.cos(np.pi * self.x / self.length) + 0.3 * np.cos(
            2.0 * np.pi * self.x / self.length)
        v -= np.mean(v)
        v /= np.linalg.norm(v)
        lam_old = np.inf
        for _ in range(max_iter):
            w = self.inv_neumann_laplacian(v)
            w -= np.mean(w)
            nrm = np.linalg.norm(w)
            v_new = w / nrm
            lam = float(v_new @ (-self.laplacian_neumann(v_new)))
            if abs(lam - lam_old) <= rtol * abs(lam):
                v = v_new
                break
            v, lam_old = v_new, lam
        return 1.0 + 1.0 / lam


def save_field_csv(grid, values, path):
    """Write a field as CSV rows ``x,value``, one per cell center."""
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write("x,value\r\n")
        for x, v in zip(grid.x, values):
            fh.write(f"{format(x, '.17g')},{format(v, '.17g')}\r\n")


def load_field_csv(grid, path):
    """Read a field written by save_field_csv, validating the cell count."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.n:
        raise ParameterError(
            f"csv field has {data.shape[0]} rows, expected {grid.n}")
    return data[:, 1].copy()
