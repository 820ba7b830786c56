"""Problem data: interior/boundary sources, the elliptic fold-in of the
source pair into a potential offset, and the shifted-Neumann initial
smoother.

Boundary fluxes live at the two endpoints of the interval (the discrete
boundary); the compatibility constraint ``h*sum(g) + h_left + h_right = 0``
makes the total mass input zero, which is what keeps the mean of the state
conserved for all three evolution problems.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DataError, ParameterError
from .field import Grid
from .graphs import MonotoneGraph

#: absolute tolerance on the discrete compatibility integral
COMPAT_TOL = 1e-10


@dataclass(frozen=True)
class SourceData:
    """Time-sampled sources (g, h_left, h_right) for one run.

    ``g`` has shape (nt, n) for piecewise-constant-in-time samples, or (n,)
    when time-independent; the boundary fluxes match with shape (nt,) or
    scalars.  Regime "A6" additionally requires h = 0 and zero-mean g.
    """

    g: np.ndarray
    h_left: np.ndarray
    h_right: np.ndarray
    regime: str = "A4"
    grid: Grid = field(default=None)

    def __post_init__(self):
        if self.regime not in ("A4", "A6"):
            raise DataError(f"regime must be 'A4' or 'A6', got {self.regime!r}")
        if self.grid is None:
            raise DataError("SourceData requires its grid")
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        if g.shape[1] != self.grid.n:
            raise DataError(f"g has {g.shape[1]} cells, grid has {self.grid.n}")
        nt = g.shape[0]
        hl = np.broadcast_to(np.asarray(self.h_left, dtype=float), (nt,)).copy()
        hr = np.broadcast_to(np.asarray(self.h_right, dtype=float), (nt,)).copy()
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h_left", hl)
        object.__setattr__(self, "h_right", hr)
        h = self.grid.h
        for k in range(nt):
            total = h * float(np.sum(g[k])) + hl[k] + hr[k]
            if abs(total) > COMPAT_TOL:
                raise DataError(
                    "incompatible sources: h*sum(g) + h_left + h_right = "
                    f"{total:.3e} at sample {k} (must vanish for mass conservation)")
        if self.regime == "A6":
            if np.any(hl != 0.0) or np.any(hr != 0.0):
                raise DataError("regime A6 requires zero boundary flux")
            means = np.abs(np.mean(g, axis=1))
            if np.any(means > COMPAT_TOL):
                raise DataError(
                    f"regime A6 requires zero-mean g, worst mean {means.max():.3e}")

    @property
    def n_samples(self):
        return self.g.shape[0]

    @property
    def time_independent(self):
        return self.g.shape[0] == 1

    def sample(self, k):
        """Data for the k-th implicit step (1-based); piecewise constant."""
        i = min(max(k - 1, 0), self.n_samples - 1)
        return self.g[i], float(self.h_left[i]), float(self.h_right[i])

    @classmethod
    def zero(cls, grid, regime="A4"):
        return cls(g=np.zeros(grid.n), h_left=0.0, h_right=0.0,
                   regime=regime, grid=grid)


@dataclass(frozen=True)
class InitialData:
    """Initial state u0 and its mean m0."""

    u0: np.ndarray
    grid: Grid

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=float)
        if u0.shape != (self.grid.n,):
            raise DataError(f"u0 has shape {u0.shape}, grid has n={self.grid.n}")
        if not np.all(np.isfinite(u0)):
            raise DataError("u0 contains non-finite values")
        object.__setattr__(self, "u0", u0)

    @property
    def m0(self):
        return float(np.mean(self.u0))

    def check_against(self, graph: MonotoneGraph):
        """Admissibility for a graph: m0 interior, values in closure(D),
        potential integrable."""
        lo, hi = graph.domain
        if not (lo < self.m0 < hi):
            raise DataError(
                f"m0 = {self.m0:.6g} must lie in the interior of D(beta) = ({lo}, {hi})")
        if np.any(self.u0 < lo) or np.any(self.u0 > hi):
            raise DataError("u0 takes values outside the closure of D(beta)")
        if not np.all(np.isfinite(np.asarray(graph.betahat(self.u0)))):
            raise DataError("betahat(u0) is not integrable on the grid")


def build_f(src: SourceData, k, grid: Grid):
    """Zero-mean potential offset solving the Neumann problem for sample k.

    Strong form: -f'' = g with outward fluxes (-f'(0), f'(L)) = (h_left,
    h_right), pinned by zero mean.  In finite-volume form the fluxes enter
    the two boundary cells as h/width sources, which reproduces the
    compatibility integral exactly, so the pinned solve applies verbatim.
    """
    if grid != src.grid:
        raise DataError("grid mismatch between SourceData and build_f")
    g, hl, hr = src.sample(k)
    total = grid.h * float(np.sum(g)) + hl + hr
    if abs(total) > COMPAT_TOL:
        raise DataError(
            f"incompatible sources at sample {k}: h*sum(g) + h_left + h_right "
            f"= {total:.3e} must vanish")
    w = g.copy()
    w[0] += hl / grid.h
    w[-1] += hr / grid.h
    # compatibility holds to 1e-10, so removing the rounding-level mean is exact
    return grid.inv_neumann_laplacian(w - np.mean(w))


def smooth_initial(u0, eps, grid: Grid):
    """Solve (I - eps * laplacian) u = u0; mean-preserving averaging.

    The shifted system is symmetric positive definite; row sums are one, so
    the mean is preserved exactly and values stay in the hull of u0.
    """
    if not 0.0 < eps <= 1.0:
        raise ParameterError(f"eps must lie in (0, 1], got {eps!r}")
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (grid.n,):
        raise ParameterError(f"u0 shape {u0.shape} does not match grid")
    h2 = grid.h * grid.h
    upper = np.zeros(grid.n)
    upper[1:] = -eps / h2
    diag = 1.0 + 2.0 * eps / h2 * np.ones(grid.n)
    diag[0] = diag[-1] = 1.0 + eps / h2
    ab = np.vstack([upper, diag])
    return scipy.linalg.solveh_banded(ab, u0)


@dataclass(frozen=True)
class SmootherReport:
    """Per-eps admissibility quantities of the smoothed initial family."""

    eps: np.ndarray
    h_norm_sq: np.ndarray        # |u_0eps|_H^2
    betahat_integral: np.ndarray  # integral of betahat(u_0eps)
    grad_energy: np.ndarray       # eps * |grad u_0eps|^2
    vstar_gap: np.ndarray         # |u_0eps - u0|_Vstar
    c4: float
    gap_order: float              # fitted slope of log(gap) vs log(eps)


def check_A5_bounds(u0, eps_list, graph: MonotoneGraph, grid: Grid):
    """Measure the uniform smoother bounds and the dual-norm gap order.

    Asserts that none of the three bounded quantities grows as eps decreases
    (beyond rounding slack) and that the fitted gap order is at least
    0.5 - 0.05; smooth data achieves order about 1 in the norm.  An empty
    eps list yields an empty report with no assertions.
    """
    init = InitialData(u0=np.asarray(u0, dtype=float), grid=grid)
    init.check_against(graph)
    eps = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    if eps.size == 0:
        empty = np.zeros(0)
        return SmootherReport(eps=eps, h_norm_sq=empty, betahat_integral=empty,
                              grad_energy=empty, vstar_gap=empty,
                              c4=0.0, gap_order=float("nan"))
    hn, bh, ge, gap = [], [], [], []
    for e in eps:
        ue = smooth_initial(init.u0, e, grid)
        hn.append(grid.norm_H(ue) ** 2)
        bh.append(grid.cell_integral(np.asarray(graph.betahat(ue))))
        ge.append(e * grid.grad_norm_sq(ue))
        gap.append(grid.norm_Vstar(ue - init.u0))
    hn, bh, ge, gap = map(np.asarray, (hn, bh, ge, gap))
    c4 = float(max(hn.max(), bh.max(), ge.max()))
    slack = 1e-12 * (1.0 + c4)
    for name, q in (("|u|_H^2", hn), ("betahat integral", bh)):
        # eps is stored decreasing, so growth toward small eps must stay
        # bounded by the raw-data value
        limit_val = {"|u|_H^2": grid.norm_H(init.u0) ** 2,
                     "betahat integral": grid.cell_integral(
                         np.asarray(graph.betahat(init.u0)))}[name]
        if np.any(q > limit_val + slack):
            raise DataError(f"smoother bound violated for {name}")
    order = float("nan")
    if eps.size >= 2 and np.all(gap > 0):
        slope = np.polyfit(np.log(eps), np.log(gap), 1)[0]
        order = float(slope)
        if order < 0.5 - 0.05:
            raise DataError(
                f"smoothed-initial gap order {order:.3f} below 0.45")
    return SmootherReport(eps=eps, h_norm_sq=hn, betahat_integral=bh,
                          grad_energy=ge, vstar_gap=gap, c4=c4, gap_order=order)
