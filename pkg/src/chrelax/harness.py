"""Experiment engine: relaxation sweeps, uniform-bound monitors and
log-log rate fits.

A sweep integrates the limit problem once as the reference and the relaxed
problem for every eps in a decreasing list, on the same grid and time step
so that discretization error cancels in the comparison and only the
relaxation gap is measured.  The gap combines the squared dual-norm
distance of the states with the monotonicity duality term

    E1(eps) = sup_t |u_eps - u|_Vstar^2,
    E2(eps) = int_0^T (xi_eps - xi, u_eps - u)_H dt,

whose sum must decay at least like eps^(1/3) in the general data regime
and eps^(1/2) in the homogeneous-flux regime; faster observed decay passes
(the theory gives upper bounds).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, ParameterError, RunError
from .solver import ProblemSpec, Trajectory, solve_ch_eps, solve_limit

#: slope slack accepted below the theoretical rate
SLOPE_TOL = 0.05
#: default sweep 2^-3 .. 2^-9
DEFAULT_EPS_LIST = tuple(2.0 ** -k for k in range(3, 10))

RATE_THRESHOLDS = {"A4": 1.0 / 3.0, "A6": 0.5}

BOUND_NAMES = ("m1_dudt_Vstar", "m2_grad_energy", "m3_norm_H",
               "m4_mu_V", "m5_xi_H", "m6_eps_u_W")


def fit_rate(pairs):
    """Least squares in log-log space: value ~ constant * eps^slope.

    Nonpositive values are skipped with a warning; fewer than two usable
    points raises FitError.  Returns (slope, constant).
    """
    usable = []
    for eps, value in pairs:
        if value > 0.0 and np.isfinite(value):
            usable.append((float(eps), float(value)))
        else:
            warnings.warn(f"fit_rate: skipping nonpositive value {value!r} "
                          f"at eps={eps!r}", stacklevel=2)
    if len(usable) < 2:
        raise FitError(f"need at least 2 positive points, got {len(usable)}")
    x = np.log([e for e, _ in usable])
    y = np.log([v for _, v in usable])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(np.exp(intercept))


def error_functionals(traj_eps: Trajectory, traj_ref: Trajectory):
    """(E1, E2) between a relaxed trajectory and the reference.

    Both trajectories must share the time grid; E2 uses trapezoid-in-time,
    cell-sum-in-space quadrature.
    """
    if traj_eps.t.shape != traj_ref.t.shape:
        raise ParameterError("trajectories do not share the time grid")
    grid = traj_ref.grid
    K1 = traj_ref.t.size
    du = traj_eps.u - traj_ref.u
    dxi = traj_eps.xi - traj_ref.xi
    e1 = max(grid.norm_Vstar(du[k]) ** 2 for k in range(K1))
    pairing = grid.h * np.sum(dxi * du, axis=1)
    tau = traj_ref.tau
    weights = np.full(K1, tau)
    weights[0] = weights[-1] = 0.5 * tau
    e2 = float(np.sum(weights * pairing))
    return float(e1), e2


@dataclass
class BoundTable:
    """Per-eps values of the six uniformly bounded quantities and their
    fitted eps-slopes (slope >= -SLOPE_TOL means no blow-up)."""

    eps: np.ndarray
    values: dict
    slopes: dict = field(default_factory=dict)
    passed: bool = True
    notes: list = field(default_factory=list)


def monitor_bounds(trajectories):
    """Measure the six bounded quantities for a family of trajectories.

    ``trajectories`` maps eps -> Trajectory.  For a single eps the table
    carries one row and no slopes.
    """
    eps_sorted = sorted(trajectories, reverse=True)
    eps = np.asarray(eps_sorted, dtype=float)
    values = {name: [] for name in BOUND_NAMES}
    for e in eps_sorted:
        traj = trajectories[e]
        grid = traj.grid
        tau = traj.tau
        du = np.diff(traj.u, axis=0) / tau
        m1 = tau * sum(grid.norm_Vstar(du[k]) ** 2 for k in range(du.shape[0]))
        m2 = float(np.max(traj.grad_energy))
        m3 = float(np.max(traj.norm_H_u) ** 2)
        m4 = tau * float(np.sum(traj.mu_V_sq[1:]))
        m5 = tau * float(np.sum(traj.xi_H_sq[1:]))
        m6 = tau * sum(
            (traj.eps ** 2) * grid.norm_H(grid.laplacian_neumann(traj.u[k])) ** 2
            for k in range(1, traj.t.size))
        for name, v in zip(BOUND_NAMES, (m1, m2, m3, m4, m5, m6)):
            values[name].append(v)
    values = {k: np.asarray(v) for k, v in values.items()}
    table = BoundTable(eps=eps, values=values)
    if eps.size < 2:
        table.notes.append("single eps: no slope fitted")
        return table
    for name, vals in values.items():
        try:
            slope, _ = fit_rate(list(zip(eps, vals)))
        except FitError:
            table.notes.append(f"{name}: degenerate values, slope skipped")
            continue
        table.slopes[name] = slope
        if slope < -SLOPE_TOL:
            table.passed = False
            table.notes.append(f"{name}: slope {slope:.3f} signals blow-up")
    return table


@dataclass
class VanishTable:
    """sup_t eps|u_eps|_V and sup_t |pi_eps(u_eps)|_H along a sweep."""

    eps: np.ndarray
    eps_u_V: np.ndarray
    pi_H: np.ndarray
    eps_u_V_order: float
    pi_order: float
    monotone: bool


def vanishing_terms_check(trajectories, perturbation):
    """Decay of the eps-weighted state norm and of the perturbation term.

    Both columns must decrease monotonically along decreasing eps; the
    perturbation column is expected to decay with order >= 1/2 under the
    square-root modulus (the catalog families achieve about 1).
    """
    eps_sorted = sorted(trajectories, reverse=True)
    eps = np.asarray(eps_sorted, dtype=float)
    col_u, col_pi = [], []
    for e in eps_sorted:
        traj = trajectories[e]
        grid = traj.grid
        col_u.append(max(e * grid.norm_V(traj.u[k]) for k in range(traj.t.size)))
        if perturbation is None:
            col_pi.append(0.0)
        else:
            col_pi.append(max(
                grid.norm_H(np.asarray(perturbation.value(e, traj.u[k])))
                for k in range(traj.t.size)))
    col_u = np.asarray(col_u)
    col_pi = np.asarray(col_pi)
    monotone = bool(np.all(np.diff(col_u) < 1e-14 * (1 + col_u[:-1]))
                    and np.all(np.diff(col_pi) < 1e-14 * (1 + col_pi[:-1])))
    order_u = order_pi = float("nan")
    if eps.size >= 2:
        if np.all(col_u > 0):
            order_u = fit_rate(list(zip(eps, col_u)))[0]
        if np.all(col_pi > 0):
            order_pi = fit_rate(list(zip(eps, col_pi)))[0]
    return VanishTable(eps=eps, eps_u_V=col_u, pi_H=col_pi,
                       eps_u_V_order=order_u, pi_order=order_pi,
                       monotone=monotone)


@dataclass
class SweepReport:
    """eps-indexed error functionals, fitted rate, and bound diagnostics."""

    regime: str
    eps: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    threshold: float
    slope: float = float("nan")
    constant: float = float("nan")
    passed: bool = None
    notes: list = field(default_factory=list)
    bounds: BoundTable = None
    trajectories: dict = field(default_factory=dict, repr=False)
    reference: Trajectory = field(default=None, repr=False)

    @property
    def E_total(self):
        return self.E1 + self.E2

    def running_slopes(self):
        """Slope over the first j points, for the sweep.csv column."""
        out = np.full(self.eps.size, np.nan)
        for j in range(1, self.eps.size):
            pts = [(e, v) for e, v in zip(self.eps[:j + 1], self.E_total[:j + 1])
                   if np.isfinite(v) and v > 0]
            if len(pts) >= 2:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    out[j] = fit_rate(pts)[0]
        return out

    def to_csv(self, path):
        running = self.running_slopes()
        bcols = {name: self.bounds.values.get(name) if self.bounds else None
                 for name in BOUND_NAMES}
        with open(path, "w", newline="") as fh:
            fh.write("eps,E1,E2,E_total,slope_running,"
                     + ",".join(f"bound_{n}" for n in BOUND_NAMES) + "\r\n")
            for i in range(self.eps.size):
                row = [self.eps[i], self.E1[i], self.E2[i], self.E_total[i],
                       running[i]]
                for name in BOUND_NAMES:
                    col = bcols[name]
                    row.append(col[i] if col is not None else float("nan"))
                fh.write(",".join(format(v, ".17g") for v in row) + "\r\n")

    def to_svg(self, path):
        from .reports import sweep_svg
        with open(path, "w", newline="") as fh:
            fh.write(sweep_svg(self))


def run_sweep(base: ProblemSpec, eps_list=DEFAULT_EPS_LIST, reference="limit",
              threads=1):
    """Relaxation-gap study over a strictly decreasing eps list.

    ``reference`` chooses the comparison trajectory: "limit" integrates the
    limit problem, "self" uses the relaxed run at the smallest eps as a
    pseudo-reference (consistency check) and fits over the remaining ones.
    Failing member runs are recorded as notes and skipped by the fit.
    """
    eps = np.asarray(list(eps_list), dtype=float)
    if eps.size == 0:
        raise ParameterError("eps list is empty")
    if np.any(eps <= 0.0) or np.any(eps >= 1.0):
        raise ParameterError("eps values must lie in (0, 1)")
    if eps.size > 1 and np.any(np.diff(eps) >= 0.0):
        raise ParameterError("eps list must be strictly decreasing")
    regime = base.src.regime
    threshold = RATE_THRESHOLDS[regime] - SLOPE_TOL

    fit_eps = eps
    if reference == "limit":
        ref = solve_limit(base.with_eps(0.0))
    elif reference == "self":
        ref = solve_ch_eps(base.with_eps(float(eps[-1])))
        fit_eps = eps[:-1]
        if fit_eps.size == 0:
            raise ParameterError("self-reference sweep needs at least 2 eps")
    else:
        raise ParameterError(f"unknown reference mode {reference!r}")

    def member(e):
        return solve_ch_eps(base.with_eps(float(e)))

    trajectories = {}
    notes = []
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {float(e): pool.submit(member, e) for e in fit_eps}
        results = {}
        for e, fut in futures.items():
            try:
                results[e] = fut.result()
            except RunError as err:
                notes.append(f"eps={e:g}: run failed: {err}")
        trajectories.update(results)
    else:
        for e in fit_eps:
            try:
                trajectories[float(e)] = member(e)
            except RunError as err:
                notes.append(f"eps={float(e):g}: run failed: {err}")

    E1 = np.full(eps.size, np.nan)
    E2 = np.full(eps.size, np.nan)
    for i, e in enumerate(eps):
        traj = trajectories.get(float(e))
        if traj is None:
            continue
        E1[i], E2[i] = error_functionals(traj, ref)
        if E2[i] < -1e-10:
            notes.append(f"eps={float(e):g}: duality term E2 = {E2[i]:.3e} < 0")

    report = SweepReport(regime=regime, eps=eps, E1=E1, E2=E2,
                         threshold=threshold, notes=notes,
                         trajectories=trajectories, reference=ref)
    usable = [(e, v) for e, v in zip(eps, report.E_total)
              if np.isfinite(v) and v > 0]
    if len(usable) >= 2:
        report.slope, report.constant = fit_rate(usable)
        report.passed = bool(report.slope >= threshold)
    else:
        report.notes.append("insufficient points for a rate fit")
    if trajectories:
        report.bounds = monitor_bounds(trajectories)
    return report


@dataclass
class LipschitzTable:
    """Per-eps comparison int |xi_eps - xi|_H^2 <= C_beta * E2 + 1e-10."""

    eps: np.ndarray
    xi_gap_sq: np.ndarray
    bound: np.ndarray
    c_beta: float
    passed: bool


def lipschitz_xi_check(report: SweepReport, graph):
    """Selection-difference bound for globally Lipschitz graphs.

    Returns None (an explicit skip) when the graph has unbounded slope.
    """
    c_beta = graph.lipschitz_constant
    if c_beta is None:
        return None
    eps_sorted = sorted(report.trajectories, reverse=True)
    eps = np.asarray(eps_sorted, dtype=float)
    lhs = []
    bound = []
    for i, e in enumerate(eps_sorted):
        traj = report.trajectories[e]
        ref = report.reference
        grid = traj.grid
        dxi = traj.xi - ref.xi
        tau = ref.tau
        weights = np.full(traj.t.size, tau)
        weights[0] = weights[-1] = 0.5 * tau
        gap = float(np.sum(weights * grid.h * np.sum(dxi * dxi, axis=1)))
        idx = int(np.argmin(np.abs(report.eps - e)))
        lhs.append(gap)
        bound.append(c_beta * report.E2[idx] + 1e-10)
    lhs = np.asarray(lhs)
    bound = np.asarray(bound)
    return LipschitzTable(eps=eps, xi_gap_sq=lhs, bound=bound,
                          c_beta=float(c_beta),
                          passed=bool(np.all(lhs <= bound)))
