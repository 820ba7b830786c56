"""Canonical experiment configurations, one per catalog example.

All seven run on the same grid (n = 128 cells on an interval of length 8,
tau = 1e-3, T = 0.25) with cosine data, so the whole battery stays cheap
while every graph sees genuinely nonlinear dynamics: the enthalpy example
crosses its plateau, the projection example activates its constraint, the
power laws cross zero or stay positive as their domains require.

The interval length 8 keeps the principal Neumann eigenvalue small, so
even the largest swept eps = 1/8 sits inside the asymptotic regime of the
uniform-bound monitors.
"""

import numpy as np

from .data import InitialData, SourceData
from .field import Grid
from .graphs import make_graph
from .solver import ProblemSpec

SWEEP_NAMES = ("stefan", "porous", "heleshaw", "log",
               "linear", "penrose", "fast")

#: regimes of the canonical sweeps: general data vs homogeneous flux
SWEEP_REGIMES = {"stefan": "A4", "porous": "A4", "heleshaw": "A4",
                 "log": "A4", "linear": "A6", "penrose": "A6", "fast": "A6"}


def _cosine(grid, amp=1.0):
    return amp * np.cos(np.pi * grid.x / grid.length)


def sweep_spec(name, n=128, length=8.0, tau=1e-3, T=0.25):
    """The canonical sweep base spec (eps = 0) for one example graph."""
    grid = Grid(n, length)
    c = _cosine(grid)
    if name == "stefan":
        graph = make_graph("stefan")
        u0 = 0.5 + c
        g = c
    elif name == "porous":
        graph = make_graph("porous", q=2.0)
        u0 = 1.0 + 0.5 * c
        g = c
    elif name == "heleshaw":
        graph = make_graph("heleshaw")
        u0 = 0.5 + 0.4 * c
        g = 2.0 * c
    elif name == "log":
        graph = make_graph("log")
        u0 = 0.5 * c
        g = 0.5 * c
    elif name == "linear":
        graph = make_graph("linear")
        u0 = 0.3 + 0.3 * c
        g = c
    elif name == "penrose":
        graph = make_graph("penrose")
        u0 = 0.5 + 0.8 * c
        g = c
    elif name == "fast":
        graph = make_graph("fast", q=0.5)
        u0 = 0.5 * c
        g = 0.5 * c
    else:
        raise ValueError(f"unknown preset {name!r}; known: {SWEEP_NAMES}")
    src = SourceData(g=g, h_left=0.0, h_right=0.0,
                     regime=SWEEP_REGIMES[name], grid=grid)
    return ProblemSpec(graph=graph, src=src,
                       init=InitialData(u0=u0, grid=grid), grid=grid,
                       tau=tau, T=T, eps=0.0)


def heat_oracle_spec(n=256, tau=1e-4, T=0.1):
    """Linear-graph limit run with the separated-variables solution."""
    grid = Grid(n, 1.0)
    u0 = 0.3 + _cosine(grid)
    return ProblemSpec(graph=make_graph("linear"), src=SourceData.zero(grid),
                       init=InitialData(u0=u0, grid=grid), grid=grid,
                       tau=tau, T=T, eps=0.0)
