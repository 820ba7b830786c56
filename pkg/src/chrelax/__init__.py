"""Numerical laboratory for Cahn-Hilliard relaxations of nonlinear diffusion.

The package integrates three related evolution problems on a 1D Neumann
interval — a regularized fourth-order system, its Cahn-Hilliard relaxation,
and the limiting second-order nonlinear diffusion — for a catalog of
maximal monotone nonlinearities, and verifies at desk scale that the
relaxation gap decays at the predicted rates as the relaxation parameter
goes to zero.
"""

from .errors import (
    ConfigError,
    DataError,
    DomainError,
    FitError,
    ParameterError,
    RunError,
    StepError,
)
from .field import Grid, load_field_csv, save_field_csv
from .graphs import (
    GRAPH_KINDS,
    FastDiffusionGraph,
    HeleShawGraph,
    LinearGraph,
    LogarithmicGraph,
    MonotoneGraph,
    PenroseFifeGraph,
    Perturbation,
    PorousMediumGraph,
    StefanGraph,
    coercivity_margin,
    make_graph,
    minimal_section,
    moreau_yosida,
    perturbation_for,
    perturbation_value,
    resolvent,
    yosida,
    yosida_prime,
)

__version__ = "0.1.0"
