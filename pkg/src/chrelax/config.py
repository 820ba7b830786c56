"""Flat ``key = value`` run configuration files.

Grammar: one ``key = value`` pair per line, ``#`` starts a comment, keys
use dotted section prefixes (``graph.kind``, ``solver.tau``).  Every key is
validated against a closed per-subcommand schema; unknown keys are errors,
not warnings.  Example::

    # stefan relaxation sweep
    graph.kind   = stefan
    graph.latent = 1.0
    u0           = cosine:0.5,1.0
    g            = cosine
    regime       = A4
    grid.n       = 128
    grid.length  = 8.0
    solver.tau   = 1e-3
    solver.T     = 0.25
"""

import numpy as np

from .data import InitialData, SourceData
from .errors import ConfigError
from .field import Grid, load_field_csv
from .graphs import GRAPH_KINDS, make_graph
from .solver import ProblemSpec

_GRAPH_PARAM_KEYS = {
    "graph.ks": ("stefan",),
    "graph.kl": ("stefan",),
    "graph.latent": ("stefan", "penrose"),
    "graph.q": ("porous", "fast"),
    "graph.alpha": ("log",),
    "graph.thetac": ("penrose",),
}

_COMMON_KEYS = {
    "graph.kind", "graph.ks", "graph.kl", "graph.latent", "graph.q",
    "graph.alpha", "graph.thetac",
    "g", "h_left", "h_right", "u0", "regime",
    "grid.n", "grid.length",
    "solver.tau", "solver.T",
}

SIMULATE_KEYS = _COMMON_KEYS | {
    "solver.eps", "solver.lambda", "output.snapshot_stride", "oracle",
}

SWEEP_KEYS = _COMMON_KEYS | {"sweep.eps_list"}

_REQUIRED = {"graph.kind", "u0", "solver.tau", "solver.T"}


class RunConfig:
    """Validated key-value map resolved from a config file."""

    def __init__(self, raw, path="<config>"):
        self.raw = dict(raw)
        self.path = path

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def get_float(self, key, default=None):
        if key not in self.raw:
            return default
        try:
            return float(self.raw[key])
        except ValueError as err:
            raise ConfigError(f"{self.path}: key {key!r}: not a number: "
                              f"{self.raw[key]!r}") from err

    def get_int(self, key, default=None):
        v = self.get_float(key, default)
        if v is None:
            return None
        if v != int(v):
            raise ConfigError(f"{self.path}: key {key!r} must be an integer")
        return int(v)


def parse_config(path, allowed_keys):
    """Read a flat config file, enforcing the closed key schema."""
    raw = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
        key, value = (part.strip() for part in text.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{path}:{lineno}: empty key or value")
        if key not in allowed_keys:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    missing = _REQUIRED - raw.keys()
    if missing:
        raise ConfigError(f"{path}: missing required key(s): {sorted(missing)}")
    return RunConfig(raw, path=path)


def _build_graph(cfg):
    kind = cfg.get("graph.kind")
    if kind not in GRAPH_KINDS:
        raise ConfigError(f"{cfg.path}: graph.kind {kind!r} not one of "
                          f"{', '.join(GRAPH_KINDS)}")
    params = {}
    for key, kinds in _GRAPH_PARAM_KEYS.items():
        if key in cfg.raw:
            if kind not in kinds:
                raise ConfigError(
                    f"{cfg.path}: key {key!r} does not apply to graph {kind!r}")
            params[key.split(".", 1)[1]] = cfg.get_float(key)
    return make_graph(kind, **params)


def _build_u0(cfg, grid):
    spec = cfg.get("u0")
    if spec.startswith("constant:"):
        return np.full(grid.n, float(spec.split(":", 1)[1]))
    if spec.startswith("cosine:"):
        parts = spec.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ConfigError(f"{cfg.path}: u0 cosine needs '<m0>,<amp>'")
        m0, amp = (float(p) for p in parts)
        return m0 + amp * np.cos(np.pi * grid.x / grid.length)
    if spec.startswith("step:"):
        parts = spec.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ConfigError(f"{cfg.path}: u0 step needs '<a>,<b>'")
        a, b = (float(p) for p in parts)
        u0 = np.where(grid.x < 0.5 * grid.length, a, b)
        return u0.astype(float)
    if spec.startswith("custom-csv:"):
        return load_field_csv(grid, spec.split(":", 1)[1])
    raise ConfigError(f"{cfg.path}: unknown u0 form {spec!r}")


def _build_g(cfg, grid):
    spec = cfg.get("g", "zero")
    if spec == "zero":
        return np.zeros(grid.n)
    if spec == "cosine":
        return np.cos(np.pi * grid.x / grid.length)
    if spec.startswith("cosine:"):
        amp = float(spec.split(":", 1)[1])
        return amp * np.cos(np.pi * grid.x / grid.length)
    if spec.startswith("custom-csv:"):
        return load_field_csv(grid, spec.split(":", 1)[1])
    raise ConfigError(f"{cfg.path}: unknown g form {spec!r}")


def build_problem_spec(cfg):
    """Resolve a RunConfig into a ProblemSpec (errors become ConfigError)."""
    from .errors import DataError, ParameterError

    try:
        grid = Grid(cfg.get_int("grid.n", 128), cfg.get_float("grid.length", 1.0))
        graph = _build_graph(cfg)
        regime = cfg.get("regime", "A4")
        src = SourceData(g=_build_g(cfg, grid),
                         h_left=cfg.get_float("h_left", 0.0),
                         h_right=cfg.get_float("h_right", 0.0),
                         regime=regime, grid=grid)
        init = InitialData(u0=_build_u0(cfg, grid), grid=grid)
        return ProblemSpec(
            graph=graph, src=src, init=init, grid=grid,
            tau=cfg.get_float("solver.tau"),
            T=cfg.get_float("solver.T"),
            eps=cfg.get_float("solver.eps", 0.0),
            lam=cfg.get_float("solver.lambda", 0.0),
        )
    except (ParameterError, DataError, ValueError) as err:
        raise ConfigError(f"{cfg.path}: {err}") from err


def parse_eps_list(cfg):
    """sweep.eps_list as comma-separated floats; default 2^-3 .. 2^-9."""
    spec = cfg.get("sweep.eps_list")
    if spec is None:
        return [2.0 ** -k for k in range(3, 10)]
    try:
        values = [float(p) for p in spec.split(",") if p.strip()]
    except ValueError as err:
        raise ConfigError(f"{cfg.path}: sweep.eps_list: {err}") from err
    if not values:
        raise ConfigError(f"{cfg.path}: sweep.eps_list is empty")
    return values
