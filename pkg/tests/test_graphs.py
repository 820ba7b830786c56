"""Graph catalog: oracle checks and invariant battery.

Oracles are written independently of the library paths they validate:
resolvents are re-solved by plain scalar bisection on locally written
formulas for beta, and Moreau envelopes by brute-force minimization of the
inf definition on a fine grid.
"""

import math

import numpy as np
import pytest

from chrelax.errors import DomainError, ParameterError
from chrelax.graphs import (
    GRAPH_KINDS,
    coercivity_margin,
    make_graph,
    minimal_section,
    moreau_yosida,
    perturbation_for,
    perturbation_value,
    property_battery,
    resolvent,
    yosida,
    yosida_prime,
)

# --- independent oracles ---------------------------------------------------

# beta written out by hand, separate from the library's implementations
ORACLE_BETA = {
    "linear": lambda r: r,
    "stefan": lambda r: r if r < 0 else (0.0 if r <= 1 else r - 1.0),
    "porous": lambda r: math.copysign(abs(r) ** 2, r),
    "fast": lambda r: math.copysign(math.sqrt(abs(r)), r),
    "log": lambda r: abs(r) * math.log((1 + r) / (1 - r)),
    "penrose": lambda r: (-1 / (r + 1) + 1 if r < 0
                          else (0.0 if r <= 1 else -1 / (r + 1 - 1) + 1)),
}


def bisect_resolvent(beta, lam, r, lo, hi, iters=200):
    """Pure scalar bisection on s + lam*beta(s) = r."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid + lam * beta(mid) <= r:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def moreau_grid_oracle(betahat, lam, r, s_grid):
    """Brute-force inf of |r-s|^2/(2 lam) + betahat(s) on a grid."""
    vals = (r - s_grid) ** 2 / (2 * lam) + betahat
    return float(np.min(vals))


# --- resolvent examples ----------------------------------------------------


def test_resolvent_heleshaw_is_projection():
    g = make_graph("heleshaw")
    assert resolvent(g, 0.5, 1.7) == 1.0
    assert resolvent(g, 0.25, -3.0) == 0.0
    assert resolvent(g, 2.0, 0.4) == 0.4


def test_resolvent_linear_analytic():
    g = make_graph("linear")
    assert resolvent(g, 1.0, 3.0) == pytest.approx(1.5, abs=1e-15)
    for lam, r in [(0.1, -2.0), (3.0, 0.7)]:
        assert resolvent(g, lam, r) == pytest.approx(r / (1 + lam), abs=1e-15)


def test_resolvent_stefan_against_bisection_oracle():
    g = make_graph("stefan", ks=1.0, kl=1.0, latent=1.0)
    s = bisect_resolvent(ORACLE_BETA["stefan"], 1.0, 2.0, -10.0, 10.0)
    assert s == pytest.approx(1.5, abs=1e-12)
    assert resolvent(g, 1.0, 2.0) == pytest.approx(1.5, abs=1e-13)


@pytest.mark.parametrize("kind,lam,r,lo,hi", [
    ("porous", 0.3, 2.0, 0.0, 2.0),
    ("porous", 1e-3, -5.0, -5.0, 0.0),
    ("fast", 0.7, 1.3, 0.0, 1.3),
    ("log", 0.2, 5.0, 0.0, 1.0),
    ("log", 1.0, -0.4, -1.0, 0.0),
    ("penrose", 0.5, -3.0, -1.0, 0.0),
    ("penrose", 0.25, 4.0, 1.0, 4.0),
])
def test_resolvent_matches_bisection_oracle(kind, lam, r, lo, hi):
    g = make_graph(kind)
    expected = bisect_resolvent(ORACLE_BETA[kind], lam, r, lo, hi)
    assert resolvent(g, lam, r) == pytest.approx(expected, abs=1e-12)


def test_resolvent_rejects_bad_lambda():
    g = make_graph("linear")
    with pytest.raises(ParameterError):
        resolvent(g, 0.0, 1.0)
    with pytest.raises(ParameterError):
        resolvent(g, -1.0, 1.0)


# --- yosida examples -------------------------------------------------------


def test_yosida_heleshaw_value():
    g = make_graph("heleshaw")
    assert yosida(g, 0.5, 1.7) == pytest.approx(1.4, abs=1e-15)


def test_yosida_zero_fixed_point():
    for kind in GRAPH_KINDS:
        g = make_graph(kind)
        for lam in (1e-4, 1e-2, 1.0):
            assert yosida(g, lam, 0.0) == 0.0


def test_yosida_sign_graph_inside_band():
    g = make_graph("fast", q=0.0)
    assert yosida(g, 0.1, 0.05) == pytest.approx(0.5, abs=1e-15)
    assert yosida(g, 0.1, 0.5) == 1.0
    assert yosida(g, 0.1, -0.02) == pytest.approx(-0.2, abs=1e-15)


def test_yosida_equals_difference_quotient():
    # the stable evaluation agrees with (r - J(r)) / lam
    for kind in GRAPH_KINDS:
        g = make_graph(kind)
        r = np.linspace(*g.sample_interval, 201)
        for lam in (1e-2, 1.0):
            J = np.asarray(resolvent(g, lam, r))
            quotient = (r - J) / lam
            scale = np.maximum(1.0, np.abs(quotient))
            assert np.max(np.abs(np.asarray(yosida(g, lam, r)) - quotient)
                          / scale) < 1e-9, kind


# --- moreau envelope examples ----------------------------------------------


def test_moreau_zero():
    for kind in GRAPH_KINDS:
        g = make_graph(kind)
        assert moreau_yosida(g, 0.3, 0.0) == 0.0


def test_moreau_heleshaw_against_inf_oracle():
    g = make_graph("heleshaw")
    s_grid = np.linspace(0.0, 1.0, 20001)
    expected = moreau_grid_oracle(np.zeros_like(s_grid), 0.5, 1.7, s_grid)
    assert expected == pytest.approx(0.49, abs=1e-7)
    assert moreau_yosida(g, 0.5, 1.7) == pytest.approx(0.49, abs=1e-13)


def test_moreau_linear_against_inf_oracle():
    g = make_graph("linear")
    s_grid = np.linspace(-5.0, 5.0, 200001)
    expected = moreau_grid_oracle(0.5 * s_grid ** 2, 1.0, 2.0, s_grid)
    assert expected == pytest.approx(1.0, abs=1e-8)
    assert moreau_yosida(g, 1.0, 2.0) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("kind,lam,r", [
    ("stefan", 0.5, 2.3), ("porous", 0.2, 1.4), ("fast", 0.8, -2.0),
    ("log", 0.3, 0.9), ("penrose", 0.6, 2.5),
])
def test_moreau_matches_inf_oracle(kind, lam, r):
    g = make_graph(kind)
    lo, hi = g.domain
    lo = max(lo + 1e-9, -8.0)
    hi = min(hi - 1e-9 if np.isfinite(hi) else 8.0, 8.0)
    s_grid = np.linspace(lo, hi, 400001)
    bh = np.asarray(g.betahat(s_grid))
    expected = moreau_grid_oracle(bh, lam, r, s_grid)
    assert moreau_yosida(g, lam, r) == pytest.approx(expected, abs=1e-7)


# --- perturbation families -------------------------------------------------


def test_perturbation_stefan_branches():
    p = perturbation_for(make_graph("stefan", latent=1.0))
    assert perturbation_value(p, 0.5, 2.0) == pytest.approx(-0.25)
    assert perturbation_value(p, 0.5, -1.0) == pytest.approx(0.25)
    assert perturbation_value(p, 0.5, 0.5) == 0.0  # vanishes at L/2


def test_perturbation_porous_linear():
    p = perturbation_for(make_graph("porous", q=2.0))
    assert perturbation_value(p, 0.3, 2.0) == pytest.approx(-0.6)


def test_perturbation_rejects_bad_eps():
    p = perturbation_for(make_graph("linear"))
    with pytest.raises(ParameterError):
        perturbation_value(p, 0.0, 1.0)
    with pytest.raises(ParameterError):
        perturbation_value(p, 1.5, 1.0)


@pytest.mark.parametrize("kind", GRAPH_KINDS)
def test_perturbation_modulus_bound(kind):
    # |pi_eps(0)| + Lip(pi_eps) <= c3 * sigma(eps), Lipschitz sampled by
    # finite differences on a fine grid
    g = make_graph(kind)
    p = perturbation_for(g)
    r = np.linspace(-5.0, 5.0, 4001)
    for eps in (1e-3, 1e-2, 0.1, 0.5, 1.0):
        vals = np.asarray(p.value(eps, r))
        lip = float(np.max(np.abs(np.diff(vals) / np.diff(r))))
        assert abs(p.value(eps, 0.0)) + lip <= p.c3 * p.sigma(eps) + 1e-12


@pytest.mark.parametrize("kind", GRAPH_KINDS)
def test_perturbation_primitive_consistency(kind):
    # pihat(0) = 0 and pihat' = pi by centered differences
    p = perturbation_for(make_graph(kind))
    eps = 0.37
    assert p.primitive(eps, 0.0) == 0.0
    r = np.linspace(-3.0, 3.0, 601)
    d = 1e-6
    fd = (np.asarray(p.primitive(eps, r + d))
          - np.asarray(p.primitive(eps, r - d))) / (2 * d)
    # centered differences across the piecewise kinks carry an O(d*eps) term
    assert np.max(np.abs(fd - np.asarray(p.value(eps, r)))) < 1e-6


def test_sigma_normalization():
    p = perturbation_for(make_graph("linear"))
    assert p.sigma(0.0) == 0.0
    assert p.sigma(1.0) == 1.0
    s = [p.sigma(e) for e in np.linspace(0.01, 1.0, 50)]
    assert all(b > a for a, b in zip(s, s[1:]))


# --- coercivity margin -----------------------------------------------------


def test_coercivity_margin_linear():
    g = make_graph("linear")
    grid = np.linspace(-10.0, 10.0, 2001)
    assert coercivity_margin(g, 1.0, 0.0, grid) >= 0.0


def test_coercivity_margin_heleshaw():
    g = make_graph("heleshaw")
    grid = np.linspace(-2.0, 3.0, 2001)
    assert coercivity_margin(g, 0.1, 0.5, grid) >= 0.0


def test_coercivity_margin_degenerate_grid():
    # grid containing only m0 with beta_lam(m0) = 0: margin = c6 > 0
    g = make_graph("stefan")
    assert coercivity_margin(g, 0.5, 0.5, np.array([0.5])) > 0.0


def test_coercivity_margin_rejects_exterior_m0():
    g = make_graph("heleshaw")
    with pytest.raises(ParameterError):
        coercivity_margin(g, 0.1, 1.5, np.linspace(-1, 2, 101))


# --- minimal section and domain handling -----------------------------------


def test_minimal_section_values():
    assert minimal_section(make_graph("heleshaw"), 0.0) == 0.0
    assert minimal_section(make_graph("heleshaw"), 1.0) == 0.0
    assert minimal_section(make_graph("fast", q=0.0), 0.0) == 0.0
    assert minimal_section(make_graph("stefan"), -2.0) == -2.0


def test_minimal_section_outside_domain():
    with pytest.raises(DomainError):
        minimal_section(make_graph("heleshaw"), 1.5)
    with pytest.raises(DomainError):
        minimal_section(make_graph("log"), 1.0)
    with pytest.raises(DomainError):
        minimal_section(make_graph("penrose"), -1.0)


def test_make_graph_rejects_unknown():
    with pytest.raises(ParameterError):
        make_graph("bogus")
    with pytest.raises(ParameterError):
        make_graph("linear", q=2.0)
    with pytest.raises(ParameterError):
        make_graph("porous", q=0.5)
    with pytest.raises(ParameterError):
        make_graph("fast", q=1.5)


# --- normalization and potential invariants --------------------------------


@pytest.mark.parametrize("kind", GRAPH_KINDS)
def test_betahat_nonnegative_and_zero_at_zero(kind):
    g = make_graph(kind)
    lo, hi = g.sample_interval
    r = np.linspace(lo, hi, 4001)
    bh = np.asarray(g.betahat(r))
    finite = np.isfinite(bh)
    assert np.all(bh[finite] >= -1e-15)
    assert g.betahat(0.0) == 0.0


@pytest.mark.parametrize("kind", GRAPH_KINDS)
def test_minimal_section_monotone(kind):
    g = make_graph(kind)
    lo, hi = g.domain
    a = max(lo + 1e-6, g.sample_interval[0])
    b = min(hi - 1e-6 if np.isfinite(hi) else np.inf, g.sample_interval[1])
    r = np.linspace(a, b, 2001)
    vals = np.asarray(minimal_section(g, r))
    assert np.all(np.diff(vals) >= -1e-12)


@pytest.mark.parametrize("kind", GRAPH_KINDS)
def test_property_battery_per_graph(kind):
    results = property_battery(make_graph(kind), n_samples=4000)
    failed = {k: v for k, v in results.items() if not v[0]}
    assert not failed, failed


def test_yosida_prime_within_bounds():
    for kind in GRAPH_KINDS:
        g = make_graph(kind)
        r = np.linspace(*g.sample_interval, 501)
        for lam in (1e-3, 0.1, 1.0):
            d = np.asarray(yosida_prime(g, lam, r))
            assert np.all(d >= -1e-12)
            assert np.all(d <= 1.0 / lam + 1e-6)


def test_yosida_prime_matches_finite_differences():
    # away from kinks the generalized derivative is the classical one
    for kind in ("linear", "porous", "log", "penrose", "stefan"):
        g = make_graph(kind)
        r = np.linspace(1.2, 2.8, 41)  # clear of every catalog kink
        for lam in (1e-2, 0.3):
            d = 1e-6
            fd = (np.asarray(yosida(g, lam, r + d))
                  - np.asarray(yosida(g, lam, r - d))) / (2 * d)
            assert np.max(np.abs(fd - np.asarray(yosida_prime(g, lam, r)))) \
                < 1e-5, kind
