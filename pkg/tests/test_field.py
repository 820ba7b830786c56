"""Grid operators: analytic oracles, operator identities, refinement orders."""

import numpy as np
import pytest

from chrelax.errors import ParameterError
from chrelax.field import Grid, load_field_csv, save_field_csv
from chrelax.harness import fit_rate

RNG_SEED = 20240817


def test_grid_validation():
    with pytest.raises(ParameterError):
        Grid(3)
    with pytest.raises(ParameterError):
        Grid(16, length=0.0)
    g = Grid(16, 2.0)
    assert g.h * g.n == pytest.approx(g.length)


def test_mean_examples():
    g = Grid(8, 1.0)
    assert g.mean(np.full(8, 3.7)) == pytest.approx(3.7)
    g2 = Grid(128, 1.0)
    assert abs(g2.mean(np.cos(np.pi * g2.x))) < 1e-15
    g3 = Grid(4, 1.0)
    assert g3.mean(np.array([1.0, 3.0, 1.0, 3.0])) == 2.0


def test_laplacian_constant_and_mean():
    g = Grid(64)
    assert np.all(g.laplacian_neumann(np.full(64, 2.5)) == 0.0)
    rng = np.random.default_rng(RNG_SEED)
    z = rng.standard_normal(64)
    assert abs(np.sum(g.laplacian_neumann(z))) < 1e-9


def test_laplacian_cosine_eigenfunction():
    # cos(pi x / L) at cell centers is an exact discrete eigenvector; its
    # eigenvalue approaches (pi/L)^2 at second order
    g = Grid(256, 1.0)
    z = np.cos(np.pi * g.x)
    lam_h = (4.0 / g.h ** 2) * np.sin(np.pi * g.h / 2.0) ** 2
    assert np.max(np.abs(g.laplacian_neumann(z) + lam_h * z)) < 1e-9
    assert np.max(np.abs(g.laplacian_neumann(z) + np.pi ** 2 * z)) < 4e-3


def test_inverse_trivial_and_identity():
    g = Grid(128)
    assert np.all(g.inv_neumann_laplacian(np.zeros(128)) == 0.0)
    rng = np.random.default_rng(RNG_SEED)
    z = rng.standard_normal(128)
    w = -g.laplacian_neumann(z)
    back = g.inv_neumann_laplacian(w)
    assert np.max(np.abs(back - (z - np.mean(z)))) < 1e-10 * np.max(np.abs(z))


def test_inverse_rejects_nonzero_mean():
    g = Grid(32)
    with pytest.raises(ParameterError, match="mean"):
        g.inv_neumann_laplacian(np.ones(32))


def test_inverse_cosine_analytic():
    g = Grid(256, 1.0)
    w = np.cos(np.pi * g.x)
    v = g.inv_neumann_laplacian(w)
    assert np.max(np.abs(v - w / np.pi ** 2)) < 2e-6


def test_norm_H_examples():
    g = Grid(64, 2.0)
    assert g.norm_H(np.zeros(64)) == 0.0
    assert g.norm_H(np.ones(64)) == pytest.approx(np.sqrt(2.0))
    g1 = Grid(512, 1.0)
    assert g1.norm_H(np.cos(np.pi * g1.x)) == pytest.approx(
        1.0 / np.sqrt(2.0), abs=1e-5)


def test_norm_Vstar_examples():
    g = Grid(256, 1.0)
    assert g.norm_Vstar(np.full(256, -1.3)) == pytest.approx(1.3, abs=1e-12)
    z = np.cos(np.pi * g.x)
    assert g.norm_Vstar(z) == pytest.approx(1.0 / (np.pi * np.sqrt(2.0)),
                                            abs=1e-5)
    rng = np.random.default_rng(RNG_SEED)
    w = rng.standard_normal(256)
    assert g.norm_Vstar(2.0 * w) == pytest.approx(2.0 * g.norm_Vstar(w),
                                                  rel=1e-12)


def test_operator_identities_on_random_fields():
    # self-adjointness of the inverse and the inverse identity, 100 fields
    g = Grid(256)
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(100):
        v = rng.standard_normal(g.n)
        w = rng.standard_normal(g.n)
        v -= np.mean(v)
        w -= np.mean(w)
        Nv = g.inv_neumann_laplacian(v)
        Nw = g.inv_neumann_laplacian(w)
        a = g.h * np.sum(w * Nv)
        b = g.h * np.sum(v * Nw)
        scale = g.norm_H(w) * g.norm_H(Nv) + g.norm_H(v) * g.norm_H(Nw)
        assert abs(a - b) <= 1e-12 * scale
        z = rng.standard_normal(g.n)
        back = g.inv_neumann_laplacian(-g.laplacian_neumann(z))
        err = np.max(np.abs(back - (z - np.mean(z))))
        assert err <= 1e-12 * max(1.0, np.max(np.abs(z)))


def test_inverse_positivity():
    g = Grid(128)
    rng = np.random.default_rng(RNG_SEED)
    for _ in range(20):
        z = rng.standard_normal(g.n)
        z -= np.mean(z)
        q = g.h * np.sum(z * g.inv_neumann_laplacian(z))
        assert q > 0.0
    assert g.h * np.sum(np.zeros(g.n)) == 0.0


def test_dual_norm_bounded_by_H_norm():
    # |z|_Vstar <= c7 |z|_H with a grid-independent constant
    rng = np.random.default_rng(RNG_SEED)
    worst = 0.0
    for n in (64, 128, 256):
        g = Grid(n)
        for _ in range(30):
            z = rng.standard_normal(n)
            worst = max(worst, g.norm_Vstar(z) / g.norm_H(z))
    assert worst < 1.0  # on the unit interval c7 is below 1


def test_poincare_constant_limit():
    g = Grid(512, 1.0)
    c = g.poincare_constant()
    assert c == pytest.approx(1.0 + 1.0 / np.pi ** 2, abs=2e-5)


def test_poincare_inequality_equality_case():
    # z = cos(pi x): |z|_H^2 = (c_P - 1) |grad z|^2 up to O(h^2)
    g = Grid(256, 1.0)
    z = np.cos(np.pi * g.x)
    cp = g.poincare_constant()
    lhs = g.norm_H(z) ** 2
    rhs = (cp - 1.0) * g.grad_norm_sq(z)
    assert lhs == pytest.approx(rhs, rel=1e-10)
    assert g.norm_V(z) ** 2 <= cp * g.grad_norm_sq(z) * (1 + 1e-10)


def test_refinement_order_two():
    # the three analytic oracles converge at second order in h
    errs_inv, errs_lap, errs_poin = [], [], []
    ns = (64, 128, 256, 512)
    for n in ns:
        g = Grid(n, 1.0)
        z = np.cos(np.pi * g.x)
        errs_inv.append(np.max(np.abs(
            g.inv_neumann_laplacian(z) - z / np.pi ** 2)))
        errs_lap.append(np.max(np.abs(
            g.laplacian_neumann(z) + np.pi ** 2 * z)))
        errs_poin.append(abs(g.poincare_constant() - (1 + 1 / np.pi ** 2)))
    for errs in (errs_inv, errs_lap, errs_poin):
        slope, _ = fit_rate(list(zip([1.0 / n for n in ns], errs)))
        assert abs(slope - 2.0) <= 0.1


def test_field_csv_roundtrip(tmp_path):
    g = Grid(16)
    rng = np.random.default_rng(RNG_SEED)
    z = rng.standard_normal(16)
    path = tmp_path / "field.csv"
    save_field_csv(g, z, path)
    back = load_field_csv(g, path)
    assert np.array_equal(back, z)
    text = path.read_bytes()
    assert text.startswith(b"x,value\r\n")
