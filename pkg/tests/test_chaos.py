"""Chaos coefficients and projections against closed forms and each other."""

import math

import numpy as np
import pytest

from sphlen.chaos import (alpha_coefficient, beta_coefficient, beta_epsilon,
                          chaos_coefficients, chaos_projection,
                          chaos_projections, fourth_chaos_terms,
                          gaussian_density, hermite,
                          length_decomposition_check, mean_boundary_length,
                          sample_trispectrum, second_chaos,
                          trispectrum_level_factor)
from sphlen.field import (HarmonicCoefficients, replication_rng,
                          sample_coefficients, sample_power_spectrum,
                          synthesize)
from sphlen.geometry import level_curve_length

# explicit low-order probabilists' Hermite polynomials
HERMITE_EXPLICIT = {
    0: lambda t: np.ones_like(t),
    1: lambda t: t,
    2: lambda t: t**2 - 1,
    3: lambda t: t**3 - 3 * t,
    4: lambda t: t**4 - 6 * t**2 + 3,
    5: lambda t: t**5 - 10 * t**3 + 15 * t,
    6: lambda t: t**6 - 15 * t**4 + 45 * t**2 - 15,
}


def test_hermite_values():
    assert hermite(0, 1.234) == 1.0
    assert hermite(2, 2.0) == 3.0
    assert hermite(4, 0.0) == 3.0
    t = np.linspace(-3, 3, 13)
    for k, poly in HERMITE_EXPLICIT.items():
        np.testing.assert_allclose(hermite(k, t), poly(t), rtol=1e-12,
                                   atol=1e-12)
    with pytest.raises(ValueError):
        hermite(-1, 0.0)


def test_beta_values():
    assert beta_coefficient(2, 0.0) == pytest.approx(-1 / math.sqrt(2 * math.pi),
                                                     rel=1e-14)
    for k in (1, 3, 5, 7):
        assert beta_coefficient(k, 0.0) == 0.0
    assert gaussian_density(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi),
                                                  rel=1e-15)


def test_beta_epsilon_second_order_convergence():
    errors = [abs(beta_epsilon(4, 1.0, eps) - beta_coefficient(4, 1.0))
              for eps in (0.1, 0.05, 0.025)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.15)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.15)
    with pytest.raises(ValueError):
        beta_epsilon(2, 0.0, 0.0)


def test_alpha_exact_values():
    assert alpha_coefficient(0, 0) == pytest.approx(math.sqrt(math.pi / 2),
                                                    rel=1e-15)
    assert alpha_coefficient(1, 0) == pytest.approx(math.sqrt(2 * math.pi) / 4,
                                                    rel=1e-15)
    assert alpha_coefficient(2, 0) == pytest.approx(
        -3 * math.sqrt(2 * math.pi) / 16, rel=1e-15)
    assert alpha_coefficient(1, 0) == alpha_coefficient(0, 1)
    # large orders stay finite thanks to exact rational accumulation
    assert math.isfinite(alpha_coefficient(25, 25))
    with pytest.raises(ValueError):
        alpha_coefficient(-1, 0)


def test_alpha_beta_product_identities():
    for u in (0.0, 0.3, 1.0, 2.5):
        e = math.exp(-0.5 * u * u)
        assert alpha_coefficient(0, 0) * beta_coefficient(4, u) == pytest.approx(
            0.5 * e * (u**4 - 6 * u**2 + 3), abs=1e-12)
        assert alpha_coefficient(1, 0) * beta_coefficient(2, u) == pytest.approx(
            0.25 * e * (u**2 - 1), abs=1e-12)
        assert alpha_coefficient(2, 0) * beta_coefficient(0, u) == pytest.approx(
            -3.0 / 16.0 * e, abs=1e-12)


def test_coefficient_tables():
    table = chaos_coefficients(levels=(0.0, 1.0), k_max=8)
    for k in (1, 3, 5, 7):
        assert table.beta[(k, 0.0)] == 0.0
    assert set(table.alpha) == {(2 * n, 2 * m)
                                for n in range(5) for m in range(5)
                                if 2 * n + 2 * m <= 8}
    assert table.beta[(4, 1.0)] == beta_coefficient(4, 1.0)


def test_second_chaos_zero_cases():
    coeffs = sample_coefficients(16, replication_rng(0, 16, 0))
    grid = synthesize(coeffs, 2)
    assert second_chaos(grid, 0.0) == 0.0
    unit = HarmonicCoefficients(degree=9, a0=1.0,
                                am=np.exp(1j * np.arange(1, 10)))
    assert second_chaos(sample_power_spectrum(unit), 1.0) == pytest.approx(
        0.0, abs=1e-12)
    with pytest.raises(TypeError):
        second_chaos(coeffs, 1.0)


def test_second_chaos_routes_agree():
    for rep in range(4):
        coeffs = sample_coefficients(24, replication_rng(3, 24, rep))
        grid = synthesize(coeffs, 2)
        spectrum = sample_power_spectrum(coeffs)
        a = second_chaos(grid, 1.3)
        b = second_chaos(spectrum, 1.3)
        assert a == pytest.approx(b, rel=1e-8)


def test_second_chaos_variance_small_degree():
    # spectrum route only: Var D_2(1) = pi^2 (lambda/(2l+1)) e^{-1}
    ell, n, u = 2, 10_000, 1.0
    rng = replication_rng(41, ell, 0)
    d = np.array([second_chaos(sample_power_spectrum(
        sample_coefficients(ell, rng)), u) for _ in range(n)])
    var = d.var(ddof=1)
    target = math.pi**2 * ell * (ell + 1) / (2 * ell + 1) * math.exp(-1.0)
    m4 = np.mean((d - d.mean()) ** 4)
    se = math.sqrt(m4 / n - var**2 * (n - 3) / (n * (n - 1.0)))
    assert abs(var - target) <= 3 * se


def test_trispectrum_level_factor_nodal_normalization():
    # at u = 0 the level factor collapses to -1/4, so the proxy is the
    # plain -1/4 sqrt(lambda/2) (1/4!) int H_4(f)
    assert trispectrum_level_factor(0.0) == pytest.approx(-0.25, rel=1e-14)
    grid = synthesize(sample_coefficients(20, replication_rng(7, 20, 1)), 2)
    h4 = grid.integrate(hermite(4, grid.values))
    lam = 20 * 21
    expected = -0.25 * math.sqrt(lam / 2.0) / 24.0 * h4
    assert sample_trispectrum(grid, 0.0) == pytest.approx(expected, rel=1e-12)


def test_trispectrum_and_second_chaos_decorrelated():
    # distinct expansion orders are uncorrelated across replications
    ell, n, u = 32, 1500, 1.0
    m = np.empty(n)
    d = np.empty(n)
    for rep in range(n):
        coeffs = sample_coefficients(ell, replication_rng(53, ell, rep))
        grid = synthesize(coeffs, 2)
        m[rep] = sample_trispectrum(grid, u)
        d[rep] = second_chaos(sample_power_spectrum(coeffs), u)
    rho = np.corrcoef(m, d)[0, 1]
    assert abs(rho) < 0.1


def test_projection_zero_order_closed_form():
    grid = synthesize(sample_coefficients(18, replication_rng(2, 18, 0)), 2)
    for u in (0.0, 0.5, 2.0):
        lam = 18 * 19
        assert chaos_projection(grid, u, 0) == (
            2 * math.pi * math.sqrt(lam / 2) * math.exp(-u * u / 2))
        assert chaos_projection(grid, u, 0) == mean_boundary_length(18, u)


def test_projection_first_order_vanishes():
    grid = synthesize(sample_coefficients(36, replication_rng(8, 36, 0)), 2)
    assert abs(chaos_projection(grid, 0.7, 1)) <= 1e-8


def test_projection_second_order_matches_closed_form():
    grid = synthesize(sample_coefficients(36, replication_rng(8, 36, 1)), 2)
    for u in (0.4, 1.0):
        assert chaos_projection(grid, u, 2) == pytest.approx(
            second_chaos(grid, u), rel=1e-8)


def test_fourth_order_paths_agree():
    grid = synthesize(sample_coefficients(36, replication_rng(8, 36, 2)), 2)
    for u in (0.0, 0.5, 1.0):
        generic = chaos_projection(grid, u, 4)
        explicit = sum(fourth_chaos_terms(grid, u).values())
        assert generic == pytest.approx(explicit, rel=1e-10)


def test_projection_exact_at_default_oversampling():
    # the default grid already integrates quartic products exactly, so
    # resynthesis at higher oversampling changes nothing
    coeffs = sample_coefficients(28, replication_rng(9, 28, 0))
    g2 = synthesize(coeffs, 2)
    g4 = synthesize(coeffs, 4)
    for q in (2, 3, 4):
        assert chaos_projection(g2, 1.0, q) == pytest.approx(
            chaos_projection(g4, 1.0, q), rel=1e-10, abs=1e-12)


def test_projection_order_limits():
    grid = synthesize(sample_coefficients(12, replication_rng(1, 12, 0)), 4)
    with pytest.raises(ValueError):
        chaos_projection(grid, 0.0, 5)
    with pytest.raises(ValueError):
        chaos_projection(grid, 0.0, 9, high_order=True)
    val = chaos_projection(grid, 0.5, 6, high_order=True)
    assert math.isfinite(val)


def test_odd_projections_vanish_at_zero_level():
    grid = synthesize(sample_coefficients(22, replication_rng(4, 22, 0)), 4)
    scale = mean_boundary_length(22, 0.0)
    assert abs(chaos_projection(grid, 0.0, 3)) <= 1e-12 * scale
    assert abs(chaos_projection(grid, 0.0, 5, high_order=True)) <= 1e-12 * scale


def test_projections_bundle_consistency():
    grid = synthesize(sample_coefficients(30, replication_rng(6, 30, 0)), 2)
    levels = (0.0, 0.5, 1.0)
    bundle = chaos_projections(grid, levels, q_max=4)
    assert [cp.level for cp in bundle] == list(levels)
    for cp in bundle:
        assert cp.proj[0] == mean_boundary_length(30, cp.level)
        assert cp.proj[2] == pytest.approx(cp.d, rel=1e-8, abs=1e-10)
        assert cp.tail_third_plus == pytest.approx(cp.proj[3] + cp.proj[4],
                                                   rel=1e-12)
        assert cp.m4 == pytest.approx(sample_trispectrum(grid, cp.level),
                                      rel=1e-12)
        for q in (1, 2, 3, 4):
            assert cp.proj[q] == pytest.approx(
                chaos_projection(grid, cp.level, q), rel=1e-12, abs=1e-12)
    rows = bundle[1].csv_rows(ell=30, seed=5)
    assert rows[0].startswith("30,0.5,0,")
    with pytest.raises(ValueError):
        chaos_projections(grid, levels, q_max=9)


def test_length_decomposition_residual():
    grid = synthesize(sample_coefficients(32, replication_rng(10, 32, 0)), 4)
    u = 1.0
    measured = level_curve_length(grid, u).length
    res = length_decomposition_check(grid, u, 4, measured_length=measured)
    bundle = chaos_projections(grid, [u], q_max=4)[0]
    assert res == pytest.approx(measured - sum(bundle.proj.values()), rel=1e-10)
    # at u = 0 with q_max = 2 the only surviving term is the mean
    res0 = length_decomposition_check(grid, 0.0, 2)
    nodal = level_curve_length(grid, 0.0).length
    assert res0 == pytest.approx(nodal - mean_boundary_length(32, 0.0),
                                 abs=1e-8 * nodal)


def test_trispectrum_variance_log_growth():
    # doubling the degree adds ~ (pi/4) gamma(u)^2 (H4+2H2-3/2)^2 log 2;
    # the variance itself is Var(M) = (level factor sqrt(lam/2)/4!)^2 4!
    # 8 pi^2 int P^4 sin, evaluated by quadrature
    from conftest import exact_trispectrum_variance
    for u in (0.5, 1.0):
        v1 = exact_trispectrum_variance(200, u)
        v2 = exact_trispectrum_variance(400, u)
        poly = hermite(4, u) + 2 * hermite(2, u) - 1.5
        target = (math.pi / 4.0) * gaussian_density(u) ** 2 * poly**2 * math.log(2.0)
        assert v2 - v1 == pytest.approx(target, rel=0.5)
