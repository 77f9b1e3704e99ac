"""Hermite expansion machinery for level-set lengths.

The length of the u-level set of a unit-variance Gaussian eigenfunction
admits an orthogonal expansion in Hermite polynomials of the field and its
normalized gradient components.  Each order-q component is

    sqrt(lambda/2) * sum_{2a+2b+c=q} alpha_{2a,2b} beta_c(u) / ((2a)!(2b)!c!)
        * int H_c(f) H_{2a}(g1) H_{2b}(g2),

where beta_k(u) = gamma(u) H_k(u) are the coefficients of the Dirac mass at
u, and alpha_{2n,2m} are the coefficients of the planar Euclidean norm,
given in closed form by a swinging-factorial polynomial evaluated at 1/4.

Two low-order components have closed-form proxies computed here as well:
the order-2 component (a multiple of int H_2(f), equivalently of the
centred sample power spectrum) and the order-4 trispectrum proxy, a
multiple of int H_4(f), which dominates the norm-adjusted fluctuations.

All grid quadratures are exact for the default oversampling: products of
up to four field/gradient factors stay below the grid's bandwidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .field import FieldGrid, SpectrumSample
from .geometry import level_curve_length

__all__ = [
    "ChaosCoefficients",
    "ChaosProjections",
    "hermite",
    "gaussian_density",
    "beta_coefficient",
    "beta_epsilon",
    "alpha_coefficient",
    "chaos_coefficients",
    "second_chaos",
    "sample_trispectrum",
    "trispectrum_level_factor",
    "chaos_projection",
    "chaos_projections",
    "fourth_chaos_terms",
    "length_decomposition_check",
]

_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)


def hermite(k: int, t):
    """Probabilists' Hermite polynomial H_k(t), by the three-term recurrence."""
    if k < 0:
        raise ValueError("Hermite order must be non-negative")
    arr = np.asarray(t, dtype=float)
    h_prev = np.ones_like(arr)
    if k == 0:
        return float(h_prev) if arr.ndim == 0 else h_prev
    h = arr.copy()
    for j in range(1, k):
        h, h_prev = arr * h - j * h_prev, h
    return float(h) if arr.ndim == 0 else h


def gaussian_density(t):
    """Standard normal density; the one density used throughout."""
    arr = np.asarray(t, dtype=float)
    out = np.exp(-0.5 * arr**2) / math.sqrt(2.0 * math.pi)
    return float(out) if arr.ndim == 0 else out


def beta_coefficient(k: int, u: float) -> float:
    """Expansion coefficient of the Dirac mass at u: gamma(u) H_k(u)."""
    return gaussian_density(u) * hermite(k, u)


def beta_epsilon(k: int, u: float, eps: float) -> float:
    """Smoothed coefficient: mean of H_k gamma over [u - eps, u + eps].

    Converges to beta_coefficient(k, u) at rate eps^2.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    nodes, wts = np.polynomial.legendre.leggauss(24)
    t = u + eps * nodes
    return float((hermite(k, t) * gaussian_density(t)) @ wts) / 2.0


def _swinging_poly(n: int, x: Fraction) -> Fraction:
    """p_N(x) = sum_j (-1)^(j+N) C(N,j) (2j+1)!/(j!)^2 x^j, exactly."""
    total = Fraction(0)
    for j in range(n + 1):
        term = (Fraction(math.comb(n, j))
                * Fraction(math.factorial(2 * j + 1), math.factorial(j) ** 2)
                * x**j)
        total += term if (j + n) % 2 == 0 else -term
    return total


def alpha_coefficient(n: int, m: int) -> float:
    """Expansion coefficient alpha_{2n,2m} of the planar Euclidean norm.

    Closed form sqrt(pi/2) (2n)!(2m)!/(n! m!) 2^{-(n+m)} p_{n+m}(1/4); the
    rational part is accumulated exactly (Python integers never overflow),
    so large orders lose no precision to cancellation.
    """
    if n < 0 or m < 0:
        raise ValueError("orders must be non-negative")
    rational = (Fraction(math.factorial(2 * n) * math.factorial(2 * m),
                         math.factorial(n) * math.factorial(m) * 2**(n + m))
                * _swinging_poly(n + m, Fraction(1, 4)))
    return _SQRT_HALF_PI * float(rational)


@dataclass(frozen=True)
class ChaosCoefficients:
    """Precomputed expansion coefficient tables.

    beta[(k, u)] for k <= k_max over the requested levels, and
    alpha[(2n, 2m)] for 2n + 2m <= k_max.
    """

    beta: dict[tuple[int, float], float]
    alpha: dict[tuple[int, int], float]
    k_max: int


def chaos_coefficients(levels, k_max: int = 8) -> ChaosCoefficients:
    beta = {(k, float(u)): beta_coefficient(k, float(u))
            for k in range(k_max + 1) for u in levels}
    alpha = {(2 * n, 2 * m): alpha_coefficient(n, m)
             for n in range(k_max // 2 + 1) for m in range(k_max // 2 + 1)
             if 2 * n + 2 * m <= k_max}
    return ChaosCoefficients(beta=beta, alpha=alpha, k_max=k_max)


def _h2_integral(source) -> tuple[float, int]:
    """(int H_2(f), degree) from either a spectrum sample or a field grid."""
    if isinstance(source, SpectrumSample):
        return 4.0 * math.pi * (source.c_hat - 1.0), source.degree
    if isinstance(source, FieldGrid):
        return source.integrate(source.values**2 - 1.0), source.degree
    raise TypeError("expected SpectrumSample or FieldGrid")


def second_chaos(source, u: float) -> float:
    """Order-2 length component: (1/4) sqrt(lambda/2) u^2 e^{-u^2/2} int H_2(f).

    Accepts either a FieldGrid (quadrature route) or a SpectrumSample
    (int H_2(f) = 4 pi (c_hat - 1), no grid needed); the two routes agree
    to quadrature precision.  Identically zero at u = 0.
    """
    h2, ell = _h2_integral(source)
    lam = ell * (ell + 1)
    return 0.25 * math.sqrt(lam / 2.0) * u * u * math.exp(-0.5 * u * u) * h2


def trispectrum_level_factor(u: float) -> float:
    """Deterministic level factor sqrt(pi/2) gamma(u) (H_4(u) + 2 H_2(u) - 3/2).

    Equals -1/4 at u = 0, recovering the plain trispectrum normalization.
    """
    poly = hermite(4, u) + 2.0 * hermite(2, u) - 1.5
    return _SQRT_HALF_PI * gaussian_density(u) * poly


def sample_trispectrum(grid: FieldGrid, u: float = 0.0) -> float:
    """Trispectrum length proxy: level factor times sqrt(lambda/2)/4! int H_4(f)."""
    h4 = grid.integrate(hermite(4, grid.values))
    return (trispectrum_level_factor(u) * math.sqrt(grid.eigenvalue / 2.0)
            * h4 / 24.0)


def _component_terms(q: int) -> list[tuple[int, int, int]]:
    """All (a, b, c) with 2a + 2b + c = q."""
    return [(a, b, q - 2 * a - 2 * b)
            for a in range(q // 2 + 1) for b in range(q // 2 - a + 1)]


class _HermiteCache:
    """Hermite transforms of the field and gradient grids, computed lazily."""

    def __init__(self, grid: FieldGrid):
        self.planes = {"f": grid.values, "g1": grid.grad1, "g2": grid.grad2}
        self.cache: dict[tuple[str, int], np.ndarray] = {}

    def h(self, plane: str, k: int) -> np.ndarray:
        key = (plane, k)
        if key not in self.cache:
            self.cache[key] = hermite(k, self.planes[plane])
        return self.cache[key]


def _component_integrals(grid: FieldGrid, terms, cache: _HermiteCache
                         ) -> dict[tuple[int, int, int], float]:
    out = {}
    for a, b, c in terms:
        integrand = cache.h("f", c)
        if a:
            integrand = integrand * cache.h("g1", 2 * a)
        if b:
            integrand = integrand * cache.h("g2", 2 * b)
        out[(a, b, c)] = grid.integrate(integrand)
    return out


def _projection_from_integrals(ell: int, u: float, terms, integrals) -> float:
    scale = math.sqrt(ell * (ell + 1) / 2.0)
    total = 0.0
    for a, b, c in terms:
        coeff = (alpha_coefficient(a, b) * beta_coefficient(c, u)
                 / (math.factorial(2 * a) * math.factorial(2 * b)
                    * math.factorial(c)))
        total += coeff * integrals[(a, b, c)]
    return scale * total


def chaos_projection(grid: FieldGrid, u: float, q: int, *,
                     high_order: bool = False) -> float:
    """Projection of the u-level length onto the order-q Hermite component.

    q in {0, 1, 2, 3, 4} by default; orders up to 8 are available behind
    `high_order` via the same general sum.  The order-0 component is the
    deterministic mean length and is returned in closed form.
    """
    if q < 0 or (q > 4 and not high_order) or q > 8:
        raise ValueError(f"unsupported chaos order {q}")
    if q == 0:
        return mean_boundary_length(grid.degree, u)
    cache = _HermiteCache(grid)
    terms = _component_terms(q)
    integrals = _component_integrals(grid, terms, cache)
    return _projection_from_integrals(grid.degree, u, terms, integrals)


def mean_boundary_length(ell: int, u: float) -> float:
    """Expected u-level length 2 pi sqrt(lambda/2) e^{-u^2/2} of a degree-l field."""
    lam = ell * (ell + 1)
    return 2.0 * math.pi * math.sqrt(lam / 2.0) * math.exp(-0.5 * u * u)


def fourth_chaos_terms(grid: FieldGrid, u: float) -> dict[str, float]:
    """The six explicit addends of the order-4 component.

    Spelled out term by term (pure field quartic, two mixed field/gradient
    terms per gradient component, pure gradient quartics and the cross
    term); their sum must match the general order-4 path to rounding.
    """
    lam_scale = math.sqrt(grid.eigenvalue / 2.0)
    cache = _HermiteCache(grid)
    a00, a20, a40, a22 = (alpha_coefficient(0, 0), alpha_coefficient(1, 0),
                          alpha_coefficient(2, 0), alpha_coefficient(1, 1))
    b0, b2, b4 = (beta_coefficient(0, u), beta_coefficient(2, u),
                  beta_coefficient(4, u))
    h = cache.h
    terms = {
        "field_quartic": a00 * b4 / 24.0 * grid.integrate(h("f", 4)),
        "field_sq_grad1": a20 * b2 / 4.0 * grid.integrate(h("f", 2) * h("g1", 2)),
        "grad1_quartic": a40 * b0 / 24.0 * grid.integrate(h("g1", 4)),
        "grad_cross": a22 * b0 / 4.0 * grid.integrate(h("g1", 2) * h("g2", 2)),
        "field_sq_grad2": a20 * b2 / 4.0 * grid.integrate(h("f", 2) * h("g2", 2)),
        "grad2_quartic": a40 * b0 / 24.0 * grid.integrate(h("g2", 4)),
    }
    return {key: lam_scale * val for key, val in terms.items()}


@dataclass(frozen=True)
class ChaosProjections:
    """Per-level chaos components of one realization."""

    level: float
    d: float                  # order-2 closed-form component
    m4: float                 # trispectrum proxy at this level
    proj: dict[int, float]    # order q -> projection value
    tail_third_plus: float    # sum of computed orders >= 3

    def csv_rows(self, ell: int, seed: int) -> list[str]:
        return [f"{ell},{self.level!r},{q},{val!r},{seed}"
                for q, val in sorted(self.proj.items())]

    @staticmethod
    def csv_header() -> str:
        return "ell,u,q,value,seed"


def chaos_projections(grid: FieldGrid, levels, q_max: int = 4
                      ) -> list[ChaosProjections]:
    """Chaos components for several levels, sharing one set of quadratures.

    The level only enters through the beta coefficients, so the Hermite
    quadratures are computed once per grid and reused across levels.
    """
    if q_max < 2 or q_max > 8:
        raise ValueError("q_max must be between 2 and 8")
    ell = grid.degree
    cache = _HermiteCache(grid)
    per_order = {q: _component_terms(q) for q in range(1, q_max + 1)}
    integrals = _component_integrals(
        grid, [t for terms in per_order.values() for t in terms], cache)
    spectrum_h2 = grid.integrate(cache.h("f", 2))
    h4 = grid.integrate(cache.h("f", 4))
    lam_scale = math.sqrt(grid.eigenvalue / 2.0)
    out = []
    for u in levels:
        u = float(u)
        proj = {0: mean_boundary_length(ell, u)}
        for q in range(1, q_max + 1):
            proj[q] = _projection_from_integrals(ell, u, per_order[q],
                                                 integrals)
        tail = sum(proj[q] for q in range(3, q_max + 1))
        d = 0.25 * lam_scale * u * u * math.exp(-0.5 * u * u) * spectrum_h2
        m4 = trispectrum_level_factor(u) * lam_scale * h4 / 24.0
        out.append(ChaosProjections(level=u, d=d, m4=m4, proj=proj,
                                    tail_third_plus=tail))
    return out


def length_decomposition_check(grid: FieldGrid, u: float, q_max: int, *,
                               measured_length: float | None = None) -> float:
    """Residual of the expansion: measured length minus orders up to q_max."""
    if q_max > 8:
        raise ValueError("q_max must be <= 8")
    if measured_length is None:
        measured_length = level_curve_length(grid, u).length
    cache = _HermiteCache(grid)
    total = mean_boundary_length(grid.degree, u)
    for q in range(1, q_max + 1):
        terms = _component_terms(q)
        integrals = _component_integrals(grid, terms, cache)
        total += _projection_from_integrals(grid.degree, u, terms, integrals)
    return measured_length - total
