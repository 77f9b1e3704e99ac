"""Legendre polynomials, their derivatives, and normalized colatitude harmonics.

Everything downstream leans on this module: the covariance of a degree-l
Gaussian eigenfunction is P_l(cos d), grid synthesis needs the fully
normalized associated functions up to high degree, and the variance
asymptotics are controlled by truncated moment integrals of P_l, P_l' and
P_l'' over [C/l, pi/2].

Evaluation is by stable three-term recurrences throughout; the derivative
recurrences never divide by (1 - t^2), so endpoint values come out exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LegendreEval",
    "MomentIntegralTable",
    "QuadratureError",
    "legendre_p",
    "legendre_with_derivatives",
    "associated_legendre_normalized",
    "associated_legendre_row",
    "legendre_moment_integrals",
    "MOMENT_INTEGRAL_IDS",
]

_LN2 = math.log(2.0)
# rescale threshold for the scaled colatitude recurrence; leaves ~2^600 of
# headroom before the next check
_RESCALE_LIMIT = 2.0**400
_RESCALE_SHIFT = 512
_RESCALE_EVERY = 32


class QuadratureError(RuntimeError):
    """Raised when panel quadrature fails its self-consistency check."""


@dataclass(frozen=True)
class LegendreEval:
    """P_l, P_l' and P_l'' at a single argument t in [-1, 1]."""

    degree: int
    argument: float
    p: float
    dp: float
    ddp: float


@dataclass(frozen=True)
class MomentIntegralTable:
    """Normalized moment integrals of P_l and its derivatives on [cutoff/l, pi/2].

    Each entry carries its conventional prefactor (powers of 2/(l(l+1))), so
    the tabulated value is directly comparable with its expected large-l
    behaviour: the third-moment entries stay bounded, the leading
    fourth-moment entries decay like log(l)/l^2.
    """

    degree: int
    cutoff: float
    values: dict[str, float]

    def csv_rows(self) -> list[str]:
        rows = [f"{key},{self.degree},{self.cutoff!r},{self.values[key]!r}"
                for key in MOMENT_INTEGRAL_IDS]
        return rows

    @staticmethod
    def csv_header() -> str:
        return "id,ell,cutoff,value"


def _validate_argument(t: np.ndarray) -> None:
    if np.any(np.abs(t) > 1.0) or not np.all(np.isfinite(t)):
        raise ValueError("Legendre argument must lie in [-1, 1]")


def _p_dp_ddp(ell: int, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized P_l, P_l', P_l'' via coupled three-term recurrences.

    Uses P_l' = P_{l-2}' + (2l-1) P_{l-1} (and its derivative) so that no
    step divides by 1 - t^2; values at t = +-1 are the analytic limits.
    """
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    dp_prev = np.zeros_like(t)
    ddp_prev = np.zeros_like(t)
    if ell == 0:
        return p_prev, dp_prev, ddp_prev
    p = t.copy()
    dp = np.ones_like(t)
    ddp = np.zeros_like(t)
    for l in range(2, ell + 1):
        p_next = ((2 * l - 1) * t * p - (l - 1) * p_prev) / l
        dp_next = dp_prev + (2 * l - 1) * p
        ddp_next = ddp_prev + (2 * l - 1) * dp
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
        ddp_prev, ddp = ddp, ddp_next
    return p, dp, ddp


def legendre_p(ell: int, t):
    """Evaluate the Legendre polynomial P_l at t (scalar or array).

    Parameters
    ----------
    ell : int
        Degree, >= 0.
    t : float or array_like
        Argument(s) in [-1, 1].
    """
    if ell < 0:
        raise ValueError("degree must be non-negative")
    arr = np.asarray(t, dtype=float)
    _validate_argument(arr)
    p, _, _ = _p_dp_ddp(ell, arr)
    return float(p) if np.isscalar(t) or arr.ndim == 0 else p


def legendre_with_derivatives(ell: int, t: float) -> LegendreEval:
    """P_l, P_l', P_l'' at a single point, exact at the endpoints."""
    if ell < 0:
        raise ValueError("degree must be non-negative")
    arr = np.asarray(float(t))
    _validate_argument(arr)
    p, dp, ddp = _p_dp_ddp(ell, arr)
    return LegendreEval(ell, float(t), float(p), float(dp), float(ddp))


def _sectorial_seeds(m_max: int) -> np.ndarray:
    """Scaled sectorial values s_m = Ptilde_{mm} / sin(theta)^m (theta-free)."""
    s = np.empty(m_max + 1)
    s[0] = math.sqrt(1.0 / (4.0 * math.pi))
    for m in range(1, m_max + 1):
        s[m] = -s[m - 1] * math.sqrt((2 * m + 1) / (2.0 * m))
    return s


def _apply_sin_power(c: np.ndarray, m: int, log_u: np.ndarray,
                     shift: np.ndarray) -> np.ndarray:
    """Multiply scaled column values by sin^m(theta) * 2^shift, log-safely."""
    if m == 0 and not shift.any():
        return c.copy()
    expo = m * log_u + shift * _LN2
    out = np.empty_like(c)
    direct = expo > -700.0
    out[direct] = c[direct] * np.exp(expo[direct])
    tiny = ~direct
    if tiny.any():
        with np.errstate(divide="ignore"):
            lv = np.log(np.abs(c[tiny])) + expo[tiny]
        out[tiny] = np.where(lv < -745.0, 0.0, np.sign(c[tiny]) * np.exp(lv))
    return out


def _normalized_column(ell: int, m: int, x: np.ndarray, u: np.ndarray,
                       seed: float) -> tuple[np.ndarray, np.ndarray]:
    """Ptilde_{l,m} and Ptilde_{l-1,m} at cos(theta)=x for one order m.

    The recurrence runs on values with sin^m(theta) divided out and an
    extra power-of-two offset per point, so columns survive degrees past
    2048 without overflow even close to the poles.
    """
    with np.errstate(divide="ignore"):
        log_u = np.log(u)
    shift = np.zeros_like(x)
    prev = np.full_like(x, seed)
    if ell == m:
        return _apply_sin_power(prev, m, log_u, shift), np.zeros_like(x)
    curr = math.sqrt(2 * m + 3) * x * prev
    for l in range(m + 2, ell + 1):
        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
        b = math.sqrt(((2.0 * l + 1.0) * (l - 1.0 + m) * (l - 1.0 - m))
                      / ((2.0 * l - 3.0) * (l * l - m * m)))
        curr, prev = a * x * curr - b * prev, curr
        if l % _RESCALE_EVERY == 0:
            big = np.abs(curr) > _RESCALE_LIMIT
            if big.any():
                curr[big] *= 2.0**-_RESCALE_SHIFT
                prev[big] *= 2.0**-_RESCALE_SHIFT
                shift[big] += _RESCALE_SHIFT
    return (_apply_sin_power(curr, m, log_u, shift),
            _apply_sin_power(prev, m, log_u, shift))


def associated_legendre_normalized(ell: int, m: int, theta):
    """Colatitude part of the orthonormal spherical harmonic of degree ell, order m.

    Returns Ptilde_{lm}(cos theta) such that Ptilde_{lm}(cos theta) e^{i m phi}
    is L2-orthonormal on the sphere (Condon-Shortley sign included).

    Parameters
    ----------
    ell, m : int
        Degree and order, 0 <= m <= ell.
    theta : float or array_like
        Colatitude(s) in [0, pi].
    """
    if ell < 0 or m < 0 or m > ell:
        raise ValueError(f"invalid degree/order ({ell}, {m})")
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(arr < 0.0) or np.any(arr > math.pi) or not np.all(np.isfinite(arr)):
        raise ValueError("colatitude must lie in [0, pi]")
    seeds = _sectorial_seeds(m)
    vals, _ = _normalized_column(ell, m, np.cos(arr), np.sin(arr), seeds[m])
    return float(vals[0]) if np.isscalar(theta) or np.ndim(theta) == 0 else vals


def associated_legendre_row(ell: int, theta: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray]:
    """All orders of degree ell at the given colatitudes, with theta-derivatives.

    Returns (plm, dplm) of shape (ell + 1, len(theta)) where plm[m] is
    Ptilde_{lm}(cos theta) and dplm[m] its derivative in theta.  Colatitudes
    must avoid the poles (the derivative relation divides by sin theta).
    """
    theta = np.asarray(theta, dtype=float)
    x, u = np.cos(theta), np.sin(theta)
    if np.any(u <= 0.0):
        raise ValueError("colatitudes must exclude the poles")
    seeds = _sectorial_seeds(ell)
    plm = np.empty((ell + 1, theta.size))
    dplm = np.empty_like(plm)
    for m in range(ell + 1):
        curr, prev = _normalized_column(ell, m, x, u, seeds[m])
        plm[m] = curr
        if ell == m:
            f = 0.0
        else:
            f = math.sqrt((ell * ell - m * m) * (2.0 * ell + 1.0) / (2.0 * ell - 1.0))
        dplm[m] = (ell * x * curr - f * prev) / u
    return plm, dplm


# ---------------------------------------------------------------------------
# Truncated moment integrals
# ---------------------------------------------------------------------------

MOMENT_INTEGRAL_IDS = tuple(
    [f"m3_{i}" for i in range(1, 6)] + [f"m4_{i}" for i in range(1, 12)]
)


def _panel_nodes(a: float, b: float, n_panels: int, order: int
                 ) -> tuple[np.ndarray, np.ndarray]:
    nodes, wts = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes).ravel()
    w = (half[:, None] * wts).ravel()
    return x, w


def _moment_integrands(ell: int, theta: np.ndarray) -> np.ndarray:
    """Stack of the sixteen moment integrands (prefactors applied) at theta."""
    x = np.cos(theta)
    s = np.sin(theta)
    p, dp, ddp = _p_dp_ddp(ell, x)
    lam = float(ell * (ell + 1))
    ps = dp * s                      # P_l'(cos) sin
    d2 = p * x - ddp * s * s         # second colatitude-derivative combination
    r1 = 2.0 / lam
    r2 = r1 * r1
    rows = [
        0.5 * lam * p**3,
        p * ps**2,
        r1 * p * d2**2,
        r1 * (p * s) ** 2 * d2,
        r1 * p * dp**2,
        p**4,
        r1 * p**2 * ps**2,
        r2 * p**2 * d2**2,
        r2 * p * ps**2 * d2,
        r2 * dp**4 * s**4,
        r1 * r2 * ps**2 * d2**2,
        r2 * r2 * d2**4,
        r2 * p**2 * dp**2,
        r1 * r2 * ps**2 * dp**2,
        r2 * r2 * d2**2 * dp**2,
        r2 * r2 * dp**4,
    ]
    return np.vstack(rows) * s


def legendre_moment_integrals(ell: int, cutoff: float = 1.0,
                              lower: float | None = None,
                              rtol: float = 1e-9) -> MomentIntegralTable:
    """Integrate the sixteen normalized moment integrands over [cutoff/ell, pi/2].

    The integrands oscillate at frequency ~ell, so fixed-order Gauss panels
    no wider than pi/(4 ell) are used, with one Richardson refinement; the
    two resolutions must agree to `rtol` or a QuadratureError is raised.

    Parameters
    ----------
    ell : int
        Degree, >= 2.
    cutoff : float
        The constant C in the lower limit C/ell (the limit itself can be
        overridden via `lower`, e.g. 0 to integrate from the pole).
    """
    if ell < 2:
        raise ValueError("moment integrals need degree >= 2")
    a = cutoff / ell if lower is None else lower
    b = 0.5 * math.pi
    if not 0.0 <= a < b:
        raise ValueError("lower limit must lie in [0, pi/2)")
    width = math.pi / (4.0 * ell)
    n_panels = max(4, math.ceil((b - a) / width))
    results = []
    for n in (n_panels, 2 * n_panels):
        x, w = _panel_nodes(a, b, n, order=12)
        results.append(_moment_integrands(ell, x) @ w)
    coarse, fine = results
    err = np.abs(fine - coarse)
    scale = 1.0 + np.abs(fine)
    if np.any(err > rtol * scale):
        worst = int(np.argmax(err / scale))
        raise QuadratureError(
            f"panel quadrature did not converge for {MOMENT_INTEGRAL_IDS[worst]} "
            f"at ell={ell}: panel discrepancy {err[worst]:.3e}")
    # one Richardson step; 12-point panels make the correction negligible
    refined = fine + (fine - coarse) / (2.0**24 - 1.0)
    values = dict(zip(MOMENT_INTEGRAL_IDS, map(float, refined)))
    return MomentIntegralTable(degree=ell, cutoff=cutoff, values=values)
