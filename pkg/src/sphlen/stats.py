"""Correlation, partial correlation, and Monte Carlo summaries.

Sample versions of the estimands used in the correlation study: Pearson
correlation, the partial correlation after linearly regressing both
variables on an explanatory variable, the regression residual itself, and
moment summaries with standard errors.  Population moments are replaced by
sample moments throughout; correlation standard errors come from the
Fisher z-transform.

Degenerate inputs (zero variances, residuals that vanish identically)
raise rather than returning NaN: they signal a mis-specified experiment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateSampleError",
    "CorrelationReport",
    "correlation",
    "correlation_se",
    "partial_correlation",
    "regression_residual",
    "standardize",
    "mc_summary",
]


class DegenerateSampleError(ValueError):
    """A sample has zero variance where a positive one is required."""


def _as_vector(x, name: str, n_min: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size < n_min:
        raise ValueError(f"{name} needs at least {n_min} samples")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def correlation(xs, ys) -> float:
    """Pearson correlation coefficient of two equal-length samples."""
    x = _as_vector(xs, "xs", 3)
    y = _as_vector(ys, "ys", 3)
    if x.size != y.size:
        raise ValueError("samples must have equal length")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(xc @ xc)
    vy = float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise DegenerateSampleError("zero variance in correlation input")
    rho = float(xc @ yc) / math.sqrt(vx * vy)
    return min(1.0, max(-1.0, rho))


def correlation_se(rho: float, n: int) -> float:
    """Delta-method standard error of a correlation via the Fisher transform."""
    if n <= 3:
        raise ValueError("need more than 3 samples for a standard error")
    return (1.0 - rho * rho) / math.sqrt(n - 3)


def regression_residual(ws, zs) -> np.ndarray:
    """Residual of w after simple linear regression on z.

    (w - mean w) - Cov(w, z)/Var(z) * (z - mean z); exactly uncorrelated
    with z by the normal equations.
    """
    w = _as_vector(ws, "ws", 2)
    z = _as_vector(zs, "zs", 2)
    if w.size != z.size:
        raise ValueError("samples must have equal length")
    zc = z - z.mean()
    vz = float(zc @ zc)
    if vz == 0.0:
        raise DegenerateSampleError("explanatory variable has zero variance")
    wc = w - w.mean()
    return wc - (float(wc @ zc) / vz) * zc


def partial_correlation(xs, ys, zs) -> float:
    """Correlation of x and y after removing their linear dependence on z."""
    x = _as_vector(xs, "xs", 4)
    y = _as_vector(ys, "ys", 4)
    z = _as_vector(zs, "zs", 4)
    if not x.size == y.size == z.size:
        raise ValueError("samples must have equal length")
    rx = regression_residual(x, z)
    ry = regression_residual(y, z)
    # affine dependence on z leaves only rounding noise in the residual
    for res, raw in ((rx, x), (ry, y)):
        scale = float(np.var(raw)) + float(np.mean(raw)) ** 2
        if float(res @ res) <= 1e-24 * res.size * scale:
            raise DegenerateSampleError(
                "a residual vanishes: variable is affine in the explanatory one")
    return correlation(rx, ry)


def standardize(xs) -> np.ndarray:
    """Center and scale to unit sample variance (unbiased normalization)."""
    x = _as_vector(xs, "xs", 2)
    sd = x.std(ddof=1)
    if sd == 0.0:
        raise DegenerateSampleError("cannot standardize a constant sample")
    return (x - x.mean()) / sd


def mc_summary(samples) -> tuple[float, float, float, float]:
    """(mean, variance, se_mean, se_variance) of a Monte Carlo sample.

    Variance is the unbiased estimator; its standard error uses the
    fourth-moment formula Var(s^2) = m4/n - s^4 (n-3)/(n (n-1)).
    """
    x = _as_vector(samples, "samples", 2)
    n = x.size
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    se_mean = math.sqrt(var / n)
    m4 = float(np.mean((x - mean) ** 4))
    var_of_var = m4 / n - var * var * (n - 3) / (n * (n - 1.0))
    se_var = math.sqrt(max(0.0, var_of_var))
    return mean, var, se_mean, se_var


@dataclass(frozen=True)
class CorrelationReport:
    """Per-degree correlation study: plain and norm-adjusted, with errors.

    `pairs` holds one entry per unordered level pair:
    (u1, u2, rho, rho_partial, n, se_rho).  `residual_variances` maps each
    level to the variance of the length residual after regression on the
    sample power spectrum.
    """

    ell: int
    pairs: list[tuple[float, float, float, float, int, float]]
    residual_variances: dict[float, float]

    def csv_rows(self) -> list[str]:
        return [f"{self.ell},{u1!r},{u2!r},{rho!r},{rhop!r},{n},{se!r}"
                for (u1, u2, rho, rhop, n, se) in self.pairs]

    @staticmethod
    def csv_header() -> str:
        return "ell,u1,u2,rho,rho_partial,n,se_rho"

    def to_json_dict(self) -> dict:
        return {
            "ell": self.ell,
            "pairs": [
                {"u1": u1, "u2": u2, "rho": rho, "rho_partial": rhop,
                 "n": n, "se_rho": se}
                for (u1, u2, rho, rhop, n, se) in self.pairs
            ],
            "residual_variances": {repr(u): v
                                   for u, v in self.residual_variances.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)
