"""Gaussian random spherical harmonics on a quadrature grid.

A degree-l eigenfunction is synthesized as

    f(x) = sqrt(4 pi / (2 l + 1)) * sum_m a_m Y_lm(x),

with a_0 real standard normal and a_m (m > 0) standard complex normals;
the implied negative orders follow the conjugation rule that keeps f real.
The field has unit pointwise variance and covariance P_l(cos d(x, y)).

Grids pair Gauss-Legendre colatitudes (k (l + 1) nodes in cos theta) with
k (2 l + 1) equispaced longitudes.  With the default oversampling k = 2 the
quadrature rule integrates products of up to four field/gradient factors
exactly, which downstream chaos projections rely on.  Gradients are returned
in normalized form (unit pointwise variance per component).

Replication streams use the counter-based Philox generator keyed by
(master seed, degree, replication index): fields at different degrees or
replications are mutually independent and reproducible in any order.
"""

from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HarmonicCoefficients",
    "SpectrumSample",
    "FieldGrid",
    "replication_rng",
    "sample_coefficients",
    "zonal_coefficients",
    "synthesize",
    "sample_power_spectrum",
]

_MASK64 = (1 << 64) - 1


def replication_rng(master_seed: int, ell: int, rep: int) -> np.random.Generator:
    """Independent, reproducible stream for one (degree, replication) cell.

    Philox is counter-based, so streams for distinct keys never collide and
    replications can run in any order or in parallel.
    """
    key = np.array([master_seed & _MASK64, ((ell << 32) ^ rep) & _MASK64],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class HarmonicCoefficients:
    """Random coefficients of a degree-l eigenfunction.

    Only orders m >= 0 are stored; the m < 0 coefficients are implied by
    conjugation (a_{-m} = (-1)^m conj(a_m)), which keeps the field real.
    """

    degree: int
    a0: float
    am: np.ndarray  # complex orders 1..degree
    seed: int = 0

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.am.shape != (self.degree,):
            raise ValueError("need exactly `degree` positive-order coefficients")


@dataclass(frozen=True)
class SpectrumSample:
    """Sample power spectrum of one realization: c_hat = mean |a_m|^2."""

    degree: int
    c_hat: float
    l2_norm_sq: float


@dataclass(frozen=True)
class FieldGrid:
    """One realization sampled on a colatitude x longitude quadrature grid.

    `weights` are per-colatitude and already include the longitude measure:
    sum_ij weights[i] * g[i, j] approximates the sphere integral of g.
    grad1 and grad2 are the normalized colatitude and longitude derivatives
    (each has unit pointwise variance under the field law).
    """

    degree: int
    thetas: np.ndarray
    phis: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    grad1: np.ndarray
    grad2: np.ndarray
    coefficients: HarmonicCoefficients = field(repr=False, compare=False, default=None)

    @property
    def eigenvalue(self) -> float:
        return float(self.degree * (self.degree + 1))

    def integrate(self, g: np.ndarray) -> float:
        """Quadrature of a grid function over the sphere."""
        return float(np.einsum("i,ij->", self.weights, g))

    def dump(self, path) -> None:
        """Flat little-endian binary layout for cross-language inspection.

        Header: degree, n_theta, n_phi as int64; then weights, values,
        grad1, grad2 as float64, row-major by colatitude.
        """
        with open(path, "wb") as fh:
            fh.write(struct.pack("<3q", self.degree, self.thetas.size,
                                 self.phis.size))
            for block in (self.weights, self.values, self.grad1, self.grad2):
                fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())

    @staticmethod
    def load(path) -> "FieldGrid":
        with open(path, "rb") as fh:
            ell, nth, nph = struct.unpack("<3q", fh.read(24))
            raw = np.frombuffer(fh.read(), dtype="<f8")
        expected = nth + 3 * nth * nph
        if raw.size != expected:
            raise ValueError(f"corrupt field dump: {raw.size} != {expected} floats")
        weights = raw[:nth].copy()
        blocks = raw[nth:].reshape(3, nth, nph).copy()
        geom = _grid_geometry(ell, _infer_factor(ell, nth))
        return FieldGrid(ell, geom[0], geom[1], weights,
                         blocks[0], blocks[1], blocks[2])


def _infer_factor(ell: int, nth: int) -> int:
    k = nth // (ell + 1)
    if k * (ell + 1) != nth:
        raise ValueError("node count is not a multiple of degree + 1")
    return k


def sample_coefficients(ell: int, rng: np.random.Generator,
                        seed: int = 0) -> HarmonicCoefficients:
    """Draw one coefficient vector: a0 ~ N(0,1), Re/Im of a_m ~ N(0, 1/2)."""
    a0 = float(rng.standard_normal())
    re = rng.standard_normal(ell)
    im = rng.standard_normal(ell)
    am = (re + 1j * im) * math.sqrt(0.5)
    return HarmonicCoefficients(degree=ell, a0=a0, am=am, seed=seed)


def zonal_coefficients(ell: int) -> HarmonicCoefficients:
    """Deterministic coefficients giving f(theta, phi) = P_l(cos theta)."""
    return HarmonicCoefficients(degree=ell, a0=1.0,
                                am=np.zeros(ell, dtype=complex))


def sample_power_spectrum(coeffs: HarmonicCoefficients) -> SpectrumSample:
    """c_hat = (2l+1)^{-1} sum_m |a_m|^2 and the squared L2 norm 4 pi c_hat."""
    ell = coeffs.degree
    total = coeffs.a0**2 + 2.0 * float(np.sum(np.abs(coeffs.am) ** 2))
    c_hat = total / (2 * ell + 1)
    return SpectrumSample(degree=ell, c_hat=c_hat,
                          l2_norm_sq=4.0 * math.pi * c_hat)


@functools.lru_cache(maxsize=16)
def _grid_geometry(ell: int, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Colatitudes (ascending), longitudes, and per-row quadrature weights."""
    n_theta = k * (ell + 1)
    n_phi = k * (2 * ell + 1)
    x, w = np.polynomial.legendre.leggauss(n_theta)
    order = np.argsort(-x)  # descending x = ascending theta
    thetas = np.arccos(x[order])
    weights = w[order] * (2.0 * math.pi / n_phi)
    phis = np.arange(n_phi) * (2.0 * math.pi / n_phi)
    thetas.setflags(write=False)
    phis.setflags(write=False)
    weights.setflags(write=False)
    return thetas, phis, weights


@functools.lru_cache(maxsize=8)
def _synthesis_plan(ell: int, k: int):
    """Per-(degree, oversampling) tables reused across replications."""
    from .legendre import associated_legendre_row

    thetas, phis, weights = _grid_geometry(ell, k)
    plm, dplm = associated_legendre_row(ell, thetas)
    m = np.arange(ell + 1)
    mplm_over_sin = (m[:, None] * plm) / np.sin(thetas)[None, :]
    cosm = np.cos(np.outer(m, phis))
    sinm = np.sin(np.outer(m, phis))
    for arr in (plm, dplm, mplm_over_sin, cosm, sinm):
        arr.setflags(write=False)
    return thetas, phis, weights, plm, dplm, mplm_over_sin, cosm, sinm


def _cosine_sine_amplitudes(coeffs: HarmonicCoefficients
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Fold conjugate-symmetric orders into real cos/sin amplitudes."""
    ell = coeffs.degree
    norm = math.sqrt(4.0 * math.pi / (2 * ell + 1))
    a = np.empty(ell + 1)
    b = np.zeros(ell + 1)
    a[0] = norm * coeffs.a0
    a[1:] = 2.0 * norm * coeffs.am.real
    b[1:] = -2.0 * norm * coeffs.am.imag
    return a, b


def synthesize(coeffs: HarmonicCoefficients, grid_factor: int = 2, *,
               use_fft: bool = False, phi_origin: float = 0.0) -> FieldGrid:
    """Evaluate the field and its normalized gradient on the quadrature grid.

    Parameters
    ----------
    coeffs : HarmonicCoefficients
        Coefficient vector of the realization.
    grid_factor : int
        Oversampling k >= 2: k(l+1) colatitudes by k(2l+1) longitudes.
    use_fft : bool
        Evaluate the longitude sums by inverse FFT instead of dense
        trigonometric matrices; identical output contract.
    phi_origin : float
        Rotate the longitude origin (the field law is isotropic, so this
        only relabels the grid; useful for invariance checks).

    Notes
    -----
    grad1 = (lambda_l/2)^{-1/2} d f / d theta and
    grad2 = (lambda_l/2)^{-1/2} (sin theta)^{-1} d f / d phi.  Gauss nodes
    exclude the poles, so the 1/sin theta factor is always finite.
    """
    if grid_factor < 2:
        raise ValueError("grid oversampling factor must be >= 2")
    ell = coeffs.degree
    thetas, phis, weights, plm, dplm, mplm_over_sin, cosm, sinm = \
        _synthesis_plan(ell, grid_factor)
    a, b = _cosine_sine_amplitudes(coeffs)
    if phi_origin != 0.0:
        m = np.arange(ell + 1)
        ca, sa = np.cos(m * phi_origin), np.sin(m * phi_origin)
        a, b = a * ca + b * sa, -a * sa + b * ca
    inv_scale = 1.0 / math.sqrt(ell * (ell + 1) / 2.0)

    if use_fft:
        n_phi = phis.size
        def expand(amps_cos, amps_sin, table):
            bins = np.zeros((table.shape[1], n_phi // 2 + 1), dtype=complex)
            bins[:, :ell + 1] = 0.5 * n_phi * (table
                                               * (amps_cos - 1j * amps_sin)[:, None]).T
            bins[:, 0] *= 2.0
            return np.fft.irfft(bins, n=n_phi, axis=1)
        values = expand(a, b, plm)
        grad1 = inv_scale * expand(a, b, dplm)
        grad2 = inv_scale * expand(b, -a, mplm_over_sin)
    else:
        values = (plm * a[:, None]).T @ cosm + (plm * b[:, None]).T @ sinm
        grad1 = inv_scale * ((dplm * a[:, None]).T @ cosm
                             + (dplm * b[:, None]).T @ sinm)
        grad2 = inv_scale * ((mplm_over_sin * b[:, None]).T @ cosm
                             - (mplm_over_sin * a[:, None]).T @ sinm)
    if phi_origin != 0.0:
        phis = phis + phi_origin
    return FieldGrid(degree=ell, thetas=thetas, phis=phis, weights=weights,
                     values=values, grad1=grad1, grad2=grad2,
                     coefficients=coeffs)
