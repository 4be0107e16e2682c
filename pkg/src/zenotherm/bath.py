"""Bath coupling spectra and their discretization into finite mode sets.

Units: hbar = 1 and frequencies are measured in units of the TLS splitting.
The strength ``gamma`` is normalised so that the untruncated Lorentzian
integrates to ``gamma**2``; the truncated spectrum therefore carries slightly
less weight.  ``beta = math.inf`` is the zero-temperature sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

INF = math.inf

_SHAPES = ("lorentzian", "gaussian")


@dataclass(frozen=True)
class SpectralDensity:
    """Zero-temperature coupling spectrum G_0(omega).

    The parametric peak (Lorentzian half-width or Gaussian standard deviation
    ``width``) is hard-truncated outside ``omega_min < omega <= omega_max``.
    ``omega_min`` defaults to the origin; finite-temperature use needs either a
    positive ``omega_min`` or a shape that is negligible at the origin, since
    G_0(0+) > 0 makes the thermal spectrum diverge like 1/|omega|.
    """

    shape: str = "lorentzian"
    omega0: float = 1.0
    width: float = 0.1
    strength: float = 0.07
    omega_min: float = 0.0
    omega_max: float = INF

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"shape must be one of {_SHAPES}, got {self.shape!r}")
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.strength < 0:
            raise ValueError("strength must be non-negative")
        if self.omega_min < 0 or not self.omega_max > self.omega_min:
            raise ValueError("need 0 <= omega_min < omega_max")

    @classmethod
    def from_correlation_time(cls, t_c: float, **kw) -> "SpectralDensity":
        return cls(width=1.0 / t_c, **kw)

    @property
    def support(self) -> tuple[float, float]:
        return self.omega_min, self.omega_max

    def peak_value(self) -> float:
        return float(eval_g0(self, self.omega0)) if self.omega_min < self.omega0 <= self.omega_max else 0.0

    def __call__(self, omega):
        return eval_g0(self, omega)


def _shape_values(sd: SpectralDensity, omega):
    g2 = sd.strength ** 2
    x = omega - sd.omega0
    if sd.shape == "lorentzian":
        return (g2 / math.pi) * sd.width / (x * x + sd.width ** 2)
    return g2 / (math.sqrt(2.0 * math.pi) * sd.width) * np.exp(-0.5 * (x / sd.width) ** 2)


def eval_g0(sd: SpectralDensity, omega):
    """G_0(omega); exactly zero outside the support (in particular omega <= 0)."""
    w = np.asarray(omega, dtype=float)
    inside = (w > sd.omega_min) & (w <= sd.omega_max)
    out = np.where(inside, _shape_values(sd, np.where(inside, w, sd.omega0)), 0.0)
    return float(out) if np.ndim(omega) == 0 else out


def bose_occupation(omega, beta: float):
    """n_T(omega) = 1/(exp(beta*omega) - 1) for omega > 0; 0 at beta = inf."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("bose_occupation needs omega > 0")
    if beta == INF:
        out = np.zeros_like(w)
    elif beta > 0:
        out = 1.0 / np.expm1(beta * w)
    else:
        raise ValueError("beta must be positive or math.inf")
    return float(out) if np.ndim(omega) == 0 else out


@dataclass(frozen=True)
class ThermalSpectrum:
    """Temperature-dressed spectrum G_T for a bath at inverse temperature beta."""

    base: SpectralDensity
    beta: float = INF

    def __post_init__(self):
        if not (self.beta == INF or self.beta > 0):
            raise ValueError("beta must be positive or math.inf")
        if self.beta != INF and self.base.omega_min == 0.0:
            edge = float(eval_g0(self.base, 1e-12 * max(self.base.omega0, 1.0)))
            peak = self.base.peak_value()
            if edge > 1e-14 * max(peak, 1e-300):
                raise ValueError(
                    "G_0 does not vanish at omega -> 0+, so G_T is not integrable "
                    "at finite temperature; set omega_min > 0"
                )

    @property
    def alpha(self) -> float:
        """Dimensionless temperature 1/beta (omega_a = 1 units)."""
        return 0.0 if self.beta == INF else 1.0 / self.beta

    def support_intervals(self) -> list[tuple[float, float]]:
        lo, hi = self.base.support
        parts = [(lo, hi)]
        if self.beta != INF:
            parts.insert(0, (-hi, -lo))
        return parts

    def __call__(self, omega):
        return eval_gt(self, omega)


def eval_gt(ts: ThermalSpectrum, omega):
    """G_T(w) = (n(w)+1) G_0(w) + n(-w) G_0(-w), each term only where G_0's argument is > 0."""
    w = np.asarray(omega, dtype=float)
    pos = w > 0
    neg = w < 0
    out = np.zeros_like(w)
    sd = ts.base
    if np.any(pos):
        wp = w[pos]
        g = eval_g0(sd, wp)
        n = 0.0 if ts.beta == INF else 1.0 / np.expm1(ts.beta * wp)
        out[pos] = (n + 1.0) * g
    if np.any(neg) and ts.beta != INF:
        wn = -w[neg]
        g = eval_g0(sd, wn)
        # n(-w) G_0(-w) with the Bose factor written as exp(-b w)/(1-exp(-b w)) to stay finite
        out[neg] = g / np.expm1(ts.beta * wn)
    return float(out) if np.ndim(omega) == 0 else out


@dataclass(frozen=True)
class DiscreteBath:
    """Finite set of bath modes sampled from a spectrum on a uniform grid."""

    omegas: np.ndarray
    kappas: np.ndarray
    d_omega: float = 0.0
    omega_range: tuple[float, float] = (0.0, 0.0)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        ka = np.asarray(self.kappas, dtype=float)
        if om.ndim != 1 or om.shape != ka.shape:
            raise ValueError("omegas and kappas must be 1-d arrays of equal length")
        if np.any(om <= 0):
            raise ValueError("mode frequencies must be positive")
        if np.any(ka < 0):
            raise ValueError("couplings are taken real and non-negative")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "kappas", ka)

    @property
    def n_modes(self) -> int:
        return len(self.omegas)

    def total_weight(self) -> float:
        return float(np.sum(self.kappas ** 2))

    def thermal_weight(self, beta: float) -> float:
        """Discrete analogue of the Zeno slope: sum kappa^2 (2 n + 1)."""
        n = bose_occupation(self.omegas, beta)
        return float(np.sum(self.kappas ** 2 * (2.0 * n + 1.0)))


def discretize(sd: SpectralDensity, n_modes: int, omega_min: float, omega_max: float,
               rule: str = "midpoint") -> DiscreteBath:
    """Sample G_0 on ``n_modes`` points with kappa^2 = G_0(omega) * weight.

    ``rule="midpoint"`` is a uniform grid (cell centres, weight = d_omega);
    ``rule="gauss"`` uses Gauss-Legendre nodes and weights on the same range.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if not (0 < omega_min < omega_max):
        raise ValueError("need 0 < omega_min < omega_max")
    span = omega_max - omega_min
    if rule == "midpoint":
        dw = span / n_modes
        omegas = omega_min + (np.arange(n_modes) + 0.5) * dw
        weights = np.full(n_modes, dw)
    elif rule == "gauss":
        x, wts = np.polynomial.legendre.leggauss(n_modes)
        omegas = omega_min + 0.5 * span * (x + 1.0)
        weights = 0.5 * span * wts
        dw = span / n_modes
    else:
        raise ValueError(f"unknown rule {rule!r}")
    kappas = np.sqrt(eval_g0(sd, omegas) * weights)
    return DiscreteBath(omegas, kappas, d_omega=dw, omega_range=(omega_min, omega_max),
                        meta={"n_modes": n_modes, "rule": rule})


def gibbs_excited(beta: float, omega_a: float = 1.0) -> float:
    """Excited-state population of a TLS in thermal equilibrium."""
    if beta == INF:
        return 0.0
    return 1.0 / (math.exp(beta * omega_a) + 1.0)


def beta_from_alpha(alpha: float, omega_a: float = 1.0) -> float:
    """alpha = 1/(beta * omega_a); alpha = 0 maps to the zero-temperature sentinel."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return INF if alpha == 0 else 1.0 / (alpha * omega_a)
