"""Bloch-oscillator lattice: Hamiltonian and geometry-to-ramp conversion.

All rates are in cm^-1 and all lengths in cm unless a field name says
otherwise. Waveguide spacing (um) and wavelength (nm) are converted on
ingestion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

UM_PER_CM = 1.0e4
NM_PER_CM = 1.0e7


@dataclass(frozen=True)
class LatticeSpec:
    num_sites: int
    coupling: float
    ramp: float = 0.0
    diag_offset: float = 0.0

    def __post_init__(self):
        if int(self.num_sites) != self.num_sites or self.num_sites < 2:
            raise ValidationError(f"num_sites must be an integer >= 2, got {self.num_sites}")
        if not self.coupling > 0:
            raise ValidationError(f"coupling must be > 0, got {self.coupling}")
        if not self.ramp >= 0:
            raise ValidationError(f"ramp must be >= 0, got {self.ramp}")
        if not math.isfinite(self.diag_offset):
            raise ValidationError(f"diag_offset must be finite, got {self.diag_offset}")


@dataclass(frozen=True)
class GeometrySpec:
    """Physical layout of a curved waveguide array.

    ``spacing`` is in micrometres, ``wavelength`` in nanometres,
    ``curvature_radius`` and ``device_length`` in centimetres.
    """

    effective_index: float
    spacing: float
    wavelength: float
    curvature_radius: float = math.inf
    device_length: float = 6.0

    def __post_init__(self):
        for name in ("effective_index", "spacing", "wavelength", "curvature_radius", "device_length"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(f"{name} must be > 0, got {value}")

    @property
    def omega(self) -> float:
        """Dimensionless 2*pi*n_eff*d/lambda."""
        d_cm = self.spacing / UM_PER_CM
        lam_cm = self.wavelength / NM_PER_CM
        return 2.0 * math.pi * self.effective_index * d_cm / lam_cm


def site_potential(num_sites: int, ramp: float) -> np.ndarray:
    """Ramp values (k - (N-1)/2) * B for k = 0..N-1."""
    return (np.arange(num_sites) - (num_sites - 1) / 2.0) * ramp


def build_hamiltonian(spec: LatticeSpec) -> np.ndarray:
    """Real symmetric tridiagonal coupling matrix of the ramped lattice."""
    n = spec.num_sites
    h = np.zeros((n, n))
    h[np.arange(n), np.arange(n)] = site_potential(n, spec.ramp) + spec.diag_offset
    off = np.arange(n - 1)
    h[off, off + 1] = spec.coupling
    h[off + 1, off] = spec.coupling
    return h


def tridiagonal_bands(spec: LatticeSpec) -> tuple[np.ndarray, np.ndarray]:
    """(diagonal, off-diagonal) of :func:`build_hamiltonian` without the dense matrix."""
    d = site_potential(spec.num_sites, spec.ramp) + spec.diag_offset
    e = np.full(spec.num_sites - 1, float(spec.coupling))
    return d, e


def bloch_period(ramp: float) -> float:
    if not ramp > 0:
        raise DomainError(f"no finite Bloch period for ramp {ramp}")
    return 2.0 * math.pi / ramp


def ramp_for_period(period: float) -> float:
    if not period > 0:
        raise DomainError(f"Bloch period must be > 0, got {period}")
    return 2.0 * math.pi / period


def ramp_from_curvature(geom: GeometrySpec) -> float:
    """B = Omega / R_C; straight guides (R_C = inf) give B = 0."""
    if not geom.curvature_radius > 0:
        raise DomainError(f"curvature radius must be > 0, got {geom.curvature_radius}")
    return geom.omega / geom.curvature_radius


def curvature_for_ramp(ramp: float, geom: GeometrySpec) -> float:
    if not ramp > 0:
        raise DomainError(f"ramp must be > 0 for a finite curvature radius, got {ramp}")
    return geom.omega / ramp


@dataclass(frozen=True)
class DesignRow:
    fraction: float
    bloch_period: float
    ramp: float
    curvature_radius: float


def curvature_for_fraction(fraction: float, geom: GeometrySpec) -> DesignRow:
    """Curvature needed so that ``device_length`` spans ``fraction`` of a Bloch period."""
    if not 0.0 < fraction <= 1.0:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    period = geom.device_length / fraction
    ramp = ramp_for_period(period)
    return DesignRow(fraction, period, ramp, curvature_for_ramp(ramp, geom))


def design_table(fractions, geom: GeometrySpec) -> list[DesignRow]:
    return [curvature_for_fraction(f, geom) for f in fractions]
